//! Weighted grid graph operators and unweighted topology metrics.
//!
//! The weighted graph uses `w_ij = Σ 1/(x·tap)` over the in-service branches
//! between `i` and `j`, so the Laplacian equals the DC susceptance matrix
//! (resistance, charging, phase shift and shunts are not part of the DC
//! operator). The unweighted graph keeps the same vertices and edges and is
//! used for hop distances and closeness.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::case::{validate, BusIndex, GridCase};
use crate::error::GraphError;

/// Condition number above which the reduced susceptance matrix is treated
/// as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct GridGraph {
    pub n: usize,
    pub laplacian: DMatrix<f64>,
    /// DC susceptance matrix; equal to `laplacian`.
    pub susceptance: DMatrix<f64>,
    pub slack_index: usize,
    /// Neighbor lists of the unweighted graph, sorted.
    pub adjacency: Vec<Vec<usize>>,
    /// One entry per connected bus pair with `i < j`.
    pub weights: Vec<Edge>,
    pub index: BusIndex,
    /// Case angle of the slack bus, radians.
    pub reference_angle: f64,
}

/// Zero-padded inverse of the slack-reduced susceptance matrix.
#[derive(Debug, Clone)]
pub struct BetaMatrix {
    pub beta: DMatrix<f64>,
    pub slack_index: usize,
}

impl BetaMatrix {
    /// Column `u` of the inverse, i.e. the angle response to a unit injection at `u`.
    pub fn column(&self, u: usize) -> DVector<f64> {
        self.beta.column(u).into_owned()
    }

    pub fn apply(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.beta * p
    }
}

impl GridGraph {
    pub fn index_of(&self, bus: i64) -> Result<usize, GraphError> {
        self.index.try_index_of(bus)
    }

    pub fn bus_id(&self, index: usize) -> i64 {
        self.index.id_of(index)
    }

    /// Laplacian applied to a vector.
    pub fn apply_laplacian(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.laplacian * x
    }

    /// The slack-reduced susceptance matrix (slack row and column deleted).
    pub fn reduced_susceptance(&self) -> DMatrix<f64> {
        self.susceptance
            .clone()
            .remove_row(self.slack_index)
            .remove_column(self.slack_index)
    }
}

pub fn build_graph(case: &GridCase) -> Result<GridGraph, GraphError> {
    let index = case.bus_index();
    let n = index.len();
    let slack_id = case.slack_id().ok_or(GraphError::NoSlack)?;
    let slack_index = index.try_index_of(slack_id)?;

    let mut pair_weights: HashMap<(usize, usize), f64> = HashMap::new();
    for br in case.in_service_branches() {
        if br.x == 0.0 {
            return Err(GraphError::ZeroReactance {
                from: br.from_bus,
                to: br.to_bus,
            });
        }
        let i = index.try_index_of(br.from_bus)?;
        let j = index.try_index_of(br.to_bus)?;
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        *pair_weights.entry(key).or_insert(0.0) += 1.0 / (br.x * br.tap);
    }

    let sizes = validate::component_sizes(case);
    if sizes.len() > 1 {
        return Err(GraphError::Disconnected { component_sizes: sizes });
    }

    let mut weights: Vec<Edge> = pair_weights
        .into_iter()
        .map(|((i, j), weight)| Edge { i, j, weight })
        .collect();
    weights.sort_by_key(|e| (e.i, e.j));

    let mut laplacian = DMatrix::zeros(n, n);
    let mut adjacency = vec![Vec::new(); n];
    for e in &weights {
        laplacian[(e.i, e.i)] += e.weight;
        laplacian[(e.j, e.j)] += e.weight;
        laplacian[(e.i, e.j)] -= e.weight;
        laplacian[(e.j, e.i)] -= e.weight;
        adjacency[e.i].push(e.j);
        adjacency[e.j].push(e.i);
    }
    for nbrs in &mut adjacency {
        nbrs.sort_unstable();
    }

    Ok(GridGraph {
        n,
        susceptance: laplacian.clone(),
        laplacian,
        slack_index,
        adjacency,
        weights,
        index,
        reference_angle: case.reference_angle(),
    })
}

fn norm_1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts the slack-reduced susceptance matrix by LU and re-embeds it with a
/// zero row and column at the slack.
pub fn reduced_susceptance_inverse(graph: &GridGraph) -> Result<BetaMatrix, GraphError> {
    let reduced = graph.reduced_susceptance();
    let inv = reduced
        .clone()
        .lu()
        .try_inverse()
        .ok_or(GraphError::Singular { condition: f64::INFINITY })?;
    let condition = norm_1(&reduced) * norm_1(&inv);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(GraphError::Singular { condition });
    }

    let s = graph.slack_index;
    let beta = inv.insert_row(s, 0.0).insert_column(s, 0.0);
    Ok(BetaMatrix {
        beta,
        slack_index: s,
    })
}

/// Breadth-first hop distances from `u` on the unweighted graph.
pub fn hop_distances(graph: &GridGraph, u: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.n];
    dist[u] = 0;
    let mut queue = VecDeque::from([u]);
    while let Some(v) = queue.pop_front() {
        for &w in &graph.adjacency[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn eccentricity(graph: &GridGraph, u: usize) -> usize {
    hop_distances(graph, u).into_iter().max().unwrap_or(0)
}

/// Modified normalized closeness `N / Σ_i D(n, i)`, the zero self-distance
/// included in the sum.
pub fn closeness_modified(graph: &GridGraph, n: usize) -> f64 {
    let total: usize = hop_distances(graph, n).iter().sum();
    graph.n as f64 / total as f64
}

/// Upper estimate of the largest Laplacian eigenvalue.
///
/// Power iteration (the Laplacian is positive semidefinite, so the dominant
/// eigenvalue is the largest). The returned value is the Rayleigh quotient
/// plus the residual norm, capped by the Gershgorin bound.
pub fn spectral_bound(graph: &GridGraph) -> f64 {
    let n = graph.n;
    if n == 0 {
        return 0.0;
    }
    let l = &graph.laplacian;
    let gershgorin = (0..n)
        .map(|i| l.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if gershgorin == 0.0 {
        return 0.0;
    }

    // deterministic start with irregular entries so it is not orthogonal to
    // the dominant eigenvector by symmetry
    let mut v = DVector::from_fn(n, |i, _| ((i as f64 + 1.0) * 0.618_033_988_75).fract() - 0.5 + 1e-3 * i as f64);
    v /= v.norm();

    let mut estimate = gershgorin;
    for _ in 0..200_000 {
        let w = l * &v;
        let rayleigh = v.dot(&w);
        let residual = (&w - &v * rayleigh).norm();
        estimate = (rayleigh + residual).min(gershgorin);
        if residual <= 1e-9 * rayleigh.abs().max(1e-300) {
            break;
        }
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        v = w / norm;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::fixtures::path3;
    use approx::assert_abs_diff_eq;

    #[test]
    fn path3_laplacian() {
        let g = build_graph(&path3()).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(g.laplacian, expected);
        assert_eq!(g.susceptance, expected);
        assert_eq!(g.adjacency, vec![vec![1], vec![0, 2], vec![1]]);
    }

    #[test]
    fn parallel_branches_add_their_weights() {
        let mut case = path3();
        case.branches[1] = case.branches[0].clone();
        case.branches[0].x = 0.5;
        case.branches[1].x = 0.5;
        case.branches.push(crate::case::Branch {
            from_bus: 2,
            to_bus: 3,
            ..case.branches[0].clone()
        });
        let g = build_graph(&case).unwrap();
        assert_eq!(g.weights[0], Edge { i: 0, j: 1, weight: 4.0 });
        assert_eq!(g.adjacency[0], vec![1]);
    }

    #[test]
    fn tap_scales_the_weight() {
        let mut case = path3();
        case.branches[0].tap = 2.0;
        let g = build_graph(&case).unwrap();
        assert_eq!(g.weights[0].weight, 0.5);
    }

    #[test]
    fn path3_beta_by_hand() {
        let g = build_graph(&path3()).unwrap();
        let beta = reduced_susceptance_inverse(&g).unwrap().beta;
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 2.0]);
        assert_abs_diff_eq!(beta, expected, epsilon = 1e-12);
    }

    #[test]
    fn disconnected_case_is_rejected() {
        let mut case = path3();
        case.branches[1].status = crate::case::Status::Out;
        assert!(matches!(
            build_graph(&case),
            Err(GraphError::Disconnected { component_sizes }) if component_sizes == vec![2, 1]
        ));
    }

    #[test]
    fn near_singular_reduction_is_reported() {
        let mut case = path3();
        case.branches[1].x = 1e16;
        let g = build_graph(&case).unwrap();
        assert!(matches!(reduced_susceptance_inverse(&g), Err(GraphError::Singular { .. })));
    }

    #[test]
    fn path3_hops_and_eccentricity() {
        let g = build_graph(&path3()).unwrap();
        assert_eq!(hop_distances(&g, 2), vec![2, 1, 0]);
        assert_eq!(hop_distances(&g, 1), vec![1, 0, 1]);
        assert_eq!(eccentricity(&g, 2), 2);
        assert_eq!(eccentricity(&g, 1), 1);
    }

    #[test]
    fn closeness_by_hand() {
        let g = build_graph(&path3()).unwrap();
        assert_abs_diff_eq!(closeness_modified(&g, 2), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(closeness_modified(&g, 1), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn closeness_on_complete_graph() {
        let mut case = path3();
        case.buses.push(crate::case::Bus { id: 4, ..case.buses[1].clone() });
        let template = case.branches[0].clone();
        case.branches = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
            .into_iter()
            .map(|(f, t)| crate::case::Branch { from_bus: f, to_bus: t, ..template.clone() })
            .collect();
        let g = build_graph(&case).unwrap();
        for n in 0..4 {
            assert_abs_diff_eq!(closeness_modified(&g, n), 4.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn spectral_bound_small_graphs() {
        let g = build_graph(&path3()).unwrap();
        assert_abs_diff_eq!(spectral_bound(&g), 3.0, epsilon = 3e-6);

        let mut k2 = path3();
        k2.buses.truncate(2);
        k2.branches.truncate(1);
        let g = build_graph(&k2).unwrap();
        assert_abs_diff_eq!(spectral_bound(&g), 2.0, epsilon = 2e-6);
    }
}
