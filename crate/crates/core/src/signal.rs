use nalgebra::DVector;

use crate::error::{AnalysisError, Result};
use crate::graph::GridGraph;

/// Values with magnitude below this are treated as zero by the local
/// smoothness kernel.
pub const ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Radian,
    Degree,
    PuPower,
    Mw,
    RadPerPu,
    DegPerMw,
    Dimensionless,
}

/// One real value per bus, in internal bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    pub values: DVector<f64>,
    pub unit: Unit,
}

impl GraphSignal {
    pub fn new(values: DVector<f64>, unit: Unit) -> Self {
        Self { values, unit }
    }

    pub fn from_vec(values: Vec<f64>, unit: Unit) -> Self {
        Self::new(DVector::from_vec(values), unit)
    }

    pub fn zeros(n: usize, unit: Unit) -> Self {
        Self::new(DVector::zeros(n), unit)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Converts an angle-per-power sensitivity from rad/p.u. to deg/MW.
    pub fn to_deg_per_mw(&self, base_mva: f64) -> GraphSignal {
        debug_assert_eq!(self.unit, Unit::RadPerPu);
        GraphSignal::new(self.values.map(|v| v.to_degrees() / base_mva), Unit::DegPerMw)
    }

    pub fn to_degrees(&self) -> GraphSignal {
        debug_assert_eq!(self.unit, Unit::Radian);
        GraphSignal::new(self.values.map(f64::to_degrees), Unit::Degree)
    }

    pub(crate) fn check_len(&self, graph: &GridGraph) -> Result<()> {
        if self.len() != graph.n {
            return Err(AnalysisError::LengthMismatch {
                left: self.len(),
                right: graph.n,
            });
        }
        Ok(())
    }
}

/// Global smoothness `xᵀLx / xᵀx`.
pub fn global_smoothness(x: &GraphSignal, graph: &GridGraph) -> Result<f64> {
    x.check_len(graph)?;
    let energy = x.values.dot(&x.values);
    if energy == 0.0 {
        return Err(AnalysisError::ZeroSignal("global smoothness"));
    }
    let quad = x.values.dot(&graph.apply_laplacian(&x.values));
    Ok(quad / energy)
}

/// Local smoothness `(Lx)(n) / x(n)` per vertex; `None` where
/// `|x(n)| < ZERO_THRESHOLD`.
pub fn local_smoothness(x: &GraphSignal, graph: &GridGraph) -> Result<Vec<Option<f64>>> {
    x.check_len(graph)?;
    let lx = graph.apply_laplacian(&x.values);
    Ok(x.values
        .iter()
        .zip(lx.iter())
        .map(|(&xn, &lxn)| (xn.abs() >= ZERO_THRESHOLD).then(|| lxn / xn))
        .collect())
}

/// Local smoothness at a single vertex.
pub fn local_smoothness_at(x: &GraphSignal, graph: &GridGraph, n: usize) -> Result<f64> {
    x.check_len(graph)?;
    let xn = x.values[n];
    if xn.abs() < ZERO_THRESHOLD {
        return Err(AnalysisError::UndefinedAtBus { bus: graph.bus_id(n) });
    }
    let lxn = graph.laplacian.row(n).transpose().dot(&x.values);
    Ok(lxn / xn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::fixtures::path3;
    use crate::graph::build_graph;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_signal_is_perfectly_smooth() {
        let g = build_graph(&path3()).unwrap();
        let x = GraphSignal::from_vec(vec![2.5; 3], Unit::Radian);
        assert_eq!(global_smoothness(&x, &g).unwrap(), 0.0);
        assert_eq!(local_smoothness(&x, &g).unwrap(), vec![Some(0.0); 3]);
    }

    #[test]
    fn path3_ramp() {
        let g = build_graph(&path3()).unwrap();
        let x = GraphSignal::from_vec(vec![0.0, -1.0, -2.0], Unit::Radian);
        assert_abs_diff_eq!(global_smoothness(&x, &g).unwrap(), 0.4, epsilon = 1e-15);
        let l = local_smoothness(&x, &g).unwrap();
        assert_eq!(l[0], None);
        assert_abs_diff_eq!(l[1].unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[2].unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_signal_has_no_global_smoothness() {
        let g = build_graph(&path3()).unwrap();
        let x = GraphSignal::zeros(3, Unit::Radian);
        assert!(matches!(global_smoothness(&x, &g), Err(AnalysisError::ZeroSignal(_))));
    }

    #[test]
    fn eigenvector_has_uniform_local_smoothness() {
        // [1, -2, 1] is the eigenvector of the path3 Laplacian for eigenvalue 3
        let g = build_graph(&path3()).unwrap();
        let x = GraphSignal::from_vec(vec![1.0, -2.0, 1.0], Unit::Dimensionless);
        for l in local_smoothness(&x, &g).unwrap() {
            assert_abs_diff_eq!(l.unwrap(), 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let g = build_graph(&path3()).unwrap();
        let x = GraphSignal::from_vec(vec![1.0, 2.0], Unit::Radian);
        assert!(matches!(global_smoothness(&x, &g), Err(AnalysisError::LengthMismatch { .. })));
    }

    #[test]
    fn unit_conversion_to_deg_per_mw() {
        let psi = GraphSignal::from_vec(vec![0.0, 1.0, 2.0], Unit::RadPerPu);
        let out = psi.to_deg_per_mw(100.0);
        assert_abs_diff_eq!(out.values[1], 0.5730, epsilon = 1e-4);
        assert_abs_diff_eq!(out.values[2], 1.1459, epsilon = 1e-4);
    }
}
