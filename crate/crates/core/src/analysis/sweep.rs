use rayon::prelude::*;

use crate::case::GridCase;
use crate::dc::{normalize_by_gamma, Model, PerturbationKind, PerturbationSpec};
use crate::error::{AnalysisError, Result};
use crate::graph::hop_distances;

use super::hop::{mean_psi_by_hop, spreadability, spreadability_network, HopProfile};
use super::quadratic::{g_delta_theta, l_delta_theta_at_u};
use super::stats::{cosine_similarity, spearman};
use super::GridContext;

/// Everything measured for one perturbation. ψ and the hop profile are in
/// deg/MW, so `s` is in MW/deg per hop.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadReport {
    pub u: i64,
    pub s: Option<f64>,
    pub s_prime: f64,
    pub g_delta_theta: f64,
    pub l_delta_theta_at_u: f64,
    pub profile: HopProfile,
    pub slope: f64,
    pub slope_degenerate: bool,
}

impl GridContext {
    pub fn spread_report(&self, spec: &PerturbationSpec) -> Result<SpreadReport> {
        if spec.gamma_mw == 0.0 {
            return Err(AnalysisError::ZeroSignal("difference angle signal at zero strength"));
        }
        let ui = self.index_of(spec.bus)?;
        let delta = self.diff_theta(spec)?;
        let psi = normalize_by_gamma(&delta, spec.gamma_mw, self.case.base_mva).to_deg_per_mw(self.case.base_mva);
        let profile = mean_psi_by_hop(&psi, &hop_distances(&self.graph, ui), spec.bus)?;
        let fit = spreadability(&profile);
        Ok(SpreadReport {
            u: spec.bus,
            s: fit.s,
            s_prime: spreadability_network(&delta, &self.graph, ui)?,
            g_delta_theta: g_delta_theta(&delta, &self.graph)?,
            l_delta_theta_at_u: l_delta_theta_at_u(&delta, &self.graph, ui)?,
            profile,
            slope: fit.slope,
            slope_degenerate: fit.degenerate,
        })
    }
}

/// Buses a sweep perturbs: load buses (positive demand) for load
/// perturbations, generator buses for generation, never the slack. Sorted by
/// bus id.
pub fn eligible_buses(case: &GridCase, kind: PerturbationKind) -> Vec<i64> {
    let slack = case.slack_id();
    let mut ids = match kind {
        PerturbationKind::Load => case.load_bus_ids(),
        PerturbationKind::Generation => case.generator_bus_ids(),
    };
    ids.retain(|&id| Some(id) != slack);
    ids.sort_unstable();
    ids.dedup();
    ids
}

#[derive(Debug)]
pub struct SweepRow {
    pub bus: i64,
    pub outcome: Result<SpreadReport>,
}

/// One report per eligible bus, ordered by bus id. Buses are processed in
/// parallel on the current rayon pool; a failing bus is recorded in its row.
pub fn sweep_all_buses(ctx: &GridContext, gamma_mw: f64, kind: PerturbationKind, model: Model) -> Result<Vec<SweepRow>> {
    if model == Model::Ac {
        ctx.ac_base()?;
    }
    Ok(eligible_buses(&ctx.case, kind)
        .into_par_iter()
        .map(|bus| SweepRow {
            bus,
            outcome: ctx.spread_report(&PerturbationSpec::new(bus, gamma_mw, kind, model)),
        })
        .collect())
}

/// Spearman and cosine of one column pairing; `None` where undefined.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Similarity {
    pub spearman: Option<f64>,
    pub cosine: Option<f64>,
}

impl Similarity {
    fn of(a: &[f64], b: &[f64]) -> Self {
        Self {
            spearman: spearman(a, b).ok(),
            cosine: cosine_similarity(a, b).ok(),
        }
    }
}

/// Similarities of `s` against the other columns, over rows that succeeded
/// with a non-degenerate `s`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimilaritySummary {
    pub rows_used: usize,
    pub s_vs_s_prime: Similarity,
    pub s_vs_g_delta_theta: Similarity,
    pub s_vs_l_delta_theta: Similarity,
}

pub fn similarity_summary(rows: &[SweepRow]) -> SimilaritySummary {
    let used: Vec<&SpreadReport> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .filter(|r| r.s.is_some())
        .collect();
    let col = |f: fn(&SpreadReport) -> f64| used.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let s = col(|r| r.s.unwrap_or(f64::NAN));
    SimilaritySummary {
        rows_used: used.len(),
        s_vs_s_prime: Similarity::of(&s, &col(|r| r.s_prime)),
        s_vs_g_delta_theta: Similarity::of(&s, &col(|r| r.g_delta_theta)),
        s_vs_l_delta_theta: Similarity::of(&s, &col(|r| r.l_delta_theta_at_u)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::fixtures::path3;
    use approx::assert_abs_diff_eq;

    fn loaded_path3() -> GridCase {
        let mut case = path3();
        case.buses[1].p_load = 10.0;
        case.buses[2].p_load = 20.0;
        case.gens[0].p_gen = 30.0;
        case
    }

    #[test]
    fn path3_report_at_bus3() {
        let ctx = GridContext::new(path3()).unwrap();
        let r = ctx.spread_report(&PerturbationSpec::load(3, 100.0, Model::Dc)).unwrap();
        let deg = 1f64.to_degrees() / 100.0;
        assert_eq!(r.profile.shell_sizes, vec![1, 1]);
        assert_abs_diff_eq!(r.profile.means[0].1, deg, epsilon = 1e-12);
        assert_abs_diff_eq!(r.profile.means[1].1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.slope, -deg, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s.unwrap(), 1.0 / deg, epsilon = 1e-9);
        assert_abs_diff_eq!(r.s_prime, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.g_delta_theta, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(r.l_delta_theta_at_u, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn eligible_sets() {
        assert_eq!(eligible_buses(&loaded_path3(), PerturbationKind::Load), vec![2, 3]);
        assert!(eligible_buses(&path3(), PerturbationKind::Load).is_empty());
        assert!(eligible_buses(&path3(), PerturbationKind::Generation).is_empty());
    }

    #[test]
    fn sweep_is_ordered_and_complete() {
        let ctx = GridContext::new(loaded_path3()).unwrap();
        let rows = sweep_all_buses(&ctx, 50.0, PerturbationKind::Load, Model::Dc).unwrap();
        assert_eq!(rows.iter().map(|r| r.bus).collect::<Vec<_>>(), vec![2, 3]);
        // bus 2 sits one hop from everything: a single shell, no slope
        let r2 = rows[0].outcome.as_ref().unwrap();
        assert!(r2.slope_degenerate);
        assert!(rows[1].outcome.as_ref().unwrap().s.is_some());
    }

    #[test]
    fn ac_sweep_needs_ac_base() {
        let ctx = GridContext::new(loaded_path3()).unwrap();
        assert!(sweep_all_buses(&ctx, 50.0, PerturbationKind::Load, Model::Ac).is_err());
    }
}
