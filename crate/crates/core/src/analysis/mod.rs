//! Hop profiles, spreadability, smoothness of difference signals, the g_θ(γ)
//! curve and whole-grid sweeps.

mod curve;
mod hop;
mod quadratic;
mod stats;
mod sweep;

pub use curve::{GammaCurve, GammaCurveOptions};
pub use hop::{mean_psi_by_hop, spreadability, spreadability_network, HopProfile, Spreadability, DEGENERATE_SLOPE};
pub use quadratic::{
    critical_gamma, critical_gamma_of, dc_g_theta, g_delta_theta, l_delta_theta_at_u, qr_matrices,
    rational_quadratic, QrMatrices, RationalQuadratic, DEFAULT_GAMMA_HI_MW,
};
pub use stats::{average_ranks, cosine_similarity, spearman};
pub use sweep::{eligible_buses, similarity_summary, sweep_all_buses, Similarity, SimilaritySummary, SpreadReport, SweepRow};

use crate::ac::{ac_diff_theta_from, AcBase, NrOptions};
use crate::case::GridCase;
use crate::dc::{abs_difference, apply_perturbation, dc_solve, injection_signal, Model, PerturbationKind, PerturbationSpec};
use crate::error::{AnalysisError, Result};
use crate::graph::{build_graph, reduced_susceptance_inverse, BetaMatrix, GridGraph};
use crate::signal::{global_smoothness, GraphSignal};

/// A case together with its derived operators and, for AC work, a solved
/// base case. Immutable once built, so it can be shared across threads.
#[derive(Debug, Clone)]
pub struct GridContext {
    pub case: GridCase,
    pub graph: GridGraph,
    pub beta: BetaMatrix,
    pub qr: QrMatrices,
    /// DC angles of the unperturbed case (slack at 0).
    pub theta_base: GraphSignal,
    pub ac: Option<AcBase>,
}

impl GridContext {
    /// DC-only context.
    pub fn new(case: GridCase) -> Result<Self> {
        let graph = build_graph(&case)?;
        let beta = reduced_susceptance_inverse(&graph)?;
        let qr = qr_matrices(&graph, &beta);
        let theta_base = dc_solve(&graph, &injection_signal(&case))?;
        Ok(Self {
            case,
            graph,
            beta,
            qr,
            theta_base,
            ac: None,
        })
    }

    /// Context that can also answer AC queries. Fails if the base case does
    /// not converge.
    pub fn with_ac(case: GridCase, options: &NrOptions) -> Result<Self> {
        let ac = AcBase::solve(&case, options)?;
        let mut ctx = Self::new(case)?;
        ctx.ac = Some(ac);
        Ok(ctx)
    }

    /// Context prepared for `model`.
    pub fn for_model(case: GridCase, model: Model, options: &NrOptions) -> Result<Self> {
        match model {
            Model::Dc => Self::new(case),
            Model::Ac => Self::with_ac(case, options),
        }
    }

    pub fn ac_base(&self) -> Result<&AcBase> {
        self.ac
            .as_ref()
            .ok_or_else(|| AnalysisError::InvalidInput("context was built without an AC base case".into()))
    }

    pub fn index_of(&self, bus: i64) -> Result<usize> {
        Ok(self.graph.index_of(bus)?)
    }

    /// `|θ_after - θ_before|`, radians.
    pub fn diff_theta(&self, spec: &PerturbationSpec) -> Result<GraphSignal> {
        match spec.model {
            Model::Dc => {
                let perturbed = apply_perturbation(&self.case, spec)?;
                let after = dc_solve(&self.graph, &injection_signal(&perturbed))?;
                Ok(abs_difference(&after, &self.theta_base))
            }
            Model::Ac => {
                spec.check(&self.case)?;
                ac_diff_theta_from(&self.case, self.ac_base()?, spec)
            }
        }
    }

    /// Global smoothness of the perturbed angles, referenced to the slack's
    /// case angle.
    pub fn g_theta(&self, u: i64, kind: PerturbationKind, gamma_mw: f64, model: Model) -> Result<f64> {
        let spec = PerturbationSpec::new(u, gamma_mw, kind, model);
        spec.check(&self.case)?;
        match model {
            Model::Dc => dc_g_theta(&self.graph, &self.case, self.index_of(u)?, kind, gamma_mw),
            Model::Ac => {
                let sol = self.ac_base()?.solve_perturbed_converged(&self.case, &spec)?;
                global_smoothness(&sol.v_ang, &self.graph)
            }
        }
    }

    pub fn rational_quadratic(&self, u: i64, kind: PerturbationKind) -> Result<RationalQuadratic> {
        PerturbationSpec::new(u, 0.0, kind, Model::Dc).check(&self.case)?;
        let ui = self.index_of(u)?;
        Ok(rational_quadratic(&self.graph, &self.beta, &self.qr, &self.case, ui, kind))
    }

    /// DC critical strength, MW.
    pub fn critical_gamma(&self, u: i64, kind: PerturbationKind, gamma_hi_mw: f64) -> Result<Option<f64>> {
        Ok(critical_gamma_of(&self.rational_quadratic(u, kind)?, gamma_hi_mw))
    }
}

/// Global smoothness of the angles after perturbing `u` by `gamma_mw`.
pub fn g_theta_of_gamma(case: &GridCase, u: i64, kind: PerturbationKind, gamma_mw: f64, model: Model) -> Result<f64> {
    GridContext::for_model(case.clone(), model, &NrOptions::default())?.g_theta(u, kind, gamma_mw, model)
}
