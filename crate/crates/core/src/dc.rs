//! Linear (DC) power flow and single-bus perturbations.

use crate::case::{Generator, GridCase, Status};
use crate::error::{AnalysisError, GraphError, Result};
use crate::graph::{build_graph, BetaMatrix, GridGraph};
use crate::signal::{GraphSignal, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    Load,
    Generation,
}

impl PerturbationKind {
    /// Sign of the injection change for a positive strength: more load means
    /// less net injection.
    pub fn injection_sign(self) -> f64 {
        match self {
            PerturbationKind::Load => -1.0,
            PerturbationKind::Generation => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Dc,
    Ac,
}

/// A change of `gamma_mw` in the load or generation at one bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub bus: i64,
    pub gamma_mw: f64,
    pub kind: PerturbationKind,
    pub model: Model,
}

impl PerturbationSpec {
    pub fn new(bus: i64, gamma_mw: f64, kind: PerturbationKind, model: Model) -> Self {
        Self {
            bus,
            gamma_mw,
            kind,
            model,
        }
    }

    pub fn load(bus: i64, gamma_mw: f64, model: Model) -> Self {
        Self::new(bus, gamma_mw, PerturbationKind::Load, model)
    }

    pub fn generation(bus: i64, gamma_mw: f64, model: Model) -> Self {
        Self::new(bus, gamma_mw, PerturbationKind::Generation, model)
    }

    pub(crate) fn check(&self, case: &GridCase) -> Result<()> {
        if !self.gamma_mw.is_finite() {
            return Err(AnalysisError::InvalidInput(format!(
                "perturbation strength must be finite, got {}",
                self.gamma_mw
            )));
        }
        if case.bus(self.bus).is_none() {
            return Err(GraphError::UnknownBus(self.bus).into());
        }
        if case.slack_id() == Some(self.bus) {
            return Err(AnalysisError::SlackPerturbation(self.bus));
        }
        Ok(())
    }
}

/// Returns a copy of `case` with the perturbation applied.
///
/// A load perturbation adds `gamma` to the bus demand. A generation
/// perturbation adds `gamma` to the first in-service generator at the bus, or
/// creates one (zero reactive output, voltage setpoint from the bus) when the
/// bus has none. Only the named component changes.
pub fn apply_perturbation(case: &GridCase, spec: &PerturbationSpec) -> Result<GridCase> {
    spec.check(case)?;
    let mut out = case.clone();
    match spec.kind {
        PerturbationKind::Load => {
            let bus = out
                .buses
                .iter_mut()
                .find(|b| b.id == spec.bus)
                .expect("checked above");
            bus.p_load += spec.gamma_mw;
        }
        PerturbationKind::Generation => {
            match out.gens.iter_mut().find(|g| g.bus == spec.bus && g.status.is_in()) {
                Some(gen) => gen.p_gen += spec.gamma_mw,
                None => {
                    let v_setpoint = case.bus(spec.bus).expect("checked above").v_mag_setpoint;
                    out.gens.push(Generator {
                        bus: spec.bus,
                        p_gen: spec.gamma_mw,
                        q_gen: 0.0,
                        q_min: 0.0,
                        q_max: 0.0,
                        v_setpoint,
                        status: Status::In,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Net injection signal of a case, p.u.
pub fn injection_signal(case: &GridCase) -> GraphSignal {
    GraphSignal::from_vec(case.injections_pu(), Unit::PuPower)
}

/// Solves `B_red θ_red = p_red` with `θ(slack) = 0`; the slack injection is
/// the implied balance and is ignored.
pub fn dc_solve(graph: &GridGraph, p: &GraphSignal) -> Result<GraphSignal> {
    p.check_len(graph)?;
    let s = graph.slack_index;
    let rhs = p.values.clone().remove_row(s);
    let theta = graph
        .reduced_susceptance()
        .lu()
        .solve(&rhs)
        .ok_or(GraphError::Singular { condition: f64::INFINITY })?;
    Ok(GraphSignal::new(theta.insert_row(s, 0.0), Unit::Radian))
}

/// DC angles shifted so the slack sits at its case angle.
pub fn dc_solve_referenced(graph: &GridGraph, p: &GraphSignal) -> Result<GraphSignal> {
    let mut theta = dc_solve(graph, p)?;
    theta.values.add_scalar_mut(graph.reference_angle);
    Ok(theta)
}

/// Elementwise `|a - b|`.
pub(crate) fn abs_difference(after: &GraphSignal, before: &GraphSignal) -> GraphSignal {
    GraphSignal::new((&after.values - &before.values).abs(), after.unit)
}

/// DC difference angle signal from two full solves on `graph`.
pub fn dc_diff_theta(graph: &GridGraph, case: &GridCase, spec: &PerturbationSpec) -> Result<GraphSignal> {
    let perturbed = apply_perturbation(case, spec)?;
    let before = dc_solve(graph, &injection_signal(case))?;
    let after = dc_solve(graph, &injection_signal(&perturbed))?;
    Ok(abs_difference(&after, &before))
}

/// Difference voltage-angle signal `|θ_after - θ_before|` in radians, solved
/// with the model named in `spec` (AC uses default Newton options).
pub fn diff_theta(case: &GridCase, spec: &PerturbationSpec) -> Result<GraphSignal> {
    match spec.model {
        Model::Dc => dc_diff_theta(&build_graph(case)?, case, spec),
        Model::Ac => crate::ac::ac_diff_theta(case, spec, &crate::ac::NrOptions::default()),
    }
}

/// Closed-form normalized difference signal `ψ_u(n) = |β_nu|`, rad/p.u.
pub fn psi_analytic(beta: &BetaMatrix, u: usize) -> GraphSignal {
    GraphSignal::new(beta.column(u).abs(), Unit::RadPerPu)
}

/// `Δθ / |γ|` with γ converted to p.u.
pub fn normalize_by_gamma(delta_theta: &GraphSignal, gamma_mw: f64, base_mva: f64) -> GraphSignal {
    let gamma_pu = gamma_mw.abs() / base_mva;
    GraphSignal::new(&delta_theta.values / gamma_pu, Unit::RadPerPu)
}
