use crate::case::GridCase;
use crate::dc::{apply_perturbation, Model, PerturbationKind, PerturbationSpec};
use crate::error::{AnalysisError, Result};

use super::newton::{AcProblem, AcSolution, NrOptions};

/// Converged base case plus the options it was solved with, reused as the
/// warm start of every perturbed solve.
#[derive(Debug, Clone)]
pub struct AcBase {
    pub solution: AcSolution,
    pub options: NrOptions,
}

impl AcBase {
    /// Solves the unperturbed case; non-convergence here is an error.
    pub fn solve(case: &GridCase, options: &NrOptions) -> Result<Self> {
        options.validate()?;
        let solution = AcProblem::new(case)?.solve(None, options);
        if !solution.converged {
            return Err(AnalysisError::NonConvergence {
                gamma_mw: 0.0,
                reason: solution.failure.unwrap_or_default(),
            });
        }
        Ok(Self {
            solution,
            options: *options,
        })
    }

    /// Solves the perturbed case from the base voltages. The returned
    /// solution may be flagged non-converged.
    pub fn solve_perturbed(&self, case: &GridCase, spec: &PerturbationSpec) -> Result<AcSolution> {
        let perturbed = apply_perturbation(case, spec)?;
        let start = (self.solution.v_mag.as_slice(), self.solution.v_ang.as_slice());
        Ok(AcProblem::new(&perturbed)?.solve(Some(start), &self.options))
    }

    /// Perturbed solve that treats non-convergence as an error carrying γ.
    pub fn solve_perturbed_converged(&self, case: &GridCase, spec: &PerturbationSpec) -> Result<AcSolution> {
        let sol = self.solve_perturbed(case, spec)?;
        if !sol.converged {
            return Err(AnalysisError::NonConvergence {
                gamma_mw: spec.gamma_mw,
                reason: sol.failure.unwrap_or_default(),
            });
        }
        Ok(sol)
    }
}

/// Result of the non-convergence search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaNcBracket {
    /// Largest strength known to converge, MW.
    pub last_converged_mw: f64,
    /// Smallest strength known to fail, MW. This is the reported γ_nc.
    pub gamma_nc_mw: f64,
    pub solves: usize,
}

/// Bisection for the smallest failing perturbation strength in `[0, gamma_hi]`.
///
/// Assumes failure is monotone in γ: once a strength fails, every larger one
/// fails too. Errors with [`AnalysisError::NoFailureBracket`] if `gamma_hi`
/// still converges.
pub fn find_gamma_nc(
    case: &GridCase,
    u: i64,
    kind: PerturbationKind,
    gamma_hi_mw: f64,
    resolution_mw: f64,
    options: &NrOptions,
) -> Result<GammaNcBracket> {
    let base = AcBase::solve(case, options)?;
    find_gamma_nc_between(case, &base, u, kind, 0.0, gamma_hi_mw, resolution_mw)
}

/// Bisection between a strength `lo` assumed to converge and `hi`, which is
/// checked to fail.
pub fn find_gamma_nc_between(
    case: &GridCase,
    base: &AcBase,
    u: i64,
    kind: PerturbationKind,
    lo_mw: f64,
    hi_mw: f64,
    resolution_mw: f64,
) -> Result<GammaNcBracket> {
    if !(resolution_mw > 0.0) || !(hi_mw > lo_mw) {
        return Err(AnalysisError::InvalidInput(format!(
            "need resolution > 0 and hi > lo, got resolution {resolution_mw}, [{lo_mw}, {hi_mw}]"
        )));
    }
    let converges = |gamma: f64| -> Result<bool> {
        let spec = PerturbationSpec::new(u, gamma, kind, Model::Ac);
        Ok(base.solve_perturbed(case, &spec)?.converged)
    };

    let mut solves = 1;
    if converges(hi_mw)? {
        return Err(AnalysisError::NoFailureBracket { gamma_hi_mw: hi_mw });
    }
    let (mut lo, mut hi) = (lo_mw, hi_mw);
    while hi - lo > resolution_mw {
        let mid = 0.5 * (lo + hi);
        solves += 1;
        if converges(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaNcBracket {
        last_converged_mw: lo,
        gamma_nc_mw: hi,
        solves,
    })
}
