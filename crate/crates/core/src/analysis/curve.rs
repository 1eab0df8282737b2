use crate::ac::find_gamma_nc_between;
use crate::dc::{Model, PerturbationKind};
use crate::error::{AnalysisError, Result};

use super::quadratic::{check_gamma_grid, critical_gamma_of};
use super::GridContext;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCurveOptions {
    pub from_mw: f64,
    pub to_mw: f64,
    pub step_mw: f64,
    /// Bisection resolution for γ_nc, MW.
    pub nc_resolution_mw: f64,
}

impl Default for GammaCurveOptions {
    fn default() -> Self {
        Self {
            from_mw: 0.0,
            to_mw: 1000.0,
            step_mw: 1.0,
            nc_resolution_mw: 0.1,
        }
    }
}

/// g_θ sampled over a γ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCurve {
    pub u: i64,
    pub kind: PerturbationKind,
    pub model: Model,
    pub gammas: Vec<f64>,
    /// `None` where the AC solve failed.
    pub g_theta: Vec<Option<f64>>,
    /// DC: closed-form maximum when inside the grid range. AC: grid argmax
    /// when it is interior to the converged part of the curve.
    pub gamma_c: Option<f64>,
    /// AC only: smallest failing strength, refined by bisection between the
    /// last converged and first failed grid points.
    pub gamma_nc: Option<f64>,
}

impl GammaCurve {
    pub fn converged(&self, i: usize) -> bool {
        self.g_theta[i].is_some()
    }

    /// Index of the largest sampled g_θ.
    pub fn argmax(&self) -> Option<usize> {
        self.g_theta
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.map(|g| (i, g)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

impl GridContext {
    pub fn gamma_curve(
        &self,
        u: i64,
        kind: PerturbationKind,
        model: Model,
        options: &GammaCurveOptions,
    ) -> Result<GammaCurve> {
        let gammas = check_gamma_grid(options.from_mw, options.to_mw, options.step_mw)?;
        let mut g_theta = Vec::with_capacity(gammas.len());
        for &gamma in &gammas {
            match self.g_theta(u, kind, gamma, model) {
                Ok(g) => g_theta.push(Some(g)),
                Err(AnalysisError::NonConvergence { .. }) => g_theta.push(None),
                Err(e) => return Err(e),
            }
        }
        let mut curve = GammaCurve {
            u,
            kind,
            model,
            gammas,
            g_theta,
            gamma_c: None,
            gamma_nc: None,
        };

        match model {
            Model::Dc => {
                let peak = critical_gamma_of(&self.rational_quadratic(u, kind)?, options.to_mw);
                curve.gamma_c = peak.filter(|g| (options.from_mw..=options.to_mw).contains(g));
            }
            Model::Ac => {
                let last_ok = curve.g_theta.iter().rposition(Option::is_some);
                if let (Some(i), Some(last)) = (curve.argmax(), last_ok) {
                    let first_ok = curve.g_theta.iter().position(Option::is_some).unwrap_or(0);
                    if i > first_ok && i < last {
                        curve.gamma_c = Some(curve.gammas[i]);
                    }
                }
                if let Some(j) = curve.g_theta.iter().position(Option::is_none) {
                    if j > 0 {
                        let bracket = find_gamma_nc_between(
                            &self.case,
                            self.ac_base()?,
                            u,
                            kind,
                            curve.gammas[j - 1],
                            curve.gammas[j],
                            options.nc_resolution_mw,
                        )?;
                        curve.gamma_nc = Some(bracket.gamma_nc_mw);
                    }
                }
            }
        }
        Ok(curve)
    }
}
