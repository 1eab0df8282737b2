use nalgebra::DMatrix;

use crate::case::GridCase;
use crate::dc::{dc_solve_referenced, injection_signal, PerturbationKind};
use crate::error::{AnalysisError, Result};
use crate::graph::{BetaMatrix, GridGraph};
use crate::signal::{global_smoothness, local_smoothness_at, GraphSignal};

/// Default upper end of the golden-section fallback, MW.
pub const DEFAULT_GAMMA_HI_MW: f64 = 10_000.0;

/// `Q = βᵀLβ` and `R = βᵀβ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrMatrices {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

pub fn qr_matrices(graph: &GridGraph, beta: &BetaMatrix) -> QrMatrices {
    let bt = beta.beta.transpose();
    QrMatrices {
        q: &bt * &graph.laplacian * &beta.beta,
        r: &bt * &beta.beta,
    }
}

/// `g_θ(γ) = (a₂γ² + a₁γ + a₀) / (b₂γ² + b₁γ + b₀)` with γ in p.u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalQuadratic {
    /// `[a₀, a₁, a₂]`
    pub a: [f64; 3],
    /// `[b₀, b₁, b₂]`
    pub b: [f64; 3],
    pub base_mva: f64,
}

fn poly(c: &[f64; 3], x: f64) -> f64 {
    (c[2] * x + c[1]) * x + c[0]
}

impl RationalQuadratic {
    pub fn eval_mw(&self, gamma_mw: f64) -> f64 {
        let x = gamma_mw / self.base_mva;
        poly(&self.a, x) / poly(&self.b, x)
    }

    /// Coefficients `[C, B, A]` of `N'D - ND' = Aγ² + Bγ + C`.
    fn stationarity(&self) -> [f64; 3] {
        let [a0, a1, a2] = self.a;
        let [b0, b1, b2] = self.b;
        [a1 * b0 - a0 * b1, 2.0 * (a2 * b0 - a0 * b2), a2 * b1 - a1 * b2]
    }

    /// Local maxima of g_θ at γ ≥ 0, MW. At most one exists.
    pub fn maximum_mw(&self) -> Option<f64> {
        let [c, b, a] = self.stationarity();
        let scale = self.a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
            * self.b.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let tiny = 1e-14 * scale;
        if a.abs() <= tiny && b.abs() <= tiny && c.abs() <= tiny {
            return None; // g_θ constant in γ
        }
        let roots: Vec<f64> = if a.abs() <= tiny {
            if b.abs() <= tiny {
                vec![]
            } else {
                vec![-c / b]
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                vec![]
            } else {
                // cancellation-free pair
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                if q == 0.0 {
                    vec![0.0]
                } else {
                    vec![q / a, c / q]
                }
            }
        };
        // g' has the sign of the stationarity polynomial, so a maximum is a
        // root where that polynomial is decreasing.
        roots
            .into_iter()
            .filter(|&x| x >= 0.0 && x.is_finite() && 2.0 * a * x + b < 0.0)
            .map(|x| x * self.base_mva)
            .next()
    }
}

/// Coefficients of the DC g_θ(γ) curve for perturbing internal bus `u`.
///
/// Angles are taken relative to the slack's case angle `c`, so the
/// denominator picks up `2c·1ᵀθ₀ + c²N` terms; the numerator does not because
/// `L·1 = 0`.
pub fn rational_quadratic(
    graph: &GridGraph,
    beta: &BetaMatrix,
    qr: &QrMatrices,
    case: &GridCase,
    u: usize,
    kind: PerturbationKind,
) -> RationalQuadratic {
    let p0 = &injection_signal(case).values;
    let sigma = kind.injection_sign();
    let c = graph.reference_angle;
    let n = graph.n as f64;
    let qp = &qr.q * p0;
    let rp = &qr.r * p0;
    let beta_ones = beta.beta.column_sum();
    let a = [p0.dot(&qp), 2.0 * sigma * qp[u], qr.q[(u, u)]];
    let b = [
        p0.dot(&rp) + 2.0 * c * beta_ones.dot(p0) + c * c * n,
        2.0 * sigma * rp[u] + 2.0 * sigma * c * beta_ones[u],
        qr.r[(u, u)],
    ];
    RationalQuadratic {
        a,
        b,
        base_mva: case.base_mva,
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-9 * (1.0 + hi.abs()) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// Strength at which the DC g_θ(γ) peaks, MW, or `None` without an interior
/// maximum at γ ≥ 0. Uses the closed-form stationary point and falls back to
/// a golden-section search on `[0, gamma_hi_mw]`.
pub fn critical_gamma_of(rq: &RationalQuadratic, gamma_hi_mw: f64) -> Option<f64> {
    if let Some(g) = rq.maximum_mw() {
        return Some(g);
    }
    let x = golden_section_max(|g| rq.eval_mw(g), 0.0, gamma_hi_mw);
    let edge = 1e-3 * gamma_hi_mw;
    let interior = x > edge && x < gamma_hi_mw - edge;
    (interior && rq.eval_mw(x) > rq.eval_mw(0.0).max(rq.eval_mw(gamma_hi_mw))).then_some(x)
}

/// DC critical strength for perturbing bus `u` of `case`.
pub fn critical_gamma(case: &GridCase, u: i64, kind: PerturbationKind) -> Result<Option<f64>> {
    let ctx = super::GridContext::new(case.clone())?;
    ctx.critical_gamma(u, kind, DEFAULT_GAMMA_HI_MW)
}

/// Global smoothness of the DC angles (referenced to the slack's case angle)
/// after perturbing `u` by `gamma_mw`.
pub fn dc_g_theta(graph: &GridGraph, case: &GridCase, u: usize, kind: PerturbationKind, gamma_mw: f64) -> Result<f64> {
    let mut p = injection_signal(case);
    p.values[u] += kind.injection_sign() * gamma_mw / case.base_mva;
    let theta = dc_solve_referenced(graph, &p)?;
    global_smoothness(&theta, graph)
}

/// Global smoothness of a difference signal.
pub fn g_delta_theta(delta_theta: &GraphSignal, graph: &GridGraph) -> Result<f64> {
    global_smoothness(delta_theta, graph)
}

/// Local smoothness of a difference signal at the perturbed vertex.
pub fn l_delta_theta_at_u(delta_theta: &GraphSignal, graph: &GridGraph, u: usize) -> Result<f64> {
    local_smoothness_at(delta_theta, graph, u)
}

pub(crate) fn check_gamma_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || !(step > 0.0) || !(to > from) || step > to - from {
        return Err(AnalysisError::InvalidInput(format!(
            "gamma grid needs from < to and 0 < step <= to - from, got from {from}, to {to}, step {step}"
        )));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}
