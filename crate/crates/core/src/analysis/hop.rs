use crate::error::{AnalysisError, Result};
use crate::graph::{closeness_modified, hop_distances, GridGraph};
use crate::signal::{GraphSignal, Unit};

/// Slopes at or above this are treated as flat: no spreadability value.
pub const DEGENERATE_SLOPE: f64 = -1e-12;

/// Mean of ψ over the buses exactly K hops from the perturbed bus.
#[derive(Debug, Clone, PartialEq)]
pub struct HopProfile {
    pub u: i64,
    /// `(K, mean ψ)` for every nonempty shell, K ≥ 1, ascending.
    pub means: Vec<(usize, f64)>,
    pub shell_sizes: Vec<usize>,
    pub unit: Unit,
}

/// Averages `psi` per hop shell. The perturbed bus itself (K = 0) is left
/// out; empty shells do not appear.
pub fn mean_psi_by_hop(psi: &GraphSignal, hops: &[usize], u: i64) -> Result<HopProfile> {
    if psi.len() != hops.len() {
        return Err(AnalysisError::LengthMismatch {
            left: psi.len(),
            right: hops.len(),
        });
    }
    let depth = hops.iter().copied().max().unwrap_or(0);
    let mut sums = vec![0.0; depth + 1];
    let mut counts = vec![0usize; depth + 1];
    for (&v, &k) in psi.values.iter().zip(hops) {
        sums[k] += v;
        counts[k] += 1;
    }
    let mut means = Vec::new();
    let mut shell_sizes = Vec::new();
    for k in 1..=depth {
        if counts[k] > 0 {
            means.push((k, sums[k] / counts[k] as f64));
            shell_sizes.push(counts[k]);
        }
    }
    Ok(HopProfile {
        u,
        means,
        shell_sizes,
        unit: psi.unit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spreadability {
    /// `-1 / slope`; `None` when the fit is degenerate.
    pub s: Option<f64>,
    /// Ordinary least-squares slope of ψ̄ against K. NaN with fewer than two
    /// shells.
    pub slope: f64,
    pub degenerate: bool,
}

/// Fits a line through `(K, ψ̄(K))`, each shell weighted equally.
pub fn spreadability(profile: &HopProfile) -> Spreadability {
    let m = profile.means.len();
    if m < 2 {
        return Spreadability {
            s: None,
            slope: f64::NAN,
            degenerate: true,
        };
    }
    let mf = m as f64;
    let k_mean = profile.means.iter().map(|&(k, _)| k as f64).sum::<f64>() / mf;
    let y_mean = profile.means.iter().map(|&(_, y)| y).sum::<f64>() / mf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(k, y) in &profile.means {
        let dk = k as f64 - k_mean;
        sxy += dk * (y - y_mean);
        sxx += dk * dk;
    }
    let slope = sxy / sxx;
    let degenerate = !(slope < DEGENERATE_SLOPE);
    Spreadability {
        s: (!degenerate).then(|| -1.0 / slope),
        slope,
        degenerate,
    }
}

/// Baseline spreadability: closeness of `u` times the Δθ-weighted mean hop
/// distance from `u`.
pub fn spreadability_network(delta_theta: &GraphSignal, graph: &GridGraph, u: usize) -> Result<f64> {
    delta_theta.check_len(graph)?;
    let total: f64 = delta_theta.values.iter().sum();
    if total == 0.0 {
        return Err(AnalysisError::ZeroSignal("baseline spreadability"));
    }
    let hops = hop_distances(graph, u);
    let weighted: f64 = delta_theta
        .values
        .iter()
        .zip(&hops)
        .map(|(&d, &h)| d / total * h as f64)
        .sum();
    Ok(closeness_modified(graph, u) * weighted)
}
