//! AC power flow: admittance matrix, Newton-Raphson solver and the search for
//! the strength at which it stops converging.

mod loadability;
mod newton;
mod ybus;

pub use loadability::{find_gamma_nc, find_gamma_nc_between, AcBase, GammaNcBracket};
pub use newton::{ac_mismatch, ac_solve_nr, ac_solve_nr_from, AcSolution, NrOptions};
pub use ybus::build_ybus;

use crate::case::GridCase;
use crate::dc::{abs_difference, PerturbationSpec};
use crate::error::Result;
use crate::signal::GraphSignal;

/// `|θ_post - θ_pre|` from two AC solves: the base from the configured start,
/// the perturbed case warm-started from the base.
pub fn ac_diff_theta(case: &GridCase, spec: &PerturbationSpec, options: &NrOptions) -> Result<GraphSignal> {
    spec.check(case)?;
    let base = AcBase::solve(case, options)?;
    ac_diff_theta_from(case, &base, spec)
}

/// Same as [`ac_diff_theta`] reusing a solved base case.
pub fn ac_diff_theta_from(case: &GridCase, base: &AcBase, spec: &PerturbationSpec) -> Result<GraphSignal> {
    let after = base.solve_perturbed_converged(case, spec)?;
    Ok(abs_difference(&after.v_ang, &base.solution.v_ang))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::fixtures::path3;
    use crate::dc::{diff_theta, Model};

    #[test]
    fn zero_strength_gives_zero_signal() {
        let d = ac_diff_theta(&path3(), &PerturbationSpec::load(3, 0.0, Model::Ac), &NrOptions::default()).unwrap();
        assert!(d.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn small_load_matches_dc() {
        let spec = PerturbationSpec::load(3, 1.0, Model::Ac);
        let ac = diff_theta(&path3(), &spec).unwrap();
        let dc = diff_theta(&path3(), &PerturbationSpec { model: Model::Dc, ..spec }).unwrap();
        for n in 1..3 {
            let rel = (ac.values[n] - dc.values[n]).abs() / dc.values[n];
            assert!(rel < 0.02, "bus {n}: ac {} dc {}", ac.values[n], dc.values[n]);
        }
    }
}
