use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::case::{BusKind, GridCase};
use crate::error::{GraphError, Result};
use crate::signal::{GraphSignal, Unit};

use super::ybus::build_ybus;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrOptions {
    /// Convergence threshold on the largest P/Q mismatch, p.u.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Start from 1 p.u. / reference angle instead of the case voltages.
    pub flat_start: bool,
}

impl Default for NrOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 30,
            flat_start: true,
        }
    }
}

impl NrOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(crate::error::AnalysisError::InvalidInput(format!(
                "Newton options need tolerance > 0 and max_iterations >= 1, got {} and {}",
                self.tolerance, self.max_iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AcSolution {
    pub v_mag: GraphSignal,
    pub v_ang: GraphSignal,
    pub iterations: usize,
    pub max_mismatch: f64,
    pub converged: bool,
    /// Mismatch at every evaluated iterate, starting with the initial point.
    pub mismatch_history: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Slack,
    Pv,
    Pq,
}

/// Everything about a case the Newton iteration needs, assembled once.
pub(crate) struct AcProblem {
    ybus: DMatrix<Complex64>,
    roles: Vec<Role>,
    /// Scheduled complex injection per bus, p.u.
    s_spec: Vec<Complex64>,
    /// Voltage magnitude held at slack and PV buses.
    v_set: Vec<f64>,
    reference_angle: f64,
    case_vm: Vec<f64>,
    case_va: Vec<f64>,
    pvpq: Vec<usize>,
    pq: Vec<usize>,
}

impl AcProblem {
    pub(crate) fn new(case: &GridCase) -> Result<Self> {
        let ybus = build_ybus(case)?;
        let index = case.bus_index();
        if case.slack_id().is_none() {
            return Err(GraphError::NoSlack.into());
        }

        let mut first_gen_setpoint = vec![None; index.len()];
        for g in case.in_service_gens() {
            let i = index.try_index_of(g.bus)?;
            first_gen_setpoint[i].get_or_insert(g.v_setpoint);
        }

        let roles: Vec<Role> = case
            .buses
            .iter()
            .zip(&first_gen_setpoint)
            .map(|(b, gen)| match b.kind {
                BusKind::Slack => Role::Slack,
                BusKind::Pv if gen.is_some() => Role::Pv,
                _ => Role::Pq,
            })
            .collect();

        let v_set = case
            .buses
            .iter()
            .zip(&first_gen_setpoint)
            .map(|(b, gen)| gen.unwrap_or(b.v_mag_setpoint))
            .collect();

        let p = case.injections_pu();
        let q = case.reactive_injections_pu();
        let s_spec = p.iter().zip(&q).map(|(&p, &q)| Complex64::new(p, q)).collect();

        let pvpq = (0..roles.len()).filter(|&i| roles[i] != Role::Slack).collect();
        let pq = (0..roles.len()).filter(|&i| roles[i] == Role::Pq).collect();

        Ok(Self {
            ybus,
            roles,
            s_spec,
            v_set,
            reference_angle: case.reference_angle(),
            case_vm: case.buses.iter().map(|b| b.v_mag_setpoint).collect(),
            case_va: case.buses.iter().map(|b| b.v_ang_init.to_radians()).collect(),
            pvpq,
            pq,
        })
    }

    fn initial_state(&self, flat: bool) -> (Vec<f64>, Vec<f64>) {
        let n = self.roles.len();
        let mut vm = if flat { vec![1.0; n] } else { self.case_vm.clone() };
        let va = if flat { vec![self.reference_angle; n] } else { self.case_va.clone() };
        self.hold_setpoints(&mut vm);
        let mut va = va;
        self.hold_reference(&mut va);
        (vm, va)
    }

    fn hold_setpoints(&self, vm: &mut [f64]) {
        for (i, role) in self.roles.iter().enumerate() {
            if *role != Role::Pq {
                vm[i] = self.v_set[i];
            }
        }
    }

    fn hold_reference(&self, va: &mut [f64]) {
        for (i, role) in self.roles.iter().enumerate() {
            if *role == Role::Slack {
                va[i] = self.reference_angle;
            }
        }
    }

    fn voltages(vm: &[f64], va: &[f64]) -> Vec<Complex64> {
        vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
    }

    fn currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|i| (0..n).map(|k| self.ybus[(i, k)] * v[k]).sum())
            .collect()
    }

    /// Mismatch vector `[ΔP(pv,pq); ΔQ(pq)]` and its infinity norm.
    fn mismatch(&self, v: &[Complex64], current: &[Complex64]) -> (DVector<f64>, f64) {
        let mis: Vec<Complex64> = v
            .iter()
            .zip(current)
            .zip(&self.s_spec)
            .map(|((vi, ii), si)| vi * ii.conj() - si)
            .collect();
        let f = DVector::from_iterator(
            self.pvpq.len() + self.pq.len(),
            self.pvpq.iter().map(|&i| mis[i].re).chain(self.pq.iter().map(|&i| mis[i].im)),
        );
        let norm = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let norm = if f.iter().all(|x| x.is_finite()) { norm } else { f64::INFINITY };
        (f, norm)
    }

    fn jacobian(&self, v: &[Complex64], current: &[Complex64]) -> DMatrix<f64> {
        let n_pvpq = self.pvpq.len();
        let dim = n_pvpq + self.pq.len();
        let j = Complex64::new(0.0, 1.0);
        let vnorm: Vec<Complex64> = v.iter().map(|x| x / x.norm()).collect();

        // dS_i/dVa_k = j V_i conj(δ_ik I_i - Y_ik V_k)
        let ds_dva = |i: usize, k: usize| {
            let mut inner = -self.ybus[(i, k)] * v[k];
            if i == k {
                inner += current[i];
            }
            j * v[i] * inner.conj()
        };
        // dS_i/dVm_k = V_i conj(Y_ik Vn_k) + δ_ik conj(I_i) Vn_i
        let ds_dvm = |i: usize, k: usize| {
            let mut out = v[i] * (self.ybus[(i, k)] * vnorm[k]).conj();
            if i == k {
                out += current[i].conj() * vnorm[i];
            }
            out
        };

        let mut jac = DMatrix::zeros(dim, dim);
        for (r, &i) in self.pvpq.iter().enumerate() {
            for (c, &k) in self.pvpq.iter().enumerate() {
                jac[(r, c)] = ds_dva(i, k).re;
            }
            for (c, &k) in self.pq.iter().enumerate() {
                jac[(r, n_pvpq + c)] = ds_dvm(i, k).re;
            }
        }
        for (r, &i) in self.pq.iter().enumerate() {
            for (c, &k) in self.pvpq.iter().enumerate() {
                jac[(n_pvpq + r, c)] = ds_dva(i, k).im;
            }
            for (c, &k) in self.pq.iter().enumerate() {
                jac[(n_pvpq + r, n_pvpq + c)] = ds_dvm(i, k).im;
            }
        }
        jac
    }

    /// Newton-Raphson on the polar mismatch equations. Non-convergence is
    /// reported in the returned solution, never as an error.
    pub(crate) fn solve(&self, start: Option<(&[f64], &[f64])>, options: &NrOptions) -> AcSolution {
        let (mut vm, mut va) = match start {
            Some((m, a)) => {
                let mut vm = m.to_vec();
                let mut va = a.to_vec();
                self.hold_setpoints(&mut vm);
                self.hold_reference(&mut va);
                (vm, va)
            }
            None => self.initial_state(options.flat_start),
        };
        let n_pvpq = self.pvpq.len();

        let mut history = Vec::new();
        let mut iterations = 0;
        let mut failure = None;
        let mut converged = false;
        let mut norm;

        loop {
            let v = Self::voltages(&vm, &va);
            let current = self.currents(&v);
            let (f, mis) = self.mismatch(&v, &current);
            norm = mis;
            history.push(norm);

            if !norm.is_finite() {
                failure = Some(format!("state diverged at iteration {iterations}"));
                break;
            }
            if norm < options.tolerance {
                converged = true;
                break;
            }
            if iterations >= options.max_iterations {
                failure = Some(format!(
                    "no convergence in {} iterations (mismatch {norm:e} p.u.)",
                    options.max_iterations
                ));
                break;
            }

            let jac = self.jacobian(&v, &current);
            let Some(dx) = jac.lu().solve(&(-f)) else {
                failure = Some(format!("singular Jacobian at iteration {iterations}"));
                break;
            };
            if dx.iter().any(|x| !x.is_finite()) {
                failure = Some(format!("singular Jacobian at iteration {iterations}"));
                break;
            }
            for (r, &i) in self.pvpq.iter().enumerate() {
                va[i] += dx[r];
            }
            for (r, &i) in self.pq.iter().enumerate() {
                vm[i] += dx[n_pvpq + r];
            }
            iterations += 1;
        }

        if converged && vm.iter().any(|&m| m <= 0.0) {
            converged = false;
            failure = Some("converged to a non-physical voltage magnitude".into());
        }

        AcSolution {
            v_mag: GraphSignal::from_vec(vm, Unit::Dimensionless),
            v_ang: GraphSignal::from_vec(va, Unit::Radian),
            iterations,
            max_mismatch: norm,
            converged,
            mismatch_history: history,
            failure,
        }
    }

    /// Largest P/Q mismatch of an arbitrary voltage state.
    pub(crate) fn mismatch_of(&self, vm: &[f64], va: &[f64]) -> f64 {
        let v = Self::voltages(vm, va);
        let current = self.currents(&v);
        self.mismatch(&v, &current).1
    }
}

/// Solves the AC power flow of `case`.
///
/// Generator reactive limits are not enforced. PV buses without an in-service
/// generator are solved as PQ. The slack angle is held at its case value.
pub fn ac_solve_nr(case: &GridCase, options: &NrOptions) -> Result<AcSolution> {
    options.validate()?;
    Ok(AcProblem::new(case)?.solve(None, options))
}

/// Solves the AC power flow starting from a previous solution.
pub fn ac_solve_nr_from(case: &GridCase, start: &AcSolution, options: &NrOptions) -> Result<AcSolution> {
    options.validate()?;
    Ok(AcProblem::new(case)?.solve(Some((start.v_mag.as_slice(), start.v_ang.as_slice())), options))
}

/// Largest P/Q mismatch of a voltage state, p.u. (independent re-evaluation of
/// the power-flow equations).
pub fn ac_mismatch(case: &GridCase, v_mag: &[f64], v_ang: &[f64]) -> Result<f64> {
    Ok(AcProblem::new(case)?.mismatch_of(v_mag, v_ang))
}
