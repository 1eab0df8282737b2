use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::case::GridCase;
use crate::error::GraphError;

/// Bus admittance matrix with the standard π branch model: series
/// `1/(r + jx)`, total charging `jb` split between the ends, and an ideal
/// transformer `tap·e^{j·shift}` on the from side. Bus shunts are
/// `(G + jB) / base_mva`.
pub fn build_ybus(case: &GridCase) -> Result<DMatrix<Complex64>, GraphError> {
    let index = case.bus_index();
    let n = index.len();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));

    for br in case.in_service_branches() {
        let z = Complex64::new(br.r, br.x);
        if z.norm() == 0.0 {
            return Err(GraphError::ZeroReactance {
                from: br.from_bus,
                to: br.to_bus,
            });
        }
        let f = index.try_index_of(br.from_bus)?;
        let t = index.try_index_of(br.to_bus)?;
        let ys = z.inv();
        let ratio = Complex64::from_polar(br.tap, br.shift.to_radians());
        let ytt = ys + Complex64::new(0.0, br.b_charging / 2.0);
        let yff = ytt / (br.tap * br.tap);
        let yft = -ys / ratio.conj();
        let ytf = -ys / ratio;
        y[(f, f)] += yff;
        y[(t, t)] += ytt;
        y[(f, t)] += yft;
        y[(t, f)] += ytf;
    }

    for (i, bus) in case.buses.iter().enumerate() {
        y[(i, i)] += Complex64::new(bus.shunt_g, bus.shunt_b) / case.base_mva;
    }
    Ok(y)
}
