//! Oracles shared by integration tests. These deliberately avoid the
//! library's analytic paths: the Jacobian comes from central differences and
//! an LU determinant.

#![allow(clippy::needless_range_loop)]

use priorflow::flow::FlowModel;

/// log |det J| of the flow's forward map at `x`, from a finite-difference
/// Jacobian factorized with partial pivoting.
pub fn numerical_log_abs_det(model: &FlowModel, x: &[f64]) -> f64 {
    let n = x.len();
    let h = 1e-6;
    let mut jac = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut plus = x.to_vec();
        plus[col] += h;
        let mut minus = x.to_vec();
        minus[col] -= h;
        let fp = model.forward(&plus).unwrap().0;
        let fm = model.forward(&minus).unwrap().0;
        for row in 0..n {
            jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    let mut det: f64 = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| jac[a][col].abs().partial_cmp(&jac[b][col].abs()).unwrap())
            .unwrap();
        if pivot != col {
            jac.swap(pivot, col);
            det = -det;
        }
        det *= jac[col][col];
        for row in col + 1..n {
            let factor = jac[row][col] / jac[col][col];
            for k in col..n {
                let v = jac[col][k];
                jac[row][k] -= factor * v;
            }
        }
    }
    det.abs().ln()
}
