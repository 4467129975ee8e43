//! Lawson–Hanson nonnegative least squares and the least-distance program built on it.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

const TOL: f64 = 1e-12;

/// Solves `min ‖E u − f‖₂` subject to `u ≥ 0`.
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let n = e.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = 1.0 + e.iter().fold(0.0f64, |a, v| a.max(v.abs())) * (1.0 + f.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    for _ in 0..3 * n + 10 {
        let w = e.tr_mul(&(f - e * &x));
        let candidate = (0..n).filter(|&j| !passive[j] && w[j] > TOL * scale).max_by(|&a, &b| {
            w[a].total_cmp(&w[b]).then(b.cmp(&a))
        });
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let z = passive_solve(e, f, &passive);
            let blocking: Vec<usize> = (0..n).filter(|&k| passive[k] && z[k] <= TOL).collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&k| x[k] / (x[k] - z[k]))
                .filter(|a| a.is_finite())
                .fold(1.0, f64::min);
            x += (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= TOL {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

fn passive_solve(e: &DMatrix<f64>, f: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&k| passive[k]).collect();
    let sub = e.select_columns(&idx);
    let sol = sub
        .svd(true, true)
        .solve(f, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(idx.len()));
    let mut z = DVector::zeros(passive.len());
    for (pos, &k) in idx.iter().enumerate() {
        z[k] = sol[pos];
    }
    z
}

/// Minimum-norm point of `{y : G y ≤ h}`; `None` if the system is infeasible.
pub fn least_distance(g: &DMatrix<f64>, h: &DVector<f64>) -> Option<DVector<f64>> {
    let n = g.ncols();
    if h.iter().all(|&v| v >= 0.0) {
        return Some(DVector::zeros(n));
    }
    // Classic reduction: with E = [−Gᵀ; −hᵀ] and f = e_{n+1}, the NNLS residual encodes the answer.
    let k = g.nrows();
    let mut e = DMatrix::zeros(n + 1, k);
    for r in 0..k {
        for c in 0..n {
            e[(c, r)] = -g[(r, c)];
        }
        e[(n, r)] = -h[r];
    }
    let mut f = DVector::zeros(n + 1);
    f[n] = 1.0;
    let u = nnls(&e, &f);
    let r = &e * u - f;
    if r[n].abs() < 1e-12 {
        return None;
    }
    Some(DVector::from_fn(n, |c, _| -r[c] / r[n]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn nnls_unconstrained_optimum_positive() {
        let e = dmatrix![1.0, 0.0; 0.0, 1.0; 1.0, 1.0];
        let f = dvector![1.0, 2.0, 3.0];
        let u = nnls(&e, &f);
        assert!((u - dvector![1.0, 2.0]).norm() < 1e-10);
    }

    #[test]
    fn nnls_clips_negative_direction() {
        let e = dmatrix![1.0, 0.0; 0.0, 1.0];
        let f = dvector![1.0, -2.0];
        let u = nnls(&e, &f);
        assert!((u - dvector![1.0, 0.0]).norm() < 1e-12);
    }

    #[test]
    fn least_distance_halfspace() {
        // y1 + y2 ≥ 1  ⇔  −y1 − y2 ≤ −1; closest point (0.5, 0.5).
        let y = least_distance(&dmatrix![-1.0, -1.0], &dvector![-1.0]).unwrap();
        assert!((y - dvector![0.5, 0.5]).norm() < 1e-12);
    }

    #[test]
    fn least_distance_infeasible() {
        // y ≤ −1 and −y ≤ −1 (y ≥ 1)
        assert!(least_distance(&dmatrix![1.0; -1.0], &dvector![-1.0, -1.0]).is_none());
    }
}
