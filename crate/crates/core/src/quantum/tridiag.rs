//! Lowest eigenpairs of a real symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-sequence bisection, so the k smallest can be
//! extracted without touching the rest of the spectrum; eigenvectors come
//! from shifted inverse iteration on a pivoted tridiagonal LU.

use crate::error::{Error, Result};

/// Absolute bisection tolerance on eigenvalues.
pub const BISECTION_TOL: f64 = 1e-12;
/// Inverse iteration gives up after this many solves.
pub const MAX_INVERSE_ITERS: usize = 50;
/// Convergence threshold on `‖Hψ − Eψ‖∞` for the weighted-normalized ψ.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Number of eigenvalues strictly less than `shift`.
///
/// Counts negative pivots of the LDLᵀ factorization of `T − shift·I`.
pub fn sturm_count(diag: &[f64], offdiag: &[f64], shift: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let guard = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - shift;
    for i in 0..n {
        if i > 0 {
            let e = offdiag[i - 1];
            q = diag[i] - shift - e * e / q;
        }
        if q.abs() < guard {
            // A zero pivot means shift is (numerically) an eigenvalue; nudge
            // so it is counted as not-below.
            q = guard;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval enclosing the whole spectrum.
pub fn gershgorin_bounds(diag: &[f64], offdiag: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { offdiag[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { offdiag[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// The `index`-th smallest eigenvalue (0-based) by bisection.
pub fn bisect_eigenvalue(diag: &[f64], offdiag: &[f64], index: usize, tol: f64) -> f64 {
    let (mut lo, mut hi) = gershgorin_bounds(diag, offdiag);
    let pad = f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
    lo -= pad;
    hi += pad;
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        if sturm_count(diag, offdiag, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Solver for `(T − σI) x = b` via Gaussian elimination with partial pivoting.
/// The upper factor carries up to two superdiagonals.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(diag: &[f64], offdiag: &[f64], shift: f64, pivot_floor: f64) -> Self {
        let n = diag.len();
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        // Current row being eliminated: (a, b, c) at columns (i, i+1, i+2).
        let mut a = diag[0] - shift;
        let mut b = if n > 1 { offdiag[0] } else { 0.0 };
        let mut c = 0.0;
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a.abs() < pivot_floor {
                    pivot_floor.copysign(if a == 0.0 { 1.0 } else { a })
                } else {
                    a
                };
                break;
            }
            // Next row: (sub, d, sup) at columns (i, i+1, i+2).
            let sub = offdiag[i];
            let d = diag[i + 1] - shift;
            let sup = if i + 2 < n { offdiag[i + 1] } else { 0.0 };
            if sub.abs() > a.abs() {
                swapped[i] = true;
                u0[i] = sub;
                u1[i] = d;
                u2[i] = sup;
                let m = a / sub;
                mult[i] = m;
                a = b - m * d;
                b = c - m * sup;
            } else {
                let piv = if a.abs() < pivot_floor {
                    pivot_floor.copysign(if a == 0.0 { 1.0 } else { a })
                } else {
                    a
                };
                u0[i] = piv;
                u1[i] = b;
                u2[i] = c;
                let m = sub / piv;
                mult[i] = m;
                a = d - m * b;
                b = sup - m * c;
            }
            c = 0.0;
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                rhs.swap(i, i + 1);
            }
            rhs[i + 1] -= self.mult[i] * rhs[i];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= self.u1[i] * rhs[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * rhs[i + 2];
            }
            rhs[i] = s / self.u0[i];
        }
    }
}

fn matvec_residual(diag: &[f64], offdiag: &[f64], energy: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut hv = (diag[i] - energy) * v[i];
        if i > 0 {
            hv += offdiag[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            hv += offdiag[i] * v[i + 1];
        }
        worst = worst.max(hv.abs());
    }
    worst
}

/// Eigenvalues ascending with eigenvectors normalized to `Σ v² · weight = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// The `k` algebraically smallest eigenpairs.
pub fn lowest_eigenpairs(diag: &[f64], offdiag: &[f64], k: usize, weight: f64) -> Result<Eigenpairs> {
    let n = diag.len();
    if offdiag.len() + 1 != n {
        return Err(Error::Shape(format!(
            "tridiagonal with {n} diagonal entries needs {} off-diagonal entries, got {}",
            n.saturating_sub(1),
            offdiag.len()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    if diag.iter().chain(offdiag).any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    if !(weight > 0.0) {
        return Err(Error::Config(format!("normalization weight must be positive, got {weight}")));
    }

    let (lo, hi) = gershgorin_bounds(diag, offdiag);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let pivot_floor = f64::EPSILON * scale;
    let cert_tol = 4.0 * BISECTION_TOL + 8.0 * f64::EPSILON * scale;

    let mut values = Vec::with_capacity(k);
    for j in 0..k {
        let e = bisect_eigenvalue(diag, offdiag, j, BISECTION_TOL);
        if sturm_count(diag, offdiag, e + cert_tol) < j + 1
            || sturm_count(diag, offdiag, e - cert_tol) > j
        {
            return Err(Error::Solver {
                state: j,
                reason: format!("Sturm count does not certify eigenvalue {e}"),
            });
        }
        values.push(e);
    }

    let norm_scale = weight.sqrt();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &e) in values.iter().enumerate() {
        let lu = ShiftedLu::factor(diag, offdiag, e, pivot_floor);
        // Deterministic start with no special symmetry.
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.7548776662).fract())
            .collect();
        let mut converged = false;
        let mut last_residual = f64::INFINITY;
        for _ in 0..MAX_INVERSE_ITERS {
            lu.solve(&mut v);
            for prev in &vectors {
                let dot: f64 = prev.iter().zip(&v).map(|(p, x)| p * x).sum::<f64>() * weight;
                for (x, p) in v.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt() * norm_scale;
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::Solver {
                    state: j,
                    reason: "inverse iteration collapsed".into(),
                });
            }
            v.iter_mut().for_each(|x| *x /= norm);
            last_residual = matvec_residual(diag, offdiag, e, &v);
            let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            // Floor at what rounding in Hv allows for badly scaled matrices.
            let tol = RESIDUAL_TOL.max(64.0 * f64::EPSILON * scale * vmax);
            if last_residual < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Solver {
                state: j,
                reason: format!(
                    "inverse iteration did not converge in {MAX_INVERSE_ITERS} iterations (residual {last_residual:e})"
                ),
            });
        }
        // Sign convention: first significant entry positive.
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors.push(v);
    }
    Ok(Eigenpairs { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_count_on_diagonal_matrix() {
        let d = [3.0, 1.0, 2.0];
        let e = [0.0, 0.0];
        assert_eq!(sturm_count(&d, &e, 0.5), 0);
        assert_eq!(sturm_count(&d, &e, 1.5), 1);
        assert_eq!(sturm_count(&d, &e, 2.5), 2);
        assert_eq!(sturm_count(&d, &e, 10.0), 3);
    }

    #[test]
    fn three_by_three_closed_form() {
        // diag [1.5, 1, 1.5], off -0.5: char. polynomial roots 0.5, 1.5, 2.
        let pairs = lowest_eigenpairs(&[1.5, 1.0, 1.5], &[-0.5, -0.5], 3, 1.0).unwrap();
        for (got, want) in pairs.values.iter().zip([0.5, 1.5, 2.0]) {
            assert!((got - want).abs() < 1e-11, "{got} vs {want}");
        }
        for (v, &e) in pairs.vectors.iter().zip(&pairs.values) {
            assert!(matvec_residual(&[1.5, 1.0, 1.5], &[-0.5, -0.5], e, v) < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_k() {
        assert!(lowest_eigenpairs(&[1.0, 2.0], &[0.1], 0, 1.0).is_err());
        assert!(lowest_eigenpairs(&[1.0, 2.0], &[0.1], 3, 1.0).is_err());
        assert!(lowest_eigenpairs(&[1.0, 2.0], &[], 1, 1.0).is_err());
    }

    #[test]
    fn one_by_one() {
        let p = lowest_eigenpairs(&[4.0], &[], 1, 0.25).unwrap();
        assert!((p.values[0] - 4.0).abs() < 1e-12);
        assert!((p.vectors[0][0] - 2.0).abs() < 1e-12);
    }
}
