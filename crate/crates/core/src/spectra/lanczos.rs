//! Extreme eigenvalues by Lanczos with full reorthogonalization.

use rand_distr::{Distribution, StandardNormal};

use super::tridiag::{tridiagonal_eigenvalues, Tridiagonal};
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::rng::seeded_rng;

const START_SEED: u64 = 0x1A2C_705E_ED00_0001;
const CHECK_EVERY: usize = 4;

/// Smallest and largest eigenvalues of `m`.
///
/// Stops when the Ritz residual bound `beta_j |s_j|` of both extreme Ritz
/// pairs falls below `tol` times the larger Ritz magnitude, or when the
/// Krylov space is exhausted (exact up to rounding).
pub fn extreme_eigenvalues(m: &SymmetricMatrix, tol: f64) -> Result<(f64, f64)> {
    let n = m.n();
    let mut rng = seeded_rng(START_SEED);
    let mut q: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut q);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(64);
    let mut alpha: Vec<f64> = Vec::with_capacity(64);
    let mut beta: Vec<f64> = Vec::with_capacity(64);
    let mut w = vec![0.0; n];
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    basis.push(q);
    for j in 0..n {
        m.matvec_into(&basis[j], &mut w);
        if j > 0 {
            let b = beta[j - 1];
            for (wi, qi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * qi;
            }
        }
        let a = dot(&w, &basis[j]);
        for (wi, qi) in w.iter_mut().zip(&basis[j]) {
            *wi -= a * qi;
        }
        alpha.push(a);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for qk in &basis {
                let c = dot(&w, qk);
                for (wi, qi) in w.iter_mut().zip(qk) {
                    *wi -= c * qi;
                }
            }
        }
        let b = dot(&w, &w).sqrt();
        let exhausted = j + 1 == n || b <= 1e-14 * scale;

        if exhausted || (j + 1) % CHECK_EVERY == 0 {
            let k = j + 1;
            let mut off = vec![0.0; k];
            off[1..].copy_from_slice(&beta[..k - 1]);
            let t = Tridiagonal {
                diag: alpha.clone(),
                off,
            };
            let mut last = vec![0.0; k];
            let theta = tridiagonal_eigenvalues(&t, Some(&mut last))?;
            let (imin, imax) = extremes(&theta);
            if exhausted {
                return Ok((theta[imin], theta[imax]));
            }
            let mag = theta[imin].abs().max(theta[imax].abs());
            let converged = [imin, imax]
                .iter()
                .all(|&i| b * last[i].abs() <= tol * mag.max(f64::MIN_POSITIVE));
            if converged {
                return Ok((theta[imin], theta[imax]));
            }
        }
        beta.push(b);
        let next: Vec<f64> = w.iter().map(|v| v / b).collect();
        basis.push(next);
    }
    Err(Error::NoConvergence { iterations: n })
}

fn extremes(v: &[f64]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[imin] {
            imin = i;
        }
        if *x > v[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}
