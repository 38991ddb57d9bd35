//! Symmetric eigensolvers and spectral summaries.
//!
//! Every solve is single threaded with a fixed accumulation order, so a given
//! matrix always produces bit-identical output.

mod esd;
mod lanczos;
mod tridiag;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub(crate) use esd::ks_sorted;
pub use esd::{esd, semicircle_cdf, semicircle_density, EsdSummary, ESD_RANGE};
pub use lanczos::extreme_eigenvalues;
pub use tridiag::{householder_tridiagonalize, tridiagonal_eigenvalues, Tridiagonal, MAX_QL_SWEEPS};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::rng::seeded_rng;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Largest dimension accepted by [`full_spectrum`].
pub const FULL_SPECTRUM_CAP: usize = 4000;
/// Relative Ritz residual used by [`operator_norm`].
pub const NORM_TOL: f64 = 1e-11;

const RESTART_SEED: u64 = 0x5EED_0F_BAD_5747;

/// A unit eigenvector with its eigenvalue, signed so that its entries sum to
/// a positive number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
}

impl EigenPair {
    /// `||M v - lambda v||_2`.
    pub fn residual(&self, m: &SymmetricMatrix) -> f64 {
        let mv = m.matvec(&self.vector);
        mv.iter()
            .zip(&self.vector)
            .map(|(a, v)| (a - self.lambda * v).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `u1' v` with `u1 = n^{-1/2} 1`.
    pub fn alignment_with_ones(&self) -> f64 {
        self.vector.iter().sum::<f64>() / (self.vector.len() as f64).sqrt()
    }
}

/// Residual scale `|lambda| + ||M||_F / sqrt(n)` used by the convergence test.
pub fn residual_scale(m: &SymmetricMatrix, lambda: f64) -> f64 {
    lambda.abs() + m.frobenius_norm() / (m.n() as f64).sqrt()
}

struct PowerOutcome {
    lambda: f64,
    vector: Vec<f64>,
}

/// Spectral transform `x -> sign (M x - shift x)` iterated by [`power_iterate`].
#[derive(Clone, Copy)]
struct Shift {
    shift: f64,
    sign: f64,
}

const NO_SHIFT: Shift = Shift {
    shift: 0.0,
    sign: 1.0,
};

impl Shift {
    fn apply(self, m: &SymmetricMatrix, v: &[f64], w: &mut [f64]) {
        m.matvec_into(v, w);
        if self.shift != 0.0 || self.sign != 1.0 {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi = self.sign * (*wi - self.shift * vi);
            }
        }
    }
}

fn power_iterate(
    m: &SymmetricMatrix,
    mut v: Vec<f64>,
    tol: f64,
    max_iter: usize,
    fro_over_sqrt_n: f64,
    op: Shift,
) -> Result<PowerOutcome> {
    let n = m.n();
    let mut w = vec![0.0; n];
    op.apply(m, &v, &mut w);
    let mut lambda = dot(&v, &w);
    let mut streak = 0;
    for _ in 0..max_iter {
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            // v spans the null space of M.
            return Ok(PowerOutcome {
                lambda: op.shift,
                vector: v,
            });
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        op.apply(m, &v, &mut w);
        let next = dot(&v, &w);
        let residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - next * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let change = (next - lambda).abs() / next.abs().max(f64::MIN_POSITIVE);
        lambda = next;
        streak = if change < tol { streak + 1 } else { 0 };
        // The residual is the same for M and its shifted form.
        let lambda_m = op.sign * lambda + op.shift;
        if streak >= 2 && residual <= tol * (lambda_m.abs() + fro_over_sqrt_n) {
            return Ok(PowerOutcome {
                lambda: lambda_m,
                vector: v,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
    })
}

/// Leading eigenpair by power iteration started from `n^{-1/2} 1`.
///
/// Convergence requires the relative Rayleigh-quotient change to stay below
/// `tol` for two consecutive iterations and the residual to satisfy
/// `||M v - lambda v|| <= tol (|lambda| + ||M||_F / sqrt n)`.
///
/// If the converged value is less than half the start vector's Rayleigh
/// quotient in modulus the start was deficient in the dominant direction
/// (the dominant eigenvalue can never be smaller than that quotient), and
/// the iteration is repeated once from a fixed seeded random vector.
pub fn leading_eigenpair(m: &SymmetricMatrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    let n = m.n();
    let fro_over_sqrt_n = m.frobenius_norm() / (n as f64).sqrt();
    let start = vec![1.0 / (n as f64).sqrt(); n];
    let start_rq = m.total_sum() / n as f64;

    let mut out = match power_iterate(m, start.clone(), tol, max_iter, fro_over_sqrt_n, NO_SHIFT) {
        Err(Error::NoConvergence { .. }) => {
            return finish(shifted_fallback(m, start, tol, max_iter, fro_over_sqrt_n)?);
        }
        other => other?,
    };
    if out.lambda.abs() < 0.5 * start_rq.abs() {
        let mut rng = seeded_rng(RESTART_SEED);
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        out = power_iterate(m, v, tol, max_iter, fro_over_sqrt_n, NO_SHIFT)?;
    }
    finish(out)
}

/// Power iteration on `M - lo I` (or `hi I - M` when the negative edge
/// dominates), with the edges `lo`, `hi` from Lanczos. Used when `lambda_1`
/// and `lambda_n` are nearly equal in modulus and plain iteration stalls.
fn shifted_fallback(
    m: &SymmetricMatrix,
    start: Vec<f64>,
    tol: f64,
    max_iter: usize,
    fro_over_sqrt_n: f64,
) -> Result<PowerOutcome> {
    let (lo, hi) = extreme_eigenvalues(m, NORM_TOL)?;
    let op = if hi.abs() >= lo.abs() {
        Shift { shift: lo, sign: 1.0 }
    } else {
        Shift { shift: hi, sign: -1.0 }
    };
    power_iterate(m, start, tol, max_iter, fro_over_sqrt_n, op)
}

fn finish(out: PowerOutcome) -> Result<EigenPair> {
    let PowerOutcome { lambda, mut vector } = out;
    let norm = dot(&vector, &vector).sqrt();
    vector.iter_mut().for_each(|x| *x /= norm);
    let sum: f64 = vector.iter().sum();
    let flip = if sum != 0.0 {
        sum < 0.0
    } else {
        vector.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0)
    };
    if flip {
        vector.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(EigenPair { lambda, vector })
}

/// All eigenvalues, sorted descending.
pub fn full_spectrum(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    full_spectrum_capped(m, FULL_SPECTRUM_CAP)
}

pub fn full_spectrum_capped(m: &SymmetricMatrix, cap: usize) -> Result<Vec<f64>> {
    if m.n() > cap {
        return Err(Error::CapExceeded { n: m.n(), cap });
    }
    let t = householder_tridiagonalize(m);
    let mut ev = tridiagonal_eigenvalues(&t, None)?;
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Spectral norm `max(|lambda_max|, |lambda_min|)`.
pub fn operator_norm(m: &SymmetricMatrix) -> Result<f64> {
    let (lo, hi) = extreme_eigenvalues(m, NORM_TOL)?;
    Ok(lo.abs().max(hi.abs()))
}

/// `||u u' - v v'||_F^2 = 2 (1 - (u'v)^2)` for unit vectors.
pub fn subspace_distance_sq(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Length {
            expected: u.len(),
            got: v.len(),
        });
    }
    for x in [u, v] {
        let norm = dot(x, x).sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotUnit { norm });
        }
    }
    let t = dot(u, v);
    Ok((2.0 * (1.0 - t * t)).max(0.0))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::expectation_matrix;
    use crate::rank::RankMatrix;

    fn sym(n: usize, v: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::new(n, v.to_vec()).unwrap()
    }

    #[test]
    fn leading_pair_of_expectation_matrix() {
        let m = expectation_matrix(5).unwrap();
        let p = leading_eigenpair(&m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((p.lambda - 2.0).abs() < 1e-12);
        for x in &p.vector {
            assert!((x - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn leading_pair_two_by_two() {
        let p = leading_eigenpair(&sym(2, &[0.5]), DEFAULT_TOL, 100).unwrap();
        assert!((p.lambda - 0.5).abs() < 1e-15);
        assert!((p.vector[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p.vector[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn leading_pair_matches_full_spectrum_on_rank_matrix() {
        let r = RankMatrix::from_ranks(4, &[1, 2, 3, 4, 5, 6]).unwrap();
        let p = leading_eigenpair(&r, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let ev = full_spectrum(&r).unwrap();
        assert!((p.lambda - ev[0]).abs() < 1e-9);
        assert!(p.residual(&r) <= DEFAULT_TOL * residual_scale(&r, p.lambda));
        assert!(p.vector.iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn near_symmetric_spectrum_uses_the_shifted_fallback() {
        // Eigenvalues close to +-0.814: plain iteration stalls.
        let m = sym(3, &[0.6, 0.55, 1e-4]);
        let ev = full_spectrum(&m).unwrap();
        let p = leading_eigenpair(&m, DEFAULT_TOL, 2_000).unwrap();
        assert!((p.lambda - ev[0]).abs() < 1e-10);
        assert!(p.residual(&m) <= DEFAULT_TOL * residual_scale(&m, p.lambda));
        let neg = m.scale(-1.0);
        let q = leading_eigenpair(&neg, DEFAULT_TOL, 2_000).unwrap();
        assert!((q.lambda + ev[0]).abs() < 1e-10);
    }

    #[test]
    fn full_spectrum_examples() {
        let ev = full_spectrum(&sym(2, &[1.0])).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] + 1.0).abs() < 1e-15);
        let ev = full_spectrum(&expectation_matrix(3).unwrap()).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14);
        assert!((ev[1] + 0.5).abs() < 1e-14 && (ev[2] + 0.5).abs() < 1e-14);
        let r = RankMatrix::from_ranks(4, &[4, 2, 6, 1, 5, 3]).unwrap();
        let ev = full_spectrum(&r).unwrap();
        assert!(ev.iter().sum::<f64>().abs() < 1e-13);
    }

    #[test]
    fn full_spectrum_cap() {
        let m = expectation_matrix(10).unwrap();
        assert!(matches!(
            full_spectrum_capped(&m, 5),
            Err(Error::CapExceeded { n: 10, cap: 5 })
        ));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&expectation_matrix(3).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((operator_norm(&sym(2, &[-2.0])).unwrap() - 2.0).abs() < 1e-12);
        let zero = SymmetricMatrix::new(3, vec![0.0; 3]).unwrap();
        assert_eq!(operator_norm(&zero).unwrap(), 0.0);
    }

    #[test]
    fn subspace_distance_examples() {
        let u = [1.0, 0.0];
        let v = [0.0, 1.0];
        assert_eq!(subspace_distance_sq(&u, &u).unwrap(), 0.0);
        assert_eq!(subspace_distance_sq(&u, &v).unwrap(), 2.0);
        let w = [0.5, 0.75f64.sqrt()];
        assert!((subspace_distance_sq(&u, &w).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(
            subspace_distance_sq(&[1.0, 1.0], &u),
            Err(Error::NotUnit { .. })
        ));
    }
}
