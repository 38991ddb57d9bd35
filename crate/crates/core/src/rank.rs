//! Entrywise rank transform of a symmetric data matrix.
//!
//! The rank matrix replaces each upper-triangle entry by its ordinal rank
//! among all `N = n(n-1)/2` entries, divided by `N + 1`. Under the null of
//! i.i.d. continuous entries its packed values are a uniformly random
//! permutation of `{1/(N+1), ..., N/(N+1)}`, whatever the entry law.

use std::ops::Deref;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{packed_len, SymmetricMatrix};
use crate::rng::seeded_rng;

/// What to do when two data entries compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum TiePolicy {
    /// Refuse to rank data containing ties.
    Error,
    /// Hand each tied group a uniformly random permutation of its ranks.
    ///
    /// The shuffle uses its own generator seeded with `seed`, so the output
    /// is a deterministic function of the data and the seed.
    Random { seed: u64 },
}

impl Default for TiePolicy {
    fn default() -> Self {
        TiePolicy::Error
    }
}

/// A symmetric matrix whose packed values are exactly `{k/(N+1) : k = 1..N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    inner: SymmetricMatrix,
}

impl Deref for RankMatrix {
    type Target = SymmetricMatrix;

    fn deref(&self) -> &SymmetricMatrix {
        &self.inner
    }
}

impl RankMatrix {
    /// Builds the rank matrix from integer ranks (1-based) in pack order.
    ///
    /// `ranks` must be a permutation of `1..=N`.
    pub fn from_ranks(n: usize, ranks: &[usize]) -> Result<Self> {
        let len = packed_len(n);
        if n < 2 {
            return Err(Error::Dimension { n, min: 2 });
        }
        if ranks.len() != len {
            return Err(Error::Length {
                expected: len,
                got: ranks.len(),
            });
        }
        let mut seen = vec![false; len];
        for &r in ranks {
            if r == 0 || r > len || std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::Parameter(format!(
                    "ranks are not a permutation of 1..={len}"
                )));
            }
        }
        let denom = (len + 1) as f64;
        let values = ranks.iter().map(|&r| r as f64 / denom).collect();
        Ok(Self {
            inner: SymmetricMatrix::new(n, values)?,
        })
    }

    /// Integer ranks `(N+1) * R_ij`, recovered exactly.
    pub fn ranks(&self) -> Vec<usize> {
        let denom = (self.len() + 1) as f64;
        self.values()
            .iter()
            .map(|&v| (v * denom).round() as usize)
            .collect()
    }

    /// Wraps values already known to be a scaled rank permutation.
    pub(crate) fn from_matrix_unchecked(inner: SymmetricMatrix) -> Self {
        Self { inner }
    }

    pub fn as_matrix(&self) -> &SymmetricMatrix {
        &self.inner
    }

    pub fn into_inner(self) -> SymmetricMatrix {
        self.inner
    }
}

/// Order-preserving integer key; `-0.0` and `0.0` map to the same key so that
/// ties follow `f64` equality.
#[inline]
fn order_key(v: f64) -> u64 {
    let v = if v == 0.0 { 0.0 } else { v };
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

pub fn rank_transform(a: &SymmetricMatrix, policy: TiePolicy) -> Result<RankMatrix> {
    let values = a.values();
    let len = values.len();
    if let Some(index) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::NonFinite { index });
    }
    let mut keyed: Vec<(u64, u32)> = values
        .iter()
        .enumerate()
        .map(|(k, &v)| (order_key(v), k as u32))
        .collect();
    // Index is the secondary key, which makes the unstable sort stable.
    keyed.sort_unstable();

    let mut ranks = vec![0usize; len];
    let mut tie_rng = None;
    let mut tied = 0usize;
    let mut start = 0;
    while start < len {
        let mut end = start + 1;
        while end < len && keyed[end].0 == keyed[start].0 {
            end += 1;
        }
        if end - start == 1 {
            ranks[keyed[start].1 as usize] = start + 1;
        } else {
            tied += end - start;
            match policy {
                TiePolicy::Error => {}
                TiePolicy::Random { seed } => {
                    let rng = tie_rng.get_or_insert_with(|| seeded_rng(seed));
                    let mut contested: Vec<usize> = (start + 1..=end).collect();
                    contested.shuffle(rng);
                    for (slot, r) in keyed[start..end].iter().zip(contested) {
                        ranks[slot.1 as usize] = r;
                    }
                }
            }
        }
        start = end;
    }
    if tied > 0 && policy == TiePolicy::Error {
        return Err(Error::Ties { count: tied });
    }

    let denom = (len + 1) as f64;
    let out = ranks.into_iter().map(|r| r as f64 / denom).collect();
    Ok(RankMatrix {
        inner: SymmetricMatrix::new(a.n(), out)?,
    })
}

/// Exact finite-`n` moments of a null rank matrix and the leading-eigenvalue
/// normalization built from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WwMoments {
    pub n: usize,
    pub big_n: usize,
    /// Variance of one off-diagonal entry, `1/12 - 1/(6(N+1))`.
    pub sigma_sq: f64,
    /// Covariance of two distinct entries, `-1/(12(N+1))`.
    pub cov: f64,
    /// `sqrt(8 sigma_sq^2 / n)`.
    pub sigma_tilde: f64,
    /// `(n-1)/2 + 2 sigma_sq`.
    pub centering: f64,
}

pub fn moments(n: usize) -> Result<WwMoments> {
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    let big_n = packed_len(n);
    let np1 = (big_n + 1) as f64;
    // 1/12 - 1/(6(N+1)) = (N-1)/(12(N+1)), without the cancellation.
    let sigma_sq = (big_n - 1) as f64 / (12.0 * np1);
    let cov = -1.0 / (12.0 * np1);
    let sigma_tilde = (8.0 * sigma_sq * sigma_sq / n as f64).sqrt();
    let centering = (n - 1) as f64 / 2.0 + 2.0 * sigma_sq;
    Ok(WwMoments {
        n,
        big_n,
        sigma_sq,
        cov,
        sigma_tilde,
        centering,
    })
}

/// `(R - E R) / sigma_n`: unit-variance off-diagonal entries.
pub fn whiten(r: &RankMatrix) -> Result<SymmetricMatrix> {
    let n = r.n();
    let m = moments(n)?;
    if m.sigma_sq <= 0.0 {
        return Err(Error::DegenerateVariance { n });
    }
    let sigma = m.sigma_sq.sqrt();
    Ok(r.map(|v| (v - 0.5) / sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: usize, v: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::new(n, v.to_vec()).unwrap()
    }

    #[test]
    fn ranks_small_example() {
        let r = rank_transform(&sym(3, &[0.9, 0.1, 0.5]), TiePolicy::Error).unwrap();
        assert_eq!(r.values(), &[0.75, 0.25, 0.5]);
        assert_eq!(r.ranks(), vec![3, 1, 2]);
    }

    #[test]
    fn single_entry_is_one_half() {
        let r = rank_transform(&sym(2, &[-17.0]), TiePolicy::Error).unwrap();
        assert_eq!(r.values(), &[0.5]);
    }

    #[test]
    fn ties_error_by_default() {
        let a = sym(3, &[1.0, 1.0, 2.0]);
        assert!(matches!(
            rank_transform(&a, TiePolicy::default()),
            Err(Error::Ties { count: 2 })
        ));
        // signed zeros compare equal
        let a = sym(3, &[0.0, -0.0, 2.0]);
        assert!(rank_transform(&a, TiePolicy::Error).is_err());
    }

    #[test]
    fn random_ties_take_contested_ranks() {
        let a = sym(4, &[-1e3, 7.0, 7.0, 7.0, -2.0, 1e9]);
        let mut orders = std::collections::HashSet::new();
        for seed in 0..200 {
            let r = rank_transform(&a, TiePolicy::Random { seed }).unwrap();
            let ranks = r.ranks();
            let mut sorted = ranks.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![1, 2, 3, 4, 5, 6]);
            assert_eq!((ranks[0], ranks[4], ranks[5]), (1, 2, 6));
            let mut mid = vec![ranks[1], ranks[2], ranks[3]];
            orders.insert(mid.clone());
            mid.sort_unstable();
            assert_eq!(mid, vec![3, 4, 5]);
        }
        // all 3! assignments are reachable
        assert_eq!(orders.len(), 6);
        // and a given seed is deterministic
        let p = TiePolicy::Random { seed: 11 };
        assert_eq!(rank_transform(&a, p).unwrap(), rank_transform(&a, p).unwrap());
    }

    #[test]
    fn nan_is_rejected() {
        let a = sym(3, &[1.0, f64::NAN, 2.0]);
        assert!(matches!(
            rank_transform(&a, TiePolicy::Error),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn infinities_rank_at_the_ends() {
        let a = sym(3, &[f64::INFINITY, 0.0, f64::NEG_INFINITY]);
        let r = rank_transform(&a, TiePolicy::Error).unwrap();
        assert_eq!(r.ranks(), vec![3, 2, 1]);
    }

    #[test]
    fn moments_small_n() {
        let m2 = moments(2).unwrap();
        assert_eq!(m2.sigma_sq, 0.0);
        let m3 = moments(3).unwrap();
        // N = 3: 1/12 - 1/24 = 1/24, cov = -1/48.
        assert!((m3.sigma_sq - 1.0 / 24.0).abs() < 1e-16);
        assert!((m3.cov + 1.0 / 48.0).abs() < 1e-16);
        assert!((m3.sigma_tilde - (8.0_f64 / 3.0).sqrt() / 24.0).abs() < 1e-16);
        assert!((m3.centering - (1.0 + 2.0 / 24.0)).abs() < 1e-15);
        assert!(moments(1).is_err());
    }

    #[test]
    fn moments_n_2000() {
        let m = moments(2000).unwrap();
        let big_n = 1999000.0_f64;
        let s = 1.0 / 12.0 - 1.0 / (6.0 * (big_n + 1.0));
        assert!((m.sigma_sq - s).abs() < 1e-17);
        assert!((m.sigma_sq - 0.0833332).abs() < 1e-7);
        assert!((m.sigma_tilde - 5.27e-3).abs() < 5e-6);
        assert!((m.centering - 999.6667).abs() < 1e-4);
    }

    #[test]
    fn sigma_sq_increases_to_one_twelfth() {
        let mut prev = -1.0;
        for n in 2..300 {
            let s = moments(n).unwrap().sigma_sq;
            assert!(s > prev && s < 1.0 / 12.0);
            prev = s;
        }
    }

    #[test]
    fn whiten_small_example() {
        let r = RankMatrix::from_ranks(3, &[3, 1, 2]).unwrap();
        let w = whiten(&r).unwrap();
        let sigma = (1.0_f64 / 24.0).sqrt();
        assert!((w.values()[0] - 0.25 / sigma).abs() < 1e-14);
        assert!((w.values()[1] + 0.25 / sigma).abs() < 1e-14);
        assert_eq!(w.values()[2], 0.0);
        assert!(w.values().iter().sum::<f64>().abs() < 1e-13);
        let r2 = RankMatrix::from_ranks(2, &[1]).unwrap();
        assert!(matches!(whiten(&r2), Err(Error::DegenerateVariance { n: 2 })));
    }

    #[test]
    fn from_ranks_validates_permutation() {
        assert!(RankMatrix::from_ranks(3, &[1, 1, 2]).is_err());
        assert!(RankMatrix::from_ranks(3, &[1, 2, 4]).is_err());
        assert!(RankMatrix::from_ranks(3, &[1, 2]).is_err());
    }
}
