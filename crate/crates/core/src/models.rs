//! Random data generators: homogeneous matrices, balanced two-block
//! community matrices, planted principal submatrices, and the family that
//! interpolates between rank matrices and i.i.d. uniform matrices.
//!
//! Block memberships are deterministic (first indices): ranking is
//! label-permutation equivariant, so the test statistic does not depend on
//! which nodes carry which label.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Pareto, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{packed_len, SymmetricMatrix};
use crate::rank::RankMatrix;

/// Absolutely continuous entry laws.
///
/// `Normal` takes a standard deviation; `Pareto` is `(scale, shape)` with
/// density `shape * scale^shape * x^(-shape-1)` on `[scale, inf)`, so
/// `Pareto(1, 1)` has no mean and `Pareto(1/2, 2)` has mean 1 and infinite
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EntryDistribution {
    Normal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Pareto { scale: f64, shape: f64 },
}

impl EntryDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Normal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Self::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            Self::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Self::Pareto { scale, shape } => {
                scale.is_finite() && shape.is_finite() && scale > 0.0 && shape > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Distribution(format!("bad parameters in {self}")))
        }
    }

    pub fn sampler(&self) -> Result<EntrySampler> {
        self.validate()?;
        let bad = |e: &dyn fmt::Display| Error::Distribution(e.to_string());
        Ok(match *self {
            Self::Normal { mu, sigma } => {
                EntrySampler::Normal(Normal::new(mu, sigma).map_err(|e| bad(&e))?)
            }
            Self::Uniform { a, b } => EntrySampler::Uniform(Uniform::new(a, b).map_err(|e| bad(&e))?),
            Self::Exponential { rate } => EntrySampler::Exp(Exp::new(rate).map_err(|e| bad(&e))?),
            Self::Pareto { scale, shape } => {
                EntrySampler::Pareto(Pareto::new(scale, shape).map_err(|e| bad(&e))?)
            }
        })
    }

    /// Mean, if it exists.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            Self::Normal { mu, .. } => Some(mu),
            Self::Uniform { a, b } => Some(0.5 * (a + b)),
            Self::Exponential { rate } => Some(1.0 / rate),
            Self::Pareto { scale, shape } => (shape > 1.0).then(|| shape * scale / (shape - 1.0)),
        }
    }

    /// `pr(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mu, sigma } => crate::hypothesis::std_normal_cdf((mu - x) / sigma),
            Self::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Self::Pareto { scale, shape } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(shape)
                }
            }
        }
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Normal { mu, sigma } => write!(f, "normal({mu},{sigma})"),
            Self::Uniform { a, b } => write!(f, "uniform({a},{b})"),
            Self::Exponential { rate } => write!(f, "exponential({rate})"),
            Self::Pareto { scale, shape } => write!(f, "pareto({scale},{shape})"),
        }
    }
}

impl FromStr for EntryDistribution {
    type Err = Error;

    /// Parses `normal(mu,sigma)`, `uniform(a,b)`, `exponential(rate)` or
    /// `pareto(scale,shape)`. Error positions are 0-based byte offsets.
    fn from_str(s: &str) -> Result<Self> {
        let spec_err = |pos: usize, msg: String| Error::Spec { pos, msg };
        let open = s
            .find('(')
            .ok_or_else(|| spec_err(s.len(), "expected '('".into()))?;
        let name = s[..open].trim().to_ascii_lowercase();
        let close = s
            .rfind(')')
            .filter(|&c| c > open)
            .ok_or_else(|| spec_err(s.len(), "expected ')'".into()))?;
        if !s[close + 1..].trim().is_empty() {
            return Err(spec_err(close + 1, "trailing characters after ')'".into()));
        }
        let mut args = Vec::new();
        let mut pos = open + 1;
        for tok in s[open + 1..close].split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| spec_err(pos, format!("'{}' is not a number", tok.trim())))?;
            args.push((pos, v));
            pos += tok.len() + 1;
        }
        let arity = |want: usize| -> Result<()> {
            if args.len() == want {
                Ok(())
            } else {
                Err(spec_err(
                    open,
                    format!("{name} takes {want} parameter(s), got {}", args.len()),
                ))
            }
        };
        let dist = match name.as_str() {
            "normal" | "gaussian" => {
                arity(2)?;
                Self::Normal {
                    mu: args[0].1,
                    sigma: args[1].1,
                }
            }
            "uniform" => {
                arity(2)?;
                Self::Uniform {
                    a: args[0].1,
                    b: args[1].1,
                }
            }
            "exponential" | "exp" => {
                arity(1)?;
                Self::Exponential { rate: args[0].1 }
            }
            "pareto" => {
                arity(2)?;
                Self::Pareto {
                    scale: args[0].1,
                    shape: args[1].1,
                }
            }
            other => return Err(spec_err(0, format!("unknown distribution '{other}'"))),
        };
        dist.validate()
            .map_err(|_| spec_err(open + 1, format!("invalid parameters for {name}")))?;
        Ok(dist)
    }
}

impl TryFrom<String> for EntryDistribution {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EntryDistribution> for String {
    fn from(d: EntryDistribution) -> String {
        d.to_string()
    }
}

/// A validated, ready-to-draw distribution.
#[derive(Debug, Clone, Copy)]
pub enum EntrySampler {
    Normal(Normal<f64>),
    Uniform(Uniform<f64>),
    Exp(Exp<f64>),
    Pareto(Pareto<f64>),
}

impl Distribution<f64> for EntrySampler {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal(d) => d.sample(rng),
            Self::Uniform(d) => d.sample(rng),
            Self::Exp(d) => d.sample(rng),
            Self::Pareto(d) => d.sample(rng),
        }
    }
}

/// Latent node labels of a generated matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockAssignment {
    /// Balanced `+1/-1` labels.
    TwoBlock { theta: Vec<i8> },
    /// Indicator of the planted submatrix.
    Planted { members: Vec<bool> },
    None,
}

impl BlockAssignment {
    pub fn two_block(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Parameter(format!(
                "two-block model needs an even n >= 2, got {n}"
            )));
        }
        let theta = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
        Ok(Self::TwoBlock { theta })
    }

    pub fn planted(n: usize, n1: usize) -> Result<Self> {
        if n1 < 1 || n1 >= n {
            return Err(Error::Parameter(format!(
                "planted size must satisfy 1 <= n1 < n, got n1 = {n1}, n = {n}"
            )));
        }
        Ok(Self::Planted {
            members: (0..n).map(|i| i < n1).collect(),
        })
    }

    /// Whether pair `(i, j)` is drawn from the first distribution.
    #[inline]
    pub fn is_inner(&self, i: usize, j: usize) -> bool {
        match self {
            Self::TwoBlock { theta } => theta[i] == theta[j],
            Self::Planted { members } => members[i] && members[j],
            Self::None => true,
        }
    }
}

pub fn sample_homogeneous<R: Rng + ?Sized>(
    n: usize,
    f: &EntryDistribution,
    rng: &mut R,
) -> Result<SymmetricMatrix> {
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    let s = f.sampler()?;
    let values = (0..packed_len(n)).map(|_| s.sample(rng)).collect();
    SymmetricMatrix::new(n, values)
}

fn sample_blocked<R: Rng + ?Sized>(
    n: usize,
    blocks: &BlockAssignment,
    f1: &EntryDistribution,
    f2: &EntryDistribution,
    rng: &mut R,
) -> Result<SymmetricMatrix> {
    let (s1, s2) = (f1.sampler()?, f2.sampler()?);
    SymmetricMatrix::from_fn(n, |i, j| {
        if blocks.is_inner(i, j) {
            s1.sample(rng)
        } else {
            s2.sample(rng)
        }
    })
}

/// Balanced two-block matrix: `F1` within blocks, `F2` across.
pub fn sample_two_block<R: Rng + ?Sized>(
    n: usize,
    f1: &EntryDistribution,
    f2: &EntryDistribution,
    rng: &mut R,
) -> Result<(SymmetricMatrix, BlockAssignment)> {
    let blocks = BlockAssignment::two_block(n)?;
    let m = sample_blocked(n, &blocks, f1, f2, rng)?;
    Ok((m, blocks))
}

/// `F1` on the leading `n1 x n1` principal block, `F2` elsewhere.
pub fn sample_planted_submatrix<R: Rng + ?Sized>(
    n: usize,
    n1: usize,
    f1: &EntryDistribution,
    f2: &EntryDistribution,
    rng: &mut R,
) -> Result<(SymmetricMatrix, BlockAssignment)> {
    let blocks = BlockAssignment::planted(n, n1)?;
    let m = sample_blocked(n, &blocks, f1, f2, rng)?;
    Ok((m, blocks))
}

/// Number of surplus candidate ranks in the interpolation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtraRanks {
    Finite(usize),
    /// i.i.d. `Uniform(0, 1)` entries.
    Infinite,
}

impl fmt::Display for ExtraRanks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(k) => write!(f, "{k}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

/// Largest finite `k` accepted, as a multiple of `N`.
pub const MAX_EXTRA_RANK_FACTOR: usize = 10;

/// Draws the `N` packed values without replacement from
/// `{1/(N_k+1), ..., N_k/(N_k+1)}`, `N_k = N + k`, via a partial
/// Fisher-Yates shuffle. `k = 0` is exactly the null rank matrix law.
pub fn sample_interpolated_rank<R: Rng + ?Sized>(
    n: usize,
    k: ExtraRanks,
    rng: &mut R,
) -> Result<SymmetricMatrix> {
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    let big_n = packed_len(n);
    let values = match k {
        ExtraRanks::Infinite => (0..big_n).map(|_| rng.random::<f64>()).collect(),
        ExtraRanks::Finite(k) => {
            if k > MAX_EXTRA_RANK_FACTOR * big_n {
                return Err(Error::Parameter(format!(
                    "k = {k} exceeds {MAX_EXTRA_RANK_FACTOR} N = {}",
                    MAX_EXTRA_RANK_FACTOR * big_n
                )));
            }
            let pool_len = big_n + k;
            let mut pool: Vec<u32> = (1..=pool_len as u32).collect();
            for i in 0..big_n {
                let j = rng.random_range(i..pool_len);
                pool.swap(i, j);
            }
            let denom = (pool_len + 1) as f64;
            pool[..big_n].iter().map(|&r| r as f64 / denom).collect()
        }
    };
    SymmetricMatrix::new(n, values)
}

/// A rank matrix under the null: its packed ranks are a uniform random
/// permutation of `1..=N`.
pub fn sample_null_rank_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RankMatrix> {
    let m = sample_interpolated_rank(n, ExtraRanks::Finite(0), rng)?;
    Ok(RankMatrix::from_matrix_unchecked(m))
}
