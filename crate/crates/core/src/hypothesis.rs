//! Spectral tests for latent structure on the rank matrix.
//!
//! The eigenvalue statistic standardizes the leading eigenvalue of the rank
//! matrix by its exact null centering and scale and is asymptotically
//! `N(0, 1)` under the null whatever the (continuous) entry law. The
//! eigenvector statistic does the same for `u1' u_hat`.

use rand::Rng;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::models::EntryDistribution;
use crate::rank::{moments, rank_transform, RankMatrix, TiePolicy, WwMoments};
use crate::rng::seeded_rng;
use crate::spectra::{leading_eigenpair, EigenPair, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Upper 0.025 quantile of the standard normal.
pub const Z_0025: f64 = 1.9599639845;

/// Default number of pairs for the Monte Carlo separation estimate.
pub const E1F2_DEFAULT_SAMPLES: usize = 1_000_000;

/// `Phi(x)`, via the complementary error function; clamped for `|x| > 40`.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x > 40.0 {
        1.0
    } else if x < -40.0 {
        0.0
    } else {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }
}

/// `(lambda1 - centering) / sigma_tilde`.
pub fn eigenvalue_statistic(lambda1: f64, n: usize) -> Result<f64> {
    let m = nondegenerate_moments(n)?;
    Ok((lambda1 - m.centering) / m.sigma_tilde)
}

/// `n (u1' u_hat - 1 + 1/(6n)) / sigma_tilde` with `u1 = n^{-1/2} 1`.
///
/// `uhat` must be a unit vector signed so that its entries sum to a
/// positive number.
pub fn eigenvector_statistic(uhat: &[f64], n: usize) -> Result<f64> {
    if uhat.len() != n {
        return Err(Error::Length {
            expected: n,
            got: uhat.len(),
        });
    }
    let m = nondegenerate_moments(n)?;
    let norm = uhat.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotUnit { norm });
    }
    let sum: f64 = uhat.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Parameter(
            "eigenvector must be signed with a positive entry sum".into(),
        ));
    }
    let nf = n as f64;
    let align = sum / nf.sqrt();
    Ok(nf * (align - 1.0 + 1.0 / (6.0 * nf)) / m.sigma_tilde)
}

fn nondegenerate_moments(n: usize) -> Result<WwMoments> {
    if n < 3 {
        return Err(Error::DegenerateVariance { n });
    }
    moments(n)
}

/// Rejection region of the eigenvalue test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    TwoSided,
    /// Reject for large statistics only.
    Upper,
    /// Reject for small statistics only.
    Lower,
}

impl Tail {
    pub fn p_value(self, t: f64) -> f64 {
        match self {
            Tail::TwoSided => (2.0 * std_normal_cdf(-t.abs())).min(1.0),
            Tail::Upper => std_normal_cdf(-t),
            Tail::Lower => std_normal_cdf(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub n: usize,
    pub lambda1: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub moments: WwMoments,
    /// `u1' u_hat`.
    pub u1_dot_uhat: f64,
    pub tail: Tail,
}

impl TestResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl Serialize for TestResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TestResult", 10)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("lambda1", &self.lambda1)?;
        st.serialize_field("t_stat", &self.t_stat)?;
        st.serialize_field("p_value", &self.p_value)?;
        st.serialize_field("alpha", &self.alpha)?;
        st.serialize_field("reject", &self.reject)?;
        st.serialize_field("sigma_sq", &self.moments.sigma_sq)?;
        st.serialize_field("sigma_tilde", &self.moments.sigma_tilde)?;
        st.serialize_field("centering", &self.moments.centering)?;
        st.serialize_field("u1_dot_uhat", &self.u1_dot_uhat)?;
        st.end()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Eigenvalue test on an already ranked matrix; also returns the leading pair.
pub fn test_rank_matrix(r: &RankMatrix, alpha: f64, tail: Tail) -> Result<(TestResult, EigenPair)> {
    check_alpha(alpha)?;
    let n = r.n();
    let m = nondegenerate_moments(n)?;
    let pair = leading_eigenpair(r, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let t_stat = (pair.lambda - m.centering) / m.sigma_tilde;
    let p_value = tail.p_value(t_stat);
    let result = TestResult {
        n,
        lambda1: pair.lambda,
        t_stat,
        p_value,
        alpha,
        reject: p_value < alpha,
        moments: m,
        u1_dot_uhat: pair.alignment_with_ones(),
        tail,
    };
    Ok((result, pair))
}

/// Rank, solve, standardize, decide (two-sided).
pub fn run_test(a: &SymmetricMatrix, alpha: f64, policy: TiePolicy) -> Result<TestResult> {
    run_test_tailed(a, alpha, policy, Tail::TwoSided)
}

pub fn run_test_tailed(
    a: &SymmetricMatrix,
    alpha: f64,
    policy: TiePolicy,
    tail: Tail,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if a.n() < 3 {
        return Err(Error::Dimension { n: a.n(), min: 3 });
    }
    let r = rank_transform(a, policy)?;
    Ok(test_rank_matrix(&r, alpha, tail)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SeparationMethod {
    ClosedForm,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Estimate of `E1F2 = pr(X2 <= X1)`, `X1 ~ F1`, `X2 ~ F2` independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationEstimate {
    pub value: f64,
    pub method: SeparationMethod,
    pub std_error: Option<f64>,
}

/// Closed form when both laws are Gaussian (or identical), Monte Carlo with
/// `samples` pairs otherwise.
pub fn e1f2(
    f1: &EntryDistribution,
    f2: &EntryDistribution,
    samples: usize,
    seed: u64,
) -> Result<SeparationEstimate> {
    f1.validate()?;
    f2.validate()?;
    if f1 == f2 {
        return Ok(SeparationEstimate {
            value: 0.5,
            method: SeparationMethod::ClosedForm,
            std_error: None,
        });
    }
    if let (
        EntryDistribution::Normal { mu: m1, sigma: s1 },
        EntryDistribution::Normal { mu: m2, sigma: s2 },
    ) = (*f1, *f2)
    {
        return Ok(SeparationEstimate {
            value: std_normal_cdf((m1 - m2) / (s1 * s1 + s2 * s2).sqrt()),
            method: SeparationMethod::ClosedForm,
            std_error: None,
        });
    }
    e1f2_monte_carlo(f1, f2, samples, seed)
}

pub fn e1f2_monte_carlo(
    f1: &EntryDistribution,
    f2: &EntryDistribution,
    samples: usize,
    seed: u64,
) -> Result<SeparationEstimate> {
    if samples < 100 {
        return Err(Error::Parameter(format!(
            "Monte Carlo separation needs at least 100 samples, got {samples}"
        )));
    }
    let (s1, s2) = (f1.sampler()?, f2.sampler()?);
    let mut rng = seeded_rng(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x1: f64 = rng.sample(s1);
        let x2: f64 = rng.sample(s2);
        if x2 <= x1 {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(SeparationEstimate {
        value: p,
        method: SeparationMethod::MonteCarlo { samples, seed },
        std_error: Some((p * (1.0 - p) / samples as f64).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(41.0), 1.0);
        assert_eq!(std_normal_cdf(-41.0), 0.0);
        assert!((std_normal_cdf(Z_0025) - 0.975).abs() < 1e-10);
        // The erfc used here is good to about 1e-10 absolute.
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-10);
        assert!((std_normal_cdf(-3.0) / 0.001_349_898_031_630_094_6 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eigenvalue_statistic_examples() {
        let m = moments(50).unwrap();
        assert_eq!(eigenvalue_statistic(m.centering, 50).unwrap(), 0.0);
        let lambda = 1.0 + 2.0 / 24.0 + 8f64.sqrt() / 24.0 / 3f64.sqrt();
        assert!((eigenvalue_statistic(lambda, 3).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            eigenvalue_statistic(1.0, 2),
            Err(Error::DegenerateVariance { n: 2 })
        ));
    }

    #[test]
    fn eigenvector_statistic_at_population_vector() {
        let n = 10;
        let u1 = vec![1.0 / (n as f64).sqrt(); n];
        let m = moments(n).unwrap();
        let t = eigenvector_statistic(&u1, n).unwrap();
        assert!((t - 1.0 / (6.0 * m.sigma_tilde)).abs() < 1e-9);
        assert!(eigenvector_statistic(&[0.5, 0.5], 2).is_err());
        let neg: Vec<f64> = u1.iter().map(|x| -x).collect();
        assert!(eigenvector_statistic(&neg, n).is_err());
    }

    #[test]
    fn e1f2_examples() {
        let n11 = EntryDistribution::Normal { mu: 1.0, sigma: 1.0 };
        let n21 = EntryDistribution::Normal { mu: 2.0, sigma: 1.0 };
        let n12 = EntryDistribution::Normal {
            mu: 1.0,
            sigma: 2f64.sqrt(),
        };
        let p = e1f2(&n11, &n21, 1000, 0).unwrap();
        assert!((p.value - 0.239_750_061_093_476_7).abs() < 1e-12);
        assert_eq!(p.method, SeparationMethod::ClosedForm);
        assert_eq!(e1f2(&n11, &n12, 1000, 0).unwrap().value, 0.5);
        let par = EntryDistribution::Pareto { scale: 1.0, shape: 1.0 };
        assert_eq!(e1f2(&par, &par, 1000, 0).unwrap().value, 0.5);
    }

    #[test]
    fn e1f2_monte_carlo_complementarity() {
        let par = EntryDistribution::Pareto { scale: 0.5, shape: 2.0 };
        let nrm = EntryDistribution::Normal { mu: 1.0, sigma: 0.1 };
        let a = e1f2(&par, &nrm, 200_000, 1).unwrap();
        let b = e1f2(&nrm, &par, 200_000, 2).unwrap();
        let se = (a.std_error.unwrap().powi(2) + b.std_error.unwrap().powi(2)).sqrt();
        assert!((a.value + b.value - 1.0).abs() < 3.0 * se);
        // pr(X1 >= X2) = E[(1/2 / X2)^2] ~ 0.25 (1 + 3 * 0.01) for X2 ~ N(1, 0.1^2)
        assert!((a.value - 0.2575).abs() < 0.01, "{}", a.value);
        assert!(e1f2(&par, &nrm, 99, 0).is_err());
    }

    #[test]
    fn tails() {
        assert!((Tail::TwoSided.p_value(Z_0025) - 0.05).abs() < 1e-10);
        assert!((Tail::Upper.p_value(Z_0025) - 0.025).abs() < 1e-10);
        assert!((Tail::Lower.p_value(Z_0025) - 0.975).abs() < 1e-10);
    }

    #[test]
    fn run_test_rejects_bad_alpha_and_small_n() {
        let a = SymmetricMatrix::new(3, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(run_test(&a, 0.0, TiePolicy::Error).is_err());
        assert!(run_test(&a, 1.0, TiePolicy::Error).is_err());
        let b = SymmetricMatrix::new(2, vec![1.0]).unwrap();
        assert!(run_test(&b, 0.05, TiePolicy::Error).is_err());
    }

    #[test]
    fn run_test_json_schema() {
        let a = SymmetricMatrix::new(3, vec![5.0, 1.0, 3.0]).unwrap();
        let r = run_test(&a, 0.05, TiePolicy::Error).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        for k in [
            "n", "lambda1", "t_stat", "p_value", "alpha", "reject", "sigma_sq", "sigma_tilde",
            "centering", "u1_dot_uhat",
        ] {
            assert!(keys.contains(&k), "missing {k}");
        }
        assert_eq!(v["n"], 3);
        assert!(r.u1_dot_uhat > 0.0 && r.u1_dot_uhat <= 1.0 + 1e-12);
        assert_eq!(r.t_stat, (r.lambda1 - r.moments.centering) / r.moments.sigma_tilde);
    }
}
