//! Seeded Monte Carlo experiments.
//!
//! Every experiment draws replicate `i` from `stream_rng(seed, i)` and reduces
//! in index order, so reports are byte-identical across thread counts once
//! the wall time is dropped (see [`ExperimentReport::to_json_without_timing`]).

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::hypothesis::{eigenvector_statistic, run_test, test_rank_matrix, Tail, Z_0025};
use crate::matrix::SymmetricMatrix;
use crate::models::{
    sample_homogeneous, sample_interpolated_rank, sample_null_rank_matrix,
    sample_planted_submatrix, sample_two_block, EntryDistribution, ExtraRanks,
};
use crate::parallel::{run_replicates, Execution};
use crate::rank::{rank_transform, whiten, TiePolicy};
use crate::rng::{mix_seed, StreamRng};
use crate::spectra::{
    esd, leading_eigenpair, operator_norm, subspace_distance_sq, EsdSummary, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::stats::{self, qq_pairs, QqPoint, Summary};

/// Data-generating model for rejection-rate experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Homogeneous { f: EntryDistribution },
    TwoBlock { f1: EntryDistribution, f2: EntryDistribution },
    Planted { n1: usize, f1: EntryDistribution, f2: EntryDistribution },
}

impl ModelSpec {
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SymmetricMatrix> {
        match self {
            Self::Homogeneous { f } => sample_homogeneous(n, f, rng),
            Self::TwoBlock { f1, f2 } => Ok(sample_two_block(n, f1, f2, rng)?.0),
            Self::Planted { n1, f1, f2 } => Ok(sample_planted_submatrix(n, *n1, f1, f2, rng)?.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Homogeneous { .. } => "homogeneous",
            Self::TwoBlock { .. } => "two_block",
            Self::Planted { .. } => "planted",
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::Homogeneous { f } => f.validate(),
            Self::TwoBlock { f1, f2 } => {
                f1.validate()?;
                f2.validate()?;
                crate::models::BlockAssignment::two_block(n).map(|_| ())
            }
            Self::Planted { n1, f1, f2 } => {
                f1.validate()?;
                f2.validate()?;
                crate::models::BlockAssignment::planted(n, *n1).map(|_| ())
            }
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_scale() -> f64 {
    1.0
}

/// Parameters of a rejection-rate run; also the `--config` file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub id: String,
    pub n: usize,
    #[serde(flatten)]
    pub model: ModelSpec,
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Replicate multiplier the run was scaled by; recorded, not applied.
    #[serde(default = "default_scale")]
    pub scale: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Parameter("replicates must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.n < 3 {
            return Err(Error::Dimension { n: self.n, min: 3 });
        }
        self.model.validate(self.n)
    }

    pub fn execution(&self) -> Execution {
        Execution::with_threads(self.threads)
    }
}

/// Per-replicate statistics, one row per replicate in index order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplicateTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ReplicateTable {
    fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "replicate,{}", self.columns.join(","))?;
        for (i, row) in self.rows.iter().enumerate() {
            write!(w, "{i}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport<S> {
    pub config: serde_json::Value,
    pub summary: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates_path: Option<String>,
    pub elapsed_s: f64,
    #[serde(skip)]
    pub replicates: ReplicateTable,
}

impl<S: Serialize> ExperimentReport<S> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with `elapsed_s` removed.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("elapsed_s");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

fn finish<S>(
    config: serde_json::Value,
    summary: S,
    replicates: ReplicateTable,
    start: Instant,
) -> ExperimentReport<S> {
    ExperimentReport {
        config,
        summary,
        replicates_path: None,
        elapsed_s: start.elapsed().as_secs_f64(),
        replicates,
    }
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates == 0 {
        Err(Error::Parameter("replicates must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        Err(Error::Dimension { n, min: 3 })
    } else {
        Ok(())
    }
}

fn leading(m: &SymmetricMatrix) -> Result<crate::spectra::EigenPair> {
    leading_eigenpair(m, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionSummary {
    pub replicates: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub t_mean: f64,
    pub t_variance: f64,
}

/// Fraction of replicates rejected by the two-sided eigenvalue test.
pub fn rejection_rate_experiment(
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport<RejectionSummary>> {
    cfg.validate()?;
    let start = Instant::now();
    let rows = run_replicates(
        cfg.execution(),
        cfg.replicates,
        cfg.master_seed,
        |_, rng: &mut StreamRng| {
            let a = cfg.model.generate(cfg.n, rng)?;
            let tie_seed = rng.random();
            let r = run_test(&a, cfg.alpha, TiePolicy::Random { seed: tie_seed })?;
            Ok(vec![
                r.lambda1,
                r.t_stat,
                r.p_value,
                if r.reject { 1.0 } else { 0.0 },
            ])
        },
    )?;
    let table = ReplicateTable::new(&["lambda1", "t_stat", "p_value", "reject"], rows);
    let rejections = table.rows.iter().filter(|r| r[3] == 1.0).count();
    let t = table.column("t_stat").unwrap_or_default();
    let summary = RejectionSummary {
        replicates: cfg.replicates,
        rejections,
        rejection_rate: rejections as f64 / cfg.replicates as f64,
        t_mean: stats::mean(&t),
        t_variance: stats::variance(&t),
    };
    Ok(finish(serde_json::to_value(cfg)?, summary, table, start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub k: String,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSummary {
    pub n: usize,
    pub rows: Vec<VarianceRow>,
}

/// Variance of the leading eigenvalue across the interpolation family.
///
/// Each `k` uses its own stream family `mix_seed(seed, position in k_list)`.
pub fn variance_transition_experiment(
    n: usize,
    k_list: &[ExtraRanks],
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<ExperimentReport<VarianceSummary>> {
    check_n(n)?;
    check_replicates(replicates)?;
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (idx, &k) in k_list.iter().enumerate() {
        let lambdas = run_replicates(exec, replicates, mix_seed(seed, idx as u64), |_, rng| {
            let m = sample_interpolated_rank(n, k, rng)?;
            Ok(leading(&m)?.lambda)
        })?;
        rows.push(VarianceRow {
            k: k.to_string(),
            mean: stats::mean(&lambdas),
            variance: stats::variance(&lambdas),
            std_error: stats::variance_std_error(&lambdas),
        });
        table.extend(lambdas.into_iter().map(|l| vec![idx as f64, l]));
    }
    let config = json!({
        "experiment": "variance_transition",
        "n": n,
        "k_list": k_list.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
        "replicates": replicates,
        "master_seed": seed,
    });
    Ok(finish(
        config,
        VarianceSummary { n, rows },
        ReplicateTable::new(&["k_index", "lambda1"], table),
        start,
    ))
}

/// Which null statistic to summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// `T_n`.
    Eigenvalue,
    /// `n sigma_tilde^{-1} (u1' u_hat - 1 + 1/(6n))`.
    Eigenvector,
}

impl Statistic {
    fn column(self) -> &'static str {
        match self {
            Self::Eigenvalue => "t_stat",
            Self::Eigenvector => "eigvec_stat",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Eigenvalue => "eigenvalue",
            Self::Eigenvector => "eigenvector",
        })
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigenvalue" => Ok(Self::Eigenvalue),
            "eigenvector" => Ok(Self::Eigenvector),
            other => Err(Error::Parameter(format!(
                "statistic must be 'eigenvalue' or 'eigenvector', got '{other}'"
            ))),
        }
    }
}

/// Normality diagnostics of a standardized statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub statistic: Statistic,
    #[serde(flatten)]
    pub summary: Summary,
    /// Two-sided rejection frequency at level 0.05.
    pub rejection_rate: f64,
    pub qq: Vec<QqPoint>,
}

impl NullSummary {
    pub fn of(statistic: Statistic, x: &[f64]) -> Self {
        let rejected = x.iter().filter(|t| t.abs() > Z_0025).count();
        Self {
            statistic,
            summary: Summary::of(x),
            rejection_rate: rejected as f64 / x.len() as f64,
            qq: qq_pairs(x),
        }
    }
}

/// Null distribution of `T_n` or of the eigenvector statistic.
///
/// Both statistics are dumped per replicate; `which` selects the summary.
pub fn null_distribution_experiment(
    n: usize,
    replicates: usize,
    seed: u64,
    which: Statistic,
    exec: Execution,
) -> Result<ExperimentReport<NullSummary>> {
    check_n(n)?;
    check_replicates(replicates)?;
    let start = Instant::now();
    let rows = run_replicates(exec, replicates, seed, |_, rng| {
        let r = sample_null_rank_matrix(n, rng)?;
        let (res, pair) = test_rank_matrix(&r, 0.05, Tail::TwoSided)?;
        let v = eigenvector_statistic(&pair.vector, n)?;
        Ok(vec![res.lambda1, res.t_stat, v])
    })?;
    let table = ReplicateTable::new(&["lambda1", "t_stat", "eigvec_stat"], rows);
    let x = table.column(which.column()).unwrap_or_default();
    let config = json!({
        "experiment": "null_distribution",
        "n": n,
        "replicates": replicates,
        "master_seed": seed,
        "statistic": which,
    });
    Ok(finish(config, NullSummary::of(which, &x), table, start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemicircleSummary {
    pub n: usize,
    pub esd: EsdSummary,
    /// `n^{-1/2} ||W||`.
    pub scaled_norm: f64,
}

/// One whitened null rank matrix: its scaled spectrum and norm.
pub fn semicircle_experiment(n: usize, bins: usize, seed: u64) -> Result<SemicircleSummary> {
    check_n(n)?;
    let mut rng = crate::rng::stream_rng(seed, 0);
    let r = sample_null_rank_matrix(n, &mut rng)?;
    let w = whiten(&r)?;
    let esd = esd(&w, bins)?;
    let scaled_norm = operator_norm(&w)? / (n as f64).sqrt();
    Ok(SemicircleSummary { n, esd, scaled_norm })
}

/// `n^{-1/2} ||W||` for one whitened null rank matrix, without the spectrum.
pub fn scaled_norm_of_null(n: usize, seed: u64) -> Result<f64> {
    check_n(n)?;
    let mut rng = crate::rng::stream_rng(seed, 0);
    let r = sample_null_rank_matrix(n, &mut rng)?;
    Ok(operator_norm(&whiten(&r)?)? / (n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTailSummary {
    pub threshold: f64,
    pub exceedances: usize,
    pub frequency: f64,
    pub max_norm: f64,
    /// `max_norm / sqrt(n)`.
    pub max_scaled_norm: f64,
}

/// Frequency of `||R - E R|| >= 6 sqrt(n)`.
pub fn operator_norm_tail_experiment(
    n: usize,
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<ExperimentReport<NormTailSummary>> {
    check_n(n)?;
    check_replicates(replicates)?;
    let start = Instant::now();
    let norms = run_replicates(exec, replicates, seed, |_, rng| {
        let r = sample_null_rank_matrix(n, rng)?;
        operator_norm(&r.map(|v| v - 0.5))
    })?;
    let threshold = 6.0 * (n as f64).sqrt();
    let exceedances = norms.iter().filter(|&&x| x >= threshold).count();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let summary = NormTailSummary {
        threshold,
        exceedances,
        frequency: exceedances as f64 / replicates as f64,
        max_norm,
        max_scaled_norm: max_norm / (n as f64).sqrt(),
    };
    let config = json!({
        "experiment": "operator_norm_tail",
        "n": n,
        "replicates": replicates,
        "master_seed": seed,
    });
    let rows = norms.into_iter().map(|x| vec![x]).collect();
    Ok(finish(config, summary, ReplicateTable::new(&["norm"], rows), start))
}

/// Fluctuation constants of an i.i.d. `Uniform(0, 1)` matrix.
const UNIFORM_MEAN: f64 = 0.5;
const UNIFORM_VAR: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkSummary {
    pub fk: Summary,
    pub eigenvector: Summary,
    /// Mean of `lambda_1 / n`.
    pub lambda_over_n: f64,
    pub qq_fk: Vec<QqPoint>,
    pub qq_eigenvector: Vec<QqPoint>,
}

/// Leading-eigenvalue and eigenvector statistics for i.i.d. uniform entries.
pub fn fk_comparison_experiment(
    n: usize,
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<ExperimentReport<FkSummary>> {
    check_n(n)?;
    check_replicates(replicates)?;
    let start = Instant::now();
    let centering = (n - 1) as f64 * UNIFORM_MEAN + UNIFORM_VAR / UNIFORM_MEAN;
    let scale = 2f64.sqrt() * UNIFORM_VAR.sqrt();
    let rows = run_replicates(exec, replicates, seed, |_, rng| {
        let u = sample_interpolated_rank(n, ExtraRanks::Infinite, rng)?;
        let pair = leading(&u)?;
        let fk = (pair.lambda - centering) / scale;
        let v = eigenvector_statistic(&pair.vector, n)?;
        Ok(vec![pair.lambda, fk, v])
    })?;
    let table = ReplicateTable::new(&["lambda1", "fk_stat", "eigvec_stat"], rows);
    let lambda = table.column("lambda1").unwrap_or_default();
    let fk = table.column("fk_stat").unwrap_or_default();
    let v = table.column("eigvec_stat").unwrap_or_default();
    let summary = FkSummary {
        fk: Summary::of(&fk),
        eigenvector: Summary::of(&v),
        lambda_over_n: stats::mean(&lambda) / n as f64,
        qq_fk: qq_pairs(&fk),
        qq_eigenvector: qq_pairs(&v),
    };
    let config = json!({
        "experiment": "fk_comparison",
        "n": n,
        "replicates": replicates,
        "master_seed": seed,
    });
    Ok(finish(config, summary, table, start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSummary {
    pub mean_distance_raw: f64,
    pub mean_distance_rank: f64,
    /// `mean_distance_rank / mean_distance_raw`.
    pub ratio: f64,
    /// `mu^2 / (3 sigma^2)`.
    pub limit: f64,
}

/// Compares leading-eigenvector recovery of `u1` from Gaussian data and from
/// its rank matrix.
pub fn subspace_recovery_ratio_experiment(
    n: usize,
    mu: f64,
    sigma: f64,
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<ExperimentReport<SubspaceSummary>> {
    check_n(n)?;
    check_replicates(replicates)?;
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::Parameter(format!("mu must be finite and nonzero, got {mu}")));
    }
    let f = EntryDistribution::Normal { mu, sigma };
    f.validate()?;
    let start = Instant::now();
    let u1 = vec![1.0 / (n as f64).sqrt(); n];
    let rows = run_replicates(exec, replicates, seed, |_, rng| {
        let a = sample_homogeneous(n, &f, rng)?;
        let d_raw = subspace_distance_sq(&leading(&a)?.vector, &u1)?;
        let r = rank_transform(&a, TiePolicy::Random { seed: rng.random() })?;
        let d_rank = subspace_distance_sq(&leading(&r)?.vector, &u1)?;
        Ok(vec![d_raw, d_rank])
    })?;
    let table = ReplicateTable::new(&["distance_raw", "distance_rank"], rows);
    let raw = stats::mean(&table.column("distance_raw").unwrap_or_default());
    let rank = stats::mean(&table.column("distance_rank").unwrap_or_default());
    let summary = SubspaceSummary {
        mean_distance_raw: raw,
        mean_distance_rank: rank,
        ratio: rank / raw,
        limit: mu * mu / (3.0 * sigma * sigma),
    };
    let config = json!({
        "experiment": "subspace_recovery_ratio",
        "n": n,
        "mu": mu,
        "sigma": sigma,
        "replicates": replicates,
        "master_seed": seed,
    });
    Ok(finish(config, summary, table, start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipRow {
    pub n: usize,
    pub median_residual: f64,
    pub max_residual: f64,
    pub min_alignment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipSummary {
    pub rows: Vec<RelationshipRow>,
}

/// `|u1' u_hat - (3/2 - lambda_1/(n-1))|` under the null, per `n`.
///
/// Each `n` uses the stream family `mix_seed(seed, position in n_list)`.
pub fn eigen_relationship_experiment(
    n_list: &[usize],
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<ExperimentReport<RelationshipSummary>> {
    check_replicates(replicates)?;
    for &n in n_list {
        check_n(n)?;
    }
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (idx, &n) in n_list.iter().enumerate() {
        let out = run_replicates(exec, replicates, mix_seed(seed, idx as u64), |_, rng| {
            let r = sample_null_rank_matrix(n, rng)?;
            let pair = leading(&r)?;
            let a = pair.alignment_with_ones();
            let predicted = 1.5 - pair.lambda / (n - 1) as f64;
            Ok((a, (a - predicted).abs()))
        })?;
        let residuals: Vec<f64> = out.iter().map(|p| p.1).collect();
        rows.push(RelationshipRow {
            n,
            median_residual: stats::median(&residuals),
            max_residual: residuals.iter().copied().fold(0.0, f64::max),
            min_alignment: out.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        });
        table.extend(out.into_iter().map(|(a, r)| vec![n as f64, a, r]));
    }
    let config = json!({
        "experiment": "eigen_relationship",
        "n_list": n_list,
        "replicates": replicates,
        "master_seed": seed,
    });
    Ok(finish(
        config,
        RelationshipSummary { rows },
        ReplicateTable::new(&["n", "u1_dot_uhat", "residual"], table),
        start,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(model: ModelSpec) -> ExperimentConfig {
        ExperimentConfig {
            id: "t".into(),
            n: 30,
            model,
            replicates: 8,
            alpha: 0.05,
            master_seed: 11,
            threads: None,
            scale: 1.0,
        }
    }

    #[test]
    fn config_json_round_trip() {
        let c = cfg(ModelSpec::Planted {
            n1: 5,
            f1: "normal(2,1)".parse().unwrap(),
            f2: "normal(1,1)".parse().unwrap(),
        });
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"model\":\"planted\""));
        assert!(text.contains("\"f1\":\"normal(2,1)\""));
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn config_defaults_and_validation() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"n":10,"model":"homogeneous","f":"uniform(0,1)","replicates":3,"master_seed":1}"#,
        )
        .unwrap();
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.scale, 1.0);
        c.validate().unwrap();
        let mut bad = c.clone();
        bad.replicates = 0;
        assert!(bad.validate().is_err());
        let odd = ExperimentConfig {
            n: 11,
            model: ModelSpec::TwoBlock {
                f1: "normal(1,1)".parse().unwrap(),
                f2: "normal(2,1)".parse().unwrap(),
            },
            ..c
        };
        assert!(odd.validate().is_err());
    }

    #[test]
    fn rejection_summary_matches_dump() {
        let r = rejection_rate_experiment(&cfg(ModelSpec::TwoBlock {
            f1: "normal(1,1)".parse().unwrap(),
            f2: "normal(3,1)".parse().unwrap(),
        }))
        .unwrap();
        let flags = r.replicates.column("reject").unwrap();
        let rate = flags.iter().sum::<f64>() / flags.len() as f64;
        assert_eq!(rate, r.summary.rejection_rate);
        assert!((0.0..=1.0).contains(&r.summary.rejection_rate));
        let mut buf = Vec::new();
        r.replicates.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 9);
    }

    #[test]
    fn report_json_schema() {
        let r = operator_norm_tail_experiment(20, 5, 3, Execution::Sequential).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in ["config", "summary", "elapsed_s"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v.get("replicates_path").is_none());
        let v: serde_json::Value =
            serde_json::from_str(&r.to_json_without_timing().unwrap()).unwrap();
        assert!(v.get("elapsed_s").is_none());
    }

    #[test]
    fn norm_tail_small_n_matches_full_spectrum() {
        let r = operator_norm_tail_experiment(3, 20, 5, Execution::Sequential).unwrap();
        let norms = r.replicates.column("norm").unwrap();
        for (i, &x) in norms.iter().enumerate() {
            let mut rng = crate::rng::stream_rng(5, i as u64);
            let m = sample_null_rank_matrix(3, &mut rng).unwrap().map(|v| v - 0.5);
            let ev = crate::spectra::full_spectrum(&m).unwrap();
            let exact = ev[0].abs().max(ev[2].abs());
            assert!((x - exact).abs() < 1e-10);
        }
        assert_eq!(r.summary.exceedances, 0);
    }

    #[test]
    fn relationship_alignment_is_near_one() {
        let r = eigen_relationship_experiment(&[40], 10, 2, Execution::Sequential).unwrap();
        assert!(r.summary.rows[0].min_alignment > 0.9);
        assert!(r.summary.rows[0].min_alignment <= 1.0 + 1e-12);
    }

    #[test]
    fn parameter_errors() {
        assert!(null_distribution_experiment(2, 5, 0, Statistic::Eigenvalue, Execution::Sequential).is_err());
        assert!(subspace_recovery_ratio_experiment(10, 0.0, 1.0, 5, 0, Execution::Sequential).is_err());
        assert!(variance_transition_experiment(10, &[ExtraRanks::Finite(0)], 0, 0, Execution::Sequential).is_err());
        assert!("median".parse::<Statistic>().is_err());
    }
}
