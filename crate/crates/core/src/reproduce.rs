//! Fixed simulation grids: the variance table, the two rejection-rate tables
//! and the spectrum and QQ figures, emitted as CSV plus a JSON summary.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{
    null_distribution_experiment, rejection_rate_experiment, semicircle_experiment,
    variance_transition_experiment, ExperimentConfig, ModelSpec, NullSummary, Statistic,
};
use crate::hypothesis::{e1f2, E1F2_DEFAULT_SAMPLES};
use crate::matrix::packed_len;
use crate::models::{EntryDistribution, ExtraRanks};
use crate::parallel::Execution;
use crate::rng::mix_seed;
use crate::spectra::semicircle_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Table1,
    Table2,
    Table3,
    Fig1,
    Fig2,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Table1 => "table1",
            Self::Table2 => "table2",
            Self::Table3 => "table3",
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "table1" => Self::Table1,
            "table2" => Self::Table2,
            "table3" => Self::Table3,
            "fig1" => Self::Fig1,
            "fig2" => Self::Fig2,
            other => return Err(Error::Parameter(format!("unknown target '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOptions {
    pub master_seed: u64,
    /// Multiplies every replicate count (at least one replicate is kept).
    pub scale: f64,
    pub exec: Execution,
    /// Replaces the default matrix sizes.
    pub ns: Option<Vec<usize>>,
}

impl ReproduceOptions {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            scale: 1.0,
            exec: Execution::default(),
            ns: None,
        }
    }

    fn replicates(&self, base: usize) -> usize {
        ((base as f64 * self.scale).round() as usize).max(1)
    }

    fn sizes(&self, default: &[usize]) -> Vec<usize> {
        self.ns.clone().unwrap_or_else(|| default.to_vec())
    }

    fn threads(&self) -> Option<usize> {
        match self.exec {
            Execution::Sequential => Some(1),
            Execution::Parallel { threads } => threads,
        }
    }
}

/// A named CSV table with string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub target: Target,
    pub tables: Vec<CsvTable>,
    pub summary: serde_json::Value,
    pub elapsed_s: f64,
}

impl Reproduction {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&json!({
            "config": { "target": self.target },
            "summary": self.summary,
            "elapsed_s": self.elapsed_s,
        }))?)
    }
}

pub fn reproduce(target: Target, opts: &ReproduceOptions) -> Result<Reproduction> {
    if !(opts.scale > 0.0 && opts.scale.is_finite()) {
        return Err(Error::Parameter(format!("scale must be positive, got {}", opts.scale)));
    }
    let start = Instant::now();
    let (tables, mut summary) = match target {
        Target::Table1 => table1(opts)?,
        Target::Table2 => table2(opts)?,
        Target::Table3 => table3(opts)?,
        Target::Fig1 => fig1(opts)?,
        Target::Fig2 => fig2(opts)?,
    };
    if let Some(obj) = summary.as_object_mut() {
        obj.insert("scale".into(), json!(opts.scale));
        obj.insert("master_seed".into(), json!(opts.master_seed));
    }
    Ok(Reproduction {
        target,
        tables,
        summary,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

fn strings<const K: usize>(cells: [&str; K]) -> Vec<String> {
    cells.iter().map(|s| s.to_string()).collect()
}

/// Labels and values of the interpolation grid for size `n`.
pub fn table1_grid(n: usize) -> Vec<(&'static str, ExtraRanks)> {
    let big_n = packed_len(n);
    vec![
        ("0", ExtraRanks::Finite(0)),
        ("n", ExtraRanks::Finite(n)),
        ("n^1.5", ExtraRanks::Finite((n as f64).powf(1.5).round() as usize)),
        ("N", ExtraRanks::Finite(big_n)),
        ("inf", ExtraRanks::Infinite),
    ]
}

fn table1(opts: &ReproduceOptions) -> Result<(Vec<CsvTable>, serde_json::Value)> {
    let ns = opts.sizes(&[1000, 2000, 4000]);
    let reps = opts.replicates(3000);
    let mut cells = vec![vec![String::new(); ns.len()]; 5];
    let mut long = Vec::new();
    for (j, &n) in ns.iter().enumerate() {
        let grid = table1_grid(n);
        let ks: Vec<ExtraRanks> = grid.iter().map(|g| g.1).collect();
        let report = variance_transition_experiment(
            n,
            &ks,
            reps,
            mix_seed(opts.master_seed, j as u64),
            opts.exec,
        )?;
        for (i, row) in report.summary.rows.iter().enumerate() {
            cells[i][j] = format!("{:.4e}", row.variance);
            long.push(json!({
                "k": grid[i].0,
                "n": n,
                "variance": row.variance,
                "std_error": row.std_error,
                "mean": row.mean,
            }));
        }
    }
    let mut columns = vec!["k".to_string()];
    columns.extend(ns.iter().map(|n| format!("n={n}")));
    let labels = ["0", "n", "n^1.5", "N", "inf"];
    let rows = labels
        .iter()
        .zip(cells)
        .map(|(l, c)| std::iter::once(l.to_string()).chain(c).collect())
        .collect();
    let table = CsvTable {
        name: "table1".into(),
        columns,
        rows,
    };
    Ok((vec![table], json!({ "replicates": reps, "cells": long })))
}

fn normal(mu: f64, sigma: f64) -> EntryDistribution {
    EntryDistribution::Normal { mu, sigma }
}

fn pareto(scale: f64, shape: f64) -> EntryDistribution {
    EntryDistribution::Pareto { scale, shape }
}

/// One row of the community-detection grid: label, display names and laws.
pub struct BlockRow {
    pub label: &'static str,
    pub f1: &'static str,
    pub f2: &'static str,
    pub laws: fn(usize) -> (EntryDistribution, EntryDistribution),
}

/// Two-block rows. `N(m, s^2)` entries are given as `normal(m, s)`.
pub fn table2_rows() -> Vec<BlockRow> {
    vec![
        BlockRow { label: "a", f1: "Pareto(1,1)", f2: "N(1,0.1^2)", laws: |_| (pareto(1.0, 1.0), normal(1.0, 0.1)) },
        BlockRow { label: "b", f1: "Pareto(1/2,2)", f2: "N(1,0.1^2)", laws: |_| (pareto(0.5, 2.0), normal(1.0, 0.1)) },
        BlockRow { label: "c", f1: "N(1,1)", f2: "N(2,1)", laws: |_| (normal(1.0, 1.0), normal(2.0, 1.0)) },
        BlockRow { label: "d", f1: "N(1,0.4^2)", f2: "N(1+n^-1/8,0.4^2)", laws: |n| (normal(1.0, 0.4), normal(1.0 + (n as f64).powf(-0.125), 0.4)) },
        BlockRow { label: "e", f1: "N(1,0.4^2)", f2: "N(1+n^-1/4,0.4^2)", laws: |n| (normal(1.0, 0.4), normal(1.0 + (n as f64).powf(-0.25), 0.4)) },
        BlockRow { label: "f", f1: "N(1,0.4^2)", f2: "N(1+n^-1/2,0.4^2)", laws: |n| (normal(1.0, 0.4), normal(1.0 + (n as f64).powf(-0.5), 0.4)) },
        BlockRow { label: "g", f1: "N(1,1)", f2: "N(1,2)", laws: |_| (normal(1.0, 1.0), normal(1.0, 2f64.sqrt())) },
    ]
}

fn table2(opts: &ReproduceOptions) -> Result<(Vec<CsvTable>, serde_json::Value)> {
    let ns = opts.sizes(&[2000, 4000]);
    let reps = opts.replicates(400);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (i, row) in table2_rows().iter().enumerate() {
        let mut line = vec![row.label.to_string(), row.f1.to_string(), row.f2.to_string()];
        for (j, &n) in ns.iter().enumerate() {
            let (f1, f2) = (row.laws)(n);
            let seed = mix_seed(opts.master_seed, (i * 16 + j) as u64);
            let sep = e1f2(&f1, &f2, E1F2_DEFAULT_SAMPLES, seed)?;
            let cfg = ExperimentConfig {
                id: format!("table2-{}-{n}", row.label),
                n,
                model: ModelSpec::TwoBlock { f1, f2 },
                replicates: reps,
                alpha: 0.05,
                master_seed: seed,
                threads: opts.threads(),
                scale: opts.scale,
            };
            let r = rejection_rate_experiment(&cfg)?;
            line.push(format!("{:.4}", sep.value));
            line.push(format!("{:.3}", r.summary.rejection_rate));
            cells.push(json!({
                "row": row.label,
                "n": n,
                "f1": f1,
                "f2": f2,
                "e1f2": sep.value,
                "rejection_rate": r.summary.rejection_rate,
            }));
        }
        rows.push(line);
    }
    let mut columns = strings(["row", "F1", "F2"]);
    for n in &ns {
        columns.push(format!("E1F2 n={n}"));
        columns.push(format!("rate n={n}"));
    }
    let table = CsvTable {
        name: "table2".into(),
        columns,
        rows,
    };
    Ok((vec![table], json!({ "replicates": reps, "cells": cells })))
}

/// One row of the planted-submatrix grid: `F1` inside, `F2` outside, and
/// the planted size for `n = 2000` and `n = 4000`.
pub struct PlantedRow {
    pub label: &'static str,
    pub f1: &'static str,
    pub f2: &'static str,
    pub n1: [usize; 2],
    pub laws: fn(usize) -> (EntryDistribution, EntryDistribution),
}

pub const TABLE3_SIZES: [usize; 2] = [2000, 4000];

pub fn table3_rows() -> Vec<PlantedRow> {
    vec![
        PlantedRow { label: "a", f1: "Pareto(1,1)", f2: "Pareto(1,1)", n1: [300, 500], laws: |_| (pareto(1.0, 1.0), pareto(1.0, 1.0)) },
        PlantedRow { label: "b", f1: "N(1,1)", f2: "N(1,1)", n1: [300, 500], laws: |_| (normal(1.0, 1.0), normal(1.0, 1.0)) },
        PlantedRow { label: "c", f1: "Pareto(1/2,2)", f2: "N(1,1)", n1: [300, 500], laws: |_| (pareto(0.5, 2.0), normal(1.0, 1.0)) },
        PlantedRow { label: "d", f1: "Pareto(1,1)", f2: "N(1,1)", n1: [300, 500], laws: |_| (pareto(1.0, 1.0), normal(1.0, 1.0)) },
        PlantedRow { label: "e", f1: "N(2,1)", f2: "N(1,1)", n1: [300, 500], laws: |_| (normal(2.0, 1.0), normal(1.0, 1.0)) },
        PlantedRow { label: "f", f1: "N(2,1)", f2: "N(1,1)", n1: [40, 60], laws: |_| (normal(2.0, 1.0), normal(1.0, 1.0)) },
        PlantedRow { label: "g", f1: "N(2,1)", f2: "N(1,1)", n1: [20, 27], laws: |_| (normal(2.0, 1.0), normal(1.0, 1.0)) },
        PlantedRow { label: "h", f1: "N(1+n^-1/4,1)", f2: "N(1,1)", n1: [780, 1400], laws: |n| (normal(1.0 + (n as f64).powf(-0.25), 1.0), normal(1.0, 1.0)) },
        PlantedRow { label: "i", f1: "N(1+n^-3/8,1)", f2: "N(1,1)", n1: [780, 1400], laws: |n| (normal(1.0 + (n as f64).powf(-0.375), 1.0), normal(1.0, 1.0)) },
        PlantedRow { label: "j", f1: "N(1+n^-3/4,1)", f2: "N(1,1)", n1: [780, 1400], laws: |n| (normal(1.0 + (n as f64).powf(-0.75), 1.0), normal(1.0, 1.0)) },
        PlantedRow { label: "k", f1: "N(1,1)", f2: "N(1,2)", n1: [780, 1400], laws: |_| (normal(1.0, 1.0), normal(1.0, 2f64.sqrt())) },
    ]
}

/// Planted size for `n`: the tabulated value, or for other `n` the
/// `n = 2000` value scaled proportionally.
fn planted_size(row: &PlantedRow, n: usize) -> usize {
    match TABLE3_SIZES.iter().position(|&m| m == n) {
        Some(k) => row.n1[k],
        None => ((row.n1[0] as f64 * n as f64 / 2000.0).round() as usize).clamp(1, n - 1),
    }
}

fn table3(opts: &ReproduceOptions) -> Result<(Vec<CsvTable>, serde_json::Value)> {
    let ns = opts.sizes(&TABLE3_SIZES);
    let reps = opts.replicates(400);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (i, row) in table3_rows().iter().enumerate() {
        let mut line = vec![row.label.to_string(), row.f1.to_string(), row.f2.to_string()];
        for (j, &n) in ns.iter().enumerate() {
            if n < 3 {
                return Err(Error::Dimension { n, min: 3 });
            }
            let (f1, f2) = (row.laws)(n);
            let n1 = planted_size(row, n);
            let seed = mix_seed(opts.master_seed, (i * 16 + j) as u64);
            let cfg = ExperimentConfig {
                id: format!("table3-{}-{n}", row.label),
                n,
                model: ModelSpec::Planted { n1, f1, f2 },
                replicates: reps,
                alpha: 0.05,
                master_seed: seed,
                threads: opts.threads(),
                scale: opts.scale,
            };
            let r = rejection_rate_experiment(&cfg)?;
            line.push(n1.to_string());
            line.push(format!("{:.3}", r.summary.rejection_rate));
            cells.push(json!({
                "row": row.label,
                "n": n,
                "n1": n1,
                "f1": f1,
                "f2": f2,
                "rejection_rate": r.summary.rejection_rate,
            }));
        }
        rows.push(line);
    }
    let mut columns = strings(["row", "F1", "F2"]);
    for n in &ns {
        columns.push(format!("n1 n={n}"));
        columns.push(format!("rate n={n}"));
    }
    let table = CsvTable {
        name: "table3".into(),
        columns,
        rows,
    };
    Ok((vec![table], json!({ "replicates": reps, "cells": cells })))
}

fn fig1(opts: &ReproduceOptions) -> Result<(Vec<CsvTable>, serde_json::Value)> {
    let n = opts.sizes(&[3000])[0];
    let s = semicircle_experiment(n, 50, opts.master_seed)?;
    let rows = s
        .esd
        .masses
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let (a, b) = (s.esd.edges[k], s.esd.edges[k + 1]);
            vec![
                a.to_string(),
                b.to_string(),
                m.to_string(),
                (semicircle_cdf(b) - semicircle_cdf(a)).to_string(),
            ]
        })
        .collect();
    let table = CsvTable {
        name: "fig1_histogram".into(),
        columns: strings(["bin_left", "bin_right", "mass", "semicircle_mass"]),
        rows,
    };
    let summary = json!({
        "n": n,
        "ks_to_semicircle": s.esd.ks_to_semicircle,
        "scaled_norm": s.scaled_norm,
    });
    Ok((vec![table], summary))
}

fn fig2(opts: &ReproduceOptions) -> Result<(Vec<CsvTable>, serde_json::Value)> {
    let n = opts.sizes(&[2000])[0];
    let reps = opts.replicates(2000);
    let report =
        null_distribution_experiment(n, reps, opts.master_seed, Statistic::Eigenvalue, opts.exec)?;
    let eigenvalue = report.summary;
    let v = report.replicates.column("eigvec_stat").unwrap_or_default();
    let eigenvector = NullSummary::of(Statistic::Eigenvector, &v);
    let rows = eigenvalue
        .qq
        .iter()
        .zip(&eigenvector.qq)
        .map(|(a, b)| {
            vec![
                a.percentile.to_string(),
                a.normal.to_string(),
                a.empirical.to_string(),
                b.empirical.to_string(),
            ]
        })
        .collect();
    let table = CsvTable {
        name: "fig2_qq".into(),
        columns: strings(["percentile", "normal", "eigenvalue", "eigenvector"]),
        rows,
    };
    let summary = json!({
        "n": n,
        "replicates": reps,
        "eigenvalue": eigenvalue.summary,
        "eigenvector": eigenvector.summary,
    });
    Ok((vec![table], summary))
}
