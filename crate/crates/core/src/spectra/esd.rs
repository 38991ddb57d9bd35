use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::full_spectrum;
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Histogram support for the scaled spectrum.
pub const ESD_RANGE: (f64, f64) = (-2.5, 2.5);

/// Semicircle CDF on `[-2, 2]`, clamped outside.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// Empirical spectral distribution of `n^{-1/2} W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsdSummary {
    pub n: usize,
    /// `bins + 1` edges spanning [`ESD_RANGE`].
    pub edges: Vec<f64>,
    /// Fraction of eigenvalues per bin; values outside the range are counted
    /// in the nearest edge bin.
    pub masses: Vec<f64>,
    /// Kolmogorov-Smirnov distance to the semicircle CDF.
    pub ks_to_semicircle: f64,
    /// Scaled eigenvalues, descending.
    #[serde(skip)]
    pub eigenvalues: Vec<f64>,
}

impl EsdSummary {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "bin_left,bin_right,mass")?;
        for (k, mass) in self.masses.iter().enumerate() {
            writeln!(w, "{},{},{}", self.edges[k], self.edges[k + 1], mass)?;
        }
        Ok(())
    }
}

pub fn esd(w: &SymmetricMatrix, bins: usize) -> Result<EsdSummary> {
    if bins == 0 {
        return Err(Error::Parameter("bins must be positive".into()));
    }
    let n = w.n();
    let scale = 1.0 / (n as f64).sqrt();
    let eigenvalues: Vec<f64> = full_spectrum(w)?.into_iter().map(|l| l * scale).collect();

    let (lo, hi) = ESD_RANGE;
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &x in &eigenvalues {
        let k = ((x - lo) / width).floor();
        let k = if k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
        counts[k] += 1;
    }
    let masses = counts.iter().map(|&c| c as f64 / n as f64).collect();

    let mut ascending = eigenvalues.clone();
    ascending.reverse();
    let ks_to_semicircle = ks_sorted(&ascending, semicircle_cdf);

    Ok(EsdSummary {
        n,
        edges,
        masses,
        ks_to_semicircle,
        eigenvalues,
    })
}

/// One-sample KS distance of sorted (ascending) data to `cdf`.
pub(crate) fn ks_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let m = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / m - f).max(f - i as f64 / m)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicircle_cdf_landmarks() {
        assert_eq!(semicircle_cdf(0.0), 0.5);
        assert!((semicircle_cdf(2.0) - 1.0).abs() < 1e-15);
        assert!(semicircle_cdf(-2.0).abs() < 1e-15);
        assert!((semicircle_cdf(1.0) + semicircle_cdf(-1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn semicircle_cdf_integrates_density() {
        // Simpson's rule on the density as an independent route.
        let steps = 20_000;
        let (a, b) = (-2.0, 0.7);
        let h = (b - a) / steps as f64;
        let mut s = semicircle_density(a) + semicircle_density(b);
        for k in 1..steps {
            let x = a + k as f64 * h;
            s += semicircle_density(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let integral = s * h / 3.0;
        assert!((integral - semicircle_cdf(b)).abs() < 1e-5);
    }

    #[test]
    fn histogram_masses_sum_to_one() {
        let m = SymmetricMatrix::from_fn(9, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0).unwrap();
        let s = esd(&m, 20).unwrap();
        assert_eq!(s.edges.len(), 21);
        assert!((s.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&s.ks_to_semicircle));
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bin_left,bin_right,mass\n"));
        assert_eq!(text.lines().count(), 21);
    }
}
