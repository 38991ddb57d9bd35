//! Dense symmetric eigenvalues: Householder reduction to tridiagonal form
//! followed by implicit-shift QL.

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Maximum QL sweeps spent on any single eigenvalue.
pub const MAX_QL_SWEEPS: usize = 30;

/// Symmetric tridiagonal matrix: `diag[i]`, and `off[i]` coupling rows
/// `i - 1` and `i` (`off[0]` is unused and zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Householder reduction of `m` (zero diagonal) to tridiagonal form.
///
/// Works on a row-packed copy of the lower triangle, eliminating rows from
/// the bottom up so the active block is always a contiguous prefix.
pub fn householder_tridiagonalize(m: &SymmetricMatrix) -> Tridiagonal {
    let n = m.n();
    let off_of = |j: usize| j * (j + 1) / 2;
    let mut a = vec![0.0; n * (n + 1) / 2];
    for j in 0..n {
        let row = &mut a[off_of(j)..off_of(j) + j + 1];
        for (k, slot) in row.iter_mut().enumerate().take(j) {
            *slot = m.get(j, k);
        }
    }

    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut p = vec![0.0; n];

    for i in (1..n).rev() {
        let l = i - 1;
        let base = off_of(i);
        if l == 0 {
            off[i] = a[base];
            continue;
        }
        let x = &a[base..base + i];
        let scale: f64 = x.iter().map(|v| v.abs()).sum();
        if scale == 0.0 {
            off[i] = 0.0;
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            u[k] = x[k] / scale;
            h += u[k] * u[k];
        }
        let f = u[l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        off[i] = scale * g;
        h -= f * g;
        u[l] = f - g;

        // p = A u / h over the active lower triangle, row by row.
        p[..=l].fill(0.0);
        for j in 0..=l {
            let row = &a[off_of(j)..off_of(j) + j + 1];
            let uj = u[j];
            let mut acc = row[j] * uj;
            for k in 0..j {
                acc += row[k] * u[k];
                p[k] += row[k] * uj;
            }
            p[j] += acc;
        }
        let mut up = 0.0;
        for k in 0..=l {
            p[k] /= h;
            up += u[k] * p[k];
        }
        let kk = up / (h + h);
        for k in 0..=l {
            p[k] -= kk * u[k];
        }
        for j in 0..=l {
            let (uj, qj) = (u[j], p[j]);
            let row = &mut a[off_of(j)..off_of(j) + j + 1];
            for k in 0..=j {
                row[k] -= uj * p[k] + qj * u[k];
            }
        }
    }
    for (i, d) in diag.iter_mut().enumerate() {
        *d = a[off_of(i) + i];
    }
    off[0] = 0.0;
    Tridiagonal { diag, off }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL.
///
/// If `last_row` is given it must have length `n`; on return `last_row[i]`
/// is the last component of the unit eigenvector belonging to the returned
/// eigenvalue `i`. Eigenvalues come back unsorted.
pub fn tridiagonal_eigenvalues(
    t: &Tridiagonal,
    mut last_row: Option<&mut [f64]>,
) -> Result<Vec<f64>> {
    let n = t.diag.len();
    let mut d = t.diag.clone();
    let mut e = vec![0.0; n];
    if n > 1 {
        e[..n - 1].copy_from_slice(&t.off[1..]);
    }
    if let Some(z) = last_row.as_deref_mut() {
        assert_eq!(z.len(), n);
        z.fill(0.0);
        if n > 0 {
            z[n - 1] = 1.0;
        }
    }

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence { iterations: sweeps });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = last_row.as_deref_mut() {
                    let zf = z[i + 1];
                    z[i + 1] = s * z[i] + c * zf;
                    z[i] = c * z[i] - s * zf;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_two_by_two() {
        let t = Tridiagonal {
            diag: vec![2.0, 2.0],
            off: vec![0.0, 1.0],
        };
        let mut z = vec![0.0; 2];
        let mut ev = tridiagonal_eigenvalues(&t, Some(&mut z)).unwrap();
        let order: Vec<usize> = {
            let mut idx = vec![0, 1];
            idx.sort_by(|&a, &b| ev[a].total_cmp(&ev[b]));
            idx
        };
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        // unit eigenvectors (1,-1)/sqrt2 and (1,1)/sqrt2 have |last| = 1/sqrt2
        for i in order {
            assert!((z[i].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        }
    }

    #[test]
    fn reduction_preserves_trace_and_frobenius() {
        let m = SymmetricMatrix::from_fn(7, |i, j| ((i * 13 + j * 7) % 11) as f64 - 5.0).unwrap();
        let t = householder_tridiagonalize(&m);
        let trace: f64 = t.diag.iter().sum();
        assert!(trace.abs() < 1e-12);
        let fro2: f64 = t.diag.iter().map(|d| d * d).sum::<f64>()
            + 2.0 * t.off.iter().map(|e| e * e).sum::<f64>();
        assert!((fro2 - m.frobenius_norm().powi(2)).abs() < 1e-9);
    }
}
