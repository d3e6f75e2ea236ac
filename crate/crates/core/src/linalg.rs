//! Singular values and numerical rank.
//!
//! Singular values come from a one-sided (Hestenes) Jacobi iteration on the
//! thinner side of the matrix. It is slower than bidiagonalization for big
//! inputs but the order tests only ever see matrices up to a few hundred
//! rows, and Jacobi resolves tiny singular values to high relative accuracy,
//! which matters when comparing near-zero `sigma_k` across matricizations.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Singular values sorted non-increasing, length `min(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl SingularSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `k`-th largest singular value (1-based); zero when `k` exceeds the
    /// smaller dimension.
    pub fn sigma(&self, k: usize) -> f64 {
        if k == 0 {
            return self.max();
        }
        self.values.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn rank(&self, tol: RankTolerance) -> usize {
        let threshold = match tol {
            RankTolerance::Default => self.rows.max(self.cols) as f64 * f64::EPSILON * self.max(),
            RankTolerance::Absolute(t) => t,
            RankTolerance::Relative(t) => t * self.max(),
            RankTolerance::FrobeniusTail(eps) => {
                // suffix sums from the small end keep the tail accurate
                let mut tail = vec![0.0; self.values.len() + 1];
                for k in (0..self.values.len()).rev() {
                    tail[k] = tail[k + 1] + self.values[k] * self.values[k];
                }
                let bound = eps * eps * tail[0];
                return (0..=self.values.len()).find(|&k| tail[k] <= bound).unwrap_or(self.values.len());
            }
            RankTolerance::NoiseFloor(sigma) => {
                let default = self.rows.max(self.cols) as f64 * f64::EPSILON * self.max();
                default.max(sigma * ((self.rows as f64).sqrt() + (self.cols as f64).sqrt()))
            }
        };
        self.values.iter().filter(|&&s| s > threshold).count()
    }
}

/// Threshold below which a singular value counts as zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RankTolerance {
    /// `max(rows, cols) * eps * sigma_max`.
    #[default]
    Default,
    Absolute(f64),
    /// `t * sigma_max`.
    Relative(f64),
    /// Smallest `k` whose best rank-`k` approximation has relative Frobenius
    /// error at most `eps`.
    FrobeniusTail(f64),
    /// Expected largest singular value of an i.i.d. `N(0, sigma^2)` matrix of
    /// the same shape, `sigma (sqrt(rows) + sqrt(cols))`, floored at
    /// [`Default`](Self::Default).
    NoiseFloor(f64),
}

pub fn singular_values(m: ArrayView2<'_, f64>) -> Result<SingularSpectrum> {
    let (rows, cols) = m.dim();
    if let Some(((i, j), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite entry {v} at ({i}, {j})")));
    }
    // Work on the thin orientation: `k` vectors of length `len`, k <= len.
    let (k, len, columns) = if rows >= cols {
        (cols, rows, (0..cols).map(|j| m.column(j).to_vec()).collect::<Vec<_>>())
    } else {
        (rows, cols, (0..rows).map(|i| m.row(i).to_vec()).collect::<Vec<_>>())
    };
    let mut values = jacobi_norms(columns, len);
    debug_assert_eq!(values.len(), k);
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(SingularSpectrum { values, rows, cols })
}

fn jacobi_norms(mut cols: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let k = cols.len();
    let tol = f64::EPSILON * (len as f64).sqrt();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
                norms[p] = dot(cp, cp);
                norms[q] = dot(cq, cq);
            }
        }
        if !rotated {
            break;
        }
    }
    norms.into_iter().map(f64::sqrt).collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `k`-th largest singular value (1-based), zero past the smaller dimension.
pub fn sigma_k(m: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("singular value index is 1-based"));
    }
    Ok(singular_values(m)?.sigma(k))
}

pub fn numerical_rank(m: ArrayView2<'_, f64>, tol: RankTolerance) -> Result<usize> {
    Ok(singular_values(m)?.rank(tol))
}
