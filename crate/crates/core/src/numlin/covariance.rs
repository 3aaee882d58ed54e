use super::{NumlinError, Tensor};

/// Second-moment matrix of token embeddings, `(1/N) HᵀH`, optionally with
/// the column mean removed first.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    dim: usize,
    entries: Vec<f64>,
    centered: bool,
    sample_count: usize,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `dim × dim` entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Wraps an existing symmetric matrix. Symmetry is enforced within a
    /// 1e-9 relative tolerance and the stored entries are symmetrized.
    pub fn from_entries(
        dim: usize,
        mut entries: Vec<f64>,
        centered: bool,
        sample_count: usize,
    ) -> Result<Self, NumlinError> {
        if entries.len() != dim * dim {
            return Err(NumlinError::ShapeMismatch(format!(
                "{dim}x{dim} matrix needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(NumlinError::DegenerateInput(
                "non-finite covariance entry".into(),
            ));
        }
        let scale = entries.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if (a - b).abs() > 1e-9 * scale {
                    return Err(NumlinError::DegenerateInput(format!(
                        "asymmetric entries ({i},{j}): {a} vs {b}"
                    )));
                }
                let s = 0.5 * (a + b);
                entries[i * dim + j] = s;
                entries[j * dim + i] = s;
            }
        }
        Ok(Self {
            dim,
            entries,
            centered,
            sample_count,
        })
    }
}

/// Empirical covariance `Σ = (1/N) HᵀH` of an `N × D` embedding matrix.
///
/// With `centered` the column mean is subtracted before the product, which
/// is the default convention everywhere in this crate; the uncentered form
/// keeps the raw Gram normalization. Accumulation runs in f64 and the
/// result is symmetrized via `(A + Aᵀ)/2`.
pub fn covariance(h: &Tensor<f64>, centered: bool) -> Result<CovarianceMatrix, NumlinError> {
    if h.shape().len() != 2 {
        return Err(NumlinError::ShapeMismatch(format!(
            "covariance expects a matrix, got shape {:?}",
            h.shape()
        )));
    }
    let (n, d) = (h.rows(), h.cols());
    if n < 2 {
        return Err(NumlinError::DegenerateInput(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if !h.is_finite() {
        return Err(NumlinError::DegenerateInput(
            "non-finite entry in embedding matrix".into(),
        ));
    }

    let mean = if centered {
        let mut m = vec![0.0f64; d];
        for i in 0..n {
            let row = h.row(i);
            for (mj, &v) in m.iter_mut().zip(row) {
                *mj += v;
            }
        }
        let inv_n = 1.0 / n as f64;
        for mj in &mut m {
            *mj *= inv_n;
        }
        Some(m)
    } else {
        None
    };

    let mut acc = vec![0.0f64; d * d];
    let mut centered_row = vec![0.0f64; d];
    for i in 0..n {
        let row = h.row(i);
        let r: &[f64] = match &mean {
            Some(m) => {
                for ((c, &v), &mj) in centered_row.iter_mut().zip(row).zip(m) {
                    *c = v - mj;
                }
                &centered_row
            }
            None => row,
        };
        // upper triangle only; mirrored below
        for a in 0..d {
            let ra = r[a];
            let out = &mut acc[a * d + a..a * d + d];
            for (k, &rb) in r[a..].iter().enumerate() {
                out[k] += ra * rb;
            }
        }
    }

    let inv_n = 1.0 / n as f64;
    let mut entries = vec![0.0f64; d * d];
    for a in 0..d {
        for b in a..d {
            let v = acc[a * d + b] * inv_n;
            entries[a * d + b] = v;
            entries[b * d + a] = v;
        }
    }

    Ok(CovarianceMatrix {
        dim: d,
        entries,
        centered,
        sample_count: n,
    })
}
