use super::{CovarianceMatrix, NumlinError, Tensor};

/// Maximum number of cyclic Jacobi sweeps before reporting failure.
pub const JACOBI_SWEEP_BUDGET: usize = 64;

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// Cyclic Jacobi rotations; unconditionally stable on symmetric input.
/// Round-off negatives with `|λ| ≤ 1e-8·λ₁` are clamped to zero so the
/// spectral metrics downstream never see spurious negative mass.
pub fn sym_eig(sigma: &CovarianceMatrix) -> Result<Vec<f64>, NumlinError> {
    let (values, _) = jacobi(sigma.dim(), sigma.entries(), false, JACOBI_SWEEP_BUDGET)?;
    Ok(sort_and_clamp(values).0)
}

/// Eigenvalues (descending) together with the matching eigenvectors as the
/// columns of the returned matrix.
pub fn sym_eig_full(sigma: &CovarianceMatrix) -> Result<(Vec<f64>, Tensor<f64>), NumlinError> {
    let n = sigma.dim();
    let (values, vectors) = jacobi(n, sigma.entries(), true, JACOBI_SWEEP_BUDGET)?;
    let vectors = vectors.expect("vectors requested");
    let (sorted, order) = sort_and_clamp(values);
    let mut cols = vec![0.0f64; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            cols[r * n + new_col] = vectors[r * n + old_col];
        }
    }
    Ok((sorted, Tensor::from_vec_unchecked(vec![n, n], cols)))
}

fn sort_and_clamp(values: Vec<f64>) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let mut sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let lmax = sorted.first().copied().unwrap_or(0.0).max(0.0);
    for v in &mut sorted {
        if *v < 0.0 && v.abs() <= 1e-8 * lmax {
            *v = 0.0;
        }
    }
    (sorted, order)
}

/// Cyclic Jacobi (Numerical Recipes §11.1 layout) on a symmetric matrix
/// given as row-major entries. Returns unsorted eigenvalues and, when
/// requested, the rotation product with eigenvectors in columns.
pub(crate) fn jacobi(
    n: usize,
    entries: &[f64],
    want_vectors: bool,
    sweep_budget: usize,
) -> Result<(Vec<f64>, Option<Vec<f64>>), NumlinError> {
    let mut a = entries.to_vec();
    let mut v = if want_vectors {
        let mut id = vec![0.0f64; n * n];
        for p in 0..n {
            id[p * n + p] = 1.0;
        }
        Some(id)
    } else {
        None
    };

    let mut d: Vec<f64> = (0..n).map(|p| a[p * n + p]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0f64; n];

    for sweep in 0..sweep_budget {
        let mut sm = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                sm += a[p * n + q].abs();
            }
        }
        if sm == 0.0 {
            return Ok((d, v));
        }

        // first sweeps rotate only on elements above a shrinking threshold
        let tresh = if sweep < 3 {
            0.2 * sm / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let g = 100.0 * a[p * n + q].abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * n + q] = 0.0;
                } else if a[p * n + q].abs() > tresh {
                    let mut h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        a[p * n + q] / h
                    } else {
                        let theta = 0.5 * h / a[p * n + q];
                        let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            t = -t;
                        }
                        t
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    h = t * a[p * n + q];
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[p * n + q] = 0.0;

                    let rotate = |a: &mut [f64], i: usize, j: usize, k: usize, l: usize| {
                        let g = a[i * n + j];
                        let h = a[k * n + l];
                        a[i * n + j] = g - s * (h + g * tau);
                        a[k * n + l] = h + s * (g - h * tau);
                    };
                    for j in 0..p {
                        rotate(&mut a, j, p, j, q);
                    }
                    for j in (p + 1)..q {
                        rotate(&mut a, p, j, j, q);
                    }
                    for j in (q + 1)..n {
                        rotate(&mut a, p, j, q, j);
                    }
                    if let Some(vm) = v.as_mut() {
                        for j in 0..n {
                            rotate(vm, j, p, j, q);
                        }
                    }
                }
            }
        }

        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }

    let mut offdiag = 0.0f64;
    for p in 0..n.saturating_sub(1) {
        for q in (p + 1)..n {
            offdiag += a[p * n + q].abs();
        }
    }
    Err(NumlinError::ConvergenceFailure {
        sweeps: sweep_budget,
        offdiag,
    })
}
