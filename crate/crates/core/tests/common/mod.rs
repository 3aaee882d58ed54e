//! Shared helpers for the integration suites.

/// Eigenvalues of a dense symmetric matrix, ascending, by bisection.
///
/// Independent oracle for the Jacobi solver under test: the matrix is
/// reduced to tridiagonal form with Householder reflections, then each
/// eigenvalue is isolated by bisecting on the Sturm count, the number
/// of sign changes in the sequence of leading-principal-minor ratios of
/// `T - x*I` (the characteristic polynomials of the nested submatrices
/// evaluated at `x`). No rotations, no iteration on the matrix itself.
pub fn eig_bisect(dim: usize, entries: &[f64], tol: f64) -> Vec<f64> {
    assert_eq!(entries.len(), dim * dim, "square matrix required");
    if dim == 0 {
        return Vec::new();
    }
    let (diag, off) = tridiagonalize(dim, entries);

    // Gershgorin interval of the tridiagonal form.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..dim {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < dim { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    let pad = tol + 1e-12 * (hi - lo).abs();
    lo -= pad;
    hi += pad;

    // Smallest pivot magnitude the Sturm recurrence may keep; flooring
    // below it only perturbs counts in vanishing neighborhoods.
    let pivmin = off
        .iter()
        .fold(f64::MIN_POSITIVE, |m, &b| m.max(b * b * f64::MIN_POSITIVE));

    (0..dim)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                if b - a <= tol {
                    break;
                }
                let mid = 0.5 * (a + b);
                if sturm_count_below(&diag, &off, pivmin, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Householder reduction to symmetric tridiagonal form; returns the
/// diagonal and subdiagonal. Orthogonal similarity, so the spectrum is
/// preserved to round-off.
fn tridiagonalize(d: usize, entries: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = entries.to_vec();
    for k in 0..d.saturating_sub(2) {
        let norm2: f64 = ((k + 1)..d).map(|i| a[i * d + k] * a[i * d + k]).sum();
        if norm2 == 0.0 {
            continue;
        }
        let norm = norm2.sqrt();
        let x0 = a[(k + 1) * d + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };

        let mut v = vec![0.0f64; d];
        for i in (k + 1)..d {
            v[i] = a[i * d + k];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let vnorm = vnorm2.sqrt();
        for t in v.iter_mut() {
            *t /= vnorm;
        }

        // P A P with P = I - 2vv^T, via u = Av and w = u - (v^T u)v.
        let mut u = vec![0.0f64; d];
        for i in 0..d {
            let mut s = 0.0;
            for j in (k + 1)..d {
                s += a[i * d + j] * v[j];
            }
            u[i] = s;
        }
        let vu: f64 = v.iter().zip(&u).map(|(x, y)| x * y).sum();
        let w: Vec<f64> = u.iter().zip(&v).map(|(ui, vi)| ui - vu * vi).collect();
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] -= 2.0 * (v[i] * w[j] + w[i] * v[j]);
            }
        }
    }
    let diag = (0..d).map(|i| a[i * d + i]).collect();
    let off = (0..d.saturating_sub(1)).map(|i| a[(i + 1) * d + i]).collect();
    (diag, off)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`:
/// negative pivots of the LDL^T recurrence on `T - x*I`.
fn sturm_count_below(diag: &[f64], off: &[f64], pivmin: f64, x: f64) -> usize {
    let mut negatives = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        negatives += 1;
    }
    for i in 1..diag.len() {
        q = (diag[i] - x) - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            negatives += 1;
        }
    }
    negatives
}
