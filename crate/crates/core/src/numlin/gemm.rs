//! Dense matrix products in the three layouts the backward passes need.
//!
//! Shape mismatches are programmer errors and panic, like slice indexing.
//! Loop orders are chosen so the innermost loop always walks contiguous
//! rows; at `opt-level 3` these auto-vectorize well enough for the desk
//! training budget.

use super::tensor::{Real, Tensor};

/// `C = A · B` with `A: [M,K]`, `B: [K,N]`.
pub fn matmul_nn<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k) = (a.rows(), a.cols());
    let n = b.cols();
    assert_eq!(k, b.rows(), "matmul_nn: inner dims {k} vs {}", b.rows());
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let arow = a.row(i);
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &aik) in arow.iter().enumerate() {
            let brow = b.row(kk);
            for j in 0..n {
                orow[j] = orow[j] + aik * brow[j];
            }
        }
    }
    Tensor::from_vec_unchecked(vec![m, n], out)
}

/// `C = A · Bᵀ` with `A: [M,K]`, `B: [N,K]`.
pub fn matmul_nt<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k) = (a.rows(), a.cols());
    let n = b.rows();
    assert_eq!(k, b.cols(), "matmul_nt: inner dims {k} vs {}", b.cols());
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        let arow = a.row(i);
        for j in 0..n {
            let brow = b.row(j);
            let mut acc = T::zero();
            for kk in 0..k {
                acc = acc + arow[kk] * brow[kk];
            }
            out.push(acc);
        }
    }
    Tensor::from_vec_unchecked(vec![m, n], out)
}

/// `C = Aᵀ · B` with `A: [K,M]`, `B: [K,N]`.
pub fn matmul_tn<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (k, m) = (a.rows(), a.cols());
    let n = b.cols();
    assert_eq!(k, b.rows(), "matmul_tn: inner dims {k} vs {}", b.rows());
    let mut out = vec![T::zero(); m * n];
    for kk in 0..k {
        let arow = a.row(kk);
        let brow = b.row(kk);
        for (i, &aki) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] = orow[j] + aki * brow[j];
            }
        }
    }
    Tensor::from_vec_unchecked(vec![m, n], out)
}

/// Explicit transpose, used where a materialized `Aᵀ` is genuinely needed.
pub fn transpose<T: Real>(a: &Tensor<T>) -> Tensor<T> {
    let (m, n) = (a.rows(), a.cols());
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let arow = a.row(i);
        for j in 0..n {
            out[j * m + i] = arow[j];
        }
    }
    Tensor::from_vec_unchecked(vec![n, m], out)
}
