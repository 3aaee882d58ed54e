//! Central-difference gradient checking for tape-built scalar functions.
//!
//! The builder closure must be a pure function of the leaf values: it is
//! re-invoked on a fresh graph for every perturbed evaluation.

use super::{AutodiffError, Graph, VarId};
use crate::numlin::{Real, Tensor};

/// Step and tolerance for checking in 64-bit precision.
pub const F64_EPS: f64 = 1e-5;
pub const F64_TOL: f64 = 1e-5;

/// Step and tolerance for checking in 32-bit precision, where the forward
/// pass itself only carries about 7 significant digits.
pub const F32_EPS: f64 = 1e-3;
pub const F32_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub elements_checked: usize,
}

/// Checks every element of every input against a central difference,
/// at the default 64-bit step and tolerance.
pub fn gradcheck<F>(inputs: &[Tensor<f64>], build: F) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Graph<f64>, &[VarId]) -> VarId,
{
    gradcheck_with(inputs, F64_EPS, F64_TOL, build)
}

/// 32-bit variant with the coarser step and tolerance that precision allows.
pub fn gradcheck_f32<F>(inputs: &[Tensor<f32>], build: F) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Graph<f32>, &[VarId]) -> VarId,
{
    gradcheck_with(inputs, F32_EPS, F32_TOL, build)
}

pub fn gradcheck_with<T, F>(
    inputs: &[Tensor<T>],
    eps: f64,
    tol: f64,
    build: F,
) -> Result<GradCheckReport, AutodiffError>
where
    T: Real,
    F: Fn(&mut Graph<T>, &[VarId]) -> VarId,
{
    let mut graph = Graph::new();
    let ids: Vec<VarId> = inputs.iter().map(|t| graph.leaf(t.clone())).collect();
    let out = build(&mut graph, &ids);
    graph.backward(out)?;
    let analytic: Vec<Tensor<T>> = ids
        .iter()
        .enumerate()
        .map(|(idx, &id)| {
            graph
                .grad(id)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(inputs[idx].shape().to_vec()))
        })
        .collect();

    let eval = |perturbed: &[Tensor<T>]| -> f64 {
        let mut g = Graph::new();
        let ids: Vec<VarId> = perturbed.iter().map(|t| g.leaf(t.clone())).collect();
        let out = build(&mut g, &ids);
        g.value(out).data()[0].as_f64()
    };

    let mut max_rel_err = 0.0f64;
    let mut elements_checked = 0usize;
    for (idx, input) in inputs.iter().enumerate() {
        for e in 0..input.numel() {
            let base = input.data()[e].as_f64();
            let mut plus = inputs.to_vec();
            plus[idx].data_mut()[e] = T::from_f64(base + eps);
            let mut minus = inputs.to_vec();
            minus[idx].data_mut()[e] = T::from_f64(base - eps);
            // the step actually realized in T, not the requested one;
            // matters in f32 where eps itself rounds
            let step = plus[idx].data()[e].as_f64() - minus[idx].data()[e].as_f64();
            let numeric = (eval(&plus) - eval(&minus)) / step;
            let a = analytic[idx].data()[e].as_f64();
            let rel_err = (a - numeric).abs() / 1.0f64.max(a.abs()).max(numeric.abs());
            if rel_err > tol {
                return Err(AutodiffError::GradCheckFailed {
                    input: idx,
                    element: e,
                    analytic: a,
                    numeric,
                    rel_err,
                    tol,
                });
            }
            max_rel_err = max_rel_err.max(rel_err);
            elements_checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        elements_checked,
    })
}
