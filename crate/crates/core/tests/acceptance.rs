//! Acceptance gate: eight seeded end-to-end checks, one printed line each.
//!
//! Runs under a custom harness (`harness = false`) so every criterion
//! reports `[PASS]`/`[FAIL]` with its measured values and elapsed time
//! even when the default runner would capture stdout. Tolerances, seeds
//! and time budgets are frozen; the process exits nonzero if any
//! criterion fails, which fails `cargo test --workspace`.
//!
//! The two training criteria dominate the runtime: the collapse
//! ablation trains two 200-step models and the bottleneck reproduction
//! trains two 2000-step desk models, all on one core.

mod common;

use eed_core::autodiff::{gradcheck, Graph, VarId};
use eed_core::data::{gen_object_dataset, gen_texture_dataset, read_dump, write_dump};
use eed_core::dino::{train, DinoConfig, TrainOptions};
use eed_core::numlin::{sym_eig, CovarianceMatrix, Tensor};
use eed_core::profiler::{
    bottleneck, collect_probe_activations, compare_eed_sequences, profile, profile_from_dump,
    profile_to_csv, CovarianceVariant, ProbeSpec,
};
use eed_core::spectral::{SpectrumReport, PHANTOM_REL_THRESHOLD};
use eed_core::vit::{ParameterSet, ViTConfig};
use eed_core::seed;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Criterion = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, f64, Criterion); 8] = [
        ("spectral analytic recovery", 1.0, spectral_analytic),
        ("eed invariance under scaling and rotation", 10.0, invariance),
        ("jacobi eigenvalues vs bisection oracle", 30.0, eigensolver_oracle),
        ("autodiff gradients vs central differences", 120.0, gradient_suite),
        ("centering ablation separates collapse", 300.0, collapse_ablation),
        ("object corpus dips, texture stays flat", 1800.0, bottleneck_reproduction),
        ("live profile matches dump, csv deterministic", 60.0, profile_plumbing),
        ("fixture profiles: argmin and dataset ordering", 1.0, fixture_reproduction),
    ];

    // Positional args filter by substring, like the default harness.
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();

    let mut failed = 0usize;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| Err(panic_text(&p)));
        let secs = started.elapsed().as_secs_f64();
        let clock = format!("{secs:.2}s of {budget:.0}s");
        match outcome {
            Ok(detail) if secs <= *budget => {
                println!("[PASS] {}/8 {name}: {detail} ({clock})", i + 1);
            }
            Ok(detail) => {
                failed += 1;
                println!("[FAIL] {}/8 {name}: over budget; {detail} ({clock})", i + 1);
            }
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}/8 {name}: {why} ({clock})", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} of 8 acceptance criteria failed");
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panicked: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panicked: {s}")
    } else {
        "panicked".into()
    }
}

fn fail(msg: String) -> Result<String, String> {
    Err(msg)
}

// ---------------------------------------------------------------------
// 1. Analytic spectra with closed-form effective dimension.

/// exp of the two-point entropy -(0.75 ln 0.75 + 0.25 ln 0.25), frozen
/// from an independent 50-digit evaluation.
const TWO_POINT_N_EFF: f64 = 1.7547653506033233;

fn spectral_analytic() -> Result<String, String> {
    let tol = 1e-9;

    let mut worst_uniform = 0.0f64;
    for d in [2usize, 7, 16, 64, 384] {
        let report = SpectrumReport::from_eigenvalues(vec![0.37; d], PHANTOM_REL_THRESHOLD)
            .map_err(|e| e.to_string())?;
        worst_uniform = worst_uniform.max((report.n_eff - d as f64).abs());
    }
    if worst_uniform > tol {
        return fail(format!("uniform spectrum n_eff off by {worst_uniform:.3e} > {tol:.0e}"));
    }

    let mut one_hot = vec![0.0f64; 384];
    one_hot[0] = 0.9;
    let report =
        SpectrumReport::from_eigenvalues(one_hot, PHANTOM_REL_THRESHOLD).map_err(|e| e.to_string())?;
    if report.n_eff != 1.0 {
        return fail(format!("one-hot spectrum n_eff = {} (want exactly 1)", report.n_eff));
    }
    if (report.eed_percent - 100.0 / 384.0).abs() > 0.0 {
        return fail(format!("one-hot eed percent = {} (want 100/384)", report.eed_percent));
    }

    let report = SpectrumReport::from_eigenvalues(vec![0.75, 0.25], PHANTOM_REL_THRESHOLD)
        .map_err(|e| e.to_string())?;
    let two_point_err = (report.n_eff - TWO_POINT_N_EFF).abs();
    if two_point_err > tol {
        return fail(format!("two-point n_eff off by {two_point_err:.3e} > {tol:.0e}"));
    }

    Ok(format!(
        "uniform max |dn_eff| {worst_uniform:.2e}, one-hot exact, two-point |dn_eff| {two_point_err:.2e}"
    ))
}

// ---------------------------------------------------------------------
// 2. EED is invariant under positive scaling and orthogonal rotation.

fn rand_symmetric_with_log_uniform_spectrum(d: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let mut m = vec![0.0f64; d * d];
    for i in 0..d {
        m[i * d + i] = 10f64.powf(rng.random_range(-3.0..3.0));
    }
    givens_mix(&mut m, d, rng);
    m
}

/// Applies `3d` random Givens similarity rotations in place; exactly
/// orthogonal by construction, so the spectrum is preserved.
fn givens_mix(m: &mut [f64], d: usize, rng: &mut ChaCha12Rng) {
    for _ in 0..3 * d {
        let i = rng.random_range(0..d);
        let mut j = rng.random_range(0..d - 1);
        if j >= i {
            j += 1;
        }
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let (s, c) = theta.sin_cos();
        for k in 0..d {
            let (a, b) = (m[i * d + k], m[j * d + k]);
            m[i * d + k] = c * a - s * b;
            m[j * d + k] = s * a + c * b;
        }
        for k in 0..d {
            let (a, b) = (m[k * d + i], m[k * d + j]);
            m[k * d + i] = c * a - s * b;
            m[k * d + j] = s * a + c * b;
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let s = 0.5 * (m[i * d + j] + m[j * d + i]);
            m[i * d + j] = s;
            m[j * d + i] = s;
        }
    }
}

fn eed_of(entries: &[f64], d: usize) -> Result<f64, String> {
    let sigma =
        CovarianceMatrix::from_entries(d, entries.to_vec(), true, d).map_err(|e| e.to_string())?;
    let evals = sym_eig(&sigma).map_err(|e| e.to_string())?;
    let report =
        SpectrumReport::from_eigenvalues(evals, PHANTOM_REL_THRESHOLD).map_err(|e| e.to_string())?;
    Ok(report.eed_percent)
}

fn invariance() -> Result<String, String> {
    let tol = 1e-6;
    let trials = 100;
    let mut worst_scale = 0.0f64;
    let mut worst_rotation = 0.0f64;
    for t in 0..trials {
        let mut rng = seed::rng(4202, &format!("trial/{t}"));
        let d = rng.random_range(2..=16);
        let m = rand_symmetric_with_log_uniform_spectrum(d, &mut rng);
        let base = eed_of(&m, d)?;

        for c in [1e-6, 1.0, 1e6] {
            let scaled: Vec<f64> = m.iter().map(|v| v * c).collect();
            worst_scale = worst_scale.max((eed_of(&scaled, d)? - base).abs());
        }

        let mut rotated = m.clone();
        givens_mix(&mut rotated, d, &mut rng);
        worst_rotation = worst_rotation.max((eed_of(&rotated, d)? - base).abs());
    }
    if worst_scale > tol || worst_rotation > tol {
        return fail(format!(
            "eed percent drift: scale {worst_scale:.3e}, rotation {worst_rotation:.3e} (tol {tol:.0e})"
        ));
    }
    Ok(format!(
        "{trials} trials, d in 2..=16: scale drift {worst_scale:.2e}, rotation drift {worst_rotation:.2e}"
    ))
}

// ---------------------------------------------------------------------
// 3. Jacobi eigenvalues against the independent bisection oracle.

fn eigensolver_oracle() -> Result<String, String> {
    let matrices = 500;
    let tol = 1e-9;
    let mut worst_eig = 0.0f64;
    let mut worst_trace = 0.0f64;
    for t in 0..matrices {
        let mut rng = seed::rng(4203, &format!("matrix/{t}"));
        let d = rng.random_range(1..=16);
        let mut m = vec![0.0f64; d * d];
        for i in 0..d {
            for j in i..d {
                let v = rng.random_range(-1.0..1.0);
                m[i * d + j] = v;
                m[j * d + i] = v;
            }
        }

        let sigma =
            CovarianceMatrix::from_entries(d, m.clone(), true, d).map_err(|e| e.to_string())?;
        let jacobi = sym_eig(&sigma).map_err(|e| e.to_string())?; // descending
        let mut oracle = common::eig_bisect(d, &m, 1e-12); // ascending
        oracle.reverse();

        for (a, b) in jacobi.iter().zip(&oracle) {
            worst_eig = worst_eig.max((a - b).abs());
        }
        let trace: f64 = (0..d).map(|i| m[i * d + i]).sum();
        let sum: f64 = jacobi.iter().sum();
        let mass: f64 = jacobi.iter().map(|v| v.abs()).sum();
        // relative to the spectral mass so near-zero traces stay testable
        worst_trace = worst_trace.max((sum - trace).abs() / trace.abs().max(mass).max(1e-300));
    }
    if worst_eig > tol {
        return fail(format!("max eigenvalue error {worst_eig:.3e} > {tol:.0e}"));
    }
    if worst_trace > tol {
        return fail(format!("trace drift {worst_trace:.3e} > {tol:.0e} relative"));
    }
    Ok(format!(
        "{matrices} random symmetric matrices, d in 1..=16: max |dlambda| {worst_eig:.2e}, trace drift {worst_trace:.2e}"
    ))
}

// ---------------------------------------------------------------------
// 4. Every differentiable op against central differences.

fn rt(rows: usize, cols: usize, rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> Tensor<f64> {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::from_vec_unchecked(vec![rows, cols], data)
}

/// Row-normalized positive tensor, usable as a cross-entropy target.
fn rt_prob(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Tensor<f64> {
    let mut t = rt(rows, cols, rng, 0.05, 1.0);
    for i in 0..rows {
        let s: f64 = t.row(i).iter().sum();
        for j in 0..cols {
            let v = t.get2(i, j) / s;
            t.set2(i, j, v);
        }
    }
    t
}

fn scalarize(g: &mut Graph<f64>, y: VarId, wr: &Tensor<f64>, wc: &Tensor<f64>) -> VarId {
    let wr = g.constant(wr.clone());
    let wc = g.constant(wc.clone());
    let t = g.matmul(wr, y);
    g.matmul(t, wc)
}

fn gradient_suite() -> Result<String, String> {
    const OPS: [&str; 13] = [
        "matmul",
        "add",
        "add_row",
        "mul_scalar",
        "gelu",
        "softmax_rows",
        "layernorm",
        "transpose",
        "concat_rows",
        "slice_rows",
        "attention",
        "l2norm_rows",
        "ce_loss_mean",
    ];
    let configs_per_op = 50;
    let mut max_rel_err = 0.0f64;
    let mut elements = 0usize;

    for op in OPS {
        for t in 0..configs_per_op {
            let mut rng = seed::rng(4204, &format!("{op}/{t}"));
            let report = check_op(op, &mut rng).map_err(|e| format!("{op} config {t}: {e}"))?;
            max_rel_err = max_rel_err.max(report.max_rel_err);
            elements += report.elements_checked;
        }
    }
    Ok(format!(
        "{} ops x {configs_per_op} configs, {elements} partials, max rel err {max_rel_err:.2e} (tol 1e-5)",
        OPS.len()
    ))
}

fn check_op(
    op: &str,
    rng: &mut ChaCha12Rng,
) -> Result<eed_core::autodiff::GradCheckReport, String> {
    let r = rng.random_range(2..=4usize);
    let c = rng.random_range(2..=5usize);
    let wr = rt(1, r, rng, -1.0, 1.0);
    let run = match op {
        "matmul" => {
            let k = rng.random_range(1..=4usize);
            let a = rt(r, k, rng, -1.0, 1.0);
            let b = rt(k, c, rng, -1.0, 1.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a, b], move |g, ids| {
                let y = g.matmul(ids[0], ids[1]);
                scalarize(g, y, &wr, &wc)
            })
        }
        "add" => {
            let a = rt(r, c, rng, -1.0, 1.0);
            let b = rt(r, c, rng, -1.0, 1.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a, b], move |g, ids| {
                let y = g.add(ids[0], ids[1]);
                scalarize(g, y, &wr, &wc)
            })
        }
        "add_row" => {
            let a = rt(r, c, rng, -1.0, 1.0);
            let row = rt(1, c, rng, -1.0, 1.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a, row], move |g, ids| {
                let y = g.add_row(ids[0], ids[1]);
                scalarize(g, y, &wr, &wc)
            })
        }
        "mul_scalar" => {
            let a = rt(r, c, rng, -1.0, 1.0);
            let k = rng.random_range(-2.0..2.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a], move |g, ids| {
                let y = g.mul_scalar(ids[0], k);
                scalarize(g, y, &wr, &wc)
            })
        }
        "gelu" => {
            let a = rt(r, c, rng, -3.0, 3.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a], move |g, ids| {
                let y = g.gelu(ids[0]);
                scalarize(g, y, &wr, &wc)
            })
        }
        "softmax_rows" => {
            let a = rt(r, c, rng, -2.0, 2.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a], move |g, ids| {
                let y = g.softmax_rows(ids[0]);
                scalarize(g, y, &wr, &wc)
            })
        }
        "layernorm" => {
            let a = rt(r, c, rng, -1.0, 1.0);
            let gain = rt(1, c, rng, 0.5, 1.5);
            let bias = rt(1, c, rng, -0.3, 0.3);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a, gain, bias], move |g, ids| {
                let y = g.layernorm(ids[0], ids[1], ids[2], 1e-5);
                scalarize(g, y, &wr, &wc)
            })
        }
        "transpose" => {
            let a = rt(c, r, rng, -1.0, 1.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a], move |g, ids| {
                let y = g.transpose(ids[0]);
                scalarize(g, y, &wr, &wc)
            })
        }
        "concat_rows" => {
            let r2 = rng.random_range(1..=3usize);
            let a = rt(r, c, rng, -1.0, 1.0);
            let b = rt(r2, c, rng, -1.0, 1.0);
            let wr = rt(1, r + r2, rng, -1.0, 1.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a, b], move |g, ids| {
                let y = g.concat_rows(&[ids[0], ids[1]]);
                scalarize(g, y, &wr, &wc)
            })
        }
        "slice_rows" => {
            let a = rt(r, c, rng, -1.0, 1.0);
            let start = rng.random_range(0..r);
            let len = rng.random_range(1..=r - start);
            let wr = rt(1, len, rng, -1.0, 1.0);
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a], move |g, ids| {
                let y = g.slice_rows(ids[0], start, len);
                scalarize(g, y, &wr, &wc)
            })
        }
        "attention" => {
            let heads = rng.random_range(1..=2usize);
            let dim = heads * rng.random_range(1..=3usize);
            let q = rt(r, dim, rng, -1.0, 1.0);
            let k = rt(r, dim, rng, -1.0, 1.0);
            let v = rt(r, dim, rng, -1.0, 1.0);
            let wc = rt(dim, 1, rng, -1.0, 1.0);
            gradcheck(&[q, k, v], move |g, ids| {
                let y = g.attention(ids[0], ids[1], ids[2], heads);
                scalarize(g, y, &wr, &wc)
            })
        }
        "l2norm_rows" => {
            // rows bounded away from the origin so the norm is smooth
            let mut a = rt(r, c, rng, 0.3, 1.5);
            for v in a.data_mut() {
                if rng.random_range(0.0..1.0) < 0.5 {
                    *v = -*v;
                }
            }
            let wc = rt(c, 1, rng, -1.0, 1.0);
            gradcheck(&[a], move |g, ids| {
                let y = g.l2norm_rows(ids[0], 1e-12);
                scalarize(g, y, &wr, &wc)
            })
        }
        "ce_loss_mean" => {
            let logits = rt(r, c, rng, -1.0, 1.0);
            let target = rt_prob(r, c, rng);
            let inv_temp = rng.random_range(0.5..8.0);
            gradcheck(&[logits], move |g, ids| {
                g.ce_loss_mean(ids[0], target.clone(), inv_temp)
            })
        }
        other => return Err(format!("unknown op {other}")),
    };
    run.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------
// 5. Centering ablation: without it the teacher collapses, with it the
//    teacher stays spread. Thresholds frozen after calibration.

fn collapse_ablation() -> Result<String, String> {
    let vit_cfg = ViTConfig {
        image_size: 16,
        patch_size: 4,
        embed_dim: 32,
        num_layers: 2,
        num_heads: 2,
        mlp_ratio: 2,
        include_cls_token: true,
    };
    let dino_cfg = DinoConfig {
        out_dim: 64,
        head_hidden_dim: 64,
        head_bottleneck_dim: 16,
        student_temp: 0.1,
        teacher_temp: 0.04,
        teacher_momentum: 0.9, // fast EMA so 200 steps show the teacher's fate
        center_momentum: 0.9,
        num_local_crops: 2,
        global_crop_scale: (0.5, 1.0),
        local_crop_scale: (0.15, 0.45),
    };
    let dataset = gen_object_dataset(7, 64, 16);
    let opts = |centering: bool| TrainOptions {
        epochs: 999,
        batch_size: 4,
        base_lr: 1e-3,
        final_lr: 1e-6,
        warmup_steps: 0,
        weight_decay: 0.04,
        max_steps: Some(200),
        centering,
        checkpoint_every: 0,
        checkpoint_dir: None,
    };

    let ln_k = (dino_cfg.out_dim as f64).ln();
    let run = |centering: bool| -> Result<f64, String> {
        let out = train(&dataset, &vit_cfg, &dino_cfg, &opts(centering), 42)
            .map_err(|e| e.to_string())?;
        Ok(out.metrics.last().expect("200 steps logged").teacher_entropy)
    };
    let h_off = run(false)?;
    let h_on = run(true)?;

    let frac_off = h_off / ln_k;
    let frac_on = h_on / ln_k;
    if frac_off >= 0.25 {
        return fail(format!(
            "no centering: teacher entropy {h_off:.4} is {:.1}% of ln({}) (need < 25%)",
            100.0 * frac_off,
            dino_cfg.out_dim
        ));
    }
    if frac_on <= 0.50 {
        return fail(format!(
            "with centering: teacher entropy {h_on:.4} is {:.1}% of ln({}) (need > 50%)",
            100.0 * frac_on,
            dino_cfg.out_dim
        ));
    }
    Ok(format!(
        "200 steps, seed 42: no centering {h_off:.4} nats ({:.2}% of ln 64) < 25%, centering {h_on:.4} nats ({:.1}%) > 50%",
        100.0 * frac_off,
        100.0 * frac_on
    ))
}

// ---------------------------------------------------------------------
// 6. The central qualitative claim at desk scale: training on an
//    object-centric corpus produces a mid-depth EED dip that the
//    texture-centric corpus does not show.

fn bottleneck_reproduction() -> Result<String, String> {
    let vit_cfg = ViTConfig::desk();
    let dino_cfg = DinoConfig::desk();
    let seed_value = 42u64;
    let opts = TrainOptions {
        epochs: 999,
        batch_size: 2,
        base_lr: 5e-4,
        final_lr: 1e-6,
        warmup_steps: 50,
        weight_decay: 0.04,
        max_steps: Some(2000),
        centering: true,
        checkpoint_every: 0,
        checkpoint_dir: None,
    };
    let spec = ProbeSpec {
        probe_images: 192,
        seed: 0,
        variant: CovarianceVariant::Centered,
        include_cls: true,
    };

    let run = |dataset: &eed_core::data::ImageDataset| -> Result<_, String> {
        let out =
            train(dataset, &vit_cfg, &dino_cfg, &opts, seed_value).map_err(|e| e.to_string())?;
        let params = out
            .state
            .teacher
            .backbone_parameter_set(&vit_cfg, &dino_cfg)
            .map_err(|e| e.to_string())?;
        let prof = profile(&vit_cfg, &params, dataset, &spec).map_err(|e| e.to_string())?;
        prof.bottleneck().map_err(|e| e.to_string())
    };

    let object = run(&gen_object_dataset(42, 256, 32))?;
    let texture = run(&gen_texture_dataset(42, 256, 32))?;

    let gap = texture.min_eed_percent - object.min_eed_percent;
    let detail = format!(
        "seed {seed_value}, 2000 steps each: object dip {:.1}pp (min {:.1}% at layer {}), texture dip {:.1}pp (min {:.1}%), min gap {gap:.1}pp",
        object.u_shape_score,
        object.min_eed_percent,
        object.argmin_layer,
        texture.u_shape_score,
        texture.min_eed_percent
    );
    if object.u_shape_score < 10.0 {
        return fail(format!("object dip below 10pp; {detail}"));
    }
    if texture.u_shape_score > 3.0 {
        return fail(format!("texture dip above 3pp; {detail}"));
    }
    if gap < 15.0 {
        return fail(format!("min-EED gap below 15pp; {detail}"));
    }
    Ok(detail)
}

// ---------------------------------------------------------------------
// 7. Profile plumbing: live capture, dump round-trip and CSV export
//    agree; rendering is byte-deterministic.

fn profile_plumbing() -> Result<String, String> {
    let cfg = ViTConfig {
        image_size: 16,
        patch_size: 4,
        embed_dim: 16,
        num_layers: 4,
        num_heads: 2,
        mlp_ratio: 2,
        include_cls_token: true,
    };
    let params = ParameterSet::<f32>::init(&cfg, None, &mut seed::rng(3, "init"));
    let dataset = gen_object_dataset(5, 48, 16);
    let spec = ProbeSpec {
        probe_images: 32,
        seed: 11,
        variant: CovarianceVariant::Centered,
        include_cls: true,
    };

    let live = profile(&cfg, &params, &dataset, &spec).map_err(|e| e.to_string())?;

    let acts = collect_probe_activations(&cfg, &params, &dataset, &spec).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dump_path = dir.path().join("probe.eedv1");
    write_dump(&dump_path, cfg.content_hash(), &acts.layers).map_err(|e| e.to_string())?;
    let dump = read_dump(&dump_path).map_err(|e| e.to_string())?;
    let dumped = profile_from_dump(&dump, "dump", spec.variant, spec.include_cls)
        .map_err(|e| e.to_string())?;

    if dumped.num_layers() != live.num_layers() {
        return fail(format!(
            "layer count {} live vs {} dumped",
            live.num_layers(),
            dumped.num_layers()
        ));
    }
    let mut worst = 0.0f64;
    for (a, b) in live.reports.iter().zip(&dumped.reports) {
        worst = worst.max((a.entropy_nats - b.entropy_nats).abs());
        worst = worst.max((a.n_eff - b.n_eff).abs());
        worst = worst.max((a.eed_percent - b.eed_percent).abs());
        worst = worst.max((a.phantom_count as f64 - b.phantom_count as f64).abs());
    }
    if worst > 1e-7 {
        return fail(format!("live vs dump metric drift {worst:.3e} > 1e-7"));
    }

    let again = profile(&cfg, &params, &dataset, &spec).map_err(|e| e.to_string())?;
    let csv_a = profile_to_csv(&live).map_err(|e| e.to_string())?;
    let csv_b = profile_to_csv(&again).map_err(|e| e.to_string())?;
    if csv_a != csv_b {
        return fail("repeated profile rendered different csv bytes".into());
    }

    Ok(format!(
        "{} layers: live vs dump drift {worst:.2e} (tol 1e-7), csv byte-identical across reruns",
        live.num_layers()
    ))
}

// ---------------------------------------------------------------------
// 8. Published-profile fixtures: the dip sits mid-network and the
//    datasets order by their minimum EED.

fn fixture_reproduction() -> Result<String, String> {
    let tinyimagenet = vec![58.1, 40.0, 30.5, 45.0, 92.5];
    let cifar100 = vec![55.0, 35.0, 23.0, 40.0, 90.0];
    let ucmerced = vec![95.0, 94.8, 95.1, 94.9, 95.2];

    let summary = bottleneck(&tinyimagenet).map_err(|e| e.to_string())?;
    if summary.argmin_layer != 2 {
        return fail(format!(
            "fixture argmin at layer {} (want layer 2, the 30.5% entry)",
            summary.argmin_layer
        ));
    }
    if !(2..=4).contains(&summary.argmin_layer) {
        return fail("fixture argmin outside the layer 2..=4 band".into());
    }
    if (summary.min_eed_percent - 30.5).abs() > 1e-12 {
        return fail(format!("fixture min {} (want 30.5)", summary.min_eed_percent));
    }

    let entries = vec![
        ("ucmerced".to_string(), ucmerced),
        ("cifar100".to_string(), cifar100),
        ("tinyimagenet".to_string(), tinyimagenet),
    ];
    let rows = compare_eed_sequences(&entries).map_err(|e| e.to_string())?;
    let order: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    if order != ["cifar100", "tinyimagenet", "ucmerced"] {
        return fail(format!("comparison order {order:?}"));
    }
    Ok(format!(
        "argmin layer 2 (min 30.5%), ranking cifar100 {:.1}% < tinyimagenet {:.1}% < ucmerced {:.1}%",
        rows[0].summary.min_eed_percent,
        rows[1].summary.min_eed_percent,
        rows[2].summary.min_eed_percent
    ))
}
