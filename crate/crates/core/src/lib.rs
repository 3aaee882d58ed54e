//! Desk-scale toolkit for training small Vision Transformers with DINO
//! self-distillation and measuring the layer-wise effective encoding
//! dimension (EED) of their token representations.
//!
//! The crate is organized around the analysis pipeline:
//!
//! * [`numlin`] — dense tensors, covariance estimation, symmetric
//!   eigendecomposition (cyclic Jacobi).
//! * [`spectral`] — spectral entropy, EED, phantom dimensions, the
//!   Gaussian mutual-information proxy and the generalization-bound proxy.
//! * [`autodiff`] — a small reverse-mode tape over dense matrices.
//! * [`vit`] — a from-scratch differentiable Vision Transformer with
//!   per-layer activation capture.
//! * [`dino`] — multi-crop self-distillation training (student/teacher,
//!   EMA, centering and sharpening).
//! * [`data`] — CIFAR-100 ingestion, synthetic texture/object corpora and
//!   the on-disk activation dump.
//! * [`profiler`] — per-layer EED profiles, bottleneck detection and
//!   CSV/SVG export.

pub mod autodiff;
pub mod config;
pub mod data;
pub mod dino;
pub mod numlin;
pub mod optim;
pub mod profiler;
pub mod seed;
pub mod spectral;
pub mod vit;
