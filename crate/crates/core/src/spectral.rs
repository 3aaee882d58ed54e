//! Scalar diagnostics on eigenvalue spectra: spectral entropy, effective
//! encoding dimension (EED), phantom-dimension counting, the Gaussian
//! mutual-information proxy and the generalization-bound proxy.
//!
//! All entropies are in nats; the base cancels inside the EED exponential
//! anyway. The convention `0·ln 0 = 0` applies throughout.

use crate::numlin::{sym_eig, CovarianceMatrix, NumlinError};
use thiserror::Error;

/// Default relative threshold under which a nonzero eigenvalue counts as a
/// phantom dimension (well below any meaningful variance share at 64-bit
/// precision).
pub const PHANTOM_REL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("negative eigenvalue {0} in spectrum")]
    NegativeEigenvalue(f64),
    #[error(transparent)]
    Numlin(#[from] NumlinError),
}

/// Eigenvalues of one layer covariance plus every derived diagnostic.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Descending eigenvalues the report was built from. May be empty on
    /// reports reloaded from CSV, where only the derived scalars survive.
    pub eigenvalues: Vec<f64>,
    /// Embedding dimension D the spectrum lives in.
    pub dim: usize,
    pub entropy_nats: f64,
    pub n_eff: f64,
    pub eed_percent: f64,
    pub phantom_count: usize,
    pub total_variance: f64,
}

impl SpectrumReport {
    /// Builds the full report from a descending nonnegative spectrum.
    pub fn from_eigenvalues(
        eigenvalues: Vec<f64>,
        phantom_rel_threshold: f64,
    ) -> Result<Self, SpectralError> {
        let dim = eigenvalues.len();
        let probs = normalize_spectrum(&eigenvalues)?;
        let entropy_nats = spectral_entropy(&probs);
        let positive = eigenvalues.iter().filter(|&&l| l > 0.0).count();
        // exp(S) can overshoot the positive count by a few ulps; the bound
        // 1 <= n_eff <= #positive is part of the report's contract.
        let n_eff = entropy_nats.exp().clamp(1.0, positive as f64);
        Ok(Self {
            total_variance: eigenvalues.iter().sum(),
            phantom_count: phantom_count(&eigenvalues, phantom_rel_threshold),
            eed_percent: eed_percent(n_eff, dim),
            eigenvalues,
            dim,
            entropy_nats,
            n_eff,
        })
    }
}

/// Normalized spectral distribution `p_k = λ_k / Σ λ_j`.
pub fn normalize_spectrum(eigenvalues: &[f64]) -> Result<Vec<f64>, SpectralError> {
    if let Some(&neg) = eigenvalues.iter().find(|&&l| l < 0.0) {
        return Err(SpectralError::NegativeEigenvalue(neg));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(SpectralError::DegenerateSpectrum(
            "all eigenvalues are zero".into(),
        ));
    }
    Ok(eigenvalues.iter().map(|&l| l / total).collect())
}

/// Shannon entropy `−Σ p ln p` in nats, with `0·ln 0 = 0`.
pub fn spectral_entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Effective encoding dimension: the exponential of the spectral entropy.
/// Isotropic spectra give `n_eff ≈ D`, a rank-1 spectrum gives exactly 1.
pub fn eed(probs: &[f64]) -> f64 {
    spectral_entropy(probs).exp()
}

/// EED as a percentage of the embedding dimension.
pub fn eed_percent(n_eff: f64, dim: usize) -> f64 {
    100.0 * n_eff / dim as f64
}

/// Number of phantom dimensions: eigenvalues that are nonzero but below
/// `rel_threshold · λ₁`.
pub fn phantom_count(eigenvalues: &[f64], rel_threshold: f64) -> usize {
    let lmax = eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    if lmax <= 0.0 {
        return 0;
    }
    let cut = rel_threshold * lmax;
    eigenvalues.iter().filter(|&&l| l > 0.0 && l < cut).count()
}

/// Gaussian mutual-information proxy `½ log det(I + Σ)` evaluated on the
/// eigenvalues as `½ Σ ln(1 + λ_k)`.
pub fn gaussian_mi_proxy(sigma: &CovarianceMatrix) -> Result<f64, SpectralError> {
    let eigenvalues = sym_eig(sigma)?;
    Ok(gaussian_mi_proxy_from_eigenvalues(&eigenvalues))
}

/// Same proxy when the spectrum is already available. `ln_1p` keeps the
/// per-eigenvalue term accurate when λ is tiny.
pub fn gaussian_mi_proxy_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    0.5 * eigenvalues.iter().map(|&l| l.ln_1p()).sum::<f64>()
}

/// Generalization-bound proxy `sqrt(n_eff / M)`. The proportionality
/// constant is fixed to 1; treat the output as arbitrary units.
pub fn generalization_bound(n_eff: f64, sample_count: usize) -> f64 {
    (n_eff / sample_count as f64).sqrt()
}

/// The two §2.2-style quantities reported side by side. The bound and the
/// MI proxy are different order-of-magnitude arguments; no identity holds
/// between them and none is asserted.
#[derive(Debug, Clone)]
pub struct GeneralizationProxy {
    /// `½ log det(I + Σ)`, nats.
    pub mi_proxy_nats: f64,
    /// `sqrt(n_eff / M)`, arbitrary units.
    pub bound_value: f64,
    pub sample_count: usize,
}

impl GeneralizationProxy {
    pub fn new(mi_proxy_nats: f64, n_eff: f64, sample_count: usize) -> Self {
        Self {
            mi_proxy_nats,
            bound_value: generalization_bound(n_eff, sample_count),
            sample_count,
        }
    }
}

/// Synthesizes a spectrum of size `dim` whose EED equals `n_eff_target`.
///
/// Uses a one-hot/uniform mixture `p_k = w·[k=0] + (1−w)/D` and bisects the
/// mixture weight until the entropy matches `ln(n_eff_target)`. Useful for
/// building fixture profiles with prescribed EED percentages.
pub fn spectrum_with_eed(dim: usize, n_eff_target: f64) -> Result<Vec<f64>, SpectralError> {
    if !(1.0..=dim as f64).contains(&n_eff_target) {
        return Err(SpectralError::DegenerateSpectrum(format!(
            "target EED {n_eff_target} outside [1, {dim}]"
        )));
    }
    let target_entropy = n_eff_target.ln();
    let mix = |w: f64| -> Vec<f64> {
        let base = (1.0 - w) / dim as f64;
        let mut p = vec![base; dim];
        p[0] += w;
        p
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64); // entropy decreases in w
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spectral_entropy(&mix(mid)) > target_entropy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mix(0.5 * (lo + hi)))
}
