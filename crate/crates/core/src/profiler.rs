//! Layer-wise EED profiles: run probe batches through a model (or read a
//! saved activation dump), compute one spectrum report per layer, locate the
//! bottleneck, and export CSV/SVG artifacts.
//!
//! Conventions baked into every profile:
//!
//! * Layer `l` means the post-block residual stream, so layer 0 is the first
//!   transformer block's output and layer L-1 feeds the final norm. The
//!   convention is recorded in the CSV header.
//! * Activations are captured in f32 (the checkpoint precision), pooled
//!   token-major across probe images, and only the covariance/eigen stage
//!   runs in f64. A profile computed live and one recomputed from a written
//!   dump therefore see bit-identical inputs.
//! * The probe subset is a seeded shuffle of the dataset, so a fixed
//!   (params, dataset, probe spec) triple reproduces the same CSV bytes.

use crate::data::{ActivationDump, DataError, ImageDataset};
use crate::numlin::{self, Tensor};
use crate::seed;
use crate::spectral::{
    self, SpectralError, SpectrumReport, PHANTOM_REL_THRESHOLD,
};
use crate::vit::{forward_features, LayerActivations, ParameterSet, ViTConfig, ViTError};
use rand::seq::SliceRandom;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// Default probe pool. With the desk model's 65 tokens per image this pools
/// about 16k rows, comfortably more samples than any embedding width here.
pub const DEFAULT_PROBE_IMAGES: usize = 256;

/// Smallest probe accepted; below this the spectrum estimate is noise.
pub const MIN_PROBE_IMAGES: usize = 8;

const CSV_HEADER: &str = "layer,entropy_nats,n_eff,eed_percent,phantom_count,mi_proxy";
const LAYER_CONVENTION: &str = "layer 0 is the first block output (post-block residual)";

#[derive(Debug, Error)]
pub enum ProfilerError {
    #[error("invalid profile request: {0}")]
    InvalidRequest(String),
    #[error("probe of {available} images is below the minimum of {minimum}")]
    InsufficientProbe { available: usize, minimum: usize },
    #[error("dataset images are {dataset}px but the model expects {model}px")]
    ImageSizeMismatch { dataset: usize, model: usize },
    #[error("degenerate spectrum at layer {layer}: {source}")]
    DegenerateLayer { layer: usize, source: SpectralError },
    #[error(
        "layer count mismatch: {first_label} has {first_layers} layers, \
         {second_label} has {second_layers}"
    )]
    LayerCountMismatch {
        first_label: String,
        first_layers: usize,
        second_label: String,
        second_layers: usize,
    },
    #[error("profile has no layers")]
    EmptyProfile,
    #[error("bottleneck detection needs at least 3 layers, got {0}")]
    TooFewLayers(usize),
    #[error("malformed profile csv: {0}")]
    FormatError(String),
    #[error(transparent)]
    Vit(#[from] ViTError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Whether the layer covariance subtracts the mean embedding first.
/// Centered is the default; the choice is recorded in the profile so two
/// CSVs can never be compared across variants by accident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceVariant {
    #[default]
    Centered,
    Uncentered,
}

impl CovarianceVariant {
    pub fn is_centered(self) -> bool {
        matches!(self, CovarianceVariant::Centered)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CovarianceVariant::Centered => "centered",
            CovarianceVariant::Uncentered => "uncentered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "centered" => Some(CovarianceVariant::Centered),
            "uncentered" => Some(CovarianceVariant::Uncentered),
            _ => None,
        }
    }
}

/// How to draw the probe: how many images, which seed picks them, which
/// covariance to build, and whether the CLS row joins the token pool.
#[derive(Debug, Clone)]
pub struct ProbeSpec {
    pub probe_images: usize,
    pub seed: u64,
    pub variant: CovarianceVariant,
    /// Requested CLS handling; the effective value also requires the model
    /// to have a CLS token and is what the profile records.
    pub include_cls: bool,
}

impl ProbeSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            probe_images: DEFAULT_PROBE_IMAGES,
            seed,
            variant: CovarianceVariant::Centered,
            include_cls: true,
        }
    }
}

/// Pooled per-layer activations from one probe pass, plus the actual counts
/// that went into the pool (the probe clamps to the dataset size).
#[derive(Debug, Clone)]
pub struct ProbeActivations {
    pub layers: Vec<LayerActivations<f32>>,
    pub probe_images: usize,
    pub probe_tokens: usize,
}

/// One spectrum report per layer plus the provenance needed to interpret
/// and reproduce them.
#[derive(Debug, Clone)]
pub struct EEDProfile {
    /// Indexed by layer, `0..L`.
    pub reports: Vec<SpectrumReport>,
    /// Images pooled; 0 when rebuilt from a dump, which stores only rows.
    pub probe_images: usize,
    /// Token rows pooled per layer.
    pub probe_tokens: usize,
    pub config_hash: u64,
    pub dataset_tag: String,
    pub variant: CovarianceVariant,
    pub include_cls: bool,
}

impl EEDProfile {
    pub fn num_layers(&self) -> usize {
        self.reports.len()
    }

    pub fn eed_percents(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.eed_percent).collect()
    }

    pub fn bottleneck(&self) -> Result<BottleneckSummary, ProfilerError> {
        bottleneck(&self.eed_percents())
    }
}

/// Where the profile dips: interior argmin plus the endpoint context that
/// turns it into a U-shape score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BottleneckSummary {
    pub argmin_layer: usize,
    pub min_eed_percent: f64,
    pub first_eed_percent: f64,
    pub last_eed_percent: f64,
    /// `max(0, min(first, last) - interior min)`: positive means the profile
    /// dips below both endpoints; flat or monotone profiles score 0.
    pub u_shape_score: f64,
}

/// Runs the probe subset through the model and pools token embeddings per
/// layer into one `[rows, D]` matrix each. The subset is a seeded shuffle
/// truncated to `probe_images` (clamped to the dataset size).
pub fn collect_probe_activations(
    cfg: &ViTConfig,
    params: &ParameterSet<f32>,
    dataset: &ImageDataset,
    spec: &ProbeSpec,
) -> Result<ProbeActivations, ProfilerError> {
    cfg.validate()?;
    dataset.validate()?;
    let size = dataset.image_size();
    if size != cfg.image_size {
        return Err(ProfilerError::ImageSizeMismatch {
            dataset: size,
            model: cfg.image_size,
        });
    }
    let used = spec.probe_images.min(dataset.len());
    if used < MIN_PROBE_IMAGES {
        return Err(ProfilerError::InsufficientProbe {
            available: used,
            minimum: MIN_PROBE_IMAGES,
        });
    }

    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    indices.shuffle(&mut seed::rng(spec.seed, "probe"));
    indices.truncate(used);

    let drop_cls = cfg.include_cls_token && !spec.include_cls;
    let capture: Vec<usize> = (0..cfg.num_layers).collect();
    let d = cfg.embed_dim;
    let rows_per_image = cfg.num_tokens() - usize::from(drop_cls);
    let mut pooled: Vec<Vec<f32>> =
        vec![Vec::with_capacity(used * rows_per_image * d); cfg.num_layers];
    for &i in &indices {
        let (_, captures) = forward_features::<f32>(cfg, params, &dataset.images[i], &capture)?;
        for c in captures {
            // CLS sits at row 0 of every capture; dropping it means skipping
            // the first D entries of the row-major buffer.
            let start = if drop_cls { d } else { 0 };
            pooled[c.layer_index].extend_from_slice(&c.tokens.data()[start..]);
        }
    }

    let rows = used * rows_per_image;
    let layers = pooled
        .into_iter()
        .enumerate()
        .map(|(l, data)| LayerActivations {
            layer_index: l,
            tokens: Tensor::from_vec(vec![rows, d], data).expect("pooled shape is consistent"),
        })
        .collect();
    Ok(ProbeActivations {
        layers,
        probe_images: used,
        probe_tokens: rows,
    })
}

/// Covariance -> eigenvalues -> report for each pooled layer. The f32 pool
/// is upcast (losslessly) to f64 before any accumulation.
fn reports_from_layers(
    layers: &[LayerActivations<f32>],
    variant: CovarianceVariant,
) -> Result<Vec<SpectrumReport>, ProfilerError> {
    layers
        .iter()
        .map(|layer| {
            let at_layer = |source: SpectralError| ProfilerError::DegenerateLayer {
                layer: layer.layer_index,
                source,
            };
            let h = layer.tokens.cast::<f64>();
            let sigma = numlin::covariance(&h, variant.is_centered())
                .map_err(|e| at_layer(SpectralError::from(e)))?;
            let eigs = numlin::sym_eig(&sigma).map_err(|e| at_layer(SpectralError::from(e)))?;
            SpectrumReport::from_eigenvalues(eigs, PHANTOM_REL_THRESHOLD).map_err(at_layer)
        })
        .collect()
}

/// Live path: probe the model on the dataset and report every layer.
pub fn profile(
    cfg: &ViTConfig,
    params: &ParameterSet<f32>,
    dataset: &ImageDataset,
    spec: &ProbeSpec,
) -> Result<EEDProfile, ProfilerError> {
    let acts = collect_probe_activations(cfg, params, dataset, spec)?;
    profile_from_probe(
        &acts,
        cfg.content_hash(),
        &dataset.source,
        spec.variant,
        spec.include_cls && cfg.include_cls_token,
    )
}

/// Builds the profile from an already collected probe, so callers that also
/// persist the activations as a dump forward through the model only once.
pub fn profile_from_probe(
    acts: &ProbeActivations,
    config_hash: u64,
    dataset_tag: &str,
    variant: CovarianceVariant,
    include_cls: bool,
) -> Result<EEDProfile, ProfilerError> {
    let reports = reports_from_layers(&acts.layers, variant)?;
    Ok(EEDProfile {
        reports,
        probe_images: acts.probe_images,
        probe_tokens: acts.probe_tokens,
        config_hash,
        dataset_tag: dataset_tag.to_string(),
        variant,
        include_cls,
    })
}

/// Dump path: same spectral pipeline over previously captured activations.
/// The dump records rows but not the image count or CLS handling, so the
/// caller supplies the CLS flag and `probe_images` reads 0.
pub fn profile_from_dump(
    dump: &ActivationDump,
    dataset_tag: &str,
    variant: CovarianceVariant,
    include_cls: bool,
) -> Result<EEDProfile, ProfilerError> {
    if dump.layers.is_empty() {
        return Err(ProfilerError::EmptyProfile);
    }
    for (l, layer) in dump.layers.iter().enumerate() {
        if layer.layer_index != l {
            return Err(ProfilerError::FormatError(format!(
                "dump layers out of order: position {l} holds layer {}",
                layer.layer_index
            )));
        }
    }
    let reports = reports_from_layers(&dump.layers, variant)?;
    Ok(EEDProfile {
        reports,
        probe_images: 0,
        probe_tokens: dump.layers[0].tokens.rows(),
        config_hash: dump.config_hash,
        dataset_tag: dataset_tag.to_string(),
        variant,
        include_cls,
    })
}

/// Interior argmin (layers `1..=L-2`, ties toward the smaller index) and the
/// U-shape score against the endpoint floor.
pub fn bottleneck(eed_percents: &[f64]) -> Result<BottleneckSummary, ProfilerError> {
    let l = eed_percents.len();
    if l < 3 {
        return Err(ProfilerError::TooFewLayers(l));
    }
    if let Some(bad) = eed_percents.iter().find(|v| !v.is_finite()) {
        return Err(ProfilerError::InvalidRequest(format!(
            "non-finite EED value {bad} in profile"
        )));
    }
    let mut argmin = 1;
    let mut min = eed_percents[1];
    for (i, &v) in eed_percents.iter().enumerate().take(l - 1).skip(2) {
        if v < min {
            min = v;
            argmin = i;
        }
    }
    let first = eed_percents[0];
    let last = eed_percents[l - 1];
    Ok(BottleneckSummary {
        argmin_layer: argmin,
        min_eed_percent: min,
        first_eed_percent: first,
        last_eed_percent: last,
        u_shape_score: (first.min(last) - min).max(0.0),
    })
}

/// One line of a comparison report; rows are sorted by ascending interior
/// minimum, so the deepest bottleneck ranks first.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub label: String,
    pub layers: usize,
    pub summary: BottleneckSummary,
    /// Exact tie on the interior minimum with the row above.
    pub tied_with_prev: bool,
}

/// Ranks labeled per-layer EED sequences by their interior minimum.
pub fn compare_eed_sequences(
    entries: &[(String, Vec<f64>)],
) -> Result<Vec<ComparisonRow>, ProfilerError> {
    if entries.len() < 2 {
        return Err(ProfilerError::InvalidRequest(format!(
            "need at least 2 profiles to compare, got {}",
            entries.len()
        )));
    }
    for (label, _) in entries {
        if label.contains(',') || label.contains('\n') {
            return Err(ProfilerError::InvalidRequest(format!(
                "label {label:?} must not contain commas or newlines"
            )));
        }
    }
    let (first_label, first_eed) = &entries[0];
    for (label, eed) in &entries[1..] {
        if eed.len() != first_eed.len() {
            return Err(ProfilerError::LayerCountMismatch {
                first_label: first_label.clone(),
                first_layers: first_eed.len(),
                second_label: label.clone(),
                second_layers: eed.len(),
            });
        }
    }
    let mut rows = entries
        .iter()
        .map(|(label, eed)| {
            Ok(ComparisonRow {
                label: label.clone(),
                layers: eed.len(),
                summary: bottleneck(eed)?,
                tied_with_prev: false,
            })
        })
        .collect::<Result<Vec<_>, ProfilerError>>()?;
    // Stable sort keeps input order within exact ties, which the tie flag
    // then makes explicit.
    rows.sort_by(|a, b| {
        a.summary
            .min_eed_percent
            .partial_cmp(&b.summary.min_eed_percent)
            .expect("finiteness checked above")
    });
    for i in 1..rows.len() {
        rows[i].tied_with_prev =
            rows[i].summary.min_eed_percent == rows[i - 1].summary.min_eed_percent;
    }
    Ok(rows)
}

/// Convenience wrapper over [`compare_eed_sequences`] for built profiles.
pub fn compare_profiles(
    entries: &[(String, &EEDProfile)],
) -> Result<Vec<ComparisonRow>, ProfilerError> {
    let seqs: Vec<(String, Vec<f64>)> = entries
        .iter()
        .map(|(label, p)| (label.clone(), p.eed_percents()))
        .collect();
    compare_eed_sequences(&seqs)
}

/// Comparison report as CSV text, one row per profile, sorted.
pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "label,layers,argmin_layer,min_eed_percent,first_eed_percent,\
         last_eed_percent,u_shape_score,tied_with_prev\n",
    );
    for row in rows {
        let s = &row.summary;
        writeln!(
            out,
            "{},{},{},{:.8e},{:.8e},{:.8e},{:.8e},{}",
            row.label,
            row.layers,
            s.argmin_layer,
            s.min_eed_percent,
            s.first_eed_percent,
            s.last_eed_percent,
            s.u_shape_score,
            row.tied_with_prev
        )
        .expect("string write");
    }
    out
}

/// Profile as CSV: `#`-prefixed provenance header, then one row per layer.
/// Nine significant digits; the bytes are deterministic for a fixed profile.
pub fn profile_to_csv(profile: &EEDProfile) -> Result<String, ProfilerError> {
    if profile.reports.is_empty() {
        return Err(ProfilerError::EmptyProfile);
    }
    if profile.dataset_tag.contains('\n') {
        return Err(ProfilerError::InvalidRequest(
            "dataset tag must not contain newlines".into(),
        ));
    }
    let mut out = String::new();
    writeln!(out, "# config_hash={:016x}", profile.config_hash).expect("string write");
    writeln!(out, "# dataset_tag={}", profile.dataset_tag).expect("string write");
    writeln!(out, "# variant={}", profile.variant.as_str()).expect("string write");
    writeln!(out, "# include_cls={}", profile.include_cls).expect("string write");
    writeln!(out, "# probe_images={}", profile.probe_images).expect("string write");
    writeln!(out, "# probe_tokens={}", profile.probe_tokens).expect("string write");
    writeln!(out, "# dim={}", profile.reports[0].dim).expect("string write");
    writeln!(out, "# layer_convention={LAYER_CONVENTION}").expect("string write");
    writeln!(out, "{CSV_HEADER}").expect("string write");
    for (l, r) in profile.reports.iter().enumerate() {
        let mi = spectral::gaussian_mi_proxy_from_eigenvalues(&r.eigenvalues);
        writeln!(
            out,
            "{},{:.8e},{:.8e},{:.8e},{},{:.8e}",
            l, r.entropy_nats, r.n_eff, r.eed_percent, r.phantom_count, mi
        )
        .expect("string write");
    }
    Ok(out)
}

/// One parsed CSV row; only the derived scalars survive the round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub layer: usize,
    pub entropy_nats: f64,
    pub n_eff: f64,
    pub eed_percent: f64,
    pub phantom_count: usize,
    pub mi_proxy: f64,
}

/// A profile read back from CSV: provenance key-values plus the rows.
#[derive(Debug, Clone)]
pub struct CsvProfile {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<CsvRow>,
}

impl CsvProfile {
    pub fn eed_percents(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.eed_percent).collect()
    }
}

/// Parses [`profile_to_csv`] output. Rows must be contiguous from layer 0
/// and every float must be finite.
pub fn parse_profile_csv(text: &str) -> Result<CsvProfile, ProfilerError> {
    let mut metadata = BTreeMap::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim_start();
            let (key, value) = rest.split_once('=').ok_or_else(|| {
                ProfilerError::FormatError(format!("line {}: comment without key=value", lineno + 1))
            })?;
            metadata.insert(key.to_string(), value.to_string());
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(ProfilerError::FormatError(format!(
                    "line {}: expected header {CSV_HEADER:?}, got {line:?}",
                    lineno + 1
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(ProfilerError::FormatError(format!(
                "line {}: expected 6 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            ProfilerError::FormatError(format!("line {}: bad {what}: {line:?}", lineno + 1))
        };
        let row = CsvRow {
            layer: fields[0].parse().map_err(|_| bad("layer"))?,
            entropy_nats: fields[1].parse().map_err(|_| bad("entropy_nats"))?,
            n_eff: fields[2].parse().map_err(|_| bad("n_eff"))?,
            eed_percent: fields[3].parse().map_err(|_| bad("eed_percent"))?,
            phantom_count: fields[4].parse().map_err(|_| bad("phantom_count"))?,
            mi_proxy: fields[5].parse().map_err(|_| bad("mi_proxy"))?,
        };
        for v in [row.entropy_nats, row.n_eff, row.eed_percent, row.mi_proxy] {
            if !v.is_finite() {
                return Err(bad("non-finite value"));
            }
        }
        if row.layer != rows.len() {
            return Err(ProfilerError::FormatError(format!(
                "line {}: expected layer {}, got {}",
                lineno + 1,
                rows.len(),
                row.layer
            )));
        }
        rows.push(row);
    }
    if !saw_header {
        return Err(ProfilerError::FormatError("missing header row".into()));
    }
    if rows.is_empty() {
        return Err(ProfilerError::FormatError("no data rows".into()));
    }
    Ok(CsvProfile { metadata, rows })
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Self-contained SVG line chart of EED% against layer index, one circle
/// marker per layer.
pub fn profile_to_svg(profile: &EEDProfile) -> Result<String, ProfilerError> {
    if profile.reports.is_empty() {
        return Err(ProfilerError::EmptyProfile);
    }
    let eed = profile.eed_percents();
    let l = eed.len();
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 62.0;
    const MR: f64 = 24.0;
    const MT: f64 = 46.0;
    const MB: f64 = 52.0;
    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;
    let x = |i: usize| {
        if l == 1 {
            ML + plot_w / 2.0
        } else {
            ML + plot_w * i as f64 / (l - 1) as f64
        }
    };
    let y = |v: f64| MT + (1.0 - v / 100.0) * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         width=\"{W}\" height=\"{H}\">"
    )
    .expect("string write");
    writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").expect("string write");
    writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"24\" font-family=\"monospace\" font-size=\"14\" \
         text-anchor=\"middle\">EED% by layer: {}</text>",
        ML + plot_w / 2.0,
        xml_escape(&profile.dataset_tag)
    )
    .expect("string write");
    for tick in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let ty = y(tick);
        writeln!(
            svg,
            "<line x1=\"{ML}\" y1=\"{ty:.2}\" x2=\"{:.2}\" y2=\"{ty:.2}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>",
            W - MR
        )
        .expect("string write");
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"end\">{tick:.0}</text>",
            ML - 6.0,
            ty + 4.0
        )
        .expect("string write");
    }
    for (i, _) in eed.iter().enumerate() {
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{i}</text>",
            x(i),
            H - MB + 18.0
        )
        .expect("string write");
    }
    writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.2}\" stroke=\"black\"/>",
        H - MB
    )
    .expect("string write");
    writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    )
    .expect("string write");
    writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\">layer</text>",
        ML + plot_w / 2.0,
        H - 12.0
    )
    .expect("string write");
    writeln!(
        svg,
        "<text x=\"16\" y=\"{MT}\" font-family=\"monospace\" font-size=\"12\">EED%</text>"
    )
    .expect("string write");
    if l >= 2 {
        let points: Vec<String> = eed
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect();
        writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"{}\"/>",
            points.join(" ")
        )
        .expect("string write");
    }
    for (i, &v) in eed.iter().enumerate() {
        writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f6fb2\"/>",
            x(i),
            y(v)
        )
        .expect("string write");
    }
    writeln!(svg, "</svg>").expect("string write");
    Ok(svg)
}

/// Renders and writes the CSV. Validation runs first, so an invalid profile
/// never leaves a file behind.
pub fn export_csv(profile: &EEDProfile, path: &Path) -> Result<(), ProfilerError> {
    let text = profile_to_csv(profile)?;
    crate::data::atomic_write(path, text.as_bytes())?;
    Ok(())
}

/// Renders and writes the SVG; same no-partial-output rule as the CSV.
pub fn export_svg(profile: &EEDProfile, path: &Path) -> Result<(), ProfilerError> {
    let text = profile_to_svg(profile)?;
    crate::data::atomic_write(path, text.as_bytes())?;
    Ok(())
}
