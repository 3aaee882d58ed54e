//! Synthetic corpora standing in for texture-centric and object-centric
//! datasets.
//!
//! The texture generator emits stationary high-frequency fields (sinusoid
//! mixtures plus filtered noise); class identity lives in the spectral
//! statistics. The object generator composites one solid shape (disc,
//! triangle or cross) over a cluttered high-frequency background; class
//! identity is the shape, the background is nuisance. The two corpora are
//! separable by spatial autocorrelation length, which
//! [`autocorrelation_length`] measures.

use super::{quantize_unit, ImageDataset, IMAGE_CHANNELS};
use crate::numlin::Tensor;
use crate::seed;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

pub const TEXTURE_CLASSES: usize = 4;
pub const OBJECT_CLASSES: usize = 3;

const SINUSOIDS_PER_IMAGE: usize = 6;

/// Frequency band (cycles per image width) for one texture class.
fn texture_band(class: usize) -> (f64, f64) {
    match class {
        0 => (5.0, 7.0),
        1 => (7.0, 9.5),
        2 => (9.5, 12.0),
        _ => (12.0, 15.0),
    }
}

/// A zero-centered stationary field of unit peak amplitude: a random
/// sinusoid mixture with frequencies drawn from `band`.
fn sinusoid_field(rng: &mut ChaCha12Rng, size: usize, band: (f64, f64)) -> Vec<f64> {
    struct Wave {
        kx: f64,
        ky: f64,
        phase: f64,
        amp: f64,
    }
    let mut waves = Vec::with_capacity(SINUSOIDS_PER_IMAGE);
    let mut total_amp = 0.0;
    for _ in 0..SINUSOIDS_PER_IMAGE {
        let freq = rng.random_range(band.0..band.1);
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let amp = rng.random_range(0.5..1.0);
        let w = 2.0 * std::f64::consts::PI * freq / size as f64;
        waves.push(Wave {
            kx: w * theta.cos(),
            ky: w * theta.sin(),
            phase: rng.random_range(0.0..2.0 * std::f64::consts::PI),
            amp,
        });
        total_amp += amp;
    }
    let mut field = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let mut v = 0.0;
            for w in &waves {
                v += w.amp * (w.kx * x as f64 + w.ky * y as f64 + w.phase).sin();
            }
            field[y * size + x] = v / total_amp;
        }
    }
    field
}

/// White noise passed once through a 3×3 box filter (clamped at edges),
/// normalized to roughly unit peak.
fn filtered_noise(rng: &mut ChaCha12Rng, size: usize) -> Vec<f64> {
    let white: Vec<f64> = (0..size * size)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let mut out = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let mut sum = 0.0;
            let mut count = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let ny = y as i64 + dy;
                    let nx = x as i64 + dx;
                    if ny >= 0 && ny < size as i64 && nx >= 0 && nx < size as i64 {
                        sum += white[ny as usize * size + nx as usize];
                        count += 1.0;
                    }
                }
            }
            out[y * size + x] = sum / count;
        }
    }
    out
}

/// Stationary high-frequency texture corpus. Class identity is the
/// frequency band of the sinusoid mixture; there is no object layout.
pub fn gen_texture_dataset(seed_value: u64, n: usize, size: usize) -> ImageDataset {
    assert!(n >= 1, "texture corpus needs n >= 1");
    let mut rng = seed::rng(seed_value, "data/texture");
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.random_range(0..TEXTURE_CLASSES);
        let field = sinusoid_field(&mut rng, size, texture_band(class));
        let noise = filtered_noise(&mut rng, size);
        let jitter: [f64; IMAGE_CHANNELS] =
            std::array::from_fn(|_| rng.random_range(-0.15..0.15));
        let mut data = Vec::with_capacity(size * size * IMAGE_CHANNELS);
        for i in 0..size * size {
            for j in jitter {
                let v = 0.5 + 0.4 * field[i] * (1.0 + j) + 0.1 * noise[i];
                data.push(quantize_unit(v as f32));
            }
        }
        images.push(Tensor::from_vec_unchecked(
            vec![size, size * IMAGE_CHANNELS],
            data,
        ));
        labels.push(class as u32);
    }
    ImageDataset {
        images,
        labels: Some(labels),
        source: format!("synth-texture(seed={seed_value},n={n},size={size})"),
    }
}

#[derive(Clone, Copy)]
enum Shape {
    Disc,
    Triangle,
    Cross,
}

/// Coverage bounds every emitted shape must satisfy (fraction of pixels).
const COVERAGE_MIN: f64 = 0.05;
const COVERAGE_MAX: f64 = 0.40;

fn rasterize_shape(
    shape: Shape,
    size: usize,
    cx: f64,
    cy: f64,
    coverage_target: f64,
    theta: f64,
) -> Vec<bool> {
    let area = coverage_target * (size * size) as f64;
    let mut mask = vec![false; size * size];
    match shape {
        Shape::Disc => {
            let r2 = area / std::f64::consts::PI;
            for y in 0..size {
                for x in 0..size {
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    mask[y * size + x] = dx * dx + dy * dy <= r2;
                }
            }
        }
        Shape::Triangle => {
            // equilateral triangle with circumradius R: area = (3√3/4)·R²
            let r = (4.0 * area / (3.0 * 3.0f64.sqrt())).sqrt();
            let verts: Vec<(f64, f64)> = (0..3)
                .map(|i| {
                    let a = theta + i as f64 * 2.0 * std::f64::consts::PI / 3.0;
                    (cx + r * a.cos(), cy + r * a.sin())
                })
                .collect();
            let cross = |o: (f64, f64), a: (f64, f64), p: (f64, f64)| {
                (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0)
            };
            for y in 0..size {
                for x in 0..size {
                    let p = (x as f64, y as f64);
                    let d0 = cross(verts[0], verts[1], p);
                    let d1 = cross(verts[1], verts[2], p);
                    let d2 = cross(verts[2], verts[0], p);
                    let has_neg = d0 < 0.0 || d1 < 0.0 || d2 < 0.0;
                    let has_pos = d0 > 0.0 || d1 > 0.0 || d2 > 0.0;
                    mask[y * size + x] = !(has_neg && has_pos);
                }
            }
        }
        Shape::Cross => {
            // two perpendicular 1:6 bars: area = 8wL − 4w² with L = 3w
            let w = (area / 20.0).sqrt();
            let l = 3.0 * w;
            let (s, c) = theta.sin_cos();
            for y in 0..size {
                for x in 0..size {
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    let u = c * dx + s * dy;
                    let v = -s * dx + c * dy;
                    let in_bar_a = u.abs() <= w && v.abs() <= l;
                    let in_bar_b = v.abs() <= w && u.abs() <= l;
                    mask[y * size + x] = in_bar_a || in_bar_b;
                }
            }
        }
    }
    mask
}

fn gen_object_inner(
    seed_value: u64,
    n: usize,
    size: usize,
) -> (ImageDataset, Vec<Tensor<f32>>) {
    assert!(n >= 1, "object corpus needs n >= 1");
    let mut rng = seed::rng(seed_value, "data/object");
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut masks = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.random_range(0..OBJECT_CLASSES);
        let shape = match class {
            0 => Shape::Disc,
            1 => Shape::Triangle,
            _ => Shape::Cross,
        };
        // cluttered low-contrast background, same family as the texture set
        let field = sinusoid_field(&mut rng, size, (8.0, 14.0));
        let noise = filtered_noise(&mut rng, size);
        let mask = loop {
            let cx = rng.random_range(0.35..0.65) * size as f64;
            let cy = rng.random_range(0.35..0.65) * size as f64;
            let coverage_target = rng.random_range(0.12..0.32);
            let theta = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            let mask = rasterize_shape(shape, size, cx, cy, coverage_target, theta);
            let coverage =
                mask.iter().filter(|&&m| m).count() as f64 / (size * size) as f64;
            if (COVERAGE_MIN..=COVERAGE_MAX).contains(&coverage) {
                break mask;
            }
        };
        // saturated color, distinctly brighter or darker than the mid-gray
        // clutter; the odd channel keeps it colored rather than gray
        let bright = rng.random_bool(0.5);
        let (main, odd) = if bright {
            ((0.75, 1.0), (0.0, 0.6))
        } else {
            ((0.0, 0.25), (0.4, 1.0))
        };
        let mut color = [
            rng.random_range(main.0..main.1),
            rng.random_range(main.0..main.1),
            rng.random_range(odd.0..odd.1),
        ];
        let odd_channel = rng.random_range(0..IMAGE_CHANNELS);
        color.swap(2, odd_channel);
        let mut data = Vec::with_capacity(size * size * IMAGE_CHANNELS);
        for i in 0..size * size {
            if mask[i] {
                for ch in color {
                    let shade = rng.random_range(-0.04..0.04);
                    data.push(quantize_unit((ch + shade) as f32));
                }
            } else {
                for _ in 0..IMAGE_CHANNELS {
                    let v = 0.5 + 0.15 * field[i] + 0.05 * noise[i];
                    data.push(quantize_unit(v as f32));
                }
            }
        }
        images.push(Tensor::from_vec_unchecked(
            vec![size, size * IMAGE_CHANNELS],
            data,
        ));
        labels.push(class as u32);
        masks.push(Tensor::from_vec_unchecked(
            vec![size, size],
            mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
        ));
    }
    let ds = ImageDataset {
        images,
        labels: Some(labels),
        source: format!("synth-object(seed={seed_value},n={n},size={size})"),
    };
    (ds, masks)
}

/// Object-centric corpus: one solid shape per image over clutter.
pub fn gen_object_dataset(seed_value: u64, n: usize, size: usize) -> ImageDataset {
    gen_object_inner(seed_value, n, size).0
}

/// Same corpus plus the ground-truth foreground masks (`[H, W]`, 0/1),
/// for oracles that need to know where the shape actually is.
pub fn gen_object_dataset_with_masks(
    seed_value: u64,
    n: usize,
    size: usize,
) -> (ImageDataset, Vec<Tensor<f32>>) {
    gen_object_inner(seed_value, n, size)
}

/// Spatial autocorrelation length of one image, in pixels: the first lag
/// at which the channel-summed row/column autocovariance (mean-removed per
/// channel) drops below 1/e of the lag-0 value. Saturates at half the
/// image width.
pub fn autocorrelation_length(image: &Tensor<f32>) -> f64 {
    let h = image.rows();
    let w = image.cols() / IMAGE_CHANNELS;
    let mut planes = vec![vec![0.0f64; h * w]; IMAGE_CHANNELS];
    for y in 0..h {
        let row = image.row(y);
        for x in 0..w {
            for (c, plane) in planes.iter_mut().enumerate() {
                plane[y * w + x] = row[x * IMAGE_CHANNELS + c] as f64;
            }
        }
    }
    for plane in &mut planes {
        let mean = plane.iter().sum::<f64>() / plane.len() as f64;
        for v in plane {
            *v -= mean;
        }
    }
    let max_lag = w / 2;
    let cov_at = |lag: usize| -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for plane in &planes {
            for y in 0..h {
                for x in 0..w - lag {
                    sum += plane[y * w + x] * plane[y * w + x + lag];
                    count += 1;
                }
            }
            for x in 0..w {
                for y in 0..h - lag {
                    sum += plane[y * w + x] * plane[(y + lag) * w + x];
                    count += 1;
                }
            }
        }
        sum / count as f64
    };
    let c0 = cov_at(0);
    if c0 <= 0.0 {
        return max_lag as f64;
    }
    let threshold = 1.0 / std::f64::consts::E;
    for lag in 1..=max_lag {
        if cov_at(lag) / c0 < threshold {
            return lag as f64;
        }
    }
    max_lag as f64
}

/// Corpus mean and standard deviation of the autocorrelation length.
pub fn mean_autocorrelation_length(ds: &ImageDataset) -> (f64, f64) {
    let lengths: Vec<f64> = ds.images.iter().map(autocorrelation_length).collect();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let var = lengths.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>()
        / lengths.len() as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_bits(ds: &ImageDataset) -> Vec<u32> {
        ds.images
            .iter()
            .flat_map(|im| im.data().iter().map(|v| v.to_bits()))
            .collect()
    }

    #[test]
    fn texture_is_deterministic_per_seed() {
        let a = gen_texture_dataset(7, 4, 32);
        let b = gen_texture_dataset(7, 4, 32);
        assert_eq!(image_bits(&a), image_bits(&b));
        assert_eq!(a.labels, b.labels);
        let c = gen_texture_dataset(8, 4, 32);
        assert_ne!(image_bits(&a), image_bits(&c));
    }

    #[test]
    fn object_is_deterministic_per_seed() {
        let a = gen_object_dataset(7, 4, 32);
        let b = gen_object_dataset(7, 4, 32);
        assert_eq!(image_bits(&a), image_bits(&b));
    }

    #[test]
    fn generated_corpora_validate_and_have_variance() {
        for ds in [gen_texture_dataset(1, 8, 32), gen_object_dataset(1, 8, 32)] {
            ds.validate().unwrap();
            for im in &ds.images {
                let mean = im.data().iter().sum::<f32>() / im.numel() as f32;
                let var = im
                    .data()
                    .iter()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f32>()
                    / im.numel() as f32;
                assert!(var > 0.0, "flat image in {}", ds.source);
            }
        }
    }

    #[test]
    fn object_shapes_cover_5_to_40_percent() {
        let (_, masks) = gen_object_dataset_with_masks(3, 32, 32);
        for (i, mask) in masks.iter().enumerate() {
            let cover = mask.data().iter().sum::<f32>() as f64 / mask.numel() as f64;
            assert!(
                (COVERAGE_MIN..=COVERAGE_MAX).contains(&cover),
                "image {i}: coverage {cover}"
            );
        }
    }

    #[test]
    fn texture_autocorrelation_is_short_range() {
        let ds = gen_texture_dataset(11, 48, 32);
        let (mean, _) = mean_autocorrelation_length(&ds);
        // corpus invariant: mean length below 25% of image width
        assert!(mean < 0.25 * 32.0, "mean autocorrelation length {mean}");
    }

    #[test]
    fn corpora_separate_under_autocorrelation_oracle() {
        let tex = gen_texture_dataset(12, 48, 32);
        let obj = gen_object_dataset(12, 48, 32);
        let (mt, st) = mean_autocorrelation_length(&tex);
        let (mo, so) = mean_autocorrelation_length(&obj);
        assert!(
            mt + 2.0 * st < mo - 2.0 * so,
            "distributions overlap: texture {mt}±{st}, object {mo}±{so}"
        );
    }

    /// Hu-style invariants of the ground-truth mask; enough to tell the
    /// three shape families apart.
    fn moment_features(mask: &Tensor<f32>) -> [f64; 4] {
        let (h, w) = (mask.rows(), mask.cols());
        let mut m00 = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for y in 0..h {
            for x in 0..w {
                let v = mask.get2(y, x) as f64;
                m00 += v;
                mx += v * x as f64;
                my += v * y as f64;
            }
        }
        let (cx, cy) = (mx / m00, my / m00);
        let mut mu = [[0.0f64; 4]; 4];
        for y in 0..h {
            for x in 0..w {
                let v = mask.get2(y, x) as f64;
                if v == 0.0 {
                    continue;
                }
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                for (p, row) in mu.iter_mut().enumerate() {
                    for (q, slot) in row.iter_mut().enumerate() {
                        if p + q <= 3 {
                            *slot += v * dx.powi(p as i32) * dy.powi(q as i32);
                        }
                    }
                }
            }
        }
        let eta = |p: usize, q: usize| mu[p][q] / m00.powf(1.0 + (p + q) as f64 / 2.0);
        let (e20, e02, e11) = (eta(2, 0), eta(0, 2), eta(1, 1));
        let (e30, e03, e21, e12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));
        [
            e20 + e02,
            (e20 - e02).powi(2) + 4.0 * e11 * e11,
            (e30 - 3.0 * e12).powi(2) + (3.0 * e21 - e03).powi(2),
            (e30 + e12).powi(2) + (e21 + e03).powi(2),
        ]
    }

    #[test]
    fn shape_moments_beat_raw_pixels_at_classification() {
        let (ds, masks) = gen_object_dataset_with_masks(21, 150, 32);
        let labels = ds.labels.as_ref().unwrap();
        let train = 0..100usize;
        let test = 100..150usize;

        let pixel_acc = {
            let mut correct = 0;
            for i in test.clone() {
                let mut best = (f64::INFINITY, 0u32);
                for j in train.clone() {
                    let d: f64 = ds.images[i]
                        .data()
                        .iter()
                        .zip(ds.images[j].data())
                        .map(|(a, b)| ((a - b) as f64).powi(2))
                        .sum();
                    if d < best.0 {
                        best = (d, labels[j]);
                    }
                }
                if best.1 == labels[i] {
                    correct += 1;
                }
            }
            correct as f64 / test.len() as f64
        };

        let moment_acc = {
            let feats: Vec<[f64; 4]> = masks.iter().map(moment_features).collect();
            let mut correct = 0;
            for i in test.clone() {
                let mut best = (f64::INFINITY, 0u32);
                for j in train.clone() {
                    let d: f64 = feats[i]
                        .iter()
                        .zip(&feats[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    if d < best.0 {
                        best = (d, labels[j]);
                    }
                }
                if best.1 == labels[i] {
                    correct += 1;
                }
            }
            correct as f64 / test.len() as f64
        };

        assert!(
            moment_acc > pixel_acc,
            "moments {moment_acc} should beat pixels {pixel_acc}"
        );
        assert!(moment_acc >= 0.8, "moments only reached {moment_acc}");
    }
}
