//! Multi-crop view generation: random resized square crops, horizontal
//! flips and per-channel brightness jitter. Global views come out at the
//! model resolution, local views at half resolution.

use super::DinoConfig;
use crate::numlin::Tensor;
use crate::vit::IMAGE_CHANNELS;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// Brightness jitter amplitude, per channel, additive in [0,1] space.
const JITTER: f64 = 0.1;

/// A square crop window: `(top, left, side)`, always inside an `h × w`
/// image. `scale` is the sampled area fraction.
pub(crate) fn sample_crop_rect(
    rng: &mut ChaCha12Rng,
    h: usize,
    w: usize,
    scale: (f64, f64),
) -> (usize, usize, usize) {
    let s = rng.random_range(scale.0..=scale.1);
    let max_side = h.min(w);
    let side = ((s * (h * w) as f64).sqrt().round() as usize).clamp(1, max_side);
    let top = rng.random_range(0..=h - side);
    let left = rng.random_range(0..=w - side);
    (top, left, side)
}

/// Bilinear resize of an `[h, w·C]` image to `out_h × out_w`, sampling
/// with half-pixel centers and edge clamping.
pub(crate) fn resize_bilinear(src: &Tensor<f32>, out_h: usize, out_w: usize) -> Tensor<f32> {
    let h = src.rows();
    let w = src.cols() / IMAGE_CHANNELS;
    let mut out = Vec::with_capacity(out_h * out_w * IMAGE_CHANNELS);
    for oy in 0..out_h {
        let sy = (oy as f64 + 0.5) * h as f64 / out_h as f64 - 0.5;
        let sy = sy.clamp(0.0, (h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for ox in 0..out_w {
            let sx = (ox as f64 + 0.5) * w as f64 / out_w as f64 - 0.5;
            let sx = sx.clamp(0.0, (w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            for c in 0..IMAGE_CHANNELS {
                let at = |y: usize, x: usize| src.get2(y, x * IMAGE_CHANNELS + c) as f64;
                let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                out.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
    Tensor::from_vec_unchecked(vec![out_h, out_w * IMAGE_CHANNELS], out)
}

fn one_view(
    image: &Tensor<f32>,
    rng: &mut ChaCha12Rng,
    scale: (f64, f64),
    target: usize,
) -> Tensor<f32> {
    let h = image.rows();
    let w = image.cols() / IMAGE_CHANNELS;
    let (top, left, side) = sample_crop_rect(rng, h, w, scale);
    let flip = rng.random_bool(0.5);
    let jitter: [f64; IMAGE_CHANNELS] =
        std::array::from_fn(|_| rng.random_range(-JITTER..JITTER));

    let mut crop = Vec::with_capacity(side * side * IMAGE_CHANNELS);
    for y in 0..side {
        for x in 0..side {
            let sx = if flip { side - 1 - x } else { x };
            for (c, j) in jitter.iter().enumerate() {
                let v = image.get2(top + y, (left + sx) * IMAGE_CHANNELS + c) as f64 + j;
                crop.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    let crop = Tensor::from_vec_unchecked(vec![side, side * IMAGE_CHANNELS], crop);
    if side == target {
        crop
    } else {
        resize_bilinear(&crop, target, target)
    }
}

/// Two global views followed by `num_local_crops` local views, drawn in
/// a fixed order so a seeded RNG reproduces them exactly.
pub fn multi_crop(
    image: &Tensor<f32>,
    rng: &mut ChaCha12Rng,
    cfg: &DinoConfig,
    global_size: usize,
    local_size: usize,
) -> Vec<Tensor<f32>> {
    let mut views = Vec::with_capacity(2 + cfg.num_local_crops);
    for _ in 0..2 {
        views.push(one_view(image, rng, cfg.global_crop_scale, global_size));
    }
    for _ in 0..cfg.num_local_crops {
        views.push(one_view(image, rng, cfg.local_crop_scale, local_size));
    }
    views
}
