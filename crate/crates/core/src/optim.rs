//! AdamW with decoupled weight decay, plus the warmup/cosine learning-rate
//! schedule the training loop drives it with.

use crate::numlin::{Real, Tensor};

#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.04,
        }
    }
}

/// AdamW state over a fixed list of parameter tensors. Moments are stored
/// in the parameter precision; bias corrections are computed in f64.
///
/// The learning rate is passed to each [`AdamW::step`] call so the schedule
/// stays outside the optimizer.
pub struct AdamW<T: Real> {
    cfg: AdamWConfig,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> AdamW<T> {
    pub fn new(cfg: AdamWConfig, shapes: &[&[usize]]) -> Self {
        Self {
            cfg,
            step: 0,
            m: shapes.iter().map(|s| Tensor::zeros(s.to_vec())).collect(),
            v: shapes.iter().map(|s| Tensor::zeros(s.to_vec())).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// First and second moment estimates, in parameter order
    /// (checkpoint serialization).
    pub fn moments(&self) -> (&[Tensor<T>], &[Tensor<T>]) {
        (&self.m, &self.v)
    }

    /// Rebuilds an optimizer mid-flight (checkpoint restore).
    pub fn from_state(
        cfg: AdamWConfig,
        step: u64,
        m: Vec<Tensor<T>>,
        v: Vec<Tensor<T>>,
    ) -> Self {
        assert_eq!(m.len(), v.len(), "moment list length mismatch");
        Self { cfg, step, m, v }
    }

    /// One update over all parameters. `grads[i]` must have the shape of
    /// `params[i]`; a `None` gradient leaves that parameter untouched by
    /// the moment update but still applies weight decay.
    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &[Option<Tensor<T>>], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "optimizer/parameter mismatch");
        assert_eq!(params.len(), grads.len(), "gradient list length mismatch");
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.cfg.beta1.powi(t);
        let bc2 = 1.0 - self.cfg.beta2.powi(t);
        let b1 = T::from_f64(self.cfg.beta1);
        let b2 = T::from_f64(self.cfg.beta2);
        let one_m_b1 = T::from_f64(1.0 - self.cfg.beta1);
        let one_m_b2 = T::from_f64(1.0 - self.cfg.beta2);
        let eps = T::from_f64(self.cfg.eps);
        let lr_t = T::from_f64(lr);
        let inv_bc1 = T::from_f64(1.0 / bc1);
        let inv_bc2_sqrt = T::from_f64(1.0 / bc2.sqrt());
        let decay = T::from_f64(lr * self.cfg.weight_decay);
        for (i, p) in params.iter_mut().enumerate() {
            for x in p.data_mut() {
                *x = *x - decay * *x;
            }
            let Some(g) = &grads[i] else { continue };
            assert_eq!(g.shape(), p.shape(), "gradient {i} shape mismatch");
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for ((x, &gi), (mi, vi)) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = b1 * *mi + one_m_b1 * gi;
                *vi = b2 * *vi + one_m_b2 * gi * gi;
                let mhat = *mi * inv_bc1;
                let vhat_sqrt = (*vi).sqrt() * inv_bc2_sqrt;
                *x = *x - lr_t * mhat / (vhat_sqrt + eps);
            }
        }
    }
}

/// Linear warmup to `base_lr`, then cosine decay to `final_lr` over the
/// remaining steps. Past `total_steps` the rate stays at `final_lr`.
#[derive(Debug, Clone, Copy)]
pub struct CosineSchedule {
    pub base_lr: f64,
    pub final_lr: f64,
    pub warmup_steps: u64,
    pub total_steps: u64,
}

impl CosineSchedule {
    pub fn lr_at(&self, step: u64) -> f64 {
        if step < self.warmup_steps {
            return self.base_lr * (step as f64 + 1.0) / self.warmup_steps as f64;
        }
        if step >= self.total_steps {
            return self.final_lr;
        }
        let span = (self.total_steps - self.warmup_steps) as f64;
        let progress = (step - self.warmup_steps) as f64 / span;
        let cos = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        self.final_lr + (self.base_lr - self.final_lr) * cos
    }
}
