//! Gradient-descent optimizer with momentum and global-norm clipping, and
//! the training configuration record.

use crate::error::{Error, Result};

/// Knobs shared by both training loops.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
    pub seed: u64,
    /// Multiplier applied to the learning rate after each epoch.
    pub lr_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 32,
            epochs: 5,
            clip_norm: 5.0,
            seed: 1,
            lr_decay: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Momentum SGD over a flat parameter vector:
/// `v ← 0.9·v + g_clipped; p ← p − lr·v`.
#[derive(Debug)]
pub struct MomentumSgd {
    velocity: Vec<f64>,
    pub learning_rate: f64,
    clip_norm: f64,
    momentum: f64,
}

impl MomentumSgd {
    pub fn new(param_count: usize, learning_rate: f64, clip_norm: f64) -> Self {
        MomentumSgd {
            velocity: vec![0.0; param_count],
            learning_rate,
            clip_norm,
            momentum: 0.9,
        }
    }

    /// Applies one update in place. Fails on non-finite gradients.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        assert_eq!(params.len(), self.velocity.len());
        assert_eq!(grads.len(), self.velocity.len());
        let norm_sq: f64 = grads.iter().map(|g| g * g).sum();
        if !norm_sq.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        let norm = norm_sq.sqrt();
        let scale = if self.clip_norm > 0.0 && norm > self.clip_norm {
            self.clip_norm / norm
        } else {
            1.0
        };
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grads) {
            *v = self.momentum * *v + g * scale;
            *p -= self.learning_rate * *v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_learning_rate_leaves_params_unchanged() {
        let mut opt = MomentumSgd::new(3, 0.0, 5.0);
        let mut params = vec![1.0, -2.0, 3.0];
        opt.step(&mut params, &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(params, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn gradients_above_clip_norm_are_scaled() {
        let mut opt = MomentumSgd::new(1, 1.0, 1.0);
        let mut params = vec![0.0];
        opt.step(&mut params, &[10.0]).unwrap();
        // Clipped to norm 1, no momentum history: p = -lr * 1.
        assert!((params[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut opt = MomentumSgd::new(1, 0.1, 5.0);
        let mut params = vec![0.0];
        assert!(matches!(opt.step(&mut params, &[f64::NAN]), Err(Error::NonFiniteGradient)));
    }

    #[test]
    fn momentum_accumulates_across_steps() {
        let mut opt = MomentumSgd::new(1, 0.1, 0.0);
        let mut params = vec![0.0];
        opt.step(&mut params, &[1.0]).unwrap();
        let after_one = params[0];
        opt.step(&mut params, &[1.0]).unwrap();
        // Second step moves farther: v = 0.9 + 1.0.
        assert!((params[0] - after_one) < after_one);
    }
}
