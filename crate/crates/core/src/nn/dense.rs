//! Dense readout with a softmax, plus the cross-entropy loss.

use rand::Rng;

use super::matrix::Matrix;
use crate::error::{Error, Result};

const CE_EPSILON: f64 = 1e-12;

/// Affine map followed by a softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSoftmax {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseGrads {
    pub fn zeros(out_size: usize, in_size: usize) -> Self {
        DenseGrads { weights: Matrix::zeros(out_size, in_size), bias: vec![0.0; out_size] }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = self.weights.data().to_vec();
        out.extend_from_slice(&self.bias);
        out
    }

    pub fn accumulate(&mut self, other: &DenseGrads) {
        for (a, b) in self.weights.data_mut().iter_mut().zip(other.weights.data()) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

impl DenseSoftmax {
    pub fn zeros(out_size: usize, in_size: usize) -> Self {
        DenseSoftmax { weights: Matrix::zeros(out_size, in_size), bias: vec![0.0; out_size] }
    }

    pub fn init<R: Rng>(out_size: usize, in_size: usize, rng: &mut R) -> Self {
        DenseSoftmax {
            weights: Matrix::uniform_init(out_size, in_size, rng),
            bias: vec![0.0; out_size],
        }
    }

    pub fn out_size(&self) -> usize {
        self.bias.len()
    }

    pub fn in_size(&self) -> usize {
        self.weights.cols
    }

    pub fn logits(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.in_size() {
            return Err(Error::Shape(format!(
                "dense input length {} != {}",
                h.len(),
                self.in_size()
            )));
        }
        let mut out = self.bias.clone();
        self.weights.matvec_into(h, &mut out);
        Ok(out)
    }

    /// `softmax(W·h + b)`, stabilized by max subtraction.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(h)?))
    }

    /// Gradient of the cross-entropy loss w.r.t. parameters and input, given
    /// the forward probabilities for one example.
    pub fn backward(&self, h: &[f64], probs: &[f64], target: usize) -> (DenseGrads, Vec<f64>) {
        let mut dlogits = probs.to_vec();
        dlogits[target] -= 1.0;
        let mut grads = DenseGrads::zeros(self.out_size(), self.in_size());
        grads.weights.add_outer(&dlogits, h);
        grads.bias.copy_from_slice(&dlogits);
        let mut dh = vec![0.0; self.in_size()];
        self.weights.matvec_t_into(&dlogits, &mut dh);
        (grads, dh)
    }

    pub fn params_vec(&self) -> Vec<f64> {
        let mut out = self.weights.data().to_vec();
        out.extend_from_slice(&self.bias);
        out
    }

    pub fn param_count(&self) -> usize {
        self.weights.data().len() + self.bias.len()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let n = self.weights.data().len();
        self.weights.data_mut().copy_from_slice(&params[..n]);
        self.bias.copy_from_slice(&params[n..]);
    }
}

/// Numerically stabilized softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `−ln(pred[target] + ε)` with ε = 1e-12.
pub fn cross_entropy(pred: &[f64], target: usize) -> f64 {
    -(pred[target] + CE_EPSILON).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_logits_give_uniform_probs() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn huge_logits_do_not_overflow() {
        let p = softmax(&[1000.0, 0.0]);
        assert!(p[0] > 0.999999 && p[0].is_finite());
        assert!(p[1] >= 0.0 && p[1] < 1e-6);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn three_logit_case_matches_reference_values() {
        // softmax([1, 2, 3]) computed to full precision from e^1, e^2, e^3.
        let p = softmax(&[1.0, 2.0, 3.0]);
        let expected = [0.09003057317038046, 0.24472847105479765, 0.6652409557748219];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn softmax_sums_to_one_within_tolerance() {
        let p = softmax(&[0.3, -1.2, 2.0, 0.0, 5.5]);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn cross_entropy_of_uniform_is_ln_k() {
        for k in [2usize, 3, 8] {
            let pred = vec![1.0 / k as f64; k];
            let loss = cross_entropy(&pred, 0);
            assert!((loss - (k as f64).ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_entropy_of_certain_prediction_is_near_zero() {
        let mut pred = vec![0.0, 0.0, 0.0];
        pred[1] = 1.0;
        assert!(cross_entropy(&pred, 1).abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_asymmetric_case() {
        // −ln(0.5 + 1e-12) to full precision.
        let loss = cross_entropy(&[0.2, 0.5, 0.3], 1);
        assert!((loss - 0.6931471805579453).abs() < 1e-15);
    }

    #[test]
    fn apply_rejects_bad_shapes() {
        let layer = DenseSoftmax::zeros(3, 2);
        assert!(layer.apply(&[1.0, 2.0, 3.0]).is_err());
        assert!(layer.apply(&[1.0, 2.0]).is_ok());
    }
}
