use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::{Error, Result};

use super::{check_two_classes, class_label, SparseVec};

/// Logistic regression trained by per-example SGD with a linearly decaying
/// learning rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticSgd {
    weights: Vec<f64>,
    bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Train on sparse features and binary labels. Weights start at zero; each
/// epoch shuffles the example order with a ChaCha stream seeded by `seed`,
/// so identical inputs give identical weights.
pub fn train_logistic_sgd(
    x: &[SparseVec],
    y: &[Label],
    lr: f64,
    epochs: usize,
    seed: u64,
    dim: usize,
) -> Result<LogisticSgd> {
    if x.len() != y.len() {
        return Err(Error::BadParameter(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if lr < 0.0 {
        return Err(Error::BadParameter(format!(
            "learning rate must be non-negative, got {lr}"
        )));
    }
    check_two_classes(y)?;

    let mut model = LogisticSgd {
        weights: vec![0.0; dim],
        bias: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let total_steps = (epochs * x.len()) as f64;
    let mut step = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let rate = lr * (1.0 - step as f64 / total_steps);
            step += 1;
            let target = if y[i] == Label::Harmful { 1.0 } else { 0.0 };
            let p = sigmoid(model.margin(&x[i]));
            let g = p - target;
            for &(f, v) in &x[i] {
                model.weights[f as usize] -= rate * g * v;
            }
            model.bias -= rate * g;
        }
    }
    Ok(model)
}

impl LogisticSgd {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    fn margin(&self, x: &SparseVec) -> f64 {
        let mut z = self.bias;
        for &(f, v) in x {
            z += self.weights[f as usize] * v;
        }
        z
    }

    /// Mean logistic loss over a dataset.
    pub fn mean_loss(&self, x: &[SparseVec], y: &[Label]) -> f64 {
        let mut total = 0.0;
        for (vec, label) in x.iter().zip(y) {
            let target = if *label == Label::Harmful { 1.0 } else { 0.0 };
            let p = sigmoid(self.margin(vec)).clamp(1e-15, 1.0 - 1e-15);
            total -= target * p.ln() + (1.0 - target) * (1.0 - p).ln();
        }
        total / x.len() as f64
    }

    /// Predicted label and its probability.
    pub fn predict(&self, x: &SparseVec) -> (Label, f64) {
        let p_harmful = sigmoid(self.margin(x));
        if p_harmful >= 0.5 {
            (class_label(1), p_harmful)
        } else {
            (class_label(0), 1.0 - p_harmful)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{self, ConfusionCounts};
    use approx::assert_abs_diff_eq;

    fn separable() -> (Vec<SparseVec>, Vec<Label>) {
        // features 0-1 fire for harmful, 2-3 for non-harmful
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..12 {
            if i % 2 == 0 {
                x.push(vec![(0u32, 1.0), (1u32, 0.5 + (i % 3) as f64 * 0.2)]);
                y.push(Label::Harmful);
            } else {
                x.push(vec![(2u32, 1.0), (3u32, 0.5 + (i % 3) as f64 * 0.2)]);
                y.push(Label::NonHarmful);
            }
        }
        (x, y)
    }

    #[test]
    fn separable_data_reaches_perfect_f1_within_ten_epochs() {
        let (x, y) = separable();
        let model = train_logistic_sgd(&x, &y, 0.5, 10, 7, 4).unwrap();
        let mut c = ConfusionCounts::default();
        for (vec, gold) in x.iter().zip(&y) {
            c.record(model.predict(vec).0, *gold);
        }
        let report = metrics::report(c).unwrap();
        assert_eq!(report.f1_macro, 1.0);
    }

    #[test]
    fn zero_learning_rate_leaves_weights_at_init() {
        let (x, y) = separable();
        let model = train_logistic_sgd(&x, &y, 0.0, 5, 7, 4).unwrap();
        assert!(model.weights().iter().all(|&w| w == 0.0));
        assert_eq!(model.bias(), 0.0);
    }

    #[test]
    fn same_seed_gives_identical_weights() {
        let (x, y) = separable();
        let a = train_logistic_sgd(&x, &y, 0.3, 8, 42, 4).unwrap();
        let b = train_logistic_sgd(&x, &y, 0.3, 8, 42, 4).unwrap();
        assert_eq!(a.weights(), b.weights());
        assert_eq!(a.bias(), b.bias());
        let c = train_logistic_sgd(&x, &y, 0.3, 8, 43, 4).unwrap();
        assert_ne!(a.weights(), c.weights());
    }

    #[test]
    fn zero_vector_decided_by_bias() {
        let (x, y) = separable();
        let model = train_logistic_sgd(&x, &y, 0.5, 10, 7, 4).unwrap();
        let (_, score) = model.predict(&vec![]);
        let expected = sigmoid(model.bias());
        assert_abs_diff_eq!(score, expected.max(1.0 - expected), epsilon = 1e-12);
    }

    #[test]
    fn tiny_learning_rate_bounds_loss_change() {
        // |loss(w') - loss(w0)| <= L * ||w' - w0||, and the trajectory is
        // bounded by sum of step sizes: lr * epochs * n * max||x||. With the
        // loss gradient itself bounded by max||x||, the change in mean loss
        // is at most lr * epochs * n * max||x||^2.
        let (x, y) = separable();
        let max_norm_sq: f64 = x
            .iter()
            .map(|v| v.iter().map(|(_, val)| val * val).sum::<f64>() + 1.0) // +1 for bias
            .fold(0.0, f64::max);
        let lr = 1e-6;
        let epochs = 3;
        let init = LogisticSgd {
            weights: vec![0.0; 4],
            bias: 0.0,
        };
        let before = init.mean_loss(&x, &y);
        let model = train_logistic_sgd(&x, &y, lr, epochs, 7, 4).unwrap();
        let after = model.mean_loss(&x, &y);
        let bound = lr * (epochs * x.len()) as f64 * max_norm_sq;
        assert!(
            (after - before).abs() <= bound,
            "loss moved {} > bound {}",
            (after - before).abs(),
            bound
        );
    }

    #[test]
    fn single_class_rejected() {
        let x: Vec<SparseVec> = vec![vec![(0, 1.0)], vec![(1, 1.0)]];
        let y = vec![Label::NonHarmful, Label::NonHarmful];
        assert!(matches!(
            train_logistic_sgd(&x, &y, 0.1, 2, 0, 2),
            Err(Error::SingleClass(_))
        ));
    }
}
