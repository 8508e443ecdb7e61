//! Desk-scale logistic trainer: the fine-tuning recipe (configured loss,
//! mini-batches, Adam) run on scalar feature vectors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{sigmoid, LossKind};
use super::opt::{adam_step, dropout, AdamState, DEFAULT_LEARNING_RATE};
use super::ObjectiveError;
use crate::evaluate::{auc_mann_whitney, ScoredCase};
use crate::shuffle::fisher_yates;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Drop probability applied to each sample's features during
    /// training only; 0 disables dropout entirely.
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::CrossEntropy,
            lr: DEFAULT_LEARNING_RATE,
            epochs: 50,
            batch_size: 2,
            dropout_rate: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Mean per-sample loss accumulated while the epoch's updates ran.
    pub mean_loss: f64,
    /// AUC of the post-epoch model on the full training set.
    pub train_auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub trace: Vec<EpochStats>,
}

impl TrainedModel {
    pub fn predict(&self, features: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, features) + self.bias)
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Trains a logistic model from zero-initialized weights with
/// mini-batch Adam. Everything downstream of the seed is deterministic:
/// the epoch shuffle and dropout share one generator, consumed in a
/// fixed order.
pub fn train_logistic(
    features: &[Vec<f64>],
    labels: &[u8],
    cfg: &TrainConfig,
) -> Result<TrainedModel, ObjectiveError> {
    let n = features.len();
    if labels.len() != n {
        return Err(ObjectiveError::LabelCountMismatch {
            labels: labels.len(),
            rows: n,
        });
    }
    if n < 4 {
        return Err(ObjectiveError::TooFewSamples { min: 4, got: n });
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(ObjectiveError::RaggedFeatures {
            row: 0,
            got: 0,
            expected: 1,
        });
    }
    for (row, x) in features.iter().enumerate() {
        if x.len() != dim {
            return Err(ObjectiveError::RaggedFeatures {
                row,
                got: x.len(),
                expected: dim,
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ObjectiveError::NonFiniteFeature(row));
        }
    }
    let mut positives = 0usize;
    for &label in labels {
        if label > 1 {
            return Err(ObjectiveError::InvalidLabel(label));
        }
        positives += usize::from(label);
    }
    if positives == 0 || positives == n {
        return Err(ObjectiveError::DegenerateLabels { positives, total: n });
    }
    if cfg.batch_size == 0 {
        return Err(ObjectiveError::ZeroBatch);
    }
    cfg.loss.validate()?;
    if !(0.0..1.0).contains(&cfg.dropout_rate) {
        return Err(ObjectiveError::InvalidRate(cfg.dropout_rate));
    }

    // weights[..dim] then the bias as the final parameter.
    let mut params = vec![0.0f64; dim + 1];
    let mut adam = AdamState::with_lr(dim + 1, cfg.lr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        fisher_yates(&mut order, &mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = vec![0.0f64; dim + 1];
            for &i in batch {
                let x = if cfg.dropout_rate > 0.0 {
                    dropout(&features[i], cfg.dropout_rate, &mut rng)?
                } else {
                    features[i].clone()
                };
                let logit = dot(&params[..dim], &x) + params[dim];
                let at = cfg.loss.apply(logit, labels[i] == 1);
                loss_sum += at.value;
                for (g, v) in grads[..dim].iter_mut().zip(&x) {
                    *g += at.grad_wrt_logit * v;
                }
                grads[dim] += at.grad_wrt_logit;
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                *g *= scale;
            }
            adam_step(&mut adam, &mut params, &grads)?;
        }

        let scored: Vec<ScoredCase> = features
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (x, &label))| ScoredCase {
                case_id: i.to_string(),
                label,
                score: sigmoid(dot(&params[..dim], x) + params[dim]),
            })
            .collect();
        let train_auc = auc_mann_whitney(&scored).expect("trace inputs are valid by construction");
        trace.push(EpochStats {
            mean_loss: loss_sum / n as f64,
            train_auc,
        });
    }

    let bias = params[dim];
    params.truncate(dim);
    Ok(TrainedModel {
        weights: params,
        bias,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Two well-separated 2D clusters with a little jitter.
    fn separable_set(n_per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for label in [0u8, 1u8] {
            let center = if label == 1 { 2.0 } else { -2.0 };
            for _ in 0..n_per_class {
                features.push(vec![
                    center + rng.random_range(-0.5..0.5),
                    center + rng.random_range(-0.5..0.5),
                ]);
                labels.push(label);
            }
        }
        (features, labels)
    }

    #[test]
    fn separable_data_reaches_perfect_training_auc() {
        let (features, labels) = separable_set(20, 1);
        let cfg = TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        };
        let model = train_logistic(&features, &labels, &cfg).unwrap();
        assert_eq!(model.trace.len(), 200);
        assert_eq!(model.trace.last().unwrap().train_auc, 1.0);
        // The learned direction must point toward the positive cluster.
        assert!(model.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn focal_loss_trains_the_same_geometry() {
        let (features, labels) = separable_set(20, 2);
        let cfg = TrainConfig {
            loss: LossKind::Focal { alpha: 0.25, gamma: 2.0 },
            epochs: 200,
            ..TrainConfig::default()
        };
        let model = train_logistic(&features, &labels, &cfg).unwrap();
        assert_eq!(model.trace.last().unwrap().train_auc, 1.0);
    }

    #[test]
    fn zero_epochs_leaves_zero_initialization() {
        let (features, labels) = separable_set(4, 3);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let model = train_logistic(&features, &labels, &cfg).unwrap();
        assert_eq!(model.weights, vec![0.0, 0.0]);
        assert_eq!(model.bias, 0.0);
        assert!(model.trace.is_empty());
        assert_eq!(model.predict(&[5.0, 5.0]), 0.5);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (features, labels) = separable_set(10, 4);
        let cfg = TrainConfig {
            epochs: 30,
            dropout_rate: 0.3,
            ..TrainConfig::default()
        };
        let a = train_logistic(&features, &labels, &cfg).unwrap();
        let b = train_logistic(&features, &labels, &cfg).unwrap();
        assert_eq!(a, b);

        let other = TrainConfig { seed: 5, ..cfg };
        let c = train_logistic(&features, &labels, &other).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn windowed_training_loss_is_non_increasing_on_separable_data() {
        let (features, labels) = separable_set(20, 6);
        let cfg = TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        };
        let model = train_logistic(&features, &labels, &cfg).unwrap();
        let windows: Vec<f64> = model
            .trace
            .chunks(5)
            .map(|w| w.iter().map(|e| e.mean_loss).sum::<f64>() / w.len() as f64)
            .collect();
        for pair in windows.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "windowed loss rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let (features, mut labels) = separable_set(4, 7);

        let all_one = vec![1u8; labels.len()];
        assert!(matches!(
            train_logistic(&features, &all_one, &TrainConfig::default()),
            Err(ObjectiveError::DegenerateLabels { .. })
        ));

        assert!(matches!(
            train_logistic(&features[..3], &labels[..3], &TrainConfig::default()),
            Err(ObjectiveError::TooFewSamples { min: 4, got: 3 })
        ));

        assert!(matches!(
            train_logistic(&features, &labels[..5], &TrainConfig::default()),
            Err(ObjectiveError::LabelCountMismatch { .. })
        ));

        labels[0] = 7;
        assert!(matches!(
            train_logistic(&features, &labels, &TrainConfig::default()),
            Err(ObjectiveError::InvalidLabel(7))
        ));
        labels[0] = 0;

        let mut ragged = features.clone();
        ragged[2] = vec![1.0];
        assert!(matches!(
            train_logistic(&ragged, &labels, &TrainConfig::default()),
            Err(ObjectiveError::RaggedFeatures { row: 2, .. })
        ));

        let mut poisoned = features.clone();
        poisoned[1][0] = f64::NAN;
        assert!(matches!(
            train_logistic(&poisoned, &labels, &TrainConfig::default()),
            Err(ObjectiveError::NonFiniteFeature(1))
        ));

        let zero_batch = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_logistic(&features, &labels, &zero_batch),
            Err(ObjectiveError::ZeroBatch)
        ));

        let bad_dropout = TrainConfig {
            dropout_rate: 1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_logistic(&features, &labels, &bad_dropout),
            Err(ObjectiveError::InvalidRate(_))
        ));
    }

    #[test]
    fn predict_ranks_held_out_points_correctly() {
        let (features, labels) = separable_set(20, 8);
        let cfg = TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        };
        let model = train_logistic(&features, &labels, &cfg).unwrap();
        assert!(model.predict(&[2.2, 1.8]) > model.predict(&[-1.9, -2.1]));
    }
}
