//! Binary classification losses on raw logits.
//!
//! Everything is written in the logit domain so no code path ever takes
//! `ln` of a rounded probability: `ln p = -softplus(-l)` and
//! `ln(1-p) = -softplus(l)` are exact identities, and `sigmoid(-l)` is
//! the full-precision form of `1 - p`.

use super::ObjectiveError;

pub const DEFAULT_FOCAL_ALPHA: f64 = 0.25;
pub const DEFAULT_FOCAL_GAMMA: f64 = 2.0;

/// A loss evaluation at one sample: the objective itself and its
/// derivative with respect to the logit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad_wrt_logit: f64,
}

/// Which objective the trainer minimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    CrossEntropy,
    Focal { alpha: f64, gamma: f64 },
}

impl LossKind {
    pub(crate) fn validate(&self) -> Result<(), ObjectiveError> {
        if let LossKind::Focal { alpha, gamma } = *self {
            check_focal_params(alpha, gamma)?;
        }
        Ok(())
    }

    /// Evaluates the loss; focal parameters must already be validated.
    pub(crate) fn apply(&self, logit: f64, y: bool) -> LossValue {
        match *self {
            LossKind::CrossEntropy => cross_entropy(logit, y),
            LossKind::Focal { alpha, gamma } => focal_unchecked(logit, y, alpha, gamma),
        }
    }
}

pub(crate) fn sigmoid(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow or ln(0).
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Stable binary cross-entropy: value = softplus(-l) for y = 1 and
/// softplus(l) for y = 0; grad = p - y, with the y = 1 branch computed
/// as -sigmoid(-l) to keep precision when p is close to 1.
pub fn cross_entropy(logit: f64, y: bool) -> LossValue {
    if y {
        LossValue {
            value: softplus(-logit),
            grad_wrt_logit: -sigmoid(-logit),
        }
    } else {
        LossValue {
            value: softplus(logit),
            grad_wrt_logit: sigmoid(logit),
        }
    }
}

/// Focal loss: cross-entropy with the well-classified side down-weighted
/// by (1-p)^gamma (resp. p^gamma) and the classes weighted alpha / 1-alpha.
/// gamma = 0, alpha = 0.5 reduces to 0.5 * cross_entropy bit for bit.
pub fn focal_loss(logit: f64, y: bool, alpha: f64, gamma: f64) -> Result<LossValue, ObjectiveError> {
    check_focal_params(alpha, gamma)?;
    Ok(focal_unchecked(logit, y, alpha, gamma))
}

fn check_focal_params(alpha: f64, gamma: f64) -> Result<(), ObjectiveError> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(ObjectiveError::InvalidAlpha(alpha));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(ObjectiveError::InvalidGamma(gamma));
    }
    Ok(())
}

fn focal_unchecked(logit: f64, y: bool, alpha: f64, gamma: f64) -> LossValue {
    let p = sigmoid(logit);
    let q = sigmoid(-logit);
    if y {
        // value = -alpha * q^gamma * ln p
        // d/dl  =  alpha * q^gamma * (gamma * p * ln p - q)
        let ln_p = -softplus(-logit);
        let weight = alpha * q.powf(gamma);
        LossValue {
            value: weight * -ln_p,
            grad_wrt_logit: weight * (gamma * p * ln_p - q),
        }
    } else {
        // value = -(1-alpha) * p^gamma * ln q
        // d/dl  =  (1-alpha) * p^gamma * (p - gamma * q * ln q)
        let ln_q = -softplus(logit);
        let weight = (1.0 - alpha) * p.powf(gamma);
        LossValue {
            value: weight * -ln_q,
            grad_wrt_logit: weight * (p - gamma * q * ln_q),
        }
    }
}
