//! Scoring metrics for binary risk models: ROC curves, AUC, accuracy,
//! risk-bucket assignment, and the seeded train/test split.
//!
//! AUC is computed by two algorithms that must agree: the trapezoidal
//! integral of the tie-aware ROC sweep ([`roc_curve`]) and the
//! rank-sum estimator ([`auc_mann_whitney`]). Tests hold them to each
//! other at 1e-12; disagreement means one of them regressed.

use std::fmt::Write as _;
use std::fs;
use std::io::{self};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::shuffle::fisher_yates;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("no cases given")]
    EmptyInput,
    #[error("need both a positive and a negative case, got {positives} positives of {total}")]
    DegenerateLabels { positives: usize, total: usize },
    #[error("label must be 0 or 1, got {0}")]
    InvalidLabel(u8),
    #[error("score must be finite, got {0}")]
    NonFiniteScore(f64),
    #[error("bucket thresholds must be strictly ascending within (0, 1): {0}")]
    UnsortedThresholds(String),
    #[error("train fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("{path}:{line}: {reason}")]
    MalformedCsv {
        path: String,
        line: usize,
        reason: String,
    },
}

/// One scored case. `label` is 0 or 1; `score` is the model output,
/// conventionally in [0, 1] though the metrics only need finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCase {
    pub case_id: String,
    pub label: u8,
    pub score: f64,
}

/// A vertex of the ROC sweep. `threshold` is the score cutoff at which
/// this (fpr, tpr) operating point is reached; the initial (0, 0) vertex
/// carries +inf since no finite score clears it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Vertices from (0, 0) to (1, 1), both axes non-decreasing.
    pub points: Vec<RocPoint>,
    /// Trapezoidal area under the vertices.
    pub auc: f64,
}

fn validate(cases: &[ScoredCase]) -> Result<(usize, usize), EvalError> {
    if cases.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut positives = 0usize;
    for c in cases {
        if c.label > 1 {
            return Err(EvalError::InvalidLabel(c.label));
        }
        if !c.score.is_finite() {
            return Err(EvalError::NonFiniteScore(c.score));
        }
        positives += usize::from(c.label);
    }
    let negatives = cases.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::DegenerateLabels {
            positives,
            total: cases.len(),
        });
    }
    Ok((positives, negatives))
}

/// Sweeps the decision threshold down through the distinct scores,
/// predicting positive wherever `score >= threshold`. Tied scores move
/// as one group, so each distinct score contributes exactly one vertex.
pub fn roc_curve(cases: &[ScoredCase]) -> Result<RocCurve, EvalError> {
    let (positives, negatives) = validate(cases)?;
    let mut order: Vec<&ScoredCase> = cases.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = order[i].score;
        while i < order.len() && order[i].score == s {
            match order[i].label {
                1 => tp += 1,
                _ => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }

    let mut auc = 0.0;
    for pair in points.windows(2) {
        auc += (pair[1].fpr - pair[0].fpr) * (pair[0].tpr + pair[1].tpr) / 2.0;
    }
    Ok(RocCurve { points, auc })
}

/// AUC by the rank-sum route: sort ascending, give tied scores their
/// average rank, then U = R_pos - n_pos(n_pos + 1)/2 and AUC = U / (n_pos * n_neg).
pub fn auc_mann_whitney(cases: &[ScoredCase]) -> Result<f64, EvalError> {
    let (positives, negatives) = validate(cases)?;
    let mut order: Vec<&ScoredCase> = cases.iter().collect();
    order.sort_by(|a, b| a.score.total_cmp(&b.score));

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && order[j].score == order[i].score {
            j += 1;
        }
        // Ranks are 1-based; the tie group spanning ranks i+1 ..= j gets
        // the mean of those ranks.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let group_pos = order[i..j].iter().filter(|c| c.label == 1).count();
        rank_sum_pos += avg_rank * group_pos as f64;
        i = j;
    }

    let n_pos = positives as f64;
    let u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * negatives as f64))
}

/// Fraction of cases where `score >= threshold` matches the label.
pub fn accuracy(cases: &[ScoredCase], threshold: f64) -> Result<f64, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut correct = 0usize;
    for c in cases {
        if c.label > 1 {
            return Err(EvalError::InvalidLabel(c.label));
        }
        if (c.score >= threshold) == (c.label == 1) {
            correct += 1;
        }
    }
    Ok(correct as f64 / cases.len() as f64)
}

/// Maps a score to a risk bucket: the index equals the number of
/// thresholds at or below the score, so bucket boundaries are
/// upper-inclusive. Thresholds must be strictly ascending within (0, 1).
pub fn assign_bucket(score: f64, thresholds: &[f64]) -> Result<usize, EvalError> {
    for (i, &t) in thresholds.iter().enumerate() {
        if !(t > 0.0 && t < 1.0) {
            return Err(EvalError::UnsortedThresholds(format!(
                "threshold {t} at index {i} is outside (0, 1)"
            )));
        }
        if i > 0 && thresholds[i - 1] >= t {
            return Err(EvalError::UnsortedThresholds(format!(
                "{} at index {} does not increase past {}",
                t,
                i,
                thresholds[i - 1]
            )));
        }
    }
    Ok(thresholds.iter().filter(|&&t| t <= score).count())
}

/// Seeded train/test split: shuffle (see the repo's shuffle notes), then
/// take the first `floor(n * train_frac)` items as the training set.
pub fn split<T: Clone>(
    items: &[T],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), EvalError> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(EvalError::InvalidFraction(train_frac));
    }
    let mut idx: Vec<usize> = (0..items.len()).collect();
    fisher_yates(&mut idx, &mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (items.len() as f64 * train_frac).floor() as usize;
    let train = idx[..n_train].iter().map(|&i| items[i].clone()).collect();
    let test = idx[n_train..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}

/// Reads a `case_id,label,score` CSV. A first line of exactly that
/// header is skipped; case ids must not contain commas.
pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoredCase>, EvalError> {
    let text = fs::read_to_string(path)?;
    let err = |line: usize, reason: String| EvalError::MalformedCsv {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut cases = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() || (i == 0 && line == "case_id,label,score") {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(case_id), Some(label), Some(score), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(err(i + 1, "expected 3 comma-separated fields".into()));
        };
        let label: u8 = label
            .parse()
            .map_err(|_| err(i + 1, format!("bad label {label:?}")))?;
        if label > 1 {
            return Err(err(i + 1, format!("label must be 0 or 1, got {label}")));
        }
        let score: f64 = score
            .parse()
            .map_err(|_| err(i + 1, format!("bad score {score:?}")))?;
        if !score.is_finite() {
            return Err(err(i + 1, format!("score must be finite, got {score}")));
        }
        cases.push(ScoredCase {
            case_id: case_id.to_string(),
            label,
            score,
        });
    }
    Ok(cases)
}

pub fn write_scores_csv(path: &Path, cases: &[ScoredCase]) -> Result<(), EvalError> {
    let mut out = String::from("case_id,label,score\n");
    for c in cases {
        writeln!(out, "{},{},{}", c.case_id, c.label, c.score).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `threshold,fpr,tpr` rows followed by a `# auc=` trailer line.
pub fn write_roc_csv(path: &Path, curve: &RocCurve) -> Result<(), EvalError> {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr).expect("string write");
    }
    writeln!(out, "# auc={}", curve.auc).expect("string write");
    fs::write(path, out)?;
    Ok(())
}
