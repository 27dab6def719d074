//! Masked action distributions and the heuristic shaping layer.
//!
//! Shaping lifts the recommended action `h` above every eligible logit:
//!
//! ```text
//! logit'(h) = logit(h) + beta * (max_eligible logit - logit(h) + eta)
//! logit'(a) = logit(a)                       for a != h
//! ```
//!
//! For `beta >= 1` the recommended action becomes the argmax by at least
//! `eta`, and its probability grows monotonically with `beta`.

use rand::Rng;

use crate::env::ActionMask;
use crate::error::{Error, Result};
use crate::model::NodeId;

use super::net::DenseNet;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    /// Exactly 0 for masked actions. All zero when nothing is eligible.
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ActionDistribution {
    /// Softmax over the eligible entries of `logits`.
    pub fn from_logits(logits: Vec<f64>, mask: &ActionMask) -> Result<Self> {
        if logits.len() != mask.len() {
            return Err(Error::Contract(format!("{} logits for {} actions", logits.len(), mask.len())));
        }
        if let Some(i) = (0..logits.len()).find(|&i| mask.0[i] && !logits[i].is_finite()) {
            return Err(Error::Numerical(format!("non-finite logit for action {i}")));
        }
        let probs = masked_softmax(&logits, &mask.0);
        Ok(ActionDistribution { probs, logits, mask: mask.0.clone() })
    }

    /// True when no action is eligible; the caller must reject.
    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn prob(&self, a: NodeId) -> f64 {
        self.probs[a]
    }

    /// Eligible action with the largest logit, lowest id on ties.
    pub fn argmax(&self) -> Option<NodeId> {
        let mut best: Option<NodeId> = None;
        for (i, &l) in self.logits.iter().enumerate() {
            if self.mask[i] && best.is_none_or(|b| l > self.logits[b]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn entropy(&self) -> f64 {
        self.probs.iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum()
    }
}

pub(crate) fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; logits.len()];
    }
    let mut probs: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(l, &m)| if m { (l - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    probs
}

/// Log-probabilities of [`masked_softmax`], finite for every eligible action;
/// negative infinity for masked ones.
pub(crate) fn masked_log_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![f64::NEG_INFINITY; logits.len()];
    }
    let lse = max + logits.iter().zip(mask).filter(|(_, &m)| m).map(|(l, _)| (l - max).exp()).sum::<f64>().ln();
    logits.iter().zip(mask).map(|(l, &m)| if m { l - lse } else { f64::NEG_INFINITY }).collect()
}

/// Actor logits turned into a masked distribution.
pub fn policy_forward(actor: &DenseNet, features: &[f64], mask: &ActionMask) -> Result<ActionDistribution> {
    if features.len() != actor.input_len() {
        return Err(Error::Contract(format!(
            "feature length {} does not match actor input {}",
            features.len(),
            actor.input_len()
        )));
    }
    if mask.len() != actor.output_len() {
        return Err(Error::Contract(format!("mask length {} does not match actor output {}", mask.len(), actor.output_len())));
    }
    ActionDistribution::from_logits(actor.forward(features), mask)
}

pub fn heuristic_shaping(dist: &ActionDistribution, heu_action: Option<NodeId>, beta: f64, eta: f64) -> Result<ActionDistribution> {
    let Some(h) = heu_action else { return Ok(dist.clone()) };
    if beta == 0.0 {
        return Ok(dist.clone());
    }
    if !dist.mask.get(h).copied().unwrap_or(false) {
        return Err(Error::Contract(format!("recommended action {h} is not eligible")));
    }
    let max = dist
        .logits
        .iter()
        .zip(&dist.mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut logits = dist.logits.clone();
    logits[h] += beta * (max - dist.logits[h] + eta);
    let probs = masked_softmax(&logits, &dist.mask);
    Ok(ActionDistribution { probs, logits, mask: dist.mask.clone() })
}

/// Inverse-CDF draw; `None` for an empty distribution.
pub fn sample_action<R: Rng>(dist: &ActionDistribution, rng: &mut R) -> Option<NodeId> {
    if dist.is_empty() {
        return None;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in dist.probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    last
}
