//! Types shared by every detector front end.

use std::collections::HashMap;
use std::time::Duration;

use nalgebra::DVector;

use crate::constellation::Constellation;
use crate::posterior::PosteriorModel;

/// Per-detection bookkeeping that rides along with the decision.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Fraction of accepted proposals, for samplers with an accept step.
    pub acceptance_rate: Option<f64>,
    /// Best candidate log likelihood found by each chain or restart.
    pub per_chain_best: Vec<f64>,
    /// Wall time of the whole detection call.
    pub wall_time: Duration,
}

/// Hard decision produced by a detector.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    /// Recovered bit stream, Gray-demapped from the winning candidate.
    pub bits: Vec<bool>,
    /// Winning symbol vector, entries on the constellation grid.
    pub best_candidate: Vec<f64>,
    /// Log likelihood of the winning candidate.
    pub best_log_likelihood: f64,
    pub diagnostics: Diagnostics,
}

/// Quantizes every coordinate to its level index.
pub(crate) fn quantize_indices(c: &Constellation, u: &DVector<f64>) -> Vec<u8> {
    u.iter().map(|&x| c.quantize_index(x) as u8).collect()
}

pub(crate) fn indices_to_levels(c: &Constellation, idx: &[u8]) -> Vec<f64> {
    idx.iter().map(|&k| c.pam_levels()[k as usize]).collect()
}

/// Returns true when candidate `(score_a, key_a)` beats `(score_b, key_b)`.
///
/// Exact score ties resolve to the lexicographically smaller index vector,
/// which makes the argmax independent of visit order.
pub(crate) fn candidate_beats(
    score_a: f64,
    key_a: &[u8],
    score_b: f64,
    key_b: &[u8],
) -> bool {
    score_a > score_b || (score_a == score_b && key_a < key_b)
}

/// Deduplicated set of quantized candidates with their likelihood scores.
#[derive(Debug, Default)]
pub(crate) struct CandidatePool {
    scores: HashMap<Vec<u8>, f64>,
}

impl CandidatePool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Quantizes a sample and scores it unless an identical candidate was
    /// already seen.
    pub fn insert_sample(
        &mut self,
        c: &Constellation,
        m: &PosteriorModel,
        u: &DVector<f64>,
    ) {
        let key = quantize_indices(c, u);
        if !self.scores.contains_key(&key) {
            let cand = DVector::from_vec(indices_to_levels(c, &key));
            let score = m.candidate_log_likelihood(&cand);
            self.scores.insert(key, score);
        }
    }

    pub fn merge(&mut self, other: CandidatePool) {
        for (k, v) in other.scores {
            self.scores.entry(k).or_insert(v);
        }
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    /// Highest-scoring candidate under the deterministic tie rule.
    pub fn best(&self) -> Option<(&[u8], f64)> {
        let mut best: Option<(&Vec<u8>, f64)> = None;
        for (k, &s) in &self.scores {
            match best {
                None => best = Some((k, s)),
                Some((bk, bs)) => {
                    if candidate_beats(s, k, bs, bk) {
                        best = Some((k, s));
                    }
                }
            }
        }
        best.map(|(k, s)| (k.as_slice(), s))
    }
}
