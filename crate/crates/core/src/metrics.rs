//! Pairwise multiclass AUC over 3-grade references and ΔGSB.
//!
//! The AUC counts ordered pairs `(j, k)` whose reference scores satisfy
//! `y_j > y_k` and checks whether the predictions agree strictly
//! (`p_j > p_k`). Tied predictions earn nothing, unlike the usual ROC-AUC
//! half-credit convention.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{Lines, RelevanceLabel};
use crate::error::{CorpusError, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    pub reference: RelevanceLabel,
    pub predicted_score: f64,
}

impl ScoredPrediction {
    pub fn new(reference: RelevanceLabel, predicted_score: f64) -> Self {
        ScoredPrediction {
            reference,
            predicted_score,
        }
    }
}

/// 1 when `a > b`, otherwise 0.
#[inline]
pub fn indicator(a: f64, b: f64) -> u64 {
    u64::from(a > b)
}

fn check_finite(predictions: &[ScoredPrediction]) -> Result<(), MetricError> {
    match predictions.iter().position(|p| !p.predicted_score.is_finite()) {
        Some(i) => Err(MetricError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Concordant and comparable pair counts, kept as integers so both
/// implementations agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub concordant: u64,
    pub comparable: u64,
}

impl PairCounts {
    fn auc(self) -> Result<f64, MetricError> {
        if self.comparable == 0 {
            return Err(MetricError::SingleClass);
        }
        Ok(self.concordant as f64 / self.comparable as f64)
    }
}

/// Double loop over all ordered pairs.
pub fn pair_counts_reference(predictions: &[ScoredPrediction]) -> PairCounts {
    let mut c = PairCounts {
        concordant: 0,
        comparable: 0,
    };
    for a in predictions {
        for b in predictions {
            let fy = indicator(a.reference.score(), b.reference.score());
            c.comparable += fy;
            c.concordant += fy * indicator(a.predicted_score, b.predicted_score);
        }
    }
    c
}

/// Sort-based counting: per reference class, sort predictions once, then
/// for every higher-class prediction count lower-class predictions that
/// are strictly smaller by binary search.
pub fn pair_counts_fast(predictions: &[ScoredPrediction]) -> PairCounts {
    let mut by_class: [Vec<f64>; 3] = Default::default();
    for p in predictions {
        // +0.0 folds -0.0 so total_cmp order matches `<`
        by_class[p.reference.ordinal()].push(p.predicted_score + 0.0);
    }
    for v in &mut by_class {
        v.sort_unstable_by(f64::total_cmp);
    }
    let mut c = PairCounts {
        concordant: 0,
        comparable: 0,
    };
    // ordinals run Strong=0, Weak=1, Irrelevant=2: lower ordinal ranks higher
    for hi in 0..3 {
        for lo in hi + 1..3 {
            let lower = &by_class[lo];
            c.comparable += (by_class[hi].len() * lower.len()) as u64;
            c.concordant += by_class[hi]
                .iter()
                .map(|&p| lower.partition_point(|&x| x < p) as u64)
                .sum::<u64>();
        }
    }
    c
}

/// Multiclass AUC via the O(n²) definition. Used as the test oracle.
pub fn multiclass_auc_reference(predictions: &[ScoredPrediction]) -> Result<f64, MetricError> {
    check_finite(predictions)?;
    pair_counts_reference(predictions).auc()
}

/// Multiclass AUC in O(n log n).
pub fn multiclass_auc(predictions: &[ScoredPrediction]) -> Result<f64, MetricError> {
    check_finite(predictions)?;
    pair_counts_fast(predictions).auc()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GsbCounts {
    pub good: u64,
    pub same: u64,
    pub bad: u64,
}

impl GsbCounts {
    pub fn new(good: u64, same: u64, bad: u64) -> Self {
        GsbCounts { good, same, bad }
    }

    pub fn total(&self) -> u64 {
        self.good + self.same + self.bad
    }
}

/// `(good - bad) / (good + same + bad)`.
pub fn delta_gsb(counts: GsbCounts) -> Result<f64, MetricError> {
    let total = counts.total();
    if total == 0 {
        return Err(MetricError::NoJudgments);
    }
    let diff = counts.good as i128 - counts.bad as i128;
    Ok(diff as f64 / total as f64)
}

/// Reads `{"label": ..., "score": ...}` records; other fields are ignored.
/// `score_field` selects which numeric field holds the prediction.
pub fn read_predictions(
    reader: impl BufRead,
    score_field: &str,
) -> Result<Vec<ScoredPrediction>, CorpusError> {
    let mut out = Vec::new();
    for item in Lines::new(reader) {
        let (line, text) = item?;
        let err = |reason: String| CorpusError::Line { line, reason };
        let value: Value =
            serde_json::from_str(&text).map_err(|e| err(format!("invalid JSON: {e}")))?;
        let label = match value.get("label") {
            Some(Value::String(s)) => s.parse::<RelevanceLabel>().map_err(|e| err(e.to_string()))?,
            Some(_) => return Err(err("field label must be a string".into())),
            None => return Err(err("missing field label".into())),
        };
        let score = match value.get(score_field) {
            Some(Value::Number(n)) => n.as_f64().filter(|x| x.is_finite()),
            None => return Err(err(format!("missing field {score_field}"))),
            Some(_) => None,
        }
        .ok_or_else(|| err(format!("field {score_field} must be a finite number")))?;
        out.push(ScoredPrediction::new(label, score));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use RelevanceLabel::*;

    fn preds(refs: &[RelevanceLabel], scores: &[f64]) -> Vec<ScoredPrediction> {
        refs.iter()
            .zip(scores)
            .map(|(&r, &s)| ScoredPrediction::new(r, s))
            .collect()
    }

    #[test]
    fn indicator_cases() {
        assert_eq!(indicator(1.0, 0.7), 1);
        assert_eq!(indicator(0.7, 0.7), 0);
        assert_eq!(indicator(0.0, 1.0), 0);
    }

    #[test]
    fn perfect_order() {
        let p = preds(&[Strong, Weak, Irrelevant], &[0.9, 0.5, 0.1]);
        assert_eq!(multiclass_auc(&p).unwrap(), 1.0);
        assert_eq!(multiclass_auc_reference(&p).unwrap(), 1.0);
    }

    #[test]
    fn one_swapped_pair_gives_two_thirds() {
        let p = preds(&[Strong, Weak, Irrelevant], &[0.9, 0.95, 0.1]);
        assert_eq!(pair_counts_reference(&p), PairCounts { concordant: 2, comparable: 3 });
        assert_eq!(multiclass_auc(&p).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn all_ties_score_zero() {
        let p = preds(&[Strong, Weak, Irrelevant, Weak], &[0.5; 4]);
        assert_eq!(multiclass_auc(&p).unwrap(), 0.0);
        assert_eq!(multiclass_auc_reference(&p).unwrap(), 0.0);
    }

    #[test]
    fn single_class_is_an_error() {
        let p = preds(&[Weak, Weak], &[0.1, 0.2]);
        let e = multiclass_auc(&p).unwrap_err();
        assert_eq!(e.to_string(), "AUC undefined: single reference class");
        assert_eq!(multiclass_auc(&[]).unwrap_err(), MetricError::SingleClass);
    }

    #[test]
    fn non_finite_rejected() {
        let p = preds(&[Strong, Weak], &[f64::NAN, 0.2]);
        assert_eq!(multiclass_auc(&p).unwrap_err(), MetricError::NonFinite(0));
    }

    #[test]
    fn signed_zero_is_a_tie() {
        let p = preds(&[Strong, Weak], &[0.0, -0.0]);
        assert_eq!(multiclass_auc(&p).unwrap(), 0.0);
        assert_eq!(multiclass_auc_reference(&p).unwrap(), 0.0);
    }

    #[test]
    fn gsb_cases() {
        assert_eq!(delta_gsb(GsbCounts::new(20, 70, 10)).unwrap(), 0.1);
        assert_eq!(delta_gsb(GsbCounts::new(7, 0, 0)).unwrap(), 1.0);
        assert_eq!(delta_gsb(GsbCounts::new(5, 0, 5)).unwrap(), 0.0);
        assert_eq!(delta_gsb(GsbCounts::new(0, 3, 4)).unwrap(), -4.0 / 7.0);
        assert_eq!(delta_gsb(GsbCounts::default()).unwrap_err().to_string(), "no judgments");
    }

    #[test]
    fn reads_prediction_records() {
        let data = "{\"label\":\"strong\",\"score\":0.9}\n{\"label\":\"weak\",\"score\":1,\"alt\":0.2}\n";
        let p = read_predictions(data.as_bytes(), "score").unwrap();
        assert_eq!(p, preds(&[Strong, Weak], &[0.9, 1.0]));
        let alt = read_predictions(data.as_bytes(), "alt").unwrap_err();
        assert_eq!(alt.to_string(), "line 1: missing field alt");
    }
}
