//! Heuristic 3-grade relevance scorer and the synthetic experiment that
//! compares mix-structured input with query-focused input alone.
//!
//! Two features drive the scorer:
//! - `qf_coverage`: share of distinct query tokens found in the
//!   query-focused segment;
//! - `doc_density`: share of document-summary sentences mentioning at
//!   least one query token.
//!
//! Coverage decides relevant vs irrelevant; density separates strong from
//! weak. The query-focused-only variant has no density signal and treats
//! it as saturated, so it can never answer "weak".

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{stats, DatasetStats, LabeledPair, RelevanceLabel};
use crate::error::SummaryError;
use crate::metrics::{multiclass_auc, ScoredPrediction};
use crate::summarizer::{mix_summary, query_tokens, MixSummary, SummaryBudget};
use crate::textseg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorerFeatures {
    pub qf_coverage: f64,
    pub doc_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scorer {
    /// Coverage below this is irrelevant.
    pub irrelevant_below: f64,
    /// Density at or above this is strong.
    pub strong_at: f64,
}

impl Default for Scorer {
    fn default() -> Self {
        Scorer {
            irrelevant_below: 0.34,
            strong_at: 0.5,
        }
    }
}

fn coverage(qtokens: &[String], text: &str) -> f64 {
    if qtokens.is_empty() || text.is_empty() {
        return 0.0;
    }
    let present: HashSet<String> = textseg::tokenize(text).into_iter().map(|t| t.normalized).collect();
    let hits = qtokens.iter().filter(|t| present.contains(*t)).count();
    hits as f64 / qtokens.len() as f64
}

fn density(qtokens: &[String], doc_summary: &str) -> f64 {
    let Ok(doc) = textseg::segment(doc_summary) else {
        return 0.0;
    };
    let n = doc.sentences.len();
    if n == 0 || qtokens.is_empty() {
        return 0.0;
    }
    let hits = doc
        .sentences
        .iter()
        .filter(|s| {
            let set = s.token_set();
            qtokens.iter().any(|t| set.contains(t.as_str()))
        })
        .count();
    hits as f64 / n as f64
}

pub fn features(query: &str, mix: &MixSummary) -> ScorerFeatures {
    let q = query_tokens(query);
    ScorerFeatures {
        qf_coverage: coverage(&q, &mix.query_focused),
        doc_density: density(&q, &mix.doc_summary),
    }
}

impl Scorer {
    pub fn classify(&self, f: ScorerFeatures) -> (RelevanceLabel, f64) {
        let label = if f.qf_coverage < self.irrelevant_below {
            RelevanceLabel::Irrelevant
        } else if f.doc_density >= self.strong_at {
            RelevanceLabel::Strong
        } else {
            RelevanceLabel::Weak
        };
        (label, 0.5 * f.qf_coverage + 0.5 * f.doc_density)
    }

    pub fn score(&self, query: &str, mix: &MixSummary) -> (RelevanceLabel, f64) {
        self.classify(features(query, mix))
    }

    pub fn score_query_focused_only(&self, query: &str, qf_summary: &str) -> (RelevanceLabel, f64) {
        let qf_coverage = coverage(&query_tokens(query), qf_summary);
        let doc_density = if qf_coverage >= self.irrelevant_below { 1.0 } else { 0.0 };
        self.classify(ScorerFeatures {
            qf_coverage,
            doc_density,
        })
    }
}

pub fn score(query: &str, mix: &MixSummary) -> (RelevanceLabel, f64) {
    Scorer::default().score(query, mix)
}

pub fn score_query_focused_only(query: &str, qf_summary: &str) -> (RelevanceLabel, f64) {
    Scorer::default().score_query_focused_only(query, qf_summary)
}

/// Both scorers applied to one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub mix: MixSummary,
    pub predicted_mix: RelevanceLabel,
    pub score_mix: f64,
    pub predicted_qf_only: RelevanceLabel,
    pub score_qf_only: f64,
}

pub fn score_pair(
    pair: &LabeledPair,
    budget: &SummaryBudget,
    scorer: &Scorer,
) -> Result<PairScores, SummaryError> {
    let mix = mix_summary(&pair.query, &pair.document, budget)?;
    let (predicted_mix, score_mix) = scorer.score(&pair.query, &mix);
    let (predicted_qf_only, score_qf_only) = scorer.score_query_focused_only(&pair.query, &mix.query_focused);
    Ok(PairScores {
        mix,
        predicted_mix,
        score_mix,
        predicted_qf_only,
        score_qf_only,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
}

impl Band {
    pub const fn new(min: f64, max: f64) -> Self {
        Band { min, max }
    }

    /// Relevant-sentence counts `k` with `k / n` inside the band.
    fn counts(&self, n: usize) -> std::ops::RangeInclusive<usize> {
        let eps = 1e-9;
        let lo = (self.min * n as f64 - eps).ceil().max(0.0) as usize;
        let hi = (self.max * n as f64 + eps).floor().min(n as f64) as usize;
        lo..=hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    pub strong_band: Band,
    pub weak_band: Band,
    pub sentences_per_doc: usize,
    pub sentences_per_paragraph: usize,
    /// Words queries are drawn from; relevant sentences embed the query.
    pub topic_vocabulary: Vec<String>,
    /// Words for all other sentence material; disjoint from the topics.
    pub filler_vocabulary: Vec<String>,
    pub seed: u64,
    /// Skip band checks (for deliberately degenerate setups).
    pub unchecked: bool,
}

const TOPICS: &[&str] = &[
    "sakura", "lantern", "dumpling", "pagoda", "teahouse", "noodle", "ferry", "orchard",
    "aquarium", "bakery", "karaoke", "hotspring", "museum", "skewer", "brunch", "harbor",
    "temple", "bookstore", "waterfall", "gallery",
];

const FILLER: &[&str] = &[
    "the", "a", "we", "walked", "along", "quiet", "street", "and", "saw", "people", "waiting",
    "for", "bus", "weather", "was", "mild", "friends", "talked", "about", "work", "coffee",
    "later", "evening", "crowd", "small", "shops", "sold", "umbrellas", "parking", "near",
    "station", "took", "photos", "of", "old", "buildings", "traffic", "slow", "morning", "rain",
    "stopped", "children", "played", "square", "prices", "seemed", "fair", "staff", "friendly",
];

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_docs: 300,
            strong_band: Band::new(0.6, 0.9),
            weak_band: Band::new(0.08, 0.25),
            sentences_per_doc: 12,
            sentences_per_paragraph: 4,
            topic_vocabulary: TOPICS.iter().map(|s| s.to_string()).collect(),
            filler_vocabulary: FILLER.iter().map(|s| s.to_string()).collect(),
            seed: 7,
            unchecked: false,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_docs == 0 || self.sentences_per_doc == 0 || self.sentences_per_paragraph == 0 {
            return Err("n_docs, sentences_per_doc and sentences_per_paragraph must be positive".into());
        }
        if self.topic_vocabulary.is_empty() || self.filler_vocabulary.is_empty() {
            return Err("vocabularies must be non-empty".into());
        }
        let norm = |v: &[String]| -> HashSet<String> {
            v.iter().flat_map(|w| textseg::tokenize(w)).map(|t| t.normalized).collect()
        };
        if !norm(&self.topic_vocabulary).is_disjoint(&norm(&self.filler_vocabulary)) {
            return Err("topic and filler vocabularies overlap".into());
        }
        if self.unchecked {
            return Ok(());
        }
        let (s, w) = (self.strong_band, self.weak_band);
        if !(s.min > w.max && w.max > 0.0 && w.min <= w.max && s.min <= s.max && s.max <= 1.0) {
            return Err(format!(
                "bands must satisfy strong.min > weak.max > 0, got strong {s:?} weak {w:?}"
            ));
        }
        for (name, b) in [("strong", s), ("weak", w)] {
            let r = b.counts(self.sentences_per_doc);
            if r.is_empty() || *r.start() == 0 {
                return Err(format!(
                    "{name} band admits no positive sentence count out of {}",
                    self.sentences_per_doc
                ));
            }
        }
        Ok(())
    }

    pub fn class_for(&self, i: usize) -> RelevanceLabel {
        RelevanceLabel::ALL[i % 3]
    }
}

fn sentence(rng: &mut ChaCha8Rng, filler: &[String], embed: Option<&str>) -> String {
    let len = rng.random_range(3..=5);
    let mut words: Vec<String> = (0..len)
        .map(|_| filler.choose(rng).expect("filler").clone())
        .collect();
    if let Some(q) = embed {
        let slot = rng.random_range(0..len);
        words[slot] = q.to_string();
        // keep the sentence within 3..=5 tokens when the query has two words
        if textseg::token_count(q) > 1 && len > 3 {
            words.remove(if slot == 0 { 1 } else { 0 });
        }
    }
    let mut s = words.join(" ");
    if let Some(first) = s.get(..1) {
        s.replace_range(..1, &first.to_uppercase());
    }
    s.push('.');
    s
}

fn pick_count(rng: &mut ChaCha8Rng, band: Band, n: usize) -> usize {
    let r = band.counts(n);
    if r.is_empty() {
        // only reachable with `unchecked` specs
        (*r.start()).min(n)
    } else {
        rng.random_range(r)
    }
}

/// Builds the synthetic corpus. Classes cycle strong, weak, irrelevant.
pub fn synthesize_corpus(spec: &SyntheticSpec) -> Result<Vec<LabeledPair>, String> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.n_docs);
    for i in 0..spec.n_docs {
        // one stream per document keeps documents independent of n_docs
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let label = spec.class_for(i);
        let n_words = if rng.random_bool(0.3) && spec.topic_vocabulary.len() > 1 { 2 } else { 1 };
        let query_words: Vec<&String> = spec.topic_vocabulary.choose_multiple(&mut rng, n_words).collect();
        let query = query_words.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ");
        let n = spec.sentences_per_doc;
        let k = match label {
            RelevanceLabel::Strong => pick_count(&mut rng, spec.strong_band, n),
            RelevanceLabel::Weak => pick_count(&mut rng, spec.weak_band, n),
            RelevanceLabel::Irrelevant => 0,
        };
        let mut relevant = vec![false; n];
        relevant[..k].iter_mut().for_each(|r| *r = true);
        relevant.shuffle(&mut rng);
        let sentences: Vec<String> = relevant
            .iter()
            .map(|&r| sentence(&mut rng, &spec.filler_vocabulary, r.then_some(query.as_str())))
            .collect();
        let document = sentences
            .chunks(spec.sentences_per_paragraph)
            .map(|p| p.join(" "))
            .collect::<Vec<_>>()
            .join("\n\n");
        out.push(LabeledPair::new(format!("syn-{i}"), query, document, label));
    }
    Ok(out)
}

/// Rows are reference labels, columns predictions, both in
/// strong / weak / irrelevant order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix(pub [[usize; 3]; 3]);

impl ConfusionMatrix {
    pub fn add(&mut self, reference: RelevanceLabel, predicted: RelevanceLabel) {
        self.0[reference.ordinal()][predicted.ordinal()] += 1;
    }

    pub fn row_total(&self, reference: RelevanceLabel) -> usize {
        self.0[reference.ordinal()].iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total: usize = self.0.iter().flatten().sum();
        let diag: usize = (0..3).map(|i| self.0[i][i]).sum();
        if total == 0 {
            0.0
        } else {
            diag as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub n: usize,
    pub seed: u64,
    pub stats: DatasetStats,
    pub auc_mix: f64,
    pub auc_qf_only: f64,
    pub auc_gain: f64,
    pub confusion_mix: ConfusionMatrix,
    pub confusion_qf_only: ConfusionMatrix,
    pub accuracy_mix: f64,
    pub accuracy_qf_only: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error(transparent)]
    Metric(#[from] crate::error::MetricError),
}

/// Scores `pairs` both ways and reports AUC and confusion matrices.
pub fn evaluate_pairs(
    pairs: &[LabeledPair],
    budget: &SummaryBudget,
    scorer: &Scorer,
) -> Result<(Vec<PairScores>, ExperimentReportParts), ExperimentError> {
    budget.validate()?;
    let scored: Vec<PairScores> = pairs
        .par_iter()
        .map(|p| score_pair(p, budget, scorer))
        .collect::<Result<_, _>>()?;
    let mut cm_mix = ConfusionMatrix::default();
    let mut cm_qf = ConfusionMatrix::default();
    let mut p_mix = Vec::with_capacity(pairs.len());
    let mut p_qf = Vec::with_capacity(pairs.len());
    for (pair, s) in pairs.iter().zip(&scored) {
        cm_mix.add(pair.label, s.predicted_mix);
        cm_qf.add(pair.label, s.predicted_qf_only);
        p_mix.push(ScoredPrediction::new(pair.label, s.score_mix));
        p_qf.push(ScoredPrediction::new(pair.label, s.score_qf_only));
    }
    let parts = ExperimentReportParts {
        auc_mix: multiclass_auc(&p_mix)?,
        auc_qf_only: multiclass_auc(&p_qf)?,
        confusion_mix: cm_mix,
        confusion_qf_only: cm_qf,
    };
    Ok((scored, parts))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentReportParts {
    pub auc_mix: f64,
    pub auc_qf_only: f64,
    pub confusion_mix: ConfusionMatrix,
    pub confusion_qf_only: ConfusionMatrix,
}

pub fn run_experiment(spec: &SyntheticSpec, budget: &SummaryBudget) -> Result<ExperimentReport, ExperimentError> {
    run_experiment_with(spec, budget, &Scorer::default())
}

pub fn run_experiment_with(
    spec: &SyntheticSpec,
    budget: &SummaryBudget,
    scorer: &Scorer,
) -> Result<ExperimentReport, ExperimentError> {
    let corpus = synthesize_corpus(spec).map_err(ExperimentError::Spec)?;
    let (_, parts) = evaluate_pairs(&corpus, budget, scorer)?;
    Ok(ExperimentReport {
        n: corpus.len(),
        seed: spec.seed,
        stats: stats(&corpus),
        auc_mix: parts.auc_mix,
        auc_qf_only: parts.auc_qf_only,
        auc_gain: parts.auc_mix - parts.auc_qf_only,
        accuracy_mix: parts.confusion_mix.accuracy(),
        accuracy_qf_only: parts.confusion_qf_only.accuracy(),
        confusion_mix: parts.confusion_mix,
        confusion_qf_only: parts.confusion_qf_only,
    })
}
