//! Training-data expansion through query rewriting and query generation.
//!
//! Every sample keeps the source document byte for byte. Labels follow
//! fixed rules: synonyms inherit the source label, antonyms are
//! irrelevant, and of three ranked keywords the first becomes a strong
//! query and the third a weak one (the second is dropped).

mod mock;
mod prompt;
mod provider;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use mock::{mock_provider, top_keywords, MockProvider};
pub use prompt::{Prompt, PromptKind, PromptTemplate, Templates};
pub use provider::{
    complete_with_retry, parse_chat_response, HttpConfig, HttpProvider, LlmProvider,
    RetryPolicy, ScriptedProvider, TokenBucket, ENV_KEY, ENV_MODEL, ENV_URL,
};

use crate::corpus::{LabeledPair, RelevanceLabel};
use crate::error::AugmentError;
use crate::textseg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    SynonymRewrite,
    AntonymRewrite,
    /// Keyword rank, 1 (most important) or 3.
    KeywordGeneration { rank: u8 },
}

impl Provenance {
    fn id_suffix(self) -> &'static str {
        match self {
            Provenance::SynonymRewrite => "syn",
            Provenance::AntonymRewrite => "ant",
            Provenance::KeywordGeneration { rank: 1 } => "gen1-",
            Provenance::KeywordGeneration { .. } => "gen3-",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::SynonymRewrite => f.write_str("synonym_rewrite"),
            Provenance::AntonymRewrite => f.write_str("antonym_rewrite"),
            Provenance::KeywordGeneration { rank } => write!(f, "keyword_generation_rank{rank}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synonym_rewrite" => Ok(Provenance::SynonymRewrite),
            "antonym_rewrite" => Ok(Provenance::AntonymRewrite),
            "keyword_generation_rank1" => Ok(Provenance::KeywordGeneration { rank: 1 }),
            "keyword_generation_rank3" => Ok(Provenance::KeywordGeneration { rank: 3 }),
            other => Err(format!("unknown provenance {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub pair: LabeledPair,
    pub provenance: Provenance,
    pub source_id: String,
}

impl AugmentedSample {
    fn new(source: &LabeledPair, query: String, label: RelevanceLabel, provenance: Provenance, n: usize) -> Self {
        AugmentedSample {
            pair: LabeledPair::new(
                format!("{}#{}{}", source.id, provenance.id_suffix(), n),
                query,
                source.document.clone(),
                label,
            ),
            provenance,
            source_id: source.id.clone(),
        }
    }

    /// Dataset record: corpus fields plus `provenance` and `source_id`.
    pub fn to_record(&self) -> LabeledPair {
        let mut p = self.pair.clone();
        p.extra.insert("provenance".into(), Value::String(self.provenance.to_string()));
        p.extra.insert("source_id".into(), Value::String(self.source_id.clone()));
        p
    }

    /// Checks the labeling rules against the originating pair.
    pub fn check_invariants(&self, source: &LabeledPair) -> Result<(), String> {
        if self.source_id != source.id {
            return Err(format!("source id {} != {}", self.source_id, source.id));
        }
        if self.pair.document != source.document {
            return Err("document altered".into());
        }
        let expected = match self.provenance {
            Provenance::SynonymRewrite => source.label,
            Provenance::AntonymRewrite => RelevanceLabel::Irrelevant,
            Provenance::KeywordGeneration { rank: 1 } => RelevanceLabel::Strong,
            Provenance::KeywordGeneration { rank: 3 } => RelevanceLabel::Weak,
            Provenance::KeywordGeneration { rank } => return Err(format!("rank {rank} emitted")),
        };
        if self.pair.label != expected {
            return Err(format!(
                "{} sample labeled {} (expected {expected})",
                self.provenance, self.pair.label
            ));
        }
        Ok(())
    }
}

/// One-per-line candidates. Leading list markers are stripped; a line
/// that is too long to be a query makes the completion unparseable.
pub fn parse_candidates(raw: &str, max_tokens: usize) -> Result<Vec<String>, AugmentError> {
    let mut out = Vec::new();
    for line in raw.lines() {
        let line = strip_list_marker(line.trim());
        if line.is_empty() {
            continue;
        }
        if textseg::token_count(line) > max_tokens {
            return Err(AugmentError::Parse {
                reason: format!("candidate longer than {max_tokens} tokens"),
                raw: raw.to_string(),
            });
        }
        out.push(line.to_string());
    }
    Ok(out)
}

fn strip_list_marker(line: &str) -> &str {
    if let Some(rest) = line.strip_prefix(['-', '*', '•']) {
        return rest.trim_start();
    }
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(r) = rest.strip_prefix(['.', ')']) {
            if r.starts_with(char::is_whitespace) {
                return r.trim_start();
            }
        }
    }
    line
}

/// Exactly three `>`-separated keywords from the first non-empty line.
pub fn parse_keywords(raw: &str) -> Result<[String; 3], AugmentError> {
    let line = raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let parts: Vec<String> = line
        .split(['>', '＞'])
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    <[String; 3]>::try_from(parts).map_err(|parts| AugmentError::Parse {
        reason: format!("expected 3 keywords, got {}", parts.len()),
        raw: raw.to_string(),
    })
}

/// True when the normalized tokens of `phrase` occur contiguously in
/// `document`.
pub fn contains_phrase(document: &str, phrase: &str) -> bool {
    let needle: Vec<String> = textseg::tokenize(phrase).into_iter().map(|t| t.normalized).collect();
    if needle.is_empty() {
        return false;
    }
    let hay: Vec<String> = textseg::tokenize(document).into_iter().map(|t| t.normalized).collect();
    hay.windows(needle.len()).any(|w| w == needle.as_slice())
}

/// Drops empty candidates, echoes of the source query and in-batch
/// duplicates (all compared on normalized tokens), keeping at most `cap`.
fn validate_rewrites(source_query: &str, candidates: Vec<String>, cap: usize) -> Vec<String> {
    let original = textseg::normalized_key(source_query);
    let mut seen = HashSet::new();
    candidates
        .into_iter()
        .filter(|c| {
            let key = textseg::normalized_key(c);
            !key.is_empty() && key != original && seen.insert(key)
        })
        .take(cap)
        .collect()
}

/// Provider access shared by the augmentation operations.
pub struct Augmenter<'a> {
    llm: &'a dyn LlmProvider,
    pub templates: Templates,
    pub retry: RetryPolicy,
    pub limiter: Option<&'a TokenBucket>,
    pub max_synonyms: usize,
    pub max_antonyms: usize,
    pub max_candidate_tokens: usize,
}

impl<'a> Augmenter<'a> {
    pub fn new(llm: &'a dyn LlmProvider) -> Self {
        let d = AugmentConfig::default();
        Augmenter {
            llm,
            templates: Templates::default(),
            retry: d.retry,
            limiter: None,
            max_synonyms: d.max_synonyms,
            max_antonyms: d.max_antonyms,
            max_candidate_tokens: d.max_candidate_tokens,
        }
    }

    pub fn with_config(llm: &'a dyn LlmProvider, config: &AugmentConfig, limiter: Option<&'a TokenBucket>) -> Self {
        Augmenter {
            llm,
            templates: Templates::default(),
            retry: config.retry,
            limiter,
            max_synonyms: config.max_synonyms,
            max_antonyms: config.max_antonyms,
            max_candidate_tokens: config.max_candidate_tokens,
        }
    }

    fn call(&self, kind: PromptKind, source: &LabeledPair) -> Result<String, AugmentError> {
        let prompt = self.templates.prompt(kind, &source.query, &source.document);
        Ok(complete_with_retry(self.llm, &prompt, &self.retry, self.limiter)?)
    }

    pub fn rewrite_synonym(&self, source: &LabeledPair) -> Result<Vec<AugmentedSample>, AugmentError> {
        let raw = self.call(PromptKind::Synonym, source)?;
        let cands = parse_candidates(&raw, self.max_candidate_tokens)?;
        Ok(validate_rewrites(&source.query, cands, self.max_synonyms)
            .into_iter()
            .enumerate()
            .map(|(i, q)| AugmentedSample::new(source, q, source.label, Provenance::SynonymRewrite, i + 1))
            .collect())
    }

    pub fn rewrite_antonym(&self, source: &LabeledPair) -> Result<Vec<AugmentedSample>, AugmentError> {
        if !source.label.is_relevant() {
            return Err(AugmentError::AntonymNeedsRelevant);
        }
        let raw = self.call(PromptKind::Antonym, source)?;
        let cands = parse_candidates(&raw, self.max_candidate_tokens)?;
        Ok(validate_rewrites(&source.query, cands, self.max_antonyms)
            .into_iter()
            .enumerate()
            .map(|(i, q)| {
                AugmentedSample::new(source, q, RelevanceLabel::Irrelevant, Provenance::AntonymRewrite, i + 1)
            })
            .collect())
    }

    /// `call` numbers repeated generation calls for the same source.
    pub fn generate_queries_nth(&self, source: &LabeledPair, call: usize) -> Result<Vec<AugmentedSample>, AugmentError> {
        if !source.label.is_relevant() {
            return Err(AugmentError::GenerationNeedsRelevant);
        }
        let raw = self.call(PromptKind::Keywords, source)?;
        let [first, _second, third] = parse_keywords(&raw)?;
        let mut out = Vec::new();
        for (kw, rank, label) in [(first, 1, RelevanceLabel::Strong), (third, 3, RelevanceLabel::Weak)] {
            if contains_phrase(&source.document, &kw) {
                out.push(AugmentedSample::new(
                    source,
                    kw,
                    label,
                    Provenance::KeywordGeneration { rank },
                    call,
                ));
            }
        }
        Ok(out)
    }

    pub fn generate_queries(&self, source: &LabeledPair) -> Result<Vec<AugmentedSample>, AugmentError> {
        self.generate_queries_nth(source, 1)
    }
}

pub fn rewrite_synonym(source: &LabeledPair, llm: &dyn LlmProvider) -> Result<Vec<AugmentedSample>, AugmentError> {
    Augmenter::new(llm).rewrite_synonym(source)
}

pub fn rewrite_antonym(source: &LabeledPair, llm: &dyn LlmProvider) -> Result<Vec<AugmentedSample>, AugmentError> {
    Augmenter::new(llm).rewrite_antonym(source)
}

pub fn generate_queries(source: &LabeledPair, llm: &dyn LlmProvider) -> Result<Vec<AugmentedSample>, AugmentError> {
    Augmenter::new(llm).generate_queries(source)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentOp {
    Syn,
    Ant,
    Gen,
}

impl FromStr for AugmentOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "syn" | "synonym" => Ok(AugmentOp::Syn),
            "ant" | "antonym" => Ok(AugmentOp::Ant),
            "gen" | "generation" => Ok(AugmentOp::Gen),
            other => Err(format!("unknown augmentation op {other:?} (expected syn, ant, gen)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingRates {
    pub syn: f64,
    pub ant: f64,
    pub gen: f64,
}

impl Default for SamplingRates {
    fn default() -> Self {
        SamplingRates {
            syn: 0.2,
            ant: 0.6,
            gen: 0.4,
        }
    }
}

impl SamplingRates {
    pub fn get(&self, op: AugmentOp) -> f64 {
        match op {
            AugmentOp::Syn => self.syn,
            AugmentOp::Ant => self.ant,
            AugmentOp::Gen => self.gen,
        }
    }

    pub fn all(rate: f64) -> Self {
        SamplingRates {
            syn: rate,
            ant: rate,
            gen: rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub ops: Vec<AugmentOp>,
    /// Fraction of eligible sources each op is applied to.
    pub sampling: SamplingRates,
    pub max_synonyms: usize,
    pub max_antonyms: usize,
    pub max_generation_calls: usize,
    pub max_candidate_tokens: usize,
    /// Seed for source sampling (the mock provider has its own seed).
    pub seed: u64,
    pub max_inflight: usize,
    /// Requests per second across all workers; `None` disables limiting.
    pub rate_limit: Option<f64>,
    pub rate_burst: u32,
    /// Abort when failed op calls exceed this fraction of attempted ones.
    pub max_failure_rate: f64,
    pub retry: RetryPolicy,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            ops: vec![AugmentOp::Syn, AugmentOp::Ant, AugmentOp::Gen],
            sampling: SamplingRates::default(),
            max_synonyms: 3,
            max_antonyms: 1,
            max_generation_calls: 1,
            max_candidate_tokens: 16,
            seed: 0,
            max_inflight: 4,
            rate_limit: None,
            rate_burst: 4,
            max_failure_rate: 0.5,
            retry: RetryPolicy::default(),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |m: String| Err(AugmentError::Config(m));
        for op in [AugmentOp::Syn, AugmentOp::Ant, AugmentOp::Gen] {
            let r = self.sampling.get(op);
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("sampling rate for {op:?} must be in [0, 1], got {r}"));
            }
        }
        if self.max_inflight == 0 {
            return bad("max_inflight must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return bad(format!("max_failure_rate must be in [0, 1], got {}", self.max_failure_rate));
        }
        if let Some(r) = self.rate_limit {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("rate_limit must be positive, got {r}"));
            }
        }
        Ok(())
    }

    fn enabled(&self, op: AugmentOp) -> bool {
        self.ops.contains(&op)
    }

    /// Deterministic per-(seed, source, op) coin flip.
    pub fn sampled(&self, source_id: &str, op: AugmentOp) -> bool {
        let rate = self.sampling.get(op);
        if rate >= 1.0 {
            return true;
        }
        if rate <= 0.0 {
            return false;
        }
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update([op as u8]);
        h.update(source_id.as_bytes());
        let d = h.finalize();
        let x = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
        ((x >> 11) as f64 / (1u64 << 53) as f64) < rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpFailure {
    pub source_id: String,
    pub op: AugmentOp,
    pub error: AugmentError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentReport {
    pub samples: Vec<AugmentedSample>,
    pub failures: Vec<OpFailure>,
    /// Op invocations attempted (successful or not).
    pub attempted: usize,
}

/// Removes repeats of `(normalized query, source_id)` and samples that
/// merely restate their source query, keeping first occurrences.
pub fn dedup_samples(samples: Vec<AugmentedSample>, sources: &[LabeledPair]) -> Vec<AugmentedSample> {
    let source_keys: HashSet<(String, &str)> = sources
        .iter()
        .map(|s| (textseg::normalized_key(&s.query), s.id.as_str()))
        .collect();
    let mut seen = HashSet::new();
    samples
        .into_iter()
        .filter(|s| {
            let key = (textseg::normalized_key(&s.pair.query), s.source_id.clone());
            !source_keys.contains(&(key.0.clone(), key.1.as_str())) && seen.insert(key)
        })
        .collect()
}

type SourceResult = (Vec<AugmentedSample>, Vec<OpFailure>, usize);

fn augment_source(aug: &Augmenter<'_>, source: &LabeledPair, config: &AugmentConfig) -> SourceResult {
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    let mut attempted = 0;
    let mut run = |op: AugmentOp, r: Result<Vec<AugmentedSample>, AugmentError>| {
        attempted += 1;
        match r {
            Ok(mut v) => samples.append(&mut v),
            Err(error) => failures.push(OpFailure {
                source_id: source.id.clone(),
                op,
                error,
            }),
        }
    };
    if config.enabled(AugmentOp::Syn) && config.sampled(&source.id, AugmentOp::Syn) {
        run(AugmentOp::Syn, aug.rewrite_synonym(source));
    }
    let relevant = source.label.is_relevant();
    if relevant && config.enabled(AugmentOp::Ant) && config.sampled(&source.id, AugmentOp::Ant) {
        run(AugmentOp::Ant, aug.rewrite_antonym(source));
    }
    if relevant && config.enabled(AugmentOp::Gen) && config.sampled(&source.id, AugmentOp::Gen) {
        for call in 1..=config.max_generation_calls {
            run(AugmentOp::Gen, aug.generate_queries_nth(source, call));
        }
    }
    (samples, failures, attempted)
}

/// Stateful augmentation over one or more batches of sources. Failure
/// counts accumulate across batches so the abort threshold applies to
/// the whole run.
pub struct AugmentRun<'a> {
    llm: &'a dyn LlmProvider,
    config: &'a AugmentConfig,
    limiter: Option<TokenBucket>,
    pub failures: Vec<OpFailure>,
    pub attempted: usize,
}

impl<'a> AugmentRun<'a> {
    pub fn new(llm: &'a dyn LlmProvider, config: &'a AugmentConfig) -> Result<Self, AugmentError> {
        config.validate()?;
        Ok(AugmentRun {
            llm,
            config,
            limiter: config.rate_limit.map(|r| TokenBucket::new(r, config.rate_burst)),
            failures: Vec::new(),
            attempted: 0,
        })
    }

    /// Augments `batch` with up to `max_inflight` sources in flight. The
    /// result is sorted by (source position, provenance) and deduplicated,
    /// so it does not depend on scheduling. Source ids must be unique
    /// across batches.
    pub fn process(&mut self, batch: &[LabeledPair]) -> Vec<AugmentedSample> {
        let aug = Augmenter::with_config(self.llm, self.config, self.limiter.as_ref());
        let config = self.config;
        let next = AtomicUsize::new(0);
        let workers = config.max_inflight.min(batch.len()).max(1);

        let mut results: Vec<(usize, SourceResult)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    s.spawn(|| {
                        let mut local = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some(src) = batch.get(i) else { break };
                            local.push((i, augment_source(&aug, src, config)));
                        }
                        local
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("augmentation worker panicked"))
                .collect()
        });
        results.sort_by_key(|(i, _)| *i);

        let mut samples = Vec::new();
        for (_, (mut s, f, a)) in results {
            s.sort_by_key(|x| x.provenance);
            samples.append(&mut s);
            for failure in &f {
                log::warn!(
                    "augmentation of {} ({:?}) failed: {}",
                    failure.source_id,
                    failure.op,
                    failure.error
                );
            }
            self.failures.extend(f);
            self.attempted += a;
        }
        dedup_samples(samples, batch)
    }

    pub fn check_failure_rate(&self) -> Result<(), AugmentError> {
        let failed = self.failures.len();
        if self.attempted > 0 && failed as f64 > self.config.max_failure_rate * self.attempted as f64 {
            return Err(AugmentError::FailureRate {
                failed,
                attempted: self.attempted,
                threshold: self.config.max_failure_rate,
                provider_failures: self.failures.iter().filter(|f| f.error.is_provider()).count(),
            });
        }
        Ok(())
    }
}

/// Runs the enabled ops over the whole dataset; see [`AugmentRun`].
pub fn augment_dataset(
    dataset: &[LabeledPair],
    llm: &dyn LlmProvider,
    config: &AugmentConfig,
) -> Result<AugmentReport, AugmentError> {
    let mut run = AugmentRun::new(llm, config)?;
    let samples = run.process(dataset);
    run.check_failure_rate()?;
    Ok(AugmentReport {
        samples,
        failures: run.failures,
        attempted: run.attempted,
    })
}
