//! Deterministic stand-in for an LLM.
//!
//! Completions depend only on the seed and the prompt text:
//! - synonyms: one token swapped for an entry from a small lexicon, or a
//!   token-order permutation, or a modifier prefix as a last resort;
//! - antonyms: one token swapped for a lexicon antonym, otherwise negated
//!   with `not`;
//! - keywords: the three most frequent document tokens that are neither
//!   query tokens nor stopwords, most frequent first.

use std::collections::{HashMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::prompt::{Prompt, PromptKind};
use super::provider::LlmProvider;
use crate::error::ProviderError;
use crate::textseg::{self, is_cjk};

const SYNONYMS: &[(&str, &[&str])] = &[
    ("beef", &["cattle meat"]),
    ("hot", &["spicy"]),
    ("pot", &["pan"]),
    ("hotpot", &["steamboat"]),
    ("cheap", &["affordable", "inexpensive"]),
    ("good", &["great", "nice"]),
    ("best", &["top", "finest"]),
    ("restaurant", &["eatery", "diner"]),
    ("restaurants", &["eateries", "diners"]),
    ("cafe", &["coffee shop"]),
    ("coffee", &["espresso"]),
    ("park", &["garden"]),
    ("photo", &["picture"]),
    ("photos", &["pictures"]),
    ("shop", &["store"]),
    ("shops", &["stores"]),
    ("hotel", &["inn", "lodging"]),
    ("kids", &["children"]),
    ("bar", &["pub"]),
    ("view", &["scenery"]),
    ("beautiful", &["pretty", "lovely"]),
    ("big", &["large"]),
    ("small", &["little"]),
    ("mini", &["small"]),
    ("trip", &["journey"]),
    ("walk", &["stroll"]),
    ("night", &["evening"]),
    ("market", &["bazaar"]),
    ("museum", &["gallery"]),
    ("sakura", &["cherry blossom"]),
    ("flowers", &["blooms"]),
    ("delicious", &["tasty"]),
    ("noodles", &["ramen"]),
    ("spicy", &["fiery"]),
    ("quiet", &["calm"]),
    ("大", &["巨"]),
    ("小", &["微"]),
    ("美", &["靓"]),
    ("店", &["铺"]),
];

const ANTONYMS: &[(&str, &str)] = &[
    ("hot", "cold"),
    ("cheap", "expensive"),
    ("good", "bad"),
    ("best", "worst"),
    ("big", "small"),
    ("small", "big"),
    ("mini", "giant"),
    ("new", "old"),
    ("old", "new"),
    ("quiet", "noisy"),
    ("open", "closed"),
    ("indoor", "outdoor"),
    ("outdoor", "indoor"),
    ("day", "night"),
    ("night", "day"),
    ("spicy", "mild"),
    ("sweet", "bitter"),
    ("near", "far"),
    ("beautiful", "ugly"),
    ("delicious", "bland"),
    ("大", "小"),
    ("小", "大"),
    ("热", "冷"),
    ("好", "坏"),
];

const MODIFIERS: &[&str] = &["popular", "recommended", "nearby", "local"];

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "had", "has", "have",
    "her", "his", "i", "in", "is", "it", "its", "me", "my", "of", "on", "or", "our", "s", "she",
    "so", "that", "the", "their", "them", "there", "they", "this", "to", "very", "was", "we",
    "were", "with", "you", "your", "only", "also", "just", "t", "all", "can", "will", "not",
    "的", "了", "是", "在", "和", "也", "很", "我", "有", "就", "都", "这", "那",
];

#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
}

pub fn mock_provider(seed: u64) -> MockProvider {
    MockProvider { seed }
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        MockProvider { seed }
    }

    fn rng(&self, prompt: &Prompt) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(prompt.text().as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }
}

fn lookup_synonyms(tok: &str) -> Option<&'static [&'static str]> {
    SYNONYMS.iter().find(|(k, _)| *k == tok).map(|(_, v)| *v)
}

fn lookup_antonym(tok: &str) -> Option<&'static str> {
    ANTONYMS.iter().find(|(k, _)| *k == tok).map(|(_, v)| *v)
}

/// Joins tokens, without spaces between adjacent CJK tokens.
fn join_tokens(tokens: &[String]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        let cjk = |s: &str| s.chars().all(is_cjk);
        if i > 0 && !(cjk(&tokens[i - 1]) && cjk(t)) {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

fn synonyms(query: &str, rng: &mut ChaCha8Rng) -> Vec<String> {
    let toks: Vec<String> = textseg::tokenize(query).into_iter().map(|t| t.normalized).collect();
    if toks.is_empty() {
        return Vec::new();
    }
    let original = toks.join(" ");
    let mut out: Vec<String> = Vec::new();
    let start = rng.random_range(0..toks.len());
    for k in 0..toks.len() {
        let i = (start + k) % toks.len();
        if let Some(alts) = lookup_synonyms(&toks[i]) {
            let mut v = toks.clone();
            v[i] = alts.choose(rng).expect("non-empty lexicon entry").to_string();
            out.push(join_tokens(&v));
        }
    }
    if toks.len() > 1 {
        let mut v = toks.clone();
        v.rotate_left(1 + rng.random_range(0..toks.len() - 1));
        out.push(join_tokens(&v));
    }
    if out.is_empty() {
        let m = MODIFIERS.choose(rng).expect("non-empty modifiers");
        out.push(format!("{m} {}", join_tokens(&toks)));
    }
    let mut seen = HashSet::new();
    out.retain(|c| textseg::normalized_key(c) != original && seen.insert(c.clone()));
    out
}

fn antonym(query: &str, rng: &mut ChaCha8Rng) -> String {
    let toks: Vec<String> = textseg::tokenize(query).into_iter().map(|t| t.normalized).collect();
    if toks.is_empty() {
        return String::new();
    }
    let start = rng.random_range(0..toks.len());
    let mut v = toks.clone();
    for k in 0..toks.len() {
        let i = (start + k) % toks.len();
        if let Some(a) = lookup_antonym(&toks[i]) {
            v[i] = a.to_string();
            return join_tokens(&v);
        }
    }
    v[start] = format!("not {}", toks[start]);
    join_tokens(&v)
}

fn is_content(tok: &str) -> bool {
    if STOPWORDS.contains(&tok) || tok.chars().all(|c| c.is_numeric()) {
        return false;
    }
    tok.chars().count() > 1 || tok.chars().all(is_cjk)
}

/// The `n` most frequent content tokens of `document` not in `query`,
/// ties broken by first occurrence.
pub fn top_keywords(document: &str, query: &str, n: usize) -> Vec<String> {
    let excluded: HashSet<String> =
        textseg::tokenize(query).into_iter().map(|t| t.normalized).collect();
    let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
    for (pos, t) in textseg::tokenize(document).into_iter().enumerate() {
        if excluded.contains(&t.normalized) || !is_content(&t.normalized) {
            continue;
        }
        counts.entry(t.normalized).or_insert((0, pos)).0 += 1;
    }
    let mut ranked: Vec<(String, (usize, usize))> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    ranked.into_iter().take(n).map(|(t, _)| t).collect()
}

impl LlmProvider for MockProvider {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError> {
        let mut rng = self.rng(prompt);
        Ok(match prompt.kind {
            PromptKind::Synonym => synonyms(&prompt.query, &mut rng).join("\n"),
            PromptKind::Antonym => antonym(&prompt.query, &mut rng),
            PromptKind::Keywords => top_keywords(&prompt.document, &prompt.query, 3).join(">"),
        })
    }

    fn name(&self) -> &str {
        "mock"
    }

    fn model(&self) -> &str {
        "mock-lexicon-v1"
    }
}
