#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relevkit::{LabeledPair, RelevanceLabel};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relevkit"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("RELEVKIT_LLM_KEY").output().expect("spawn relevkit")
}

pub fn write_jsonl(path: &Path, records: &[LabeledPair]) {
    relevkit::corpus::write_dataset(path, records).unwrap();
}

const FOOD: &[&str] = &[
    "hot pot", "beef noodles", "cheap cafe", "night market", "spicy hotpot", "quiet bar",
    "big museum", "sakura park", "best restaurant", "good coffee", "small hotel", "delicious noodles",
];
const FILL: &[&str] = &[
    "the", "staff", "were", "friendly", "and", "prices", "fair", "we", "came", "back", "broth",
    "rich", "queue", "long", "view", "river", "seats", "near", "window", "menu", "photos",
    "dessert", "late", "weekend",
];

/// A review-like document mentioning `topic` in `hits` of `n` sentences.
fn review(rng: &mut ChaCha8Rng, topic: &str, n: usize, hits: usize) -> String {
    (0..n)
        .map(|i| {
            let mut words: Vec<&str> = (0..rng.random_range(4..9)).map(|_| FILL[rng.random_range(0..FILL.len())]).collect();
            if i >= n - hits {
                let at = rng.random_range(0..=words.len());
                words.insert(at, topic);
            }
            let mut s = words.join(" ");
            s[..1].make_ascii_uppercase();
            s.push('.');
            s
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Sources with the given label counts, in a fixed interleaved order.
pub fn skewed_sources(seed: u64, strong: usize, weak: usize, irrelevant: usize) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<RelevanceLabel> = std::iter::repeat_n(RelevanceLabel::Strong, strong)
        .chain(std::iter::repeat_n(RelevanceLabel::Weak, weak))
        .chain(std::iter::repeat_n(RelevanceLabel::Irrelevant, irrelevant))
        .collect();
    for i in (1..labels.len()).rev() {
        labels.swap(i, rng.random_range(0..=i));
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let query = FOOD[rng.random_range(0..FOOD.len())];
            let n = rng.random_range(3..8);
            let doc = match label {
                RelevanceLabel::Strong => review(&mut rng, query, n, n),
                RelevanceLabel::Weak => review(&mut rng, query, n, 1),
                RelevanceLabel::Irrelevant => {
                    let other = FOOD[rng.random_range(0..FOOD.len())];
                    review(&mut rng, if other == query { "garden" } else { other }, n, 2)
                }
            };
            LabeledPair::new(format!("src-{i}"), query, doc, label)
        })
        .collect()
}

/// Random sources with uniformly drawn labels.
pub fn random_sources(seed: u64, n: usize) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = skewed_sources(seed, n, 0, 0);
    for p in &mut out {
        p.label = RelevanceLabel::ALL[rng.random_range(0..3)];
    }
    out
}
