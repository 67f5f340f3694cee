//! Query-focused, lead-style and mix-structured extractive summaries.
//!
//! The query-focused summary picks one seed sentence per query token (the
//! earliest sentence containing a token not yet covered), then grows the
//! selection around the seeds one neighbor at a time: for each seed in
//! selection order, the nearest unselected sentence before its selected
//! block, then the nearest one after. Growth stops as soon as the next
//! candidate would push the summary past the query-focused budget. Seeds
//! are never dropped before expansion; if they alone exceed the budget the
//! output is tail-truncated instead.
//!
//! The document summary takes the first three sentences of every paragraph.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::SummaryError;
use crate::textseg::{self, SegmentedDocument};

/// Sentences taken from the start of each paragraph for the document summary.
pub const LEAD_SENTENCES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryBudget {
    pub query_focused_max: usize,
    pub doc_summary_max: usize,
    pub total_max: usize,
    pub separator: String,
}

impl Default for SummaryBudget {
    fn default() -> Self {
        SummaryBudget {
            query_focused_max: 128,
            doc_summary_max: 64,
            total_max: 192,
            separator: "[SEP]".to_string(),
        }
    }
}

impl SummaryBudget {
    pub fn new(query_focused_max: usize, doc_summary_max: usize) -> Self {
        SummaryBudget {
            query_focused_max,
            doc_summary_max,
            total_max: query_focused_max + doc_summary_max,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SummaryError> {
        if self.query_focused_max == 0 || self.doc_summary_max == 0 || self.total_max == 0 {
            return Err(SummaryError::InvalidBudget("budgets must be positive".into()));
        }
        if self.query_focused_max + self.doc_summary_max > self.total_max {
            return Err(SummaryError::InvalidBudget(format!(
                "query_focused_max + doc_summary_max ({} + {}) exceeds total_max {}",
                self.query_focused_max, self.doc_summary_max, self.total_max
            )));
        }
        if self.separator.trim().is_empty() {
            return Err(SummaryError::InvalidBudget("separator must not be blank".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixSummary {
    pub query_focused: String,
    pub doc_summary: String,
    pub combined: String,
    /// Sentences contributing to `query_focused`, in document order.
    pub selected_sentence_indices: Vec<usize>,
}

/// Joins sentences in index order. Adjacent sentences keep their original
/// single-line gap; everything else is joined by one space.
fn join_sentences(doc: &SegmentedDocument, indices: &[usize]) -> (String, Vec<usize>) {
    let mut out = String::new();
    let mut starts = Vec::with_capacity(indices.len());
    for (k, &i) in indices.iter().enumerate() {
        if k > 0 {
            let prev = indices[k - 1];
            match doc.gap_after(prev) {
                Some(gap) if prev + 1 == i && !gap.contains('\n') => out.push_str(gap),
                _ => out.push(' '),
            }
        }
        starts.push(out.len());
        out.push_str(&doc.sentences[i].text);
    }
    (out, starts)
}

/// Joins `indices` and truncates to `max_tokens`, dropping indices whose
/// sentence was cut away entirely.
fn render(doc: &SegmentedDocument, indices: &[usize], max_tokens: usize) -> (String, Vec<usize>) {
    let (joined, starts) = join_sentences(doc, indices);
    let kept = textseg::truncate_tokens(&joined, max_tokens);
    if kept.len() == joined.len() {
        return (joined, indices.to_vec());
    }
    let kept_indices = indices
        .iter()
        .zip(&starts)
        .filter(|(_, &s)| s < kept.len())
        .map(|(&i, _)| i)
        .collect();
    (kept.to_string(), kept_indices)
}

/// Distinct normalized query tokens in query order.
pub fn query_tokens(query: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    textseg::tokenize(query)
        .into_iter()
        .map(|t| t.normalized)
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Seed sentences in selection order.
fn select_seeds(qtokens: &[String], doc: &SegmentedDocument) -> Vec<usize> {
    let sets: Vec<HashSet<&str>> = doc.sentences.iter().map(|s| s.token_set()).collect();
    let mut seeds: Vec<usize> = Vec::new();
    for tok in qtokens {
        if seeds.iter().any(|&s| sets[s].contains(tok.as_str())) {
            continue;
        }
        if let Some(i) = sets.iter().position(|set| set.contains(tok.as_str())) {
            seeds.push(i);
        }
    }
    seeds
}

fn expand(seeds: &[usize], doc: &SegmentedDocument, max_tokens: usize) -> Vec<bool> {
    let n = doc.sentences.len();
    let mut selected = vec![false; n];
    let mut used = 0;
    for &s in seeds {
        selected[s] = true;
        used += doc.sentences[s].token_count();
    }
    loop {
        let mut grew = false;
        for &seed in seeds {
            // nearest unselected sentence before / after the seed's block
            let mut lo = seed;
            while lo > 0 && selected[lo - 1] {
                lo -= 1;
            }
            let mut hi = seed;
            while hi + 1 < n && selected[hi + 1] {
                hi += 1;
            }
            let prev = lo.checked_sub(1);
            let next = (hi + 1 < n).then_some(hi + 1);
            for cand in [prev, next].into_iter().flatten() {
                let cost = doc.sentences[cand].token_count();
                if used + cost > max_tokens {
                    return selected;
                }
                selected[cand] = true;
                used += cost;
                grew = true;
            }
        }
        if !grew {
            return selected;
        }
    }
}

/// Query-focused summary and the indices of the sentences it draws from.
pub fn query_focused_summary(
    query: &str,
    doc: &SegmentedDocument,
    budget: &SummaryBudget,
) -> Result<(String, Vec<usize>), SummaryError> {
    if query.trim().is_empty() {
        return Err(SummaryError::EmptyQuery);
    }
    let seeds = select_seeds(&query_tokens(query), doc);
    if seeds.is_empty() {
        return Ok((String::new(), Vec::new()));
    }
    let selected = expand(&seeds, doc, budget.query_focused_max);
    let indices: Vec<usize> = (0..selected.len()).filter(|&i| selected[i]).collect();
    Ok(render(doc, &indices, budget.query_focused_max))
}

/// Leading sentences of each paragraph, truncated to the document budget.
pub fn document_summary(doc: &SegmentedDocument, budget: &SummaryBudget) -> String {
    let indices: Vec<usize> = doc
        .paragraphs
        .iter()
        .flat_map(|p| p.iter().take(LEAD_SENTENCES).copied())
        .collect();
    render(doc, &indices, budget.doc_summary_max).0
}

/// `query_focused SEP doc_summary`, single-space joined; an empty part is
/// omitted together with its space, the separator is always present.
pub fn combine(query_focused: &str, separator: &str, doc_summary: &str) -> String {
    [query_focused, separator, doc_summary]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn mix_summary_segmented(
    query: &str,
    doc: &SegmentedDocument,
    budget: &SummaryBudget,
) -> Result<MixSummary, SummaryError> {
    let (query_focused, selected_sentence_indices) = query_focused_summary(query, doc, budget)?;
    let doc_summary = document_summary(doc, budget);
    Ok(MixSummary {
        combined: combine(&query_focused, &budget.separator, &doc_summary),
        query_focused,
        doc_summary,
        selected_sentence_indices,
    })
}

pub fn mix_summary(
    query: &str,
    doc_text: &str,
    budget: &SummaryBudget,
) -> Result<MixSummary, SummaryError> {
    if query.trim().is_empty() {
        return Err(SummaryError::EmptyQuery);
    }
    let doc = textseg::segment(doc_text)?;
    mix_summary_segmented(query, &doc, budget)
}
