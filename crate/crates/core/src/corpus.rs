//! Relevance data model and the line-delimited JSON dataset format.
//!
//! One JSON object per line: `id` (optional string), `query`, `document`,
//! `label` (`strong` | `weak` | `irrelevant`, any case on read). Any other
//! fields are carried through untouched in [`LabeledPair::extra`].

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CorpusError;

/// Three-grade topic relevance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelevanceLabel {
    Strong,
    Weak,
    Irrelevant,
}

impl RelevanceLabel {
    pub const ALL: [RelevanceLabel; 3] = [
        RelevanceLabel::Strong,
        RelevanceLabel::Weak,
        RelevanceLabel::Irrelevant,
    ];

    /// Reference relevance score used by the multiclass AUC.
    pub fn score(self) -> f64 {
        match self {
            RelevanceLabel::Strong => 1.0,
            RelevanceLabel::Weak => 0.7,
            RelevanceLabel::Irrelevant => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelevanceLabel::Strong => "strong",
            RelevanceLabel::Weak => "weak",
            RelevanceLabel::Irrelevant => "irrelevant",
        }
    }

    /// Row/column position in confusion matrices and stats.
    pub fn ordinal(self) -> usize {
        match self {
            RelevanceLabel::Strong => 0,
            RelevanceLabel::Weak => 1,
            RelevanceLabel::Irrelevant => 2,
        }
    }

    pub fn is_relevant(self) -> bool {
        self != RelevanceLabel::Irrelevant
    }
}

impl fmt::Display for RelevanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseLabelError(pub String);

impl fmt::Display for ParseLabelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid label {:?}", self.0)
    }
}

impl std::error::Error for ParseLabelError {}

impl FromStr for RelevanceLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "strong" => Ok(RelevanceLabel::Strong),
            "weak" => Ok(RelevanceLabel::Weak),
            "irrelevant" => Ok(RelevanceLabel::Irrelevant),
            _ => Err(ParseLabelError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub id: String,
    pub query: String,
    pub document: String,
    pub label: RelevanceLabel,
    /// Fields not part of the core schema, in file order.
    pub extra: Map<String, Value>,
}

impl LabeledPair {
    pub fn new(
        id: impl Into<String>,
        query: impl Into<String>,
        document: impl Into<String>,
        label: RelevanceLabel,
    ) -> Self {
        LabeledPair {
            id: id.into(),
            query: query.into(),
            document: document.into(),
            label,
            extra: Map::new(),
        }
    }

    pub fn to_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("id".into(), Value::String(self.id.clone()));
        m.insert("query".into(), Value::String(self.query.clone()));
        m.insert("document".into(), Value::String(self.document.clone()));
        m.insert("label".into(), Value::String(self.label.as_str().into()));
        for (k, v) in &self.extra {
            if !CORE_FIELDS.contains(&k.as_str()) {
                m.insert(k.clone(), v.clone());
            }
        }
        m
    }

    pub fn to_json_line(&self) -> String {
        Value::Object(self.to_json()).to_string()
    }
}

const CORE_FIELDS: [&str; 4] = ["id", "query", "document", "label"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub strong: usize,
    pub weak: usize,
    pub irrelevant: usize,
    pub total: usize,
}

impl DatasetStats {
    pub fn add(&mut self, label: RelevanceLabel) {
        match label {
            RelevanceLabel::Strong => self.strong += 1,
            RelevanceLabel::Weak => self.weak += 1,
            RelevanceLabel::Irrelevant => self.irrelevant += 1,
        }
        self.total += 1;
    }

    pub fn count(&self, label: RelevanceLabel) -> usize {
        match label {
            RelevanceLabel::Strong => self.strong,
            RelevanceLabel::Weak => self.weak,
            RelevanceLabel::Irrelevant => self.irrelevant,
        }
    }
}

pub fn stats<'a>(dataset: impl IntoIterator<Item = &'a LabeledPair>) -> DatasetStats {
    let mut s = DatasetStats::default();
    for p in dataset {
        s.add(p.label);
    }
    s
}

fn required_text(obj: &Map<String, Value>, field: &str, line: usize) -> Result<String, CorpusError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(CorpusError::line(line, format!("missing field {field}"))),
        Some(Value::String(s)) if s.trim().is_empty() => {
            Err(CorpusError::line(line, format!("empty field {field}")))
        }
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(CorpusError::line(line, format!("field {field} must be a string"))),
    }
}

/// Parse one record. `line` is 1-based and used for error messages and
/// the synthesized `line-<n>` id.
pub fn parse_record(text: &str, line: usize) -> Result<LabeledPair, CorpusError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CorpusError::line(line, format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(CorpusError::line(line, "record is not a JSON object"));
    };
    let id = match obj.get("id") {
        None | Some(Value::Null) => format!("line-{line}"),
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::String(_)) => return Err(CorpusError::line(line, "empty field id")),
        Some(_) => return Err(CorpusError::line(line, "field id must be a string")),
    };
    let query = required_text(&obj, "query", line)?;
    let document = required_text(&obj, "document", line)?;
    let label = required_text(&obj, "label", line)?
        .parse::<RelevanceLabel>()
        .map_err(|e| CorpusError::line(line, e.to_string()))?;
    for f in CORE_FIELDS {
        obj.shift_remove(f);
    }
    Ok(LabeledPair {
        id,
        query,
        document,
        label,
        extra: obj,
    })
}

/// Reads raw lines as bytes so invalid UTF-8 is reported with its line
/// number instead of being repaired. Blank lines are skipped.
pub struct Lines<R> {
    inner: R,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Lines<R> {
    pub fn new(inner: R) -> Self {
        Lines {
            inner,
            line: 0,
            buf: Vec::new(),
        }
    }
}

impl<R: BufRead> Iterator for Lines<R> {
    type Item = Result<(usize, String), CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            while matches!(self.buf.last(), Some(b'\n' | b'\r')) {
                self.buf.pop();
            }
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t,
                Err(e) => {
                    return Some(Err(CorpusError::line(
                        self.line,
                        format!("invalid UTF-8 at byte {}", e.valid_up_to()),
                    )))
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(Ok((self.line, text.to_string())));
        }
    }
}

/// Streaming dataset reader enforcing id uniqueness.
pub struct DatasetReader<R> {
    lines: Lines<R>,
    seen: HashSet<String>,
}

impl<R: BufRead> DatasetReader<R> {
    pub fn new(inner: R) -> Self {
        DatasetReader {
            lines: Lines::new(inner),
            seen: HashSet::new(),
        }
    }
}

impl DatasetReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Ok(DatasetReader::new(BufReader::new(File::open(path)?)))
    }
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = Result<LabeledPair, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, text) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        Some(parse_record(&text, line).and_then(|pair| {
            if self.seen.insert(pair.id.clone()) {
                Ok(pair)
            } else {
                Err(CorpusError::line(line, format!("duplicate id {:?}", pair.id)))
            }
        }))
    }
}

pub fn read_dataset(reader: impl BufRead) -> Result<Vec<LabeledPair>, CorpusError> {
    DatasetReader::new(reader).collect()
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledPair>, CorpusError> {
    DatasetReader::open(path)?.collect()
}

pub fn write_records<'a>(
    mut w: impl Write,
    records: impl IntoIterator<Item = &'a LabeledPair>,
) -> io::Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_json_line())?;
    }
    w.flush()
}

pub fn write_dataset(path: impl AsRef<Path>, records: &[LabeledPair]) -> io::Result<()> {
    write_records(BufWriter::new(File::create(path)?), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_scores_are_fixed_and_decreasing() {
        assert_eq!(RelevanceLabel::Strong.score(), 1.0);
        assert_eq!(RelevanceLabel::Weak.score(), 0.7);
        assert_eq!(RelevanceLabel::Irrelevant.score(), 0.0);
        assert!(RelevanceLabel::ALL.windows(2).all(|w| w[0].score() > w[1].score()));
    }

    #[test]
    fn labels_parse_case_insensitively() {
        assert_eq!("STRONG".parse::<RelevanceLabel>(), Ok(RelevanceLabel::Strong));
        assert_eq!("Weak".parse::<RelevanceLabel>(), Ok(RelevanceLabel::Weak));
        assert!("relevant".parse::<RelevanceLabel>().is_err());
    }

    #[test]
    fn reads_three_records_and_synthesizes_ids() {
        let data = concat!(
            r#"{"id":"a","query":"q1","document":"d1","label":"strong"}"#, "\n",
            r#"{"query":"q2","document":"d2","label":"Weak","src":"x"}"#, "\n",
            "\n",
            r#"{"query":"q3","document":"d3","label":"IRRELEVANT"}"#, "\n",
        );
        let recs = read_dataset(data.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].id, "a");
        assert_eq!(recs[1].id, "line-2");
        assert_eq!(recs[2].id, "line-4");
        assert_eq!(recs[1].extra.get("src"), Some(&Value::String("x".into())));
        assert_eq!(recs[2].label, RelevanceLabel::Irrelevant);
    }

    #[test]
    fn missing_label_names_line_and_field() {
        let data = concat!(
            r#"{"query":"q1","document":"d1","label":"strong"}"#, "\n",
            r#"{"query":"q2","document":"d2"}"#, "\n",
        );
        let err = read_dataset(data.as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "line 2: missing field label");
    }

    #[test]
    fn duplicate_id_is_named() {
        let data = concat!(
            r#"{"id":"dup","query":"q","document":"d","label":"weak"}"#, "\n",
            r#"{"id":"dup","query":"q","document":"d","label":"weak"}"#, "\n",
        );
        let err = read_dataset(data.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("\"dup\""), "{err}");
    }

    #[test]
    fn rejects_blank_query_and_bad_utf8() {
        let err = read_dataset(r#"{"query":"  ","document":"d","label":"weak"}"#.as_bytes());
        assert_eq!(err.unwrap_err().to_string(), "line 1: empty field query");
        let mut bytes = br#"{"query":"q","document":""#.to_vec();
        bytes.extend_from_slice(&[0xff, 0xfe]);
        bytes.extend_from_slice(br#"","label":"weak"}"#);
        let err = read_dataset(&bytes[..]).unwrap_err().to_string();
        assert!(err.starts_with("line 1: invalid UTF-8"), "{err}");
    }

    #[test]
    fn write_puts_core_fields_first_and_lowercases_label() {
        let mut p = LabeledPair::new("x", "q", "d", RelevanceLabel::Weak);
        p.extra.insert("zeta".into(), Value::from(1));
        assert_eq!(
            p.to_json_line(),
            r#"{"id":"x","query":"q","document":"d","label":"weak","zeta":1}"#
        );
    }

    #[test]
    fn stats_counts() {
        assert_eq!(stats(&[]), DatasetStats::default());
        let ds: Vec<_> = [RelevanceLabel::Strong, RelevanceLabel::Strong, RelevanceLabel::Weak]
            .into_iter()
            .enumerate()
            .map(|(i, l)| LabeledPair::new(i.to_string(), "q", "d", l))
            .collect();
        assert_eq!(
            stats(&ds),
            DatasetStats { strong: 2, weak: 1, irrelevant: 0, total: 3 }
        );
        assert_eq!(
            serde_json::to_string(&stats(&ds)).unwrap(),
            r#"{"strong":2,"weak":1,"irrelevant":0,"total":3}"#
        );
    }
}
