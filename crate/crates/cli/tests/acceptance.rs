//! Acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fail.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relevkit::augment::{augment_dataset, mock_provider, AugmentConfig, SamplingRates};
use relevkit::corpus::stats;
use relevkit::metrics::{delta_gsb, multiclass_auc};
use relevkit::scorer::{score, score_query_focused_only};
use relevkit::summarizer::{mix_summary, LEAD_SENTENCES};
use relevkit::textseg::{segment, token_count, SegmentedDocument};
use relevkit::{GsbCounts, LabeledPair, RelevanceLabel, ScoredPrediction, SummaryBudget};
use serde_json::Value;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

/// Subcommand name, two argument lists to compare, and the prefix of
/// the output files they write (if any).
type Job<'a> = (&'a str, Vec<Vec<String>>, Option<&'a str>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

/// Brute-force ordered-pair AUC, independent of the library.
fn oracle_auc(refs: &[f64], preds: &[f64]) -> f64 {
    let (mut num, mut den) = (0u64, 0u64);
    for j in 0..refs.len() {
        for k in 0..refs.len() {
            if refs[j] > refs[k] {
                den += 1;
                if preds[j] > preds[k] {
                    num += 1;
                }
            }
        }
    }
    num as f64 / den as f64
}

fn auc_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for inst in 0..200 {
        let n = rng.random_range(2..=500);
        let mut labels: Vec<RelevanceLabel> = (0..n).map(|_| RelevanceLabel::ALL[rng.random_range(0..3)]).collect();
        labels[0] = RelevanceLabel::Strong;
        labels[1] = RelevanceLabel::Irrelevant;
        // coarse grid for a share of the scores so ties are frequent
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.4) {
                    f64::from(rng.random_range(0..6u32)) / 5.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let preds: Vec<ScoredPrediction> = labels.iter().zip(&scores).map(|(&l, &s)| ScoredPrediction::new(l, s)).collect();
        let refs: Vec<f64> = labels.iter().map(|l| l.score()).collect();
        let fast = multiclass_auc(&preds).map_err(|e| format!("instance {inst}: {e}"))?;
        let diff = (fast - oracle_auc(&refs, &scores)).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-12, || format!("instance {inst} (n={n}) differs by {diff:e}"))?;
    }
    let t = start.elapsed();
    within(t, Duration::from_secs(10))?;
    Ok(format!("200 instances, max |diff| {worst:e}, {t:.2?}"))
}

fn auc_fidelity_cases() -> Outcome {
    use RelevanceLabel::*;
    let case = |p: [f64; 3]| {
        let v: Vec<_> = [Strong, Weak, Irrelevant].into_iter().zip(p).map(|(l, s)| ScoredPrediction::new(l, s)).collect();
        multiclass_auc(&v).map_err(|e| e.to_string())
    };
    let a = case([0.9, 0.5, 0.1])?;
    let b = case([0.9, 0.95, 0.1])?;
    let c = case([0.4, 0.4, 0.4])?;
    ensure(a == 1.0, || format!("ordered case gave {a}"))?;
    ensure(b == 2.0 / 3.0, || format!("one-swap case gave {b}"))?;
    ensure(c == 0.0, || format!("all-ties case gave {c}"))?;
    Ok("1.0, 2/3, 0.0 exact".into())
}

const WORDS: &[&str] = &[
    "sakura", "park", "tower", "photo", "lane", "shop", "bloom", "spring", "tea", "river", "night",
    "café", "x9", "公园", "樱花", "美", "店",
];
const ENDS: &[&str] = &[".", "!", "?", "。", "…", ".”", "！", "；"];

fn random_doc(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    for p in 0..rng.random_range(1..=5) {
        if p > 0 {
            out.push_str("\n\n");
        }
        for s in 0..rng.random_range(1..=7) {
            if s > 0 {
                out.push_str(if rng.random_bool(0.1) { "\n" } else { " " });
            }
            let words: Vec<&str> = (0..rng.random_range(1..=12)).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            out.push_str(&words.join(" "));
            out.push_str(ENDS[rng.random_range(0..ENDS.len())]);
        }
    }
    out
}

/// `summary` must be the listed sentences in order, whitespace-separated,
/// with only the final one possibly cut short.
fn extractive(summary: &str, doc: &SegmentedDocument, indices: &[usize]) -> Result<(), String> {
    let mut rest = summary;
    for &i in indices {
        if rest.is_empty() {
            break;
        }
        let text = doc.sentences[i].text.as_str();
        match rest.strip_prefix(text) {
            Some(r) => rest = r.trim_start(),
            None if text.starts_with(rest) => rest = "",
            None => return Err(format!("{rest:?} does not continue with sentence {i} {text:?}")),
        }
    }
    ensure(rest.is_empty(), || format!("non-extractive tail {rest:?}"))
}

fn budget_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for t in 0..1000 {
        let doc_text = random_doc(&mut rng);
        let query: Vec<&str> = (0..rng.random_range(1..=4)).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
        let (qf, dm) = (rng.random_range(1..=60), rng.random_range(1..=60));
        let mix = mix_summary(&query.join(" "), &doc_text, &SummaryBudget::new(qf, dm)).map_err(|e| e.to_string())?;
        let doc = segment(&doc_text).map_err(|e| e.to_string())?;
        let (nq, nd) = (token_count(&mix.query_focused), token_count(&mix.doc_summary));
        ensure(nq <= qf && nd <= dm, || format!("triple {t}: {nq}/{qf} {nd}/{dm}"))?;
        extractive(&mix.query_focused, &doc, &mix.selected_sentence_indices).map_err(|e| format!("triple {t}: {e}"))?;
        let lead: Vec<usize> = doc.paragraphs.iter().flat_map(|p| p.iter().take(LEAD_SENTENCES).copied()).collect();
        extractive(&mix.doc_summary, &doc, &lead).map_err(|e| format!("triple {t}: {e}"))?;
    }
    let t = start.elapsed();
    within(t, Duration::from_secs(30))?;
    Ok(format!("1000 triples, {t:.2?}"))
}

const ON_TOPIC: &str = "Early spring is when the sakura along the canal open. Locals picnic under the sakura on weekends. The sakura petals drift onto the water by evening. Photographers line the bridge to frame the sakura against the old mill.";
const ONE_MENTION: &str = "The old lanes of the east district are full of small workshops and noodle stalls. Most visitors come for the street food and the secondhand bookshops. Buses run every ten minutes from the central station. In April the sakura by the east gate are worth a short detour.";

fn qf_only_vs_mix() -> Outcome {
    let b = SummaryBudget::default();
    let mut got = Vec::new();
    for doc in [ON_TOPIC, ONE_MENTION] {
        let mix = mix_summary("sakura", doc, &b).map_err(|e| e.to_string())?;
        got.push((score_query_focused_only("sakura", &mix.query_focused).0, score("sakura", &mix).0));
    }
    use RelevanceLabel::*;
    let want = vec![(Strong, Strong), (Strong, Weak)];
    ensure(got == want, || format!("(qf-only, mix) per doc: {got:?}, expected {want:?}"))?;
    Ok("qf-only Strong/Strong, mix Strong/Weak".into())
}

fn experiment_ordering() -> Outcome {
    let start = Instant::now();
    let run = || {
        common::bin()
            .args(["experiment", "--n-docs", "300", "--seed", "7"])
            .env("RAYON_NUM_THREADS", "1")
            .output()
            .map_err(|e| e.to_string())
    };
    let a = run()?;
    let t = start.elapsed();
    ensure(a.status.success(), || String::from_utf8_lossy(&a.stderr).into_owned())?;
    let b = run()?;
    ensure(a.stdout == b.stdout, || "reports differ between runs".into())?;
    let r: Value = serde_json::from_slice(&a.stdout).map_err(|e| e.to_string())?;
    let (m, q) = (r["auc_mix"].as_f64().unwrap_or(f64::NAN), r["auc_qf_only"].as_f64().unwrap_or(f64::NAN));
    ensure(m - q >= 0.05, || format!("auc_mix {m} - auc_qf_only {q} < 0.05"))?;
    within(t, Duration::from_secs(60))?;
    Ok(format!("auc_mix {m:.4}, auc_qf_only {q:.4}, gain {:.4}, {t:.2?}", m - q))
}

fn augmentation_labels() -> Outcome {
    let sources = common::random_sources(17, 500);
    let by_id: HashMap<&str, &LabeledPair> = sources.iter().map(|s| (s.id.as_str(), s)).collect();
    let config = AugmentConfig {
        sampling: SamplingRates::all(1.0),
        ..AugmentConfig::default()
    };
    let report = augment_dataset(&sources, &mock_provider(17), &config).map_err(|e| e.to_string())?;
    let mut per_kind: HashMap<String, usize> = HashMap::new();
    let mut violations = Vec::new();
    for s in &report.samples {
        let rec = s.to_record();
        let prov = rec.extra["provenance"].as_str().unwrap_or("").to_string();
        let src = by_id[rec.extra["source_id"].as_str().unwrap_or("")];
        let want = match prov.as_str() {
            "synonym_rewrite" => Some(src.label),
            "antonym_rewrite" => Some(RelevanceLabel::Irrelevant),
            "keyword_generation_rank1" => Some(RelevanceLabel::Strong),
            "keyword_generation_rank3" => Some(RelevanceLabel::Weak),
            _ => None,
        };
        if want != Some(rec.label) || rec.document != src.document {
            violations.push(format!("{} ({prov}) labeled {}", rec.id, rec.label));
        }
        *per_kind.entry(prov).or_default() += 1;
    }
    ensure(violations.is_empty(), || format!("{} violations, e.g. {}", violations.len(), violations[0]))?;
    for k in ["synonym_rewrite", "antonym_rewrite", "keyword_generation_rank1", "keyword_generation_rank3"] {
        ensure(per_kind.get(k).copied().unwrap_or(0) > 0, || format!("no {k} samples produced"))?;
    }
    let mut kinds: Vec<_> = per_kind.into_iter().collect();
    kinds.sort();
    Ok(format!("{} samples, 0 violations {kinds:?}", report.samples.len()))
}

fn rebalancing() -> Outcome {
    let sources = common::skewed_sources(11, 360, 70, 70);
    let before = stats(&sources);
    let report = augment_dataset(&sources, &mock_provider(11), &AugmentConfig::default()).map_err(|e| e.to_string())?;
    let mut union = sources.clone();
    union.extend(report.samples.iter().map(|s| s.to_record()));
    let after = stats(&union);
    let factor = after.total as f64 / before.total as f64;
    ensure(after.weak > before.weak, || format!("weak {} -> {}", before.weak, after.weak))?;
    ensure(after.irrelevant > before.irrelevant, || format!("irrelevant {} -> {}", before.irrelevant, after.irrelevant))?;
    ensure((2.0..=4.0).contains(&factor), || format!("growth factor {factor:.3}"))?;
    Ok(format!(
        "S/W/I {}/{}/{} -> {}/{}/{}, factor {factor:.3}",
        before.strong, before.weak, before.irrelevant, after.strong, after.weak, after.irrelevant
    ))
}

fn gsb_spot_checks() -> Outcome {
    let d = |g, s, b| delta_gsb(GsbCounts::new(g, s, b)).map_err(|e| e.to_string());
    let (a, b, c) = (d(20, 70, 10)?, d(37, 0, 0)?, d(5, 0, 5)?);
    ensure(a == 0.1, || format!("(20,70,10) gave {a}"))?;
    ensure(b == 1.0, || format!("all-good gave {b}"))?;
    ensure(c == 0.0, || format!("symmetric gave {c}"))?;
    let out = common::run(&["gsb", "--good", "20", "--same", "70", "--bad", "10"]);
    let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    ensure(v["delta_gsb"].as_f64() == Some(0.1), || format!("cli printed {v}"))?;
    Ok("0.1, 1.0, 0.0 exact".into())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    common::write_jsonl(dir.path().join("in.jsonl").as_path(), &common::skewed_sources(5, 180, 35, 35));
    let input = p("in.jsonl");

    let jobs: Vec<Job> = vec![
        (
            "summarize",
            vec![
                vec!["summarize".into(), "--input".into(), input.clone(), "--output".into(), p("s1.jsonl"), "--with-scores".into(), "--workers".into(), "1".into()],
                vec!["summarize".into(), "--input".into(), input.clone(), "--output".into(), p("s2.jsonl"), "--with-scores".into(), "--workers".into(), "4".into()],
            ],
            Some("s"),
        ),
        (
            "augment",
            vec![
                vec!["augment".into(), "--input".into(), input.clone(), "--output".into(), p("a1.jsonl"), "--provider".into(), "mock".into(), "--seed".into(), "3".into(), "--workers".into(), "1".into()],
                vec!["augment".into(), "--input".into(), input.clone(), "--output".into(), p("a2.jsonl"), "--provider".into(), "mock".into(), "--seed".into(), "3".into(), "--workers".into(), "4".into()],
            ],
            Some("a"),
        ),
        ("evaluate", vec![vec!["evaluate".into(), "--predictions".into(), p("s1.jsonl")]; 2], None),
        ("gsb", vec![vec!["gsb".into(), "--good".into(), "3".into(), "--same".into(), "4".into(), "--bad".into(), "1".into()]; 2], None),
        ("stats", vec![vec!["stats".into(), "--input".into(), input.clone()]; 2], None),
        (
            "experiment",
            vec![
                vec!["experiment".into(), "--n-docs".into(), "90".into(), "--seed".into(), "3".into(), "--write-corpus".into(), p("e1.jsonl")],
                vec!["experiment".into(), "--n-docs".into(), "90".into(), "--seed".into(), "3".into(), "--write-corpus".into(), p("e2.jsonl")],
            ],
            Some("e"),
        ),
    ];
    let mut names = Vec::new();
    for (name, runs, file_prefix) in jobs {
        let outs: Vec<_> = runs
            .iter()
            .map(|args| common::bin().args(args).output().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        for o in &outs {
            ensure(o.status.success(), || format!("{name}: {}", String::from_utf8_lossy(&o.stderr)))?;
        }
        ensure(outs[0].stdout == outs[1].stdout, || format!("{name}: stdout differs"))?;
        if let Some(f) = file_prefix {
            let read = |i| std::fs::read(dir.path().join(format!("{f}{i}.jsonl"))).map_err(|e| e.to_string());
            let (x, y) = (read(1)?, read(2)?);
            ensure(!x.is_empty() && x == y, || format!("{name}: output files differ"))?;
        }
        names.push(name);
    }
    Ok(format!("byte-identical: {}", names.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("AUC oracle equivalence", auc_oracle_equivalence),
        ("AUC fidelity cases", auc_fidelity_cases),
        ("summary budget invariants", budget_invariants),
        ("query-focused-only vs mix labels", qf_only_vs_mix),
        ("experiment ordering (seed 7, 300 docs)", experiment_ordering),
        ("augmentation labeling invariants", augmentation_labels),
        ("augmentation rebalancing", rebalancing),
        ("delta GSB spot checks", gsb_spot_checks),
        ("subcommand determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
