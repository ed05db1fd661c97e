//! TREC-style run and qrels files.
//!
//! Run lines: `topic_id Q0 page_id rank score run_tag`.
//! Qrels lines: `topic_id 0 page_id relevance`, relevance 0 or 1.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::corpus::PageId;
use crate::error::{Error, Result};
use crate::eval::Judgments;
use crate::ranker::ScoredCandidate;

#[derive(Clone, Debug, PartialEq)]
pub struct RunEntry {
    pub page: PageId,
    pub rank: usize,
    pub score: f64,
}

/// Ranked entries per topic, ordered by rank.
pub type Run = BTreeMap<String, Vec<RunEntry>>;

/// Appends one topic's ranking to `out`; ranks start at 1, scores have 6 decimals.
pub fn write_topic_run(
    out: &mut String,
    topic_id: &str,
    ranked: &[ScoredCandidate],
    run_tag: &str,
) {
    for (i, c) in ranked.iter().enumerate() {
        let _ = writeln!(
            out,
            "{topic_id} Q0 {} {} {:.6} {run_tag}",
            c.page,
            i + 1,
            c.global
        );
    }
}

fn line_error(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Line {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

pub fn parse_run(text: &str, source_name: &str) -> Result<Run> {
    let mut run: Run = BTreeMap::new();
    let mut seen: HashSet<(String, PageId)> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(line_error(
                source_name,
                line_no,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let page: PageId = fields[2]
            .parse()
            .map_err(|e: String| line_error(source_name, line_no, e))?;
        let rank: usize = fields[3]
            .parse()
            .map_err(|_| line_error(source_name, line_no, format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| {
                line_error(source_name, line_no, format!("bad score {:?}", fields[4]))
            })?;
        let topic = fields[0].to_string();
        if !seen.insert((topic.clone(), page)) {
            return Err(line_error(
                source_name,
                line_no,
                format!("page {page} repeated for topic {topic}"),
            ));
        }
        run.entry(topic)
            .or_default()
            .push(RunEntry { page, rank, score });
    }
    for entries in run.values_mut() {
        entries.sort_by(|a, b| a.rank.cmp(&b.rank).then(b.score.total_cmp(&a.score)));
    }
    Ok(run)
}

/// Page order per topic, as consumed by the evaluator.
pub fn run_pages(run: &Run) -> BTreeMap<String, Vec<PageId>> {
    run.iter()
        .map(|(t, entries)| (t.clone(), entries.iter().map(|e| e.page).collect()))
        .collect()
}

/// Topics that only have relevance-0 lines are kept with an empty set.
pub fn parse_qrels(text: &str, source_name: &str) -> Result<Judgments> {
    let mut judgments: Judgments = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 4 {
            return Err(line_error(
                source_name,
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let page: PageId = fields[2]
            .parse()
            .map_err(|e: String| line_error(source_name, line_no, e))?;
        let relevant = match fields[3] {
            "0" => false,
            "1" => true,
            other => {
                return Err(line_error(
                    source_name,
                    line_no,
                    format!("relevance must be 0 or 1, found {other:?}"),
                ))
            }
        };
        let set: &mut BTreeSet<PageId> = judgments.entry(fields[0].to_string()).or_default();
        if relevant {
            set.insert(page);
        }
    }
    Ok(judgments)
}

pub fn write_qrels(judgments: &Judgments) -> String {
    let mut out = String::new();
    for (topic, pages) in judgments {
        for page in pages {
            let _ = writeln!(out, "{topic} 0 {page} 1");
        }
    }
    out
}
