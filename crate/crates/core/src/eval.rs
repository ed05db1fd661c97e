//! Precision at rank, average precision, R-precision and their means over
//! topics. Example entities are removed from both runs and judgments first.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::corpus::PageId;
use crate::error::{Error, Result};

pub const PRECISION_CUTOFFS: [usize; 3] = [1, 5, 10];

/// Relevant pages per topic id. A topic may have an empty set.
pub type Judgments = BTreeMap<String, BTreeSet<PageId>>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub p_at: BTreeMap<usize, f64>,
    pub r_precision: f64,
    pub average_precision: f64,
}

impl Metrics {
    pub fn precision(&self, r: usize) -> f64 {
        self.p_at.get(&r).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub per_topic: BTreeMap<String, Metrics>,
    /// Unweighted means over every judged topic; `average_precision` here is MAP.
    pub mean: Metrics,
}

impl EvalReport {
    pub fn map(&self) -> f64 {
        self.mean.average_precision
    }

    /// Aligned plain-text table, one row per topic plus the mean row.
    pub fn to_table(&self) -> String {
        let width = self
            .per_topic
            .keys()
            .map(String::len)
            .chain(std::iter::once(5))
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "topic");
        for r in PRECISION_CUTOFFS {
            let _ = write!(out, " {:>8}", format!("P@{r}"));
        }
        let _ = writeln!(out, " {:>8} {:>8}", "R-prec", "AP");
        let row = |out: &mut String, name: &str, m: &Metrics| {
            let _ = write!(out, "{name:<width$}");
            for r in PRECISION_CUTOFFS {
                let _ = write!(out, " {:>8.4}", m.precision(r));
            }
            let _ = writeln!(out, " {:>8.4} {:>8.4}", m.r_precision, m.average_precision);
        };
        for (topic, m) in &self.per_topic {
            row(&mut out, topic, m);
        }
        row(&mut out, "all", &self.mean);
        out
    }

    /// `metric topic value` lines; topic `all` carries the means.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        let emit = |out: &mut String, topic: &str, m: &Metrics| {
            let _ = writeln!(out, "map {topic} {:.6}", m.average_precision);
            let _ = writeln!(out, "Rprec {topic} {:.6}", m.r_precision);
            for r in PRECISION_CUTOFFS {
                let _ = writeln!(out, "P_{r} {topic} {:.6}", m.precision(r));
            }
        };
        for (topic, m) in &self.per_topic {
            emit(&mut out, topic, m);
        }
        emit(&mut out, "all", &self.mean);
        out
    }
}

/// Drops example pages from the run (order kept) and from the relevant set.
pub fn strip_examples(
    run: &[PageId],
    relevant: &BTreeSet<PageId>,
    examples: &BTreeSet<PageId>,
) -> (Vec<PageId>, BTreeSet<PageId>) {
    let run = run
        .iter()
        .copied()
        .filter(|p| !examples.contains(p))
        .collect();
    let relevant = relevant.difference(examples).copied().collect();
    (run, relevant)
}

/// Relevance of each run position. A page repeated in the run only counts at its first position.
fn relevance(run: &[PageId], relevant: &BTreeSet<PageId>) -> Vec<bool> {
    let mut seen = HashSet::new();
    run.iter()
        .map(|p| seen.insert(*p) && relevant.contains(p))
        .collect()
}

/// Fraction of the first `r` positions that are relevant; missing positions count as nonrelevant.
pub fn precision_at(run: &[PageId], relevant: &BTreeSet<PageId>, r: usize) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let rel = relevance(run, relevant);
    let hits = rel.iter().take(r).filter(|x| **x).count();
    hits as f64 / r as f64
}

/// Mean of precision at each relevant position, over all relevant pages
/// (unretrieved ones contribute 0); 0 when nothing is relevant.
pub fn average_precision(run: &[PageId], relevant: &BTreeSet<PageId>) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (i, is_rel) in relevance(run, relevant).into_iter().enumerate() {
        if is_rel {
            found += 1;
            sum += found as f64 / (i + 1) as f64;
        }
    }
    sum / relevant.len() as f64
}

pub fn r_precision(run: &[PageId], relevant: &BTreeSet<PageId>) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    precision_at(run, relevant, relevant.len())
}

pub fn topic_metrics(run: &[PageId], relevant: &BTreeSet<PageId>) -> Metrics {
    Metrics {
        p_at: PRECISION_CUTOFFS
            .iter()
            .map(|&r| (r, precision_at(run, relevant, r)))
            .collect(),
        r_precision: r_precision(run, relevant),
        average_precision: average_precision(run, relevant),
    }
}

/// Evaluates per-topic runs. Every judged topic enters the means; topics
/// without a run score 0. A run for an unjudged topic is an error.
pub fn evaluate_run(
    runs: &BTreeMap<String, Vec<PageId>>,
    judgments: &Judgments,
    examples: &BTreeMap<String, BTreeSet<PageId>>,
) -> Result<EvalReport> {
    if let Some(unknown) = runs.keys().find(|t| !judgments.contains_key(*t)) {
        return Err(Error::UnknownTopic(unknown.clone()));
    }
    let no_examples = BTreeSet::new();
    let mut report = EvalReport::default();
    for (topic, relevant) in judgments {
        let run = runs.get(topic).map(Vec::as_slice).unwrap_or(&[]);
        let examples = examples.get(topic).unwrap_or(&no_examples);
        let (run, relevant) = strip_examples(run, relevant, examples);
        report
            .per_topic
            .insert(topic.clone(), topic_metrics(&run, &relevant));
    }

    let n = report.per_topic.len();
    if n > 0 {
        let mean_of =
            |f: &dyn Fn(&Metrics) -> f64| report.per_topic.values().map(f).sum::<f64>() / n as f64;
        report.mean = Metrics {
            p_at: PRECISION_CUTOFFS
                .iter()
                .map(|&r| (r, mean_of(&|m| m.precision(r))))
                .collect(),
            r_precision: mean_of(&|m| m.r_precision),
            average_precision: mean_of(&|m| m.average_precision),
        };
    } else {
        report.mean = topic_metrics(&[], &BTreeSet::new());
    }
    Ok(report)
}
