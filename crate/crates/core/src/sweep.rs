//! Grid sweep over the blend weights `alpha` (linkrank) and `beta` (category).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{Corpus, PageId};
use crate::error::{Error, Result};
use crate::eval::{evaluate_run, EvalReport, Judgments};
use crate::index::Index;
use crate::ranker::{rank, score_topic, BlendWeights, LinkrankFns, RankParams, TopicScores};
use crate::topics::Topic;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMetric {
    Map,
    RPrecision,
}

impl SweepMetric {
    pub fn of(&self, report: &EvalReport) -> f64 {
        match self {
            SweepMetric::Map => report.mean.average_precision,
            SweepMetric::RPrecision => report.mean.r_precision,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepMetric::Map => "map",
            SweepMetric::RPrecision => "rprec",
        }
    }
}

impl FromStr for SweepMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "map" => Ok(SweepMetric::Map),
            "rprec" | "r-precision" => Ok(SweepMetric::RPrecision),
            other => Err(format!("unknown metric {other:?} (expected map or rprec)")),
        }
    }
}

/// Number of grid intervals for `step`; the step must divide 1 evenly.
pub fn grid_divisions(step: f64) -> Result<u32> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::Params(format!("step {step} must be in (0, 1]")));
    }
    let k = (1.0 / step).round();
    if (k * step - 1.0).abs() > 1e-9 || k > 10_000.0 {
        return Err(Error::Params(format!(
            "step {step} does not divide 1 evenly"
        )));
    }
    Ok(k as u32)
}

/// Grid points `(i, j)` with `i + j <= divisions`, i.e. `alpha + beta <= 1`.
pub fn grid_cells(divisions: u32) -> Vec<(u32, u32)> {
    (0..=divisions)
        .flat_map(|i| (0..=divisions - i).map(move |j| (i, j)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    divisions: u32,
    metric: SweepMetric,
    cells: BTreeMap<(u32, u32), f64>,
}

impl SweepGrid {
    pub fn from_cells(
        divisions: u32,
        metric: SweepMetric,
        cells: BTreeMap<(u32, u32), f64>,
    ) -> Self {
        Self {
            divisions,
            metric,
            cells,
        }
    }

    pub fn divisions(&self) -> u32 {
        self.divisions
    }

    pub fn metric(&self) -> SweepMetric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn coordinate(&self, i: u32) -> f64 {
        i as f64 / self.divisions as f64
    }

    pub fn value(&self, alpha_idx: u32, beta_idx: u32) -> Option<f64> {
        self.cells.get(&(alpha_idx, beta_idx)).copied()
    }

    /// `(alpha, beta, value)` in ascending alpha, then beta.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.cells
            .iter()
            .map(|(&(i, j), &v)| (self.coordinate(i), self.coordinate(j), v))
    }

    fn label_decimals(&self) -> usize {
        (1..=6)
            .find(|d| 10u64.pow(*d as u32).is_multiple_of(self.divisions as u64))
            .unwrap_or(3)
    }

    /// Rows alpha, columns beta, blank where alpha + beta > 1.
    pub fn to_matrix(&self) -> String {
        let d = self.label_decimals();
        let width = (d + 2).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<10}", "alpha\\beta");
        for j in 0..=self.divisions {
            let _ = write!(out, " {:>width$.d$}", self.coordinate(j));
        }
        out.push('\n');
        for i in 0..=self.divisions {
            let mut line = format!("{:<10.d$}", self.coordinate(i));
            for j in 0..=self.divisions {
                match self.value(i, j) {
                    Some(v) => {
                        let _ = write!(line, " {v:>width$.4}");
                    }
                    None => {
                        let _ = write!(line, " {:>width$}", "");
                    }
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// `alpha beta value` per cell.
    pub fn to_lines(&self) -> String {
        let d = self.label_decimals();
        let mut out = String::new();
        for (alpha, beta, v) in self.cells() {
            let _ = writeln!(out, "{alpha:.d$} {beta:.d$} {v:.6}");
        }
        out
    }
}

/// Highest cell; ties go to the smaller alpha, then the smaller beta.
pub fn best_cell(grid: &SweepGrid) -> Option<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for (alpha, beta, v) in grid.cells() {
        if best.is_none_or(|(_, _, b)| v > b) {
            best = Some((alpha, beta, v));
        }
    }
    best
}

/// Weight-independent scores of every topic, computed once per sweep.
pub struct PreparedTopics {
    ids: Vec<String>,
    scores: Vec<TopicScores>,
    examples: BTreeMap<String, BTreeSet<PageId>>,
}

impl PreparedTopics {
    pub fn new(corpus: &Corpus, index: &Index, topics: &[Topic], params: &RankParams) -> Self {
        let fns = LinkrankFns::default();
        let scores = topics
            .par_iter()
            .map(|t| score_topic(corpus, index, t, params, &fns))
            .collect();
        Self {
            ids: topics.iter().map(|t| t.id.clone()).collect(),
            scores,
            examples: topics
                .iter()
                .map(|t| (t.id.clone(), t.example_pages(corpus)))
                .collect(),
        }
    }

    pub fn evaluate(&self, weights: BlendWeights, judgments: &Judgments) -> Result<EvalReport> {
        let runs = self
            .ids
            .iter()
            .zip(&self.scores)
            .map(|(id, s)| {
                (
                    id.clone(),
                    s.blend(weights).iter().map(|c| c.page).collect(),
                )
            })
            .collect();
        evaluate_run(&runs, judgments, &self.examples)
    }
}

/// Ranks and evaluates every topic for every grid cell, scoring each topic once.
pub fn run_sweep(
    corpus: &Corpus,
    index: &Index,
    topics: &[Topic],
    judgments: &Judgments,
    step: f64,
    metric: SweepMetric,
    params: &RankParams,
) -> Result<SweepGrid> {
    if topics.is_empty() {
        return Err(Error::Params("sweep needs at least one topic".into()));
    }
    let divisions = grid_divisions(step)?;
    RankParams {
        alpha: 0.0,
        beta: 0.0,
        ..*params
    }
    .validate()?;
    let prepared = PreparedTopics::new(corpus, index, topics, params);
    let k = divisions as f64;
    let cells = grid_cells(divisions)
        .into_par_iter()
        .map(|(i, j)| {
            let weights = BlendWeights::new(i as f64 / k, j as f64 / k)?;
            let report = prepared.evaluate(weights, judgments)?;
            Ok(((i, j), metric.of(&report)))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(SweepGrid::from_cells(divisions, metric, cells))
}

/// One configuration evaluated from scratch: every topic ranked via [`rank`].
pub fn evaluate_params(
    corpus: &Corpus,
    index: &Index,
    topics: &[Topic],
    judgments: &Judgments,
    params: &RankParams,
) -> Result<EvalReport> {
    let mut runs = BTreeMap::new();
    let mut examples = BTreeMap::new();
    for topic in topics {
        let ranked = rank(corpus, index, topic, params)?;
        runs.insert(topic.id.clone(), ranked.iter().map(|c| c.page).collect());
        examples.insert(topic.id.clone(), topic.example_pages(corpus));
    }
    evaluate_run(&runs, judgments, &examples)
}
