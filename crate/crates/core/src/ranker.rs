//! Candidate generation and the three entity scores: linkrank, category
//! overlap and full-text, blended linearly after per-topic normalization.
//!
//! Scoring is split in two: [`score_topic`] computes everything that does not
//! depend on the blend weights, and [`TopicScores::blend`] applies them. A
//! parameter sweep therefore scores every topic once and blends per cell.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::{CategoryId, Corpus, PageId};
use crate::error::{Error, Result};
use crate::index::{Index, Query, SearchHit, DEFAULT_SEARCH_LIMIT};
use crate::topics::{build_query, Topic};

pub const DEFAULT_N_TOP: usize = 20;

/// Slack allowed on `alpha + beta <= 1` for grid values such as 0.7 + 0.3.
const WEIGHT_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankParams {
    /// Weight of the linkrank score.
    pub alpha: f64,
    /// Weight of the category score. The full-text score gets `1 - alpha - beta`.
    pub beta: f64,
    /// Number of top search results whose links are followed.
    pub n_top: usize,
    pub search_limit: usize,
    pub expand_with_examples: bool,
}

impl Default for RankParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            n_top: DEFAULT_N_TOP,
            search_limit: DEFAULT_SEARCH_LIMIT,
            expand_with_examples: false,
        }
    }
}

impl RankParams {
    pub fn validate(&self) -> Result<()> {
        BlendWeights::new(self.alpha, self.beta)?;
        if self.n_top < 1 {
            return Err(Error::Params("n_top must be at least 1".into()));
        }
        if self.search_limit < self.n_top {
            return Err(Error::Params(format!(
                "search limit {} is smaller than n_top {}",
                self.search_limit, self.n_top
            )));
        }
        Ok(())
    }

    pub fn weights(&self) -> Result<BlendWeights> {
        BlendWeights::new(self.alpha, self.beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlendWeights {
    alpha: f64,
    beta: f64,
}

impl BlendWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(Error::Params(format!(
                "alpha and beta must be nonnegative (got {alpha}, {beta})"
            )));
        }
        if alpha + beta > 1.0 + WEIGHT_EPSILON {
            return Err(Error::Params(format!(
                "alpha + beta must not exceed 1 (got {alpha} + {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn fulltext(&self) -> f64 {
        (1.0 - self.alpha - self.beta).max(0.0)
    }

    pub fn combine(&self, norm: &ScoreTriple) -> f64 {
        self.alpha * norm.linkrank + self.beta * norm.category + self.fulltext() * norm.fulltext
    }
}

/// Shaping functions of the linkrank sum: `g` weighs the number of distinct
/// example entities a referring page links to, `f` the number of links to the target.
#[derive(Clone, Copy, Debug)]
pub struct LinkrankFns {
    pub example_weight: fn(f64) -> f64,
    pub link_weight: fn(f64) -> f64,
}

fn plus_half(x: f64) -> f64 {
    x + 0.5
}

fn identity(x: f64) -> f64 {
    x
}

impl Default for LinkrankFns {
    fn default() -> Self {
        Self {
            example_weight: plus_half,
            link_weight: identity,
        }
    }
}

/// Link statistics of one of the top-N search results.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferringPageStats {
    pub page: PageId,
    /// Full-text score of the referring page.
    pub z: f64,
    /// Distinct example entities this page links to.
    pub ent_count: usize,
    /// Number of links to each target (always >= 1).
    pub link_counts: BTreeMap<PageId, u32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateSet {
    pub hits: Vec<SearchHit>,
    pub top_n: Vec<ReferringPageStats>,
    pub candidates: BTreeSet<PageId>,
}

/// Searches, keeps the top `n_top` hits with their link statistics, and
/// collects those pages plus every page they link to.
pub fn generate_candidates(
    corpus: &Corpus,
    index: &Index,
    query: &Query,
    examples: &BTreeSet<PageId>,
    params: &RankParams,
) -> CandidateSet {
    let hits = index.search(query, params.search_limit);
    let mut top_n = Vec::new();
    let mut candidates = BTreeSet::new();
    for hit in hits.iter().take(params.n_top) {
        let mut link_counts: BTreeMap<PageId, u32> = BTreeMap::new();
        if let Some(page) = corpus.page(hit.page) {
            for link in &page.links {
                *link_counts.entry(link.target).or_insert(0) += 1;
            }
        }
        let ent_count = link_counts.keys().filter(|t| examples.contains(t)).count();
        candidates.insert(hit.page);
        candidates.extend(link_counts.keys().copied());
        top_n.push(ReferringPageStats {
            page: hit.page,
            z: hit.score,
            ent_count,
            link_counts,
        });
    }
    CandidateSet {
        hits,
        top_n,
        candidates,
    }
}

/// Sum over referring pages of `z * g(#examples linked) * f(#links to target)`.
pub fn linkrank_score(target: PageId, top_n: &[ReferringPageStats], fns: &LinkrankFns) -> f64 {
    top_n
        .iter()
        .filter_map(|r| {
            let links = *r.link_counts.get(&target)?;
            Some(r.z * (fns.example_weight)(r.ent_count as f64) * (fns.link_weight)(links as f64))
        })
        .sum()
}

/// Fraction of the examples' category union present on the target; 0 when the union is empty.
pub fn category_score(target: &BTreeSet<CategoryId>, examples_union: &BTreeSet<CategoryId>) -> f64 {
    if examples_union.is_empty() {
        return 0.0;
    }
    let common = target.intersection(examples_union).count();
    common as f64 / examples_union.len() as f64
}

/// The target's own search score, or 0 when it was not retrieved.
pub fn z_score(target: PageId, hits: &[SearchHit]) -> f64 {
    hits.iter()
        .find(|h| h.page == target)
        .map_or(0.0, |h| h.score)
}

/// Min-max normalization to [0, 1]. A constant positive input maps to 1, all zeros stay 0.
pub fn normalize(values: &BTreeMap<PageId, f64>) -> BTreeMap<PageId, f64> {
    let (min, max) = min_max(values.values().copied());
    values
        .iter()
        .map(|(k, v)| (*k, rescale(*v, min, max)))
        .collect()
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn rescale(value: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (value - min) / (max - min)
    } else if max > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScoreTriple {
    pub linkrank: f64,
    pub category: f64,
    pub fulltext: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub page: PageId,
    pub raw: ScoreTriple,
    pub norm: ScoreTriple,
    pub global: f64,
}

/// Raw and normalized scores of every candidate of one topic, by ascending page id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TopicScores {
    pub entries: Vec<(PageId, ScoreTriple, ScoreTriple)>,
}

impl TopicScores {
    pub fn blend(&self, weights: BlendWeights) -> Vec<ScoredCandidate> {
        let mut ranked: Vec<ScoredCandidate> = self
            .entries
            .iter()
            .map(|(page, raw, norm)| ScoredCandidate {
                page: *page,
                raw: *raw,
                norm: *norm,
                global: weights.combine(norm),
            })
            .collect();
        ranked.sort_by(compare_candidates);
        ranked
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Global descending, then raw full-text descending, then page id ascending.
pub fn compare_candidates(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.global
        .total_cmp(&a.global)
        .then(b.raw.fulltext.total_cmp(&a.raw.fulltext))
        .then(a.page.cmp(&b.page))
}

/// Weight-independent part of ranking one topic.
pub fn score_topic(
    corpus: &Corpus,
    index: &Index,
    topic: &Topic,
    params: &RankParams,
    fns: &LinkrankFns,
) -> TopicScores {
    let query = build_query(topic, params.expand_with_examples);
    let examples = topic.example_pages(corpus);
    let candidate_set = generate_candidates(corpus, index, &query, &examples, params);

    let example_categories: BTreeSet<CategoryId> = examples
        .iter()
        .filter_map(|e| corpus.page(*e))
        .flat_map(|p| p.categories.iter().copied())
        .collect();
    let hit_scores: HashMap<PageId, f64> = candidate_set
        .hits
        .iter()
        .map(|h| (h.page, h.score))
        .collect();
    let no_categories = BTreeSet::new();

    let raw: Vec<(PageId, ScoreTriple)> = candidate_set
        .candidates
        .iter()
        .map(|&page| {
            let categories = corpus.page(page).map_or(&no_categories, |p| &p.categories);
            let scores = ScoreTriple {
                linkrank: linkrank_score(page, &candidate_set.top_n, fns),
                category: category_score(categories, &example_categories),
                fulltext: hit_scores.get(&page).copied().unwrap_or(0.0),
            };
            (page, scores)
        })
        .collect();

    let (l_min, l_max) = min_max(raw.iter().map(|(_, s)| s.linkrank));
    let (c_min, c_max) = min_max(raw.iter().map(|(_, s)| s.category));
    let (z_min, z_max) = min_max(raw.iter().map(|(_, s)| s.fulltext));
    let entries = raw
        .into_iter()
        .map(|(page, s)| {
            let norm = ScoreTriple {
                linkrank: rescale(s.linkrank, l_min, l_max),
                category: rescale(s.category, c_min, c_max),
                fulltext: rescale(s.fulltext, z_min, z_max),
            };
            (page, s, norm)
        })
        .collect();
    TopicScores { entries }
}

/// Ranks the candidate entities of a topic by blended score.
pub fn rank(
    corpus: &Corpus,
    index: &Index,
    topic: &Topic,
    params: &RankParams,
) -> Result<Vec<ScoredCandidate>> {
    params.validate()?;
    let scores = score_topic(corpus, index, topic, params, &LinkrankFns::default());
    Ok(scores.blend(params.weights()?))
}
