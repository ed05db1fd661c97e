//! Inverted index over page titles and bodies, ranked with Okapi BM25.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PageId};

pub const DEFAULT_SEARCH_LIMIT: usize = 1500;

/// Case-folded maximal alphanumeric runs. No stemming, no stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Bag of query tokens, in the order they were produced.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Query {
    pub terms: Vec<String>,
}

impl Query {
    pub fn parse(text: &str) -> Self {
        Self {
            terms: tokenize(text),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Distinct terms in sorted order; each contributes once to a document score.
    pub fn distinct_terms(&self) -> BTreeSet<&str> {
        self.terms.iter().map(String::as_str).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchHit {
    pub page: PageId,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Index {
    /// Postings sorted by page id.
    postings: BTreeMap<String, Vec<(PageId, u32)>>,
    doc_lengths: BTreeMap<PageId, u32>,
    avg_doc_length: f64,
    params: Bm25Params,
}

impl Index {
    pub fn build(corpus: &Corpus, params: Bm25Params) -> Self {
        let mut postings: BTreeMap<String, Vec<(PageId, u32)>> = BTreeMap::new();
        let mut doc_lengths = BTreeMap::new();
        let mut total_length = 0u64;

        // Pages arrive in ascending id order, so every posting list stays sorted.
        for page in corpus.pages() {
            let mut tokens = tokenize(&page.title);
            tokens.extend(tokenize(&page.body));
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for token in &tokens {
                *counts.entry(token.clone()).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push((page.id, tf));
            }
            doc_lengths.insert(page.id, tokens.len() as u32);
            total_length += tokens.len() as u64;
        }

        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            total_length as f64 / doc_lengths.len() as f64
        };
        Self {
            postings,
            doc_lengths,
            avg_doc_length,
            params,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_length(&self, page: PageId) -> Option<u32> {
        self.doc_lengths.get(&page).copied()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = PageId> + '_ {
        self.doc_lengths.keys().copied()
    }

    pub fn postings(&self, term: &str) -> &[(PageId, u32)] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, always positive.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.document_frequency(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_weight(&self, idf: f64, tf: u32, doc_len: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let norm = k1 * (1.0 - b + b * doc_len as f64 / self.avg_doc_length);
        idf * tf * (k1 + 1.0) / (tf + norm)
    }

    /// Top `limit` documents by BM25 score; ties broken by ascending page id.
    pub fn search(&self, query: &Query, limit: usize) -> Vec<SearchHit> {
        if limit == 0 {
            return Vec::new();
        }
        let mut scores: HashMap<PageId, f64> = HashMap::new();
        for term in query.distinct_terms() {
            let postings = self.postings(term);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(term);
            for &(page, tf) in postings {
                let weight = self.term_weight(idf, tf, self.doc_lengths[&page]);
                *scores.entry(page).or_insert(0.0) += weight;
            }
        }
        let mut hits: Vec<SearchHit> = scores
            .into_iter()
            .filter(|(_, score)| *score > 0.0)
            .map(|(page, score)| SearchHit { page, score })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.page.cmp(&b.page)));
        hits.truncate(limit);
        hits
    }
}
