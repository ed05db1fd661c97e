//! Entity ranking over Wikipedia-style XML corpora.
//!
//! Candidate entity pages are gathered from the top full-text results and the
//! pages they link to, then ranked by a linear blend of three normalized
//! scores: linkrank (referrals from top results, weighted by how many example
//! entities the referrer links to), category overlap with the example
//! entities, and the page's own BM25 score.
//!
//! ```text
//! corpus ──► index ──► search ──► candidates ──► scores ──► blend ──► run
//!                                                                  │
//!                                  qrels ──► eval ◄────────────────┘
//! ```

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod index;
pub mod ranker;
pub mod store;
pub mod sweep;
pub mod topics;
pub mod trec;
mod xml;

pub use corpus::{
    parse_corpus, parse_sources, CategoryId, Corpus, Link, Page, PageId, ParseReport, Source,
};
pub use error::{Error, Result};
pub use eval::{evaluate_run, EvalReport, Judgments, Metrics};
pub use index::{tokenize, Bm25Params, Index, Query, SearchHit};
pub use ranker::{rank, RankParams, ScoredCandidate};
pub use sweep::{best_cell, run_sweep, SweepGrid, SweepMetric};
pub use topics::{build_query, parse_topic, Topic};
