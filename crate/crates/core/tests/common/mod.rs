//! Test support: random synthetic corpora rendered to XML, plus an
//! independent straight-line reimplementation of the ranking pipeline and of
//! the evaluation measures. Nothing here calls into the library's scoring code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const VOCAB: &[&str] = &[
    "euro", "currency", "country", "europe", "river", "mountain", "city", "capital", "bank",
    "trade", "king", "queen", "war", "peace", "island", "coast",
];

#[derive(Clone, Debug)]
pub enum BodyItem {
    Word(String),
    Link { target: u32, anchor: String },
    External { anchor: String },
}

#[derive(Clone, Debug)]
pub struct SynthPage {
    pub id: u32,
    pub title: String,
    pub body: Vec<BodyItem>,
    pub categories: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub pages: Vec<SynthPage>,
    pub categories: Vec<(u32, String)>,
}

#[derive(Clone, Debug)]
pub struct SynthTopic {
    pub id: String,
    pub title: String,
    pub examples: Vec<u32>,
}

impl SynthTopic {
    pub fn to_xml(&self, corpus: &SynthCorpus) -> String {
        let mut entities = String::new();
        for e in &self.examples {
            let name = &corpus.pages.iter().find(|p| p.id == *e).unwrap().title;
            entities.push_str(&format!("<entity id=\"{e}\">{name}</entity>"));
        }
        format!(
            "<inex_topic id=\"{}\"><title>{}</title><description>d</description><narrative>n</narrative><entities>{entities}</entities><categories></categories></inex_topic>",
            self.id, self.title
        )
    }
}

impl SynthCorpus {
    pub fn page_xml(page: &SynthPage) -> String {
        let mut xml = format!(
            "<page id=\"{}\"><title>{}</title><categories>",
            page.id, page.title
        );
        for c in &page.categories {
            xml.push_str(&format!("<cat id=\"{c}\"/>"));
        }
        xml.push_str("</categories><body>");
        for (i, item) in page.body.iter().enumerate() {
            if i > 0 {
                xml.push(' ');
            }
            match item {
                BodyItem::Word(w) => xml.push_str(w),
                BodyItem::Link { target, anchor } => {
                    // every third link sits inside a paragraph element
                    if i % 3 == 0 {
                        xml.push_str(&format!("<p><link target=\"{target}\">{anchor}</link></p>"));
                    } else {
                        xml.push_str(&format!("<link target=\"{target}\">{anchor}</link>"));
                    }
                }
                BodyItem::External { anchor } => xml.push_str(&format!(
                    "<link href=\"http://example.org\">{anchor}</link>"
                )),
            }
        }
        xml.push_str("</body></page>");
        xml
    }

    pub fn categories_xml(&self) -> String {
        let mut xml = String::from("<categories>");
        for (id, name) in &self.categories {
            xml.push_str(&format!("<category id=\"{id}\">{name}</category>"));
        }
        xml.push_str("</categories>");
        xml
    }

    pub fn sources(&self) -> Vec<entrank::Source> {
        let mut sources: Vec<entrank::Source> = self
            .pages
            .iter()
            .map(|p| entrank::Source::new(format!("{}.xml", p.id), Self::page_xml(p)))
            .collect();
        sources.push(entrank::Source::new(
            "categories.xml",
            self.categories_xml(),
        ));
        sources
    }

    pub fn write_dir(&self, dir: &std::path::Path) {
        for s in self.sources() {
            std::fs::write(dir.join(&s.name), &s.text).unwrap();
        }
    }

    pub fn parse(&self) -> entrank::Corpus {
        entrank::parse_sources(&self.sources()).unwrap().0
    }

    fn page(&self, id: u32) -> Option<&SynthPage> {
        self.pages.iter().find(|p| p.id == id)
    }

    /// Number of link elements in the generated XML.
    pub fn link_elements(&self) -> usize {
        self.pages
            .iter()
            .flat_map(|p| &p.body)
            .filter(|i| !matches!(i, BodyItem::Word(_)))
            .count()
    }
}

/// Random corpus: up to `max_pages` pages, up to 10 categories, random links
/// including dangling, self and external ones.
pub fn random_corpus(rng: &mut StdRng, max_pages: usize) -> SynthCorpus {
    let n_pages = rng.gen_range(3..=max_pages);
    let n_cats = rng.gen_range(1..=10u32);
    let categories: Vec<(u32, String)> = (1..=n_cats).map(|c| (c, format!("cat{c}"))).collect();
    let mut ids: Vec<u32> = (1..=(n_pages as u32 * 3)).collect();
    ids.shuffle(rng);
    let ids: Vec<u32> = ids.into_iter().take(n_pages).collect();

    let pages = ids
        .iter()
        .enumerate()
        .map(|(i, &id)| {
            let title = format!("Page{i} {}", VOCAB[rng.gen_range(0..VOCAB.len())]);
            let mut body = Vec::new();
            for _ in 0..rng.gen_range(0..25) {
                let roll: f64 = rng.gen();
                if roll < 0.65 {
                    body.push(BodyItem::Word(
                        VOCAB[rng.gen_range(0..VOCAB.len())].to_string(),
                    ));
                } else if roll < 0.93 {
                    let target = if rng.gen_bool(0.9) {
                        ids[rng.gen_range(0..ids.len())]
                    } else {
                        100_000 + rng.gen_range(0..10)
                    };
                    body.push(BodyItem::Link {
                        target,
                        anchor: VOCAB[rng.gen_range(0..VOCAB.len())].to_string(),
                    });
                } else {
                    body.push(BodyItem::External {
                        anchor: VOCAB[rng.gen_range(0..VOCAB.len())].to_string(),
                    });
                }
            }
            let n_page_cats = rng.gen_range(0..=3.min(n_cats));
            let mut cats: Vec<u32> = (1..=n_cats).collect();
            cats.shuffle(rng);
            cats.truncate(n_page_cats as usize);
            SynthPage {
                id,
                title,
                body,
                categories: cats,
            }
        })
        .collect();
    SynthCorpus { pages, categories }
}

pub fn random_topic(rng: &mut StdRng, corpus: &SynthCorpus, id: &str) -> SynthTopic {
    let n_terms = rng.gen_range(1..=3);
    let title: Vec<&str> = (0..n_terms)
        .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())])
        .collect();
    let n_examples = rng.gen_range(0..=3.min(corpus.pages.len()));
    let mut pool: Vec<u32> = corpus.pages.iter().map(|p| p.id).collect();
    pool.shuffle(rng);
    SynthTopic {
        id: id.to_string(),
        title: title.join(" "),
        examples: pool.into_iter().take(n_examples).collect(),
    }
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Straight-line oracle pipeline
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct OracleParams {
    pub alpha: f64,
    pub beta: f64,
    pub n_top: usize,
    pub limit: usize,
    pub k1: f64,
    pub b: f64,
    pub expand: bool,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            n_top: 20,
            limit: 1500,
            k1: 1.2,
            b: 0.75,
            expand: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub page: u32,
    pub linkrank: f64,
    pub category: f64,
    pub fulltext: f64,
    pub linkrank_norm: f64,
    pub category_norm: f64,
    pub fulltext_norm: f64,
    pub global: f64,
}

fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

fn page_tokens(page: &SynthPage) -> Vec<String> {
    let mut out = words(&page.title);
    for item in &page.body {
        match item {
            BodyItem::Word(w) => out.extend(words(w)),
            BodyItem::Link { anchor, .. } | BodyItem::External { anchor } => {
                out.extend(words(anchor))
            }
        }
    }
    out
}

/// Valid outgoing link targets in document order (existing, not self).
fn valid_targets(corpus: &SynthCorpus, page: &SynthPage) -> Vec<u32> {
    page.body
        .iter()
        .filter_map(|item| match item {
            BodyItem::Link { target, .. }
                if *target != page.id && corpus.page(*target).is_some() =>
            {
                Some(*target)
            }
            _ => None,
        })
        .collect()
}

/// BM25 over every document, brute force: `(page, score)` by score desc, id asc.
pub fn oracle_search(
    corpus: &SynthCorpus,
    query_terms: &[String],
    k1: f64,
    b: f64,
    limit: usize,
) -> Vec<(u32, f64)> {
    let docs: Vec<(u32, Vec<String>)> = corpus
        .pages
        .iter()
        .map(|p| (p.id, page_tokens(p)))
        .collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let mut terms: Vec<&String> = query_terms.iter().collect();
    terms.sort();
    terms.dedup();

    let mut scored = Vec::new();
    for (id, tokens) in &docs {
        let mut score = 0.0;
        for term in &terms {
            let tf = tokens.iter().filter(|t| t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|(_, t)| t.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let len = tokens.len() as f64;
            score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len / avgdl));
        }
        if score > 0.0 {
            scored.push((*id, score));
        }
    }
    scored.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    scored.truncate(limit);
    scored
}

fn minmax_norm(v: f64, all: &[f64]) -> f64 {
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (v - lo) / (hi - lo)
    } else if hi > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn oracle_query(corpus: &SynthCorpus, topic: &SynthTopic, expand: bool) -> Vec<String> {
    let mut q = words(&topic.title);
    if expand {
        for e in &topic.examples {
            q.extend(words(&corpus.page(*e).unwrap().title));
        }
    }
    q
}

pub fn oracle_rank(corpus: &SynthCorpus, topic: &SynthTopic, p: &OracleParams) -> Vec<OracleRow> {
    let query = oracle_query(corpus, topic, p.expand);
    let hits = oracle_search(corpus, &query, p.k1, p.b, p.limit);
    let top: Vec<(u32, f64)> = hits.iter().take(p.n_top).cloned().collect();

    let examples: BTreeSet<u32> = topic.examples.iter().copied().collect();
    let mut candidates: BTreeSet<u32> = BTreeSet::new();
    for (id, _) in &top {
        candidates.insert(*id);
        candidates.extend(valid_targets(corpus, corpus.page(*id).unwrap()));
    }
    let example_cats: BTreeSet<u32> = topic
        .examples
        .iter()
        .flat_map(|e| corpus.page(*e).unwrap().categories.clone())
        .collect();

    let mut raw: Vec<(u32, f64, f64, f64)> = Vec::new();
    for &t in &candidates {
        let mut linkrank = 0.0;
        for (r, z) in &top {
            let targets = valid_targets(corpus, corpus.page(*r).unwrap());
            let count = targets.iter().filter(|x| **x == t).count();
            if count == 0 {
                continue;
            }
            let distinct: BTreeSet<u32> = targets.iter().copied().collect();
            let ent = distinct.intersection(&examples).count() as f64;
            linkrank += z * (ent + 0.5) * count as f64;
        }
        let cats: BTreeSet<u32> = corpus.page(t).unwrap().categories.iter().copied().collect();
        let category = if example_cats.is_empty() {
            0.0
        } else {
            cats.intersection(&example_cats).count() as f64 / example_cats.len() as f64
        };
        let fulltext = hits
            .iter()
            .find(|(id, _)| *id == t)
            .map_or(0.0, |(_, s)| *s);
        raw.push((t, linkrank, category, fulltext));
    }

    let ls: Vec<f64> = raw.iter().map(|r| r.1).collect();
    let cs: Vec<f64> = raw.iter().map(|r| r.2).collect();
    let zs: Vec<f64> = raw.iter().map(|r| r.3).collect();
    let mut rows: Vec<OracleRow> = raw
        .iter()
        .map(|&(page, l, c, z)| {
            let (ln, cn, zn) = (
                minmax_norm(l, &ls),
                minmax_norm(c, &cs),
                minmax_norm(z, &zs),
            );
            OracleRow {
                page,
                linkrank: l,
                category: c,
                fulltext: z,
                linkrank_norm: ln,
                category_norm: cn,
                fulltext_norm: zn,
                global: p.alpha * ln + p.beta * cn + (1.0 - p.alpha - p.beta).max(0.0) * zn,
            }
        })
        .collect();
    rows.sort_by(|x, y| {
        y.global
            .partial_cmp(&x.global)
            .unwrap()
            .then(y.fulltext.partial_cmp(&x.fulltext).unwrap())
            .then(x.page.cmp(&y.page))
    });
    rows
}

/// Orders candidates by a single normalized score with the standard tie-breaks.
pub fn order_by(rows: &[OracleRow], key: impl Fn(&OracleRow) -> f64) -> Vec<u32> {
    let mut sorted: Vec<&OracleRow> = rows.iter().collect();
    sorted.sort_by(|x, y| {
        key(y)
            .partial_cmp(&key(x))
            .unwrap()
            .then(y.fulltext.partial_cmp(&x.fulltext).unwrap())
            .then(x.page.cmp(&y.page))
    });
    sorted.iter().map(|r| r.page).collect()
}

// ---------------------------------------------------------------------------
// Brute-force evaluation measures
// ---------------------------------------------------------------------------

pub fn brute_precision(run: &[u32], relevant: &BTreeSet<u32>, r: usize) -> f64 {
    let mut hits = 0;
    for i in 0..r {
        if let Some(doc) = run.get(i) {
            if relevant.contains(doc) {
                hits += 1;
            }
        }
    }
    hits as f64 / r as f64
}

/// For each relevant document, precision at its rank (0 if unretrieved); averaged over all relevant.
pub fn brute_average_precision(run: &[u32], relevant: &BTreeSet<u32>) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for doc in relevant {
        if let Some(pos) = run.iter().position(|d| d == doc) {
            total += brute_precision(run, relevant, pos + 1);
        }
    }
    total / relevant.len() as f64
}

pub fn brute_r_precision(run: &[u32], relevant: &BTreeSet<u32>) -> f64 {
    if relevant.is_empty() {
        0.0
    } else {
        brute_precision(run, relevant, relevant.len())
    }
}

// ---------------------------------------------------------------------------
// Planted benchmark
// ---------------------------------------------------------------------------

pub struct Planted {
    pub corpus: SynthCorpus,
    pub topics: Vec<SynthTopic>,
    /// Relevant pages per topic, examples included.
    pub qrels: BTreeMap<String, BTreeSet<u32>>,
}

/// Per topic: hub pages matching the query link to examples, relevant
/// entities and distractors; relevant entities share the examples' category
/// but do not mention the query; distractors mention the query heavily.
pub fn planted_benchmark(n_topics: usize) -> Planted {
    let mut pages = Vec::new();
    let mut categories = Vec::new();
    let mut topics = Vec::new();
    let mut qrels = BTreeMap::new();
    let mut next_id = 1u32;
    let mut alloc = || {
        let id = next_id;
        next_id += 1;
        id
    };
    let noise_cat = 1000u32;
    categories.push((noise_cat, "misc".to_string()));

    for t in 0..n_topics {
        let theme = VOCAB[t % VOCAB.len()];
        let qword = format!("topic{t}");
        let cat = 10 + t as u32;
        categories.push((cat, format!("class{t}")));

        let examples: Vec<u32> = (0..2).map(|_| alloc()).collect();
        let relevant: Vec<u32> = (0..5).map(|_| alloc()).collect();
        let distractors: Vec<u32> = (0..6).map(|_| alloc()).collect();
        let hubs: Vec<u32> = (0..3).map(|_| alloc()).collect();

        for (i, &id) in examples.iter().chain(&relevant).enumerate() {
            pages.push(SynthPage {
                id,
                title: format!("Entity{t}x{i}"),
                body: vec![BodyItem::Word("plain".into()), BodyItem::Word(theme.into())],
                categories: vec![cat],
            });
        }
        for (i, &id) in distractors.iter().enumerate() {
            pages.push(SynthPage {
                id,
                title: format!("Distractor{t}x{i}"),
                body: vec![
                    BodyItem::Word(qword.clone()),
                    BodyItem::Word(qword.clone()),
                    BodyItem::Word("list".into()),
                ],
                categories: vec![noise_cat],
            });
        }
        for (h, &id) in hubs.iter().enumerate() {
            let mut body = vec![BodyItem::Word(qword.clone()), BodyItem::Word("list".into())];
            for &target in examples
                .iter()
                .chain(&relevant)
                .chain(&distractors[h * 2..h * 2 + 2])
            {
                body.push(BodyItem::Link {
                    target,
                    anchor: "item".into(),
                });
            }
            pages.push(SynthPage {
                id,
                title: format!("Hub{t}x{h}"),
                body,
                categories: vec![noise_cat],
            });
        }

        let id = format!("T{t}");
        topics.push(SynthTopic {
            id: id.clone(),
            title: format!("{qword} list"),
            examples: examples.clone(),
        });
        qrels.insert(id, examples.iter().chain(&relevant).copied().collect());
    }
    Planted {
        corpus: SynthCorpus { pages, categories },
        topics,
        qrels,
    }
}

pub fn to_judgments(qrels: &BTreeMap<String, BTreeSet<u32>>) -> entrank::Judgments {
    qrels
        .iter()
        .map(|(t, set)| {
            (
                t.clone(),
                set.iter()
                    .map(|p| entrank::PageId::new(*p).unwrap())
                    .collect(),
            )
        })
        .collect()
}

pub fn to_topics(corpus: &SynthCorpus, topics: &[SynthTopic]) -> Vec<entrank::Topic> {
    topics
        .iter()
        .map(|t| entrank::parse_topic(&t.to_xml(corpus)).unwrap())
        .collect()
}
