//! Wikipedia-style XML corpus: pages, typed links, category assignments.
//!
//! A source document holds any number of `<page>` elements and, outside of
//! pages, any number of `<category id="..">name</category>` definitions. A
//! corpus directory is walked recursively and every `*.xml` file is such a
//! source; `categories.xml` is just a source containing only definitions.
//! A single file with a wrapper root (e.g. `<corpus>`) works the same way.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::xml::{attr, collapse_whitespace, Events, Node};

macro_rules! positive_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(u32);

        impl $name {
            /// `None` for zero.
            pub fn new(value: u32) -> Option<Self> {
                (value > 0).then_some(Self(value))
            }

            pub fn get(self) -> u32 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                let value: u32 = s
                    .trim()
                    .parse()
                    .map_err(|_| format!("{s:?} is not a positive integer id"))?;
                Self::new(value).ok_or_else(|| format!("{s:?} is not a positive integer id"))
            }
        }
    };
}

positive_id!(
    /// Identity of a page (and thus of the entity it describes).
    PageId
);
positive_id!(CategoryId);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub target: PageId,
    pub anchor: String,
    /// Element path of the link inside its source document, e.g. `/page[1]/body[1]/p[2]/link[1]`.
    pub xml_path: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub id: PageId,
    pub title: String,
    /// Tag-stripped body text with whitespace runs collapsed.
    pub body: String,
    /// Outgoing links in document order; multiplicity preserved, self-links removed.
    pub links: Vec<Link>,
    pub categories: std::collections::BTreeSet<CategoryId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    /// Parent categories when the source declares them. Not used for scoring.
    pub parents: Vec<CategoryId>,
}

/// Immutable page store with link graph and category table.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pages: BTreeMap<PageId, Page>,
    categories: BTreeMap<CategoryId, Category>,
    title_index: BTreeMap<String, PageId>,
}

/// Counts gathered while parsing; `dropped_links() == link_elements - kept links`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub sources: usize,
    pub pages: usize,
    pub link_elements: usize,
    pub dangling_links: usize,
    pub external_links: usize,
    pub self_links: usize,
    /// Categories referenced by pages but never given a name.
    pub unnamed_categories: usize,
}

impl ParseReport {
    pub fn dropped_links(&self) -> usize {
        self.dangling_links + self.external_links + self.self_links
    }
}

/// Case-folded, trimmed, internal whitespace collapsed.
pub fn normalize_title(title: &str) -> String {
    collapse_whitespace(&title.to_lowercase())
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    pub fn page(&self, id: PageId) -> Option<&Page> {
        self.pages.get(&id)
    }

    pub fn contains(&self, id: PageId) -> bool {
        self.pages.contains_key(&id)
    }

    /// Pages in ascending id order.
    pub fn pages(&self) -> impl Iterator<Item = &Page> {
        self.pages.values()
    }

    pub fn categories(&self) -> &BTreeMap<CategoryId, Category> {
        &self.categories
    }

    pub fn category(&self, id: CategoryId) -> Option<&Category> {
        self.categories.get(&id)
    }

    pub fn title_index(&self) -> &BTreeMap<String, PageId> {
        &self.title_index
    }

    pub fn resolve_title(&self, title: &str) -> Option<PageId> {
        self.title_index.get(&normalize_title(title)).copied()
    }

    pub fn link_count(&self) -> usize {
        self.pages.values().map(|p| p.links.len()).sum()
    }

    /// Mean number of categories per page; 0 for an empty corpus.
    pub fn mean_categories_per_page(&self) -> f64 {
        if self.pages.is_empty() {
            return 0.0;
        }
        let total: usize = self.pages.values().map(|p| p.categories.len()).sum();
        total as f64 / self.pages.len() as f64
    }
}

/// One XML source: a display name (used in errors) and its text.
#[derive(Clone, Debug)]
pub struct Source {
    pub name: String,
    pub text: String,
}

impl Source {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
        }
    }
}

/// Parses a corpus directory (recursively, `*.xml`) or a single XML file.
pub fn parse_corpus(path: &Path) -> Result<(Corpus, ParseReport)> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let mut files = Vec::new();
    if meta.is_dir() {
        for entry in WalkDir::new(path).sort_by_file_name() {
            let entry = entry.map_err(|e| {
                let p = e.path().unwrap_or(path).to_path_buf();
                Error::io(p, e.into())
            })?;
            let is_xml = entry
                .path()
                .extension()
                .is_some_and(|ext| ext.eq_ignore_ascii_case("xml"));
            if entry.file_type().is_file() && is_xml {
                files.push(entry.into_path());
            }
        }
    } else {
        files.push(path.to_path_buf());
    }

    let sources = files
        .par_iter()
        .map(|file| {
            let text = std::fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
            Ok(Source::new(file.display().to_string(), text))
        })
        .collect::<Result<Vec<_>>>()?;
    parse_sources(&sources)
}

/// Parses in-memory sources in the given order.
pub fn parse_sources(sources: &[Source]) -> Result<(Corpus, ParseReport)> {
    let documents = sources
        .par_iter()
        .map(|s| parse_document(&s.text, &s.name))
        .collect::<Result<Vec<_>>>()?;
    assemble(sources, documents)
}

enum RawTarget {
    Internal(u32),
    External,
}

struct RawLink {
    target: RawTarget,
    anchor: String,
    xml_path: String,
}

struct RawPage {
    id: PageId,
    title: String,
    body: String,
    links: Vec<RawLink>,
    categories: Vec<(CategoryId, String)>,
}

struct RawCategory {
    id: CategoryId,
    name: String,
    parents: Vec<CategoryId>,
}

#[derive(Default)]
struct RawDocument {
    pages: Vec<RawPage>,
    categories: Vec<RawCategory>,
}

/// Tracks `/name[i]/...` element paths with 1-based sibling positions.
#[derive(Default)]
struct PathTracker {
    frames: Vec<(String, HashMap<String, usize>)>,
    root_counts: HashMap<String, usize>,
}

impl PathTracker {
    fn push(&mut self, name: &str) {
        let counts = match self.frames.last_mut() {
            Some((_, counts)) => counts,
            None => &mut self.root_counts,
        };
        let n = counts.entry(name.to_string()).or_insert(0);
        *n += 1;
        let segment = format!("{name}[{n}]");
        self.frames.push((segment, HashMap::new()));
    }

    fn pop(&mut self) {
        self.frames.pop();
    }

    fn path(&self) -> String {
        let mut out = String::new();
        for (segment, _) in &self.frames {
            out.push('/');
            out.push_str(segment);
        }
        out
    }
}

fn parse_document(text: &str, source_name: &str) -> Result<RawDocument> {
    let mut events = Events::new(text, source_name);
    let mut paths = PathTracker::default();
    let mut doc = RawDocument::default();

    while let Some(node) = events.next_node()? {
        match node {
            Node::Start { name, attrs } => match name.as_str() {
                "page" => {
                    paths.push(&name);
                    let page = parse_page(&mut events, &mut paths, &attrs)?;
                    doc.pages.push(page);
                    paths.pop();
                }
                "category" => {
                    paths.push(&name);
                    let id = parse_id::<CategoryId>(&events, &attrs, "id", "category")?;
                    let parents = match attr(&attrs, "parents") {
                        Some(list) => list
                            .split_whitespace()
                            .map(|p| p.parse::<CategoryId>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|e| events.format_error(e))?,
                        None => Vec::new(),
                    };
                    let name = collapse_whitespace(&events.element_text()?);
                    doc.categories.push(RawCategory { id, name, parents });
                    paths.pop();
                }
                _ => paths.push(&name),
            },
            Node::End { .. } => paths.pop(),
            Node::Text(_) => {}
        }
    }
    Ok(doc)
}

fn parse_id<T: FromStr<Err = String>>(
    events: &Events<'_>,
    attrs: &[(String, String)],
    key: &str,
    element: &str,
) -> Result<T> {
    let raw = attr(attrs, key).ok_or_else(|| {
        events.format_error(format!("<{element}> is missing the {key} attribute"))
    })?;
    raw.parse::<T>()
        .map_err(|e| events.format_error(format!("<{element}> {key}: {e}")))
}

fn parse_page(
    events: &mut Events<'_>,
    paths: &mut PathTracker,
    attrs: &[(String, String)],
) -> Result<RawPage> {
    let id = parse_id::<PageId>(events, attrs, "id", "page")?;
    let mut title = None;
    let mut body = String::new();
    let mut links = Vec::new();
    let mut categories = Vec::new();

    while let Some(node) = events.next_node()? {
        match node {
            Node::Start { name, .. } => {
                paths.push(&name);
                match name.as_str() {
                    "title" => title = Some(collapse_whitespace(&events.element_text()?)),
                    "categories" => parse_page_categories(events, &mut categories)?,
                    "body" => parse_body(events, paths, &mut body, &mut links)?,
                    _ => events.skip_element()?,
                }
                paths.pop();
            }
            Node::End { .. } => break,
            Node::Text(_) => {}
        }
    }

    let title = title
        .filter(|t| !t.is_empty())
        .ok_or_else(|| events.format_error(format!("page {id} has no title")))?;
    Ok(RawPage {
        id,
        title,
        body: collapse_whitespace(&body),
        links,
        categories,
    })
}

fn parse_page_categories(
    events: &mut Events<'_>,
    out: &mut Vec<(CategoryId, String)>,
) -> Result<()> {
    while let Some(node) = events.next_node()? {
        match node {
            Node::Start { name, attrs } => {
                if name == "cat" || name == "category" {
                    let id = parse_id::<CategoryId>(events, &attrs, "id", &name)?;
                    let label = collapse_whitespace(&events.element_text()?);
                    out.push((id, label));
                } else {
                    events.skip_element()?;
                }
            }
            Node::End { .. } => return Ok(()),
            Node::Text(_) => {}
        }
    }
    Ok(())
}

fn parse_body(
    events: &mut Events<'_>,
    paths: &mut PathTracker,
    body: &mut String,
    links: &mut Vec<RawLink>,
) -> Result<()> {
    let mut depth = 0usize;
    while let Some(node) = events.next_node()? {
        match node {
            Node::Start { name, attrs } => {
                paths.push(&name);
                if name == "link" {
                    let target = match attr(&attrs, "target") {
                        Some(raw) => {
                            let value: u32 = raw.trim().parse().map_err(|_| {
                                events.format_error(format!(
                                    "link target {raw:?} is not an integer page id"
                                ))
                            })?;
                            RawTarget::Internal(value)
                        }
                        None => RawTarget::External,
                    };
                    let xml_path = paths.path();
                    let anchor = events.element_text()?;
                    body.push_str(&anchor);
                    links.push(RawLink {
                        target,
                        anchor: collapse_whitespace(&anchor),
                        xml_path,
                    });
                    paths.pop();
                } else {
                    depth += 1;
                }
            }
            Node::End { .. } => {
                if depth == 0 {
                    return Ok(());
                }
                depth -= 1;
                paths.pop();
            }
            Node::Text(text) => body.push_str(&text),
        }
    }
    Ok(())
}

fn assemble(sources: &[Source], documents: Vec<RawDocument>) -> Result<(Corpus, ParseReport)> {
    let mut report = ParseReport {
        sources: sources.len(),
        ..ParseReport::default()
    };

    let mut categories: BTreeMap<CategoryId, Category> = BTreeMap::new();
    for doc in &documents {
        for def in &doc.categories {
            match categories.get_mut(&def.id) {
                Some(existing) => {
                    if !existing.name.is_empty()
                        && !def.name.is_empty()
                        && existing.name != def.name
                    {
                        return Err(Error::DuplicateCategory {
                            id: def.id.get(),
                            first: existing.name.clone(),
                            second: def.name.clone(),
                        });
                    }
                    if existing.name.is_empty() {
                        existing.name = def.name.clone();
                    }
                    for parent in &def.parents {
                        if !existing.parents.contains(parent) {
                            existing.parents.push(*parent);
                        }
                    }
                }
                None => {
                    categories.insert(
                        def.id,
                        Category {
                            name: def.name.clone(),
                            parents: def.parents.clone(),
                        },
                    );
                }
            }
        }
    }

    let mut raw_pages: BTreeMap<PageId, (usize, RawPage)> = BTreeMap::new();
    for (source_idx, doc) in documents.into_iter().enumerate() {
        for page in doc.pages {
            if let Some((first_idx, _)) = raw_pages.get(&page.id) {
                return Err(Error::DuplicatePage {
                    id: page.id.get(),
                    first: sources[*first_idx].name.clone(),
                    second: sources[source_idx].name.clone(),
                });
            }
            for (cat, label) in &page.categories {
                let entry = categories.entry(*cat).or_default();
                if entry.name.is_empty() && !label.is_empty() {
                    entry.name = label.clone();
                }
            }
            raw_pages.insert(page.id, (source_idx, page));
        }
    }
    report.unnamed_categories = categories.values().filter(|c| c.name.is_empty()).count();

    let mut title_index = BTreeMap::new();
    for (id, (_, page)) in &raw_pages {
        if let Some(first) = title_index.insert(normalize_title(&page.title), *id) {
            return Err(Error::DuplicateTitle {
                title: normalize_title(&page.title),
                first: first.get(),
                second: id.get(),
            });
        }
    }

    let mut pages = BTreeMap::new();
    for (id, (_, raw)) in &raw_pages {
        let mut links = Vec::with_capacity(raw.links.len());
        for link in &raw.links {
            report.link_elements += 1;
            match link.target {
                RawTarget::External => report.external_links += 1,
                RawTarget::Internal(value) => match PageId::new(value) {
                    Some(target) if target == *id => report.self_links += 1,
                    Some(target) if raw_pages.contains_key(&target) => links.push(Link {
                        target,
                        anchor: link.anchor.clone(),
                        xml_path: link.xml_path.clone(),
                    }),
                    _ => report.dangling_links += 1,
                },
            }
        }
        pages.insert(
            *id,
            Page {
                id: *id,
                title: raw.title.clone(),
                body: raw.body.clone(),
                links,
                categories: raw.categories.iter().map(|(c, _)| *c).collect(),
            },
        );
    }
    report.pages = pages.len();

    Ok((
        Corpus {
            pages,
            categories,
            title_index,
        },
        report,
    ))
}
