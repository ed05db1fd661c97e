//! INEX-style entity ranking topics and query construction.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use quick_xml::escape::escape;

use crate::corpus::{CategoryId, Corpus, PageId};
use crate::error::{Error, Result};
use crate::index::{tokenize, Query};
use crate::xml::{attr, collapse_whitespace, Events, Node};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleEntity {
    /// Page id when the topic supplies one; otherwise resolved by title.
    pub id: Option<PageId>,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetCategory {
    pub id: CategoryId,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topic {
    pub id: String,
    pub title: String,
    pub description: String,
    pub narrative: String,
    pub examples: Vec<ExampleEntity>,
    pub target_categories: Vec<TargetCategory>,
}

impl Topic {
    /// Example entities as corpus pages. An explicit id wins over the name;
    /// names that resolve to nothing are dropped.
    pub fn example_pages(&self, corpus: &Corpus) -> BTreeSet<PageId> {
        self.examples
            .iter()
            .filter_map(|e| match e.id {
                Some(id) => Some(id),
                None => corpus.resolve_title(&e.name),
            })
            .collect()
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        if self.id.is_empty() {
            out.push_str("<inex_topic>\n");
        } else {
            out.push_str(&format!(
                "<inex_topic id=\"{}\">\n",
                escape(self.id.as_str())
            ));
        }
        for (tag, value) in [
            ("title", &self.title),
            ("description", &self.description),
            ("narrative", &self.narrative),
        ] {
            out.push_str(&format!("<{tag}>{}</{tag}>\n", escape(value.as_str())));
        }
        out.push_str("<entities>\n");
        for e in &self.examples {
            match e.id {
                Some(id) => out.push_str(&format!(
                    "  <entity id=\"{id}\">{}</entity>\n",
                    escape(e.name.as_str())
                )),
                None => out.push_str(&format!("  <entity>{}</entity>\n", escape(e.name.as_str()))),
            }
        }
        out.push_str("</entities>\n<categories>\n");
        for c in &self.target_categories {
            out.push_str(&format!(
                "  <category id=\"{}\">{}</category>\n",
                c.id,
                escape(c.name.as_str())
            ));
        }
        out.push_str("</categories>\n</inex_topic>\n");
        out
    }
}

/// Title tokens, followed by the tokens of every example name when `expand_with_examples`.
pub fn build_query(topic: &Topic, expand_with_examples: bool) -> Query {
    let mut terms = tokenize(&topic.title);
    if expand_with_examples {
        for example in &topic.examples {
            terms.extend(tokenize(&example.name));
        }
    }
    Query { terms }
}

/// Rewrites the unclosed `<category id="..">name<category>` form into a closed element.
fn close_bare_category_tags(xml: &str) -> String {
    let mut out = String::with_capacity(xml.len());
    let mut rest = xml;
    while let Some(pos) = rest.find("<category") {
        out.push_str(&rest[..pos]);
        let after = &rest[pos..];
        let Some(tag_end) = after.find('>') else {
            out.push_str(after);
            return out;
        };
        let open_tag = &after[..=tag_end];
        out.push_str(open_tag);
        rest = &after[tag_end + 1..];
        if open_tag.ends_with("/>")
            || open_tag == "<category>"
            || open_tag.starts_with("<categories")
        {
            continue;
        }
        let text_end = rest.find('<').unwrap_or(rest.len());
        out.push_str(&rest[..text_end]);
        rest = &rest[text_end..];
        if rest.starts_with("<category>") {
            out.push_str("</category>");
            rest = &rest["<category>".len()..];
        }
    }
    out.push_str(rest);
    out
}

/// Parses a single `<inex_topic>` document.
pub fn parse_topic(xml: &str) -> Result<Topic> {
    let mut topics = parse_topics(xml, "topic")?;
    match topics.len() {
        1 => topics.pop().unwrap(),
        n => Err(Error::Format {
            source_name: "topic".into(),
            offset: 0,
            message: format!("expected exactly one <inex_topic>, found {n}"),
        }),
    }
}

/// Parses a document holding one `<inex_topic>` or a wrapper of many.
///
/// The outer error is for malformed XML; inner errors are per-topic content problems.
pub fn parse_topics(xml: &str, source_name: &str) -> Result<Vec<Result<Topic>>> {
    let fixed = close_bare_category_tags(xml);
    let mut events = Events::new(&fixed, source_name);
    let mut topics = Vec::new();
    while let Some(node) = events.next_node()? {
        if let Node::Start { name, attrs } = node {
            if name == "inex_topic" {
                topics.push(parse_topic_body(&mut events, &attrs)?);
            }
        }
    }
    Ok(topics)
}

fn parse_topic_body(events: &mut Events<'_>, attrs: &[(String, String)]) -> Result<Result<Topic>> {
    let id = attr(attrs, "id")
        .or_else(|| attr(attrs, "topic_id"))
        .unwrap_or("")
        .trim()
        .to_string();
    let start_offset = events.offset();
    let mut title = None;
    let mut description = String::new();
    let mut narrative = String::new();
    let mut examples = Vec::new();
    let mut target_categories = Vec::new();
    let mut problem: Option<Error> = None;

    while let Some(node) = events.next_node()? {
        match node {
            Node::Start { name, .. } => match name.as_str() {
                "title" => title = Some(collapse_whitespace(&events.element_text()?)),
                "description" => description = collapse_whitespace(&events.element_text()?),
                "narrative" => narrative = collapse_whitespace(&events.element_text()?),
                "entities" => {
                    for (attrs, text) in child_elements(events, "entity")? {
                        let id = match attr(&attrs, "id") {
                            Some(raw) => match raw.parse::<PageId>() {
                                Ok(id) => Some(id),
                                Err(e) => {
                                    problem.get_or_insert(
                                        events.format_error(format!("entity id: {e}")),
                                    );
                                    None
                                }
                            },
                            None => None,
                        };
                        examples.push(ExampleEntity { id, name: text });
                    }
                }
                "categories" => {
                    for (attrs, text) in child_elements(events, "category")? {
                        match attr(&attrs, "id").map(str::parse::<CategoryId>) {
                            Some(Ok(id)) => {
                                target_categories.push(TargetCategory { id, name: text })
                            }
                            Some(Err(e)) => {
                                problem.get_or_insert(
                                    events.format_error(format!("category id: {e}")),
                                );
                            }
                            None => {
                                problem.get_or_insert(events.format_error("category without id"));
                            }
                        }
                    }
                }
                _ => events.skip_element()?,
            },
            Node::End { .. } => break,
            Node::Text(_) => {}
        }
    }

    if let Some(err) = problem {
        return Ok(Err(err));
    }
    let Some(title) = title.filter(|t| !t.is_empty()) else {
        return Ok(Err(Error::Format {
            source_name: "topic".into(),
            offset: start_offset,
            message: format!("topic {id:?} has no title"),
        }));
    };
    Ok(Ok(Topic {
        id,
        title,
        description,
        narrative,
        examples,
        target_categories,
    }))
}

type Attributes = Vec<(String, String)>;

/// Collects `(attributes, text)` of every `<child>` inside the element just opened.
fn child_elements(events: &mut Events<'_>, child: &str) -> Result<Vec<(Attributes, String)>> {
    let mut out = Vec::new();
    while let Some(node) = events.next_node()? {
        match node {
            Node::Start { name, attrs } if name == child => {
                let text = collapse_whitespace(&events.element_text()?);
                out.push((attrs, text));
            }
            Node::Start { .. } => events.skip_element()?,
            Node::End { .. } => break,
            Node::Text(_) => {}
        }
    }
    Ok(out)
}

/// Outcome of loading one topic file.
#[derive(Debug)]
pub struct TopicFile {
    pub path: PathBuf,
    pub topics: Result<Vec<Result<Topic>>>,
}

/// Loads a topic file or every `*.xml` in a directory (sorted).
///
/// Topics without an id get the file stem, suffixed with their position in
/// wrapper files holding several topics.
pub fn load_topics(path: &Path) -> Result<Vec<TopicFile>> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let mut files = Vec::new();
    if meta.is_dir() {
        for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            let p = entry.path();
            if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")) {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }

    let mut out = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let name = file.display().to_string();
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let topics = parse_topics(&text, &name).map(|mut topics| {
            let many = topics.len() > 1;
            for (i, topic) in topics.iter_mut().enumerate() {
                match topic {
                    Ok(t) if t.id.is_empty() => {
                        t.id = if many {
                            format!("{stem}.{}", i + 1)
                        } else {
                            stem.clone()
                        };
                    }
                    Err(Error::Format { source_name, .. }) => *source_name = name.clone(),
                    _ => {}
                }
            }
            topics
        });
        out.push(TopicFile { path: file, topics });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EURO_TOPIC: &str = r#"
<inex_topic>
<title>
European countries where I can pay with Euros
</title>
<description>
I want a list of European countries where
I can pay with Euros.
</description>
<narrative>
Each answer should be the article about a specific
European country that uses the Euro as currency.
</narrative>
<entities>
   <entity id="10581">France</entity>
   <entity id="11867">Germany</entity>
   <entity id="26667">Spain</entity>
</entities>
<categories>
   <category id="61">countries<category>
</categories>
</inex_topic>
"#;

    fn pid(v: u32) -> Option<PageId> {
        PageId::new(v)
    }

    #[test]
    fn parses_the_example_topic() {
        let topic = parse_topic(EURO_TOPIC).unwrap();
        assert_eq!(topic.title, "European countries where I can pay with Euros");
        assert_eq!(
            topic.description,
            "I want a list of European countries where I can pay with Euros."
        );
        let examples: Vec<_> = topic
            .examples
            .iter()
            .map(|e| (e.id, e.name.as_str()))
            .collect();
        assert_eq!(
            examples,
            vec![
                (pid(10581), "France"),
                (pid(11867), "Germany"),
                (pid(26667), "Spain")
            ]
        );
        assert_eq!(
            topic.target_categories,
            vec![TargetCategory {
                id: CategoryId::new(61).unwrap(),
                name: "countries".into()
            }]
        );
    }

    #[test]
    fn closed_category_form_also_accepted() {
        let fixed = EURO_TOPIC.replace("countries<category>", "countries</category>");
        assert_eq!(
            parse_topic(&fixed).unwrap(),
            parse_topic(EURO_TOPIC).unwrap()
        );
    }

    #[test]
    fn empty_entities_and_missing_title() {
        let topic =
            parse_topic("<inex_topic><title>Euro</title><entities></entities></inex_topic>")
                .unwrap();
        assert!(topic.examples.is_empty());
        assert!(topic.target_categories.is_empty());
        assert!(parse_topic("<inex_topic><description>x</description></inex_topic>").is_err());
        assert!(parse_topic("<inex_topic><title>  </title></inex_topic>").is_err());
    }

    #[test]
    fn malformed_ids_rejected() {
        assert!(parse_topic(r#"<inex_topic><title>t</title><entities><entity id="x">A</entity></entities></inex_topic>"#).is_err());
        assert!(parse_topic(r#"<inex_topic><title>t</title><categories><category id="-1">c</category></categories></inex_topic>"#).is_err());
    }

    #[test]
    fn queries_with_and_without_examples() {
        let topic = parse_topic(EURO_TOPIC).unwrap();
        let plain = build_query(&topic, false);
        assert_eq!(
            plain.terms,
            tokenize("European countries where I can pay with Euros")
        );
        let expanded = build_query(&topic, true);
        assert_eq!(expanded.terms[..plain.terms.len()], plain.terms[..]);
        assert_eq!(
            expanded.terms[plain.terms.len()..],
            ["france", "germany", "spain"]
        );

        let euro = parse_topic("<inex_topic><title>Euro</title></inex_topic>").unwrap();
        assert_eq!(build_query(&euro, true).terms, vec!["euro"]);
    }

    #[test]
    fn unexpanded_query_ignores_examples() {
        let topic = parse_topic(EURO_TOPIC).unwrap();
        let mut other = topic.clone();
        other.examples.clear();
        assert_eq!(build_query(&topic, false), build_query(&other, false));
    }

    #[test]
    fn xml_round_trip() {
        let mut topic = parse_topic(EURO_TOPIC).unwrap();
        assert_eq!(parse_topic(&topic.to_xml()).unwrap(), topic);
        topic.id = "t<1>".into();
        topic.examples.push(ExampleEntity {
            id: None,
            name: "Monaco & co".into(),
        });
        assert_eq!(parse_topic(&topic.to_xml()).unwrap(), topic);
    }

    #[test]
    fn wrapper_with_ids() {
        let xml = format!(
            "<topics>{}{}</topics>",
            r#"<inex_topic id="A"><title>a</title></inex_topic>"#,
            r#"<inex_topic topic_id="B"><title>b</title></inex_topic>"#
        );
        let ids: Vec<String> = parse_topics(&xml, "w")
            .unwrap()
            .into_iter()
            .map(|t| t.unwrap().id)
            .collect();
        assert_eq!(ids, vec!["A", "B"]);
    }

    #[test]
    fn example_pages_prefer_ids_then_titles() {
        let corpus = crate::corpus::parse_sources(&[crate::corpus::Source::new(
            "c",
            r#"<corpus><page id="5"><title>Monaco</title></page><page id="6"><title>France</title></page></corpus>"#,
        )])
        .unwrap()
        .0;
        let topic = Topic {
            id: "t".into(),
            title: "x".into(),
            description: String::new(),
            narrative: String::new(),
            examples: vec![
                ExampleEntity {
                    id: PageId::new(10581),
                    name: "France".into(),
                },
                ExampleEntity {
                    id: None,
                    name: "monaco".into(),
                },
                ExampleEntity {
                    id: None,
                    name: "Atlantis".into(),
                },
            ],
            target_categories: vec![],
        };
        let pages: Vec<u32> = topic
            .example_pages(&corpus)
            .iter()
            .map(|p| p.get())
            .collect();
        assert_eq!(pages, vec![5, 10581]);
    }

    #[test]
    fn load_assigns_ids_from_file_names() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("euro.xml"), EURO_TOPIC).unwrap();
        std::fs::write(
            dir.path().join("many.xml"),
            "<topics><inex_topic><title>a</title></inex_topic><inex_topic><title>b</title></inex_topic></topics>",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("broken.xml"),
            "<inex_topic><title>a</inex_topic>",
        )
        .unwrap();
        let files = load_topics(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        assert!(files[0].topics.is_err());
        let euro = files[1].topics.as_ref().unwrap();
        assert_eq!(euro[0].as_ref().unwrap().id, "euro");
        let many: Vec<String> = files[2]
            .topics
            .as_ref()
            .unwrap()
            .iter()
            .map(|t| t.as_ref().unwrap().id.clone())
            .collect();
        assert_eq!(many, vec!["many.1", "many.2"]);
    }
}
