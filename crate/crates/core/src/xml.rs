//! Thin owned-event layer over `quick_xml` shared by the corpus and topic parsers.

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
    },
    End {
        name: String,
    },
    Text(String),
}

pub(crate) struct Events<'a> {
    reader: Reader<&'a [u8]>,
    source_name: &'a str,
    depth: usize,
    finished: bool,
}

impl<'a> Events<'a> {
    pub(crate) fn new(text: &'a str, source_name: &'a str) -> Self {
        let mut reader = Reader::from_str(text);
        let config = reader.config_mut();
        config.expand_empty_elements = true;
        config.check_end_names = true;
        Self {
            reader,
            source_name,
            depth: 0,
            finished: false,
        }
    }

    /// Byte offset just past the last event read.
    pub(crate) fn offset(&self) -> u64 {
        self.reader.buffer_position()
    }

    pub(crate) fn format_error(&self, message: impl Into<String>) -> Error {
        Error::Format {
            source_name: self.source_name.to_string(),
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn xml_error(&self, message: impl Into<String>) -> Error {
        Error::Xml {
            source_name: self.source_name.to_string(),
            offset: self.reader.error_position(),
            message: message.into(),
        }
    }

    /// Next structural event; `None` at end of input.
    pub(crate) fn next_node(&mut self) -> Result<Option<Node>> {
        if self.finished {
            return Ok(None);
        }
        loop {
            let event = self
                .reader
                .read_event()
                .map_err(|e| self.xml_error(e.to_string()))?;
            match event {
                Event::Start(start) => {
                    let name = start.name().as_ref().to_string();
                    let mut attrs = Vec::new();
                    for attr in start.attributes() {
                        let attr = attr.map_err(|e| self.xml_error(e.to_string()))?;
                        let key = attr.key.as_ref().to_string();
                        let value = attr
                            .normalized_value(quick_xml::XmlVersion::Implicit1_0)
                            .map_err(|e| self.xml_error(e.to_string()))?
                            .into_owned();
                        attrs.push((key, value));
                    }
                    self.depth += 1;
                    return Ok(Some(Node::Start { name, attrs }));
                }
                Event::End(end) => {
                    self.depth = self.depth.saturating_sub(1);
                    return Ok(Some(Node::End {
                        name: end.name().as_ref().to_string(),
                    }));
                }
                Event::Text(text) => {
                    let content = text.xml10_content();
                    if !content.is_empty() {
                        return Ok(Some(Node::Text(content.into_owned())));
                    }
                }
                Event::CData(data) => {
                    let content = data.xml10_content();
                    if !content.is_empty() {
                        return Ok(Some(Node::Text(content.into_owned())));
                    }
                }
                Event::GeneralRef(reference) => {
                    let resolved = match reference
                        .resolve_char_ref()
                        .map_err(|e| self.xml_error(e.to_string()))?
                    {
                        Some(ch) => ch.to_string(),
                        None => match reference.as_ref() {
                            "lt" => "<".to_string(),
                            "gt" => ">".to_string(),
                            "amp" => "&".to_string(),
                            "apos" => "'".to_string(),
                            "quot" => "\"".to_string(),
                            other => format!("&{other};"),
                        },
                    };
                    return Ok(Some(Node::Text(resolved)));
                }
                Event::Eof => {
                    self.finished = true;
                    if self.depth != 0 {
                        return Err(self.xml_error("unexpected end of input inside an element"));
                    }
                    return Ok(None);
                }
                Event::Empty(_)
                | Event::Comment(_)
                | Event::Decl(_)
                | Event::PI(_)
                | Event::DocType(_) => {}
            }
        }
    }

    /// Concatenated text of the element whose start tag was just read, consuming its end tag.
    pub(crate) fn element_text(&mut self) -> Result<String> {
        let mut out = String::new();
        let mut depth = 1usize;
        while let Some(node) = self.next_node()? {
            match node {
                Node::Start { .. } => depth += 1,
                Node::End { .. } => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(out);
                    }
                }
                Node::Text(t) => out.push_str(&t),
            }
        }
        Err(self.xml_error("unexpected end of input inside an element"))
    }

    /// Skips the remainder of the element whose start tag was just read.
    pub(crate) fn skip_element(&mut self) -> Result<()> {
        self.element_text().map(|_| ())
    }
}

pub(crate) fn attr<'a>(attrs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    attrs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

pub(crate) fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
