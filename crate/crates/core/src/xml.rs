//! Minimal element tree over quick-xml, plus a tiny pretty writer.
//!
//! The warehouse documents carry all their content in attributes, so text
//! nodes are rejected except for whitespace.

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::{Error, Location, Result};

#[derive(Debug, Clone)]
pub(crate) struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Element>,
    pub location: Location,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn required(&self, name: &str) -> Result<&str> {
        self.attr(name).ok_or_else(|| {
            Error::parse(
                self.location.clone(),
                format!("<{}> is missing required attribute `{}`", self.name, name),
            )
        })
    }

    /// Rejects attributes outside `allowed`.
    pub fn expect_attrs(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.attrs {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::parse(
                    self.location.clone(),
                    format!("unexpected attribute `{}` on <{}>", k, self.name),
                ));
            }
        }
        Ok(())
    }

    pub fn unknown_child(&self, child: &Element) -> Error {
        Error::parse(
            child.location.clone(),
            format!("unknown element <{}> inside <{}>", child.name, self.name),
        )
    }
}

/// Byte offset to 1-based line/column through a table of line starts.
struct Lines<'a> {
    text: &'a str,
    starts: Vec<usize>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let starts = std::iter::once(0).chain(text.match_indices('\n').map(|(i, _)| i + 1)).collect();
        Lines { text, starts }
    }

    fn locate(&self, offset: usize) -> Location {
        let offset = offset.min(self.text.len());
        let line = self.starts.partition_point(|&s| s <= offset);
        let column = self.text[self.starts[line - 1]..offset].len() + 1;
        Location::at(line, column)
    }
}

/// Repairs a leading `<?xml ... ">` declaration that lacks its `?>` terminator.
fn repair_prologue(text: &str) -> std::borrow::Cow<'_, str> {
    let trimmed = text.trim_start();
    if !trimmed.starts_with("<?xml") {
        return text.into();
    }
    let start = text.len() - trimmed.len();
    match trimmed.find('>') {
        Some(end) if !trimmed[..end].ends_with('?') => {
            let mut fixed = String::with_capacity(text.len() + 1);
            fixed.push_str(&text[..start + end]);
            fixed.push('?');
            fixed.push_str(&text[start + end..]);
            fixed.into()
        }
        _ => text.into(),
    }
}

fn start_element(lines: &Lines<'_>, pos: usize, e: &BytesStart<'_>) -> Result<Element> {
    // Trimmed whitespace before the tag is not reported as an event.
    let pos = lines.text[pos..].find('<').map_or(pos, |i| pos + i);
    let location = lines.locate(pos);
    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
    let mut attrs: Vec<(String, String)> = Vec::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| Error::parse(location.clone(), err.to_string()))?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|err| Error::parse(location.clone(), err.to_string()))?
            .into_owned();
        if attrs.iter().any(|(k, _)| *k == key) {
            return Err(Error::parse(
                location,
                format!("duplicate attribute `{}` on <{}>", key, name),
            ));
        }
        attrs.push((key, value));
    }
    Ok(Element {
        name,
        attrs,
        children: Vec::new(),
        location,
    })
}

pub(crate) fn parse(text: &str) -> Result<Element> {
    let text = repair_prologue(text);
    let text = text.as_ref();
    let lines = Lines::new(text);
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;
    loop {
        let pos = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|err| Error::parse(lines.locate(reader.error_position() as usize), err.to_string()))?;
        match event {
            Event::Start(e) => {
                let el = start_element(&lines, pos, &e)?;
                if root.is_some() {
                    return Err(Error::parse(el.location, "content after the root element"));
                }
                stack.push(el);
            }
            Event::Empty(e) => {
                let el = start_element(&lines, pos, &e)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None if root.is_none() => root = Some(el),
                    None => return Err(Error::parse(el.location, "content after the root element")),
                }
            }
            Event::End(_) => {
                let el = stack.pop().expect("quick-xml checks end tags");
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::Text(t) => {
                let raw = String::from_utf8_lossy(t.as_ref()).into_owned();
                if !raw.trim().is_empty() {
                    return Err(Error::parse(
                        lines.locate(pos),
                        format!("unexpected text content `{}`", raw.trim()),
                    ));
                }
            }
            Event::CData(_) => {
                return Err(Error::parse(lines.locate(pos), "unexpected CDATA section"));
            }
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
        }
    }
    if let Some(open) = stack.pop() {
        return Err(Error::parse(
            open.location,
            format!("element <{}> is never closed", open.name),
        ));
    }
    root.ok_or_else(|| Error::parse(Location::at(1, 1), "document has no root element"))
}

pub(crate) const PROLOGUE: &str = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n";

/// Indented writer producing the layout used by the warehouse documents.
pub(crate) struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    pub fn new() -> Self {
        Writer {
            out: PROLOGUE.to_string(),
            depth: 0,
        }
    }

    fn open_tag(&mut self, name: &str, attrs: &[(&str, &str)]) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push('<');
        self.out.push_str(name);
        for (k, v) in attrs {
            self.out.push(' ');
            self.out.push_str(k);
            self.out.push_str("=\"");
            self.out.push_str(&quick_xml::escape::escape(*v));
            self.out.push('"');
        }
    }

    pub fn start(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.open_tag(name, attrs);
        self.out.push_str(">\n");
        self.depth += 1;
    }

    pub fn empty(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.open_tag(name, attrs);
        self.out.push_str(" />\n");
    }

    pub fn end(&mut self, name: &str) {
        self.depth -= 1;
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push_str("</");
        self.out.push_str(name);
        self.out.push_str(">\n");
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repairs_unterminated_declaration() {
        let root = parse("<?xml version=\"1.0\" encoding=\"utf-8\">\n<a x=\"1\"/>").unwrap();
        assert_eq!(root.name, "a");
        assert_eq!(root.attr("x"), Some("1"));
    }

    #[test]
    fn reports_unclosed_element_position() {
        let err = parse("<a>\n  <b>\n</a>").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn element_locations() {
        let root = parse("<a>\n  <b/>\n\n <c/></a>").unwrap();
        assert_eq!(root.location, Location::at(1, 1));
        assert_eq!(root.children[0].location, Location::at(2, 3));
        assert_eq!(root.children[1].location, Location::at(4, 2));
    }

    #[test]
    fn rejects_text_content() {
        let err = parse("<a>hello</a>").unwrap_err();
        assert!(err.to_string().contains("hello"));
    }

    #[test]
    fn escapes_attribute_values() {
        let mut w = Writer::new();
        w.empty("a", &[("v", "x<\"&")]);
        let text = w.finish();
        let root = parse(&text).unwrap();
        assert_eq!(root.attr("v"), Some("x<\"&"));
    }
}
