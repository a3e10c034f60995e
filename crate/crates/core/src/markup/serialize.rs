use crate::rdf::{Datatype, Literal};

use super::{classify_bare, is_identifier, AnnotationKind, AnnotationNode, PageSource, ParsedPage, Value};

/// Renders a parsed page in canonical form.
///
/// Free text is copied verbatim. Blocks are written as
/// `{{#ann: k=v|k=v}}` / `{{#rel: Name|k=v}}`: no spaces around `|` or `=`,
/// one space after the directive colon, string literals quoted. The value
/// of the reserved `type` key stays bare when it is a plain identifier, and
/// non-string literals stay bare whenever the bare form reads back as the
/// same datatype.
pub fn serialize_page(parsed: &ParsedPage) -> PageSource {
    let mut pieces: Vec<(usize, String)> = parsed
        .plain_segments
        .iter()
        .map(|s| (s.span.start, s.text.clone()))
        .collect();
    pieces.extend(parsed.annotations.iter().map(|a| {
        let mut out = String::new();
        write_node(&mut out, a);
        (a.span.start, out)
    }));
    pieces.sort_by_key(|(at, _)| *at);
    PageSource {
        namespace: parsed.source.namespace.clone(),
        title: parsed.source.title.clone(),
        text: pieces.into_iter().map(|(_, s)| s).collect(),
    }
}

pub(crate) fn write_node(out: &mut String, node: &AnnotationNode) {
    match node.kind {
        AnnotationKind::Simple => out.push_str("{{#ann: "),
        AnnotationKind::NAry => {
            out.push_str("{{#rel: ");
            out.push_str(node.relation.as_deref().unwrap_or_default());
        }
    }
    for (i, pair) in node.pairs.iter().enumerate() {
        if i > 0 || node.kind == AnnotationKind::NAry {
            out.push('|');
        }
        out.push_str(&pair.key);
        out.push('=');
        write_value(out, &pair.key, &pair.value);
    }
    out.push_str("}}");
}

fn write_value(out: &mut String, key: &str, value: &Value) {
    match value {
        Value::Literal(lit) => write_literal(out, key, lit),
        Value::PageRef(title) => {
            out.push_str("[[");
            out.push_str(title);
            out.push_str("]]");
        }
        Value::Nested(node) => write_node(out, node),
    }
}

fn write_literal(out: &mut String, key: &str, lit: &Literal) {
    let lexical = lit.lexical();
    let bare = match lit.datatype() {
        Datatype::String => key == "type" && is_identifier(lexical) && classify_bare(lexical) == Datatype::String,
        dt => classify_bare(lexical) == dt,
    };
    if bare {
        out.push_str(lexical);
        return;
    }
    out.push('"');
    for c in lexical.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    if lit.datatype() != Datatype::String {
        out.push_str("^^");
        out.push_str(lit.datatype().name());
    }
}

/// The page's free text with every annotation block removed.
///
/// Whitespace touching a removed block is dropped, and the text on either
/// side is rejoined with a single space.
pub fn strip_annotations(parsed: &ParsedPage) -> String {
    if parsed.annotations.is_empty() {
        return parsed.plain_segments.iter().map(|s| s.text.as_str()).collect();
    }
    let block_edges: Vec<(usize, usize)> = parsed.annotations.iter().map(|a| (a.span.start, a.span.end)).collect();
    let touches_block_at = |offset: usize, before: bool| {
        block_edges
            .iter()
            .any(|&(start, end)| if before { end == offset } else { start == offset })
    };

    let mut kept = Vec::new();
    for seg in &parsed.plain_segments {
        let mut text = seg.text.as_str();
        if touches_block_at(seg.span.start, true) {
            text = text.trim_start();
        }
        if touches_block_at(seg.span.end, false) {
            text = text.trim_end();
        }
        if !text.is_empty() {
            kept.push(text);
        }
    }
    kept.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::parse_page;

    fn canon(text: &str) -> String {
        serialize_page(&parse_page(&PageSource::main("T", text).unwrap()).unwrap()).text
    }

    fn strip(text: &str) -> String {
        strip_annotations(&parse_page(&PageSource::main("T", text).unwrap()).unwrap())
    }

    #[test]
    fn canonicalizes_spacing() {
        assert_eq!(canon("{{#ann:  type = Church }}"), "{{#ann: type=Church}}");
        assert_eq!(
            canon(r#"{{#rel: Dating | method="C14" | date={{#ann: year=850 | certainty="high"}} }}"#),
            r#"{{#rel: Dating|method="C14"|date={{#ann: year=850|certainty="high"}}}}"#
        );
    }

    #[test]
    fn quotes_strings_but_not_typed_bare_values() {
        assert_eq!(
            canon(r#"{{#ann: name=St Martin | n="5"^^decimal | d="2020-01-01"^^date | s="12" | type="Not an id"}}"#),
            r#"{{#ann: name="St Martin"|n="5"^^decimal|d=2020-01-01|s="12"|type="Not an id"}}"#
        );
        assert_eq!(canon("{{#ann: type=true}}"), "{{#ann: type=true}}");
        assert_eq!(canon(r#"{{#ann: type="true"}}"#), r#"{{#ann: type="true"}}"#);
    }

    #[test]
    fn canonical_input_is_a_fixpoint() {
        let c = r#"Intro {{#ann: type=Church|height=12.5|ref=[[Other Page]]}} tail"#;
        assert_eq!(canon(c), c);
        assert_eq!(canon(&canon(c)), canon(c));
    }

    #[test]
    fn plain_text_is_identity() {
        assert_eq!(canon("just {text} }} here\n"), "just {text} }} here\n");
    }

    #[test]
    fn strip_examples() {
        assert_eq!(strip("A {{#ann: x=1}} B"), "A B");
        assert_eq!(strip("no  annotations\n"), "no  annotations\n");
        assert_eq!(strip("{{#ann: x=1}}"), "");
        assert_eq!(strip("{ {{#ann: x=1}}{#"), "{ {#");
        assert_eq!(strip("{{{#ann: x=1}}{#"), "{ {#");
        assert_eq!(strip("x\n{{#ann: a=1}}\n \n{{#ann: b=2}}\ny"), "x y");
    }
}
