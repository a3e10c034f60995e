//! Random annotated pages, their canonical text, and a quad-count oracle
//! that works on the generated tree rather than on parser output.

use proptest::collection::vec;
use proptest::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub enum GenValue {
    Str(String),
    Int(i64),
    Dec(String),
    Bool(bool),
    Date(String),
    Ref(String),
    Class(String),
    Nested(GenNode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenNode {
    /// `None` for a simple annotation, the relation name for an n-ary one.
    pub relation: Option<String>,
    pub pairs: Vec<(String, GenValue)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenPiece {
    Text(String),
    Block(GenNode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenPage {
    pub title: String,
    pub pieces: Vec<GenPiece>,
}

fn key() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9_]{0,7}".prop_filter("reserved", |k| k != "type")
}

fn class_name() -> impl Strategy<Value = String> {
    "[A-Z][a-z]{0,6}"
}

fn title() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Z][a-z]{1,8}( [A-Z][a-z]{1,6})?",
        "(Site|Help|Talk):[A-Z][a-z]{1,8}",
    ]
}

fn leaf() -> impl Strategy<Value = GenValue> {
    prop_oneof![
        r#"[a-zA-Z0-9 .,;:!?'()|={}\\"-]{0,16}"#.prop_map(GenValue::Str),
        any::<i32>().prop_map(|n| GenValue::Int(n.into())),
        (-9999i32..9999, 0u32..1000).prop_map(|(i, f)| GenValue::Dec(format!("{i}.{f}"))),
        any::<bool>().prop_map(GenValue::Bool),
        (1000u32..2999, 1u32..=12, 1u32..=28).prop_map(|(y, m, d)| GenValue::Date(format!("{y}-{m:02}-{d:02}"))),
        title().prop_map(GenValue::Ref),
    ]
}

/// Annotation trees of at most `depth` levels.
pub fn node(depth: usize) -> BoxedStrategy<GenNode> {
    let value: BoxedStrategy<GenValue> = if depth <= 1 {
        leaf().boxed()
    } else {
        prop_oneof![5 => leaf(), 1 => node(depth - 1).prop_map(GenValue::Nested)].boxed()
    };
    let pairs = vec((key().boxed(), value), 1..5).boxed();
    let typed = proptest::option::weighted(0.3, class_name());
    prop_oneof![
        (typed, pairs.clone()).prop_map(|(ty, mut pairs)| {
            if let Some(c) = ty {
                pairs.insert(0, ("type".to_owned(), GenValue::Class(c)));
            }
            GenNode { relation: None, pairs }
        }),
        (class_name(), pairs).prop_map(|(r, pairs)| GenNode { relation: Some(r), pairs }),
    ]
    .boxed()
}

/// Free text: anything without braces, so it never opens a block.
fn free_text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 .,;:!?'\"|=\\[\\]\n-]{0,40}"
}

/// Pages whose annotation trees are at most `depth` levels deep.
pub fn page(depth: usize) -> impl Strategy<Value = GenPage> {
    let piece = prop_oneof![free_text().prop_map(GenPiece::Text), node(depth).prop_map(GenPiece::Block)];
    (title().prop_filter("main namespace", |t| !t.contains(':')), vec(piece, 0..6))
        .prop_map(|(title, pieces)| GenPage { title, pieces })
}

fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}

fn write_node(out: &mut String, node: &GenNode) {
    match &node.relation {
        None => out.push_str("{{#ann: "),
        Some(r) => {
            out.push_str("{{#rel: ");
            out.push_str(r);
            out.push('|');
        }
    }
    for (i, (k, v)) in node.pairs.iter().enumerate() {
        if i > 0 {
            out.push('|');
        }
        out.push_str(k);
        out.push('=');
        match v {
            GenValue::Str(s) => write_string(out, s),
            GenValue::Int(n) => out.push_str(&n.to_string()),
            GenValue::Dec(d) | GenValue::Date(d) | GenValue::Class(d) => out.push_str(d),
            GenValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            GenValue::Ref(t) => {
                out.push_str("[[");
                out.push_str(t);
                out.push_str("]]");
            }
            GenValue::Nested(n) => write_node(out, n),
        }
    }
    out.push_str("}}");
}

/// Canonical wikitext for a node.
pub fn render_node(node: &GenNode) -> String {
    let mut out = String::new();
    write_node(&mut out, node);
    out
}

/// Canonical wikitext for a page.
pub fn render_page(page: &GenPage) -> String {
    let mut out = String::new();
    for p in &page.pieces {
        match p {
            GenPiece::Text(t) => out.push_str(t),
            GenPiece::Block(n) => write_node(&mut out, n),
        }
    }
    out
}

impl GenNode {
    pub fn depth(&self) -> usize {
        1 + self
            .pairs
            .iter()
            .filter_map(|(_, v)| match v {
                GenValue::Nested(n) => Some(n.depth()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

fn nested_below(node: &GenNode) -> usize {
    node.pairs
        .iter()
        .map(|(_, v)| match v {
            GenValue::Nested(n) => count_nested(n),
            _ => 0,
        })
        .sum()
}

/// A nested value: one quad per pair, one `clarifies` marker, one type
/// quad for a relation, plus whatever nests further down. The quad linking
/// it to its parent belongs to the parent's pair count.
fn count_nested(node: &GenNode) -> usize {
    let own = node.pairs.len() + 1 + usize::from(node.relation.is_some());
    own + nested_below(node)
}

/// Quads for one top-level block: k for a simple block with k pairs, r+2
/// for a relation with r roles (link and type), plus nested values.
pub fn count_block(node: &GenNode) -> usize {
    let own = match node.relation {
        None => node.pairs.len(),
        Some(_) => node.pairs.len() + 2,
    };
    own + nested_below(node)
}

/// Expected annotation and provenance quads for a page.
pub fn expected_quads(page: &GenPage) -> (usize, usize) {
    let blocks: Vec<&GenNode> = page
        .pieces
        .iter()
        .filter_map(|p| match p {
            GenPiece::Block(n) => Some(n),
            GenPiece::Text(_) => None,
        })
        .collect();
    let annotation = blocks.iter().map(|n| count_block(n)).sum();
    (annotation, if blocks.is_empty() { 0 } else { 4 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_small_trees() {
        let leaf = |k: &str| (k.to_owned(), GenValue::Int(1));
        let inner = GenNode { relation: None, pairs: vec![leaf("a"), leaf("b")] };
        let top = GenNode { relation: None, pairs: vec![leaf("x"), ("y".into(), GenValue::Nested(inner))] };
        assert_eq!(count_block(&top), 2 + 3);
        let rel = GenNode { relation: Some("R".into()), pairs: vec![leaf("a")] };
        assert_eq!(count_block(&rel), 3);
        assert_eq!(render_node(&rel), "{{#rel: R|a=1}}");
    }
}
