use crate::rdf::{Datatype, Literal};

use super::{
    classify_bare, validate_title, AnnotationKind, AnnotationNode, DiagnosticKind, PageSource,
    Pair, ParseDiagnostic, ParsedPage, PlainSegment, Span, Value,
};

/// Deepest permitted annotation nesting; a top-level block has depth 1.
pub const MAX_DEPTH: usize = 8;

const OPEN: &str = "{{#";
const CLOSE: &str = "}}";

/// Parses raw bytes. Invalid UTF-8 yields a single diagnostic.
pub fn parse_bytes(namespace: &str, title: &str, bytes: &[u8]) -> Result<ParsedPage, Vec<ParseDiagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_page(&PageSource {
            namespace: namespace.to_owned(),
            title: title.to_owned(),
            text: text.to_owned(),
        }),
        Err(e) => {
            let at = e.valid_up_to();
            Err(vec![ParseDiagnostic {
                kind: DiagnosticKind::InvalidUtf8,
                span: Span::new(at, at + e.error_len().unwrap_or(bytes.len() - at)),
                message: "text is not valid UTF-8".into(),
            }])
        }
    }
}

/// Splits a page into free-text segments and annotation trees.
///
/// Every `{{#` starts a directive. A malformed block produces a diagnostic
/// and parsing resumes after its balanced `}}`, so later blocks are still
/// checked.
pub fn parse_page(source: &PageSource) -> Result<ParsedPage, Vec<ParseDiagnostic>> {
    let text = source.text.as_str();
    let mut diagnostics = Vec::new();
    if let Some(at) = text.find('\0') {
        diagnostics.push(ParseDiagnostic {
            kind: DiagnosticKind::InvalidCharacter,
            span: Span::new(at, at + 1),
            message: "NUL byte in page text".into(),
        });
    }

    let mut annotations = Vec::new();
    let mut plain_segments = Vec::new();
    let mut segment_start = 0;
    let mut cursor = 0;

    while let Some(rel) = text[cursor..].find(OPEN) {
        let start = cursor + rel;
        let mut parser = BlockParser { src: text, pos: start };
        match parser.block(1) {
            Ok(node) => {
                if segment_start < start {
                    plain_segments.push(PlainSegment {
                        span: Span::new(segment_start, start),
                        text: text[segment_start..start].to_owned(),
                    });
                }
                cursor = node.span.end;
                segment_start = cursor;
                annotations.push(node);
            }
            Err(diag) => {
                let unterminated = diag.kind == DiagnosticKind::UnterminatedBlock;
                diagnostics.push(diag);
                match balanced_end(text, start) {
                    Some(end) if !unterminated => {
                        cursor = end;
                        segment_start = end;
                    }
                    Some(_) | None => {
                        if !unterminated {
                            diagnostics.push(unterminated_at(text, start));
                        }
                        break;
                    }
                }
            }
        }
    }

    if !diagnostics.is_empty() {
        return Err(diagnostics);
    }
    if segment_start < text.len() {
        plain_segments.push(PlainSegment {
            span: Span::new(segment_start, text.len()),
            text: text[segment_start..].to_owned(),
        });
    }
    Ok(ParsedPage { source: source.clone(), annotations, plain_segments })
}

fn unterminated_at(text: &str, start: usize) -> ParseDiagnostic {
    ParseDiagnostic {
        kind: DiagnosticKind::UnterminatedBlock,
        span: Span::new(start, text.len()),
        message: "annotation block is never closed with '}}'".into(),
    }
}

/// Position just past the `}}` that balances the `{{` at `start`.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut i = start;
    while i + 1 < bytes.len() {
        if bytes[i] == b'{' && bytes[i + 1] == b'{' {
            depth += 1;
            i += 2;
        } else if bytes[i] == b'}' && bytes[i + 1] == b'}' {
            depth -= 1;
            i += 2;
            if depth == 0 {
                return Some(i);
            }
        } else {
            i += 1;
        }
    }
    None
}

type ParseResult<T> = Result<T, ParseDiagnostic>;

struct BlockParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> BlockParser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn identifier(&mut self) -> Option<&'a str> {
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_alphanumeric() || c == '_') || (i == 0 && c.is_ascii_digit()))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            None
        } else {
            self.pos += len;
            Some(&rest[..len])
        }
    }

    fn error(&self, kind: DiagnosticKind, start: usize, message: impl Into<String>) -> ParseDiagnostic {
        let end = self.src[start..].chars().next().map_or(start, |c| start + c.len_utf8());
        ParseDiagnostic { kind, span: Span::new(start, end), message: message.into() }
    }

    fn unterminated(&self, block_start: usize) -> ParseDiagnostic {
        unterminated_at(self.src, block_start)
    }

    /// Parses one `{{#…}}` block starting at `self.pos`.
    fn block(&mut self, depth: usize) -> ParseResult<AnnotationNode> {
        let start = self.pos;
        if depth > MAX_DEPTH {
            return Err(ParseDiagnostic {
                kind: DiagnosticKind::NestingTooDeep,
                span: Span::new(start, start + OPEN.len()),
                message: format!("annotations nest deeper than {MAX_DEPTH} levels"),
            });
        }
        self.pos += OPEN.len();
        let name_start = self.pos;
        let name = self.identifier().unwrap_or("");
        let kind = match name {
            "ann" => AnnotationKind::Simple,
            "rel" => AnnotationKind::NAry,
            other => {
                return Err(ParseDiagnostic {
                    kind: DiagnosticKind::UnknownDirective,
                    span: Span::new(start, name_start + other.len()),
                    message: format!("unknown directive '{{{{#{other}'"),
                });
            }
        };
        if !self.eat(":") {
            if self.at_end() {
                return Err(self.unterminated(start));
            }
            return Err(self.error(DiagnosticKind::Syntax, self.pos, format!("expected ':' after '{{{{#{name}'")));
        }
        self.skip_ws();

        let relation = if kind == AnnotationKind::NAry {
            let rel_start = self.pos;
            match self.identifier() {
                Some(r) => Some(r.to_owned()),
                None if self.at_end() => return Err(self.unterminated(start)),
                None => return Err(self.error(DiagnosticKind::Syntax, rel_start, "expected a relation name")),
            }
        } else {
            None
        };

        let mut pairs = Vec::new();
        loop {
            self.skip_ws();
            if self.at_end() {
                return Err(self.unterminated(start));
            }
            let expect_pair = match kind {
                AnnotationKind::Simple => pairs.is_empty(),
                AnnotationKind::NAry => false,
            };
            if !expect_pair && self.eat(CLOSE) {
                break;
            }
            if !expect_pair {
                if !self.eat("|") {
                    let what = if kind == AnnotationKind::NAry && pairs.is_empty() {
                        "expected '|' after the relation name"
                    } else {
                        "expected '|' or '}}'"
                    };
                    return Err(self.error(DiagnosticKind::Syntax, self.pos, what));
                }
                self.skip_ws();
            }
            pairs.push(self.pair(start, depth)?);
        }

        if pairs.is_empty() {
            return Err(ParseDiagnostic {
                kind: DiagnosticKind::MissingKey,
                span: Span::new(start, self.pos),
                message: "an n-ary relation needs at least one role".into(),
            });
        }
        Ok(AnnotationNode { kind, relation, pairs, span: Span::new(start, self.pos) })
    }

    fn pair(&mut self, block_start: usize, depth: usize) -> ParseResult<Pair> {
        let start = self.pos;
        if self.at_end() {
            return Err(self.unterminated(block_start));
        }
        let Some(key) = self.identifier() else {
            return Err(self.error(DiagnosticKind::MissingKey, start, "expected a key before '='"));
        };
        self.skip_ws();
        if !self.eat("=") {
            if self.at_end() {
                return Err(self.unterminated(block_start));
            }
            return Err(self.error(DiagnosticKind::Syntax, self.pos, format!("expected '=' after key '{key}'")));
        }
        self.skip_ws();
        let value = self.value(block_start, depth)?;
        Ok(Pair { key: key.to_owned(), value, span: Span::new(start, self.pos) })
    }

    fn value(&mut self, block_start: usize, depth: usize) -> ParseResult<Value> {
        let start = self.pos;
        let rest = self.rest();
        if rest.is_empty() {
            return Err(self.unterminated(block_start));
        }
        if rest.starts_with(OPEN) {
            return self.block(depth + 1).map(|n| Value::Nested(Box::new(n)));
        }
        if rest.starts_with('"') {
            return self.quoted(block_start);
        }
        if let Some(inner) = rest.strip_prefix("[[") {
            let Some(close) = inner.find("]]") else {
                return Err(self.error(DiagnosticKind::Syntax, start, "page reference is missing ']]'"));
            };
            let title = &inner[..close];
            if title.contains('|') || title.contains("}}") || title.contains("{{") {
                return Err(self.error(DiagnosticKind::Syntax, start, "page reference is missing ']]'"));
            }
            let title = title.trim();
            if validate_title(title).is_err() {
                return Err(self.error(DiagnosticKind::Syntax, start, format!("invalid page title {title:?}")));
            }
            self.pos += 2 + close + 2;
            return Ok(Value::PageRef(title.to_owned()));
        }

        // bare token: up to the next delimiter, trailing whitespace trimmed
        let len = ["|", "}}", "{{", "[[", "\""]
            .iter()
            .filter_map(|d| rest.find(d))
            .min()
            .unwrap_or(rest.len());
        let token = rest[..len].trim_end();
        if token.is_empty() {
            return Err(self.error(DiagnosticKind::Syntax, start, "expected a value"));
        }
        self.pos += token.len();
        let datatype = classify_bare(token);
        Literal::new(token, datatype).map(Value::Literal).map_err(|_| ParseDiagnostic {
            kind: DiagnosticKind::BadDatatypeLexical,
            span: Span::new(start, self.pos),
            message: format!("{token:?} is not a valid {datatype}"),
        })
    }

    fn quoted(&mut self, block_start: usize) -> ParseResult<Value> {
        let start = self.pos;
        self.pos += 1;
        let mut lexical = String::new();
        loop {
            let Some(c) = self.rest().chars().next() else {
                return Err(self.unterminated(block_start));
            };
            self.pos += c.len_utf8();
            match c {
                '"' => break,
                '\\' => match self.rest().chars().next() {
                    Some(e @ ('"' | '\\')) => {
                        lexical.push(e);
                        self.pos += 1;
                    }
                    Some(_) => {
                        return Err(self.error(DiagnosticKind::Syntax, self.pos - 1, "only \\\" and \\\\ escapes are allowed"))
                    }
                    None => return Err(self.unterminated(block_start)),
                },
                c => lexical.push(c),
            }
        }

        let mut datatype = Datatype::String;
        if self.eat("^^") {
            let dt_start = self.pos;
            let name = self.identifier().unwrap_or("");
            datatype = Datatype::from_name(name).ok_or_else(|| {
                self.error(DiagnosticKind::BadDatatypeLexical, dt_start, format!("unknown datatype {name:?}"))
            })?;
        }
        Literal::new(lexical, datatype).map(Value::Literal).map_err(|e| ParseDiagnostic {
            kind: DiagnosticKind::BadDatatypeLexical,
            span: Span::new(start, self.pos),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::PageSource;

    fn parse(text: &str) -> Result<ParsedPage, Vec<ParseDiagnostic>> {
        parse_page(&PageSource::main("T", text).unwrap())
    }

    fn kinds(text: &str) -> Vec<DiagnosticKind> {
        parse(text).unwrap_err().into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn simple_block_with_free_text() {
        let p = parse("St-Martin is a church. {{#ann: type=Church | height=12.5}}").unwrap();
        assert_eq!(p.annotations.len(), 1);
        assert_eq!(p.plain_segments.len(), 1);
        let node = &p.annotations[0];
        assert_eq!(node.kind, AnnotationKind::Simple);
        assert_eq!(node.pairs[0].key, "type");
        assert_eq!(node.pairs[0].value, Value::Literal(Literal::string("Church")));
        assert_eq!(node.pairs[1].key, "height");
        assert_eq!(
            node.pairs[1].value,
            Value::Literal(Literal::new("12.5", Datatype::Decimal).unwrap())
        );
        assert_eq!(node.span, Span::new(23, p.source.text.len()));
    }

    #[test]
    fn empty_page() {
        let p = parse("").unwrap();
        assert!(p.annotations.is_empty());
        assert!(p.plain_segments.is_empty());
    }

    #[test]
    fn nested_relation() {
        let p = parse(r#"{{#rel: Dating | method="C14" | date={{#ann: year=850 | certainty="high"}} }}"#).unwrap();
        assert_eq!(p.annotations.len(), 1);
        let node = &p.annotations[0];
        assert_eq!(node.kind, AnnotationKind::NAry);
        assert_eq!(node.relation.as_deref(), Some("Dating"));
        assert_eq!(node.pairs.len(), 2);
        let Value::Nested(inner) = &node.pairs[1].value else { panic!("expected nested") };
        assert_eq!(inner.pairs.len(), 2);
        assert!(node.span.contains(&inner.span));
        assert_eq!(
            inner.pairs[0].value,
            Value::Literal(Literal::new("850", Datatype::Integer).unwrap())
        );
    }

    #[test]
    fn unterminated_block_reported_at_start() {
        let diags = parse("{{#ann: x=1").unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::UnterminatedBlock);
        assert_eq!(diags[0].offset(), 0);
    }

    #[test]
    fn value_kinds() {
        let p = parse(r#"{{#ann: a=-3 | b=true | c=2020-01-31 | d=[[St Martin]] | e="x"^^integer | f=hello world}}"#);
        let diags = p.unwrap_err();
        assert_eq!(diags[0].kind, DiagnosticKind::BadDatatypeLexical);

        let p = parse(r#"{{#ann: a=-3 | b=true | c=2020-01-31 | d=[[St Martin]] | e="7"^^integer | f=hello world}}"#)
            .unwrap();
        let values: Vec<_> = p.annotations[0].pairs.iter().map(|p| p.value.clone()).collect();
        assert_eq!(values[0], Value::Literal(Literal::new("-3", Datatype::Integer).unwrap()));
        assert_eq!(values[1], Value::Literal(Literal::new("true", Datatype::Boolean).unwrap()));
        assert_eq!(values[2], Value::Literal(Literal::new("2020-01-31", Datatype::Date).unwrap()));
        assert_eq!(values[3], Value::PageRef("St Martin".into()));
        assert_eq!(values[4], Value::Literal(Literal::new("7", Datatype::Integer).unwrap()));
        assert_eq!(values[5], Value::Literal(Literal::string("hello world")));
    }

    #[test]
    fn invalid_date_is_bad_lexical() {
        assert_eq!(kinds("{{#ann: d=2023-02-30}}"), vec![DiagnosticKind::BadDatatypeLexical]);
    }

    #[test]
    fn escapes_in_strings() {
        let p = parse(r#"{{#ann: q="a \"b\" \\ c"}}"#).unwrap();
        assert_eq!(p.annotations[0].pairs[0].value, Value::Literal(Literal::string(r#"a "b" \ c"#)));
        assert_eq!(kinds(r#"{{#ann: q="a\n"}}"#), vec![DiagnosticKind::Syntax]);
    }

    #[test]
    fn error_kinds() {
        assert_eq!(kinds("{{#foo: x=1}}"), vec![DiagnosticKind::UnknownDirective]);
        assert_eq!(kinds("{{#ann: =1}}"), vec![DiagnosticKind::MissingKey]);
        assert_eq!(kinds("{{#ann: }}"), vec![DiagnosticKind::MissingKey]);
        assert_eq!(kinds("{{#ann: x=1 |}}"), vec![DiagnosticKind::MissingKey]);
        assert_eq!(kinds("{{#rel: Dating}}"), vec![DiagnosticKind::MissingKey]);
        assert_eq!(kinds("{{#ann: x}}"), vec![DiagnosticKind::Syntax]);
        assert_eq!(kinds("{{#ann: 1x=2}}"), vec![DiagnosticKind::MissingKey]);
    }

    #[test]
    fn nesting_limit() {
        let mut text = String::from("x=1");
        for _ in 0..MAX_DEPTH {
            text = format!("{{{{#ann: k={text}}}}}");
        }
        assert!(parse(&text).is_ok());
        let too_deep = format!("{{{{#ann: k={text}}}}}");
        assert_eq!(kinds(&too_deep), vec![DiagnosticKind::NestingTooDeep]);
    }

    #[test]
    fn recovery_reports_every_bad_block() {
        let diags = parse("a {{#foo: x}} b {{#ann: =2}} c {{#ann: ok=1}} d {{#ann: y").unwrap_err();
        let kinds: Vec<_> = diags.iter().map(|d| d.kind).collect();
        assert_eq!(
            kinds,
            vec![DiagnosticKind::UnknownDirective, DiagnosticKind::MissingKey, DiagnosticKind::UnterminatedBlock]
        );
        assert_eq!(diags[2].offset(), 48);
    }

    #[test]
    fn invalid_utf8_is_one_diagnostic() {
        let diags = parse_bytes("Main", "T", &[b'a', 0xff, 0xfe, b'{']).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::InvalidUtf8);
        assert_eq!(diags[0].offset(), 1);
    }

    #[test]
    fn braces_in_free_text_are_plain() {
        let p = parse("{{template}} and }} {x} {{{#ann: a=1}}}").unwrap();
        assert_eq!(p.annotations.len(), 1);
        assert_eq!(p.plain_segments[0].text, "{{template}} and }} {x} {");
        assert_eq!(p.plain_segments[1].text, "}");
    }

    #[test]
    fn partition_is_exact() {
        let text = "A {{#ann: x=1}}{{#ann: y=2}} B";
        let p = parse(text).unwrap();
        let mut spans: Vec<Span> = p.annotations.iter().map(|a| a.span).collect();
        spans.extend(p.plain_segments.iter().map(|s| s.span));
        spans.sort();
        let mut at = 0;
        for s in spans {
            assert_eq!(s.start, at);
            at = s.end;
        }
        assert_eq!(at, text.len());
    }
}
