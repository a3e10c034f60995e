use thiserror::Error;

use crate::rdf::{Datatype, Literal, Quad, Term};

use super::QuadStore;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("N-Quads syntax error on line {line}: {message}")]
pub struct NQuadsError {
    pub line: usize,
    pub message: String,
}

pub(super) fn export(store: &QuadStore) -> String {
    let mut lines: Vec<[String; 4]> = store
        .iter()
        .map(|q| [&q.graph, &q.subject, &q.predicate, &q.object].map(Term::to_nquads))
        .collect();
    lines.sort_unstable();
    let mut out = String::new();
    for [g, s, p, o] in lines {
        for part in [s, p, o, g] {
            out.push_str(&part);
            out.push(' ');
        }
        out.push_str(".\n");
    }
    out
}

pub(super) fn parse(text: &str) -> Result<Vec<Quad>, NQuadsError> {
    let mut quads = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| NQuadsError { line: line_no, message };
        let mut lx = LineLexer { src: trimmed, pos: 0 };
        let subject = lx.term().map_err(err)?;
        let predicate = lx.term().map_err(err)?;
        let object = lx.term().map_err(err)?;
        let graph = lx.term().map_err(err)?;
        lx.skip_ws();
        if !lx.eat('.') {
            return Err(err("expected '.' after the graph term".into()));
        }
        lx.skip_ws();
        if !(lx.rest().is_empty() || lx.rest().starts_with('#')) {
            return Err(err(format!("unexpected trailing input {:?}", lx.rest())));
        }
        let quad = Quad::new(subject, predicate, object, graph).map_err(|e| err(e.to_string()))?;
        quads.push(quad);
    }
    Ok(quads)
}

struct LineLexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> LineLexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start_matches([' ', '\t']).len();
    }

    fn eat(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn term(&mut self) -> Result<Term, String> {
        self.skip_ws();
        let rest = self.rest();
        if rest.starts_with('<') {
            let iri = self.iri()?;
            Term::iri(iri).map_err(|e| e.to_string())
        } else if let Some(label) = rest.strip_prefix("_:") {
            let len = label
                .find(|c: char| c.is_whitespace())
                .unwrap_or(label.len());
            self.pos += 2 + len;
            Term::blank(&label[..len]).map_err(|e| e.to_string())
        } else if rest.starts_with('"') {
            self.literal()
        } else if rest.is_empty() {
            Err("unexpected end of line".into())
        } else {
            Err(format!("unexpected input {:?}", rest.chars().take(16).collect::<String>()))
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        let body = &self.rest()[1..];
        let Some(end) = body.find('>') else {
            return Err("unterminated IRI".into());
        };
        let iri = body[..end].to_owned();
        self.pos += end + 2;
        Ok(iri)
    }

    fn literal(&mut self) -> Result<Term, String> {
        self.pos += 1;
        let mut lexical = String::new();
        let mut chars = self.rest().char_indices();
        let consumed = loop {
            let Some((i, c)) = chars.next() else {
                return Err("unterminated literal".into());
            };
            match c {
                '"' => break i + 1,
                '\\' => {
                    let Some((_, e)) = chars.next() else {
                        return Err("unterminated escape".into());
                    };
                    match e {
                        't' => lexical.push('\t'),
                        'b' => lexical.push('\u{8}'),
                        'n' => lexical.push('\n'),
                        'r' => lexical.push('\r'),
                        'f' => lexical.push('\u{c}'),
                        '"' => lexical.push('"'),
                        '\'' => lexical.push('\''),
                        '\\' => lexical.push('\\'),
                        'u' | 'U' => {
                            let width = if e == 'u' { 4 } else { 8 };
                            let hex: String = chars.by_ref().take(width).map(|(_, c)| c).collect();
                            let cp = u32::from_str_radix(&hex, 16)
                                .ok()
                                .filter(|_| hex.len() == width)
                                .and_then(char::from_u32)
                                .ok_or_else(|| format!("bad unicode escape \\{e}{hex}"))?;
                            lexical.push(cp);
                        }
                        other => return Err(format!("unknown escape \\{other}")),
                    }
                }
                c => lexical.push(c),
            }
        };
        self.pos += consumed;

        let datatype = if self.rest().starts_with("^^") {
            self.pos += 2;
            if !self.rest().starts_with('<') {
                return Err("expected datatype IRI after '^^'".into());
            }
            let iri = self.iri()?;
            Datatype::from_iri(&iri).ok_or_else(|| format!("unsupported datatype <{iri}>"))?
        } else if self.rest().starts_with('@') {
            return Err("language-tagged literals are not supported".into());
        } else {
            Datatype::String
        };
        Literal::new(lexical, datatype).map(Term::Literal).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_store_exports_nothing() {
        assert_eq!(QuadStore::new().export_nquads(), "");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = QuadStore::import_nquads("malformed line").unwrap_err();
        assert_eq!(err.line, 1);
        let err = QuadStore::import_nquads(
            "<http://a/s> <http://a/p> <http://a/o> <http://a/g> .\n\n<http://a/s> <http://a/p> \"x\" .\n",
        )
        .unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn parses_all_term_forms_and_collapses_duplicates() {
        let text = concat!(
            "_:b1 <http://a/p> \"a \\\"q\\\"\\n\\u00e9\" <http://a/g> .\n",
            "<http://a/s> <http://a/p> \"12.5\"^^<http://www.w3.org/2001/XMLSchema#decimal> <http://a/g> .\n",
            "<http://a/s> <http://a/p> \"12.5\"^^<http://www.w3.org/2001/XMLSchema#decimal> <http://a/g> .\n",
            "# comment\n",
        );
        let st = QuadStore::import_nquads(text).unwrap();
        assert_eq!(st.len(), 2);
        let exported = st.export_nquads();
        assert_eq!(QuadStore::import_nquads(&exported).unwrap(), st);
        assert!(exported.contains("_:b1 "));
        assert!(exported.contains("\"a \\\"q\\\"\\né\"^^<http://www.w3.org/2001/XMLSchema#string>"));
    }

    #[test]
    fn rejects_literal_subjects_and_foreign_datatypes() {
        assert!(QuadStore::import_nquads("\"x\" <http://a/p> <http://a/o> <http://a/g> .").is_err());
        assert!(QuadStore::import_nquads(
            "<http://a/s> <http://a/p> \"x\"^^<http://a/dt> <http://a/g> ."
        )
        .is_err());
        assert!(QuadStore::import_nquads("<http://a/s> <http://a/p> <http://a/o> .").is_err());
    }
}
