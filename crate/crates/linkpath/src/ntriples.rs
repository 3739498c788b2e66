//! Reading and writing the N-Triples subset documents are stored in.
//!
//! One triple per line, `.`-terminated; `#` comment lines and blank lines
//! allowed. Subjects are IRIs or blank nodes, predicates IRIs, objects any
//! term. Errors carry the 1-based line number.

use crate::term::{BlankNode, Graph, Iri, Literal, LiteralKind, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct NtriplesError {
    pub line: usize,
    pub message: String,
}

/// Parses an N-Triples document. `rename_blank` maps every blank node label
/// before the triple is stored; the loader uses it to give each document a
/// private label space.
pub fn parse_ntriples(
    input: &str,
    rename_blank: &dyn Fn(&str) -> String,
) -> Result<Graph, NtriplesError> {
    let mut graph = Graph::new();
    for (index, raw_line) in input.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut p = LineParser {
            rest: line,
            line: line_no,
        };
        let subject = match p.term(rename_blank)? {
            Term::Literal(_) => return Err(p.fail("literals cannot be subjects")),
            t => t,
        };
        let predicate = match p.term(rename_blank)? {
            Term::Iri(iri) => iri,
            _ => return Err(p.fail("predicates must be IRIs")),
        };
        let object = p.term(rename_blank)?;
        p.skip_ws();
        if !p.rest.starts_with('.') {
            return Err(p.fail("expected '.' after the object"));
        }
        p.rest = &p.rest[1..];
        p.skip_ws();
        if !p.rest.is_empty() && !p.rest.starts_with('#') {
            return Err(p.fail("trailing content after '.'"));
        }
        graph.insert(Triple {
            subject,
            predicate,
            object,
        });
    }
    Ok(graph)
}

struct LineParser<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn fail(&self, message: impl Into<String>) -> NtriplesError {
        NtriplesError {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn term(&mut self, rename_blank: &dyn Fn(&str) -> String) -> Result<Term, NtriplesError> {
        self.skip_ws();
        if let Some(rest) = self.rest.strip_prefix('<') {
            let end = rest
                .find('>')
                .ok_or_else(|| self.fail("unterminated IRI"))?;
            let iri = &rest[..end];
            if iri.is_empty() {
                return Err(self.fail("empty IRI"));
            }
            self.rest = &rest[end + 1..];
            return Ok(Term::Iri(Iri::new(iri)));
        }
        if let Some(rest) = self.rest.strip_prefix("_:") {
            let end = rest
                .find(|c: char| !c.is_alphanumeric() && c != '_')
                .unwrap_or(rest.len());
            if end == 0 {
                return Err(self.fail("empty blank node label"));
            }
            let label = &rest[..end];
            self.rest = &rest[end..];
            return Ok(Term::Blank(BlankNode(rename_blank(label))));
        }
        if self.rest.starts_with('"') {
            return self.literal();
        }
        Err(self.fail(format!(
            "expected an IRI, blank node, or literal at '{}'",
            self.rest.chars().take(12).collect::<String>()
        )))
    }

    fn literal(&mut self) -> Result<Term, NtriplesError> {
        let mut chars = self.rest.char_indices();
        chars.next(); // opening quote
        let mut lexical = String::new();
        let after_quote;
        loop {
            let Some((i, c)) = chars.next() else {
                return Err(self.fail("unterminated literal"));
            };
            match c {
                '"' => {
                    after_quote = i + 1;
                    break;
                }
                '\\' => match chars.next() {
                    Some((_, 't')) => lexical.push('\t'),
                    Some((_, 'b')) => lexical.push('\u{8}'),
                    Some((_, 'n')) => lexical.push('\n'),
                    Some((_, 'r')) => lexical.push('\r'),
                    Some((_, 'f')) => lexical.push('\u{c}'),
                    Some((_, '"')) => lexical.push('"'),
                    Some((_, '\'')) => lexical.push('\''),
                    Some((_, '\\')) => lexical.push('\\'),
                    Some((_, 'u')) => lexical.push(self.codepoint(&mut chars, 4)?),
                    Some((_, 'U')) => lexical.push(self.codepoint(&mut chars, 8)?),
                    _ => return Err(self.fail("invalid escape in literal")),
                },
                c => lexical.push(c),
            }
        }
        let mut rest = &self.rest[after_quote..];
        let kind = if let Some(tagged) = rest.strip_prefix('@') {
            let end = tagged
                .find(|c: char| !c.is_alphanumeric() && c != '-')
                .unwrap_or(tagged.len());
            if end == 0 {
                return Err(self.fail("empty language tag"));
            }
            let tag = &tagged[..end];
            rest = &tagged[end..];
            LiteralKind::Language(tag.to_string())
        } else if let Some(typed) = rest.strip_prefix("^^<") {
            let end = typed
                .find('>')
                .ok_or_else(|| self.fail("unterminated datatype IRI"))?;
            if end == 0 {
                return Err(self.fail("empty datatype IRI"));
            }
            let dt = &typed[..end];
            rest = &typed[end + 1..];
            LiteralKind::Datatype(Iri::new(dt))
        } else {
            LiteralKind::Plain
        };
        self.rest = rest;
        Ok(Term::Literal(Literal { lexical, kind }))
    }

    fn codepoint(
        &self,
        chars: &mut std::str::CharIndices<'_>,
        digits: usize,
    ) -> Result<char, NtriplesError> {
        let mut value = 0u32;
        for _ in 0..digits {
            let d = chars
                .next()
                .and_then(|(_, c)| c.to_digit(16))
                .ok_or_else(|| self.fail("invalid unicode escape"))?;
            value = value * 16 + d;
        }
        char::from_u32(value).ok_or_else(|| self.fail("invalid unicode escape"))
    }
}

/// Serializes a graph as N-Triples, one sorted triple per line.
pub fn write_ntriples(graph: &Graph) -> String {
    let mut out = String::new();
    for triple in graph.iter() {
        out.push_str(&triple.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keep(label: &str) -> String {
        label.to_string()
    }

    #[test]
    fn parses_the_basic_forms() {
        let g = parse_ntriples(
            concat!(
                "# a comment\n",
                "\n",
                "<http://a.example/s> <http://a.example/p> <http://a.example/o> .\n",
                "_:b1 <http://a.example/p> \"plain\" .\n",
                "<http://a.example/s> <http://a.example/p> \"t\\\"x\\\"\"@en .  # trailing\n",
                "<http://a.example/s> <http://a.example/p> \"5\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
            ),
            &keep,
        )
        .unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.contains(&Triple::new(
            Term::Blank(BlankNode("b1".into())),
            Iri::new("http://a.example/p"),
            Term::Literal(Literal::plain("plain")),
        )));
        assert!(g.contains(&Triple::new(
            Term::iri("http://a.example/s"),
            Iri::new("http://a.example/p"),
            Term::Literal(Literal::language("t\"x\"", "en")),
        )));
    }

    #[test]
    fn reports_the_failing_line() {
        let err = parse_ntriples(
            "<http://a.example/s> <http://a.example/p> <http://a.example/o> .\nnot a triple\n",
            &keep,
        )
        .unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn rejects_literal_subjects_and_noniri_predicates() {
        let err = parse_ntriples("\"s\" <http://a.example/p> <http://a.example/o> .", &keep);
        assert!(err.is_err());
        let err = parse_ntriples("<http://a.example/s> _:p <http://a.example/o> .", &keep);
        assert!(err.is_err());
    }

    #[test]
    fn missing_dot_is_an_error() {
        assert!(
            parse_ntriples("<http://a.example/s> <http://a.example/p> <http://a.example/o>", &keep)
                .is_err()
        );
    }

    #[test]
    fn blank_labels_pass_through_the_renamer() {
        let g = parse_ntriples(
            "_:x <http://a.example/p> _:y .",
            &|label| format!("d7_{label}"),
        )
        .unwrap();
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject, Term::Blank(BlankNode("d7_x".into())));
        assert_eq!(t.object, Term::Blank(BlankNode("d7_y".into())));
    }

    #[test]
    fn write_then_parse_round_trips() {
        let g = parse_ntriples(
            concat!(
                "<http://a.example/s> <http://a.example/p> \"a\\nb\\\\c\\\"d\"^^<http://a.example/dt> .\n",
                "_:b <http://a.example/p> \"x\"@en-GB .\n",
                "<http://a.example/s> <http://a.example/p> <http://a.example/o> .\n",
            ),
            &keep,
        )
        .unwrap();
        let text = write_ntriples(&g);
        let again = parse_ntriples(&text, &keep).unwrap();
        assert_eq!(g, again);
    }
}
