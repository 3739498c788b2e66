//! Query text parsing.
//!
//! Queries are graph patterns: either a bare `subject expression object`
//! line or `{ ... AND|UNION|OPT ... }` groups, left-associative, with braces
//! for grouping. Path expressions use `<iri>`, `!(<iri>|...)`, prefix `^`,
//! postfix `*`, `/`, and `|`; `*` and `^` bind tightest, then `/`, then `|`.
//! The repetition shorthands `?`, `+`, and `{n}` and blank nodes are
//! rejected outright.

use std::fmt;
use std::iter::Peekable;
use std::str::Chars;

use crate::ast::{GraphPattern, PatternTerm, PpExpression, PpPattern};
use crate::solution::Variable;
use crate::term::{Iri, Literal, LiteralKind, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Iri(String),
    Literal(Literal),
    Var(String),
    Word(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Bang,
    Caret,
    Star,
    Slash,
    Pipe,
    Plus,
    Question,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Iri(s) => write!(f, "<{s}>"),
            Token::Literal(l) => write!(f, "{l}"),
            Token::Var(v) => write!(f, "?{v}"),
            Token::Word(w) => write!(f, "{w}"),
            Token::LBrace => write!(f, "{{"),
            Token::RBrace => write!(f, "}}"),
            Token::LParen => write!(f, "("),
            Token::RParen => write!(f, ")"),
            Token::Bang => write!(f, "!"),
            Token::Caret => write!(f, "^"),
            Token::Star => write!(f, "*"),
            Token::Slash => write!(f, "/"),
            Token::Pipe => write!(f, "|"),
            Token::Plus => write!(f, "+"),
            Token::Question => write!(f, "?"),
            Token::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: Peekable<Chars<'a>>,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(input: &'a str) -> Self {
        Lexer {
            chars: input.chars().peekable(),
            pos: Pos { line: 1, col: 1 },
        }
    }

    fn error(&self, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn next_token(&mut self) -> Result<(Token, Pos), ParseError> {
        self.skip_ws();
        let pos = self.pos;
        let Some(c) = self.bump() else {
            return Ok((Token::Eof, pos));
        };
        let token = match c {
            '{' => Token::LBrace,
            '}' => Token::RBrace,
            '(' => Token::LParen,
            ')' => Token::RParen,
            '!' => Token::Bang,
            '^' if self.chars.peek() == Some(&'^') => {
                return Err(self.error(pos, "'^^' is only valid inside a literal".to_string()))
            }
            '^' => Token::Caret,
            '*' => Token::Star,
            '/' => Token::Slash,
            '|' => Token::Pipe,
            '+' => Token::Plus,
            '<' => {
                let mut iri = String::new();
                loop {
                    match self.bump() {
                        Some('>') => break,
                        Some(c) if c.is_whitespace() || c == '<' => {
                            return Err(self.error(pos, "unterminated IRI"))
                        }
                        Some(c) => iri.push(c),
                        None => return Err(self.error(pos, "unterminated IRI")),
                    }
                }
                if iri.is_empty() {
                    return Err(self.error(pos, "empty IRI"));
                }
                Token::Iri(iri)
            }
            '"' => Token::Literal(self.lex_literal(pos)?),
            '?' => {
                if matches!(self.chars.peek(), Some(c) if is_name_start(*c)) {
                    let name = self.lex_name();
                    if name.starts_with("_fv") {
                        return Err(self.error(
                            pos,
                            format!("variable name '?{name}' is reserved (the '_fv' prefix is used for generated variables)"),
                        ));
                    }
                    Token::Var(name)
                } else {
                    Token::Question
                }
            }
            '_' if self.chars.peek() == Some(&':') => {
                return Err(self.error(pos, "blank nodes are not allowed in queries"))
            }
            c if is_name_start(c) || c.is_ascii_digit() => {
                let mut name = String::new();
                name.push(c);
                name.push_str(&self.lex_name());
                Token::Word(name)
            }
            c => return Err(self.error(pos, format!("unexpected character '{c}'"))),
        };
        Ok((token, pos))
    }

    fn lex_name(&mut self) -> String {
        let mut name = String::new();
        while matches!(self.chars.peek(), Some(c) if is_name_char(*c)) {
            name.push(self.bump().unwrap());
        }
        name
    }

    fn lex_literal(&mut self, pos: Pos) -> Result<Literal, ParseError> {
        let lexical = self.lex_quoted(pos)?;
        let kind = match self.chars.peek() {
            Some('@') => {
                self.bump();
                let tag = self.lex_name();
                if tag.is_empty() {
                    return Err(self.error(self.pos, "empty language tag"));
                }
                LiteralKind::Language(tag)
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err(self.error(self.pos, "expected '^^' before a datatype IRI"));
                }
                match self.next_token()? {
                    (Token::Iri(iri), _) => LiteralKind::Datatype(Iri::new(iri)),
                    (other, p) => {
                        return Err(self.error(p, format!("expected a datatype IRI, found {other}")))
                    }
                }
            }
            _ => LiteralKind::Plain,
        };
        Ok(Literal { lexical, kind })
    }

    fn lex_quoted(&mut self, pos: Pos) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(out),
                Some('\\') => {
                    let escape_pos = self.pos;
                    match self.bump() {
                        Some('t') => out.push('\t'),
                        Some('b') => out.push('\u{8}'),
                        Some('n') => out.push('\n'),
                        Some('r') => out.push('\r'),
                        Some('f') => out.push('\u{c}'),
                        Some('"') => out.push('"'),
                        Some('\'') => out.push('\''),
                        Some('\\') => out.push('\\'),
                        Some('u') => out.push(self.lex_codepoint(escape_pos, 4)?),
                        Some('U') => out.push(self.lex_codepoint(escape_pos, 8)?),
                        other => {
                            let shown = other.map(String::from).unwrap_or_default();
                            return Err(
                                self.error(escape_pos, format!("invalid escape '\\{shown}'"))
                            );
                        }
                    }
                }
                Some(c) => out.push(c),
                None => return Err(self.error(pos, "unterminated literal")),
            }
        }
    }

    fn lex_codepoint(&mut self, pos: Pos, digits: usize) -> Result<char, ParseError> {
        let mut value = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.error(pos, "invalid unicode escape"))?;
            value = value * 16 + d;
        }
        char::from_u32(value).ok_or_else(|| self.error(pos, "invalid unicode escape"))
    }
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Parser {
    tokens: Vec<(Token, Pos)>,
    index: usize,
}

impl Parser {
    fn new(input: &str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(input);
        let mut tokens = Vec::new();
        loop {
            let (token, pos) = lexer.next_token()?;
            let done = token == Token::Eof;
            tokens.push((token, pos));
            if done {
                break;
            }
        }
        Ok(Parser { tokens, index: 0 })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.index].0
    }

    fn peek2(&self) -> &Token {
        &self.tokens[(self.index + 1).min(self.tokens.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.index].1
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.index].0.clone();
        if self.index + 1 < self.tokens.len() {
            self.index += 1;
        }
        token
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let pos = self.pos();
        ParseError {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, token: Token, expected: &str) -> Result<(), ParseError> {
        if self.peek() == &token {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!("expected {expected}, found {}", self.peek())))
        }
    }

    fn graph_pattern(&mut self) -> Result<GraphPattern, ParseError> {
        if self.peek() == &Token::LBrace {
            self.braced_group()
        } else {
            Ok(GraphPattern::Leaf(self.pp_pattern()?))
        }
    }

    fn braced_group(&mut self) -> Result<GraphPattern, ParseError> {
        self.expect(Token::LBrace, "'{'")?;
        let mut pattern = self.graph_pattern()?;
        loop {
            match self.peek() {
                Token::Word(w) => {
                    let op = w.clone();
                    match op.as_str() {
                        "AND" | "UNION" | "OPT" => {
                            self.advance();
                            let right = self.graph_pattern()?;
                            pattern = match op.as_str() {
                                "AND" => pattern.and(right),
                                "UNION" => pattern.union(right),
                                _ => pattern.opt(right),
                            };
                        }
                        _ => {
                            return Err(self.error(format!(
                                "expected AND, UNION, OPT, or '}}', found {op}"
                            )))
                        }
                    }
                }
                Token::RBrace => {
                    self.advance();
                    return Ok(pattern);
                }
                other => {
                    return Err(
                        self.error(format!("expected AND, UNION, OPT, or '}}', found {other}"))
                    )
                }
            }
        }
    }

    fn pp_pattern(&mut self) -> Result<PpPattern, ParseError> {
        let subject = self.node("a subject")?;
        let expression = self.expression()?;
        let object = self.node("an object")?;
        Ok(PpPattern {
            subject,
            expression,
            object,
        })
    }

    fn node(&mut self, role: &str) -> Result<PatternTerm, ParseError> {
        match self.advance() {
            Token::Iri(iri) => Ok(PatternTerm::Term(Term::Iri(Iri::new(iri)))),
            Token::Literal(l) => Ok(PatternTerm::Term(Term::Literal(l))),
            Token::Var(name) => Ok(PatternTerm::Var(Variable::new(name))),
            other => Err(self.error_at_previous(format!(
                "expected {role} (an IRI, literal, or variable), found {other}"
            ))),
        }
    }

    fn error_at_previous(&self, message: String) -> ParseError {
        let pos = self.tokens[self.index.saturating_sub(1)].1;
        ParseError {
            line: pos.line,
            col: pos.col,
            message,
        }
    }

    fn expression(&mut self) -> Result<PpExpression, ParseError> {
        self.alternative()
    }

    fn alternative(&mut self) -> Result<PpExpression, ParseError> {
        let mut expr = self.sequence()?;
        while self.peek() == &Token::Pipe {
            self.advance();
            expr = expr.or(self.sequence()?);
        }
        Ok(expr)
    }

    fn sequence(&mut self) -> Result<PpExpression, ParseError> {
        let mut expr = self.unary()?;
        while self.peek() == &Token::Slash {
            self.advance();
            expr = expr.then(self.unary()?);
        }
        Ok(expr)
    }

    fn unary(&mut self) -> Result<PpExpression, ParseError> {
        if self.peek() == &Token::Caret {
            self.advance();
            return Ok(self.unary()?.inverse());
        }
        let mut expr = self.primary()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.advance();
                    expr = expr.star();
                }
                Token::Plus => {
                    return Err(self.error(
                        "path operator '+' is not supported; write e/(e)* for one-or-more",
                    ))
                }
                Token::Question => {
                    return Err(self.error(
                        "path operator '?' is not supported; only '*' repetition exists",
                    ))
                }
                Token::LBrace if matches!(self.peek2(), Token::Word(w) if w.chars().all(|c| c.is_ascii_digit())) => {
                    return Err(self.error(
                        "bounded repetition '{n}' is not supported; write the sequence out or use '*'",
                    ))
                }
                _ => return Ok(expr),
            }
        }
    }

    fn primary(&mut self) -> Result<PpExpression, ParseError> {
        match self.advance() {
            Token::Iri(iri) => Ok(PpExpression::Link(Iri::new(iri))),
            Token::Bang => {
                self.expect(Token::LParen, "'(' after '!'")?;
                let mut iris = Vec::new();
                loop {
                    match self.advance() {
                        Token::Iri(iri) => iris.push(Iri::new(iri)),
                        other => {
                            return Err(self
                                .error_at_previous(format!("expected an IRI, found {other}")))
                        }
                    }
                    match self.advance() {
                        Token::Pipe => continue,
                        Token::RParen => break,
                        other => {
                            return Err(self
                                .error_at_previous(format!("expected '|' or ')', found {other}")))
                        }
                    }
                }
                Ok(PpExpression::NegatedSet(iris))
            }
            Token::LParen => {
                let expr = self.expression()?;
                self.expect(Token::RParen, "')'")?;
                Ok(expr)
            }
            other => Err(self.error_at_previous(format!(
                "expected a path expression, found {other}"
            ))),
        }
    }
}

/// Parses a query (a graph pattern) from text.
pub fn parse_query(input: &str) -> Result<GraphPattern, ParseError> {
    let mut parser = Parser::new(input)?;
    let pattern = parser.graph_pattern()?;
    parser.expect(Token::Eof, "end of input")?;
    Ok(pattern)
}

/// Parses a single `<iri>` argument.
pub fn parse_iri(input: &str) -> Result<Iri, ParseError> {
    let mut parser = Parser::new(input)?;
    let iri = match parser.advance() {
        Token::Iri(iri) => Iri::new(iri),
        other => return Err(parser.error_at_previous(format!("expected an IRI, found {other}"))),
    };
    parser.expect(Token::Eof, "end of input")?;
    Ok(iri)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn link(name: &str) -> PpExpression {
        PpExpression::link(format!("http://example.org/{name}"))
    }

    #[test]
    fn parses_a_bare_pattern() {
        let p = parse_query("?v <http://example.org/knows> <http://example.org/Tim>").unwrap();
        assert_eq!(
            p,
            GraphPattern::Leaf(PpPattern::new(
                PatternTerm::var("v"),
                link("knows"),
                PatternTerm::iri("http://example.org/Tim"),
            ))
        );
    }

    #[test]
    fn star_and_sequence_bind_tighter_than_alternative() {
        let p = parse_query("<http://example.org/a> <http://example.org/p>/<http://example.org/q>|<http://example.org/r> ?x").unwrap();
        let GraphPattern::Leaf(leaf) = p else {
            panic!("expected a leaf")
        };
        assert_eq!(leaf.expression, link("p").then(link("q")).or(link("r")));
    }

    #[test]
    fn star_applies_before_sequence() {
        let p = parse_query("<http://example.org/Tim> (<http://example.org/knows>)*/<http://example.org/name> ?n").unwrap();
        let GraphPattern::Leaf(leaf) = p else {
            panic!("expected a leaf")
        };
        assert_eq!(leaf.expression, link("knows").star().then(link("name")));
    }

    #[test]
    fn inverse_applies_to_the_starred_primary() {
        let p = parse_query("<http://example.org/a> ^<http://example.org/p>* ?x").unwrap();
        let GraphPattern::Leaf(leaf) = p else {
            panic!("expected a leaf")
        };
        assert_eq!(leaf.expression, link("p").star().inverse());
    }

    #[test]
    fn parses_negated_sets() {
        let p = parse_query(
            "?s !(<http://example.org/p>|<http://example.org/q>) \"lit\"@en",
        )
        .unwrap();
        let GraphPattern::Leaf(leaf) = p else {
            panic!("expected a leaf")
        };
        assert_eq!(
            leaf.expression,
            PpExpression::NegatedSet(vec![
                Iri::new("http://example.org/p"),
                Iri::new("http://example.org/q")
            ])
        );
        assert_eq!(
            leaf.object,
            PatternTerm::Term(Term::Literal(Literal::language("lit", "en")))
        );
    }

    #[test]
    fn graph_operators_are_left_associative() {
        let p = parse_query(
            "{ ?a <http://example.org/p> ?b AND ?b <http://example.org/p> ?c UNION ?d <http://example.org/p> ?e }",
        )
        .unwrap();
        assert!(matches!(p, GraphPattern::Union(ref l, _) if matches!(**l, GraphPattern::And(..))));
    }

    #[test]
    fn braces_regroup_operators() {
        let p = parse_query(
            "{ ?a <http://example.org/p> ?b AND { ?b <http://example.org/p> ?c UNION ?d <http://example.org/p> ?e } }",
        )
        .unwrap();
        assert!(matches!(p, GraphPattern::And(_, ref r) if matches!(**r, GraphPattern::Union(..))));
    }

    #[test]
    fn rejects_repetition_sugar_with_guidance() {
        let err = parse_query("<http://example.org/a> <http://example.org/p>+ ?x").unwrap_err();
        assert!(err.message.contains("'+' is not supported"), "{err}");
        let err = parse_query("<http://example.org/a> <http://example.org/p>? ?x").unwrap_err();
        assert!(err.message.contains("'?' is not supported"), "{err}");
        let err = parse_query("<http://example.org/a> <http://example.org/p>{2} ?x").unwrap_err();
        assert!(err.message.contains("'{n}' is not supported"), "{err}");
    }

    #[test]
    fn rejects_blank_nodes_and_reserved_variables() {
        let err = parse_query("_:b <http://example.org/p> ?x").unwrap_err();
        assert!(err.message.contains("blank nodes"), "{err}");
        let err = parse_query("?_fv0 <http://example.org/p> ?x").unwrap_err();
        assert!(err.message.contains("reserved"), "{err}");
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse_query("?v <http://example.org/p>\n  !bad ?x").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
    }

    #[test]
    fn empty_negated_set_is_rejected() {
        assert!(parse_query("?v !() ?x").is_err());
    }

    fn arb_iri() -> impl Strategy<Value = Iri> {
        prop_oneof![
            Just(Iri::new("http://example.org/p")),
            Just(Iri::new("http://example.org/q")),
            Just(Iri::new("urn:r")),
        ]
    }

    fn arb_expression() -> impl Strategy<Value = PpExpression> {
        let leaf = prop_oneof![
            arb_iri().prop_map(PpExpression::Link),
            proptest::collection::vec(arb_iri(), 1..=3).prop_map(PpExpression::NegatedSet),
        ];
        leaf.prop_recursive(3, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| e.inverse()),
                inner.clone().prop_map(|e| e.star()),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.then(b)),
                (inner.clone(), inner).prop_map(|(a, b)| a.or(b)),
            ]
        })
    }

    fn arb_node() -> impl Strategy<Value = PatternTerm> {
        prop_oneof![
            Just(PatternTerm::iri("http://example.org/a")),
            Just(PatternTerm::Term(Term::Literal(Literal::plain("x \"y\"")))),
            Just(PatternTerm::Term(Term::Literal(Literal::language("v", "en")))),
            Just(PatternTerm::var("v")),
            Just(PatternTerm::var("w")),
        ]
    }

    fn arb_graph_pattern() -> impl Strategy<Value = GraphPattern> {
        let leaf = (arb_node(), arb_expression(), arb_node())
            .prop_map(|(s, e, o)| GraphPattern::Leaf(PpPattern::new(s, e, o)));
        leaf.prop_recursive(3, 16, 2, |inner| {
            (inner.clone(), 0..3, inner).prop_map(|(a, op, b)| match op {
                0 => a.and(b),
                1 => a.union(b),
                _ => a.opt(b),
            })
        })
    }

    proptest! {
        #[test]
        fn printing_then_parsing_round_trips(pattern in arb_graph_pattern()) {
            let text = pattern.to_string();
            let reparsed = parse_query(&text);
            prop_assert_eq!(reparsed.as_ref(), Ok(&pattern), "text: {}", text);
        }
    }
}
