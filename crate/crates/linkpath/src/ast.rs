//! Abstract syntax for property path expressions and graph patterns.
//!
//! A property path pattern is a triple of subject, path expression, object.
//! Subjects and objects are IRIs, literals, or variables; blank nodes are
//! kept out of parsed queries (substitution may introduce them). Graph
//! patterns combine path patterns with And, Union, and Opt.

use std::collections::BTreeSet;
use std::fmt;

use crate::solution::{SolutionMapping, Variable};
use crate::term::{Iri, Term};

/// Subject or object position of a path pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PatternTerm {
    Term(Term),
    Var(Variable),
}

impl PatternTerm {
    pub fn iri(s: impl Into<String>) -> Self {
        PatternTerm::Term(Term::iri(s))
    }

    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(Variable::new(name))
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, PatternTerm::Var(_))
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Term(t) => t.fmt(f),
            PatternTerm::Var(v) => v.fmt(f),
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

impl From<Variable> for PatternTerm {
    fn from(v: Variable) -> Self {
        PatternTerm::Var(v)
    }
}

/// A property path expression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PpExpression {
    Link(Iri),
    /// Any predicate not in the (non-empty) list.
    NegatedSet(Vec<Iri>),
    Inverse(Box<PpExpression>),
    Sequence(Box<PpExpression>, Box<PpExpression>),
    Alternative(Box<PpExpression>, Box<PpExpression>),
    Star(Box<PpExpression>),
}

impl PpExpression {
    pub fn link(iri: impl Into<String>) -> Self {
        PpExpression::Link(Iri::new(iri))
    }

    pub fn inverse(self) -> Self {
        PpExpression::Inverse(Box::new(self))
    }

    pub fn then(self, next: PpExpression) -> Self {
        PpExpression::Sequence(Box::new(self), Box::new(next))
    }

    pub fn or(self, other: PpExpression) -> Self {
        PpExpression::Alternative(Box::new(self), Box::new(other))
    }

    pub fn star(self) -> Self {
        PpExpression::Star(Box::new(self))
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PpExpression::Link(_) | PpExpression::NegatedSet(_) => write!(f, "{self}"),
            _ => write!(f, "({self})"),
        }
    }
}

impl fmt::Display for PpExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PpExpression::Link(iri) => iri.fmt(f),
            PpExpression::NegatedSet(iris) => {
                write!(f, "!(")?;
                for (i, iri) in iris.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    iri.fmt(f)?;
                }
                write!(f, ")")
            }
            PpExpression::Inverse(e) => {
                write!(f, "^")?;
                e.fmt_operand(f)
            }
            PpExpression::Sequence(a, b) => {
                a.fmt_operand(f)?;
                write!(f, "/")?;
                b.fmt_operand(f)
            }
            PpExpression::Alternative(a, b) => {
                a.fmt_operand(f)?;
                write!(f, "|")?;
                b.fmt_operand(f)
            }
            PpExpression::Star(e) => {
                e.fmt_operand(f)?;
                write!(f, "*")
            }
        }
    }
}

/// A property path pattern: subject, path expression, object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PpPattern {
    pub subject: PatternTerm,
    pub expression: PpExpression,
    pub object: PatternTerm,
}

impl PpPattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        expression: PpExpression,
        object: impl Into<PatternTerm>,
    ) -> Self {
        PpPattern {
            subject: subject.into(),
            expression,
            object: object.into(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        if let PatternTerm::Var(v) = &self.subject {
            out.insert(v.clone());
        }
        if let PatternTerm::Var(v) = &self.object {
            out.insert(v.clone());
        }
        out
    }

    /// Applies a solution mapping to the subject and object.
    pub fn substitute(&self, mapping: &SolutionMapping) -> PpPattern {
        let apply = |node: &PatternTerm| match node {
            PatternTerm::Var(v) => match mapping.get(v) {
                Some(t) => PatternTerm::Term(t.clone()),
                None => node.clone(),
            },
            PatternTerm::Term(_) => node.clone(),
        };
        PpPattern {
            subject: apply(&self.subject),
            expression: self.expression.clone(),
            object: apply(&self.object),
        }
    }

    /// The pattern read against the grain: endpoints swapped, expression
    /// inverted.
    pub fn reversed(&self) -> PpPattern {
        PpPattern {
            subject: self.object.clone(),
            expression: self.expression.clone().inverse(),
            object: self.subject.clone(),
        }
    }
}

impl fmt::Display for PpPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.expression, self.object)
    }
}

/// A graph pattern over property path patterns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum GraphPattern {
    Leaf(PpPattern),
    And(Box<GraphPattern>, Box<GraphPattern>),
    Union(Box<GraphPattern>, Box<GraphPattern>),
    Opt(Box<GraphPattern>, Box<GraphPattern>),
}

impl GraphPattern {
    pub fn leaf(pattern: PpPattern) -> Self {
        GraphPattern::Leaf(pattern)
    }

    pub fn and(self, other: GraphPattern) -> Self {
        GraphPattern::And(Box::new(self), Box::new(other))
    }

    pub fn union(self, other: GraphPattern) -> Self {
        GraphPattern::Union(Box::new(self), Box::new(other))
    }

    pub fn opt(self, other: GraphPattern) -> Self {
        GraphPattern::Opt(Box::new(self), Box::new(other))
    }

    /// All variables occurring in the pattern.
    pub fn vars(&self) -> BTreeSet<Variable> {
        match self {
            GraphPattern::Leaf(p) => p.vars(),
            GraphPattern::And(a, b) | GraphPattern::Union(a, b) | GraphPattern::Opt(a, b) => {
                let mut out = a.vars();
                out.extend(b.vars());
                out
            }
        }
    }

    /// The certainly bound variables: those bound in every solution. Leaves
    /// bind all their variables, And both sides, Union only what the sides
    /// share, Opt only the left side.
    pub fn cb_vars(&self) -> BTreeSet<Variable> {
        match self {
            GraphPattern::Leaf(p) => p.vars(),
            GraphPattern::And(a, b) => {
                let mut out = a.cb_vars();
                out.extend(b.cb_vars());
                out
            }
            GraphPattern::Union(a, b) => {
                a.cb_vars().intersection(&b.cb_vars()).cloned().collect()
            }
            GraphPattern::Opt(a, _) => a.cb_vars(),
        }
    }

}

impl fmt::Display for GraphPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphPattern::Leaf(p) => p.fmt(f),
            GraphPattern::And(a, b) => write!(f, "{{ {a} AND {b} }}"),
            GraphPattern::Union(a, b) => write!(f, "{{ {a} UNION {b} }}"),
            GraphPattern::Opt(a, b) => write!(f, "{{ {a} OPT {b} }}"),
        }
    }
}

/// The first variable of the form `_fv0`, `_fv1`, ... not in `avoid`. That
/// lexical space is rejected in parsed queries, so a fresh variable never
/// collides with a user variable.
pub fn fresh_variable(avoid: &BTreeSet<Variable>) -> Variable {
    for i in 0.. {
        let candidate = Variable::new(format!("_fv{i}"));
        if !avoid.contains(&candidate) {
            return candidate;
        }
    }
    unreachable!()
}
