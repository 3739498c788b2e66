//! Solution mappings and multisets of solution mappings.
//!
//! A solution mapping is a partial function from variables to terms. Query
//! results are multisets: every mapping in one carries a cardinality of at
//! least 1. The four operators here (union, join, difference, projection)
//! are the bag semantics the evaluators compose results with.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::Term;

/// A query variable, stored without the leading `?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(pub String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

/// A partial mapping from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct SolutionMapping(BTreeMap<Variable, Term>);

impl SolutionMapping {
    pub fn new() -> Self {
        SolutionMapping::default()
    }

    pub fn bind(mut self, var: Variable, term: Term) -> Self {
        self.0.insert(var, term);
        self
    }

    pub fn get(&self, var: &Variable) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn binds(&self, var: &Variable) -> bool {
        self.0.contains_key(var)
    }

    pub fn dom(&self) -> BTreeSet<Variable> {
        self.0.keys().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    /// Two mappings are compatible when they agree on every shared variable.
    pub fn compatible(&self, other: &SolutionMapping) -> bool {
        let (small, large) = if self.0.len() <= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .0
            .iter()
            .all(|(v, t)| large.0.get(v).map_or(true, |u| u == t))
    }

    /// The union of two compatible mappings; `None` when they disagree.
    pub fn merge(&self, other: &SolutionMapping) -> Option<SolutionMapping> {
        if !self.compatible(other) {
            return None;
        }
        let mut out = self.0.clone();
        for (v, t) in &other.0 {
            out.insert(v.clone(), t.clone());
        }
        Some(SolutionMapping(out))
    }

    /// The mapping restricted to the variables in `vars`.
    pub fn restrict(&self, vars: &BTreeSet<Variable>) -> SolutionMapping {
        SolutionMapping(
            self.0
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        )
    }
}

impl FromIterator<(Variable, Term)> for SolutionMapping {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        SolutionMapping(iter.into_iter().collect())
    }
}

impl fmt::Display for SolutionMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}={t}")?;
        }
        write!(f, "}}")
    }
}

/// A multiset of solution mappings. Stored cardinalities are always >= 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolutionMultiset {
    entries: BTreeMap<SolutionMapping, u64>,
}

impl SolutionMultiset {
    pub fn new() -> Self {
        SolutionMultiset::default()
    }

    /// The multiset holding only the empty mapping, with cardinality 1.
    pub fn unit() -> Self {
        let mut m = SolutionMultiset::new();
        m.add(SolutionMapping::new(), 1);
        m
    }

    pub fn singleton(mapping: SolutionMapping) -> Self {
        let mut m = SolutionMultiset::new();
        m.add(mapping, 1);
        m
    }

    /// Adds `card` occurrences of `mapping`. Adding zero is a no-op, so the
    /// >= 1 invariant holds by construction.
    pub fn add(&mut self, mapping: SolutionMapping, card: u64) {
        if card == 0 {
            return;
        }
        *self.entries.entry(mapping).or_insert(0) += card;
    }

    pub fn card(&self, mapping: &SolutionMapping) -> u64 {
        self.entries.get(mapping).copied().unwrap_or(0)
    }

    pub fn contains(&self, mapping: &SolutionMapping) -> bool {
        self.entries.contains_key(mapping)
    }

    /// Number of distinct mappings.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SolutionMapping, u64)> {
        self.entries.iter().map(|(m, c)| (m, *c))
    }

    /// Multiset union: cardinalities of shared mappings add up.
    pub fn union(&self, other: &SolutionMultiset) -> SolutionMultiset {
        let mut out = self.clone();
        for (m, c) in other.iter() {
            out.add(m.clone(), c);
        }
        out
    }

    /// Multiset join: merges every compatible pair, multiplying
    /// cardinalities; distinct pairs producing the same merge add up.
    pub fn join(&self, other: &SolutionMultiset) -> SolutionMultiset {
        let mut out = SolutionMultiset::new();
        for (m1, c1) in self.iter() {
            for (m2, c2) in other.iter() {
                if let Some(merged) = m1.merge(m2) {
                    out.add(merged, c1 * c2);
                }
            }
        }
        out
    }

    /// Multiset difference: keeps the mappings of `self` compatible with
    /// nothing in `other`, cardinalities unchanged.
    pub fn minus(&self, other: &SolutionMultiset) -> SolutionMultiset {
        let mut out = SolutionMultiset::new();
        for (m1, c1) in self.iter() {
            if other.iter().all(|(m2, _)| !m1.compatible(m2)) {
                out.add(m1.clone(), c1);
            }
        }
        out
    }

    /// Projection to `vars`: restricts every mapping, mappings that collapse
    /// onto the same restriction add their cardinalities up.
    pub fn project(&self, vars: &BTreeSet<Variable>) -> SolutionMultiset {
        let mut out = SolutionMultiset::new();
        for (m, c) in self.iter() {
            out.add(m.restrict(vars), c);
        }
        out
    }

    /// The mappings compatible with `mapping`, cardinalities unchanged.
    pub fn restrict_compatible(&self, mapping: &SolutionMapping) -> SolutionMultiset {
        let mut out = SolutionMultiset::new();
        for (m, c) in self.iter() {
            if m.compatible(mapping) {
                out.add(m.clone(), c);
            }
        }
        out
    }
}

impl FromIterator<(SolutionMapping, u64)> for SolutionMultiset {
    fn from_iter<I: IntoIterator<Item = (SolutionMapping, u64)>>(iter: I) -> Self {
        let mut out = SolutionMultiset::new();
        for (m, c) in iter {
            out.add(m, c);
        }
        out
    }
}
