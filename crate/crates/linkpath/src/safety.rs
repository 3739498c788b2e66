//! Static web-safety analysis for graph patterns.
//!
//! `cbv` computes the set of variables a pattern is certified to bind when
//! only the variables in `X` are known to arrive pre-bound. Certification is
//! syntax-directed over a first-match rule table:
//!
//!  1. base pattern whose subject is a constant or a variable in `X`: all
//!     pattern variables;
//!  2. other base patterns: nothing;
//!  3. star with a variable subject and constant object: certified
//!     directly when the subject is pre-bound and one step certifies from
//!     a bound subject, otherwise by certifying the reversed pattern under
//!     the inverted expression;
//!  4. star with a constant subject whose single step fully certifies from
//!     a bound subject: whatever the un-starred pattern certifies; between
//!     two constants the inverted step may certify instead, because the
//!     closure can then walk backwards from the object;
//!  5. other stars (in particular between two variables): nothing;
//!  6. inverse: certify with the endpoints swapped;
//!  7. alternative: the intersection of both branches;
//!  8. sequence whose two-step decomposition certifies its connecting
//!     variable: that certification minus the connector;
//!  9. other sequences: nothing;
//! 10. conjunction with both sides certified from `X` alone,
//! 11. or the right side certified once the left side's guaranteed
//!     bindings are added,
//! 12. or the left side certified once the right side's guaranteed
//!     bindings are added: all pattern variables;
//! 13. other conjunctions: nothing;
//! 14. union: the intersection of both branches;
//! 15. optional whose left side certifies from `X` and whose right side
//!     certifies from nothing,
//! 16. or whose right side certifies from the left side's guaranteed
//!     bindings alone: all pattern variables;
//! 17. other optionals: nothing.
//!
//! Rules 15 and 16 deliberately keep `X` away from the right-hand side: an
//! optional branch may only rely on bindings its own left side guarantees,
//! because the evaluation of the optional part starts from those bindings
//! alone. Rule 5 deliberately rejects stars between two variables: their
//! evaluation would need the set of all terms on the Web, which no finite
//! lookup sequence provides.
//!
//! Besides the certified set, every rule records whether it accepted at
//! all. A pattern without variables satisfies any set condition trivially,
//! yet its evaluation can still hit an uncomputable spot: the closure
//! steps of `<c1> (^<p>)* <c2>` start from unbound triple subjects no
//! lookup discovers, and a sequence of constants introduces a connecting
//! variable that must itself certify. Web-safety therefore requires both
//! the full certified set and acceptance along every rule used.
//!
//! A pattern is web-safe when it certifies all of its variables with
//! nothing pre-bound; evaluation of web-safe patterns is guaranteed to
//! terminate after finitely many document lookups.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ast::{fresh_variable, GraphPattern, PatternTerm, PpExpression, PpPattern};
use crate::solution::Variable;

/// One applied rule: which pattern, which pre-bound set, which rule fired,
/// and what it certified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleTrace {
    pub pattern: String,
    pub assumed: Vec<String>,
    pub rule: u8,
    pub certified: Vec<String>,
}

/// The outcome of analyzing one pattern with nothing pre-bound.
#[derive(Debug, Clone, Serialize)]
pub struct SafetyReport {
    pub pattern: String,
    pub web_safe: bool,
    pub variables: Vec<String>,
    pub cbv_at_empty: Vec<String>,
    pub missing: Vec<String>,
    pub rule_trace: Vec<RuleTrace>,
}

/// Memoizing certification engine. One instance accumulates a rule trace
/// across every subpattern it visits.
#[derive(Debug, Default)]
pub struct Analyzer {
    memo: BTreeMap<(GraphPattern, BTreeSet<Variable>), (BTreeSet<Variable>, bool)>,
    trace: Vec<RuleTrace>,
}

impl Analyzer {
    pub fn new() -> Self {
        Analyzer::default()
    }

    pub fn trace(&self) -> &[RuleTrace] {
        &self.trace
    }

    /// The variables `pattern` is certified to bind when the variables in
    /// `x` are already bound.
    pub fn cbv(&mut self, pattern: &GraphPattern, x: &BTreeSet<Variable>) -> BTreeSet<Variable> {
        self.certify(pattern, x).0
    }

    /// The certified variables plus whether every rule on the way accepted.
    /// The flag makes refusal observable on patterns without variables,
    /// where the certified set is empty either way.
    pub fn certify(
        &mut self,
        pattern: &GraphPattern,
        x: &BTreeSet<Variable>,
    ) -> (BTreeSet<Variable>, bool) {
        let key = (pattern.clone(), x.clone());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let (rule, result, accepted) = self.apply(pattern, x);
        self.trace.push(RuleTrace {
            pattern: pattern.to_string(),
            assumed: x.iter().map(Variable::to_string).collect(),
            rule,
            certified: result.iter().map(Variable::to_string).collect(),
        });
        self.memo.insert(key, (result.clone(), accepted));
        (result, accepted)
    }

    fn apply(
        &mut self,
        pattern: &GraphPattern,
        x: &BTreeSet<Variable>,
    ) -> (u8, BTreeSet<Variable>, bool) {
        match pattern {
            GraphPattern::Leaf(p) => self.apply_leaf(p, x),
            GraphPattern::And(p1, p2) => {
                if self.certifies(p1, x) {
                    if self.certifies(p2, x) {
                        return (10, pattern.vars(), true);
                    }
                    let mut extended = x.clone();
                    extended.extend(p1.cb_vars());
                    if self.certifies(p2, &extended) {
                        return (11, pattern.vars(), true);
                    }
                }
                if self.certifies(p2, x) {
                    let mut extended = x.clone();
                    extended.extend(p2.cb_vars());
                    if self.certifies(p1, &extended) {
                        return (12, pattern.vars(), true);
                    }
                }
                (13, BTreeSet::new(), false)
            }
            GraphPattern::Union(p1, p2) => {
                let (left, ok1) = self.certify(p1, x);
                let (right, ok2) = self.certify(p2, x);
                (14, left.intersection(&right).cloned().collect(), ok1 && ok2)
            }
            GraphPattern::Opt(p1, p2) => {
                if self.certifies(p1, x) {
                    if self.certifies(p2, &BTreeSet::new()) {
                        return (15, pattern.vars(), true);
                    }
                    if self.certifies(p2, &p1.cb_vars()) {
                        return (16, pattern.vars(), true);
                    }
                }
                (17, BTreeSet::new(), false)
            }
        }
    }

    fn apply_leaf(
        &mut self,
        p: &PpPattern,
        x: &BTreeSet<Variable>,
    ) -> (u8, BTreeSet<Variable>, bool) {
        match &p.expression {
            PpExpression::Link(_) | PpExpression::NegatedSet(_) => {
                if subject_is_grounded(&p.subject, x) {
                    (1, p.vars(), true)
                } else {
                    (2, BTreeSet::new(), false)
                }
            }
            PpExpression::Star(e) => match (&p.subject, &p.object) {
                (PatternTerm::Var(v), PatternTerm::Term(_)) => {
                    if x.contains(v) && self.step_certifies(e) {
                        return (3, p.vars(), true);
                    }
                    let reversed = GraphPattern::leaf(PpPattern::new(
                        p.object.clone(),
                        (**e).clone().inverse().star(),
                        p.subject.clone(),
                    ));
                    let (set, accepted) = self.certify(&reversed, x);
                    (3, set, accepted)
                }
                (PatternTerm::Term(_), PatternTerm::Var(_)) => {
                    if self.step_certifies(e) {
                        let step = GraphPattern::leaf(PpPattern::new(
                            p.subject.clone(),
                            (**e).clone(),
                            p.object.clone(),
                        ));
                        let (set, accepted) = self.certify(&step, x);
                        (4, set, accepted)
                    } else {
                        (5, BTreeSet::new(), false)
                    }
                }
                (PatternTerm::Term(_), PatternTerm::Term(_)) => {
                    let inverted = (**e).clone().inverse();
                    if self.step_certifies(e) || self.step_certifies(&inverted) {
                        (4, BTreeSet::new(), true)
                    } else {
                        (5, BTreeSet::new(), false)
                    }
                }
                _ => (5, BTreeSet::new(), false),
            },
            PpExpression::Inverse(e) => {
                let swapped = GraphPattern::leaf(PpPattern::new(
                    p.object.clone(),
                    (**e).clone(),
                    p.subject.clone(),
                ));
                let (set, accepted) = self.certify(&swapped, x);
                (6, set, accepted)
            }
            PpExpression::Alternative(e1, e2) => {
                let left = GraphPattern::leaf(PpPattern::new(
                    p.subject.clone(),
                    (**e1).clone(),
                    p.object.clone(),
                ));
                let right = GraphPattern::leaf(PpPattern::new(
                    p.subject.clone(),
                    (**e2).clone(),
                    p.object.clone(),
                ));
                let (left, ok1) = self.certify(&left, x);
                let (right, ok2) = self.certify(&right, x);
                (7, left.intersection(&right).cloned().collect(), ok1 && ok2)
            }
            PpExpression::Sequence(e1, e2) => {
                let mut avoid = x.clone();
                avoid.extend(p.vars());
                let connector = fresh_variable(&avoid);
                let decomposed = GraphPattern::leaf(PpPattern::new(
                    p.subject.clone(),
                    (**e1).clone(),
                    PatternTerm::Var(connector.clone()),
                ))
                .and(GraphPattern::leaf(PpPattern::new(
                    PatternTerm::Var(connector.clone()),
                    (**e2).clone(),
                    p.object.clone(),
                )));
                let (certified, accepted) = self.certify(&decomposed, x);
                if accepted && certified.contains(&connector) {
                    let mut certified = certified;
                    certified.remove(&connector);
                    (8, certified, true)
                } else {
                    (9, BTreeSet::new(), false)
                }
            }
        }
    }

    /// Whether `pattern` certifies all of its variables under `x` with
    /// every rule accepting.
    pub fn certifies(&mut self, pattern: &GraphPattern, x: &BTreeSet<Variable>) -> bool {
        let (certified, accepted) = self.certify(pattern, x);
        accepted && certified == pattern.vars()
    }

    /// Whether one step of a star certifies its endpoint once the subject
    /// is bound, checked on a canonical single-step pattern.
    pub(crate) fn step_certifies(&mut self, e: &PpExpression) -> bool {
        let subject = Variable::new("_fv0");
        let object = Variable::new("_fv1");
        let step = GraphPattern::leaf(PpPattern::new(
            PatternTerm::Var(subject.clone()),
            e.clone(),
            PatternTerm::Var(object),
        ));
        let x: BTreeSet<Variable> = [subject].into();
        self.certifies(&step, &x)
    }
}

fn subject_is_grounded(subject: &PatternTerm, x: &BTreeSet<Variable>) -> bool {
    match subject {
        PatternTerm::Term(_) => true,
        PatternTerm::Var(v) => x.contains(v),
    }
}

/// The variables `pattern` is certified to bind given pre-bound `x`.
pub fn cbv(pattern: &GraphPattern, x: &BTreeSet<Variable>) -> BTreeSet<Variable> {
    Analyzer::new().cbv(pattern, x)
}

/// Whether `pattern` certifies every one of its variables under pre-bound
/// `x`, with every rule along the way accepting.
pub fn certifies(pattern: &GraphPattern, x: &BTreeSet<Variable>) -> bool {
    Analyzer::new().certifies(pattern, x)
}

/// Whether `pattern` certifies every one of its variables with nothing
/// pre-bound.
pub fn is_web_safe(pattern: &GraphPattern) -> bool {
    certifies(pattern, &BTreeSet::new())
}

/// Full analysis with the rule trace, for reporting.
pub fn analyze(pattern: &GraphPattern) -> SafetyReport {
    let mut analyzer = Analyzer::new();
    let (certified, accepted) = analyzer.certify(pattern, &BTreeSet::new());
    let vars = pattern.vars();
    SafetyReport {
        pattern: pattern.to_string(),
        web_safe: accepted && certified == vars,
        variables: vars.iter().map(Variable::to_string).collect(),
        cbv_at_empty: certified.iter().map(Variable::to_string).collect(),
        missing: vars
            .difference(&certified)
            .map(Variable::to_string)
            .collect(),
        rule_trace: analyzer.trace.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Iri, Term};

    fn iri(name: &str) -> Term {
        Term::iri(format!("http://example.org/{name}"))
    }

    fn p(name: &str) -> Iri {
        Iri::new(format!("http://example.org/{name}"))
    }

    fn var(s: &str) -> PatternTerm {
        PatternTerm::var(s)
    }

    fn vs(names: &[&str]) -> BTreeSet<Variable> {
        names.iter().map(|n| Variable::new(*n)).collect()
    }

    fn leaf(subject: PatternTerm, e: PpExpression, object: PatternTerm) -> GraphPattern {
        GraphPattern::leaf(PpPattern::new(subject, e, object))
    }

    fn knows() -> PpExpression {
        PpExpression::Link(p("knows"))
    }

    #[test]
    fn constant_subject_base_certifies_its_variables() {
        let pattern = leaf(PatternTerm::Term(iri("Bob")), knows(), var("v"));
        assert_eq!(cbv(&pattern, &BTreeSet::new()), vs(&["v"]));
        assert!(is_web_safe(&pattern));
    }

    #[test]
    fn variable_subject_base_needs_the_subject_pre_bound() {
        let pattern = leaf(var("v"), knows(), PatternTerm::Term(iri("Tim")));
        assert_eq!(cbv(&pattern, &BTreeSet::new()), BTreeSet::new());
        assert!(!is_web_safe(&pattern));
        assert_eq!(cbv(&pattern, &vs(&["v"])), vs(&["v"]));
    }

    #[test]
    fn conjunction_feeds_bindings_left_to_right() {
        let pattern = leaf(PatternTerm::Term(iri("Bob")), knows(), var("v"))
            .and(leaf(var("v"), knows(), PatternTerm::Term(iri("Tim"))));
        let report = analyze(&pattern);
        assert!(report.web_safe);
        assert_eq!(report.cbv_at_empty, vec!["?v"]);
        let top = report.rule_trace.last().unwrap();
        assert_eq!(top.rule, 11);
    }

    #[test]
    fn union_certifies_only_shared_variables() {
        let pattern = leaf(PatternTerm::Term(iri("u1")), PpExpression::Link(p("p1")), var("x"))
            .union(leaf(PatternTerm::Term(iri("u2")), PpExpression::Link(p("p2")), var("y")));
        let report = analyze(&pattern);
        assert!(!report.web_safe);
        assert!(report.cbv_at_empty.is_empty());
        assert_eq!(report.missing, vec!["?x", "?y"]);
    }

    #[test]
    fn inverse_certifies_through_the_swap() {
        let pattern = leaf(var("x"), knows().inverse(), PatternTerm::Term(iri("Bob")));
        assert!(is_web_safe(&pattern));
    }

    #[test]
    fn alternative_intersects_branches() {
        let both = leaf(
            PatternTerm::Term(iri("Bob")),
            knows().or(PpExpression::Link(p("name"))),
            var("x"),
        );
        assert!(is_web_safe(&both));
        let unsafe_branch = leaf(
            var("x"),
            knows().or(PpExpression::Link(p("name")).inverse()),
            PatternTerm::Term(iri("Bob")),
        );
        // The first branch needs a bound subject, the inverse branch
        // certifies; the intersection is empty.
        assert!(!is_web_safe(&unsafe_branch));
    }

    #[test]
    fn sequence_certifies_through_its_connector() {
        let pattern = leaf(
            PatternTerm::Term(iri("Bob")),
            knows().then(PpExpression::Link(p("name"))),
            var("n"),
        );
        assert_eq!(cbv(&pattern, &BTreeSet::new()), vs(&["n"]));
        let reversed = leaf(
            var("n"),
            knows().then(PpExpression::Link(p("name"))),
            PatternTerm::Term(iri("Bob")),
        );
        assert!(!is_web_safe(&reversed));
    }

    #[test]
    fn star_certifies_from_constant_endpoints_only() {
        assert!(is_web_safe(&leaf(
            PatternTerm::Term(iri("Tim")),
            knows().star(),
            var("x"),
        )));
        assert!(is_web_safe(&leaf(
            PatternTerm::Term(iri("Tim")),
            knows().star(),
            PatternTerm::Term(iri("Bob")),
        )));
    }

    #[test]
    fn reversed_star_needs_an_invertible_step() {
        // Reversal turns the object constant into the closure start, so
        // the closure follows inverted steps. An inverted link step from a
        // bound subject swaps back into a variable-subject base pattern,
        // which certification rejects; a step that was an inverse to begin
        // with swaps into a plain bound-subject link and certifies.
        assert!(!is_web_safe(&leaf(
            var("x"),
            knows().star(),
            PatternTerm::Term(iri("Tim")),
        )));
        assert!(is_web_safe(&leaf(
            var("x"),
            knows().inverse().star(),
            PatternTerm::Term(iri("Tim")),
        )));
    }

    #[test]
    fn star_with_an_uncertifiable_step_is_rejected() {
        // One step of (name)^ / knows starts at the object of a name
        // triple, which a bound subject does not determine.
        let step = PpExpression::Link(p("name")).inverse().then(knows());
        assert!(!is_web_safe(&leaf(
            PatternTerm::Term(iri("Tim")),
            step.star(),
            var("x"),
        )));
    }

    #[test]
    fn star_over_two_variables_is_never_certified() {
        // A conjunction first binds ?x, then runs a star from it. One step
        // of that star certifies, yet the pattern must stay uncertified:
        // the zero-length path equates ?x and ?y even for terms that no
        // reachable document mentions, so the certified evaluation could
        // not reproduce the reference answer.
        let pattern = leaf(PatternTerm::Term(iri("c")), knows().star(), var("x"))
            .and(leaf(var("x"), knows().star(), var("y")));
        assert_eq!(cbv(&pattern, &BTreeSet::new()), BTreeSet::new());
        assert!(!is_web_safe(&pattern));
        let bare = leaf(var("x"), knows().star(), var("y"));
        assert_eq!(cbv(&bare, &vs(&["x"])), BTreeSet::new());
    }

    #[test]
    fn bound_subject_star_certifies_directly() {
        // With the subject pre-bound the closure starts from its value, so
        // the forward step carries the certification even though the
        // inverted step would not.
        let star = leaf(var("x"), knows().star(), PatternTerm::Term(iri("Tim")));
        assert_eq!(cbv(&star, &vs(&["x"])), vs(&["x"]));
        let chained = leaf(PatternTerm::Term(iri("Bob")), knows(), var("x")).and(star);
        assert!(is_web_safe(&chained));
    }

    #[test]
    fn ground_star_needs_one_walkable_direction() {
        // No variables to certify, but deciding the pattern still needs a
        // closure whose steps certify forwards or backwards.
        assert!(is_web_safe(&leaf(
            PatternTerm::Term(iri("c1")),
            knows().inverse().star(),
            PatternTerm::Term(iri("c2")),
        )));
        let stuck = knows().inverse().then(knows()).star();
        assert!(!is_web_safe(&leaf(
            PatternTerm::Term(iri("c1")),
            stuck,
            PatternTerm::Term(iri("c2")),
        )));
    }

    #[test]
    fn ground_sequences_certify_only_computable_connectors() {
        // The connecting variable of a constant-to-constant sequence never
        // shows up in the certified set, so acceptance has to carry the
        // verdict.
        let walkable = knows().then(knows().star());
        assert!(is_web_safe(&leaf(
            PatternTerm::Term(iri("c1")),
            walkable,
            PatternTerm::Term(iri("c2")),
        )));
        let stuck = knows().then(knows().inverse().then(knows()).star());
        assert!(!is_web_safe(&leaf(
            PatternTerm::Term(iri("c1")),
            stuck,
            PatternTerm::Term(iri("c2")),
        )));
    }

    #[test]
    fn optional_right_side_cannot_borrow_outer_bindings() {
        // The optional's right side mentions ?z, bound only outside the
        // optional. Evaluating the optional part starts from its own left
        // side's bindings, so ?z would arrive unbound there; certification
        // must reject the whole pattern.
        let pattern = leaf(PatternTerm::Term(iri("u0")), PpExpression::Link(p("q0")), var("z"))
            .and(
                leaf(PatternTerm::Term(iri("u1")), PpExpression::Link(p("p")), var("a")).opt(leaf(
                    var("z"),
                    PpExpression::Link(p("q")),
                    var("b"),
                )),
            );
        assert_eq!(cbv(&pattern, &BTreeSet::new()), BTreeSet::new());
        assert!(!is_web_safe(&pattern));
    }

    #[test]
    fn optional_right_side_may_use_left_side_bindings() {
        let pattern = leaf(PatternTerm::Term(iri("Bob")), knows(), var("v")).opt(leaf(
            var("v"),
            PpExpression::Link(p("name")),
            var("n"),
        ));
        let report = analyze(&pattern);
        assert!(report.web_safe);
        assert_eq!(report.rule_trace.last().unwrap().rule, 16);
    }

    #[test]
    fn optional_with_independent_right_side_uses_rule_15() {
        let pattern = leaf(PatternTerm::Term(iri("Bob")), knows(), var("v")).opt(leaf(
            PatternTerm::Term(iri("Tim")),
            PpExpression::Link(p("name")),
            var("n"),
        ));
        let report = analyze(&pattern);
        assert!(report.web_safe);
        assert_eq!(report.rule_trace.last().unwrap().rule, 15);
    }

    #[test]
    fn certification_grows_with_the_assumed_set() {
        let pattern = leaf(var("a"), knows(), var("b"));
        assert_eq!(cbv(&pattern, &BTreeSet::new()), BTreeSet::new());
        assert_eq!(cbv(&pattern, &vs(&["a"])), vs(&["a", "b"]));
        assert_eq!(cbv(&pattern, &vs(&["b"])), BTreeSet::new());
    }

    #[test]
    fn report_serializes_with_trace() {
        let pattern = leaf(PatternTerm::Term(iri("Bob")), knows(), var("v"));
        let report = analyze(&pattern);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["web_safe"], true);
        assert_eq!(json["cbv_at_empty"][0], "?v");
        assert!(json["rule_trace"].as_array().is_some_and(|t| !t.is_empty()));
    }
}
