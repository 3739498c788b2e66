//! Standard property path semantics over a single RDF graph, and the
//! full-Web semantics it induces over a WoLD's union graph.
//!
//! Star is evaluated with an auxiliary reachability closure rather than by
//! unfolding paths, so cyclic graphs yield finite, duplicate-free results:
//! base patterns and star patterns always produce cardinality 1, and only
//! sequences (through their join and projection) build higher counts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ast::{fresh_variable, GraphPattern, PatternTerm, PpExpression, PpPattern};
use crate::solution::{SolutionMapping, SolutionMultiset, Variable};
use crate::term::{Graph, Term};
use crate::wold::Wold;

/// Extends `mapping` so that `node` matches `value`. Constants must equal
/// the value, variables bind or must agree with an earlier binding.
pub(crate) fn bind(
    mapping: &SolutionMapping,
    node: &PatternTerm,
    value: &Term,
) -> Option<SolutionMapping> {
    match node {
        PatternTerm::Term(t) => (t == value).then(|| mapping.clone()),
        PatternTerm::Var(v) => match mapping.get(v) {
            Some(bound) => (bound == value).then(|| mapping.clone()),
            None => Some(mapping.clone().bind(v.clone(), value.clone())),
        },
    }
}

/// Collects a set of mappings into a multiset with every cardinality 1.
fn card_one(mappings: BTreeSet<SolutionMapping>) -> SolutionMultiset {
    mappings.into_iter().map(|m| (m, 1)).collect()
}

/// The binary relation a path expression denotes over `g`: every
/// `(start, end)` pair connected by the expression.
fn relation(e: &PpExpression, g: &Graph) -> BTreeMap<Term, BTreeSet<Term>> {
    let x = Variable::new("_fv0");
    let y = Variable::new("_fv1");
    let pattern = PpPattern::new(
        PatternTerm::Var(x.clone()),
        e.clone(),
        PatternTerm::Var(y.clone()),
    );
    let mut out: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
    for (m, _) in eval_pattern(&pattern, g).iter() {
        out.entry(m.get(&x).unwrap().clone())
            .or_default()
            .insert(m.get(&y).unwrap().clone());
    }
    out
}

/// The terms reachable from `start` by zero or more `e`-steps. `start`
/// itself is always a member. The closure expands a worklist in term order,
/// so iteration is deterministic.
pub fn alp1(start: &Term, e: &PpExpression, g: &Graph) -> BTreeSet<Term> {
    let steps = relation(e, g);
    let mut visited: BTreeSet<Term> = [start.clone()].into();
    let mut queue: VecDeque<Term> = [start.clone()].into();
    while let Some(current) = queue.pop_front() {
        if let Some(next) = steps.get(&current) {
            for term in next {
                if visited.insert(term.clone()) {
                    queue.push_back(term.clone());
                }
            }
        }
    }
    visited
}

/// Evaluates one property path pattern over a graph.
pub fn eval_pattern(pattern: &PpPattern, g: &Graph) -> SolutionMultiset {
    let empty = SolutionMapping::new();
    match &pattern.expression {
        PpExpression::Link(u) => {
            let mut out = BTreeSet::new();
            for t in g.iter().filter(|t| &t.predicate == u) {
                if let Some(m) = bind(&empty, &pattern.subject, &t.subject)
                    .and_then(|m| bind(&m, &pattern.object, &t.object))
                {
                    out.insert(m);
                }
            }
            card_one(out)
        }
        PpExpression::NegatedSet(excluded) => {
            let mut out = BTreeSet::new();
            for t in g.iter().filter(|t| !excluded.contains(&t.predicate)) {
                if let Some(m) = bind(&empty, &pattern.subject, &t.subject)
                    .and_then(|m| bind(&m, &pattern.object, &t.object))
                {
                    out.insert(m);
                }
            }
            card_one(out)
        }
        PpExpression::Inverse(e) => eval_pattern(
            &PpPattern::new(
                pattern.object.clone(),
                (**e).clone(),
                pattern.subject.clone(),
            ),
            g,
        ),
        PpExpression::Sequence(e1, e2) => {
            let vars = pattern.vars();
            let mid = PatternTerm::Var(fresh_variable(&vars));
            let left = PpPattern::new(pattern.subject.clone(), (**e1).clone(), mid.clone());
            let right = PpPattern::new(mid, (**e2).clone(), pattern.object.clone());
            eval_pattern(&left, g)
                .join(&eval_pattern(&right, g))
                .project(&vars)
        }
        PpExpression::Alternative(e1, e2) => {
            let left = PpPattern::new(
                pattern.subject.clone(),
                (**e1).clone(),
                pattern.object.clone(),
            );
            let right = PpPattern::new(
                pattern.subject.clone(),
                (**e2).clone(),
                pattern.object.clone(),
            );
            eval_pattern(&left, g).union(&eval_pattern(&right, g))
        }
        PpExpression::Star(e) => eval_star(pattern, e, g),
    }
}

fn eval_star(pattern: &PpPattern, e: &PpExpression, g: &Graph) -> SolutionMultiset {
    let empty = SolutionMapping::new();
    match (&pattern.subject, &pattern.object) {
        (PatternTerm::Term(start), object @ PatternTerm::Var(_)) => {
            let mut out = BTreeSet::new();
            for reached in alp1(start, e, g) {
                if let Some(m) = bind(&empty, object, &reached) {
                    out.insert(m);
                }
            }
            card_one(out)
        }
        (PatternTerm::Term(start), PatternTerm::Term(end)) => {
            if alp1(start, e, g).contains(end) {
                SolutionMultiset::unit()
            } else {
                SolutionMultiset::new()
            }
        }
        (PatternTerm::Var(_), PatternTerm::Term(_)) => eval_pattern(
            &PpPattern::new(
                pattern.object.clone(),
                e.clone().inverse().star(),
                pattern.subject.clone(),
            ),
            g,
        ),
        (subject @ PatternTerm::Var(_), object @ PatternTerm::Var(_)) => {
            let mut out = BTreeSet::new();
            for start in g.terms() {
                for reached in alp1(&start, e, g) {
                    if let Some(m) =
                        bind(&empty, subject, &start).and_then(|m| bind(&m, object, &reached))
                    {
                        out.insert(m);
                    }
                }
            }
            card_one(out)
        }
    }
}

/// Evaluates a graph pattern over a graph: And joins, Union adds, Opt
/// keeps unmatched left mappings alongside the join.
pub fn eval_graph_pattern(pattern: &GraphPattern, g: &Graph) -> SolutionMultiset {
    match pattern {
        GraphPattern::Leaf(p) => eval_pattern(p, g),
        GraphPattern::And(a, b) => eval_graph_pattern(a, g).join(&eval_graph_pattern(b, g)),
        GraphPattern::Union(a, b) => eval_graph_pattern(a, g).union(&eval_graph_pattern(b, g)),
        GraphPattern::Opt(a, b) => {
            let left = eval_graph_pattern(a, g);
            let right = eval_graph_pattern(b, g);
            left.join(&right).union(&left.minus(&right))
        }
    }
}

/// Full-Web semantics: the standard semantics over the union of every
/// document's triples.
pub fn eval_fullweb(pattern: &GraphPattern, wold: &Wold) -> SolutionMultiset {
    eval_graph_pattern(pattern, &wold.union_graph())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Iri, Literal, Triple};
    use proptest::prelude::*;

    fn iri(name: &str) -> Term {
        Term::iri(format!("http://example.org/{name}"))
    }

    fn p(name: &str) -> Iri {
        Iri::new(format!("http://example.org/{name}"))
    }

    fn desk() -> Wold {
        crate::wold::load_fixture(
            &std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
                .join("../../fixtures/desk/manifest.json"),
        )
        .unwrap()
    }

    fn knows() -> PpExpression {
        PpExpression::Link(p("knows"))
    }

    fn name() -> PpExpression {
        PpExpression::Link(p("name"))
    }

    fn var(s: &str) -> PatternTerm {
        PatternTerm::var(s)
    }

    fn mapping(pairs: &[(&str, Term)]) -> SolutionMapping {
        pairs
            .iter()
            .map(|(v, t)| (Variable::new(*v), t.clone()))
            .collect()
    }

    #[test]
    fn link_matches_triples() {
        let wold = desk();
        let bob_doc = wold.adoc(&p("Bob")).unwrap().triples.clone();
        let result = eval_pattern(
            &PpPattern::new(PatternTerm::Term(iri("Bob")), knows(), var("v")),
            &bob_doc,
        );
        assert_eq!(result.len(), 1);
        assert_eq!(result.card(&mapping(&[("v", iri("Alice"))])), 1);
    }

    #[test]
    fn negated_set_excludes_predicates() {
        let wold = desk();
        let bob_doc = wold.adoc(&p("Bob")).unwrap().triples.clone();
        let result = eval_pattern(
            &PpPattern::new(
                PatternTerm::Term(iri("Bob")),
                PpExpression::NegatedSet(vec![p("name")]),
                var("o"),
            ),
            &bob_doc,
        );
        assert_eq!(result.len(), 1);
        assert_eq!(result.card(&mapping(&[("o", iri("Alice"))])), 1);
    }

    #[test]
    fn inverse_swaps_subject_and_object() {
        let g = desk().union_graph();
        let direct = eval_pattern(
            &PpPattern::new(var("a"), knows(), var("b")),
            &g,
        );
        let inverted = eval_pattern(
            &PpPattern::new(var("b"), knows().inverse(), var("a")),
            &g,
        );
        assert_eq!(direct, inverted);
    }

    #[test]
    fn repeated_variable_requires_equal_endpoints() {
        let mut g = Graph::new();
        g.insert(Triple::new(iri("a"), p("p"), iri("a")));
        g.insert(Triple::new(iri("a"), p("p"), iri("b")));
        let result = eval_pattern(&PpPattern::new(var("x"), PpExpression::Link(p("p")), var("x")), &g);
        assert_eq!(result.len(), 1);
        assert_eq!(result.card(&mapping(&[("x", iri("a"))])), 1);
    }

    #[test]
    fn sequence_projection_accumulates_cardinality() {
        let mut g = Graph::new();
        g.insert(Triple::new(iri("a"), p("p"), iri("b1")));
        g.insert(Triple::new(iri("a"), p("p"), iri("b2")));
        g.insert(Triple::new(iri("b1"), p("q"), iri("c")));
        g.insert(Triple::new(iri("b2"), p("q"), iri("c")));
        let result = eval_pattern(
            &PpPattern::new(var("x"), PpExpression::Link(p("p")).then(PpExpression::Link(p("q"))), var("z")),
            &g,
        );
        assert_eq!(result.len(), 1);
        assert_eq!(result.card(&mapping(&[("x", iri("a")), ("z", iri("c"))])), 2);
    }

    #[test]
    fn alp_closure_on_the_desk_cycle() {
        let g = desk().union_graph();
        let reached = alp1(&iri("Tim"), &knows(), &g);
        let expected: BTreeSet<Term> = [iri("Tim"), iri("Bob"), iri("Alice")].into_iter().collect();
        assert_eq!(reached, expected);
    }

    #[test]
    fn star_sequence_collects_all_names() {
        let g = desk().union_graph();
        let result = eval_pattern(
            &PpPattern::new(PatternTerm::Term(iri("Tim")), knows().star().then(name()), var("n")),
            &g,
        );
        let expected: SolutionMultiset = ["Tim", "Bob", "Alice"]
            .into_iter()
            .map(|n| (mapping(&[("n", Term::Literal(Literal::plain(n)))]), 1))
            .collect();
        assert_eq!(result, expected);
    }

    #[test]
    fn star_between_constants_checks_reachability() {
        let g = desk().union_graph();
        let reachable = PpPattern::new(
            PatternTerm::Term(iri("Tim")),
            knows().star(),
            PatternTerm::Term(iri("Alice")),
        );
        assert_eq!(eval_pattern(&reachable, &g), SolutionMultiset::unit());
        let unreachable = PpPattern::new(
            PatternTerm::Term(iri("Alice")),
            knows().star(),
            PatternTerm::Term(iri("Carol")),
        );
        assert!(eval_pattern(&unreachable, &g).is_empty());
    }

    #[test]
    fn star_from_an_unknown_term_reaches_only_itself() {
        let g = desk().union_graph();
        let result = eval_pattern(
            &PpPattern::new(PatternTerm::Term(iri("Ghost")), knows().star(), var("v")),
            &g,
        );
        assert_eq!(result.len(), 1);
        assert_eq!(result.card(&mapping(&[("v", iri("Ghost"))])), 1);
    }

    #[test]
    fn var_var_star_ranges_over_graph_terms() {
        let g = desk().union_graph();
        let result = eval_pattern(&PpPattern::new(var("x"), knows().star(), var("y")), &g);
        // Every graph term pairs with itself by the zero-length path.
        for t in g.terms() {
            assert!(result.contains(&mapping(&[("x", t.clone()), ("y", t)])));
        }
        assert!(result.contains(&mapping(&[("x", iri("Carol")), ("y", iri("Bob"))])));
        // Ghost terms outside the graph do not appear.
        assert!(!result.contains(&mapping(&[("x", iri("Ghost")), ("y", iri("Ghost"))])));
    }

    #[test]
    fn var_const_star_reverses() {
        let g = desk().union_graph();
        let result = eval_pattern(
            &PpPattern::new(var("x"), knows().star(), PatternTerm::Term(iri("Tim"))),
            &g,
        );
        // Everything on the cycle reaches Tim, as does Carol; "Tim" the
        // literal and the predicates reach only themselves, so they miss.
        let who: BTreeSet<SolutionMapping> = result.iter().map(|(m, _)| m.clone()).collect();
        let expected: BTreeSet<SolutionMapping> = ["Tim", "Bob", "Alice", "Carol"]
            .into_iter()
            .map(|n| mapping(&[("x", iri(n))]))
            .collect();
        assert_eq!(who, expected);
    }

    #[test]
    fn opt_keeps_unmatched_left_rows() {
        let g = desk().union_graph();
        let left = GraphPattern::leaf(PpPattern::new(var("s"), name(), var("n")));
        let right = GraphPattern::leaf(PpPattern::new(var("s"), knows(), var("o")));
        let result = eval_graph_pattern(&left.clone().opt(right), &g);
        // Everyone with a name also knows someone, so all rows extend.
        assert!(result
            .iter()
            .all(|(m, _)| m.binds(&Variable::new("o"))));

        let missing = GraphPattern::leaf(PpPattern::new(var("s"), PpExpression::Link(p("absent")), var("o")));
        let result = eval_graph_pattern(&left.opt(missing), &g);
        assert_eq!(result.len(), 3);
        assert!(result.iter().all(|(m, _)| !m.binds(&Variable::new("o"))));
    }

    #[test]
    fn fullweb_is_the_union_graph_semantics() {
        let wold = desk();
        let pattern = GraphPattern::leaf(PpPattern::new(var("v"), knows(), PatternTerm::Term(iri("Tim"))));
        let via_wold = eval_fullweb(&pattern, &wold);
        let via_union = eval_graph_pattern(&pattern, &wold.union_graph());
        assert_eq!(via_wold, via_union);
        let expected: SolutionMultiset = [
            (mapping(&[("v", iri("Alice"))]), 1),
            (mapping(&[("v", iri("Carol"))]), 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(via_wold, expected);
    }

    #[test]
    fn sequence_result_is_independent_of_the_fresh_variable() {
        // Endpoint names that collide with the first fresh candidates force
        // a different internal variable, but the projected result only
        // differs by the endpoint renaming.
        let g = desk().union_graph();
        let colliding = eval_pattern(
            &PpPattern::new(var("_fv0"), knows().then(name()), var("_fv1")),
            &g,
        );
        let plain = eval_pattern(&PpPattern::new(var("x"), knows().then(name()), var("y")), &g);
        let renamed: SolutionMultiset = colliding
            .iter()
            .map(|(m, c)| {
                let m = m
                    .iter()
                    .map(|(v, t)| {
                        let name = if v.as_str() == "_fv0" { "x" } else { "y" };
                        (Variable::new(name), t.clone())
                    })
                    .collect();
                (m, c)
            })
            .collect();
        assert_eq!(renamed, plain);
    }

    // Independent oracle: single-step relations read straight off the
    // triple list, then breadth-first reachability.

    fn oracle_steps(e: &PpExpression, g: &Graph) -> Vec<(Term, Term)> {
        match e {
            PpExpression::Link(u) => g
                .iter()
                .filter(|t| &t.predicate == u)
                .map(|t| (t.subject.clone(), t.object.clone()))
                .collect(),
            PpExpression::Inverse(inner) => oracle_steps(inner, g)
                .into_iter()
                .map(|(a, b)| (b, a))
                .collect(),
            PpExpression::Sequence(e1, e2) => {
                let first = oracle_steps(e1, g);
                let second = oracle_steps(e2, g);
                let mut out = Vec::new();
                for (a, b) in &first {
                    for (c, d) in &second {
                        if b == c {
                            out.push((a.clone(), d.clone()));
                        }
                    }
                }
                out
            }
            PpExpression::Alternative(e1, e2) => {
                let mut out = oracle_steps(e1, g);
                out.extend(oracle_steps(e2, g));
                out
            }
            _ => panic!("oracle handles star-free expressions only"),
        }
    }

    fn oracle_reach(start: &Term, e: &PpExpression, g: &Graph) -> BTreeSet<Term> {
        let steps = oracle_steps(e, g);
        let mut visited: BTreeSet<Term> = [start.clone()].into();
        loop {
            let mut grew = false;
            for (a, b) in &steps {
                if visited.contains(a) && visited.insert(b.clone()) {
                    grew = true;
                }
            }
            if !grew {
                return visited;
            }
        }
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        let node = prop_oneof![
            Just(iri("n0")),
            Just(iri("n1")),
            Just(iri("n2")),
            Just(iri("n3")),
            Just(iri("n4")),
            Just(iri("n5")),
        ];
        let pred = prop_oneof![Just(p("p")), Just(p("q"))];
        proptest::collection::vec((node.clone(), pred, node), 0..=12)
            .prop_map(|triples| {
                triples
                    .into_iter()
                    .map(|(s, pred, o)| Triple::new(s, pred, o))
                    .collect()
            })
    }

    fn arb_step_expression() -> impl Strategy<Value = PpExpression> {
        let link = prop_oneof![
            Just(PpExpression::Link(p("p"))),
            Just(PpExpression::Link(p("q"))),
        ];
        prop_oneof![
            link.clone(),
            link.clone().prop_map(|e| e.inverse()),
            (link.clone(), link.clone()).prop_map(|(a, b)| a.then(b)),
            (link.clone(), link).prop_map(|(a, b)| a.or(b)),
        ]
    }

    proptest! {
        #[test]
        fn closure_matches_breadth_first_reachability(
            g in arb_graph(),
            e in arb_step_expression(),
            start in 0usize..6,
        ) {
            let start = iri(&format!("n{start}"));
            prop_assert_eq!(alp1(&start, &e, &g), oracle_reach(&start, &e, &g));
        }

        #[test]
        fn star_pattern_agrees_with_reachability(
            g in arb_graph(),
            e in arb_step_expression(),
            start in 0usize..6,
        ) {
            let start = iri(&format!("n{start}"));
            let result = eval_pattern(
                &PpPattern::new(PatternTerm::Term(start.clone()), e.clone().star(), var("v")),
                &g,
            );
            let expected = card_one(
                oracle_reach(&start, &e, &g)
                    .into_iter()
                    .map(|t| mapping(&[("v", t)]))
                    .collect(),
            );
            prop_assert_eq!(result, expected);
        }

        #[test]
        fn inverse_round_trips(g in arb_graph(), e in arb_step_expression()) {
            let direct = eval_pattern(&PpPattern::new(var("a"), e.clone(), var("b")), &g);
            let double = eval_pattern(
                &PpPattern::new(var("a"), e.inverse().inverse(), var("b")),
                &g,
            );
            prop_assert_eq!(direct, double);
        }
    }
}
