//! Context-based semantics over a Web of Linked Data, two ways.
//!
//! The reference evaluator works on a fully known `Wold` and implements the
//! denotational definition directly: a base pattern with an IRI subject is
//! matched against that IRI's context only, a literal subject yields
//! nothing, and a variable subject searches the union of every context.
//! Stars close over reachability with `alpw1`.
//!
//! The lookup-driven evaluator answers the same question while retrieving
//! only the documents it actually needs through a `Web` backend. Before
//! every recursive step it re-checks that the pattern's remaining variables
//! are certified given the bindings accumulated so far, so an uncertified
//! pattern fails with a not-web-bounded error instead of returning an
//! answer that silently depends on unreachable documents. `force_unsafe`
//! skips that check; variable subjects then fall back to enumerating the
//! backend's full document set, which only an omniscient backend supports.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ast::{fresh_variable, GraphPattern, PatternTerm, PpExpression, PpPattern};
use crate::error::{Error, Result};
use crate::safety::Analyzer;
use crate::solution::{SolutionMapping, SolutionMultiset, Variable};
use crate::std_eval;
use crate::term::{Graph, Iri, Term};
use crate::wold::{BudgetedWeb, Web, Wold};

/// Knobs for the lookup-driven evaluator.
#[derive(Debug, Clone, Default)]
pub struct EvalConfig {
    pub max_lookups: Option<u64>,
    pub force_unsafe: bool,
    pub trace: bool,
}

// ---------------------------------------------------------------------------
// Reference evaluator over a fully known WoLD.

/// Evaluates a graph pattern under context-based semantics with full
/// knowledge of the WoLD.
pub fn eval_ctx_reference(pattern: &GraphPattern, wold: &Wold) -> SolutionMultiset {
    match pattern {
        GraphPattern::Leaf(p) => ref_leaf(p, wold),
        GraphPattern::And(a, b) => ref_join(a, b, wold),
        GraphPattern::Union(a, b) => {
            eval_ctx_reference(a, wold).union(&eval_ctx_reference(b, wold))
        }
        GraphPattern::Opt(a, b) => {
            let left = eval_ctx_reference(a, wold);
            let right = eval_ctx_reference(b, wold);
            left.join(&right).union(&left.minus(&right))
        }
    }
}

fn ref_join(a: &GraphPattern, b: &GraphPattern, wold: &Wold) -> SolutionMultiset {
    eval_ctx_reference(a, wold).join(&eval_ctx_reference(b, wold))
}

fn ref_leaf(p: &PpPattern, wold: &Wold) -> SolutionMultiset {
    match &p.expression {
        PpExpression::Link(_) | PpExpression::NegatedSet(_) => {
            let graph = match &p.subject {
                PatternTerm::Term(t) => wold.context(t),
                PatternTerm::Var(_) => wold.context_union(),
            };
            std_eval::eval_pattern(p, &graph)
        }
        PpExpression::Inverse(e) => ref_leaf(
            &PpPattern::new(p.object.clone(), (**e).clone(), p.subject.clone()),
            wold,
        ),
        PpExpression::Sequence(e1, e2) => {
            let vars = p.vars();
            let mid = PatternTerm::Var(fresh_variable(&vars));
            let left = ref_leaf(
                &PpPattern::new(p.subject.clone(), (**e1).clone(), mid.clone()),
                wold,
            );
            let right = ref_leaf(
                &PpPattern::new(mid, (**e2).clone(), p.object.clone()),
                wold,
            );
            left.join(&right).project(&vars)
        }
        PpExpression::Alternative(e1, e2) => {
            let left = ref_leaf(
                &PpPattern::new(p.subject.clone(), (**e1).clone(), p.object.clone()),
                wold,
            );
            let right = ref_leaf(
                &PpPattern::new(p.subject.clone(), (**e2).clone(), p.object.clone()),
                wold,
            );
            left.union(&right)
        }
        PpExpression::Star(e) => ref_star(p, e, wold),
    }
}

fn ref_star(p: &PpPattern, e: &PpExpression, wold: &Wold) -> SolutionMultiset {
    let empty = SolutionMapping::new();
    match (&p.subject, &p.object) {
        (PatternTerm::Term(start), object @ PatternTerm::Var(_)) => {
            let steps = ref_step_relation(e, wold);
            let mut out = BTreeSet::new();
            for reached in closure(start, &steps) {
                if let Some(m) = std_eval::bind(&empty, object, &reached) {
                    out.insert(m);
                }
            }
            out.into_iter().map(|m| (m, 1)).collect()
        }
        (PatternTerm::Term(start), PatternTerm::Term(end)) => {
            let steps = ref_step_relation(e, wold);
            if closure(start, &steps).contains(end) {
                SolutionMultiset::unit()
            } else {
                SolutionMultiset::new()
            }
        }
        (PatternTerm::Var(_), PatternTerm::Term(_)) => ref_leaf(
            &PpPattern::new(
                p.object.clone(),
                e.clone().inverse().star(),
                p.subject.clone(),
            ),
            wold,
        ),
        (subject @ PatternTerm::Var(_), object @ PatternTerm::Var(_)) => {
            let steps = ref_step_relation(e, wold);
            let mut out = BTreeSet::new();
            for start in wold.all_terms() {
                for reached in closure(&start, &steps) {
                    if let Some(m) = std_eval::bind(&empty, subject, &start)
                        .and_then(|m| std_eval::bind(&m, object, &reached))
                    {
                        out.insert(m);
                    }
                }
            }
            out.into_iter().map(|m| (m, 1)).collect()
        }
    }
}

/// One-step reachability of `e` under context-based semantics, read off the
/// reference evaluation of a fresh variable-to-variable pattern.
fn ref_step_relation(e: &PpExpression, wold: &Wold) -> BTreeMap<Term, BTreeSet<Term>> {
    let x = Variable::new("_fv0");
    let y = Variable::new("_fv1");
    let pattern = PpPattern::new(
        PatternTerm::Var(x.clone()),
        e.clone(),
        PatternTerm::Var(y.clone()),
    );
    let mut out: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
    for (m, _) in ref_leaf(&pattern, wold).iter() {
        out.entry(m.get(&x).unwrap().clone())
            .or_default()
            .insert(m.get(&y).unwrap().clone());
    }
    out
}

fn closure(start: &Term, steps: &BTreeMap<Term, BTreeSet<Term>>) -> BTreeSet<Term> {
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

/// The terms reachable from `gamma` by zero or more `e`-steps under
/// context-based semantics; `gamma` itself is always included.
pub fn alpw1(gamma: &Term, e: &PpExpression, wold: &Wold) -> BTreeSet<Term> {
    closure(gamma, &ref_step_relation(e, wold))
}

// ---------------------------------------------------------------------------
// Lookup-driven evaluator.

/// Evaluates `pattern` restricted to solutions compatible with `mu_in`,
/// retrieving documents through `web` on demand. Unless
/// `cfg.force_unsafe` is set, every recursive step requires the pattern's
/// variables to be certified given the bindings in scope; otherwise the
/// not-web-bounded error is returned instead of an incomplete answer.
pub fn eval_ctx_based(
    pattern: &GraphPattern,
    mu_in: &SolutionMapping,
    web: &dyn Web,
    cfg: &EvalConfig,
) -> Result<SolutionMultiset> {
    match cfg.max_lookups {
        Some(limit) => {
            let budgeted = BudgetedWeb::new(web, limit);
            CtxEvaluator::new(&budgeted, cfg).eval(pattern, mu_in, 0)
        }
        None => CtxEvaluator::new(web, cfg).eval(pattern, mu_in, 0),
    }
}

/// Computes the reachability closure of `gamma` under `e` by evaluating
/// one step at a time through `web`.
pub fn exec_alpw1(
    gamma: &Term,
    e: &PpExpression,
    web: &dyn Web,
    cfg: &EvalConfig,
) -> Result<BTreeSet<Term>> {
    match cfg.max_lookups {
        Some(limit) => {
            let budgeted = BudgetedWeb::new(web, limit);
            CtxEvaluator::new(&budgeted, cfg).closure_via_lookups(gamma, e, 0)
        }
        None => CtxEvaluator::new(web, cfg).closure_via_lookups(gamma, e, 0),
    }
}

struct CtxEvaluator<'a> {
    web: &'a dyn Web,
    cfg: &'a EvalConfig,
    analyzer: Analyzer,
}

impl<'a> CtxEvaluator<'a> {
    fn new(web: &'a dyn Web, cfg: &'a EvalConfig) -> Self {
        CtxEvaluator {
            web,
            cfg,
            analyzer: Analyzer::new(),
        }
    }

    fn trace(&self, depth: usize, case: &str, fragment: &dyn std::fmt::Display, iri: Option<&Iri>) {
        if self.cfg.trace {
            let looked_up = iri.map_or("-".to_string(), |u| u.to_string());
            eprintln!("{depth}\t{case}\t{fragment}\t{looked_up}");
        }
    }

    fn check_certified(
        &mut self,
        pattern: &GraphPattern,
        mu_in: &SolutionMapping,
    ) -> Result<()> {
        if self.cfg.force_unsafe {
            return Ok(());
        }
        let bound = mu_in.dom();
        let (certified, accepted) = self.analyzer.certify(pattern, &bound);
        let vars = pattern.vars();
        if accepted && certified == vars {
            Ok(())
        } else {
            Err(Error::NotWebBounded {
                missing: vars.difference(&certified).cloned().collect(),
            })
        }
    }

    fn lookup(
        &self,
        iri: &Iri,
        depth: usize,
        fragment: &dyn std::fmt::Display,
    ) -> Result<Option<Graph>> {
        self.trace(depth, "lookup", fragment, Some(iri));
        Ok(self.web.lookup(iri)?.map(|doc| doc.triples.clone()))
    }

    fn eval(
        &mut self,
        pattern: &GraphPattern,
        mu_in: &SolutionMapping,
        depth: usize,
    ) -> Result<SolutionMultiset> {
        self.check_certified(pattern, mu_in)?;
        match pattern {
            GraphPattern::Leaf(p) => self.eval_leaf(p, mu_in, depth),
            GraphPattern::And(p1, p2) => {
                self.trace(depth, "and", pattern, None);
                let first_certified = {
                    let bound = mu_in.dom();
                    self.analyzer.certifies(p1, &bound)
                };
                let (first, second) = if first_certified || self.cfg.force_unsafe {
                    (p1, p2)
                } else {
                    (p2, p1)
                };
                let left = self.eval(first, mu_in, depth + 1)?;
                let mut out = SolutionMultiset::new();
                for (mu, c) in left.iter() {
                    let extended = match mu_in.merge(mu) {
                        Some(m) => m,
                        None => continue,
                    };
                    let right = self.eval(second, &extended, depth + 1)?;
                    for (mu2, c2) in right.iter() {
                        if let Some(merged) = mu.merge(mu2) {
                            out.add(merged, c * c2);
                        }
                    }
                }
                Ok(out)
            }
            GraphPattern::Union(p1, p2) => {
                self.trace(depth, "union", pattern, None);
                let left = self.eval(p1, mu_in, depth + 1)?;
                let right = self.eval(p2, mu_in, depth + 1)?;
                Ok(left.union(&right))
            }
            GraphPattern::Opt(p1, p2) => {
                self.trace(depth, "opt", pattern, None);
                let left = self.eval(p1, mu_in, depth + 1)?;
                let mut out = SolutionMultiset::new();
                for (mu, c) in left.iter() {
                    let right = self.eval(p2, mu, depth + 1)?;
                    if right.is_empty() {
                        out.add(mu.clone(), c);
                    } else {
                        for (mu2, c2) in right.iter() {
                            if mu2.compatible(mu_in) {
                                if let Some(merged) = mu.merge(mu2) {
                                    out.add(merged, c * c2);
                                }
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    fn eval_leaf(
        &mut self,
        p: &PpPattern,
        mu_in: &SolutionMapping,
        depth: usize,
    ) -> Result<SolutionMultiset> {
        match &p.expression {
            PpExpression::Link(_) | PpExpression::NegatedSet(_) => self.eval_base(p, mu_in, depth),
            PpExpression::Inverse(e) => {
                self.trace(depth, "inverse", p, None);
                let swapped = GraphPattern::leaf(PpPattern::new(
                    p.object.clone(),
                    (**e).clone(),
                    p.subject.clone(),
                ));
                self.eval(&swapped, mu_in, depth + 1)
            }
            PpExpression::Sequence(e1, e2) => {
                self.trace(depth, "sequence", p, None);
                let mut avoid = mu_in.dom();
                avoid.extend(p.vars());
                let connector = PatternTerm::Var(fresh_variable(&avoid));
                let rewritten = GraphPattern::leaf(PpPattern::new(
                    p.subject.clone(),
                    (**e1).clone(),
                    connector.clone(),
                ))
                .and(GraphPattern::leaf(PpPattern::new(
                    connector,
                    (**e2).clone(),
                    p.object.clone(),
                )));
                let joined = self.eval(&rewritten, mu_in, depth + 1)?;
                Ok(joined.project(&p.vars()))
            }
            PpExpression::Alternative(e1, e2) => {
                self.trace(depth, "alternative", p, None);
                let rewritten = GraphPattern::leaf(PpPattern::new(
                    p.subject.clone(),
                    (**e1).clone(),
                    p.object.clone(),
                ))
                .union(GraphPattern::leaf(PpPattern::new(
                    p.subject.clone(),
                    (**e2).clone(),
                    p.object.clone(),
                )));
                self.eval(&rewritten, mu_in, depth + 1)
            }
            PpExpression::Star(e) => self.eval_star(p, e, mu_in, depth),
        }
    }

    fn eval_base(
        &mut self,
        p: &PpPattern,
        mu_in: &SolutionMapping,
        depth: usize,
    ) -> Result<SolutionMultiset> {
        self.trace(depth, "base", p, None);
        let lookup_iri: Option<Iri> = match &p.subject {
            PatternTerm::Term(Term::Iri(u)) => Some(u.clone()),
            PatternTerm::Term(_) => None,
            PatternTerm::Var(v) => match mu_in.get(v) {
                Some(Term::Iri(u)) => Some(u.clone()),
                Some(_) => None,
                None => return self.forced_base_enumeration(p, mu_in, depth),
            },
        };
        let Some(u) = lookup_iri else {
            return Ok(SolutionMultiset::new());
        };
        match self.lookup(&u, depth, p)? {
            None => Ok(SolutionMultiset::new()),
            Some(triples) => {
                let context = triples.with_subject(&Term::Iri(u));
                let result = std_eval::eval_pattern(p, &context);
                Ok(result.restrict_compatible(mu_in))
            }
        }
    }

    /// Only reachable with `force_unsafe`: a base pattern whose subject
    /// variable is unbound. Every authoritative IRI of an omniscient
    /// backend is looked up to reconstruct the full context union.
    fn forced_base_enumeration(
        &mut self,
        p: &PpPattern,
        mu_in: &SolutionMapping,
        depth: usize,
    ) -> Result<SolutionMultiset> {
        let candidates: Vec<Iri> = match self.web.omniscient() {
            Some(wold) => wold.authoritative_iris().cloned().collect(),
            None => {
                return Err(Error::OmniscienceRequired {
                    operation: "evaluating a base pattern with an unbound subject variable",
                })
            }
        };
        let mut union = Graph::new();
        for u in candidates {
            if let Some(triples) = self.lookup(&u, depth, p)? {
                union.extend(triples.with_subject(&Term::Iri(u)).iter().cloned());
            }
        }
        let result = std_eval::eval_pattern(p, &union);
        Ok(result.restrict_compatible(mu_in))
    }

    fn eval_star(
        &mut self,
        p: &PpPattern,
        e: &PpExpression,
        mu_in: &SolutionMapping,
        depth: usize,
    ) -> Result<SolutionMultiset> {
        match (&p.subject, &p.object) {
            (PatternTerm::Term(start), PatternTerm::Var(object)) => {
                self.trace(depth, "star-const-var", p, None);
                let reached = self.closure_via_lookups(start, e, depth + 1)?;
                Ok(self.star_solutions(None, object, reached, mu_in))
            }
            (PatternTerm::Term(start), PatternTerm::Term(end)) => {
                self.trace(depth, "star-const-const", p, None);
                // Walk backwards from the object when only the inverted
                // step certifies; membership in either closure decides the
                // pattern.
                let backwards = !self.cfg.force_unsafe
                    && !self.analyzer.step_certifies(e)
                    && self.analyzer.step_certifies(&e.clone().inverse());
                let member = if backwards {
                    let reached = self.closure_via_lookups(end, &e.clone().inverse(), depth + 1)?;
                    reached.contains(start)
                } else {
                    let reached = self.closure_via_lookups(start, e, depth + 1)?;
                    reached.contains(end)
                };
                if member {
                    Ok(SolutionMultiset::unit())
                } else {
                    Ok(SolutionMultiset::new())
                }
            }
            (PatternTerm::Var(subject), PatternTerm::Term(end)) => {
                self.trace(depth, "star-var-const", p, None);
                // A pre-bound subject starts the closure directly; the
                // certified forward step keeps the walk computable.
                let bound = mu_in.get(subject).cloned();
                if let Some(start) = bound {
                    if self.cfg.force_unsafe || self.analyzer.step_certifies(e) {
                        let reached = self.closure_via_lookups(&start, e, depth + 1)?;
                        return if reached.contains(end) {
                            Ok(SolutionMultiset::singleton(
                                SolutionMapping::new().bind(subject.clone(), start),
                            ))
                        } else {
                            Ok(SolutionMultiset::new())
                        };
                    }
                }
                let reversed = GraphPattern::leaf(PpPattern::new(
                    p.object.clone(),
                    e.clone().inverse().star(),
                    p.subject.clone(),
                ));
                self.eval(&reversed, mu_in, depth + 1)
            }
            (PatternTerm::Var(subject), PatternTerm::Var(object)) => {
                self.trace(depth, "star-var-var", p, None);
                if let Some(start) = mu_in.get(subject) {
                    let start = start.clone();
                    let reached = self.closure_via_lookups(&start, e, depth + 1)?;
                    Ok(self.star_solutions(Some((subject, &start)), object, reached, mu_in))
                } else if mu_in.binds(object) {
                    let reversed = GraphPattern::leaf(PpPattern::new(
                        p.object.clone(),
                        e.clone().inverse().star(),
                        p.subject.clone(),
                    ));
                    self.eval(&reversed, mu_in, depth + 1)
                } else {
                    self.forced_star_enumeration(p, e, mu_in, depth)
                }
            }
        }
    }

    fn star_solutions(
        &self,
        subject: Option<(&Variable, &Term)>,
        object: &Variable,
        reached: BTreeSet<Term>,
        mu_in: &SolutionMapping,
    ) -> SolutionMultiset {
        let mut out = SolutionMultiset::new();
        for x in reached {
            match mu_in.get(object) {
                Some(required) if required != &x => continue,
                _ => {}
            }
            let mut mapping = SolutionMapping::new();
            let mut consistent = true;
            if let Some((v, t)) = subject {
                mapping = mapping.bind(v.clone(), t.clone());
            }
            match mapping.get(object) {
                Some(bound) => consistent = bound == &x,
                None => mapping = mapping.bind(object.clone(), x),
            }
            if consistent {
                out.add(mapping, 1);
            }
        }
        out
    }

    /// Only reachable with `force_unsafe`: a star between two variables
    /// neither of which is bound. Requires an omniscient backend to supply
    /// the candidate start terms.
    fn forced_star_enumeration(
        &mut self,
        p: &PpPattern,
        e: &PpExpression,
        mu_in: &SolutionMapping,
        depth: usize,
    ) -> Result<SolutionMultiset> {
        let candidates = match self.web.omniscient() {
            Some(wold) => wold.all_terms(),
            None => {
                return Err(Error::OmniscienceRequired {
                    operation: "evaluating a star between two unbound variables",
                })
            }
        };
        let (PatternTerm::Var(subject), PatternTerm::Var(object)) = (&p.subject, &p.object) else {
            unreachable!("caller matched two variables");
        };
        let mut out = SolutionMultiset::new();
        for start in candidates {
            let reached = self.closure_via_lookups(&start, e, depth + 1)?;
            let partial = self.star_solutions(Some((subject, &start)), object, reached, mu_in);
            for (m, c) in partial.iter() {
                out.add(m.clone(), c);
            }
        }
        Ok(out)
    }

    /// Worklist closure over `e`-steps, each step evaluated as a fresh
    /// variable-to-variable pattern with the current node pre-bound.
    fn closure_via_lookups(
        &mut self,
        gamma: &Term,
        e: &PpExpression,
        depth: usize,
    ) -> Result<BTreeSet<Term>> {
        let x = Variable::new("_fv0");
        let y = Variable::new("_fv1");
        let step = GraphPattern::leaf(PpPattern::new(
            PatternTerm::Var(x.clone()),
            e.clone(),
            PatternTerm::Var(y.clone()),
        ));
        let mut visited: BTreeSet<Term> = [gamma.clone()].into();
        let mut queue: VecDeque<Term> = [gamma.clone()].into();
        while let Some(current) = queue.pop_front() {
            let mu = SolutionMapping::new().bind(x.clone(), current);
            let result = self.eval(&step, &mu, depth)?;
            for (m, _) in result.iter() {
                let next = m.get(&y).expect("step solutions bind the object");
                if visited.insert(next.clone()) {
                    queue.push_back(next.clone());
                }
            }
        }
        Ok(visited)
    }
}
