//! The Web of Linked Data model and lookup backends.
//!
//! A WoLD is a finite set of documents, each holding an RDF graph, plus a
//! partial function `adoc` from IRIs to documents (who is authoritative for
//! what). The context of an IRI is the subset of its authoritative
//! document's triples that have the IRI as subject; context-based query
//! semantics only ever sees those.
//!
//! Evaluation reaches the Web through the [`Web`] trait: `lookup` an IRI,
//! get its document or nothing. The fixture backend serves a loaded WoLD
//! and can also hand the whole WoLD out for the omniscient semantics; the
//! HTTP backend (see [`crate::http`]) cannot.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::ntriples::parse_ntriples;
use crate::term::{Graph, Iri, Term, Triple};

/// One retrievable document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Where the document came from (file path or URL), for messages.
    pub id: String,
    pub triples: Graph,
}

/// A Web of Linked Data: documents plus the authoritative-document map.
#[derive(Debug, Clone, Default)]
pub struct Wold {
    documents: Vec<Arc<Document>>,
    adoc: BTreeMap<Iri, usize>,
}

impl Wold {
    pub fn new() -> Self {
        Wold::default()
    }

    /// Adds a document and returns its index.
    pub fn add_document(&mut self, document: Document) -> usize {
        self.documents.push(Arc::new(document));
        self.documents.len() - 1
    }

    /// Declares `iri` authoritative for the document at `index`.
    pub fn set_adoc(&mut self, iri: Iri, index: usize) {
        assert!(index < self.documents.len(), "no document {index}");
        self.adoc.insert(iri, index);
    }

    pub fn documents(&self) -> impl Iterator<Item = &Arc<Document>> {
        self.documents.iter()
    }

    pub fn document_count(&self) -> usize {
        self.documents.len()
    }

    /// The IRIs `adoc` is defined for.
    pub fn authoritative_iris(&self) -> impl Iterator<Item = &Iri> {
        self.adoc.keys()
    }

    /// The document `iri` is authoritative for, if any.
    pub fn adoc(&self, iri: &Iri) -> Option<&Arc<Document>> {
        self.adoc.get(iri).map(|&i| &self.documents[i])
    }

    /// The context of a term: for an IRI with an authoritative document,
    /// that document's triples with the IRI as subject; empty for
    /// everything else.
    pub fn context(&self, term: &Term) -> Graph {
        match term {
            Term::Iri(iri) => match self.adoc(iri) {
                Some(doc) => doc.triples.with_subject(term),
                None => Graph::new(),
            },
            _ => Graph::new(),
        }
    }

    /// The union of all contexts, i.e. everything context-based evaluation
    /// can ever see.
    pub fn context_union(&self) -> Graph {
        let mut out = Graph::new();
        for iri in self.adoc.keys() {
            out.extend(self.context(&Term::Iri(iri.clone())).iter().cloned());
        }
        out
    }

    /// The union of all document graphs.
    pub fn union_graph(&self) -> Graph {
        let mut out = Graph::new();
        for doc in &self.documents {
            out.extend(doc.triples.iter().cloned());
        }
        out
    }

    /// Every term mentioned in any document, predicates included.
    pub fn all_terms(&self) -> BTreeSet<Term> {
        self.union_graph().terms()
    }

    /// The link graph: an edge from document `d` to document `e` when `d`
    /// mentions an IRI whose authoritative document is `e`. Nodes are
    /// document indexes.
    pub fn link_graph(&self) -> BTreeSet<(usize, usize)> {
        let mut edges = BTreeSet::new();
        for (from, doc) in self.documents.iter().enumerate() {
            for term in doc.triples.terms() {
                if let Term::Iri(iri) = term {
                    if let Some(&to) = self.adoc.get(&iri) {
                        edges.insert((from, to));
                    }
                }
            }
        }
        edges
    }
}

/// Manifest schema: `{"documents": [{"iri": "...", "file": "..."}]}` with
/// file paths relative to the manifest.
#[derive(serde::Deserialize)]
struct Manifest {
    documents: Vec<ManifestEntry>,
}

#[derive(serde::Deserialize)]
struct ManifestEntry {
    iri: String,
    file: String,
}

/// Loads a WoLD from a manifest file. Each entry becomes one document whose
/// blank node labels get the prefix `d<index>_`, so labels never collide
/// across documents.
pub fn load_fixture(manifest_path: &Path) -> Result<Wold> {
    let manifest_text = std::fs::read_to_string(manifest_path).map_err(|e| Error::Io {
        path: manifest_path.display().to_string(),
        source: e,
    })?;
    let manifest: Manifest = serde_json::from_str(&manifest_text).map_err(|e| Error::Manifest {
        path: manifest_path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut wold = Wold::new();
    let mut seen = BTreeSet::new();
    for (index, entry) in manifest.documents.iter().enumerate() {
        if !seen.insert(entry.iri.clone()) {
            return Err(Error::Manifest {
                path: manifest_path.display().to_string(),
                message: format!("duplicate IRI entry <{}>", entry.iri),
            });
        }
        let file = base.join(&entry.file);
        let text = std::fs::read_to_string(&file).map_err(|e| Error::Io {
            path: file.display().to_string(),
            source: e,
        })?;
        let triples = parse_ntriples(&text, &|label| format!("d{index}_{label}"))
            .map_err(|e| Error::Ntriples {
                path: file.display().to_string(),
                line: e.line,
                message: e.message,
            })?;
        let doc_index = wold.add_document(Document {
            id: file.display().to_string(),
            triples,
        });
        wold.set_adoc(Iri::new(entry.iri.clone()), doc_index);
    }
    Ok(wold)
}

/// What a single lookup came back with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupOutcome {
    Retrieved,
    NotRetrievable,
}

/// A record of every lookup performed, in order, plus distinct-IRI
/// bookkeeping. Backends share one ledger per query execution.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    pub attempts: Vec<(Iri, LookupOutcome)>,
    distinct: BTreeMap<Iri, LookupOutcome>,
}

impl Ledger {
    pub fn record(&mut self, iri: &Iri, outcome: LookupOutcome) {
        self.attempts.push((iri.clone(), outcome));
        self.distinct.entry(iri.clone()).or_insert(outcome);
    }

    pub fn distinct_count(&self) -> u64 {
        self.distinct.len() as u64
    }

    pub fn attempt_count(&self) -> u64 {
        self.attempts.len() as u64
    }

    pub fn not_retrievable_count(&self) -> u64 {
        self.distinct
            .values()
            .filter(|o| **o == LookupOutcome::NotRetrievable)
            .count() as u64
    }

    /// The `lookups: ...` line the CLI prints on stderr.
    pub fn summary(&self) -> String {
        format!(
            "lookups: distinct={} attempts={} not_retrievable={}",
            self.distinct_count(),
            self.attempt_count(),
            self.not_retrievable_count()
        )
    }
}

/// A source of documents reachable by IRI lookup.
pub trait Web {
    /// Looks up one IRI. `Ok(None)` means the IRI has no retrievable
    /// document; `Err` means the backend itself failed. Lookups are
    /// memoized, and every call lands in the ledger.
    fn lookup(&self, iri: &Iri) -> Result<Option<Arc<Document>>>;

    /// A snapshot of the ledger so far.
    fn ledger(&self) -> Ledger;

    /// The whole WoLD, for backends that know it. Live backends return
    /// `None`, and callers needing omniscience must turn that into
    /// [`Error::OmniscienceRequired`].
    fn omniscient(&self) -> Option<&Wold>;
}

struct MemoState {
    memo: BTreeMap<Iri, Option<Arc<Document>>>,
    ledger: Ledger,
}

/// Lookup access to a loaded [`Wold`].
pub struct FixtureWeb {
    wold: Wold,
    state: Mutex<MemoState>,
}

impl FixtureWeb {
    pub fn new(wold: Wold) -> Self {
        FixtureWeb {
            wold,
            state: Mutex::new(MemoState {
                memo: BTreeMap::new(),
                ledger: Ledger::default(),
            }),
        }
    }

    pub fn wold(&self) -> &Wold {
        &self.wold
    }
}

impl Web for FixtureWeb {
    fn lookup(&self, iri: &Iri) -> Result<Option<Arc<Document>>> {
        let mut state = self.state.lock().unwrap();
        if let Some(cached) = state.memo.get(iri) {
            let outcome = if cached.is_some() {
                LookupOutcome::Retrieved
            } else {
                LookupOutcome::NotRetrievable
            };
            let cached = cached.clone();
            state.ledger.record(iri, outcome);
            return Ok(cached);
        }
        let result = self.wold.adoc(iri).cloned();
        let outcome = if result.is_some() {
            LookupOutcome::Retrieved
        } else {
            LookupOutcome::NotRetrievable
        };
        state.memo.insert(iri.clone(), result.clone());
        state.ledger.record(iri, outcome);
        Ok(result)
    }

    fn ledger(&self) -> Ledger {
        self.state.lock().unwrap().ledger.clone()
    }

    fn omniscient(&self) -> Option<&Wold> {
        Some(&self.wold)
    }
}

/// Wraps a [`Web`] and fails any lookup of a new distinct IRI past the
/// budget. Memoized repeats stay free.
pub struct BudgetedWeb<'a> {
    inner: &'a dyn Web,
    max_distinct: u64,
}

impl<'a> BudgetedWeb<'a> {
    pub fn new(inner: &'a dyn Web, max_distinct: u64) -> Self {
        BudgetedWeb {
            inner,
            max_distinct,
        }
    }
}

impl Web for BudgetedWeb<'_> {
    fn lookup(&self, iri: &Iri) -> Result<Option<Arc<Document>>> {
        let ledger = self.inner.ledger();
        let already_counted = ledger.attempts.iter().any(|(seen, _)| seen == iri);
        if !already_counted && ledger.distinct_count() >= self.max_distinct {
            return Err(Error::LookupBudgetExceeded {
                limit: self.max_distinct,
            });
        }
        self.inner.lookup(iri)
    }

    fn ledger(&self) -> Ledger {
        self.inner.ledger()
    }

    fn omniscient(&self) -> Option<&Wold> {
        self.inner.omniscient()
    }
}

/// Convenience constructors for tests and examples.
impl Wold {
    /// Builds a WoLD from `(authoritative IRI, triples)` pairs, one
    /// document per pair.
    pub fn from_documents<I>(docs: I) -> Wold
    where
        I: IntoIterator<Item = (Iri, Vec<Triple>)>,
    {
        let mut wold = Wold::new();
        for (iri, triples) in docs {
            let index = wold.add_document(Document {
                id: iri.0.clone(),
                triples: triples.into_iter().collect(),
            });
            wold.set_adoc(iri, index);
        }
        wold
    }
}
