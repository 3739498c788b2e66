//! Live HTTP lookup backend.
//!
//! Dereferences an IRI with a GET request asking for N-Triples, follows up
//! to five redirects, and parses the final body. A non-success status, an
//! unparseable body, an over-long redirect chain, or a timeout all mean
//! the IRI has no retrievable document; only transport-level failures
//! (refused connections, TLS trouble) surface as backend errors, and those
//! are neither memoized nor recorded in the ledger. Each retrieved
//! document gets its blank-node labels freshened with a monotone counter
//! prefix, so labels never collide across retrievals.
//!
//! The backend is lookup-only: it cannot enumerate documents, so
//! [`Web::omniscient`] returns `None` and operations needing the whole
//! WoLD refuse with an omniscience-required error.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::ntriples::parse_ntriples;
use crate::term::{Graph, Iri};
use crate::wold::{Document, Ledger, LookupOutcome, Web, Wold};

const ACCEPT_NTRIPLES: &str = "application/n-triples";
const MAX_REDIRECTS: usize = 5;
const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

struct HttpState {
    memo: BTreeMap<Iri, Option<Arc<Document>>>,
    ledger: Ledger,
}

/// A [`Web`] that dereferences IRIs over HTTP.
pub struct HttpWeb {
    client: reqwest::blocking::Client,
    retrievals: AtomicU64,
    state: Mutex<HttpState>,
}

impl HttpWeb {
    pub fn new() -> Result<Self> {
        HttpWeb::with_timeout(DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .redirect(reqwest::redirect::Policy::limited(MAX_REDIRECTS))
            .build()
            .map_err(|e| Error::Backend(e.to_string()))?;
        Ok(HttpWeb {
            client,
            retrievals: AtomicU64::new(0),
            state: Mutex::new(HttpState {
                memo: BTreeMap::new(),
                ledger: Ledger::default(),
            }),
        })
    }

    /// One dereference attempt. `Ok(None)` is "no retrievable document";
    /// `Err` is a failure of the backend itself.
    fn fetch(&self, iri: &Iri) -> Result<Option<Graph>> {
        let url = iri.as_str();
        if !url.starts_with("http://") && !url.starts_with("https://") {
            return Ok(None);
        }
        let response = match self
            .client
            .get(url)
            .header(reqwest::header::ACCEPT, ACCEPT_NTRIPLES)
            .send()
        {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_redirect() => return Ok(None),
            Err(e) => return Err(Error::Backend(e.to_string())),
        };
        if !response.status().is_success() {
            return Ok(None);
        }
        let body = match response.text() {
            Ok(b) => b,
            Err(e) if e.is_timeout() => return Ok(None),
            Err(e) => return Err(Error::Backend(e.to_string())),
        };
        let n = self.retrievals.fetch_add(1, Ordering::Relaxed);
        match parse_ntriples(&body, &|label| format!("r{n}_{label}")) {
            Ok(triples) => Ok(Some(triples)),
            Err(_) => Ok(None),
        }
    }
}

impl Web for HttpWeb {
    fn lookup(&self, iri: &Iri) -> Result<Option<Arc<Document>>> {
        {
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
        }
        // Fetch outside the lock so slow hosts do not serialize other
        // lookups. On a race the first stored result wins, keeping lookup
        // idempotent per IRI.
        let fetched = self.fetch(iri)?.map(|triples| {
            Arc::new(Document {
                id: iri.as_str().to_string(),
                triples,
            })
        });
        let mut state = self.state.lock().unwrap();
        let stored = state
            .memo
            .entry(iri.clone())
            .or_insert(fetched)
            .clone();
        let outcome = if stored.is_some() {
            LookupOutcome::Retrieved
        } else {
            LookupOutcome::NotRetrievable
        };
        state.ledger.record(iri, outcome);
        Ok(stored)
    }

    fn ledger(&self) -> Ledger {
        self.state.lock().unwrap().ledger.clone()
    }

    fn omniscient(&self) -> Option<&Wold> {
        None
    }
}
