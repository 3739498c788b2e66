//! Command-line front door: analyze query safety, evaluate queries under
//! the standard, full-Web, or context-based semantics, and look up single
//! IRIs.
//!
//! Exit codes: 0 success, 1 parse or usage error, 2 query refused as not
//! web-safe, 3 lookup budget exceeded, 4 I/O or backend failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use linkpath::{
    analyze, eval_ctx_based, eval_ctx_reference, eval_fullweb, eval_graph_pattern, is_web_safe,
    load_fixture, parse_iri, parse_query, Error, EvalConfig, FixtureWeb, Graph, GraphPattern,
    HttpWeb, Iri, Ledger, SolutionMapping, SolutionMultiset, Term, Web,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "linkpath",
    version,
    about = "Property path queries over a Web of Linked Data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a query, print its safety report as JSON, exit 0 iff web-safe
    Analyze {
        /// Query text, e.g. '<http://a/u> <http://a/p> ?x'
        query: String,
    },
    /// Evaluate a query and print one result row per solution mapping
    Eval(EvalArgs),
    /// Look up one IRI and print its authoritative context triples
    Lookup(LookupArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Query text
    query: String,
    /// Semantics to evaluate under
    #[arg(long, value_enum, default_value_t = Semantics::Ctx)]
    semantics: Semantics,
    /// WoLD fixture manifest (JSON); the source for ctx, ctx-ref, fullweb
    #[arg(long)]
    wold: Option<PathBuf>,
    /// Single N-Triples file; the source for std
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Evaluate over the live Web by dereferencing IRIs (ctx only)
    #[arg(long)]
    http: bool,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::JsonLines)]
    format: Format,
    /// Give up after this many distinct lookups
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_lookups: Option<u64>,
    /// Evaluate even if the query is not web-safe (best effort)
    #[arg(long)]
    force: bool,
    /// Trace evaluation steps and lookups to stderr
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct LookupArgs {
    /// The IRI to look up, with or without angle brackets
    iri: String,
    /// WoLD fixture manifest (JSON)
    #[arg(long)]
    wold: Option<PathBuf>,
    /// Look up over the live Web
    #[arg(long)]
    http: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Semantics {
    /// Context-based, lookup-driven
    Ctx,
    /// Context-based reference definition (needs the whole fixture)
    CtxRef,
    /// Standard semantics over the union of all documents
    Fullweb,
    /// W3C standard semantics over one graph
    Std,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    JsonLines,
    Tsv,
}

/// One printed solution: variable name to serialized term, plus how often
/// the mapping occurs.
#[derive(Serialize)]
struct ResultRow {
    bindings: BTreeMap<String, String>,
    cardinality: u64,
}

struct Failure {
    code: u8,
    message: Option<String>,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: Some(message.into()),
    }
}

fn silent(code: u8) -> Failure {
    Failure {
        code,
        message: None,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) => 1,
            Error::NotWebBounded { .. } => 2,
            Error::LookupBudgetExceeded { .. } => 3,
            _ => 4,
        };
        fail(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Analyze { query } => cmd_analyze(&query),
        Command::Eval(args) => cmd_eval(args),
        Command::Lookup(args) => cmd_lookup(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if let Some(message) = failure.message {
                eprintln!("error: {message}");
            }
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_analyze(query: &str) -> Result<(), Failure> {
    let pattern = parse_query(query).map_err(|e| fail(1, e.to_string()))?;
    let report = analyze(&pattern);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{json}");
    if report.web_safe {
        Ok(())
    } else {
        Err(silent(2))
    }
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let pattern = parse_query(&args.query).map_err(|e| fail(1, e.to_string()))?;
    let result = match args.semantics {
        Semantics::Ctx => eval_ctx(&pattern, &args)?,
        Semantics::CtxRef | Semantics::Fullweb => eval_omniscient(&pattern, &args)?,
        Semantics::Std => eval_std(&pattern, &args)?,
    };
    print_rows(&pattern, &result, args.format);
    Ok(())
}

fn eval_ctx(pattern: &GraphPattern, args: &EvalArgs) -> Result<SolutionMultiset, Failure> {
    if args.graph.is_some() {
        return Err(fail(1, "--graph applies only to --semantics std"));
    }
    if !args.force && !is_web_safe(pattern) {
        let report = analyze(pattern);
        let detail = if report.missing.is_empty() {
            "a constant-only part needs lookups no strategy can enumerate".to_string()
        } else {
            format!("cannot certify {{{}}}", report.missing.join(", "))
        };
        return Err(fail(
            2,
            format!("query refused: not web-safe ({detail}); --force evaluates anyway"),
        ));
    }
    let cfg = EvalConfig {
        max_lookups: args.max_lookups,
        force_unsafe: args.force,
        trace: args.trace,
    };
    let mu = SolutionMapping::new();
    match (&args.wold, args.http) {
        (Some(path), false) => {
            let web = FixtureWeb::new(load_fixture(path)?);
            let result = eval_ctx_based(pattern, &mu, &web, &cfg);
            eprintln!("{}", web.ledger().summary());
            Ok(result?)
        }
        (None, true) => {
            let web = HttpWeb::new()?;
            let result = eval_ctx_based(pattern, &mu, &web, &cfg);
            eprintln!("{}", web.ledger().summary());
            Ok(result?)
        }
        (Some(_), true) => Err(fail(1, "--wold and --http are mutually exclusive")),
        (None, false) => Err(fail(1, "--semantics ctx needs --wold <manifest> or --http")),
    }
}

fn eval_omniscient(pattern: &GraphPattern, args: &EvalArgs) -> Result<SolutionMultiset, Failure> {
    let which = match args.semantics {
        Semantics::CtxRef => "ctx-ref",
        _ => "fullweb",
    };
    if args.http {
        return Err(fail(
            4,
            format!("--semantics {which} requires the whole Web; --http offers lookups only, use --wold"),
        ));
    }
    if args.graph.is_some() {
        return Err(fail(1, "--graph applies only to --semantics std"));
    }
    let Some(path) = &args.wold else {
        return Err(fail(1, format!("--semantics {which} needs --wold <manifest>")));
    };
    let wold = load_fixture(path)?;
    let result = match args.semantics {
        Semantics::CtxRef => eval_ctx_reference(pattern, &wold),
        _ => eval_fullweb(pattern, &wold),
    };
    eprintln!("{}", Ledger::default().summary());
    Ok(result)
}

fn eval_std(pattern: &GraphPattern, args: &EvalArgs) -> Result<SolutionMultiset, Failure> {
    if args.http || args.wold.is_some() {
        return Err(fail(
            1,
            "--semantics std evaluates a local graph; pass --graph <file.nt>",
        ));
    }
    let Some(path) = &args.graph else {
        return Err(fail(1, "--semantics std needs --graph <file.nt>"));
    };
    let graph = load_graph(path)?;
    eprintln!("{}", Ledger::default().summary());
    Ok(eval_graph_pattern(pattern, &graph))
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        Failure::from(Error::Io {
            path: path.display().to_string(),
            source,
        })
    })?;
    linkpath::ntriples::parse_ntriples(&text, &|label: &str| label.to_string()).map_err(|e| {
        Failure::from(Error::Ntriples {
            path: path.display().to_string(),
            line: e.line,
            message: e.message,
        })
    })
}

fn print_rows(pattern: &GraphPattern, result: &SolutionMultiset, format: Format) {
    let mut rows: Vec<ResultRow> = result
        .iter()
        .map(|(mapping, cardinality)| ResultRow {
            bindings: mapping
                .iter()
                .map(|(v, t)| (v.as_str().to_string(), t.to_string()))
                .collect(),
            cardinality,
        })
        .collect();
    rows.sort_by(|a, b| a.bindings.cmp(&b.bindings));
    match format {
        Format::JsonLines => {
            for row in rows {
                println!("{}", serde_json::to_string(&row).expect("row serializes"));
            }
        }
        Format::Tsv => {
            let columns: Vec<String> = pattern
                .vars()
                .iter()
                .map(|v| v.as_str().to_string())
                .collect();
            let mut header = columns.clone();
            header.push("cardinality".to_string());
            println!("{}", header.join("\t"));
            for row in rows {
                let mut cells: Vec<String> = columns
                    .iter()
                    .map(|name| row.bindings.get(name).cloned().unwrap_or_default())
                    .collect();
                cells.push(row.cardinality.to_string());
                println!("{}", cells.join("\t"));
            }
        }
    }
}

fn cmd_lookup(args: LookupArgs) -> Result<(), Failure> {
    let iri = lookup_target(&args.iri)?;
    match (&args.wold, args.http) {
        (Some(path), false) => {
            let web = FixtureWeb::new(load_fixture(path)?);
            dump_context(&web, &iri)
        }
        (None, true) => {
            let web = HttpWeb::new()?;
            dump_context(&web, &iri)
        }
        (Some(_), true) => Err(fail(1, "--wold and --http are mutually exclusive")),
        (None, false) => Err(fail(1, "lookup needs --wold <manifest> or --http")),
    }
}

fn lookup_target(raw: &str) -> Result<Iri, Failure> {
    let trimmed = raw.trim();
    if trimmed.starts_with('"') || trimmed.starts_with("_:") {
        return Err(fail(1, "lookup takes an IRI, not a literal or blank node"));
    }
    let bracketed = if trimmed.starts_with('<') {
        trimmed.to_string()
    } else {
        format!("<{trimmed}>")
    };
    parse_iri(&bracketed).map_err(|e| fail(1, e.to_string()))
}

fn dump_context(web: &dyn Web, iri: &Iri) -> Result<(), Failure> {
    let outcome = web.lookup(iri);
    eprintln!("{}", web.ledger().summary());
    match outcome? {
        None => println!("not retrievable"),
        Some(document) => {
            let context = document.triples.with_subject(&Term::Iri(iri.clone()));
            for triple in context.iter() {
                println!("{triple}");
            }
            println!(
                "{} context triples of {} document triples",
                context.len(),
                document.triples.len()
            );
        }
    }
    Ok(())
}
