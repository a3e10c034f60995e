//! `wikibridge`: serve a wiki, check pages, query, lower, import, export
//! and rebuild data directories.
//!
//! Exit codes: 0 on success, 1 when violations were found or a query
//! failed, 2 on usage and I/O errors.

use std::collections::BTreeSet;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use wikibridge_core::markup::{parse_page, PageSource};
use wikibridge_core::ontology::{load_ontology, Ontology};
use wikibridge_core::rdf::{decode_segment, encode_segment, DEFAULT_NAMESPACE};
use wikibridge_core::semantics::{check_page, lower_page, ValidationReport};
use wikibridge_core::store::QuadStore;
use wikibridge_service::auth::hash_password;
use wikibridge_service::persist::{atomic_write, DataDir};
use wikibridge_service::{fixed_clock, system_clock, Actor, ServerConfig, ServiceError, Wiki, WikiConfig};

#[derive(Parser)]
#[command(name = "wikibridge", version, about = "A semantic wiki engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    /// One JSON report per line, the document the HTTP API returns.
    Structured,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResultFormat {
    /// Tab-separated, terms in N-Quads syntax.
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API (and static assets) over a data directory.
    Serve {
        #[arg(long, env = "WIKIBRIDGE_DATA")]
        data: PathBuf,
        #[arg(long, env = "WIKIBRIDGE_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "WIKIBRIDGE_BIND", default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Reject saves with violations unless the request says otherwise.
        #[arg(long, env = "WIKIBRIDGE_STRICT")]
        strict: bool,
        /// Directory served for paths outside /api.
        #[arg(long = "static", env = "WIKIBRIDGE_STATIC")]
        static_dir: Option<PathBuf>,
        /// Idle lifetime of session tokens, in seconds.
        #[arg(long, env = "WIKIBRIDGE_TOKEN_TTL", default_value_t = 24 * 60 * 60)]
        token_ttl_secs: u64,
    },
    /// Check page files. Without --data only the ontology is consulted;
    /// with it, pages are checked against the wiki's store.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = DEFAULT_NAMESPACE)]
        namespace: String,
        /// Page title; defaults to the decoded file stem.
        #[arg(long)]
        title: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Run a query against a data directory.
    Query {
        #[arg(long)]
        data: PathBuf,
        #[arg(short = 'e', long = "query", conflicts_with = "file", required_unless_present = "file")]
        text: Option<String>,
        #[arg(short, long)]
        file: Option<PathBuf>,
        /// Also match types derived through the class hierarchy.
        #[arg(long)]
        entailment: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: ResultFormat,
    },
    /// Print the canonical N-Quads a page file lowers to.
    Lower {
        file: PathBuf,
        #[arg(long)]
        title: Option<String>,
        #[arg(long, default_value = DEFAULT_NAMESPACE)]
        namespace: String,
        #[arg(long, default_value_t = 1)]
        revision: u64,
        #[arg(long, default_value = "cli")]
        author: String,
        /// Defaults to the current time.
        #[arg(long)]
        timestamp: Option<String>,
    },
    /// Load a directory of pages: files at the top level go to the default
    /// namespace, subdirectories name namespaces. Stems are titles.
    Import {
        #[arg(long)]
        data: PathBuf,
        pages: PathBuf,
        /// Timestamp recorded on the new revisions instead of the current time.
        #[arg(long)]
        at: Option<String>,
    },
    /// Write the canonical N-Quads export, and optionally the current
    /// page texts in the layout `import` reads.
    Export {
        #[arg(long)]
        data: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pages: Option<PathBuf>,
    },
    /// Re-derive the store from the page files and compare it with the
    /// export on disk.
    Rebuild {
        #[arg(long)]
        data: PathBuf,
    },
    /// Check every page again against the current ontology and wiki.
    /// Saved reports are not changed.
    Recheck {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Print a password record, or store it for a user with --data.
    /// The password is read from stdin.
    HashPassword {
        #[arg(long, requires = "user")]
        data: Option<PathBuf>,
        #[arg(long)]
        user: Option<String>,
    },
}

/// An error with its exit code.
struct Failure(u8, String);

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(2, e.to_string())
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        let code = if matches!(e, ServiceError::Query(_)) { 1 } else { 2 };
        let detail = match &e {
            ServiceError::Ontology(errs) => errs.iter().map(|e| format!("\n  {e}")).collect(),
            ServiceError::Parse(d) => d.iter().map(|d| format!("\n  {d}")).collect(),
            _ => String::new(),
        };
        Failure(code, format!("{e}{detail}"))
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(2, format!("{}: {e}", path.display())))
}

fn open(data: &Path) -> Result<Wiki, Failure> {
    if !data.is_dir() {
        return Err(Failure(2, format!("{}: not a data directory", data.display())));
    }
    Ok(Wiki::open(data, WikiConfig::default())?)
}

fn title_of(path: &Path) -> String {
    decode_segment(&path.file_stem().unwrap_or_default().to_string_lossy())
}

fn load_ontology_file(path: &Path) -> Result<Ontology, Failure> {
    load_ontology(&read(path)?).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| format!("  {e}")).collect();
        Failure(2, format!("{}: ontology does not load\n{}", path.display(), lines.join("\n")))
    })
}

fn check_one(
    text: &str,
    namespace: &str,
    title: &str,
    ont: &Ontology,
    context: &QuadStore,
    timestamp: &str,
) -> Result<ValidationReport, Failure> {
    let src = PageSource::new(namespace, title, text).map_err(|e| Failure(2, e.to_string()))?;
    Ok(match parse_page(&src) {
        Ok(parsed) => {
            let lowered = lower_page(&parsed, 0, "cli", timestamp);
            check_page(&parsed, &lowered, ont, context)
        }
        Err(diagnostics) => ValidationReport {
            page: title.to_owned(),
            namespace: namespace.to_owned(),
            revision: 0,
            violations: Vec::new(),
            checked_at: timestamp.to_owned(),
            diagnostics,
        },
    })
}

fn diagnostics_text(report: &ValidationReport) -> String {
    report.diagnostics.iter().map(|d| format!("\n  parse error: {d}")).collect()
}

fn check(
    files: &[PathBuf],
    ontology: Option<&Path>,
    data: Option<&Path>,
    namespace: &str,
    title: Option<&str>,
    format: ReportFormat,
) -> Outcome {
    if title.is_some() && files.len() > 1 {
        return Err(Failure(2, "--title applies to a single file".into()));
    }
    let wiki = data.map(open).transpose()?;
    let ont = match (ontology, &wiki) {
        (Some(path), _) => load_ontology_file(path)?,
        (None, Some(w)) => w.ontology().clone(),
        (None, None) => return Err(Failure(2, "check needs --ontology or --data".into())),
    };
    let empty = QuadStore::new();
    let context = wiki.as_ref().map_or(&empty, |w| w.store());
    let timestamp = (system_clock())();

    let mut files: Vec<&PathBuf> = files.iter().collect();
    files.sort();
    let mut problems = false;
    let mut out = io::stdout().lock();
    for path in files {
        let title = title.map_or_else(|| title_of(path), str::to_owned);
        let report = check_one(&read(path)?, namespace, &title, &ont, context, &timestamp)?;
        problems |= !report.conforms();
        print_report(&mut out, &format!("{}: ", path.display()), &report, format)?;
    }
    Ok(u8::from(problems))
}

fn query(data: &Path, text: Option<String>, file: Option<&Path>, entailment: bool, format: ResultFormat) -> Outcome {
    let text = match (text, file) {
        (Some(t), _) => t,
        (None, Some(f)) => read(f)?,
        (None, None) => return Err(Failure(2, "give -e QUERY or -f FILE".into())),
    };
    let wiki = open(data)?;
    let results = wiki.query(Actor::System, &text, entailment)?;
    match format {
        ResultFormat::Table => print!("{}", results.to_table()),
        ResultFormat::Json => println!("{}", results.to_json()),
    }
    if results.filter_errors > 0 {
        eprintln!("{} solutions dropped by filter errors", results.filter_errors);
    }
    Ok(0)
}

fn lower(file: &Path, namespace: &str, title: Option<String>, revision: u64, author: &str, timestamp: Option<String>) -> Outcome {
    let title = title.unwrap_or_else(|| title_of(file));
    let src = PageSource::new(namespace, title, read(file)?).map_err(|e| Failure(2, e.to_string()))?;
    let parsed = parse_page(&src).map_err(|d| {
        let lines: Vec<String> = d.iter().map(|d| format!("  {d}")).collect();
        Failure(1, format!("{}: does not parse\n{}", file.display(), lines.join("\n")))
    })?;
    let timestamp = timestamp.unwrap_or_else(|| (system_clock())());
    let lowered = lower_page(&parsed, revision, author, &timestamp);
    let store: QuadStore = lowered.all_quads().collect();
    print!("{}", store.export_nquads());
    Ok(0)
}

/// `(namespace, title, text, path)` for every `.wiki` file, sorted.
fn collect_pages(dir: &Path) -> Result<Vec<(String, String, String, PathBuf)>, Failure> {
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure(2, format!("{}: {e}", dir.display())))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    entries.sort();
    let is_page = |p: &Path| p.is_file() && p.extension().is_some_and(|x| x == "wiki");
    for entry in entries {
        if entry.is_dir() {
            let namespace = title_of(&entry.with_extension("x"));
            let mut files: Vec<PathBuf> = std::fs::read_dir(&entry)?.map(|e| e.map(|e| e.path())).collect::<io::Result<_>>()?;
            files.sort();
            for f in files.into_iter().filter(|p| is_page(p)) {
                out.push((namespace.clone(), title_of(&f), read(&f)?, f));
            }
        } else if is_page(&entry) {
            out.push((DEFAULT_NAMESPACE.to_owned(), title_of(&entry), read(&entry)?, entry));
        }
    }
    Ok(out)
}

fn import(data: &Path, pages: &Path, at: Option<&str>) -> Outcome {
    let files = collect_pages(pages)?;
    if files.is_empty() {
        return Err(Failure(2, format!("{}: no .wiki files", pages.display())));
    }
    let clock = at.map_or_else(system_clock, fixed_clock);
    let mut wiki = Wiki::open(data, WikiConfig { clock, ..WikiConfig::default() })?;
    let summary = wiki.import_pages(files.into_iter().map(|(ns, title, text, _)| (ns, title, text)))?;
    for (ns, title, n) in &summary.with_violations {
        eprintln!("{ns}:{title}: {n} violation{}", if *n == 1 { "" } else { "s" });
    }
    for (ns, title, why) in &summary.failed {
        eprintln!("{ns}:{title}: not imported: {why}");
    }
    println!(
        "imported {} page{}, {} with violations, {} failed; store holds {} quads",
        summary.imported,
        if summary.imported == 1 { "" } else { "s" },
        summary.with_violations.len(),
        summary.failed.len(),
        wiki.store().len()
    );
    Ok(u8::from(!summary.with_violations.is_empty() || !summary.failed.is_empty()))
}

fn export(data: &Path, out: Option<&Path>, pages: Option<&Path>) -> Outcome {
    let wiki = open(data)?;
    if let Some(dir) = pages {
        for (ns, title, text) in wiki.current_texts() {
            let folder = if ns == DEFAULT_NAMESPACE { dir.to_owned() } else { dir.join(encode_segment(ns)) };
            atomic_write(&folder.join(format!("{}.wiki", encode_segment(title))), text.as_bytes())?;
        }
    }
    match out {
        Some(path) => atomic_write(path, wiki.export().as_bytes())?,
        None if pages.is_none() => print!("{}", wiki.export()),
        None => {}
    }
    Ok(0)
}

fn rebuild(data: &Path) -> Outcome {
    let on_disk = DataDir::read_optional(&DataDir::new(data).export_path())?;
    let mut wiki = open(data)?;
    wiki.rebuild()?;
    let derived = wiki.export();
    let Some(on_disk) = on_disk else {
        println!("rebuilt {} quads; no previous export to compare", wiki.store().len());
        return Ok(0);
    };
    let old: BTreeSet<&str> = on_disk.lines().collect();
    let new: BTreeSet<&str> = derived.lines().collect();
    let (gone, added) = (old.difference(&new).count(), new.difference(&old).count());
    if on_disk == derived {
        println!("rebuilt {} quads; no drift", wiki.store().len());
        Ok(0)
    } else {
        println!("rebuilt {} quads; drift: {gone} quads missing from the page files, {added} not in the old export", wiki.store().len());
        Ok(1)
    }
}

fn print_report(out: &mut impl Write, label: &str, report: &ValidationReport, format: ReportFormat) -> Result<(), Failure> {
    match format {
        ReportFormat::Text => writeln!(out, "{label}{}{}", report.to_text().trim_end(), diagnostics_text(report))?,
        ReportFormat::Structured => {
            writeln!(out, "{}", serde_json::to_string(report).map_err(|e| Failure(2, e.to_string()))?)?
        }
    }
    Ok(())
}

fn recheck(data: &Path, format: ReportFormat) -> Outcome {
    let wiki = open(data)?;
    let reports = wiki.recheck_all()?;
    let mut out = io::stdout().lock();
    for report in &reports {
        print_report(&mut out, "", report, format)?;
    }
    let failing = reports.iter().filter(|r| !r.conforms()).count();
    eprintln!("{} pages checked, {failing} with violations", reports.len());
    Ok(u8::from(failing > 0))
}

fn hash(data: Option<&Path>, user: Option<&str>) -> Outcome {
    let mut password = String::new();
    io::stdin().read_to_string(&mut password)?;
    let password = password.trim_end_matches(['\n', '\r']);
    if password.is_empty() {
        return Err(Failure(2, "empty password on stdin".into()));
    }
    match (data, user) {
        (Some(d), Some(u)) => {
            Wiki::open(d, WikiConfig::default())?.set_password(u, password)?;
            println!("password set for {u}");
        }
        _ => println!("{}", hash_password(password)),
    }
    Ok(0)
}

fn serve(config: ServerConfig) -> Outcome {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(wikibridge_service::serve(config))?;
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Serve { data, port, bind, strict, static_dir, token_ttl_secs } => serve(ServerConfig {
            data_dir: data,
            addr: SocketAddr::new(bind, port),
            strict_default: strict,
            token_ttl: Duration::from_secs(token_ttl_secs),
            static_dir,
        }),
        Command::Check { files, ontology, data, namespace, title, format } => {
            check(&files, ontology.as_deref(), data.as_deref(), &namespace, title.as_deref(), format)
        }
        Command::Query { data, text, file, entailment, format } => query(&data, text, file.as_deref(), entailment, format),
        Command::Lower { file, title, namespace, revision, author, timestamp } => {
            lower(&file, &namespace, title, revision, &author, timestamp)
        }
        Command::Import { data, pages, at } => import(&data, &pages, at.as_deref()),
        Command::Export { data, out, pages } => export(&data, out.as_deref(), pages.as_deref()),
        Command::Rebuild { data } => rebuild(&data),
        Command::Recheck { data, format } => recheck(&data, format),
        Command::HashPassword { data, user } => hash(data.as_deref(), user.as_deref()),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, message)) => {
            eprintln!("wikibridge: {message}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn titles_come_from_decoded_stems() {
        assert_eq!(title_of(Path::new("pages/St%20Martin.wiki")), "St Martin");
        assert_eq!(title_of(Path::new("Tell Abu.wiki")), "Tell Abu");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
