//! Wiki state: revisioned pages, the derived quad store, the ontology
//! and the access rules. Every operation takes the acting principal and
//! authorizes before touching anything.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wikibridge_core::acl::{load_acl, Acl, Action, Principal, Resource, PRESET_ACL};
use wikibridge_core::markup::{parse_page, PageSource, ParseDiagnostic, ParsedPage};
use wikibridge_core::ontology::{load_ontology, Ontology, OntologyWarning};
use wikibridge_core::query::{evaluate, parse_query, QueryResults};
use wikibridge_core::rdf::{graph_iri, meta_graph, Quad, DEFAULT_NAMESPACE};
use wikibridge_core::semantics::{check_page, lower_page, recompute_inferred, LoweringResult, ValidationReport};
use wikibridge_core::store::{QuadPattern, QuadStore};

use crate::auth::Users;
use crate::error::ServiceError;
use crate::persist::{atomic_write, DataDir, PageMeta, RevisionMeta};

pub type Clock = Arc<dyn Fn() -> String + Send + Sync>;

/// UTC now, second precision.
pub fn system_clock() -> Clock {
    Arc::new(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

/// A clock that always reads `at`.
pub fn fixed_clock(at: &str) -> Clock {
    let at = at.to_owned();
    Arc::new(move || at.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaveMode {
    Strict,
    Lenient,
}

#[derive(Clone)]
pub struct WikiConfig {
    pub strict_default: bool,
    pub clock: Clock,
}

impl Default for WikiConfig {
    fn default() -> Self {
        WikiConfig { strict_default: false, clock: system_clock() }
    }
}

/// Who is acting: a user, or the operator running batch commands.
#[derive(Debug, Clone, Copy)]
pub enum Actor<'a> {
    System,
    User(&'a Principal),
}

impl Actor<'_> {
    pub fn name(&self) -> &str {
        match self {
            Actor::System => "system",
            Actor::User(p) => &p.user,
        }
    }
}

#[derive(Debug, Clone)]
struct Page {
    namespace: String,
    title: String,
    revisions: Vec<RevisionMeta>,
    texts: Vec<String>,
}

impl Page {
    fn current(&self) -> &RevisionMeta {
        self.revisions.last().expect("pages have at least one revision")
    }

    fn current_text(&self) -> &str {
        self.texts.last().expect("pages have at least one revision")
    }

    fn meta(&self) -> PageMeta {
        PageMeta { namespace: self.namespace.clone(), title: self.title.clone(), revisions: self.revisions.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionInfo {
    pub revision: u64,
    pub author: String,
    pub timestamp: String,
    pub violations: usize,
}

impl From<&RevisionMeta> for RevisionInfo {
    fn from(r: &RevisionMeta) -> Self {
        RevisionInfo {
            revision: r.revision,
            author: r.author.clone(),
            timestamp: r.timestamp.clone(),
            violations: r.report.violations.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PageSummary {
    pub namespace: String,
    pub title: String,
    pub revision: u64,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaveOutcome {
    pub namespace: String,
    pub title: String,
    pub revision: u64,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PageView {
    pub namespace: String,
    pub title: String,
    pub text: String,
    pub revision: RevisionInfo,
    /// Canonical N-Quads of the page's current annotation and provenance quads.
    pub annotations: String,
    pub report: ValidationReport,
    /// True when the report was recomputed because the ontology changed.
    pub rechecked: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RevisionView {
    pub namespace: String,
    pub title: String,
    pub revision: RevisionInfo,
    pub text: String,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct OntologyView {
    pub text: String,
    pub hash: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ImportSummary {
    pub imported: usize,
    pub with_violations: Vec<(String, String, usize)>,
    pub failed: Vec<(String, String, String)>,
}

/// A page save request.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct SaveRequest {
    pub text: String,
    #[serde(default)]
    pub base_revision: Option<u64>,
    #[serde(default)]
    pub mode: Option<SaveMode>,
}

/// A dry-run check: either a draft text or a stored page.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct CheckRequest {
    #[serde(default)]
    pub namespace: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
}

pub struct Wiki {
    dir: Option<DataDir>,
    config: WikiConfig,
    ontology: Ontology,
    ontology_text: String,
    ontology_hash: String,
    acl: Acl,
    users: Users,
    pages: BTreeMap<(String, String), Page>,
    store: QuadStore,
}

fn warnings_text(w: &[OntologyWarning]) -> Vec<String> {
    w.iter().map(|w| w.to_string()).collect()
}

fn parse_text(namespace: &str, title: &str, text: &str) -> Result<ParsedPage, ServiceError> {
    let src = PageSource::new(namespace, title, text)?;
    parse_page(&src).map_err(ServiceError::Parse)
}

impl Wiki {
    /// A wiki without a data directory.
    pub fn in_memory(ontology: &str, acl: &str, config: WikiConfig) -> Result<Wiki, ServiceError> {
        let ont = load_ontology(ontology).map_err(ServiceError::Ontology)?;
        let acl = load_acl(acl).map_err(|e| ServiceError::Config(e.to_string()))?;
        Ok(Wiki {
            dir: None,
            config,
            ontology_hash: ont.content_hash(),
            ontology: ont,
            ontology_text: ontology.to_owned(),
            acl,
            users: Users::default(),
            pages: BTreeMap::new(),
            store: QuadStore::new(),
        })
    }

    /// Opens a data directory and derives the store from the page files.
    /// A directory without `acl.conf` gets the role presets; missing
    /// ontology and user files count as empty.
    pub fn open(root: impl Into<std::path::PathBuf>, config: WikiConfig) -> Result<Wiki, ServiceError> {
        let dir = DataDir::new(root);
        std::fs::create_dir_all(dir.root())?;
        let acl_text = match DataDir::read_optional(&dir.acl_path())? {
            Some(t) => t,
            None => {
                atomic_write(&dir.acl_path(), PRESET_ACL.as_bytes())?;
                PRESET_ACL.to_owned()
            }
        };
        let ontology_text = DataDir::read_optional(&dir.ontology_path())?.unwrap_or_default();
        let users_text = DataDir::read_optional(&dir.users_path())?.unwrap_or_default();
        let mut wiki = Wiki::in_memory(&ontology_text, &acl_text, config)?;
        wiki.users = Users::parse(&users_text).map_err(ServiceError::Config)?;
        for stored in dir.load_pages()? {
            let key = (stored.meta.namespace.clone(), stored.meta.title.clone());
            let page = Page {
                namespace: stored.meta.namespace,
                title: stored.meta.title,
                revisions: stored.meta.revisions,
                texts: stored.texts,
            };
            if page.revisions.is_empty() {
                continue;
            }
            wiki.pages.insert(key, page);
        }
        wiki.dir = Some(dir);
        wiki.store = wiki.derive_store()?;
        Ok(wiki)
    }

    pub fn data_dir(&self) -> Option<&DataDir> {
        self.dir.as_ref()
    }

    pub fn store(&self) -> &QuadStore {
        &self.store
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn acl(&self) -> &Acl {
        &self.acl
    }

    pub fn principal(&self, user: &str) -> Principal {
        self.acl.principal(user)
    }

    pub fn set_password(&mut self, user: &str, password: &str) -> Result<(), ServiceError> {
        self.users.set(user, password);
        if let Some(dir) = &self.dir {
            atomic_write(&dir.users_path(), self.users.to_text().as_bytes())?;
        }
        Ok(())
    }

    pub fn verify_password(&self, user: &str, password: &str) -> bool {
        self.users.verify(user, password)
    }

    pub fn authorize(&self, actor: Actor<'_>, action: Action, resource: &Resource) -> Result<(), ServiceError> {
        let Actor::User(p) = actor else { return Ok(()) };
        let decision = self.acl.authorize(p, action, resource);
        if decision.allowed() {
            Ok(())
        } else {
            Err(ServiceError::Forbidden { action, decision: Box::new(decision) })
        }
    }

    /// Actions the principal may perform wiki-wide.
    pub fn capabilities(&self, p: &Principal) -> Vec<Action> {
        Action::ALL.into_iter().filter(|&a| self.acl.authorize(p, a, &Resource::Global).allowed()).collect()
    }

    fn page(&self, namespace: &str, title: &str) -> Result<&Page, ServiceError> {
        self.pages
            .get(&(namespace.to_owned(), title.to_owned()))
            .ok_or_else(|| ServiceError::NotFound(format!("page {namespace}:{title}")))
    }

    fn lower_revision(page: &Page, index: usize) -> Result<(ParsedPage, LoweringResult), ServiceError> {
        let r = &page.revisions[index];
        let parsed = parse_text(&page.namespace, &page.title, &page.texts[index])?;
        let lowered = lower_page(&parsed, r.revision, &r.author, &r.timestamp);
        Ok((parsed, lowered))
    }

    /// The store as it follows from the current revisions alone.
    pub fn derive_store(&self) -> Result<QuadStore, ServiceError> {
        let mut store = QuadStore::new();
        for page in self.pages.values() {
            let (_, lowered) = Self::lower_revision(page, page.revisions.len() - 1)?;
            store.extend(&lowered.store_quads());
        }
        recompute_inferred(&mut store, &self.ontology);
        Ok(store)
    }

    /// Canonical N-Quads of the whole store.
    pub fn export(&self) -> String {
        self.store.export_nquads()
    }

    fn write_export(&self) -> Result<(), ServiceError> {
        if let Some(dir) = &self.dir {
            atomic_write(&dir.export_path(), self.export().as_bytes())?;
        }
        Ok(())
    }

    /// Replaces the store with one derived from the page files and
    /// returns whether the export changed.
    pub fn rebuild(&mut self) -> Result<bool, ServiceError> {
        let before = self.export();
        self.store = self.derive_store()?;
        let drift = self.export() != before;
        self.write_export()?;
        Ok(drift)
    }

    fn remove_page_quads(&mut self, page: &Page) {
        let graph = graph_iri(&page.namespace, &page.title, page.current().revision);
        self.store.drop_graph(&graph);
        let meta = QuadPattern::new(Some(graph), None, None, Some(meta_graph()));
        for q in self.store.match_pattern(&meta) {
            self.store.remove(&q);
        }
    }

    /// Saves a new revision. Lenient saves always succeed past parsing;
    /// strict saves with violations change nothing.
    pub fn put_page(
        &mut self,
        actor: Actor<'_>,
        namespace: &str,
        title: &str,
        req: &SaveRequest,
    ) -> Result<SaveOutcome, ServiceError> {
        let outcome = self.save(actor, namespace, title, req, true)?;
        self.write_export()?;
        Ok(outcome)
    }

    fn save(
        &mut self,
        actor: Actor<'_>,
        namespace: &str,
        title: &str,
        req: &SaveRequest,
        refresh_inferred: bool,
    ) -> Result<SaveOutcome, ServiceError> {
        let resource = Resource::page(namespace, title);
        self.authorize(actor, Action::Edit, &resource)?;
        let key = (namespace.to_owned(), title.to_owned());
        let current = self.pages.get(&key).map_or(0, |p| p.current().revision);
        if let Some(base) = req.base_revision {
            if base != current {
                return Err(ServiceError::Conflict { base, current });
            }
        }
        let parsed = parse_text(namespace, title, &req.text)?;
        if parsed.has_annotations() {
            self.authorize(actor, Action::Annotate, &resource)?;
        }

        let revision = current + 1;
        let timestamp = (self.config.clock)();
        let lowered = lower_page(&parsed, revision, actor.name(), &timestamp);
        let report = check_page(&parsed, &lowered, &self.ontology, &self.store);
        let strict = req.mode.map_or(self.config.strict_default, |m| m == SaveMode::Strict);
        if strict && !report.violations.is_empty() {
            return Err(ServiceError::Constraint(Box::new(report)));
        }

        let meta = RevisionMeta {
            revision,
            author: actor.name().to_owned(),
            timestamp,
            ontology_hash: self.ontology_hash.clone(),
            report: report.clone(),
        };
        let mut page = self.pages.get(&key).cloned().unwrap_or_else(|| Page {
            namespace: namespace.to_owned(),
            title: title.to_owned(),
            revisions: Vec::new(),
            texts: Vec::new(),
        });
        let previous = (!page.revisions.is_empty()).then(|| page.clone());
        page.revisions.push(meta);
        page.texts.push(req.text.clone());
        if let Some(dir) = &self.dir {
            dir.write_revision(namespace, title, revision, &req.text)?;
            dir.write_meta(&page.meta())?;
        }

        if let Some(prev) = previous {
            self.remove_page_quads(&prev);
        }
        self.store.extend(&lowered.store_quads());
        if refresh_inferred {
            recompute_inferred(&mut self.store, &self.ontology);
        }
        self.pages.insert(key, page);
        Ok(SaveOutcome { namespace: namespace.to_owned(), title: title.to_owned(), revision, report })
    }

    /// Saves many pages as the system actor, refreshing the inferred
    /// graph and the export once at the end.
    pub fn import_pages(&mut self, pages: impl IntoIterator<Item = (String, String, String)>) -> Result<ImportSummary, ServiceError> {
        let mut summary = ImportSummary::default();
        let mut loaded = Vec::new();
        for (ns, title, text) in pages {
            let req = SaveRequest { text, base_revision: None, mode: Some(SaveMode::Lenient) };
            match self.save(Actor::System, &ns, &title, &req, false) {
                Ok(_) => loaded.push((ns, title)),
                Err(e @ (ServiceError::Parse(_) | ServiceError::BadPage(_))) => {
                    summary.failed.push((ns, title, e.to_string()))
                }
                Err(e) => return Err(e),
            }
        }
        recompute_inferred(&mut self.store, &self.ontology);

        // Links between imported pages resolve only once all are loaded,
        // so the reports are recomputed against the complete store.
        for key in loaded {
            let report = self.fresh_report(&self.pages[&key])?;
            let n = report.violations.len();
            let page = self.pages.get_mut(&key).expect("just saved");
            page.revisions.last_mut().expect("just saved").report = report;
            if let Some(dir) = &self.dir {
                dir.write_meta(&page.meta())?;
            }
            summary.imported += 1;
            if n > 0 {
                let (ns, title) = key;
                summary.with_violations.push((ns, title, n));
            }
        }
        self.write_export()?;
        Ok(summary)
    }

    fn fresh_report(&self, page: &Page) -> Result<ValidationReport, ServiceError> {
        let (parsed, lowered) = Self::lower_revision(page, page.revisions.len() - 1)?;
        Ok(check_page(&parsed, &lowered, &self.ontology, &self.store))
    }

    /// Checks the current revision of every page against the current
    /// ontology and store. Saved reports are left as they are.
    pub fn recheck_all(&self) -> Result<Vec<ValidationReport>, ServiceError> {
        let now = (self.config.clock)();
        self.pages
            .values()
            .map(|page| {
                let mut report = self.fresh_report(page)?;
                report.checked_at = now.clone();
                Ok(report)
            })
            .collect()
    }

    /// `(namespace, title, text)` of every page's current revision, in
    /// namespace and title order.
    pub fn current_texts(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.pages.values().map(|p| (p.namespace.as_str(), p.title.as_str(), p.current_text()))
    }

    /// Pages the principal may read.
    pub fn list_pages(&self, actor: Actor<'_>) -> Vec<PageSummary> {
        self.pages
            .values()
            .filter(|p| self.authorize(actor, Action::Read, &Resource::page(&p.namespace, &p.title)).is_ok())
            .map(|p| PageSummary {
                namespace: p.namespace.clone(),
                title: p.title.clone(),
                revision: p.current().revision,
                violations: p.current().report.violations.len(),
            })
            .collect()
    }

    /// The page's quads currently in the store: its annotation graph and
    /// the provenance statements about that graph.
    fn page_quads(&self, page: &Page) -> QuadStore {
        let graph = graph_iri(&page.namespace, &page.title, page.current().revision);
        let mut out: QuadStore = self.store.match_pattern(&QuadPattern::new(None, None, None, Some(graph.clone()))).iter().collect();
        out.extend(&self.store.match_pattern(&QuadPattern::new(Some(graph), None, None, Some(meta_graph()))));
        out
    }

    pub fn annotations(&self, actor: Actor<'_>, namespace: &str, title: &str) -> Result<Vec<Quad>, ServiceError> {
        self.authorize(actor, Action::Read, &Resource::page(namespace, title))?;
        let page = self.page(namespace, title)?;
        let quads = self.page_quads(page);
        let mut out: Vec<Quad> = quads.iter().collect();
        out.sort_by_key(|q| (q.graph.to_nquads(), q.subject.to_nquads(), q.predicate.to_nquads(), q.object.to_nquads()));
        Ok(out)
    }

    /// The current revision with a report that reflects the current
    /// ontology, recomputed when the saved one is stale.
    pub fn get_page(&self, actor: Actor<'_>, namespace: &str, title: &str) -> Result<PageView, ServiceError> {
        self.authorize(actor, Action::Read, &Resource::page(namespace, title))?;
        let page = self.page(namespace, title)?;
        let current = page.current();
        let (report, rechecked) = if current.ontology_hash == self.ontology_hash {
            (current.report.clone(), false)
        } else {
            let mut report = self.fresh_report(page)?;
            report.checked_at = (self.config.clock)();
            (report, true)
        };
        Ok(PageView {
            namespace: page.namespace.clone(),
            title: page.title.clone(),
            text: page.current_text().to_owned(),
            revision: current.into(),
            annotations: self.page_quads(page).export_nquads(),
            report,
            rechecked,
        })
    }

    /// Newest first.
    pub fn list_revisions(&self, actor: Actor<'_>, namespace: &str, title: &str) -> Result<Vec<RevisionInfo>, ServiceError> {
        self.authorize(actor, Action::Read, &Resource::page(namespace, title))?;
        Ok(self.page(namespace, title)?.revisions.iter().rev().map(RevisionInfo::from).collect())
    }

    pub fn get_revision(&self, actor: Actor<'_>, namespace: &str, title: &str, n: u64) -> Result<RevisionView, ServiceError> {
        self.authorize(actor, Action::Read, &Resource::page(namespace, title))?;
        let page = self.page(namespace, title)?;
        let idx = usize::try_from(n)
            .ok()
            .and_then(|n| n.checked_sub(1))
            .filter(|&i| i < page.revisions.len())
            .ok_or_else(|| ServiceError::NotFound(format!("revision {n} of {namespace}:{title}")))?;
        let r = &page.revisions[idx];
        Ok(RevisionView {
            namespace: page.namespace.clone(),
            title: page.title.clone(),
            revision: r.into(),
            text: page.texts[idx].clone(),
            report: r.report.clone(),
        })
    }

    /// Parses, lowers as revision 0 and checks, without saving anything.
    pub fn check(&self, actor: Actor<'_>, req: &CheckRequest) -> Result<ValidationReport, ServiceError> {
        let namespace = req.namespace.as_deref().unwrap_or(DEFAULT_NAMESPACE);
        let resource = match &req.title {
            Some(t) => Resource::page(namespace, t),
            None => Resource::Global,
        };
        self.authorize(actor, Action::Annotate, &resource)?;
        let title = req.title.as_deref().unwrap_or("Draft");
        let text = match (&req.text, &req.title) {
            (Some(text), _) => text.clone(),
            (None, Some(t)) => self.page(namespace, t)?.current_text().to_owned(),
            (None, None) => return Err(ServiceError::BadRequest("check needs a text or a title".into())),
        };
        let timestamp = (self.config.clock)();
        match parse_text(namespace, title, &text) {
            Ok(parsed) => {
                let lowered = lower_page(&parsed, 0, actor.name(), &timestamp);
                Ok(check_page(&parsed, &lowered, &self.ontology, &self.store))
            }
            Err(ServiceError::Parse(diagnostics)) => Err(ServiceError::ParseReport(Box::new(Self::parse_failure_report(
                namespace, title, timestamp, diagnostics,
            )))),
            Err(e) => Err(e),
        }
    }

    fn parse_failure_report(ns: &str, title: &str, at: String, diagnostics: Vec<ParseDiagnostic>) -> ValidationReport {
        ValidationReport {
            page: title.to_owned(),
            namespace: ns.to_owned(),
            revision: 0,
            violations: Vec::new(),
            checked_at: at,
            diagnostics,
        }
    }

    pub fn query(&self, actor: Actor<'_>, text: &str, entailment: bool) -> Result<QueryResults, ServiceError> {
        self.authorize(actor, Action::Query, &Resource::Global)?;
        let q = parse_query(text)?;
        Ok(evaluate(&q, &self.store, entailment))
    }

    pub fn get_ontology(&self, actor: Actor<'_>) -> Result<OntologyView, ServiceError> {
        self.authorize(actor, Action::Admin, &Resource::Global)?;
        Ok(OntologyView {
            text: self.ontology_text.clone(),
            hash: self.ontology_hash.clone(),
            warnings: warnings_text(&self.ontology.validate()),
        })
    }

    /// Swaps in a new ontology if it loads; otherwise the old one stays.
    pub fn put_ontology(&mut self, actor: Actor<'_>, text: &str) -> Result<OntologyView, ServiceError> {
        self.authorize(actor, Action::Admin, &Resource::Global)?;
        let ont = load_ontology(text).map_err(ServiceError::Ontology)?;
        if let Some(dir) = &self.dir {
            atomic_write(&dir.ontology_path(), text.as_bytes())?;
        }
        self.ontology_hash = ont.content_hash();
        self.ontology = ont;
        self.ontology_text = text.to_owned();
        recompute_inferred(&mut self.store, &self.ontology);
        self.write_export()?;
        Ok(OntologyView {
            text: self.ontology_text.clone(),
            hash: self.ontology_hash.clone(),
            warnings: warnings_text(&self.ontology.validate()),
        })
    }
}
