//! The data directory:
//!
//! ```text
//! ontology.wbo  acl.conf  users.auth  export.nq
//! pages/<ns>/<title>/<n>.wiki
//! pages/<ns>/<title>/meta.json
//! ```
//!
//! Namespace and title directory names are percent-encoded.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wikibridge_core::rdf::{decode_segment, encode_segment};
use wikibridge_core::semantics::ValidationReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionMeta {
    pub revision: u64,
    pub author: String,
    pub timestamp: String,
    /// Content hash of the ontology the report was computed against.
    pub ontology_hash: String,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageMeta {
    pub namespace: String,
    pub title: String,
    pub revisions: Vec<RevisionMeta>,
}

#[derive(Debug, Clone)]
pub struct StoredPage {
    pub meta: PageMeta,
    /// Texts of revisions 1..=n.
    pub texts: Vec<String>,
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> DataDir {
        DataDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ontology_path(&self) -> PathBuf {
        self.root.join("ontology.wbo")
    }

    pub fn acl_path(&self) -> PathBuf {
        self.root.join("acl.conf")
    }

    pub fn users_path(&self) -> PathBuf {
        self.root.join("users.auth")
    }

    pub fn export_path(&self) -> PathBuf {
        self.root.join("export.nq")
    }

    pub fn pages_dir(&self) -> PathBuf {
        self.root.join("pages")
    }

    pub fn page_dir(&self, namespace: &str, title: &str) -> PathBuf {
        self.pages_dir().join(encode_segment(namespace)).join(encode_segment(title))
    }

    /// Reads a file, or `None` when it does not exist.
    pub fn read_optional(path: &Path) -> io::Result<Option<String>> {
        match fs::read_to_string(path) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Revision files are never overwritten.
    pub fn write_revision(&self, namespace: &str, title: &str, revision: u64, text: &str) -> io::Result<()> {
        let dir = self.page_dir(namespace, title);
        fs::create_dir_all(&dir)?;
        let mut f = fs::OpenOptions::new().write(true).create_new(true).open(dir.join(format!("{revision}.wiki")))?;
        f.write_all(text.as_bytes())?;
        f.sync_all()
    }

    pub fn write_meta(&self, meta: &PageMeta) -> io::Result<()> {
        let json = serde_json::to_vec_pretty(meta).map_err(io::Error::other)?;
        atomic_write(&self.page_dir(&meta.namespace, &meta.title).join("meta.json"), &json)
    }

    /// Every page with a readable meta record. Revisions listed in the
    /// record must all have their text file.
    pub fn load_pages(&self) -> io::Result<Vec<StoredPage>> {
        let mut out = Vec::new();
        let Ok(namespaces) = fs::read_dir(self.pages_dir()) else {
            return Ok(out);
        };
        let mut ns_dirs: Vec<PathBuf> = namespaces.map(|e| e.map(|e| e.path())).collect::<io::Result<_>>()?;
        ns_dirs.sort();
        for ns_dir in ns_dirs.into_iter().filter(|p| p.is_dir()) {
            let mut titles: Vec<PathBuf> = fs::read_dir(&ns_dir)?.map(|e| e.map(|e| e.path())).collect::<io::Result<_>>()?;
            titles.sort();
            for dir in titles.into_iter().filter(|p| p.is_dir()) {
                let Some(raw) = Self::read_optional(&dir.join("meta.json"))? else { continue };
                let meta: PageMeta = serde_json::from_str(&raw)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", dir.display())))?;
                let expected_ns = decode_segment(&ns_dir.file_name().unwrap_or_default().to_string_lossy());
                if meta.namespace != expected_ns {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("{}: namespace {:?} does not match its directory", dir.display(), meta.namespace),
                    ));
                }
                let texts = meta
                    .revisions
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        if r.revision != i as u64 + 1 {
                            return Err(io::Error::new(
                                io::ErrorKind::InvalidData,
                                format!("{}: revision list has a gap at {}", dir.display(), i + 1),
                            ));
                        }
                        fs::read_to_string(dir.join(format!("{}.wiki", r.revision)))
                    })
                    .collect::<io::Result<Vec<String>>>()?;
                out.push(StoredPage { meta, texts });
            }
        }
        Ok(out)
    }
}
