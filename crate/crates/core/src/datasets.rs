//! The four social-network case studies: where to find their files, how to
//! preprocess them, and the counts they are expected to produce.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{parse_edge_list, parse_gml, LabeledGraph, ParseError};

/// Environment variable naming the directory that holds dataset files.
pub const DATA_DIR_ENV: &str = "NETOBSERVE_DATA";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{name}: none of {candidates:?} found in {dir}")]
    Missing {
        name: &'static str,
        dir: String,
        candidates: &'static [&'static str],
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocess {
    None,
    DropIsolates,
    Largest,
}

impl Preprocess {
    pub fn apply(self, g: &LabeledGraph) -> LabeledGraph {
        match self {
            Preprocess::None => g.clone(),
            Preprocess::DropIsolates => g.drop_isolates(),
            Preprocess::Largest => g.largest_component(),
        }
    }
}

/// Published `(nodes, arcs, n_alpha, n_beta)` for a case study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedRow {
    pub nodes: usize,
    pub arcs: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseStudy {
    Monks,
    Blogs,
    Books,
    Coauthorship,
}

impl CaseStudy {
    pub const ALL: [CaseStudy; 4] = [
        CaseStudy::Monks,
        CaseStudy::Blogs,
        CaseStudy::Books,
        CaseStudy::Coauthorship,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseStudy::Monks => "Monks",
            CaseStudy::Blogs => "Blogs",
            CaseStudy::Books => "Books",
            CaseStudy::Coauthorship => "Coauthorship",
        }
    }

    /// File names tried in order. `.gml` files are parsed as GML, anything
    /// else as a directed edge list.
    pub fn candidates(self) -> &'static [&'static str] {
        match self {
            CaseStudy::Monks => &["monks.gml", "sampson.gml", "monks.txt", "monks.edgelist", "sampson.txt"],
            CaseStudy::Blogs => &["polblogs.gml"],
            CaseStudy::Books => &["polbooks.gml"],
            CaseStudy::Coauthorship => &["netscience.gml"],
        }
    }

    /// Preprocessing that reproduces the published node counts: the usual
    /// distributions of the blog and coauthorship graphs include isolated
    /// nodes that the published counts leave out.
    pub fn preprocess(self) -> Preprocess {
        match self {
            CaseStudy::Blogs | CaseStudy::Coauthorship => Preprocess::DropIsolates,
            CaseStudy::Monks | CaseStudy::Books => Preprocess::None,
        }
    }

    pub fn expected(self) -> ExpectedRow {
        let (nodes, arcs, n_alpha, n_beta) = match self {
            CaseStudy::Monks => (18, 88, 0, 1),
            CaseStudy::Blogs => (1224, 19025, 436, 0),
            CaseStudy::Books => (105, 882, 0, 1),
            CaseStudy::Coauthorship => (1461, 5484, 37, 248),
        };
        ExpectedRow {
            nodes,
            arcs,
            n_alpha,
            n_beta,
        }
    }

    /// Components and matched components, where published.
    pub fn expected_components(self) -> Option<(usize, usize)> {
        match self {
            CaseStudy::Coauthorship => Some((268, 248)),
            _ => None,
        }
    }

    pub fn locate(self, dir: &Path) -> Option<PathBuf> {
        self.candidates()
            .iter()
            .map(|f| dir.join(f))
            .find(|p| p.is_file())
    }

    /// Read and preprocess the dataset from `dir`.
    pub fn load(self, dir: &Path) -> Result<LabeledGraph, DatasetError> {
        let path = self.locate(dir).ok_or_else(|| DatasetError::Missing {
            name: self.name(),
            dir: dir.display().to_string(),
            candidates: self.candidates(),
        })?;
        let raw = load_file(&path)?;
        Ok(self.preprocess().apply(&raw))
    }
}

/// Parse by extension: `.gml` as GML, otherwise a directed edge list.
pub fn load_file(path: &Path) -> Result<LabeledGraph, DatasetError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| DatasetError::Io {
        path: shown.clone(),
        source,
    })?;
    let is_gml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gml"));
    let mut g = if is_gml {
        parse_gml(&bytes)
    } else {
        parse_edge_list(&bytes, true)
    }
    .map_err(|source| DatasetError::Parse {
        path: shown.clone(),
        source,
    })?;
    g.source.file = Some(shown);
    Ok(g)
}

/// `$NETOBSERVE_DATA` if set, otherwise `fallback`.
pub fn data_dir(fallback: &Path) -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| fallback.to_path_buf())
}
