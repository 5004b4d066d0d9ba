use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use evc_core::io::{read_f0, read_features, write_json, EmotionCode, IoError};
use evc_core::vawgan::LabeledUtterance;

use crate::error::{CliError, CliResult};

pub const DEFAULT_SHIFT_MS: f64 = 5.0;

/// File name up to the first dot: `a_001.f0.evcf` -> `a_001`.
pub fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.split('.').next().unwrap_or_default().to_string()
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// Sorted directory listing.
pub fn list_dir(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::Io(format!("cannot read {}: {e}", dir.display())))? {
        let path = entry.map_err(|e| CliError::Io(format!("cannot read {}: {e}", dir.display())))?.path();
        if path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn print_json<S: Serialize>(value: &S) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub emotion: usize,
    /// Relative to the manifest directory.
    pub features: PathBuf,
    pub f0: PathBuf,
}

/// `corpus.json`: labelled utterances with their feature and F0 files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub n_classes: usize,
    pub utterances: Vec<CorpusEntry>,
}

pub const CORPUS_FILE: &str = "corpus.json";

impl Corpus {
    pub fn save(&self, dir: &Path) -> CliResult<()> {
        Ok(write_json(&dir.join(CORPUS_FILE), self)?)
    }

    /// Accepts the manifest itself or its directory.
    pub fn load(path: &Path) -> CliResult<(Self, PathBuf)> {
        let file = if path.is_dir() { path.join(CORPUS_FILE) } else { path.to_path_buf() };
        let corpus: Corpus = evc_core::io::read_json(&file)?;
        if corpus.utterances.is_empty() {
            return Err(CliError::config(format!("DataError: {} lists no utterances", file.display())));
        }
        let root = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((corpus, root))
    }

    pub fn read_utterances(&self, root: &Path) -> CliResult<Vec<LabeledUtterance>> {
        self.utterances
            .par_iter()
            .map(|e| {
                let emotion = EmotionCode::new(e.emotion, self.n_classes)?;
                Ok(LabeledUtterance {
                    name: e.name.clone(),
                    emotion,
                    features: read_features(&root.join(&e.features))?,
                    f0: read_f0(&root.join(&e.f0), DEFAULT_SHIFT_MS)?,
                })
            })
            .collect::<Result<Vec<_>, IoError>>()
            .map_err(CliError::from)
    }
}
