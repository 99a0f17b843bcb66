//! Dataset manifest: a JSON file tying together per-view matrix files,
//! optional labels and an optional mask file. Paths are resolved relative
//! to the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

use super::matrix_io::{load_labels, load_matrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewEntry {
    pub id: usize,
    pub path: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub n_samples: usize,
    pub n_clusters: usize,
    pub views: Vec<ViewEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks_path: Option<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters < 2 {
            return Err(Error::invalid("manifest: n_clusters must be at least 2"));
        }
        if self.views.is_empty() {
            return Err(Error::invalid("manifest: no views"));
        }
        if self.views.iter().any(|v| v.dim == 0) {
            return Err(Error::invalid("manifest: view dim must be positive"));
        }
        let mut ids: Vec<usize> = self.views.iter().map(|v| v.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.views.len() {
            return Err(Error::invalid("manifest: duplicate view ids"));
        }
        Ok(())
    }

    fn resolve(&self, base: &Path, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }

    /// Loads all view matrices (ascending view id) and checks them
    /// against the declared shapes.
    pub fn load_views(&self, base: &Path) -> Result<Vec<Matrix>> {
        let mut entries: Vec<&ViewEntry> = self.views.iter().collect();
        entries.sort_by_key(|v| v.id);
        let mut views = Vec::with_capacity(entries.len());
        for entry in entries {
            let m = load_matrix(&self.resolve(base, &entry.path))?;
            if m.rows() != self.n_samples || m.cols() != entry.dim {
                return Err(Error::shape(format!(
                    "view {}: file is {}x{}, manifest declares {}x{}",
                    entry.id,
                    m.rows(),
                    m.cols(),
                    self.n_samples,
                    entry.dim
                )));
            }
            views.push(m);
        }
        Ok(views)
    }

    pub fn load_label_vec(&self, base: &Path) -> Result<Option<Vec<usize>>> {
        match &self.labels_path {
            None => Ok(None),
            Some(rel) => {
                let labels = load_labels(&self.resolve(base, rel))?;
                if labels.len() != self.n_samples {
                    return Err(Error::shape(format!(
                        "labels file has {} entries, manifest declares {}",
                        labels.len(),
                        self.n_samples
                    )));
                }
                Ok(Some(labels))
            }
        }
    }

    pub fn resolve_masks_path(&self, base: &Path) -> Option<PathBuf> {
        self.masks_path.as_ref().map(|rel| self.resolve(base, rel))
    }
}
