use std::collections::BTreeMap;

use thiserror::Error;

use super::manifest::{load_manifest, Category, ManifestError, PluginManifest};

const BUILTIN_SOURCES: [(&str, &str); 4] = [
    ("sobel-edge", include_str!("../../plugins/sobel-edge.json")),
    ("invert", include_str!("../../plugins/invert.json")),
    ("histogram", include_str!("../../plugins/histogram.json")),
    ("threshold-mask", include_str!("../../plugins/threshold-mask.json")),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("plugin id `{0}` is already in the catalog")]
    DuplicateId(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

/// Built-in manifests by id.
pub fn builtin_manifest(id: &str) -> Option<PluginManifest> {
    BUILTIN_SOURCES
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, src)| load_manifest(src.as_bytes()).expect("builtin manifests are valid"))
}

pub fn builtin_ids() -> impl Iterator<Item = &'static str> {
    BUILTIN_SOURCES.iter().map(|(id, _)| *id)
}

/// Browsable set of plugins keyed by id.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    plugins: BTreeMap<String, PluginManifest>,
}

impl Catalog {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut catalog = Self::empty();
        for id in builtin_ids() {
            catalog
                .add(builtin_manifest(id).expect("listed builtin"))
                .expect("builtin ids are unique");
        }
        catalog
    }

    pub fn add(&mut self, manifest: PluginManifest) -> Result<(), CatalogError> {
        manifest.validate()?;
        if self.plugins.contains_key(&manifest.id) {
            return Err(CatalogError::DuplicateId(manifest.id));
        }
        self.plugins.insert(manifest.id.clone(), manifest);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&PluginManifest> {
        self.plugins.get(id)
    }

    pub fn len(&self) -> usize {
        self.plugins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plugins.is_empty()
    }

    /// Grouped by category, then sorted by name (id breaks ties).
    pub fn list(&self) -> Vec<&PluginManifest> {
        let mut all: Vec<_> = self.plugins.values().collect();
        all.sort_by(|a, b| {
            (a.category, &a.name, &a.id).cmp(&(b.category, &b.name, &b.id))
        });
        all
    }

    /// Case-insensitive substring match over name and description, optionally
    /// restricted to one category. An empty query matches everything.
    pub fn search(&self, query: &str, category: Option<Category>) -> Vec<&PluginManifest> {
        let needle = query.to_lowercase();
        self.list()
            .into_iter()
            .filter(|m| category.is_none_or(|c| m.category == c))
            .filter(|m| {
                needle.is_empty()
                    || m.name.to_lowercase().contains(&needle)
                    || m.description.to_lowercase().contains(&needle)
            })
            .collect()
    }
}
