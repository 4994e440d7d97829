//! Loading scenarios and mode policies from directories.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::aopl::{Policy, PolicyDocument, PolicyError};
use crate::domain::Scenario;
use crate::planner::BehaviorMode;

pub const BASE_POLICY: &str = "base.aopl";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {error}", path.display())]
    Policy { path: PathBuf, error: PolicyError },
    #[error("unknown behavior mode `{0}`")]
    UnknownMode(String),
    #[error("policy grounding failed: {0}")]
    Grounding(PolicyError),
}

fn read(path: &Path) -> Result<String, CatalogError> {
    fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_policy_file(path: impl AsRef<Path>) -> Result<PolicyDocument, CatalogError> {
    let path = path.as_ref();
    PolicyDocument::parse(&read(path)?).map_err(|error| CatalogError::Policy {
        path: path.to_path_buf(),
        error,
    })
}

/// Orders ids like `s2` before `s10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let digits = s.len() - s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
    split(a).cmp(&split(b)).then_with(|| a.cmp(b))
}

/// The scenarios of one directory, keyed by id.
#[derive(Clone, Debug, Default)]
pub struct ScenarioCatalog {
    scenarios: Vec<Arc<Scenario>>,
}

impl ScenarioCatalog {
    /// Loads every `*.json` file in `dir`. Files that fail to load are
    /// skipped with a warning, as are duplicate ids.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|source| CatalogError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json") && p.is_file())
            .collect();
        paths.sort();
        let mut scenarios: Vec<Arc<Scenario>> = Vec::new();
        for path in paths {
            match Scenario::load(&path) {
                Ok(s) if scenarios.iter().any(|t| t.id == s.id) => {
                    tracing::warn!(path = %path.display(), id = %s.id, "duplicate scenario id, skipped");
                }
                Ok(s) => scenarios.push(Arc::new(s)),
                Err(e) => tracing::warn!(path = %path.display(), error = %e, "scenario skipped"),
            }
        }
        scenarios.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        Ok(ScenarioCatalog { scenarios })
    }

    pub fn from_scenarios(scenarios: impl IntoIterator<Item = Scenario>) -> Self {
        let mut scenarios: Vec<Arc<Scenario>> = scenarios.into_iter().map(Arc::new).collect();
        scenarios.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        ScenarioCatalog { scenarios }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Scenario>> {
        self.scenarios.iter().find(|s| s.id == id).cloned()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Scenario>> {
        self.scenarios.iter()
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

/// A base policy plus the behavior modes and their extra policies.
#[derive(Clone, Debug)]
pub struct PolicyLibrary {
    base: PolicyDocument,
    modes: Vec<LoadedMode>,
}

#[derive(Clone, Debug)]
struct LoadedMode {
    mode: BehaviorMode,
    extras: PolicyDocument,
    full: PolicyDocument,
}

impl PolicyLibrary {
    /// Reads `base.aopl` (optional) and the extra files of the built-in modes.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, CatalogError> {
        Self::load_with_modes(dir, BehaviorMode::builtin())
    }

    pub fn load_with_modes(
        dir: impl AsRef<Path>,
        modes: Vec<BehaviorMode>,
    ) -> Result<Self, CatalogError> {
        let dir = dir.as_ref();
        let base_path = dir.join(BASE_POLICY);
        let base = if base_path.exists() {
            load_policy_file(&base_path)?
        } else {
            PolicyDocument::default()
        };
        let mut loaded = Vec::new();
        for mode in modes {
            let mut extras = PolicyDocument::default();
            for extra in &mode.extra_policies {
                let path = dir.join(extra);
                extras = extras
                    .merge(&load_policy_file(&path)?)
                    .map_err(|error| CatalogError::Policy { path, error })?;
            }
            let full = base.merge(&extras).map_err(|error| CatalogError::Policy {
                path: dir.to_path_buf(),
                error,
            })?;
            loaded.push(LoadedMode { mode, extras, full });
        }
        Ok(PolicyLibrary {
            base,
            modes: loaded,
        })
    }

    pub fn base(&self) -> &PolicyDocument {
        &self.base
    }

    pub fn modes(&self) -> impl Iterator<Item = &BehaviorMode> {
        self.modes.iter().map(|m| &m.mode)
    }

    pub fn mode(&self, name: &str) -> Option<&BehaviorMode> {
        self.modes().find(|m| m.name == name)
    }

    fn loaded(&self, mode: &str) -> Result<&LoadedMode, CatalogError> {
        self.modes
            .iter()
            .find(|m| m.mode.name == mode)
            .ok_or_else(|| CatalogError::UnknownMode(mode.to_string()))
    }

    /// Base policy merged with the mode's extras.
    pub fn document(&self, mode: &str) -> Result<&PolicyDocument, CatalogError> {
        Ok(&self.loaded(mode)?.full)
    }

    /// The mode's extra policies alone.
    pub fn extras(&self, mode: &str) -> Result<&PolicyDocument, CatalogError> {
        Ok(&self.loaded(mode)?.extras)
    }

    pub fn policy(&self, mode: &str, scenario: &Scenario) -> Result<Policy, CatalogError> {
        self.document(mode)?
            .ground(scenario)
            .map_err(CatalogError::Grounding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_order() {
        let mut ids = vec!["s10", "s2", "s1", "a", "s9"];
        ids.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(ids, ["a", "s1", "s2", "s9", "s10"]);
    }
}
