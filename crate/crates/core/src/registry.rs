//! Name-keyed registries of interchangeable algorithm strategies.
//!
//! Every pluggable numerical choice in the crate (initial-data family,
//! transfer-matrix integrator, ρ-contour for the coefficient quadratures,
//! linear expansion coefficient set, experiment) implements a small trait
//! object and is registered here under a stable name.  Configuration files
//! and the command line select strategies by that name at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Anything that can live in a [`Registry`] exposes a stable name.
pub trait Named {
    fn name(&self) -> &str;
    fn description(&self) -> &str {
        ""
    }
}

pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    entries: BTreeMap<String, Arc<T>>,
    default: Option<String>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
            default: None,
        }
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    /// Register a strategy; returns the previously registered entry of the same name.
    pub fn register(&mut self, entry: Arc<T>) -> Option<Arc<T>> {
        let name = entry.name().to_string();
        if self.default.is_none() {
            self.default = Some(name.clone());
        }
        self.entries.insert(name, entry)
    }

    /// Builder-style registration.
    pub fn with(mut self, entry: Arc<T>) -> Self {
        self.register(entry);
        self
    }

    pub fn set_default(&mut self, name: &str) -> Result<()> {
        self.get(name)?;
        self.default = Some(name.to_string());
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownName {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    /// The named entry, or the default when `name` is `None`.
    pub fn resolve(&self, name: Option<&str>) -> Result<Arc<T>> {
        match name {
            Some(n) => self.get(n),
            None => {
                let d = self.default.as_deref().ok_or_else(|| {
                    Error::Config(format!("no {} registered", self.kind))
                })?;
                self.get(d)
            }
        }
    }

    pub fn default_name(&self) -> Option<&str> {
        self.default.as_deref()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn list(&self) -> Vec<Arc<T>> {
        self.entries.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
