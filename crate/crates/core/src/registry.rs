//! Name-keyed registries of interchangeable strategies.
//!
//! Every pluggable family in the simulator (nonlinearities, kernels, field
//! initializers, time-stepping schemes, verification checks) is a set of
//! factories registered under a string name and selected at runtime from the
//! config file or the command line.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

pub struct Registry<F> {
    family: &'static str,
    entries: BTreeMap<String, F>,
}

impl<F> Registry<F> {
    pub fn new(family: &'static str) -> Self {
        Registry {
            family,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: impl Into<String>, factory: F) -> &mut Self {
        self.entries.insert(name.into(), factory);
        self
    }

    pub fn with(mut self, name: impl Into<String>, factory: F) -> Self {
        self.register(name, factory);
        self
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries.get(name).ok_or_else(|| {
            Error::config(format!(
                "unknown {} '{}' (known: {})",
                self.family,
                name,
                self.names().join(", ")
            ))
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &F)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn family(&self) -> &'static str {
        self.family
    }
}

impl<F> fmt::Debug for Registry<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("family", &self.family)
            .field("names", &self.names())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_unknown_name() {
        let reg: Registry<fn() -> u32> = Registry::<fn() -> u32>::new("widget")
            .with("one", || 1)
            .with("two", || 2);
        assert_eq!((reg.get("two").unwrap())(), 2);
        assert_eq!(reg.names(), vec!["one", "two"]);
        let err = reg.get("three").unwrap_err().to_string();
        assert!(err.contains("unknown widget 'three'"), "{err}");
        assert!(err.contains("one, two"), "{err}");
    }
}
