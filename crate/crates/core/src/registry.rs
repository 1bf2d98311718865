//! Name-keyed registries for the interchangeable algorithm families.

use std::collections::BTreeMap;

use crate::error::{KgeError, Result};

/// Maps strategy names to factories producing boxed trait objects.
pub struct Registry<T: ?Sized, A = ()> {
    family: &'static str,
    factories: BTreeMap<&'static str, fn(&A) -> Box<T>>,
}

impl<T: ?Sized, A> Registry<T, A> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: fn(&A) -> Box<T>) -> &mut Self {
        self.factories.insert(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn create(&self, name: &str, args: &A) -> Result<Box<T>> {
        let key = name.to_ascii_lowercase();
        match self.factories.get(key.as_str()) {
            Some(factory) => Ok(factory(args)),
            None => Err(KgeError::UnknownStrategy {
                family: self.family,
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }
}
