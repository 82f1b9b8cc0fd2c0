//! Name-keyed registries of strategy objects.

use std::collections::BTreeMap;

/// Anything that can be looked up by a stable name.
pub trait Named {
    fn name(&self) -> &'static str;
}

/// Collects entries before freezing them into a [`Registry`].
pub struct RegistryBuilder<T: ?Sized + Named> {
    items: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Default for RegistryBuilder<T> {
    fn default() -> Self {
        RegistryBuilder { items: Vec::new() }
    }
}

impl<T: ?Sized + Named> RegistryBuilder<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(mut self, item: Box<T>) -> Self {
        self.items.push(item);
        self
    }

    /// Fails on the first duplicated name.
    pub fn build(self) -> Result<Registry<T>, String> {
        let mut map = BTreeMap::new();
        for item in self.items {
            let name = item.name();
            if map.insert(name, item).is_some() {
                return Err(format!("duplicate registry entry '{name}'"));
            }
        }
        Ok(Registry { map })
    }
}

/// Frozen name -> strategy map.
pub struct Registry<T: ?Sized + Named> {
    map: BTreeMap<&'static str, Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn get(&self, name: &str) -> Option<&T> {
        self.map.get(name).map(|b| b.as_ref())
    }

    pub fn must_get(&self, name: &str) -> Result<&T, String> {
        self.get(name).ok_or_else(|| format!("unknown name '{name}'; known: {}", self.names().join(", ")))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.map.keys().copied().collect()
    }
}
