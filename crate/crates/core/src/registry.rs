//! Name-keyed registries of interchangeable strategies.

use std::collections::BTreeMap;

/// Boxed strategies looked up by name at runtime.
pub struct Registry<T: ?Sized> {
    entries: BTreeMap<String, Box<T>>,
}

impl<T: ?Sized> Default for Registry<T> {
    fn default() -> Self {
        Self { entries: BTreeMap::new() }
    }
}

impl<T: ?Sized> Registry<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register `item` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: impl Into<String>, item: Box<T>) -> &mut Self {
        self.entries.insert(name.into(), item);
        self
    }

    pub fn get(&self, name: &str) -> Option<&T> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<T: ?Sized> std::fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Shape {
        fn area(&self) -> f64;
    }
    struct Unit;
    impl Shape for Unit {
        fn area(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn lookup_by_name() {
        let mut reg: Registry<dyn Shape> = Registry::new();
        reg.register("unit", Box::new(Unit));
        assert_eq!(reg.get("unit").map(|s| s.area()), Some(1.0));
        assert!(reg.get("missing").is_none());
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["unit"]);
    }
}
