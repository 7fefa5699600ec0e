//! Process-wide interning tables.
//!
//! Base tokens, layers and grouped track symbols are hashed heavily inside the
//! product constructions, so they are replaced by dense `u32` handles. The
//! tables only ever grow and are guarded by a read-mostly lock; interning is
//! invisible to every public operation (ordering always falls back to the
//! interned content, never to the handle value).

use parking_lot::RwLock;
use std::collections::HashMap;
use std::hash::Hash;
use std::sync::Arc;

pub(crate) struct Interner<T> {
    inner: RwLock<Table<T>>,
}

struct Table<T> {
    ids: HashMap<Arc<T>, u32>,
    values: Vec<Arc<T>>,
}

impl<T: Hash + Eq> Interner<T> {
    pub(crate) fn new() -> Self {
        Interner {
            inner: RwLock::new(Table {
                ids: HashMap::new(),
                values: Vec::new(),
            }),
        }
    }

    pub(crate) fn intern(&self, value: T) -> u32 {
        if let Some(&id) = self.inner.read().ids.get(&value) {
            return id;
        }
        let mut table = self.inner.write();
        if let Some(&id) = table.ids.get(&value) {
            return id;
        }
        let id = u32::try_from(table.values.len()).expect("interner overflow");
        let value = Arc::new(value);
        table.values.push(Arc::clone(&value));
        table.ids.insert(value, id);
        id
    }

    pub(crate) fn get(&self, id: u32) -> Arc<T> {
        Arc::clone(&self.inner.read().values[id as usize])
    }
}

pub(crate) struct StrInterner {
    inner: RwLock<StrTable>,
}

struct StrTable {
    ids: HashMap<&'static str, u32>,
    values: Vec<&'static str>,
}

impl StrInterner {
    pub(crate) fn new() -> Self {
        StrInterner {
            inner: RwLock::new(StrTable {
                ids: HashMap::new(),
                values: Vec::new(),
            }),
        }
    }

    pub(crate) fn intern(&self, token: &str) -> u32 {
        if let Some(&id) = self.inner.read().ids.get(token) {
            return id;
        }
        let mut table = self.inner.write();
        if let Some(&id) = table.ids.get(token) {
            return id;
        }
        let id = u32::try_from(table.values.len()).expect("interner overflow");
        // Tokens live for the whole process; leaking gives cheap `&'static str` access.
        let leaked: &'static str = Box::leak(token.to_owned().into_boxed_str());
        table.values.push(leaked);
        table.ids.insert(leaked, id);
        id
    }

    pub(crate) fn get(&self, id: u32) -> &'static str {
        self.inner.read().values[id as usize]
    }
}
