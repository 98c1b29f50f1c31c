//! Bijections between event-log entity codes and model row indices.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Entity code as assigned by the event log vocabulary.
pub type EntityId = u32;

/// Rows are assigned in insertion order and never reused.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<EntityId>", into = "Vec<EntityId>")]
pub struct IdMap {
    ids: Vec<EntityId>,
    rows: HashMap<EntityId, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, id: EntityId) -> Option<usize> {
        self.rows.get(&id).copied()
    }

    pub fn id(&self, row: usize) -> EntityId {
        self.ids[row]
    }

    pub fn contains(&self, id: EntityId) -> bool {
        self.rows.contains_key(&id)
    }

    /// Returns the row of `id`, inserting it at the end when absent.
    pub fn insert(&mut self, id: EntityId) -> usize {
        if let Some(r) = self.rows.get(&id) {
            return *r;
        }
        let r = self.ids.len();
        self.ids.push(id);
        self.rows.insert(id, r);
        r
    }

    pub fn ids(&self) -> &[EntityId] {
        &self.ids
    }
}

impl From<Vec<EntityId>> for IdMap {
    fn from(ids: Vec<EntityId>) -> Self {
        let rows = ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();
        Self { ids, rows }
    }
}

impl From<IdMap> for Vec<EntityId> {
    fn from(m: IdMap) -> Self {
        m.ids
    }
}

impl FromIterator<EntityId> for IdMap {
    fn from_iter<T: IntoIterator<Item = EntityId>>(iter: T) -> Self {
        let mut m = IdMap::new();
        for id in iter {
            m.insert(id);
        }
        m
    }
}
