//! Partition of a chunk into the four update groups.
//!
//! 1. new-entity block: users unseen before the chunk whose chunk items
//!    are all unseen as well, together with those items;
//! 2. other new users, restricted to items known once the block is in;
//! 3. interactions with items that are still new after steps 1–2;
//! 4. everything else: known users on known (or block) items.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::ids::{EntityId, IdMap};
use crate::seq_tensor::Event;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChunkGroups {
    pub new_entity: Vec<Event>,
    pub new_user: Vec<Event>,
    pub new_item: Vec<Event>,
    pub known: Vec<Event>,
    /// Block users and items, in order of first appearance.
    pub block_users: Vec<EntityId>,
    pub block_items: Vec<EntityId>,
    /// New users outside the block, in order of first appearance.
    pub new_users: Vec<EntityId>,
    /// Items still unknown after the block step, in order of first appearance.
    pub new_items: Vec<EntityId>,
}

/// Interaction counts per group, in routing order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GroupCounts {
    pub new_entity: usize,
    pub new_user: usize,
    pub new_item: usize,
    pub known: usize,
}

impl ChunkGroups {
    pub fn counts(&self) -> GroupCounts {
        GroupCounts {
            new_entity: self.new_entity.len(),
            new_user: self.new_user.len(),
            new_item: self.new_item.len(),
            known: self.known.len(),
        }
    }
}

fn push_unique(order: &mut Vec<EntityId>, seen: &mut HashSet<EntityId>, id: EntityId) {
    if seen.insert(id) {
        order.push(id);
    }
}

pub fn classify_chunk(chunk: &[Event], known_users: &IdMap, known_items: &IdMap) -> ChunkGroups {
    let mut only_new_items: HashMap<EntityId, bool> = HashMap::new();
    for e in chunk {
        if !known_users.contains(e.user) {
            let flag = only_new_items.entry(e.user).or_insert(true);
            *flag &= !known_items.contains(e.item);
        }
    }
    let in_block = |u: EntityId| only_new_items.get(&u).copied().unwrap_or(false);

    let mut g = ChunkGroups::default();
    let mut seen_bu = HashSet::new();
    let mut seen_bi = HashSet::new();
    for e in chunk.iter().filter(|e| in_block(e.user)) {
        push_unique(&mut g.block_users, &mut seen_bu, e.user);
        push_unique(&mut g.block_items, &mut seen_bi, e.item);
        g.new_entity.push(*e);
    }
    let item_known = |i: EntityId| known_items.contains(i) || seen_bi.contains(&i);
    let mut seen_nu = HashSet::new();
    let mut seen_ni = HashSet::new();
    for e in chunk.iter().filter(|e| !in_block(e.user)) {
        let user_new = !known_users.contains(e.user);
        if user_new {
            push_unique(&mut g.new_users, &mut seen_nu, e.user);
        }
        if !item_known(e.item) {
            push_unique(&mut g.new_items, &mut seen_ni, e.item);
            g.new_item.push(*e);
        } else if user_new {
            g.new_user.push(*e);
        } else {
            g.known.push(*e);
        }
    }
    g
}
