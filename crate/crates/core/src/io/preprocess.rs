//! Chronological tail subsampling and iterated p-core filtering.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ingest::compact;
use crate::error::{Error, Result};
use crate::seq_tensor::EventLog;

/// Keeps the last `tail_frac` of the (time-sorted) log, then repeatedly
/// drops users and items with fewer than `min_interactions` events until
/// both sides satisfy the floor. Codes are re-assigned densely.
pub fn preprocess(log: &EventLog, min_interactions: usize, tail_frac: Option<f64>) -> Result<EventLog> {
    if min_interactions == 0 {
        return Err(Error::InvalidParameter("min_interactions must be >= 1".into()));
    }
    let mut events = log.events.clone();
    if !log.is_sorted() {
        events.sort_by_key(|e| e.timestamp);
    }
    if let Some(f) = tail_frac {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidParameter(format!("tail fraction must lie in (0, 1], got {f}")));
        }
        let keep = ((events.len() as f64) * f).ceil() as usize;
        events.drain(..events.len() - keep.min(events.len()));
    }
    loop {
        let mut users: HashMap<u32, usize> = HashMap::new();
        let mut items: HashMap<u32, usize> = HashMap::new();
        for e in &events {
            *users.entry(e.user).or_default() += 1;
            *items.entry(e.item).or_default() += 1;
        }
        let before = events.len();
        events.retain(|e| users[&e.user] >= min_interactions && items[&e.item] >= min_interactions);
        if events.len() == before {
            break;
        }
    }
    if events.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "preprocessing with a {min_interactions}-core floor left no events"
        )));
    }
    Ok(compact(&log.with_events(events)))
}

/// Per-dataset preprocessing and evaluation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: &'static str,
    pub min_interactions: usize,
    pub tail_frac: Option<f64>,
    pub train_frac: f64,
    pub valid_frac: f64,
    pub n_chunks: usize,
    pub window: usize,
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "ml20m",
        min_interactions: 1,
        tail_frac: Some(0.2),
        train_frac: 0.4,
        valid_frac: 0.0001,
        n_chunks: 200,
        window: 20,
    },
    Preset {
        name: "amzb",
        min_interactions: 5,
        tail_frac: None,
        train_frac: 0.7,
        valid_frac: 0.0001,
        n_chunks: 100,
        window: 20,
    },
    Preset {
        name: "amzg",
        min_interactions: 5,
        tail_frac: None,
        train_frac: 0.7,
        valid_frac: 0.0001,
        n_chunks: 100,
        window: 20,
    },
    Preset {
        name: "steam",
        min_interactions: 5,
        tail_frac: None,
        train_frac: 0.8,
        valid_frac: 0.0001,
        n_chunks: 50,
        window: 8,
    },
];

pub fn preset(name: &str) -> Result<Preset> {
    PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .copied()
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            Error::Config(format!("unknown preset '{name}', expected one of {}", names.join(", ")))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq_tensor::Event;
    use proptest::prelude::*;

    fn log(pairs: &[(u32, u32)]) -> EventLog {
        let events = pairs
            .iter()
            .enumerate()
            .map(|(t, &(user, item))| Event { user, item, timestamp: t as i64 })
            .collect();
        let n = 1 + pairs.iter().map(|p| p.0.max(p.1)).max().unwrap_or(0) as usize;
        EventLog {
            events,
            users: (0..n).map(|k| format!("u{k}")).collect(),
            items: (0..n).map(|k| format!("i{k}")).collect(),
        }
    }

    #[test]
    fn lone_user_removed_and_cascade_rechecked() {
        // users 0,1 have two events on items 0,1; user 2 has one event on
        // item 2 and one on item 0. With floor 2, item 2 goes, then user 2.
        let l = log(&[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 0)]);
        let out = preprocess(&l, 2, None).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(out.users, vec!["u0", "u1"]);
        assert_eq!(out.items, vec!["i0", "i1"]);
    }

    #[test]
    fn empty_result_is_an_error() {
        assert!(preprocess(&log(&[(0, 0)]), 5, None).is_err());
        assert!(preprocess(&log(&[(0, 0)]), 0, None).is_err());
    }

    #[test]
    fn tail_keeps_latest() {
        let l = log(&[(0, 0), (1, 1), (2, 2), (3, 3)]);
        let out = preprocess(&l, 1, Some(0.5)).unwrap();
        assert_eq!(out.users, vec!["u2", "u3"]);
        assert_eq!(out.events[0].timestamp, 2);
    }

    #[test]
    fn presets_resolve() {
        assert_eq!(preset("ML20M").unwrap().min_interactions, 1);
        assert_eq!(preset("steam").unwrap().window, 8);
        assert!(preset("netflix").is_err());
    }

    proptest! {
        #[test]
        fn idempotent(pairs in prop::collection::vec((0u32..8, 0u32..8), 1..60), p in 1usize..4) {
            if let Ok(once) = preprocess(&log(&pairs), p, None) {
                let twice = preprocess(&once, p, None).unwrap();
                prop_assert_eq!(once, twice);
            }
        }
    }
}
