//! Chronological train / validation / daily-chunk split.

use crate::error::{Error, Result};
use crate::seq_tensor::{Event, EventLog};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// UTC calendar day of a Unix timestamp.
pub fn day_of(timestamp: i64) -> i64 {
    timestamp.div_euclid(SECONDS_PER_DAY)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChunkPlan {
    /// Training events without the validation tail.
    pub train: EventLog,
    pub validation: EventLog,
    /// One log per calendar day, in order.
    pub chunks: Vec<EventLog>,
}

/// Groups time-sorted events by UTC day.
pub fn group_by_day(events: &[Event]) -> Vec<(i64, Vec<Event>)> {
    let mut days: Vec<(i64, Vec<Event>)> = Vec::new();
    for &e in events {
        let d = day_of(e.timestamp);
        match days.last_mut() {
            Some((day, bucket)) if *day == d => bucket.push(e),
            _ => days.push((d, vec![e])),
        }
    }
    days
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// The first `train_frac` of the (time-sorted) log trains the model, of
/// which the last `valid_frac` is set aside for validation; the following
/// `n_chunks` calendar days become the test chunks.
pub fn split(log: &EventLog, train_frac: f64, valid_frac: f64, n_chunks: usize) -> Result<ChunkPlan> {
    check_fraction("train fraction", train_frac)?;
    check_fraction("validation fraction", valid_frac)?;
    let mut sorted = log.clone();
    if !sorted.is_sorted() {
        sorted.sort();
    }
    let events = &sorted.events;
    let n_train = ((events.len() as f64) * train_frac).floor() as usize;
    let n_valid = ((n_train as f64) * valid_frac).ceil() as usize;
    let n_valid = n_valid.min(n_train);
    let (train, rest) = events.split_at(n_train);
    let (fit, valid) = train.split_at(n_train - n_valid);
    let days = group_by_day(rest);
    if days.len() < n_chunks {
        return Err(Error::InsufficientDays {
            needed: n_chunks,
            found: days.len(),
        });
    }
    Ok(ChunkPlan {
        train: sorted.with_events(fit.to_vec()),
        validation: sorted.with_events(valid.to_vec()),
        chunks: days
            .into_iter()
            .take(n_chunks)
            .map(|(_, evs)| sorted.with_events(evs))
            .collect(),
    })
}

impl ChunkPlan {
    /// Training data with the validation tail merged back.
    pub fn training_events(&self) -> Vec<Event> {
        let mut all = self.train.events.clone();
        all.extend_from_slice(&self.validation.events);
        all
    }

    /// Plan used for tuning: fit on the training part only and replay the
    /// validation tail day by day.
    pub fn validation_plan(&self) -> ChunkPlan {
        ChunkPlan {
            train: self.train.clone(),
            validation: self.train.with_events(Vec::new()),
            chunks: group_by_day(&self.validation.events)
                .into_iter()
                .map(|(_, evs)| self.train.with_events(evs))
                .collect(),
        }
    }

    pub fn days(&self) -> Vec<i64> {
        self.chunks
            .iter()
            .map(|c| c.events.first().map(|e| day_of(e.timestamp)).unwrap_or(0))
            .collect()
    }
}
