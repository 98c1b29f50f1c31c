//! Seeded synthetic interaction stream with a daily influx of new users and
//! items. Users prefer one item cluster and browse it along a fixed item
//! chain, so the data has both low-rank and sequential structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::split::{ChunkPlan, SECONDS_PER_DAY};
use crate::error::{Error, Result};
use crate::seq_tensor::{Event, EventLog};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub initial_users: usize,
    pub total_users: usize,
    pub initial_items: usize,
    pub total_items: usize,
    pub train_days: usize,
    pub chunk_days: usize,
    pub clusters: usize,
    /// Probability that an existing user opens a session on a given day.
    pub activity: f64,
    pub max_session: usize,
    /// Probability of stepping to the chain successor instead of a random
    /// item of the user's cluster.
    pub follow: f64,
    /// Probability that a session starts on a recently released item.
    pub fresh: f64,
    /// First day, in days since the Unix epoch.
    pub start_day: i64,
    pub seed: u64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            initial_users: 1000,
            total_users: 2000,
            initial_items: 400,
            total_items: 500,
            train_days: 40,
            chunk_days: 50,
            clusters: 10,
            activity: 0.08,
            max_session: 6,
            follow: 0.75,
            fresh: 0.3,
            start_day: 18_262,
            seed: 0,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("synthetic stream: {m}")));
        if self.initial_users == 0 || self.initial_items < self.clusters || self.clusters == 0 {
            return bad("need users, and at least one initial item per cluster");
        }
        if self.total_users < self.initial_users || self.total_items < self.initial_items {
            return bad("totals must not be below the initial counts");
        }
        if self.train_days < 2 || self.chunk_days == 0 || self.max_session == 0 {
            return bad("need two training days, one chunk day and sessions of length >= 1");
        }
        for (name, p) in [("activity", self.activity), ("follow", self.follow), ("fresh", self.fresh)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticStream {
    pub log: EventLog,
    pub config: StreamConfig,
}

/// Spreads `total` arrivals over `days` days as evenly as possible.
fn arrivals(total: usize, days: usize, day: usize) -> usize {
    total * (day + 1) / days - total * day / days
}

struct Catalog {
    clusters: usize,
    released: usize,
    /// Day each item was released on; `None` for the initial catalogue.
    release_day: Vec<Option<usize>>,
}

impl Catalog {
    fn cluster_items(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        (c..self.released).step_by(self.clusters)
    }

    /// Next released item of the same cluster, wrapping around.
    fn successor(&self, item: usize) -> usize {
        let next = item + self.clusters;
        if next < self.released {
            next
        } else {
            item % self.clusters
        }
    }

    /// Skewed towards the oldest items of the cluster.
    fn popular(&self, c: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = self.cluster_items(c).count();
        let u: f64 = rng.random();
        let k = ((n as f64) * u * u) as usize;
        self.cluster_items(c).nth(k.min(n - 1)).expect("cluster is non-empty")
    }

    fn recent(&self, day: usize, span: usize) -> Vec<usize> {
        (0..self.released)
            .filter(|&i| self.release_day[i].is_some_and(|d| d + span > day))
            .collect()
    }
}

impl SyntheticStream {
    pub fn generate(config: StreamConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut catalog = Catalog {
            clusters: config.clusters,
            released: config.initial_items,
            release_day: vec![None; config.initial_items],
        };
        let mut users = config.initial_users;
        let mut events = Vec::new();
        let days = config.train_days + config.chunk_days;
        for day in 0..days {
            let mut joined = 0..0;
            if day >= config.train_days {
                let k = day - config.train_days;
                for _ in 0..arrivals(config.total_items - config.initial_items, config.chunk_days, k) {
                    catalog.release_day.push(Some(day));
                    catalog.released += 1;
                }
                let n = arrivals(config.total_users - config.initial_users, config.chunk_days, k);
                joined = users..users + n;
                users += n;
            }
            let recent = catalog.recent(day, 3);
            let mut sessions: Vec<(i64, Vec<usize>, usize)> = Vec::new();
            for user in 0..users {
                let newcomer = joined.contains(&user);
                if !newcomer && !rng.random_bool(config.activity) {
                    continue;
                }
                let home = user % config.clusters;
                let len = rng.random_range(1..=config.max_session);
                let mut items = Vec::with_capacity(len);
                let mut cur = if !recent.is_empty() && rng.random_bool(config.fresh) {
                    recent[rng.random_range(0..recent.len())]
                } else {
                    catalog.popular(home, &mut rng)
                };
                items.push(cur);
                for _ in 1..len {
                    cur = if rng.random_bool(config.follow) {
                        catalog.successor(cur)
                    } else if rng.random_bool(0.9) {
                        catalog.popular(home, &mut rng)
                    } else {
                        catalog.popular(rng.random_range(0..config.clusters), &mut rng)
                    };
                    items.push(cur);
                }
                let start = rng.random_range(0..SECONDS_PER_DAY - 3_600);
                sessions.push((start, items, user));
            }
            let base = (config.start_day + day as i64) * SECONDS_PER_DAY;
            let mut day_events: Vec<Event> = sessions
                .into_iter()
                .flat_map(|(start, items, user)| {
                    items.into_iter().enumerate().map(move |(k, item)| Event {
                        user: user as u32,
                        item: item as u32,
                        timestamp: base + start + 60 * k as i64,
                    })
                })
                .collect();
            day_events.sort_by_key(|e| e.timestamp);
            events.extend(day_events);
        }
        let log = EventLog {
            events,
            users: (0..users).map(|u| format!("u{u}")).collect(),
            items: (0..catalog.released).map(|i| format!("i{i}")).collect(),
        };
        Ok(Self { log, config })
    }

    /// Training days (the last one held out for validation) followed by one
    /// chunk per remaining day.
    pub fn plan(&self) -> ChunkPlan {
        let day = |e: &Event| (e.timestamp.div_euclid(SECONDS_PER_DAY) - self.config.start_day) as usize;
        let mut train = Vec::new();
        let mut validation = Vec::new();
        let mut chunks = vec![Vec::new(); self.config.chunk_days];
        for e in &self.log.events {
            let d = day(e);
            if d + 1 < self.config.train_days {
                train.push(*e);
            } else if d < self.config.train_days {
                validation.push(*e);
            } else {
                chunks[d - self.config.train_days].push(*e);
            }
        }
        ChunkPlan {
            train: self.log.with_events(train),
            validation: self.log.with_events(validation),
            chunks: chunks.into_iter().map(|c| self.log.with_events(c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn arrivals_sum_to_total() {
        let s: usize = (0..50).map(|d| arrivals(1000, 50, d)).sum();
        assert_eq!(s, 1000);
        assert_eq!(arrivals(100, 50, 7), 2);
    }

    #[test]
    fn default_stream_shape() {
        let s = SyntheticStream::generate(StreamConfig::default()).unwrap();
        assert!(s.log.is_sorted());
        assert_eq!(s.log.users.len(), 2000);
        assert_eq!(s.log.items.len(), 500);
        assert!((25_000..45_000).contains(&s.log.len()), "{}", s.log.len());
        let plan = s.plan();
        assert_eq!(plan.chunks.len(), 50);
        assert!(plan.chunks.iter().all(|c| !c.is_empty()));
        let train_users: HashSet<u32> = plan.training_events().iter().map(|e| e.user).collect();
        assert!(train_users.len() <= 1000 && train_users.len() > 900);
        let n = plan.train.len() + plan.validation.len() + plan.chunks.iter().map(|c| c.len()).sum::<usize>();
        assert_eq!(n, s.log.len());
    }

    #[test]
    fn seeded() {
        let cfg = StreamConfig {
            initial_users: 50,
            total_users: 80,
            initial_items: 30,
            total_items: 40,
            train_days: 5,
            chunk_days: 5,
            ..StreamConfig::default()
        };
        let a = SyntheticStream::generate(cfg.clone()).unwrap();
        let b = SyntheticStream::generate(cfg.clone()).unwrap();
        assert_eq!(a, b);
        let c = SyntheticStream::generate(StreamConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.log.events, c.log.events);
    }
}
