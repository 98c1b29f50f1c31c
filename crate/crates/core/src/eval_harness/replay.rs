//! Score-then-update loop over daily chunks.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{hit_position, hit_rate, mean, mean_reciprocal_rank, wji};
use super::models::StreamingModel;
use super::routing::GroupCounts;
use super::split::{day_of, ChunkPlan};
use crate::error::Result;
use crate::ids::EntityId;
use crate::seq_tensor::Event;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayOptions {
    pub top_n: usize,
    /// Number of users whose lists are tracked for stability.
    pub stability_users: usize,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self {
            top_n: 5,
            stability_users: 50,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChunkEval {
    pub hr: Option<f64>,
    pub mrr: Option<f64>,
    /// Users scored, in order of first appearance in the chunk.
    pub users: Vec<EntityId>,
    /// Known users whose target item the model does not index.
    pub excluded: usize,
}

/// Each user already known to the model is asked for a top-`n` list; the
/// target is the first item they touch in the chunk.
pub fn evaluate_chunk(model: &dyn StreamingModel, chunk: &[Event], n: usize) -> Result<ChunkEval> {
    let mut seen = HashSet::new();
    let mut out = ChunkEval::default();
    let mut positions = Vec::new();
    for e in chunk {
        if !seen.insert(e.user) || !model.knows_user(e.user) {
            continue;
        }
        if !model.knows_item(e.item) {
            out.excluded += 1;
            continue;
        }
        let list = model.recommend(e.user, n)?.unwrap_or_default();
        positions.push(hit_position(&list, &e.item, n));
        out.users.push(e.user);
    }
    out.hr = hit_rate(&positions);
    out.mrr = mean_reciprocal_rank(&positions);
    Ok(out)
}

/// Up to `k` training users ranked by the number of chunks they appear
/// in, then by total interactions, then by id.
pub fn stability_targets(train: &[Event], chunks: &[&[Event]], k: usize) -> Vec<EntityId> {
    let mut activity: HashMap<EntityId, (usize, usize)> = HashMap::new();
    for e in train {
        activity.entry(e.user).or_default().1 += 1;
    }
    for chunk in chunks {
        let mut present = HashSet::new();
        for e in chunk.iter() {
            if let Some(a) = activity.get_mut(&e.user) {
                a.1 += 1;
                if present.insert(e.user) {
                    a.0 += 1;
                }
            }
        }
    }
    let mut users: Vec<(EntityId, (usize, usize))> = activity.into_iter().collect();
    users.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(b.1 .1.cmp(&a.1 .1)).then(a.0.cmp(&b.0)));
    users.into_iter().take(k).map(|(u, _)| u).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub chunk: usize,
    pub day: i64,
    pub events: usize,
    pub hr: Option<f64>,
    pub mrr: Option<f64>,
    pub eligible: usize,
    pub excluded: usize,
    /// Mean WJI between the tracked lists before and after the update.
    pub wji: Option<f64>,
    pub update_seconds: f64,
    pub new_entity: usize,
    pub new_user: usize,
    pub new_item: usize,
    pub known: usize,
    pub sweeps: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub hr: Option<f64>,
    pub mrr: Option<f64>,
    pub wji: Option<f64>,
    pub update_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub label: String,
    pub top_n: usize,
    pub stability_users: usize,
    pub fit_seconds: f64,
    pub chunks: Vec<ChunkRecord>,
}

impl ReplayReport {
    /// Means over chunks where each metric is defined.
    pub fn averages(&self) -> Averages {
        Averages {
            hr: mean(self.chunks.iter().filter_map(|c| c.hr)),
            mrr: mean(self.chunks.iter().filter_map(|c| c.mrr)),
            wji: mean(self.chunks.iter().filter_map(|c| c.wji)),
            update_seconds: mean(self.chunks.iter().map(|c| c.update_seconds)),
        }
    }

    /// Least-squares slope of update time against chunk index.
    pub fn time_slope(&self) -> Option<f64> {
        let n = self.chunks.len();
        if n < 2 {
            return None;
        }
        let xs: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let ys: Vec<f64> = self.chunks.iter().map(|c| c.update_seconds).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

fn tracked_lists(
    model: &dyn StreamingModel,
    users: &[EntityId],
    n: usize,
) -> Result<Vec<Option<Vec<EntityId>>>> {
    users.iter().map(|&u| model.recommend(u, n)).collect()
}

/// Fits `model` on the training part of `plan`, then for every chunk
/// scores it, applies it, and measures how much the tracked lists moved.
/// Only the update is timed.
pub fn replay(
    model: &mut dyn StreamingModel,
    label: &str,
    plan: &ChunkPlan,
    opts: ReplayOptions,
    mut progress: impl FnMut(&ChunkRecord),
) -> Result<ReplayReport> {
    let train = plan.training_events();
    let start = Instant::now();
    model.fit(&train)?;
    let fit_seconds = start.elapsed().as_secs_f64();

    let chunk_events: Vec<&[Event]> = plan.chunks.iter().map(|c| c.events.as_slice()).collect();
    let targets = stability_targets(&train, &chunk_events, opts.stability_users);
    let mut lists = tracked_lists(model, &targets, opts.top_n)?;

    let mut records = Vec::with_capacity(plan.chunks.len());
    for (k, chunk) in chunk_events.iter().enumerate() {
        let eval = evaluate_chunk(model, chunk, opts.top_n)?;
        let start = Instant::now();
        let info = model.update(chunk)?;
        let update_seconds = start.elapsed().as_secs_f64();

        let next = tracked_lists(model, &targets, opts.top_n)?;
        let wji_mean = mean(lists.iter().zip(&next).filter_map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => Some(wji(a, b, opts.top_n)),
            _ => None,
        }));
        lists = next;

        let GroupCounts {
            new_entity,
            new_user,
            new_item,
            known,
        } = info.groups;
        let record = ChunkRecord {
            chunk: k,
            day: chunk.first().map(|e| day_of(e.timestamp)).unwrap_or_default(),
            events: chunk.len(),
            hr: eval.hr,
            mrr: eval.mrr,
            eligible: eval.users.len(),
            excluded: eval.excluded,
            wji: wji_mean,
            update_seconds,
            new_entity,
            new_user,
            new_item,
            known,
            sweeps: info.sweeps,
        };
        progress(&record);
        records.push(record);
    }
    Ok(ReplayReport {
        label: label.to_string(),
        top_n: opts.top_n,
        stability_users: targets.len(),
        fit_seconds,
        chunks: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval_harness::models::UpdateInfo;

    /// Recommends a fixed list per user, regardless of data.
    struct Scripted {
        lists: HashMap<EntityId, Vec<EntityId>>,
        items: HashSet<EntityId>,
    }

    impl StreamingModel for Scripted {
        fn fit(&mut self, _: &[Event]) -> Result<UpdateInfo> {
            Ok(UpdateInfo::default())
        }
        fn update(&mut self, _: &[Event]) -> Result<UpdateInfo> {
            Ok(UpdateInfo::default())
        }
        fn knows_user(&self, u: EntityId) -> bool {
            self.lists.contains_key(&u)
        }
        fn knows_item(&self, i: EntityId) -> bool {
            self.items.contains(&i)
        }
        fn recommend(&self, u: EntityId, n: usize) -> Result<Option<Vec<EntityId>>> {
            Ok(self.lists.get(&u).map(|l| l.iter().take(n).copied().collect()))
        }
        fn snapshot(&self) -> Option<crate::eval_harness::models::ModelState> {
            None
        }
    }

    fn ev(user: u32, item: u32) -> Event {
        Event { user, item, timestamp: 0 }
    }

    #[test]
    fn one_hit_at_rank_two_of_four() {
        let lists = (0..4).map(|u| (u, vec![10, 11, 12, 13, 14])).collect();
        let model = Scripted {
            lists,
            items: (0..20).collect(),
        };
        let chunk = [ev(0, 11), ev(1, 0), ev(2, 1), ev(3, 2), ev(0, 10)];
        let e = evaluate_chunk(&model, &chunk, 5).unwrap();
        assert_eq!(e.hr, Some(0.25));
        assert_eq!(e.mrr, Some(0.125));
        assert_eq!(e.users, vec![0, 1, 2, 3]);
    }

    #[test]
    fn unknown_users_and_items_are_skipped() {
        let model = Scripted {
            lists: [(0, vec![1])].into_iter().collect(),
            items: [1].into_iter().collect(),
        };
        let e = evaluate_chunk(&model, &[ev(5, 1), ev(0, 7)], 5).unwrap();
        assert_eq!(e.hr, None);
        assert_eq!(e.excluded, 1);
        assert!(e.users.is_empty());
    }

    #[test]
    fn targets_rank_by_chunks_then_volume_then_id() {
        let train = [ev(1, 0), ev(2, 0), ev(2, 1), ev(3, 0), ev(4, 0)];
        let c1 = [ev(1, 5), ev(3, 5), ev(9, 5)];
        let c2 = [ev(1, 6), ev(4, 6), ev(4, 7)];
        let t = stability_targets(&train, &[&c1, &c2], 10);
        assert_eq!(t, vec![1, 4, 3, 2]);
        assert_eq!(stability_targets(&train, &[&c1, &c2], 2), vec![1, 4]);
    }

    #[test]
    fn slope_of_linear_times() {
        let rec = |k: usize| ChunkRecord {
            chunk: k,
            day: 0,
            events: 0,
            hr: None,
            mrr: None,
            eligible: 0,
            excluded: 0,
            wji: None,
            update_seconds: 1.0 + 0.5 * k as f64,
            new_entity: 0,
            new_user: 0,
            new_item: 0,
            known: 0,
            sweeps: None,
        };
        let r = ReplayReport {
            label: "x".into(),
            top_n: 5,
            stability_users: 0,
            fit_seconds: 0.0,
            chunks: (0..5).map(rec).collect(),
        };
        assert!((r.time_slope().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r.averages().update_seconds, Some(2.0));
        assert_eq!(r.averages().hr, None);
    }
}
