//! Models retrained from scratch on all data seen so far. They reuse the
//! dynamic models' state types, so scoring is identical.

use crate::error::{mismatch, Result};
use crate::linalg::{hooi, HooiOptions, HooiReport};
use crate::psirec::SvdState;
use crate::seq_tensor::{AttentionSpec, Interactions};
use crate::tirec::{padded_factors, validate_ranks, TuckerState};

/// Truncated SVD of the cumulative binary matrix.
pub fn puresvd_retrain(data: &Interactions, r: usize, seed: u64) -> Result<SvdState> {
    SvdState::init(&data.matrix()?, r, seed)?.with_maps(data.users.clone(), data.items.clone())
}

/// Cold HOOI of the cumulative attention-weighted tensor.
pub fn tdrec_retrain(
    data: &Interactions,
    ranks: [usize; 3],
    spec: AttentionSpec,
    opts: HooiOptions,
) -> Result<(TuckerState, HooiReport)> {
    let (state, report) = TuckerState::init(&data.tensor(&spec)?, ranks, spec, opts)?;
    Ok((state.with_maps(data.users.clone(), data.items.clone())?, report))
}

/// HOOI warm-started from `prev`, whose users and items must be a prefix
/// of the current ones. Rows of entities unseen by `prev` start at zero.
pub fn tdrec_reinit(
    data: &Interactions,
    ranks: [usize; 3],
    spec: AttentionSpec,
    prev: &TuckerState,
    opts: HooiOptions,
) -> Result<(TuckerState, HooiReport)> {
    let prefix = |old: &[u32], new: &[u32]| old.len() <= new.len() && new[..old.len()] == *old;
    if !prefix(prev.user_map.ids(), data.users.ids()) || !prefix(prev.item_map.ids(), data.items.ids()) {
        return Err(mismatch(
            "tdrec_reinit",
            "previous ids as a prefix of the current ids",
            "reordered or missing ids",
        ));
    }
    if prev.ranks != ranks || prev.attention != spec {
        return Err(mismatch(
            "tdrec_reinit",
            format!("ranks {ranks:?}"),
            format!("ranks {:?}", prev.ranks),
        ));
    }
    let x = data.tensor(&spec)?;
    validate_ranks(x.shape(), ranks)?;
    let start = padded_factors(&prev.factors, x.shape())?;
    let (factors, report) = hooi(&x, ranks, Some(&start), opts)?;
    let state = TuckerState::from_factors(factors, spec)?.with_maps(data.users.clone(), data.items.clone())?;
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq_tensor::Event;

    fn events(pairs: &[(u32, u32)]) -> Vec<Event> {
        pairs
            .iter()
            .enumerate()
            .map(|(t, &(user, item))| Event { user, item, timestamp: t as i64 })
            .collect()
    }

    fn toy() -> Vec<Event> {
        let mut pairs = Vec::new();
        for u in 0..8u32 {
            for k in 0..5u32 {
                pairs.push((u, (u * 3 + k * k) % 9));
            }
        }
        events(&pairs)
    }

    #[test]
    fn puresvd_matches_psirec_init() {
        let data = Interactions::from_events(&toy());
        let a = puresvd_retrain(&data, 3, 0).unwrap();
        let b = SvdState::init(&data.matrix().unwrap(), 3, 0).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.user_map, data.users);
    }

    #[test]
    fn warm_start_needs_no_more_sweeps() {
        let data = Interactions::from_events(&toy());
        let spec = AttentionSpec::new(3, 1.0).unwrap();
        let opts = HooiOptions::default();
        let (cold, cold_report) = tdrec_retrain(&data, [3, 3, 2], spec, opts).unwrap();
        let (warm, warm_report) = tdrec_reinit(&data, [3, 3, 2], spec, &cold, opts).unwrap();
        assert!(warm_report.sweeps <= cold_report.sweeps);
        let x = data.tensor(&spec).unwrap();
        let e_cold = cold.factors.fit_error(&x).unwrap();
        let e_warm = warm.factors.fit_error(&x).unwrap();
        assert!(e_warm <= e_cold + 1e-9);
    }

    #[test]
    fn reinit_rejects_reordered_ids() {
        let evs = toy();
        let data = Interactions::from_events(&evs);
        let spec = AttentionSpec::new(3, 1.0).unwrap();
        let (cold, _) = tdrec_retrain(&data, [3, 3, 2], spec, HooiOptions::default()).unwrap();
        let mut rev = evs.clone();
        rev.reverse();
        let other = Interactions::from_events(&rev);
        assert!(tdrec_reinit(&other, [3, 3, 2], spec, &cold, HooiOptions::default()).is_err());
    }
}
