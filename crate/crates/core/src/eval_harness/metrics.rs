//! Ranking quality and recommendation stability metrics.

use std::collections::HashMap;
use std::hash::Hash;

/// 1-based position of `target` within the first `n` entries of `list`.
pub fn hit_position<T: PartialEq>(list: &[T], target: &T, n: usize) -> Option<usize> {
    list.iter().take(n).position(|x| x == target).map(|p| p + 1)
}

/// Fraction of users whose target appears in their top-n list.
/// `None` when there are no users.
pub fn hit_rate(positions: &[Option<usize>]) -> Option<f64> {
    if positions.is_empty() {
        return None;
    }
    let hits = positions.iter().filter(|p| p.is_some()).count();
    Some(hits as f64 / positions.len() as f64)
}

/// Mean reciprocal rank; a miss contributes zero.
pub fn mean_reciprocal_rank(positions: &[Option<usize>]) -> Option<f64> {
    if positions.is_empty() {
        return None;
    }
    let sum: f64 = positions.iter().map(|p| p.map_or(0.0, |k| 1.0 / k as f64)).sum();
    Some(sum / positions.len() as f64)
}

/// Weighted Jaccard index of two ranked lists with weight `1/position`
/// for the first `n` entries and zero beyond. Two empty lists are
/// identical, hence `1`.
pub fn wji<T: Eq + Hash + Clone>(prev: &[T], curr: &[T], n: usize) -> f64 {
    // list order, not map order, fixes the summation order
    let weights = |list: &[T]| -> (Vec<(T, f64)>, HashMap<T, f64>) {
        let mut order = Vec::new();
        let mut w = HashMap::new();
        for (p, x) in list.iter().take(n).enumerate() {
            if !w.contains_key(x) {
                let v = 1.0 / (p + 1) as f64;
                w.insert(x.clone(), v);
                order.push((x.clone(), v));
            }
        }
        (order, w)
    };
    let ((a_order, a), (b_order, b)) = (weights(prev), weights(curr));
    let mut min_sum = 0.0;
    let mut max_sum = 0.0;
    for (x, wa) in &a_order {
        let wb = b.get(x).copied().unwrap_or(0.0);
        min_sum += wa.min(wb);
        max_sum += wa.max(wb);
    }
    for (x, wb) in &b_order {
        if !a.contains_key(x) {
            max_sum += wb;
        }
    }
    if max_sum == 0.0 {
        1.0
    } else {
        min_sum / max_sum
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut n = 0usize;
    let mut s = 0.0;
    for v in values {
        n += 1;
        s += v;
    }
    (n > 0).then(|| s / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let pos = [Some(2), None, None, None];
        assert_eq!(hit_rate(&pos), Some(0.25));
        assert_eq!(mean_reciprocal_rank(&pos), Some(0.125));
        assert_eq!(hit_rate(&[]), None);
        assert_eq!(mean_reciprocal_rank(&[Some(1), Some(1)]), Some(1.0));
        assert_eq!(hit_position(&[3, 1, 2], &2, 2), None);
        assert_eq!(hit_position(&[3, 1, 2], &2, 3), Some(3));
    }

    #[test]
    fn wji_examples() {
        assert_eq!(wji(&[1, 2, 3], &[1, 2, 3], 3), 1.0);
        assert_eq!(wji(&[1, 2], &[3, 4], 2), 0.0);
        assert_eq!(wji(&['a', 'b'], &['b', 'a'], 2), 0.5);
        assert_eq!(wji::<u32>(&[], &[], 5), 1.0);
    }
}
