//! Top-n selection shared by every model.

use std::cmp::Ordering;

/// Indices of the `n` highest scores, best first. Equal scores go to the
/// lower index; indices in `exclude` never appear.
pub fn top_n(scores: &[f64], n: usize, exclude: &[usize]) -> Vec<usize> {
    let mut banned = vec![false; scores.len()];
    for &i in exclude {
        if i < banned.len() {
            banned[i] = true;
        }
    }
    let key = |i: usize| if scores[i].is_nan() { f64::NEG_INFINITY } else { scores[i] };
    let order = |a: &usize, b: &usize| -> Ordering { key(*b).total_cmp(&key(*a)).then(a.cmp(b)) };
    let mut candidates: Vec<usize> = (0..scores.len()).filter(|&i| !banned[i]).collect();
    if n == 0 || candidates.is_empty() {
        return Vec::new();
    }
    if candidates.len() > n {
        candidates.select_nth_unstable_by(n - 1, order);
        candidates.truncate(n);
    }
    candidates.sort_by(order);
    candidates
}
