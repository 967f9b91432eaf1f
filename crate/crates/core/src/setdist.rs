//! Distance between sets of structural breaks.
//!
//! For nonempty sets on a series of length `T`:
//!
//! ```text
//! D(S1, S2) = 1/(2T) * ( Σ_{b∈S2} d(b, S1) / |S2| + Σ_{a∈S1} d(a, S2) / |S1| )
//! ```
//!
//! where `d(x, S)` is the distance from `x` to the nearest element of `S`. The
//! result is symmetric, zero on equal sets and lies in `[0, 1)`, but it does
//! not satisfy the triangle inequality in general.
//!
//! Empty sets: `D(∅, ∅) = 0` and `D(S, ∅) = `[`EMPTY_SET_DISTANCE`] for
//! nonempty `S`.

use thiserror::Error;

use crate::changepoints::BreakSet;
use crate::matrix::DistanceMatrix;
use crate::Scalar;

/// Distance between a nonempty break set and an empty one.
pub const EMPTY_SET_DISTANCE: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum SetDistError {
    #[error("series lengths differ: {0} has T = {1}, {2} has T = {3}")]
    LengthMismatch(String, usize, String, usize),
    #[error("series length must be positive")]
    ZeroLength,
    #[error("need at least 2 break sets, got {0}")]
    TooFewSets(usize),
}

/// Sum over `from` of the distance to the nearest element of sorted `to`.
fn nearest_sum(from: &[usize], to: &[usize]) -> usize {
    from.iter()
        .map(|&x| {
            let i = to.partition_point(|&y| y < x);
            let right = to.get(i).map(|&y| y - x);
            let left = i.checked_sub(1).map(|j| x - to[j]);
            match (left, right) {
                (Some(l), Some(r)) => l.min(r),
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!("target set is nonempty"),
            }
        })
        .sum()
}

/// Distance between two sorted index sets on a series of length `t`.
pub fn break_set_distance<S: Scalar>(s1: &[usize], s2: &[usize], t: usize) -> S {
    match (s1.is_empty(), s2.is_empty()) {
        (true, true) => return S::zero(),
        (true, false) | (false, true) => return S::lit(EMPTY_SET_DISTANCE),
        _ => {}
    }
    let n = S::from_usize_lossy;
    let forward = n(nearest_sum(s2, s1)) / n(s2.len());
    let backward = n(nearest_sum(s1, s2)) / n(s1.len());
    (forward + backward) / n(2 * t)
}

pub fn mj_distance<S: Scalar>(s1: &BreakSet, s2: &BreakSet) -> Result<S, SetDistError> {
    if s1.series_length() != s2.series_length() {
        return Err(SetDistError::LengthMismatch(
            s1.ticker().into(),
            s1.series_length(),
            s2.ticker().into(),
            s2.series_length(),
        ));
    }
    if s1.series_length() == 0 {
        return Err(SetDistError::ZeroLength);
    }
    Ok(break_set_distance(s1.breaks(), s2.breaks(), s1.series_length()))
}

/// `D^B` with one row per break set, labelled by ticker.
pub fn break_distance_matrix<S: Scalar>(sets: &[BreakSet]) -> Result<DistanceMatrix<S>, SetDistError> {
    if sets.len() < 2 {
        return Err(SetDistError::TooFewSets(sets.len()));
    }
    let labels = sets.iter().map(|s| s.ticker().to_string()).collect();
    DistanceMatrix::from_pairs(labels, |i, j| mj_distance(&sets[i], &sets[j]))
}
