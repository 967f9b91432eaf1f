//! Standardized Mann-Whitney two-sample statistic over every split of a window.
//!
//! Ranks are stored doubled so that midranks stay integral and the rank sums,
//! and therefore the statistic, depend on the ordering of the data only.

use super::DetectorError;

/// `|W - k(n+1)/2| / sqrt(k(n-k)(n+1)/12)` where `W` is the midrank sum of
/// the first `k` observations. Ties use midranks without variance correction.
pub fn mann_whitney_statistic(x: &[f64], k: usize) -> Result<f64, DetectorError> {
    let n = x.len();
    if n < 4 {
        return Err(DetectorError::InsufficientData { needed: 4, got: n });
    }
    if k < 2 || k > n - 2 {
        return Err(DetectorError::SplitOutOfRange { k, n });
    }
    let ranks = twice_midranks(x);
    let w2: u64 = ranks[..k].iter().sum();
    Ok(standardized(w2, k, n).sqrt())
}

/// Doubled midranks: `2 * rank`, with tied values sharing the average rank.
pub fn twice_midranks(x: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite input"));
    let mut ranks = vec![0u64; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // positions i..=j share rank ((i+1) + (j+1)) / 2
        let r2 = (i + j + 2) as u64;
        for &p in &idx[i..=j] {
            ranks[p] = r2;
        }
        i = j + 1;
    }
    ranks
}

/// Squared standardized statistic from a doubled rank sum.
#[inline]
fn standardized(w2: u64, k: usize, n: usize) -> f64 {
    let dev = w2 as f64 - (k * (n + 1)) as f64;
    3.0 * dev * dev / ((k * (n - k)) as f64 * (n + 1) as f64)
}

/// Largest statistic over `k = 2..=n-2` given doubled ranks, smallest `k` on
/// ties. Returns `(k, D)`.
pub fn max_over_splits(twice_ranks: &[u64]) -> Option<(usize, f64)> {
    let n = twice_ranks.len();
    if n < 4 {
        return None;
    }
    let mut w2 = twice_ranks[0];
    let mut best = (0, f64::NEG_INFINITY);
    for k in 2..=n - 2 {
        w2 += twice_ranks[k - 1];
        let s = standardized(w2, k, n);
        if s > best.1 {
            best = (k, s);
        }
    }
    Some((best.0, best.1.sqrt()))
}

/// `max_k D_{k,n}` over a fixed sample.
pub fn max_statistic(x: &[f64]) -> Option<(usize, f64)> {
    max_over_splits(&twice_midranks(x))
}

/// Growing window that keeps midranks current as observations arrive, so each
/// new observation costs `O(t)` rather than a re-sort.
#[derive(Debug, Clone, Default)]
pub struct MannWhitneyWindow {
    values: Vec<f64>,
    twice_ranks: Vec<u64>,
}

impl MannWhitneyWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { values: Vec::with_capacity(n), twice_ranks: Vec::with_capacity(n) }
    }

    pub fn push(&mut self, x: f64) {
        let mut below = 0u64;
        let mut equal = 0u64;
        for (v, r) in self.values.iter().zip(self.twice_ranks.iter_mut()) {
            let gt = (x < *v) as u64;
            let eq = (x == *v) as u64;
            *r += 2 * gt + eq;
            equal += eq;
            below += 1 - gt - eq;
        }
        self.values.push(x);
        self.twice_ranks.push(2 + 2 * below + equal);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn clear(&mut self) {
        self.values.clear();
        self.twice_ranks.clear();
    }

    pub fn twice_ranks(&self) -> &[u64] {
        &self.twice_ranks
    }

    pub fn max_statistic(&self) -> Option<(usize, f64)> {
        max_over_splits(&self.twice_ranks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_examples() {
        assert_eq!(mann_whitney_statistic(&[1.0, 2.0, 2.0, 1.0], 2).unwrap(), 0.0);
        // W = 3, mu = 5, var = 2*2*5/12 = 5/3
        let d = mann_whitney_statistic(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert!((d - 2.0 / (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((d - 1.549_193_338_482_966_7).abs() < 1e-12);
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(mann_whitney_statistic(&[1.0, 2.0, 3.0], 2), Err(DetectorError::InsufficientData { .. })));
        assert!(matches!(
            mann_whitney_statistic(&[1.0, 2.0, 3.0, 4.0, 5.0], 1),
            Err(DetectorError::SplitOutOfRange { .. })
        ));
        assert!(matches!(
            mann_whitney_statistic(&[1.0, 2.0, 3.0, 4.0, 5.0], 4),
            Err(DetectorError::SplitOutOfRange { .. })
        ));
    }

    #[test]
    fn midranks() {
        assert_eq!(twice_midranks(&[1.0, 2.0, 2.0, 1.0]), vec![3, 7, 7, 3]);
        assert_eq!(twice_midranks(&[5.0, 5.0, 5.0]), vec![4, 4, 4]);
    }

    #[test]
    fn incremental_ranks_match_batch_ranks() {
        let x = [0.3, -1.0, 0.3, 2.0, 2.0, 2.0, -5.0, 0.0, 0.3, 1.0];
        let mut w = MannWhitneyWindow::new();
        for (i, &v) in x.iter().enumerate() {
            w.push(v);
            assert_eq!(w.twice_ranks(), twice_midranks(&x[..=i]).as_slice());
        }
    }

    #[test]
    fn constant_window_has_zero_statistic() {
        let (_, d) = max_statistic(&[7.0; 30]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn max_prefers_smallest_split_on_ties() {
        // Symmetric pattern: splits 2 and 4 give equal statistics.
        let x = [0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let (k, _) = max_statistic(&x).unwrap();
        let all: Vec<f64> = (2..=4).map(|k| mann_whitney_statistic(&x, k).unwrap()).collect();
        let best = all.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(k, 2 + all.iter().position(|&v| v == best).unwrap());
    }
}
