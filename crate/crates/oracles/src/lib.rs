//! Slow, obviously-correct reference implementations.
//!
//! Nothing here shares code with `tailbreak-core`; each function follows the
//! textbook definition as directly as possible so the fast paths can be
//! checked against it.

use itertools::Itertools;

/// Minimum transport cost between two equal-count atom sets with uniform
/// weight `mass / k`, by enumerating every assignment.
pub fn assignment_w1(xs: &[f64], ys: &[f64], mass: f64) -> f64 {
    assert_eq!(xs.len(), ys.len(), "equal atom counts");
    let k = xs.len();
    if k == 0 {
        return 0.0;
    }
    (0..k)
        .permutations(k)
        .map(|p| p.iter().enumerate().map(|(i, &j)| (xs[i] - ys[j]).abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        * mass
        / k as f64
}

/// `∫ |F_a(x) - F_b(x)| dx` for weighted atoms, with `F` the unnormalized CDF.
pub fn cdf_w1(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut grid: Vec<f64> = a.iter().chain(b).map(|p| p.0).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let cdf = |m: &[(f64, f64)], x: f64| m.iter().filter(|p| p.0 <= x).map(|p| p.1).sum::<f64>();
    grid.windows(2).map(|w| (cdf(a, w[0]) - cdf(b, w[0])).abs() * (w[1] - w[0])).sum()
}

/// Break-set distance evaluated term by term, scanning for nearest points.
/// Empty sets follow the `0` / `0.5` convention.
pub fn mj_distance(s1: &[usize], s2: &[usize], t: usize) -> f64 {
    match (s1.is_empty(), s2.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 0.5,
        _ => {}
    }
    let nearest = |x: usize, set: &[usize]| set.iter().map(|&y| x.abs_diff(y)).min().unwrap() as f64;
    let forward: f64 = s2.iter().map(|&b| nearest(b, s1)).sum::<f64>() / s2.len() as f64;
    let backward: f64 = s1.iter().map(|&a| nearest(a, s2)).sum::<f64>() / s1.len() as f64;
    (forward + backward) / (2.0 * t as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Average,
    Single,
    Complete,
}

/// One merge: the two cluster ids joined, the height and the new size.
pub type Merge = (usize, usize, f64, usize);

/// Agglomerative clustering that recomputes every cluster-to-cluster
/// distance from the member leaves at each step. Ids follow the usual
/// convention (leaves `0..n`, merge `m` creates `n + m`); ties pick the
/// lexicographically smallest id pair.
pub fn linkage(d: &[Vec<f64>], method: Linkage) -> Vec<Merge> {
    let n = d.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for (p, q) in (0..clusters.len()).tuple_combinations() {
            let (a, b) = (&clusters[p].1, &clusters[q].1);
            let pairs = a.iter().cartesian_product(b).map(|(&i, &j)| d[i][j]);
            let v = match method {
                Linkage::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
                Linkage::Single => pairs.fold(f64::INFINITY, f64::min),
                Linkage::Complete => pairs.fold(f64::NEG_INFINITY, f64::max),
            };
            let key = (clusters[p].0.min(clusters[q].0), clusters[p].0.max(clusters[q].0));
            let better = match best {
                None => true,
                Some((bp, bq, bv)) => {
                    let bkey = (clusters[bp].0.min(clusters[bq].0), clusters[bp].0.max(clusters[bq].0));
                    v < bv || (v == bv && key < bkey)
                }
            };
            if better {
                best = Some((p, q, v));
            }
        }
        let (p, q, v) = best.unwrap();
        let (ida, idb) = (clusters[p].0, clusters[q].0);
        let mut members = clusters[p].1.clone();
        members.extend(&clusters[q].1);
        clusters.remove(q);
        clusters.remove(p);
        out.push((ida.min(idb), ida.max(idb), v, members.len()));
        clusters.push((n + step, members));
    }
    out
}

/// Standardized Mann-Whitney statistic for split `k`, with midranks found by
/// counting smaller and equal values.
pub fn mann_whitney(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let rank = |v: f64| {
        let less = x.iter().filter(|&&y| y < v).count() as f64;
        let equal = x.iter().filter(|&&y| y == v).count() as f64;
        less + (equal + 1.0) / 2.0
    };
    let w: f64 = x[..k].iter().map(|&v| rank(v)).sum();
    let (k, n) = (k as f64, n as f64);
    let mu = k * (n + 1.0) / 2.0;
    let var = k * (n - k) * (n + 1.0) / 12.0;
    (w - mu).abs() / var.sqrt()
}
