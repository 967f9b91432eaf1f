//! Agglomerative hierarchical clustering.
//!
//! Clusters are numbered like SciPy linkage output: leaves `0..n`, the
//! cluster created by merge `m` gets id `n + m`. Each step merges the closest
//! pair of active clusters; ties go to the pair with the smallest ids in
//! lexicographic order.

use serde::{Deserialize, Serialize};

use super::{AffinityMatrix, InconsistencyMatrix, StructureError};
use crate::matrix::{DistanceMatrix, LabeledMatrix};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

/// Source of a clustering together with its conversion to dissimilarity.
#[derive(Debug, Clone, Copy)]
pub enum ClusterInput<'a, S> {
    /// Used as is.
    Distance(&'a DistanceMatrix<S>),
    /// Converted with `1 - A`.
    Affinity(&'a AffinityMatrix<S>),
    /// Converted with `max(INC) - INC`, so strongly positive pairs merge first.
    Inconsistency(&'a InconsistencyMatrix<S>),
}

impl<S: Scalar> ClusterInput<'_, S> {
    pub fn conversion(&self) -> &'static str {
        match self {
            ClusterInput::Distance(_) => "distance",
            ClusterInput::Affinity(_) => "1 - affinity",
            ClusterInput::Inconsistency(_) => "max(inconsistency) - inconsistency",
        }
    }

    pub fn dissimilarity(&self) -> LabeledMatrix<S> {
        match self {
            ClusterInput::Distance(d) => d.matrix().clone(),
            ClusterInput::Affinity(a) => a.matrix().map(|v| S::one() - v),
            ClusterInput::Inconsistency(inc) => {
                let max = inc.matrix().max_entry();
                inc.matrix().map(|v| max - v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge<S> {
    /// Smaller of the two cluster ids.
    pub a: usize,
    pub b: usize,
    pub height: S,
    /// Leaves in the merged cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct Dendrogram<S = f64> {
    pub labels: Vec<String>,
    pub linkage: Linkage,
    /// How the input matrix was turned into dissimilarities.
    pub dissimilarity: String,
    pub merges: Vec<Merge<S>>,
}

pub fn hcluster<S: Scalar>(input: ClusterInput<'_, S>, linkage: Linkage) -> Result<Dendrogram<S>, StructureError> {
    let mut d = hcluster_dissimilarity(&input.dissimilarity(), linkage)?;
    d.dissimilarity = input.conversion().to_string();
    Ok(d)
}

/// Clusters a symmetric dissimilarity matrix (the diagonal is ignored).
pub fn hcluster_dissimilarity<S: Scalar>(
    dissim: &LabeledMatrix<S>,
    linkage: Linkage,
) -> Result<Dendrogram<S>, StructureError> {
    let n = dissim.len();
    if n < 2 {
        return Err(StructureError::TooFewLabels(n));
    }
    let total = 2 * n - 1;
    // Cluster-to-cluster dissimilarities indexed by cluster id.
    let mut dist = vec![S::zero(); total * total];
    for i in 0..n {
        for j in 0..n {
            dist[i * total + j] = dissim.get(i, j);
        }
    }
    let mut size = vec![0usize; total];
    size[..n].fill(1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(usize, usize, S)> = None;
        for (p, &a) in active.iter().enumerate() {
            for &b in &active[p + 1..] {
                let v = dist[a * total + b];
                if best.is_none_or(|(_, _, bv)| v < bv) {
                    best = Some((a, b, v));
                }
            }
        }
        let (a, b, height) = best.expect("at least two active clusters");
        let new = n + step;
        size[new] = size[a] + size[b];
        active.retain(|&c| c != a && c != b);
        let (sa, sb) = (S::from_usize_lossy(size[a]), S::from_usize_lossy(size[b]));
        for &c in &active {
            let (da, db) = (dist[a * total + c], dist[b * total + c]);
            let v = match linkage {
                Linkage::Average => (sa * da + sb * db) / (sa + sb),
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
            };
            dist[new * total + c] = v;
            dist[c * total + new] = v;
        }
        active.push(new);
        merges.push(Merge { a, b, height, size: size[new] });
    }
    Ok(Dendrogram { labels: dissim.labels().to_vec(), linkage, dissimilarity: "dissimilarity".into(), merges })
}

impl<S: Scalar> Dendrogram<S> {
    pub fn n_leaves(&self) -> usize {
        self.labels.len()
    }

    fn height_of(&self, id: usize) -> S {
        if id < self.n_leaves() {
            S::zero()
        } else {
            self.merges[id - self.n_leaves()].height
        }
    }

    /// Leaf indices under cluster `id`, in left-to-right drawing order.
    pub fn leaves_of(&self, id: usize) -> Vec<usize> {
        let n = self.n_leaves();
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if c < n {
                out.push(c);
            } else {
                let m = &self.merges[c - n];
                stack.push(m.b);
                stack.push(m.a);
            }
        }
        out
    }

    pub fn root(&self) -> usize {
        2 * self.n_leaves() - 2
    }

    /// Leaf sets of the two clusters joined by the final merge, smaller first
    /// (the side with the lower cluster id on equal sizes).
    pub fn root_split(&self) -> (Vec<usize>, Vec<usize>) {
        let last = self.merges.last().expect("at least one merge");
        let mut a = self.leaves_of(last.a);
        let mut b = self.leaves_of(last.b);
        a.sort_unstable();
        b.sort_unstable();
        if b.len() < a.len() {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// For each leaf, the height of the merge that first places it in a
    /// cluster holding a strict majority of all leaves. Leaves that stay
    /// outside the main body until late get the largest values.
    pub fn separation_heights(&self) -> Vec<S> {
        let n = self.n_leaves();
        let mut out = vec![S::zero(); n];
        let mut assigned = vec![false; n];
        for (m, merge) in self.merges.iter().enumerate() {
            if 2 * merge.size > n {
                for leaf in self.leaves_of(n + m) {
                    if !assigned[leaf] {
                        assigned[leaf] = true;
                        out[leaf] = merge.height;
                    }
                }
            }
        }
        out
    }

    /// Cophenetic height between two leaves: height of their lowest common
    /// merge.
    pub fn cophenetic(&self, i: usize, j: usize) -> S {
        if i == j {
            return S::zero();
        }
        let n = self.n_leaves();
        let mut cluster_of: Vec<usize> = (0..n).collect();
        for (m, merge) in self.merges.iter().enumerate() {
            let id = n + m;
            let (ci, cj) = (cluster_of[i], cluster_of[j]);
            let hit_i = ci == merge.a || ci == merge.b;
            let hit_j = cj == merge.a || cj == merge.b;
            if hit_i && hit_j {
                return merge.height;
            }
            if hit_i {
                cluster_of[i] = id;
            }
            if hit_j {
                cluster_of[j] = id;
            }
        }
        unreachable!("every pair meets at the root")
    }

    /// Newick tree with branch lengths equal to height differences.
    pub fn to_newick(&self) -> String {
        let mut s = String::new();
        self.write_newick(self.root(), None, &mut s);
        s.push(';');
        s
    }

    fn write_newick(&self, id: usize, parent_height: Option<S>, out: &mut String) {
        let n = self.n_leaves();
        if id < n {
            out.push_str(&newick_label(&self.labels[id]));
        } else {
            let m = &self.merges[id - n];
            out.push('(');
            self.write_newick(m.a, Some(m.height), out);
            out.push(',');
            self.write_newick(m.b, Some(m.height), out);
            out.push(')');
        }
        if let Some(h) = parent_height {
            out.push_str(&format!(":{}", h - self.height_of(id)));
        }
    }
}

fn newick_label(label: &str) -> String {
    if label.chars().any(|c| "()[]':;,".contains(c) || c.is_whitespace()) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}
