use serde::{Deserialize, Serialize};

use super::StructureError;
use crate::matrix::{DistanceMatrix, LabeledMatrix};
use crate::Scalar;

/// `1 - D / max(D)`, entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<S = f64> {
    name: String,
    matrix: LabeledMatrix<S>,
}

impl<S: Scalar> AffinityMatrix<S> {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &LabeledMatrix<S> {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        self.matrix.labels()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.matrix.get(i, j)
    }

    /// All ones: the limit of identical instruments, used when a distance
    /// matrix has no positive entry.
    pub fn uniform(labels: Vec<String>) -> Self {
        Self { name: String::new(), matrix: LabeledMatrix::from_fn(labels, |_, _| S::one()) }
    }
}

pub fn affinity<S: Scalar>(d: &DistanceMatrix<S>) -> Result<AffinityMatrix<S>, StructureError> {
    let max = d.matrix().max_entry();
    if max.is_nan() || max <= S::zero() {
        return Err(StructureError::DegenerateDistance);
    }
    Ok(AffinityMatrix { name: String::new(), matrix: d.matrix().map(|v| S::one() - v / max) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InconsistencyKind {
    /// Extremity affinity minus break affinity, same window and series.
    Behaviour,
    /// Earlier-window affinity minus later-window affinity, same kind.
    Time,
}

/// Difference of two affinity matrices, entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InconsistencyMatrix<S = f64> {
    kind: InconsistencyKind,
    minuend: String,
    subtrahend: String,
    matrix: LabeledMatrix<S>,
}

impl<S: Scalar> InconsistencyMatrix<S> {
    pub fn kind(&self) -> InconsistencyKind {
        self.kind
    }

    /// Names of the affinity matrices as `(left, right)` in `left - right`.
    pub fn provenance(&self) -> (&str, &str) {
        (&self.minuend, &self.subtrahend)
    }

    pub fn matrix(&self) -> &LabeledMatrix<S> {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        self.matrix.labels()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.matrix.get(i, j)
    }

    /// Same provenance, entries replaced (used by permutation checks).
    pub fn from_matrix(kind: InconsistencyKind, matrix: LabeledMatrix<S>) -> Self {
        Self { kind, minuend: String::new(), subtrahend: String::new(), matrix }
    }
}

fn difference<S: Scalar>(
    kind: InconsistencyKind,
    left: &AffinityMatrix<S>,
    right: &AffinityMatrix<S>,
) -> Result<InconsistencyMatrix<S>, StructureError> {
    if left.labels() != right.labels() {
        return Err(StructureError::LabelMismatch(left.labels().to_vec(), right.labels().to_vec()));
    }
    let matrix = LabeledMatrix::from_fn(left.labels().to_vec(), |i, j| left.get(i, j) - right.get(i, j));
    Ok(InconsistencyMatrix { kind, minuend: left.name.clone(), subtrahend: right.name.clone(), matrix })
}

/// `A^E - A^B` for one window and series kind.
pub fn behaviour_inconsistency<S: Scalar>(
    a_extreme: &AffinityMatrix<S>,
    a_breaks: &AffinityMatrix<S>,
) -> Result<InconsistencyMatrix<S>, StructureError> {
    difference(InconsistencyKind::Behaviour, a_extreme, a_breaks)
}

/// `A_pre - A_post` for one behaviour and series kind.
pub fn time_inconsistency<S: Scalar>(
    a_pre: &AffinityMatrix<S>,
    a_post: &AffinityMatrix<S>,
) -> Result<InconsistencyMatrix<S>, StructureError> {
    difference(InconsistencyKind::Time, a_pre, a_post)
}
