use std::cmp::Ordering;

use super::InconsistencyMatrix;
use crate::Scalar;

/// Labels ordered by descending anomaly score, ties broken by label.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyRanking<S = f64> {
    entries: Vec<(String, S)>,
}

impl<S: Scalar> AnomalyRanking<S> {
    pub fn from_scores(scores: Vec<(String, S)>) -> Self {
        let mut entries = scores;
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
        Self { entries }
    }

    pub fn entries(&self) -> &[(String, S)] {
        &self.entries
    }

    pub fn top(&self, k: usize) -> &[(String, S)] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn score(&self, label: &str) -> Option<S> {
        self.entries.iter().find(|e| e.0 == label).map(|e| e.1)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// `label,score` table in rank order.
    pub fn to_text(&self, delimiter: char) -> String {
        let mut s = format!("label{delimiter}score\n");
        for (l, v) in &self.entries {
            s.push_str(&format!("{l}{delimiter}{v}\n"));
        }
        s
    }
}

/// `a_j = Σ_i |INC_ij|` for every label.
pub fn anomaly_scores<S: Scalar>(inc: &InconsistencyMatrix<S>) -> AnomalyRanking<S> {
    let m = inc.matrix();
    let scores = m
        .labels()
        .iter()
        .enumerate()
        .map(|(j, l)| (l.clone(), (0..m.len()).map(|i| m.get(i, j).abs()).sum()))
        .collect();
    AnomalyRanking::from_scores(scores)
}
