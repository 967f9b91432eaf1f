//! Tail-restricted empirical measures and their L1-Wasserstein distances.
//!
//! A two-sided restriction keeps the `k = floor(q n)` smallest and `k` largest
//! observations, each carrying weight `q / k`, so the measure has total mass
//! `2q`. An upper restriction keeps the `floor(q n)` largest observations with
//! total mass `q`. With the default fractions both kinds have mass 0.1, which
//! makes distances between return tails and between variance tails comparable.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::Panel;
use crate::matrix::DistanceMatrix;
use crate::Scalar;

pub const DEFAULT_TWO_SIDED_FRACTION: f64 = 0.05;
pub const DEFAULT_UPPER_FRACTION: f64 = 0.10;

/// Largest allowed disagreement between the masses of two measures.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TailError {
    #[error("{ticker}: {n} observations leave no tail at fraction {fraction} (need at least {needed})")]
    InsufficientSample { ticker: String, n: usize, fraction: f64, needed: usize },
    #[error("tail fraction {0} outside (0, 0.5)")]
    InvalidFraction(f64),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("measures have different total mass ({0} vs {1})")]
    MassMismatch(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    /// Both extremes, used for returns.
    TwoSided,
    /// Upper extreme only, used for nonnegative variance series.
    Upper,
}

impl TailKind {
    pub fn default_fraction(self) -> f64 {
        match self {
            TailKind::TwoSided => DEFAULT_TWO_SIDED_FRACTION,
            TailKind::Upper => DEFAULT_UPPER_FRACTION,
        }
    }
}

/// Finite weighted atom set, atoms sorted ascending by location.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedMeasure<S = f64> {
    atoms: Vec<(S, S)>,
    total_mass: S,
    kind: TailKind,
}

impl<S: Scalar> RestrictedMeasure<S> {
    /// Builds a measure from arbitrary `(location, weight)` atoms. Atoms are
    /// sorted; the total mass is the sum of weights.
    pub fn from_atoms(mut atoms: Vec<(S, S)>, kind: TailKind) -> Result<Self, TailError> {
        if atoms.iter().any(|(x, w)| !x.is_finite() || !w.is_finite() || *w <= S::zero()) {
            return Err(TailError::NonFinite);
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let total_mass = atoms.iter().map(|a| a.1).sum();
        Ok(Self { atoms, total_mass, kind })
    }

    pub fn atoms(&self) -> &[(S, S)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> S {
        self.total_mass
    }

    pub fn kind(&self) -> TailKind {
        self.kind
    }

    /// Two-column `location,weight` table.
    pub fn write_text<W: Write>(&self, mut out: W, delimiter: char) -> std::io::Result<()> {
        writeln!(out, "location{delimiter}weight")?;
        for (x, w) in &self.atoms {
            writeln!(out, "{x}{delimiter}{w}")?;
        }
        Ok(())
    }
}

fn tail_count(n: usize, fraction: f64) -> usize {
    // Guards against q*n landing a hair under an integer.
    (fraction * n as f64 + 1e-9).floor() as usize
}

fn sorted<S: Scalar>(values: &[S]) -> Result<Vec<S>, TailError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(TailError::NonFinite);
    }
    let mut v = values.to_vec();
    // Stable: equal values keep their original order.
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(v)
}

fn check_fraction(q: f64) -> Result<(), TailError> {
    if q > 0.0 && q < 0.5 {
        Ok(())
    } else {
        Err(TailError::InvalidFraction(q))
    }
}

fn insufficient(n: usize, q: f64) -> TailError {
    TailError::InsufficientSample { ticker: String::new(), n, fraction: q, needed: (1.0 / q).ceil() as usize }
}

/// Keeps the `floor(q n)` smallest and largest values, total mass `2q`.
pub fn restrict_two_sided<S: Scalar>(values: &[S], q: f64) -> Result<RestrictedMeasure<S>, TailError> {
    check_fraction(q)?;
    let k = tail_count(values.len(), q);
    if k == 0 {
        return Err(insufficient(values.len(), q));
    }
    let v = sorted(values)?;
    let qs = S::lit(q);
    let w = qs / S::from_usize_lossy(k);
    let atoms = v[..k].iter().chain(&v[v.len() - k..]).map(|&x| (x, w)).collect();
    Ok(RestrictedMeasure { atoms, total_mass: qs + qs, kind: TailKind::TwoSided })
}

/// Keeps the `floor(q n)` largest values, total mass `q`.
pub fn restrict_upper<S: Scalar>(values: &[S], q: f64) -> Result<RestrictedMeasure<S>, TailError> {
    check_fraction(q)?;
    let m = tail_count(values.len(), q);
    if m == 0 {
        return Err(insufficient(values.len(), q));
    }
    let v = sorted(values)?;
    let qs = S::lit(q);
    let w = qs / S::from_usize_lossy(m);
    let atoms = v[v.len() - m..].iter().map(|&x| (x, w)).collect();
    Ok(RestrictedMeasure { atoms, total_mass: qs, kind: TailKind::Upper })
}

pub fn restrict<S: Scalar>(values: &[S], kind: TailKind, q: f64) -> Result<RestrictedMeasure<S>, TailError> {
    match kind {
        TailKind::TwoSided => restrict_two_sided(values, q),
        TailKind::Upper => restrict_upper(values, q),
    }
}

/// L1-Wasserstein distance between two measures of equal total mass.
///
/// Walks both generalized quantile functions in step, so the result is
/// `∫ |Q_a(p) - Q_b(p)| dp` over `[0, mass]`, exact for discrete measures.
pub fn wasserstein1<S: Scalar>(a: &RestrictedMeasure<S>, b: &RestrictedMeasure<S>) -> Result<S, TailError> {
    let (ma, mb) = (a.total_mass, b.total_mass);
    if (ma - mb).abs() >= S::lit(MASS_TOLERANCE) {
        return Err(TailError::MassMismatch(ma.to_f64().unwrap_or(f64::NAN), mb.to_f64().unwrap_or(f64::NAN)));
    }
    let (xa, xb) = (&a.atoms, &b.atoms);
    if xa.is_empty() || xb.is_empty() {
        return Ok(S::zero());
    }
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (xa[0].1, xb[0].1);
    let mut acc = S::zero();
    loop {
        let gap = (xa[i].0 - xb[j].0).abs();
        match ra.partial_cmp(&rb).unwrap_or(Ordering::Equal) {
            Ordering::Less => {
                acc = acc + ra * gap;
                rb = rb - ra;
                i += 1;
                if i == xa.len() {
                    break;
                }
                ra = xa[i].1;
            }
            Ordering::Greater => {
                acc = acc + rb * gap;
                ra = ra - rb;
                j += 1;
                if j == xb.len() {
                    break;
                }
                rb = xb[j].1;
            }
            Ordering::Equal => {
                acc = acc + ra * gap;
                i += 1;
                j += 1;
                if i == xa.len() || j == xb.len() {
                    break;
                }
                ra = xa[i].1;
                rb = xb[j].1;
            }
        }
    }
    Ok(acc)
}

/// Mean of the normalized tail distribution, `Σ w x / mass`.
pub fn restricted_mean<S: Scalar>(m: &RestrictedMeasure<S>) -> S {
    m.atoms.iter().map(|&(x, w)| w * x).sum::<S>() / m.total_mass
}

/// Restricts each row of `rows` and assembles pairwise Wasserstein distances.
pub fn extremity_distances<S: Scalar>(
    labels: &[String],
    rows: &[Vec<S>],
    kind: TailKind,
    q: f64,
) -> Result<DistanceMatrix<S>, TailError> {
    let measures = restrict_rows(labels, rows, kind, q)?;
    DistanceMatrix::from_pairs(labels.to_vec(), |i, j| wasserstein1(&measures[i], &measures[j]))
}

/// Restricted measure of every row, errors naming the offending label.
pub fn restrict_rows<S: Scalar>(
    labels: &[String],
    rows: &[Vec<S>],
    kind: TailKind,
    q: f64,
) -> Result<Vec<RestrictedMeasure<S>>, TailError> {
    labels
        .iter()
        .zip(rows)
        .map(|(label, row)| {
            restrict(row, kind, q).map_err(|e| match e {
                TailError::InsufficientSample { n, fraction, needed, .. } => {
                    TailError::InsufficientSample { ticker: label.clone(), n, fraction, needed }
                }
                other => other,
            })
        })
        .collect()
}

/// `D^E` over the instruments of a panel.
pub fn extremity_distance_matrix(panel: &Panel, kind: TailKind, q: f64) -> Result<DistanceMatrix<f64>, TailError> {
    extremity_distances(panel.tickers(), panel.rows(), kind, q)
}
