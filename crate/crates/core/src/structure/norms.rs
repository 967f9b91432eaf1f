use chrono::NaiveDate;

use crate::market_data::Panel;
use crate::matrix::LabeledMatrix;
use crate::Scalar;

/// One nonnegative value per panel date.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl NormSeries {
    pub fn to_text(&self, header: &str, delimiter: char) -> String {
        let mut s = format!("date{delimiter}{header}\n");
        for (d, v) in self.dates.iter().zip(&self.values) {
            s.push_str(&format!("{d}{delimiter}{v}\n"));
        }
        s
    }
}

/// `sqrt(Σ v_i^2)`.
pub fn euclidean_norm<S: Scalar>(v: impl IntoIterator<Item = S>) -> S {
    v.into_iter().map(|x| x * x).sum::<S>().sqrt()
}

/// Euclidean norm of the cross-section on every panel date.
pub fn frobenius_vector_series(panel: &Panel) -> NormSeries {
    NormSeries {
        dates: panel.dates().to_vec(),
        values: (0..panel.n_dates()).map(|t| euclidean_norm(panel.column(t))).collect(),
    }
}

/// Entrywise Euclidean norm `(Σ_ij d_ij^2)^(1/2)`.
pub fn frobenius_matrix<S: Scalar>(m: &LabeledMatrix<S>) -> S {
    euclidean_norm(m.entries().iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::SeriesKind;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn vector_norm_examples() {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let p = Panel::new(SeriesKind::Other, labels(2), vec![d], vec![vec![3.0], vec![4.0]]).unwrap();
        assert_eq!(frobenius_vector_series(&p).values, vec![5.0]);
        let z = Panel::new(SeriesKind::Other, labels(3), vec![d], vec![vec![0.0]; 3]).unwrap();
        assert_eq!(frobenius_vector_series(&z).values, vec![0.0]);
        assert_eq!(euclidean_norm(vec![1.0f64; 7]), 7f64.sqrt());
    }

    #[test]
    fn matrix_norm_examples() {
        assert_eq!(frobenius_matrix(&LabeledMatrix::<f64>::zeros(labels(4))), 0.0);
        assert_eq!(frobenius_matrix(&LabeledMatrix::from_fn(labels(2), |_, _| 1.0f64)), 2.0);
        let id = LabeledMatrix::from_fn(labels(3), |i, j| if i == j { 1.0f64 } else { 0.0 });
        assert_eq!(frobenius_matrix(&id), 3f64.sqrt());
    }
}
