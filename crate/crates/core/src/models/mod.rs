//! Trainable classifiers: a Gaussian mixture model for instructor gender
//! and a k-nearest-neighbour model for clip noise.
//!
//! Both models standardize features to zero mean and unit variance using
//! statistics captured at training time and stored with the model, so a
//! serialized model classifies new data identically wherever it is
//! loaded.

pub mod gmm;
pub mod knn;

pub use gmm::{
    classify_gender, gmm_loglik, gmm_train, gmm_train_detailed, GmmModel, GmmTrainOptions,
    GmmTraining,
};
pub use knn::{cross_validate, cross_validate_predictions, knn_classify, knn_train, KnnModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise verdict for a clip or lecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLabel {
    Noisy,
    Quiet,
}

impl NoiseLabel {
    pub fn parse(label: &str) -> Result<Self> {
        match label {
            "noisy" => Ok(NoiseLabel::Noisy),
            "quiet" => Ok(NoiseLabel::Quiet),
            other => Err(Error::ModelParse(format!("unknown noise label {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseLabel::Noisy => "noisy",
            NoiseLabel::Quiet => "quiet",
        }
    }
}

/// Per-dimension affine map to zero mean and unit variance.
///
/// Scales are population standard deviations floored at 1e-12, so
/// constant dimensions map to zero instead of dividing by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    pub const SCALE_FLOOR: f64 = 1e-12;

    /// Fits means and scales over rows of equal dimension.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let dim = rows[0].as_ref().len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature);
            }
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= n;
        }
        let mut scales = vec![0.0; dim];
        for row in rows {
            for (s, (&v, &m)) in scales.iter_mut().zip(row.as_ref().iter().zip(&means)) {
                *s += (v - m) * (v - m);
            }
        }
        for s in scales.iter_mut() {
            *s = (*s / n).sqrt().max(Self::SCALE_FLOOR);
        }
        Ok(Self { means, scales })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }

    /// `sum_d ln(scale_d)`: the log-volume change of the map, needed to
    /// express standardized-space densities in the original space.
    pub fn log_jacobian(&self) -> f64 {
        self.scales.iter().map(|s| s.ln()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardization_centers_and_scales() {
        let rows = vec![vec![1.0, 10.0], vec![3.0, 10.0]];
        let s = Standardization::fit(&rows).unwrap();
        assert_eq!(s.means, vec![2.0, 10.0]);
        assert_eq!(s.scales[0], 1.0);
        // constant dimension is floored, not divided by zero
        assert_eq!(s.scales[1], Standardization::SCALE_FLOOR);
        assert_eq!(s.apply(&[3.0, 10.0]).unwrap(), vec![1.0, 0.0]);
        assert!(s.apply(&[1.0]).is_err());
    }

    #[test]
    fn standardization_rejects_bad_input() {
        assert!(matches!(
            Standardization::fit::<Vec<f64>>(&[]),
            Err(Error::EmptyTrainingSet)
        ));
        assert!(matches!(
            Standardization::fit(&[vec![1.0], vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Standardization::fit(&[vec![f64::NAN]]),
            Err(Error::NonFiniteFeature)
        ));
    }

    #[test]
    fn noise_labels_round_trip() {
        assert_eq!(NoiseLabel::parse("noisy").unwrap(), NoiseLabel::Noisy);
        assert_eq!(NoiseLabel::parse("quiet").unwrap(), NoiseLabel::Quiet);
        assert!(NoiseLabel::parse("loud").is_err());
        assert_eq!(
            serde_json::to_string(&NoiseLabel::Noisy).unwrap(),
            "\"noisy\""
        );
    }
}
