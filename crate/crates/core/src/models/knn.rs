//! k-nearest-neighbour classification of clips into noisy or quiet,
//! with stratified k-fold cross-validation.
//!
//! Points are the per-clip level summary (mean, standard deviation of
//! the frame SPL series). Distances are Euclidean in standardized space;
//! equidistant training points break ties by their index, and odd `k`
//! keeps the vote itself tie-free.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{NoiseLabel, Standardization};

/// Feature dimension of the noise classifier.
pub const NOISE_DIM: usize = 2;

/// A stored training set with its standardization and vote count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<[f64; NOISE_DIM]>,
    pub labels: Vec<NoiseLabel>,
    pub standardization: Standardization,
}

fn validate_points(points: &[[f64; NOISE_DIM]]) -> Result<()> {
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature);
    }
    Ok(())
}

/// Builds a model from labelled points.
///
/// `k` must be odd and no larger than the training set.
pub fn knn_train(points: &[[f64; NOISE_DIM]], labels: &[NoiseLabel], k: usize) -> Result<KnnModel> {
    if points.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if points.len() != labels.len() {
        return Err(Error::LabelMismatch {
            points: points.len(),
            labels: labels.len(),
        });
    }
    if k.is_multiple_of(2) {
        return Err(Error::EvenK(k));
    }
    if k > points.len() {
        return Err(Error::KTooLarge { k, n: points.len() });
    }
    validate_points(points)?;
    let standardization = Standardization::fit(points)?;
    Ok(KnnModel {
        k,
        points: points.to_vec(),
        labels: labels.to_vec(),
        standardization,
    })
}

/// Classifies one point by majority vote of its `k` nearest training
/// points in standardized space. Distance ties prefer the lower index.
pub fn knn_classify(model: &KnnModel, point: [f64; NOISE_DIM]) -> Result<NoiseLabel> {
    validate_points(&[point])?;
    let query = model.standardization.apply(&point)?;
    let mut order: Vec<(f64, usize)> = model
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let sp = model.standardization.apply(p)?;
            let d2: f64 = sp
                .iter()
                .zip(&query)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            Ok((d2, i))
        })
        .collect::<Result<_>>()?;
    order.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let noisy_votes = order[..model.k]
        .iter()
        .filter(|&&(_, i)| model.labels[i] == NoiseLabel::Noisy)
        .count();
    Ok(if 2 * noisy_votes > model.k {
        NoiseLabel::Noisy
    } else {
        NoiseLabel::Quiet
    })
}

/// Assigns each index to a fold, stratified by label: each class is
/// shuffled (seeded) and dealt round-robin, so per-fold class counts
/// differ by at most one.
pub(crate) fn stratified_folds(labels: &[NoiseLabel], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for class in [NoiseLabel::Noisy, NoiseLabel::Quiet] {
        let mut indices: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(&mut rng);
        for (j, &i) in indices.iter().enumerate() {
            assignment[i] = j % folds;
        }
    }
    assignment
}

/// Held-out prediction for every point under stratified k-fold
/// cross-validation.
///
/// Each fold is held out once; a fresh model (including its own
/// standardization) is trained on the remainder and predicts the
/// held-out points. The same seed always produces the same folds and
/// therefore the same predictions.
pub fn cross_validate_predictions(
    points: &[[f64; NOISE_DIM]],
    labels: &[NoiseLabel],
    folds: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<NoiseLabel>> {
    if points.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if points.len() != labels.len() {
        return Err(Error::LabelMismatch {
            points: points.len(),
            labels: labels.len(),
        });
    }
    if folds < 2 {
        return Err(Error::InvalidFoldCount(folds));
    }
    if folds > points.len() {
        return Err(Error::TooManyFolds {
            folds,
            n: points.len(),
        });
    }
    let assignment = stratified_folds(labels, folds, seed);
    let mut predictions = vec![NoiseLabel::Quiet; points.len()];
    for fold in 0..folds {
        let mut train_points = Vec::new();
        let mut train_labels = Vec::new();
        for (i, &p) in points.iter().enumerate() {
            if assignment[i] != fold {
                train_points.push(p);
                train_labels.push(labels[i]);
            }
        }
        let model = knn_train(&train_points, &train_labels, k)?;
        for (i, &p) in points.iter().enumerate() {
            if assignment[i] == fold {
                predictions[i] = knn_classify(&model, p)?;
            }
        }
    }
    Ok(predictions)
}

/// Stratified k-fold cross-validation error rate in `[0, 1]`.
pub fn cross_validate(
    points: &[[f64; NOISE_DIM]],
    labels: &[NoiseLabel],
    folds: usize,
    k: usize,
    seed: u64,
) -> Result<f64> {
    let predictions = cross_validate_predictions(points, labels, folds, k, seed)?;
    let errors = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p != l)
        .count();
    Ok(errors as f64 / points.len() as f64)
}
