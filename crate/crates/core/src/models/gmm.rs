//! Diagonal-covariance Gaussian mixture models trained with
//! expectation-maximization, used to model male and female voice feature
//! distributions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio_io::Gender;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

use super::Standardization;

/// A mixture of diagonal Gaussians over standardized features.
///
/// Component parameters live in the standardized space; log-likelihoods
/// reported by [`gmm_loglik`] are corrected back to the original feature
/// space, so models with different standardizations are comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub standardization: Standardization,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.standardization.dim()
    }
}

/// Knobs for [`gmm_train_detailed`].
#[derive(Debug, Clone, Copy)]
pub struct GmmTrainOptions {
    pub max_iter: usize,
    /// Stop once the gain in mean log-likelihood falls below this.
    pub tol: f64,
    /// Lower bound on each variance, in standardized space.
    pub variance_floor: f64,
}

impl Default for GmmTrainOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            variance_floor: 1e-4,
        }
    }
}

/// A trained model plus its optimization trace.
#[derive(Debug, Clone)]
pub struct GmmTraining {
    pub model: GmmModel,
    /// Mean log-likelihood after each E-step; non-decreasing up to
    /// rounding. The last entry equals `gmm_loglik` of the returned
    /// model on the training data.
    pub loglik_history: Vec<f64>,
}

/// log of the summed exponentials, stable against large magnitudes.
fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log density of one standardized vector under one component.
fn component_log_density(x: &[f64], mean: &[f64], variance: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((&xi, &mi), &vi) in x.iter().zip(mean).zip(variance) {
        let diff = xi - mi;
        acc += (2.0 * std::f64::consts::PI * vi).ln() + diff * diff / vi;
    }
    -0.5 * acc
}

/// Seeded k-means++ choice of initial component means.
fn kmeans_pp_init(data: &[Vec<f64>], components: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(components);
    centers.push(data[rng.random_range(0..data.len())].clone());
    let mut dist2: Vec<f64> = data
        .iter()
        .map(|x| squared_distance(x, &centers[0]))
        .collect();
    while centers.len() < components {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = data.len() - 1;
            for (i, &d) in dist2.iter().enumerate() {
                if u < d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        } else {
            rng.random_range(0..data.len())
        };
        centers.push(data[pick].clone());
        for (d, x) in dist2.iter_mut().zip(data) {
            *d = d.min(squared_distance(x, centers.last().unwrap()));
        }
    }
    centers
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Trains a mixture with default options.
pub fn gmm_train(vectors: &[FeatureVector], components: usize, seed: u64) -> Result<GmmModel> {
    Ok(gmm_train_detailed(vectors, components, seed, GmmTrainOptions::default())?.model)
}

/// Trains a mixture of `components` diagonal Gaussians.
///
/// Features are standardized, initial means come from seeded k-means++,
/// weights start uniform and variances at one. EM then alternates until
/// the mean log-likelihood gain drops below `options.tol` or `max_iter`
/// iterations have run. The same seed always yields the same model.
pub fn gmm_train_detailed(
    vectors: &[FeatureVector],
    components: usize,
    seed: u64,
    options: GmmTrainOptions,
) -> Result<GmmTraining> {
    if components == 0 {
        return Err(Error::InvalidComponentCount(components));
    }
    if vectors.len() < components {
        return Err(Error::TooFewVectors {
            got: vectors.len(),
            need: components,
        });
    }

    let rows: Vec<&[f64]> = vectors.iter().map(|v| v.as_slice()).collect();
    let standardization = Standardization::fit(&rows)?;
    let data: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| standardization.apply(row))
        .collect::<Result<_>>()?;
    let n = data.len();
    let dim = standardization.dim();
    let jacobian = standardization.log_jacobian();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = kmeans_pp_init(&data, components, &mut rng);
    let mut variances = vec![vec![1.0; dim]; components];
    let mut weights = vec![1.0 / components as f64; components];

    let mut history = Vec::new();
    let mut resp = vec![vec![0.0; components]; n];
    for _ in 0..options.max_iter {
        // E-step
        let mut total_ll = 0.0;
        let mut log_p = vec![0.0; components];
        for (i, x) in data.iter().enumerate() {
            for m in 0..components {
                log_p[m] = weights[m].max(1e-300).ln()
                    + component_log_density(x, &means[m], &variances[m]);
            }
            let lse = log_sum_exp(&log_p);
            total_ll += lse;
            for m in 0..components {
                resp[i][m] = (log_p[m] - lse).exp();
            }
        }
        history.push(total_ll / n as f64 - jacobian);

        let len = history.len();
        if len >= 2 && history[len - 1] - history[len - 2] < options.tol {
            break;
        }

        // M-step
        for m in 0..components {
            let occupancy: f64 = resp.iter().map(|r| r[m]).sum();
            weights[m] = occupancy / n as f64;
            if occupancy <= 0.0 {
                continue;
            }
            for d in 0..dim {
                means[m][d] = data
                    .iter()
                    .zip(&resp)
                    .map(|(x, r)| r[m] * x[d])
                    .sum::<f64>()
                    / occupancy;
            }
            for d in 0..dim {
                let var = data
                    .iter()
                    .zip(&resp)
                    .map(|(x, r)| r[m] * (x[d] - means[m][d]).powi(2))
                    .sum::<f64>()
                    / occupancy;
                variances[m][d] = var.max(options.variance_floor);
            }
        }
    }

    Ok(GmmTraining {
        model: GmmModel {
            weights,
            means,
            variances,
            standardization,
        },
        loglik_history: history,
    })
}

/// Mean per-vector log-likelihood of `vectors` under `model`, expressed
/// in the original (unstandardized) feature space.
pub fn gmm_loglik(model: &GmmModel, vectors: &[FeatureVector]) -> Result<f64> {
    if vectors.is_empty() {
        return Err(Error::EmptyInput);
    }
    if model.dim() != crate::features::FEATURE_DIM {
        return Err(Error::DimensionMismatch {
            expected: crate::features::FEATURE_DIM,
            got: model.dim(),
        });
    }
    let mut total = 0.0;
    let mut log_p = vec![0.0; model.components()];
    for v in vectors {
        let x = model.standardization.apply(v.as_slice())?;
        for (m, slot) in log_p.iter_mut().enumerate() {
            *slot = model.weights[m].max(1e-300).ln()
                + component_log_density(&x, &model.means[m], &model.variances[m]);
        }
        total += log_sum_exp(&log_p);
    }
    Ok(total / vectors.len() as f64 - model.standardization.log_jacobian())
}

/// Assigns the gender whose model gives the higher mean log-likelihood;
/// an exact tie goes to Female.
pub fn classify_gender(
    male: &GmmModel,
    female: &GmmModel,
    vectors: &[FeatureVector],
) -> Result<Gender> {
    let ll_male = gmm_loglik(male, vectors)?;
    let ll_female = gmm_loglik(female, vectors)?;
    if ll_male > ll_female {
        Ok(Gender::Male)
    } else {
        Ok(Gender::Female)
    }
}
