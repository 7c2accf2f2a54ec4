//! Linear rating prediction over latent class assignments.
//!
//! A review `(u, p)` is represented by `theta_u[u] ‖ theta_p[p] ‖ 1`; an
//! affine model over that vector is fitted by closed-form ridge regression.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::em::ModelParams;
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::Float;

/// Lowest and highest rating.
pub const RATING_RANGE: (f64, f64) = (1.0, 5.0);

/// Default ridge strength on the non-bias weights.
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;

/// `theta_u[u] ‖ theta_p[p] ‖ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<F>(pub Vec<F>);

impl<F: Float> FeatureVector<F> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[F] {
        &self.0
    }
}

pub fn build_features<F: Float>(
    u: usize,
    p: usize,
    params: &ModelParams<F>,
) -> Result<FeatureVector<F>> {
    if u >= params.n_users() || p >= params.n_products() {
        return Err(Error::OutOfRange(format!("user {u} / product {p}")));
    }
    let mut v = Vec::with_capacity(params.k() + params.l() + 1);
    v.extend_from_slice(params.theta_u(u));
    v.extend_from_slice(params.theta_p(p));
    v.push(F::one());
    Ok(FeatureVector(v))
}

/// Feature vectors and ratings of the given corpus entries.
pub fn rating_examples<F: Float>(
    corpus: &Corpus,
    entries: &[usize],
    params: &ModelParams<F>,
) -> Result<Vec<(FeatureVector<F>, F)>> {
    entries
        .iter()
        .map(|&i| {
            let e = &corpus.entries()[i];
            Ok((build_features(e.user, e.product, params)?, F::of(e.rating)))
        })
        .collect()
}

/// Affine rating predictor. The last weight multiplies the constant feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingModel<F> {
    pub weights: Vec<F>,
    pub ridge_lambda: F,
    /// Clip predictions to [`RATING_RANGE`].
    pub clamp: bool,
}

impl<F: Float> RatingModel<F> {
    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn predict(&self, x: &FeatureVector<F>) -> Result<F> {
        if x.len() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "{} features for a model with {} weights",
                x.len(),
                self.weights.len()
            )));
        }
        let raw: F = self
            .weights
            .iter()
            .zip(x.values())
            .map(|(&w, &v)| w * v)
            .sum();
        Ok(if self.clamp {
            raw.max(F::of(RATING_RANGE.0)).min(F::of(RATING_RANGE.1))
        } else {
            raw
        })
    }
}

pub fn predict<F: Float>(model: &RatingModel<F>, x: &FeatureVector<F>) -> Result<F> {
    model.predict(x)
}

/// Minimizes `Σ (wᵀx - r)² + λ ‖w_without_bias‖²` through the normal equations.
///
/// The last feature is taken to be the bias and is not penalized.
pub fn fit_ridge<F: Float>(
    examples: &[(FeatureVector<F>, F)],
    lambda: F,
) -> Result<RatingModel<F>> {
    let d = examples
        .first()
        .map(|(x, _)| x.len())
        .ok_or_else(|| Error::Empty("ridge regression needs at least one example".into()))?;
    if lambda < F::zero() || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge lambda must be nonnegative, got {lambda}"
        )));
    }
    let mut gram = vec![F::zero(); d * d];
    let mut rhs = vec![F::zero(); d];
    for (x, r) in examples {
        if x.len() != d {
            return Err(Error::Dimension("examples differ in feature count".into()));
        }
        let x = x.values();
        for i in 0..d {
            rhs[i] += x[i] * *r;
            for j in 0..=i {
                gram[i * d + j] += x[i] * x[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram[j * d + i] = gram[i * d + j];
        }
        if i + 1 < d {
            gram[i * d + i] += lambda;
        }
    }
    let weights = cholesky_solve(&gram, &rhs).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!(
            "{msg}; the design is rank deficient, use a positive ridge lambda"
        )),
        other => other,
    })?;
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical("non-finite regression weights".into()));
    }
    Ok(RatingModel {
        weights,
        ridge_lambda: lambda,
        clamp: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub mse: f64,
    pub count: usize,
    /// `prediction - rating` per example.
    pub residuals: Vec<f64>,
}

/// Mean squared error of `model` over `examples`.
pub fn evaluate_mse<F: Float>(
    model: &RatingModel<F>,
    examples: &[(FeatureVector<F>, F)],
) -> Result<EvalResult> {
    if examples.is_empty() {
        return Err(Error::Empty("MSE over an empty set".into()));
    }
    let residuals = examples
        .iter()
        .map(|(x, r)| Ok((model.predict(x)? - *r).as_f64()))
        .collect::<Result<Vec<f64>>>()?;
    let mse = residuals.iter().map(|e| e * e).sum::<f64>() / residuals.len() as f64;
    Ok(EvalResult {
        mse,
        count: residuals.len(),
        residuals,
    })
}

/// Predicts the mean training rating everywhere.
pub fn baseline_global_mean<F: Float>(
    examples: &[(FeatureVector<F>, F)],
) -> Result<RatingModel<F>> {
    let d = examples
        .first()
        .map(|(x, _)| x.len())
        .ok_or_else(|| Error::Empty("baseline needs at least one example".into()))?;
    let mean = examples.iter().map(|(_, r)| *r).sum::<F>() / F::of_count(examples.len());
    let mut weights = vec![F::zero(); d];
    weights[d - 1] = mean;
    Ok(RatingModel {
        weights,
        ridge_lambda: F::zero(),
        clamp: false,
    })
}
