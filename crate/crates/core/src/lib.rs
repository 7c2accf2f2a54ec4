//! Topographic latent class model of user reviews.
//!
//! Users and products each get a set of latent classes laid out on a 2-D
//! grid. A Gaussian channel between neighbouring classes ties the grid
//! topology into a bag-of-words likelihood, which is fitted by EM from a
//! self-organizing map initialization. The fitted class memberships serve as
//! interpretable features for a linear rating predictor.
//!
//! All numeric code is generic over [`Float`]; `f64` aliases are provided at
//! the crate root for the common case.

pub mod corpus;
pub mod em;
mod error;
pub mod grid;
pub mod inference;
mod linalg;
pub mod prob;
pub mod rating;
mod scalar;
pub mod som;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use linalg::cholesky_solve;
pub use scalar::Float;

/// Which side of the review relation a class grid describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    User,
    Product,
}

impl Axis {
    pub fn other(self) -> Self {
        match self {
            Axis::User => Axis::Product,
            Axis::Product => Axis::User,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::User => "user",
            Axis::Product => "product",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "user" | "users" => Ok(Axis::User),
            "product" | "products" | "item" | "items" => Ok(Axis::Product),
            other => Err(Error::InvalidArgument(format!("unknown axis {other:?}"))),
        }
    }
}

pub type ChannelNoise = grid::ChannelNoise<f64>;
pub type ModelParams = em::ModelParams<f64>;
pub type ProjectedPriors = em::ProjectedPriors<f64>;
pub type SufficientStats = em::SufficientStats<f64>;
pub type SomMap = som::SomMap<f64>;
pub type InitParams = som::InitParams<f64>;
pub type ClassWordDistribution = inference::ClassWordDistribution<f64>;
pub type OosPosterior = inference::OosPosterior<f64>;
pub type FeatureVector = rating::FeatureVector<f64>;
pub type RatingModel = rating::RatingModel<f64>;

pub type ChannelNoiseF32 = grid::ChannelNoise<f32>;
pub type ModelParamsF32 = em::ModelParams<f32>;
