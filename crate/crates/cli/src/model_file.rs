//! On-disk model: one JSON document, tensors as base64 little-endian f64.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use tlcm::em::{EmTrace, ModelParams};
use tlcm::grid::{channel_noise, make_grid};
use tlcm::rating::RatingModel;
use tlcm::Error;

use crate::config::RunConfig;

pub const FORMAT: &str = "tlcm-model";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    /// Base64 of the little-endian f64 values, row-major.
    pub data: String,
}

impl Tensor {
    pub fn encode(shape: &[usize], values: &[f64]) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self {
            shape: shape.to_vec(),
            data: STANDARD.encode(bytes),
        }
    }

    pub fn decode(&self, name: &str) -> tlcm::Result<Vec<f64>> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| Error::InvalidArgument(format!("tensor {name}: {e}")))?;
        let want = self.shape.iter().product::<usize>();
        if bytes.len() != want * 8 {
            return Err(Error::Dimension(format!(
                "tensor {name}: {} bytes for shape {:?}",
                bytes.len(),
                self.shape
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRating {
    pub weights: Tensor,
    pub ridge_lambda: f64,
    pub clamp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub schema_version: u32,
    pub config: RunConfig,
    pub users: Vec<String>,
    pub products: Vec<String>,
    pub vocab: Vec<String>,
    pub user_grid: [usize; 2],
    pub product_grid: [usize; 2],
    pub sigma_u: f64,
    pub sigma_p: f64,
    pub theta_u: Tensor,
    pub theta_p: Tensor,
    pub phi: Tensor,
    pub trace: EmTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<StoredRating>,
}

impl ModelFile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config: RunConfig,
        users: Vec<String>,
        products: Vec<String>,
        vocab: Vec<String>,
        params: &ModelParams<f64>,
        trace: EmTrace,
        rating: Option<&RatingModel<f64>>,
    ) -> Self {
        let (ug, pg) = (params.user_grid(), params.product_grid());
        let (n, m, v, k, l) = (
            params.n_users(),
            params.n_products(),
            params.vocab_size(),
            params.k(),
            params.l(),
        );
        Self {
            format: FORMAT.into(),
            schema_version: SCHEMA_VERSION,
            config,
            users,
            products,
            vocab,
            user_grid: [ug.rows(), ug.cols()],
            product_grid: [pg.rows(), pg.cols()],
            sigma_u: params.noise_u().sigma(),
            sigma_p: params.noise_p().sigma(),
            theta_u: Tensor::encode(&[n, k], params.theta_u_all()),
            theta_p: Tensor::encode(&[m, l], params.theta_p_all()),
            phi: Tensor::encode(&[v, k, l], params.phi_all()),
            trace,
            rating: rating.map(|r| StoredRating {
                weights: Tensor::encode(&[r.weights.len()], &r.weights),
                ridge_lambda: r.ridge_lambda,
                clamp: r.clamp,
            }),
        }
    }

    /// Rebuilds the parameters, checking every shape and normalization.
    pub fn params(&self) -> tlcm::Result<ModelParams<f64>> {
        let nu = channel_noise(
            make_grid(self.user_grid[0], self.user_grid[1])?,
            self.sigma_u,
        )?;
        let np = channel_noise(
            make_grid(self.product_grid[0], self.product_grid[1])?,
            self.sigma_p,
        )?;
        let (k, l) = (nu.size(), np.size());
        let expect = |t: &Tensor, name: &str, shape: [usize; 2]| -> tlcm::Result<()> {
            if t.shape != shape {
                return Err(Error::Dimension(format!(
                    "{name} has shape {:?}, expected {shape:?}",
                    t.shape
                )));
            }
            Ok(())
        };
        expect(&self.theta_u, "theta_u", [self.users.len(), k])?;
        expect(&self.theta_p, "theta_p", [self.products.len(), l])?;
        if self.phi.shape != [self.vocab.len(), k, l] {
            return Err(Error::Dimension(format!(
                "phi has shape {:?}",
                self.phi.shape
            )));
        }
        ModelParams::new(
            self.theta_u.decode("theta_u")?,
            self.theta_p.decode("theta_p")?,
            self.phi.decode("phi")?,
            nu,
            np,
        )
    }

    pub fn rating_model(&self) -> tlcm::Result<Option<RatingModel<f64>>> {
        self.rating
            .as_ref()
            .map(|r| {
                let weights = r.weights.decode("rating weights")?;
                let want = self.config.k() + self.config.l() + 1;
                if weights.len() != want {
                    return Err(Error::Dimension(format!(
                        "{} rating weights, expected {want}",
                        weights.len()
                    )));
                }
                Ok(RatingModel {
                    weights,
                    ridge_lambda: r.ridge_lambda,
                    clamp: r.clamp,
                })
            })
            .transpose()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("model serializes");
        out.push(b'\n');
        out
    }

    pub fn save(&self, path: &Path) -> tlcm::Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> tlcm::Result<Self> {
        let bytes = fs::read(path)?;
        let file: ModelFile = serde_json::from_slice(&bytes)
            .map_err(|e| Error::InvalidArgument(format!("model {}: {e}", path.display())))?;
        if file.format != FORMAT || file.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "model {}: unsupported format {} v{}",
                path.display(),
                file.format,
                file.schema_version
            )));
        }
        if [
            file.user_grid[0] * file.user_grid[1],
            file.product_grid[0] * file.product_grid[1],
        ] != [file.config.k(), file.config.l()]
        {
            return Err(Error::Dimension(
                "model grids disagree with its configuration".into(),
            ));
        }
        Ok(file)
    }
}
