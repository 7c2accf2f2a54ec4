//! Self-organizing map initialization of the EM parameters.
//!
//! Users and products are clustered separately with an online Kohonen map
//! whose node grid is the latent class grid. Hard node assignments are then
//! softened into class priors, and a Laplace-smoothed word distribution is
//! counted over channel-corrupted assignments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{term_frequency_vectors_over, Corpus, TermFrequencyVector};
use crate::em::ModelParams;
use crate::error::{Error, Result};
use crate::grid::{ChannelNoise, GridLayout};
use crate::{Axis, Float};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SomConfig {
    pub epochs: usize,
    pub learning_rate_start: f64,
    pub learning_rate_end: f64,
    /// Initial neighbourhood radius; `None` means half the larger grid side.
    pub radius_start: Option<f64>,
    pub radius_end: f64,
    /// Codebooks start as uniform noise in `[0, init_scale)`.
    pub init_scale: f64,
    /// L2-normalize term-frequency vectors before training.
    pub normalize: bool,
}

impl Default for SomConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            learning_rate_start: 0.5,
            learning_rate_end: 0.01,
            radius_start: None,
            radius_end: 0.5,
            init_scale: 0.01,
            normalize: true,
        }
    }
}

/// A trained map: one codebook vector per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct SomMap<F> {
    grid: GridLayout,
    dim: usize,
    codebook: Vec<F>,
    config: SomConfig,
    seed: u64,
}

fn sq_dist<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

impl<F: Float> SomMap<F> {
    /// Map with the given codebook, row-major over nodes.
    pub fn from_codebook(grid: GridLayout, dim: usize, codebook: Vec<F>) -> Result<Self> {
        if codebook.len() != grid.len() * dim {
            return Err(Error::Dimension(format!(
                "codebook of length {} for {} nodes of dimension {dim}",
                codebook.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            dim,
            codebook,
            config: SomConfig::default(),
            seed: 0,
        })
    }

    pub fn grid(&self) -> GridLayout {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &SomConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node(&self, i: usize) -> &[F] {
        &self.codebook[i * self.dim..(i + 1) * self.dim]
    }

    /// Best-matching unit: nearest codebook vector, lowest index on ties.
    pub fn assign_bmu(&self, v: &[F]) -> usize {
        let mut best = 0;
        let mut best_d = F::infinity();
        for i in 0..self.grid.len() {
            let d = sq_dist(self.node(i), v);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Mean Euclidean distance of each vector to its best-matching unit.
    pub fn quantization_error(&self, vectors: &[Vec<F>]) -> F {
        if vectors.is_empty() {
            return F::zero();
        }
        let total: F = vectors
            .iter()
            .map(|v| sq_dist(self.node(self.assign_bmu(v)), v).sqrt())
            .sum();
        total / F::of_count(vectors.len())
    }

    fn update(&mut self, x: &[F], lr: F, radius: F) {
        let bmu = self.assign_bmu(x);
        let two_r2 = F::of(2.0) * radius * radius;
        for j in 0..self.grid.len() {
            let h = (-F::of_count(self.grid.sq_distance(bmu, j)) / two_r2).exp();
            let rate = lr * h;
            let dim = self.dim;
            for (w, &xi) in self.codebook[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                *w += rate * (xi - *w);
            }
        }
    }
}

pub fn assign_bmu<F: Float>(som: &SomMap<F>, v: &[F]) -> usize {
    som.assign_bmu(v)
}

/// Trains a map and records the quantization error after every epoch.
pub fn train_som_with_history<F: Float>(
    vectors: &[Vec<F>],
    grid: GridLayout,
    config: &SomConfig,
    seed: u64,
) -> Result<(SomMap<F>, Vec<F>)> {
    let dim = vectors
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Empty("SOM needs at least one input vector".into()))?;
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Dimension(
            "SOM input vectors differ in length".into(),
        ));
    }
    if config.epochs == 0 {
        return Err(Error::InvalidArgument(
            "SOM needs at least one epoch".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codebook = (0..grid.len() * dim)
        .map(|_| F::of(rng.random::<f64>() * config.init_scale))
        .collect();
    let mut som = SomMap {
        grid,
        dim,
        codebook,
        config: *config,
        seed,
    };

    let r0 = config
        .radius_start
        .unwrap_or(grid.rows().max(grid.cols()) as f64 / 2.0)
        .max(config.radius_end);
    let steps = config.epochs * vectors.len();
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut t = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let frac = if steps > 1 {
                t as f64 / (steps - 1) as f64
            } else {
                0.0
            };
            let lr = config.learning_rate_start
                + (config.learning_rate_end - config.learning_rate_start) * frac;
            let radius = r0 + (config.radius_end - r0) * frac;
            som.update(&vectors[i], F::of(lr), F::of(radius));
            t += 1;
        }
        history.push(som.quantization_error(vectors));
    }
    Ok((som, history))
}

/// Online Kohonen training, deterministic given `seed`.
pub fn train_som<F: Float>(
    vectors: &[Vec<F>],
    grid: GridLayout,
    config: &SomConfig,
    seed: u64,
) -> Result<SomMap<F>> {
    train_som_with_history(vectors, grid, config, seed).map(|(som, _)| som)
}

/// Dense SOM inputs from term-frequency vectors, optionally L2-normalized.
pub fn som_inputs<F: Float>(
    tf: &[TermFrequencyVector],
    dim: usize,
    normalize: bool,
) -> Vec<Vec<F>> {
    tf.iter()
        .map(|t| {
            let mut v = vec![F::zero(); dim];
            for &(w, c) in &t.counts {
                v[w] = F::of(c as f64);
            }
            if normalize {
                let n = v.iter().map(|&x| x * x).sum::<F>().sqrt();
                if n > F::zero() {
                    v.iter_mut().for_each(|x| *x /= n);
                }
            }
            v
        })
        .collect()
}

/// Softened hard assignments: the assigned class gets `B` times the mass of
/// every other class, i.e. `A = B / (C - 1 + B)` and `(1 - A) / (C - 1)`.
pub fn soften_assignments<F: Float>(hard: &[usize], classes: usize, b: F) -> Result<Vec<F>> {
    if !(b > F::one()) {
        return Err(Error::InvalidArgument(format!(
            "softening constant must exceed 1, got {b}"
        )));
    }
    if classes == 0 {
        return Err(Error::InvalidArgument("no classes".into()));
    }
    if let Some(&bad) = hard.iter().find(|&&h| h >= classes) {
        return Err(Error::OutOfRange(format!("class {bad} of {classes}")));
    }
    if classes == 1 {
        return Ok(vec![F::one(); hard.len()]);
    }
    let c1 = F::of_count(classes - 1);
    let hit = b / (c1 + b);
    let miss = (F::one() - hit) / c1;
    let mut out = vec![miss; hard.len() * classes];
    for (i, &h) in hard.iter().enumerate() {
        out[i * classes + h] = hit;
    }
    Ok(out)
}

/// Laplace-smoothed word distribution over corrupted class pairs.
///
/// Every user's and every product's class is corrupted once through its
/// channel; tokens of `entries` are then counted by the corrupted pair and
/// `P(w | k', l') = (N(w, k', l') + m) / (m V + Σ_w' N(w', k', l'))`.
/// Output layout is `V × K × L`, like `ModelParams::phi`.
#[allow(clippy::too_many_arguments)]
pub fn init_word_distribution<F: Float, R: Rng + ?Sized>(
    corpus: &Corpus,
    entries: &[usize],
    user_assign: &[usize],
    product_assign: &[usize],
    noise_u: &ChannelNoise<F>,
    noise_p: &ChannelNoise<F>,
    m: F,
    rng: &mut R,
) -> Result<Vec<F>> {
    if !(m > F::zero()) {
        return Err(Error::InvalidArgument(format!(
            "Laplace constant must be positive, got {m}"
        )));
    }
    if user_assign.len() != corpus.num_users() || product_assign.len() != corpus.num_products() {
        return Err(Error::Dimension(
            "assignments do not cover every user and product".into(),
        ));
    }
    let (k, l, v) = (noise_u.size(), noise_p.size(), corpus.vocab_size());
    if user_assign.iter().any(|&a| a >= k) || product_assign.iter().any(|&a| a >= l) {
        return Err(Error::OutOfRange(
            "assignment outside the class grid".into(),
        ));
    }
    let yu: Vec<usize> = user_assign
        .iter()
        .map(|&z| noise_u.sample(z, rng))
        .collect();
    let yp: Vec<usize> = product_assign
        .iter()
        .map(|&z| noise_p.sample(z, rng))
        .collect();

    let kl = k * l;
    let mut counts = vec![0u64; v * kl];
    let mut totals = vec![0u64; kl];
    for &i in entries {
        let e = &corpus.entries()[i];
        let pair = yu[e.user] * l + yp[e.product];
        for &(w, c) in &e.counts {
            counts[w * kl + pair] += c as u64;
            totals[pair] += c as u64;
        }
    }
    let mv = m * F::of_count(v);
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &n)| (F::of(n as f64) + m) / (mv + F::of(totals[i % kl] as f64)))
        .collect())
}

/// Starting point for EM.
#[derive(Debug, Clone, PartialEq)]
pub struct InitParams<F> {
    /// `N × K`.
    pub user_prior: Vec<F>,
    /// `M × L`.
    pub product_prior: Vec<F>,
    /// `V × K × L`.
    pub word_dist: Vec<F>,
}

impl<F: Float> InitParams<F> {
    pub fn into_model(
        self,
        noise_u: ChannelNoise<F>,
        noise_p: ChannelNoise<F>,
    ) -> Result<ModelParams<F>> {
        ModelParams::new(
            self.user_prior,
            self.product_prior,
            self.word_dist,
            noise_u,
            noise_p,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SomInitConfig {
    pub som: SomConfig,
    /// Softening constant `B > 1`.
    pub softening: f64,
    /// Laplace constant `m > 0`.
    pub laplace: f64,
    pub seed: u64,
}

impl Default for SomInitConfig {
    fn default() -> Self {
        Self {
            som: SomConfig::default(),
            softening: 5.0,
            laplace: 1.0,
            seed: 0,
        }
    }
}

fn cluster_axis<F: Float>(
    corpus: &Corpus,
    entries: &[usize],
    axis: Axis,
    grid: GridLayout,
    config: &SomConfig,
    seed: u64,
) -> Result<Vec<usize>> {
    let tf = term_frequency_vectors_over(corpus, entries, axis);
    let inputs: Vec<Vec<F>> = som_inputs(&tf, corpus.vocab_size(), config.normalize);
    let training: Vec<Vec<F>> = tf
        .iter()
        .zip(&inputs)
        .filter(|(t, _)| t.total() > 0)
        .map(|(_, v)| v.clone())
        .collect();
    let som = train_som(&training, grid, config, seed)?;
    Ok(inputs.iter().map(|v| som.assign_bmu(v)).collect())
}

/// SOM clustering of users and products over `entries`, followed by
/// softening and the smoothed word distribution.
pub fn som_initialize<F: Float>(
    corpus: &Corpus,
    entries: &[usize],
    noise_u: &ChannelNoise<F>,
    noise_p: &ChannelNoise<F>,
    config: &SomInitConfig,
) -> Result<InitParams<F>> {
    let (users, products) = rayon::join(
        || {
            cluster_axis::<F>(
                corpus,
                entries,
                Axis::User,
                noise_u.grid(),
                &config.som,
                config.seed,
            )
        },
        || {
            cluster_axis::<F>(
                corpus,
                entries,
                Axis::Product,
                noise_p.grid(),
                &config.som,
                config.seed.wrapping_add(1),
            )
        },
    );
    let (users, products) = (users?, products?);
    let b = F::of(config.softening);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    Ok(InitParams {
        user_prior: soften_assignments(&users, noise_u.size(), b)?,
        product_prior: soften_assignments(&products, noise_p.size(), b)?,
        word_dist: init_word_distribution(
            corpus,
            entries,
            &users,
            &products,
            noise_u,
            noise_p,
            F::of(config.laplace),
            &mut rng,
        )?,
    })
}
