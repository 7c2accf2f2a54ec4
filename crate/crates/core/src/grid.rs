//! Latent class grids and the channel-noise transition matrices that give
//! the classes their topology.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::sample_categorical;
use crate::Float;

/// Row-major lattice of `rows × cols` latent classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    rows: usize,
    cols: usize,
}

impl GridLayout {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(row, col)` of a class index.
    pub fn coords(&self, class: usize) -> (usize, usize) {
        (class / self.cols, class % self.cols)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Squared Euclidean distance between two classes on the unit lattice.
    pub fn sq_distance(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb).pow(2) + ca.abs_diff(cb).pow(2)
    }

    /// Whether two distinct classes share an edge (4-neighbourhood).
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.sq_distance(a, b) == 1
    }
}

pub fn make_grid(rows: usize, cols: usize) -> Result<GridLayout> {
    GridLayout::new(rows, cols)
}

/// Class-transition probabilities `P(y | z)` over a grid.
///
/// `get(z, y)` is a Gaussian of the lattice distance between `z` and `y`,
/// normalized over all `y`; every row is a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelNoise<F> {
    grid: GridLayout,
    sigma: F,
    matrix: Vec<F>,
}

impl<F: Float> ChannelNoise<F> {
    pub fn new(grid: GridLayout, sigma: F) -> Result<Self> {
        if !(sigma > F::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "channel noise sigma must be positive, got {sigma}"
            )));
        }
        let c = grid.len();
        let two_var = F::of(2.0) * sigma * sigma;
        let mut matrix = vec![F::zero(); c * c];
        for z in 0..c {
            let row = &mut matrix[z * c..(z + 1) * c];
            // the diagonal has distance 0, so the largest term is exp(0) = 1
            for (y, v) in row.iter_mut().enumerate() {
                *v = (-F::of_count(grid.sq_distance(z, y)) / two_var).exp();
            }
            let norm: F = row.iter().copied().sum();
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        Ok(Self {
            grid,
            sigma,
            matrix,
        })
    }

    pub fn grid(&self) -> GridLayout {
        self.grid
    }

    pub fn sigma(&self) -> F {
        self.sigma
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    /// `P(y | z)`.
    #[inline]
    pub fn get(&self, z: usize, y: usize) -> F {
        self.matrix[z * self.size() + y]
    }

    pub fn row(&self, z: usize) -> &[F] {
        let c = self.size();
        &self.matrix[z * c..(z + 1) * c]
    }

    /// Row-major `C × C` matrix.
    pub fn as_slice(&self) -> &[F] {
        &self.matrix
    }

    /// Draws a corrupted class for `class`.
    pub fn sample<R: Rng + ?Sized>(&self, class: usize, rng: &mut R) -> usize {
        sample_categorical(self.row(class), rng)
    }
}

pub fn channel_noise<F: Float>(grid: GridLayout, sigma: F) -> Result<ChannelNoise<F>> {
    ChannelNoise::new(grid, sigma)
}

pub fn sample_corrupted<F: Float, R: Rng + ?Sized>(
    class: usize,
    noise: &ChannelNoise<F>,
    rng: &mut R,
) -> usize {
    noise.sample(class, rng)
}
