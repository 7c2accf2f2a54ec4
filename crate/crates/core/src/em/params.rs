use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::grid::{ChannelNoise, GridLayout};
use crate::Float;

/// Tolerance used when validating that probability rows sum to one.
pub(crate) fn sum_tolerance<F: Float>() -> F {
    F::epsilon().sqrt() * F::of(0.01)
}

fn check_rows<F: Float>(what: &str, data: &[F], width: usize) -> Result<()> {
    let tol = sum_tolerance::<F>();
    for (i, row) in data.chunks(width).enumerate() {
        if row.iter().any(|v| !v.is_finite() || *v < F::zero()) {
            return Err(Error::Numerical(format!(
                "{what} row {i} has a negative or non-finite entry"
            )));
        }
        let s: F = row.iter().copied().sum();
        if (s - F::one()).abs() > tol {
            return Err(Error::Numerical(format!("{what} row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Parameters of the topographic latent class model.
///
/// * `theta_u`: `N × K`, row `u` is `P(z_u = k | u)`
/// * `theta_p`: `M × L`, row `p` is `P(z_p = l | p)`
/// * `phi`: `V × K × L`, `phi[w][k'][l'] = P(w | y_u = k', y_p = l')`,
///   normalized over `w` for every class pair
///
/// The channel-noise matrices are fixed hyperparameters and never re-estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    n_users: usize,
    n_products: usize,
    vocab_size: usize,
    theta_u: Vec<F>,
    theta_p: Vec<F>,
    phi: Vec<F>,
    noise_u: ChannelNoise<F>,
    noise_p: ChannelNoise<F>,
}

impl<F: Float> ModelParams<F> {
    /// Checks dimensions and normalization of every family.
    pub fn new(
        theta_u: Vec<F>,
        theta_p: Vec<F>,
        phi: Vec<F>,
        noise_u: ChannelNoise<F>,
        noise_p: ChannelNoise<F>,
    ) -> Result<Self> {
        let (k, l) = (noise_u.size(), noise_p.size());
        if theta_u.len() % k != 0 || theta_p.len() % l != 0 || phi.len() % (k * l) != 0 {
            return Err(Error::Dimension(format!(
                "parameter lengths ({}, {}, {}) do not fit K={k}, L={l}",
                theta_u.len(),
                theta_p.len(),
                phi.len()
            )));
        }
        let params = Self {
            n_users: theta_u.len() / k,
            n_products: theta_p.len() / l,
            vocab_size: phi.len() / (k * l),
            theta_u,
            theta_p,
            phi,
            noise_u,
            noise_p,
        };
        if params.vocab_size == 0 {
            return Err(Error::Dimension("empty vocabulary".into()));
        }
        check_rows("theta_u", &params.theta_u, k)?;
        check_rows("theta_p", &params.theta_p, l)?;
        check_rows("phi slice", &params.phi_slices_by_pair(), params.vocab_size)?;
        Ok(params)
    }

    /// Uniform class priors and word distributions.
    pub fn uniform(
        n_users: usize,
        n_products: usize,
        vocab_size: usize,
        noise_u: ChannelNoise<F>,
        noise_p: ChannelNoise<F>,
    ) -> Result<Self> {
        let (k, l) = (noise_u.size(), noise_p.size());
        Self::new(
            vec![F::one() / F::of_count(k); n_users * k],
            vec![F::one() / F::of_count(l); n_products * l],
            vec![F::one() / F::of_count(vocab_size); vocab_size * k * l],
            noise_u,
            noise_p,
        )
    }

    pub(crate) fn from_parts_unchecked(
        theta_u: Vec<F>,
        theta_p: Vec<F>,
        phi: Vec<F>,
        noise_u: ChannelNoise<F>,
        noise_p: ChannelNoise<F>,
    ) -> Self {
        let (k, l) = (noise_u.size(), noise_p.size());
        Self {
            n_users: theta_u.len() / k,
            n_products: theta_p.len() / l,
            vocab_size: phi.len() / (k * l),
            theta_u,
            theta_p,
            phi,
            noise_u,
            noise_p,
        }
    }

    // transposed copy of phi: one contiguous V-vector per (k', l')
    fn phi_slices_by_pair(&self) -> Vec<F> {
        let kl = self.k() * self.l();
        let v = self.vocab_size;
        let mut out = vec![F::zero(); self.phi.len()];
        for w in 0..v {
            for c in 0..kl {
                out[c * v + w] = self.phi[w * kl + c];
            }
        }
        out
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_products(&self) -> usize {
        self.n_products
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Number of user classes.
    pub fn k(&self) -> usize {
        self.noise_u.size()
    }

    /// Number of product classes.
    pub fn l(&self) -> usize {
        self.noise_p.size()
    }

    pub fn user_grid(&self) -> GridLayout {
        self.noise_u.grid()
    }

    pub fn product_grid(&self) -> GridLayout {
        self.noise_p.grid()
    }

    pub fn noise_u(&self) -> &ChannelNoise<F> {
        &self.noise_u
    }

    pub fn noise_p(&self) -> &ChannelNoise<F> {
        &self.noise_p
    }

    pub fn theta_u(&self, u: usize) -> &[F] {
        let k = self.k();
        &self.theta_u[u * k..(u + 1) * k]
    }

    pub fn theta_p(&self, p: usize) -> &[F] {
        let l = self.l();
        &self.theta_p[p * l..(p + 1) * l]
    }

    /// `K × L` block of word `w`.
    pub fn phi_word(&self, w: usize) -> &[F] {
        let kl = self.k() * self.l();
        &self.phi[w * kl..(w + 1) * kl]
    }

    #[inline]
    pub fn phi(&self, w: usize, k: usize, l: usize) -> F {
        self.phi[(w * self.k() + k) * self.l() + l]
    }

    pub fn theta_u_all(&self) -> &[F] {
        &self.theta_u
    }

    pub fn theta_p_all(&self) -> &[F] {
        &self.theta_p
    }

    pub fn phi_all(&self) -> &[F] {
        &self.phi
    }

    /// Checks that the parameters can score `corpus`.
    pub fn check_corpus(&self, corpus: &Corpus) -> Result<()> {
        if corpus.num_users() != self.n_users
            || corpus.num_products() != self.n_products
            || corpus.vocab_size() != self.vocab_size
        {
            return Err(Error::Dimension(format!(
                "model has {}/{}/{} users/products/words, corpus has {}/{}/{}",
                self.n_users,
                self.n_products,
                self.vocab_size,
                corpus.num_users(),
                corpus.num_products(),
                corpus.vocab_size()
            )));
        }
        Ok(())
    }
}

/// Class priors after the channel: `a[u][k'] = P(y_u = k' | u)` and
/// `b[p][l'] = P(y_p = l' | p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPriors<F> {
    k: usize,
    l: usize,
    a: Vec<F>,
    b: Vec<F>,
}

impl<F: Float> ProjectedPriors<F> {
    pub fn a(&self, u: usize) -> &[F] {
        &self.a[u * self.k..(u + 1) * self.k]
    }

    pub fn b(&self, p: usize) -> &[F] {
        &self.b[p * self.l..(p + 1) * self.l]
    }
}

/// Row-vector times channel matrix for every row of `theta`.
fn through_channel<F: Float>(theta: &[F], noise: &ChannelNoise<F>) -> Vec<F> {
    let c = noise.size();
    let mut out = vec![F::zero(); theta.len()];
    for (src, dst) in theta.chunks(c).zip(out.chunks_mut(c)) {
        for (z, &t) in src.iter().enumerate() {
            if t == F::zero() {
                continue;
            }
            for (d, &n) in dst.iter_mut().zip(noise.row(z)) {
                *d += t * n;
            }
        }
    }
    out
}

pub fn project_priors<F: Float>(params: &ModelParams<F>) -> ProjectedPriors<F> {
    ProjectedPriors {
        k: params.k(),
        l: params.l(),
        a: through_channel(&params.theta_u, &params.noise_u),
        b: through_channel(&params.theta_p, &params.noise_p),
    }
}

/// `Σ_{k', l'} phi[w][k'][l'] · a[k'] · b[l']` for given projected rows.
#[inline]
pub(crate) fn mixture_probability<F: Float>(phi_w: &[F], a: &[F], b: &[F]) -> F {
    let l = b.len();
    let mut total = F::zero();
    for (row, &ak) in phi_w.chunks(l).zip(a) {
        let mut inner = F::zero();
        for (&f, &bl) in row.iter().zip(b) {
            inner += f * bl;
        }
        total += ak * inner;
    }
    total
}

/// `P(w | u, p)` under the model.
pub fn word_probability<F: Float>(
    u: usize,
    p: usize,
    w: usize,
    params: &ModelParams<F>,
    priors: &ProjectedPriors<F>,
) -> F {
    mixture_probability(params.phi_word(w), priors.a(u), priors.b(p))
}

fn check_entries<F: Float>(
    corpus: &Corpus,
    entries: &[usize],
    params: &ModelParams<F>,
) -> Result<()> {
    for &i in entries {
        let e = corpus
            .entries()
            .get(i)
            .ok_or_else(|| Error::OutOfRange(format!("entry {i}")))?;
        if e.user >= params.n_users() || e.product >= params.n_products() {
            return Err(Error::OutOfRange(format!(
                "entry {i} refers to an unknown user or product"
            )));
        }
        if e.counts
            .last()
            .is_some_and(|&(w, _)| w >= params.vocab_size())
        {
            return Err(Error::OutOfRange(format!(
                "entry {i} refers to an unknown word"
            )));
        }
    }
    Ok(())
}

/// Log-probability of one review under the bag-of-words assumption.
pub fn review_log_probability<F: Float>(
    corpus: &Corpus,
    entry: usize,
    params: &ModelParams<F>,
    priors: &ProjectedPriors<F>,
) -> F {
    let e = &corpus.entries()[entry];
    let (a, b) = (priors.a(e.user), priors.b(e.product));
    e.counts
        .iter()
        .map(|&(w, c)| F::of_count(c as usize) * mixture_probability(params.phi_word(w), a, b).ln())
        .sum()
}

/// Count-weighted sum of token log-probabilities over `entries`.
pub fn log_likelihood<F: Float>(
    corpus: &Corpus,
    entries: &[usize],
    params: &ModelParams<F>,
) -> Result<F> {
    check_entries(corpus, entries, params)?;
    let priors = project_priors(params);
    Ok(entries
        .iter()
        .map(|&i| review_log_probability(corpus, i, params, &priors))
        .sum())
}

/// Mean negative review log-probability over `entries`.
pub fn nll<F: Float>(corpus: &Corpus, entries: &[usize], params: &ModelParams<F>) -> Result<F> {
    if entries.is_empty() {
        return Err(Error::Empty("NLL of an empty review set".into()));
    }
    Ok(-log_likelihood(corpus, entries, params)? / F::of_count(entries.len()))
}
