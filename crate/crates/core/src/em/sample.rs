use rand::Rng;

use super::params::ModelParams;
use crate::corpus::{Corpus, Entry, Vocabulary, WordCounts};
use crate::error::{Error, Result};
use crate::prob::sample_categorical;
use crate::Float;

/// Steepness of the synthetic rating curve.
const RATING_STEEPNESS: f64 = 6.0;

/// Cosine of two nonnegative vectors, the shorter one padded with zeros.
fn padded_cosine<F: Float>(a: &[F], b: &[F]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x.as_f64() * y.as_f64()).sum();
    let na: f64 = a.iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Synthetic rating in {1..5} tied to how aligned a user's and a product's
/// class profiles are.
pub fn synthetic_rating<F: Float>(theta_u: &[F], theta_p: &[F]) -> f64 {
    let x = RATING_STEEPNESS * (padded_cosine(theta_u, theta_p) - 0.5);
    (1.0 + 4.0 / (1.0 + (-x).exp())).round()
}

/// Draws a corpus from the generative process.
///
/// For every planned `(user, product)` review a user class and a product
/// class are drawn from `theta`, each is passed through its channel once, and
/// `tokens_per_review` words are drawn from the resulting `phi` slice. Users,
/// products and words are named `u{i}`, `p{j}`, `w{k}` and keep the
/// parameter indices.
pub fn sample_corpus<F: Float, R: Rng + ?Sized>(
    params: &ModelParams<F>,
    plan: &[(usize, usize)],
    tokens_per_review: usize,
    rng: &mut R,
) -> Result<Corpus> {
    if tokens_per_review < 2 {
        return Err(Error::InvalidArgument(
            "reviews need at least two tokens".into(),
        ));
    }
    let (k, l, v) = (params.k(), params.l(), params.vocab_size());
    // per class pair word distributions, contiguous over words
    let mut slices = vec![F::zero(); k * l * v];
    for w in 0..v {
        for (c, &x) in params.phi_word(w).iter().enumerate() {
            slices[c * v + w] = x;
        }
    }
    let mut entries = Vec::with_capacity(plan.len());
    for &(u, p) in plan {
        if u >= params.n_users() || p >= params.n_products() {
            return Err(Error::OutOfRange(format!("planned review ({u}, {p})")));
        }
        let zu = sample_categorical(params.theta_u(u), rng);
        let yu = params.noise_u().sample(zu, rng);
        let zp = sample_categorical(params.theta_p(p), rng);
        let yp = params.noise_p().sample(zp, rng);
        let dist = &slices[(yu * l + yp) * v..(yu * l + yp + 1) * v];
        let mut counts = vec![0u32; v];
        for _ in 0..tokens_per_review {
            counts[sample_categorical(dist, rng)] += 1;
        }
        let counts: WordCounts = counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect();
        entries.push(Entry {
            user: u,
            product: p,
            rating: synthetic_rating(params.theta_u(u), params.theta_p(p)),
            counts,
        });
    }
    Corpus::new(
        (0..params.n_users()).map(|i| format!("u{i}")).collect(),
        (0..params.n_products()).map(|i| format!("p{i}")).collect(),
        Vocabulary::new((0..v).map(|i| format!("w{i}")).collect())?,
        entries,
    )
}
