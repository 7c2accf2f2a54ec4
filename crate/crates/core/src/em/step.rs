use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{project_priors, ModelParams, ProjectedPriors};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::Float;

/// Default additive floor on every `phi` cell in the M-step.
pub const DEFAULT_PHI_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the relative likelihood gain drops below this.
    pub rel_tol: f64,
    /// Added to every `phi` cell before normalizing; `0` gives the exact update.
    pub phi_floor: f64,
    /// Number of entry partitions accumulated independently. Fixed so that
    /// results do not depend on the thread count.
    pub partitions: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            rel_tol: 1e-5,
            phi_floor: DEFAULT_PHI_FLOOR,
            partitions: 8,
        }
    }
}

/// Per-word channel kernel `T_w = N_u · Phi_w · N_pᵀ`, stored `V × K × L`.
///
/// `T_w[k][l] = Σ_{k', l'} phi[w][k'][l'] · P(k' | k) · P(l' | l)` is the
/// probability of `w` given the uncorrupted classes `(k, l)`.
pub fn channel_kernel<F: Float>(params: &ModelParams<F>) -> Vec<F> {
    let (k, l) = (params.k(), params.l());
    let kl = k * l;
    let mut out = vec![F::zero(); params.vocab_size() * kl];
    out.par_chunks_mut(kl).enumerate().for_each(|(w, t)| {
        let phi_w = params.phi_word(w);
        // x[k'][l] = Σ_{l'} phi[k'][l'] · P(l' | l)
        let mut x = vec![F::zero(); kl];
        for kp in 0..k {
            for lz in 0..l {
                let np = params.noise_p().row(lz);
                let mut s = F::zero();
                for (lp, &n) in np.iter().enumerate() {
                    s += phi_w[kp * l + lp] * n;
                }
                x[kp * l + lz] = s;
            }
        }
        for kz in 0..k {
            let nu = params.noise_u().row(kz);
            for lz in 0..l {
                let mut s = F::zero();
                for (kp, &n) in nu.iter().enumerate() {
                    s += n * x[kp * l + lz];
                }
                t[kz * l + lz] = s;
            }
        }
    });
    out
}

fn normalize_posterior<F: Float>(mut m: Vec<F>) -> Result<Vec<F>> {
    let s: F = m.iter().copied().sum();
    if !(s > F::zero()) || !s.is_finite() {
        return Err(Error::Numerical(
            "posterior has zero or non-finite mass".into(),
        ));
    }
    for v in m.iter_mut() {
        *v /= s;
    }
    Ok(m)
}

/// Posterior over the corrupted class pair, `P̂(y_u = k', y_p = l' | u, p, w)`,
/// as a row-major `K × L` matrix.
pub fn posterior_y<F: Float>(
    u: usize,
    p: usize,
    w: usize,
    params: &ModelParams<F>,
    priors: &ProjectedPriors<F>,
) -> Result<Vec<F>> {
    let (a, b) = (priors.a(u), priors.b(p));
    let l = params.l();
    let m = params
        .phi_word(w)
        .iter()
        .enumerate()
        .map(|(i, &f)| f * a[i / l] * b[i % l])
        .collect();
    normalize_posterior(m)
}

/// Posterior over the uncorrupted class pair, `P̂(z_u = k, z_p = l | u, p, w)`,
/// given the word's block `t_w` of [`channel_kernel`].
pub fn posterior_z<F: Float>(
    u: usize,
    p: usize,
    params: &ModelParams<F>,
    t_w: &[F],
) -> Result<Vec<F>> {
    let (tu, tp) = (params.theta_u(u), params.theta_p(p));
    let l = params.l();
    let m = t_w
        .iter()
        .enumerate()
        .map(|(i, &t)| tu[i / l] * tp[i % l] * t)
        .collect();
    normalize_posterior(m)
}

/// Expected counts gathered by the E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats<F> {
    /// `V × K × L`: Σ over occurrences of `w` of `P̂(y_u, y_p | u, p, w)`.
    pub sw: Vec<F>,
    /// `N × K`: Σ over a user's tokens of `Σ_l P̂(z_u = k, z_p = l | ·)`.
    pub su: Vec<F>,
    /// `M × L`: Σ over a product's tokens of `Σ_k P̂(z_u = k, z_p = l | ·)`.
    pub sp: Vec<F>,
    pub user_tokens: Vec<F>,
    pub product_tokens: Vec<F>,
    /// Log-likelihood of the accumulated tokens under the current parameters.
    pub loglik: F,
}

impl<F: Float> SufficientStats<F> {
    pub fn zeros(params: &ModelParams<F>) -> Self {
        let (k, l) = (params.k(), params.l());
        Self {
            sw: vec![F::zero(); params.vocab_size() * k * l],
            su: vec![F::zero(); params.n_users() * k],
            sp: vec![F::zero(); params.n_products() * l],
            user_tokens: vec![F::zero(); params.n_users()],
            product_tokens: vec![F::zero(); params.n_products()],
            loglik: F::zero(),
        }
    }

    /// Elementwise sum.
    pub fn merge(&mut self, other: &Self) {
        fn add<F: Float>(a: &mut [F], b: &[F]) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        add(&mut self.sw, &other.sw);
        add(&mut self.su, &other.su);
        add(&mut self.sp, &other.sp);
        add(&mut self.user_tokens, &other.user_tokens);
        add(&mut self.product_tokens, &other.product_tokens);
        self.loglik += other.loglik;
    }
}

/// Streams the E-step posteriors of `entries` into `stats`.
pub fn accumulate<F: Float>(
    corpus: &Corpus,
    entries: &[usize],
    params: &ModelParams<F>,
    priors: &ProjectedPriors<F>,
    kernel: &[F],
    stats: &mut SufficientStats<F>,
) -> Result<()> {
    let (k, l) = (params.k(), params.l());
    let kl = k * l;
    let mut qy = vec![F::zero(); kl];
    let mut zu = vec![F::zero(); k];
    let mut zp = vec![F::zero(); l];
    for &i in entries {
        let e = &corpus.entries()[i];
        let (u, p) = (e.user, e.product);
        let (a, b) = (priors.a(u), priors.b(p));
        let (tu, tp) = (params.theta_u(u), params.theta_p(p));
        for &(w, c) in &e.counts {
            let c = F::of_count(c as usize);
            // corrupted pair
            let phi_w = params.phi_word(w);
            let mut zy = F::zero();
            for kp in 0..k {
                for lp in 0..l {
                    let v = phi_w[kp * l + lp] * a[kp] * b[lp];
                    qy[kp * l + lp] = v;
                    zy += v;
                }
            }
            if !(zy > F::zero()) || !zy.is_finite() {
                return Err(Error::Numerical(format!(
                    "word {w} has zero probability for entry {i}"
                )));
            }
            let sw = &mut stats.sw[w * kl..(w + 1) * kl];
            let scale = c / zy;
            for (s, &q) in sw.iter_mut().zip(&qy) {
                *s += q * scale;
            }
            // uncorrupted pair
            let t_w = &kernel[w * kl..(w + 1) * kl];
            zu.iter_mut().for_each(|x| *x = F::zero());
            zp.iter_mut().for_each(|x| *x = F::zero());
            let mut zz = F::zero();
            for kz in 0..k {
                for lz in 0..l {
                    let v = tu[kz] * tp[lz] * t_w[kz * l + lz];
                    zu[kz] += v;
                    zp[lz] += v;
                    zz += v;
                }
            }
            if !(zz > F::zero()) || !zz.is_finite() {
                return Err(Error::Numerical(format!(
                    "word {w} has zero probability for entry {i}"
                )));
            }
            let scale = c / zz;
            for (s, &v) in stats.su[u * k..(u + 1) * k].iter_mut().zip(&zu) {
                *s += v * scale;
            }
            for (s, &v) in stats.sp[p * l..(p + 1) * l].iter_mut().zip(&zp) {
                *s += v * scale;
            }
            stats.user_tokens[u] += c;
            stats.product_tokens[p] += c;
            stats.loglik += c * zy.ln();
        }
    }
    Ok(())
}

/// Full E-step over `entries`, split into `partitions` contiguous ranges that
/// are accumulated in parallel and merged in order.
pub fn e_step<F: Float>(
    corpus: &Corpus,
    entries: &[usize],
    params: &ModelParams<F>,
    partitions: usize,
) -> Result<SufficientStats<F>> {
    let priors = project_priors(params);
    let kernel = channel_kernel(params);
    let parts = partitions.clamp(1, entries.len().max(1));
    let chunk = entries.len().div_ceil(parts).max(1);
    let partial: Vec<Result<SufficientStats<F>>> = entries
        .par_chunks(chunk)
        .map(|range| {
            let mut s = SufficientStats::zeros(params);
            accumulate(corpus, range, params, &priors, &kernel, &mut s)?;
            Ok(s)
        })
        .collect();
    let mut total = SufficientStats::zeros(params);
    for s in partial {
        total.merge(&s?);
    }
    Ok(total)
}

/// Closed-form M-step from accumulated statistics.
///
/// Users or products without tokens keep their current rows.
pub fn m_step<F: Float>(
    params: &ModelParams<F>,
    stats: &SufficientStats<F>,
    phi_floor: F,
) -> Result<ModelParams<F>> {
    let (k, l, v) = (params.k(), params.l(), params.vocab_size());
    let kl = k * l;

    let mut col = vec![F::zero(); kl];
    for row in stats.sw.chunks(kl) {
        for (c, &s) in col.iter_mut().zip(row) {
            *c += s + phi_floor;
        }
    }
    if col.iter().any(|c| !(*c > F::zero())) {
        return Err(Error::Numerical(
            "a class pair received no expected counts; use a positive phi floor".into(),
        ));
    }
    let mut phi = vec![F::zero(); v * kl];
    for (dst, src) in phi.chunks_mut(kl).zip(stats.sw.chunks(kl)) {
        for ((d, &s), &c) in dst.iter_mut().zip(src).zip(&col) {
            *d = (s + phi_floor) / c;
        }
    }

    let rows = |old: &[F], acc: &[F], tokens: &[F], width: usize| -> Vec<F> {
        let mut out = old.to_vec();
        for (i, t) in tokens.iter().enumerate() {
            if *t > F::zero() {
                let src = &acc[i * width..(i + 1) * width];
                // equals the token count up to rounding
                let s: F = src.iter().copied().sum();
                for (d, &x) in out[i * width..(i + 1) * width].iter_mut().zip(src) {
                    *d = x / s;
                }
            }
        }
        out
    };
    let theta_u = rows(params.theta_u_all(), &stats.su, &stats.user_tokens, k);
    let theta_p = rows(params.theta_p_all(), &stats.sp, &stats.product_tokens, l);

    Ok(ModelParams::from_parts_unchecked(
        theta_u,
        theta_p,
        phi,
        params.noise_u().clone(),
        params.noise_p().clone(),
    ))
}

/// One EM update. Returns the new parameters and the train log-likelihood
/// of the parameters passed in.
pub fn em_iteration<F: Float>(
    corpus: &Corpus,
    train: &[usize],
    params: &ModelParams<F>,
    config: &EmConfig,
) -> Result<(ModelParams<F>, F)> {
    if train.is_empty() {
        return Err(Error::Empty("EM needs at least one training entry".into()));
    }
    params.check_corpus(corpus)?;
    let stats = e_step(corpus, train, params, config.partitions)?;
    if !stats.loglik.is_finite() {
        return Err(Error::Numerical(format!(
            "train log-likelihood is {}",
            stats.loglik
        )));
    }
    let next = m_step(params, &stats, F::of(config.phi_floor))?;
    Ok((next, stats.loglik))
}

/// Log-likelihood history of an EM run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmTrace {
    /// `loglik[t]` is the train log-likelihood of the parameters entering iteration `t`.
    pub loglik: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// One iteration's progress record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationLog {
    pub iter: usize,
    pub loglik: f64,
    pub delta: f64,
}

/// Runs EM from `init` until the relative gain falls below `rel_tol` or
/// `max_iter` updates have been made. `on_iteration` sees every log line.
pub fn fit_em<F: Float>(
    corpus: &Corpus,
    train: &[usize],
    init: ModelParams<F>,
    config: &EmConfig,
    mut on_iteration: impl FnMut(&IterationLog),
) -> Result<(ModelParams<F>, EmTrace)> {
    let mut params = init;
    let mut trace = EmTrace::default();
    for iter in 0..config.max_iter {
        let (next, ll) = em_iteration(corpus, train, &params, config)?;
        let ll = ll.as_f64();
        let prev = trace.loglik.last().copied();
        let delta = prev.map_or(f64::NAN, |p| ll - p);
        trace.loglik.push(ll);
        trace.iterations += 1;
        on_iteration(&IterationLog {
            iter,
            loglik: ll,
            delta,
        });
        params = next;
        if let Some(p) = prev {
            if delta / p.abs().max(f64::MIN_POSITIVE) < config.rel_tol {
                trace.converged = true;
                break;
            }
        }
    }
    Ok((params, trace))
}
