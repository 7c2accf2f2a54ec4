//! Brute-force reference implementations used as test oracles.
//!
//! Everything here works on plain nested vectors and spells out the sums over
//! k, l, k', l' explicitly. Nothing is shared with the library beyond reading
//! parameters out of `ModelParams`.

#![allow(dead_code)]

use rand::Rng;
use tlcm::corpus::{Corpus, Entry, Vocabulary};
use tlcm::em::ModelParams;
use tlcm::grid::{channel_noise, make_grid};

/// Dense copy of a model.
#[derive(Debug, Clone)]
pub struct Dense {
    pub theta_u: Vec<Vec<f64>>,
    pub theta_p: Vec<Vec<f64>>,
    /// `phi[w][k'][l']`
    pub phi: Vec<Vec<Vec<f64>>>,
    /// `nu[k][k'] = P(y_u = k' | z_u = k)`
    pub nu: Vec<Vec<f64>>,
    pub np: Vec<Vec<f64>>,
}

impl Dense {
    pub fn of(m: &ModelParams<f64>) -> Self {
        let (k, l, v) = (m.k(), m.l(), m.vocab_size());
        Dense {
            theta_u: (0..m.n_users()).map(|u| m.theta_u(u).to_vec()).collect(),
            theta_p: (0..m.n_products()).map(|p| m.theta_p(p).to_vec()).collect(),
            phi: (0..v)
                .map(|w| {
                    (0..k)
                        .map(|a| (0..l).map(|b| m.phi(w, a, b)).collect())
                        .collect()
                })
                .collect(),
            nu: (0..k)
                .map(|a| (0..k).map(|b| m.noise_u().get(a, b)).collect())
                .collect(),
            np: (0..l)
                .map(|a| (0..l).map(|b| m.noise_p().get(a, b)).collect())
                .collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.nu.len()
    }

    pub fn l(&self) -> usize {
        self.np.len()
    }

    pub fn v(&self) -> usize {
        self.phi.len()
    }

    /// Joint weight of (z_u=k, z_p=l, y_u=k', y_p=l', w) given (u, p).
    fn joint(&self, u: usize, p: usize, w: usize, k: usize, l: usize, kp: usize, lp: usize) -> f64 {
        self.theta_u[u][k]
            * self.theta_p[p][l]
            * self.nu[k][kp]
            * self.np[l][lp]
            * self.phi[w][kp][lp]
    }

    pub fn word_probability(&self, u: usize, p: usize, w: usize) -> f64 {
        let mut s = 0.0;
        for k in 0..self.k() {
            for l in 0..self.l() {
                for kp in 0..self.k() {
                    for lp in 0..self.l() {
                        s += self.joint(u, p, w, k, l, kp, lp);
                    }
                }
            }
        }
        s
    }

    /// `P(y_u = k', y_p = l' | u, p, w)`, indexed `[k'][l']`.
    pub fn posterior_y(&self, u: usize, p: usize, w: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.l()]; self.k()];
        for (kp, row) in out.iter_mut().enumerate() {
            for (lp, cell) in row.iter_mut().enumerate() {
                for k in 0..self.k() {
                    for l in 0..self.l() {
                        *cell += self.joint(u, p, w, k, l, kp, lp);
                    }
                }
            }
        }
        let z = self.word_probability(u, p, w);
        out.iter_mut().flatten().for_each(|x| *x /= z);
        out
    }

    /// `P(z_u = k, z_p = l | u, p, w)`, indexed `[k][l]`.
    pub fn posterior_z(&self, u: usize, p: usize, w: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.l()]; self.k()];
        for (k, row) in out.iter_mut().enumerate() {
            for (l, cell) in row.iter_mut().enumerate() {
                for kp in 0..self.k() {
                    for lp in 0..self.l() {
                        *cell += self.joint(u, p, w, k, l, kp, lp);
                    }
                }
            }
        }
        let z = self.word_probability(u, p, w);
        out.iter_mut().flatten().for_each(|x| *x /= z);
        out
    }

    pub fn log_likelihood(&self, corpus: &Corpus) -> f64 {
        let mut s = 0.0;
        for e in corpus.entries() {
            for &(w, c) in &e.counts {
                s += c as f64 * self.word_probability(e.user, e.product, w).ln();
            }
        }
        s
    }

    /// One EM update with the closed forms, every posterior formed explicitly.
    pub fn em_step(&self, corpus: &Corpus) -> Dense {
        let (k, l, v) = (self.k(), self.l(), self.v());
        let mut sw = vec![vec![vec![0.0; l]; k]; v];
        let mut su = vec![vec![0.0; k]; self.theta_u.len()];
        let mut sp = vec![vec![0.0; l]; self.theta_p.len()];
        let mut nu_tok = vec![0.0; self.theta_u.len()];
        let mut np_tok = vec![0.0; self.theta_p.len()];
        for e in corpus.entries() {
            let (u, p) = (e.user, e.product);
            for &(w, c) in &e.counts {
                let c = c as f64;
                let qy = self.posterior_y(u, p, w);
                let qz = self.posterior_z(u, p, w);
                for kp in 0..k {
                    for lp in 0..l {
                        sw[w][kp][lp] += c * qy[kp][lp];
                    }
                }
                for a in 0..k {
                    for b in 0..l {
                        su[u][a] += c * qz[a][b];
                        sp[p][b] += c * qz[a][b];
                    }
                }
                nu_tok[u] += c;
                np_tok[p] += c;
            }
        }
        let mut phi = sw.clone();
        for kp in 0..k {
            for lp in 0..l {
                let tot: f64 = (0..v).map(|w| sw[w][kp][lp]).sum();
                for w in 0..v {
                    phi[w][kp][lp] = sw[w][kp][lp] / tot;
                }
            }
        }
        let rows = |old: &[Vec<f64>], acc: &[Vec<f64>], tok: &[f64]| -> Vec<Vec<f64>> {
            old.iter()
                .zip(acc)
                .zip(tok)
                .map(|((o, a), &t)| {
                    if t > 0.0 {
                        a.iter().map(|x| x / t).collect()
                    } else {
                        o.clone()
                    }
                })
                .collect()
        };
        Dense {
            theta_u: rows(&self.theta_u, &su, &nu_tok),
            theta_p: rows(&self.theta_p, &sp, &np_tok),
            phi,
            nu: self.nu.clone(),
            np: self.np.clone(),
        }
    }

    /// Largest absolute difference to a library model, over all parameters.
    pub fn max_diff(&self, m: &ModelParams<f64>) -> f64 {
        let o = Dense::of(m);
        let flat = |d: &Dense| -> Vec<f64> {
            let mut v: Vec<f64> = d.theta_u.iter().flatten().copied().collect();
            v.extend(d.theta_p.iter().flatten());
            v.extend(d.phi.iter().flatten().flatten());
            v
        };
        flat(self)
            .iter()
            .zip(flat(&o))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Topology-free two-sided latent class model: one class per side, no channel.
#[derive(Debug, Clone)]
pub struct PlainLcm {
    pub theta_u: Vec<Vec<f64>>,
    pub theta_p: Vec<Vec<f64>>,
    /// `phi[w][k][l]`
    pub phi: Vec<Vec<Vec<f64>>>,
}

impl PlainLcm {
    pub fn step(&self, corpus: &Corpus) -> PlainLcm {
        let k = self.theta_u[0].len();
        let l = self.theta_p[0].len();
        let v = self.phi.len();
        let mut sw = vec![vec![vec![0.0; l]; k]; v];
        let mut su = vec![vec![0.0; k]; self.theta_u.len()];
        let mut sp = vec![vec![0.0; l]; self.theta_p.len()];
        for e in corpus.entries() {
            for &(w, c) in &e.counts {
                let mut q = vec![vec![0.0; l]; k];
                let mut z = 0.0;
                for (a, row) in q.iter_mut().enumerate() {
                    for (b, cell) in row.iter_mut().enumerate() {
                        *cell = self.theta_u[e.user][a]
                            * self.theta_p[e.product][b]
                            * self.phi[w][a][b];
                        z += *cell;
                    }
                }
                for a in 0..k {
                    for b in 0..l {
                        let r = c as f64 * q[a][b] / z;
                        sw[w][a][b] += r;
                        su[e.user][a] += r;
                        sp[e.product][b] += r;
                    }
                }
            }
        }
        let norm_rows = |old: &[Vec<f64>], acc: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            acc.into_iter()
                .zip(old)
                .map(|(r, o)| {
                    let s: f64 = r.iter().sum();
                    if s > 0.0 {
                        r.iter().map(|x| x / s).collect()
                    } else {
                        o.clone()
                    }
                })
                .collect()
        };
        let mut phi = sw.clone();
        for a in 0..k {
            for b in 0..l {
                let tot: f64 = (0..v).map(|w| sw[w][a][b]).sum();
                for w in 0..v {
                    phi[w][a][b] = sw[w][a][b] / tot;
                }
            }
        }
        PlainLcm {
            theta_u: norm_rows(&self.theta_u, su),
            theta_p: norm_rows(&self.theta_p, sp),
            phi,
        }
    }
}

pub fn simplex<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Random parameters on the given grids, every cell bounded away from 0.
pub fn random_params<R: Rng>(
    n: usize,
    m: usize,
    v: usize,
    user_grid: (usize, usize),
    product_grid: (usize, usize),
    sigma_u: f64,
    sigma_p: f64,
    rng: &mut R,
) -> ModelParams<f64> {
    let nu = channel_noise(make_grid(user_grid.0, user_grid.1).unwrap(), sigma_u).unwrap();
    let np = channel_noise(make_grid(product_grid.0, product_grid.1).unwrap(), sigma_p).unwrap();
    let (k, l) = (nu.size(), np.size());
    let theta_u = (0..n).flat_map(|_| simplex(k, rng)).collect();
    let theta_p = (0..m).flat_map(|_| simplex(l, rng)).collect();
    // one distribution over words per class pair, laid out V × K × L
    let slices: Vec<Vec<f64>> = (0..k * l).map(|_| simplex(v, rng)).collect();
    let mut phi = vec![0.0; v * k * l];
    for w in 0..v {
        for c in 0..k * l {
            phi[w * k * l + c] = slices[c][w];
        }
    }
    ModelParams::new(theta_u, theta_p, phi, nu, np).unwrap()
}

pub fn vocab(v: usize) -> Vocabulary {
    Vocabulary::new((0..v).map(|i| format!("w{i}")).collect()).unwrap()
}

/// Small random corpus in which every user and product has a review.
pub fn random_corpus<R: Rng>(
    n: usize,
    m: usize,
    v: usize,
    max_tokens: usize,
    rng: &mut R,
) -> Corpus {
    let reviews = n.max(m);
    let per = (max_tokens / reviews).max(2);
    let mut entries = Vec::new();
    for i in 0..reviews {
        let mut counts = vec![0u32; v];
        let len = rng.random_range(2..=per);
        for _ in 0..len {
            counts[rng.random_range(0..v)] += 1;
        }
        entries.push(Entry {
            user: i % n,
            product: i % m,
            rating: rng.random_range(1..=5) as f64,
            counts: counts
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .collect(),
        });
    }
    Corpus::new(
        (0..n).map(|i| format!("u{i}")).collect(),
        (0..m).map(|i| format!("p{i}")).collect(),
        vocab(v),
        entries,
    )
    .unwrap()
}

/// Grid shapes with at most three classes.
pub const SMALL_GRIDS: [(usize, usize); 5] = [(1, 1), (2, 1), (3, 1), (1, 2), (1, 3)];
