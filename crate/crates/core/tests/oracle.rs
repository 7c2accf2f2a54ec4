mod common;

use common::{random_corpus, random_params, Dense, SMALL_GRIDS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlcm::corpus::{Corpus, Entry};
use tlcm::em::{
    channel_kernel, em_iteration, log_likelihood, posterior_y, posterior_z, project_priors,
    word_probability, EmConfig, ModelParams,
};

fn exact() -> EmConfig {
    EmConfig {
        phi_floor: 0.0,
        ..EmConfig::default()
    }
}

fn instance(seed: u64) -> (ModelParams<f64>, Corpus) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gu = SMALL_GRIDS[rng.random_range(0..SMALL_GRIDS.len())];
    let gp = SMALL_GRIDS[rng.random_range(0..SMALL_GRIDS.len())];
    let (n, m, v) = (
        rng.random_range(1..=3),
        rng.random_range(1..=3),
        rng.random_range(2..=5),
    );
    let su = rng.random_range(0.3..3.0);
    let sp = rng.random_range(0.3..3.0);
    let params = random_params(n, m, v, gu, gp, su, sp, &mut rng);
    let corpus = random_corpus(n, m, v, 20, &mut rng);
    (params, corpus)
}

#[test]
fn posteriors_match_nested_sums() {
    for seed in 0..100 {
        let (params, corpus) = instance(seed);
        let dense = Dense::of(&params);
        let priors = project_priors(&params);
        let kernel = channel_kernel(&params);
        let kl = params.k() * params.l();
        for e in corpus.entries() {
            for &(w, _) in &e.counts {
                let y = posterior_y(e.user, e.product, w, &params, &priors).unwrap();
                let z =
                    posterior_z(e.user, e.product, &params, &kernel[w * kl..(w + 1) * kl]).unwrap();
                let (oy, oz) = (
                    dense.posterior_y(e.user, e.product, w),
                    dense.posterior_z(e.user, e.product, w),
                );
                let l = params.l();
                for i in 0..kl {
                    assert!((y[i] - oy[i / l][i % l]).abs() <= 1e-12, "seed {seed}");
                    assert!((z[i] - oz[i / l][i % l]).abs() <= 1e-12, "seed {seed}");
                }
                let pw = word_probability(e.user, e.product, w, &params, &priors);
                assert!((pw - dense.word_probability(e.user, e.product, w)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn iteration_matches_closed_forms() {
    for seed in 0..100 {
        let (params, corpus) = instance(seed);
        let all: Vec<usize> = (0..corpus.len()).collect();
        let dense = Dense::of(&params);
        let (next, ll) = em_iteration(&corpus, &all, &params, &exact()).unwrap();
        assert!((ll - dense.log_likelihood(&corpus)).abs() <= 1e-10 * ll.abs().max(1.0));
        let d = dense.em_step(&corpus).max_diff(&next);
        assert!(d <= 1e-10, "seed {seed}: {d}");
    }
}

#[test]
fn likelihood_never_drops_on_toys() {
    for seed in 0..20 {
        let (mut params, corpus) = instance(1000 + seed);
        let all: Vec<usize> = (0..corpus.len()).collect();
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..15 {
            let (next, ll) = em_iteration(&corpus, &all, &params, &EmConfig::default()).unwrap();
            assert!(
                ll >= prev - 1e-8 * prev.abs(),
                "seed {seed}: {prev} -> {ll}"
            );
            prev = ll;
            params = next;
        }
    }
}

fn doubled(corpus: &Corpus) -> Corpus {
    let entries = corpus
        .entries()
        .iter()
        .map(|e| Entry {
            counts: e.counts.iter().map(|&(w, c)| (w, 2 * c)).collect(),
            ..e.clone()
        })
        .collect();
    Corpus::new(
        corpus.users().to_vec(),
        corpus.products().to_vec(),
        corpus.vocab().clone(),
        entries,
    )
    .unwrap()
}

#[test]
fn count_weighting_matches_the_oracle() {
    // doubling every count leaves the normalized updates unchanged
    for seed in 0..20 {
        let (params, corpus) = instance(2000 + seed);
        let twice = doubled(&corpus);
        let all: Vec<usize> = (0..corpus.len()).collect();
        let (a, la) = em_iteration(&corpus, &all, &params, &exact()).unwrap();
        let (b, lb) = em_iteration(&twice, &all, &params, &exact()).unwrap();
        assert!(Dense::of(&a).max_diff(&b) <= 1e-12);
        assert!((2.0 * la - lb).abs() <= 1e-12 * lb.abs());
    }
}

fn permuted(
    params: &ModelParams<f64>,
    corpus: &Corpus,
    perm: &[usize],
) -> (ModelParams<f64>, Corpus) {
    // user i becomes user perm[i]
    let k = params.k();
    let mut theta_u = vec![0.0; params.n_users() * k];
    for (i, &j) in perm.iter().enumerate() {
        theta_u[j * k..(j + 1) * k].copy_from_slice(params.theta_u(i));
    }
    let mut users = vec![String::new(); perm.len()];
    for (i, &j) in perm.iter().enumerate() {
        users[j] = corpus.users()[i].clone();
    }
    let entries = corpus
        .entries()
        .iter()
        .map(|e| Entry {
            user: perm[e.user],
            ..e.clone()
        })
        .collect();
    let p = ModelParams::new(
        theta_u,
        params.theta_p_all().to_vec(),
        params.phi_all().to_vec(),
        params.noise_u().clone(),
        params.noise_p().clone(),
    )
    .unwrap();
    let c = Corpus::new(
        users,
        corpus.products().to_vec(),
        corpus.vocab().clone(),
        entries,
    )
    .unwrap();
    (p, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabeling_users_keeps_likelihood(seed in 0u64..10_000, shift in 0usize..3) {
        let (params, corpus) = instance(seed);
        let n = params.n_users();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).rev().collect();
        let (p2, c2) = permuted(&params, &corpus, &perm);
        let all: Vec<usize> = (0..corpus.len()).collect();
        let a = log_likelihood(&corpus, &all, &params).unwrap();
        let b = log_likelihood(&c2, &all, &p2).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn updates_stay_normalized(seed in 0u64..10_000) {
        let (params, corpus) = instance(seed);
        let all: Vec<usize> = (0..corpus.len()).collect();
        let (next, _) = em_iteration(&corpus, &all, &params, &EmConfig::default()).unwrap();
        for u in 0..next.n_users() {
            prop_assert!((next.theta_u(u).iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
        for p in 0..next.n_products() {
            prop_assert!((next.theta_p(p).iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
        for a in 0..next.k() {
            for b in 0..next.l() {
                let s: f64 = (0..next.vocab_size()).map(|w| next.phi(w, a, b)).sum();
                prop_assert!((s - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn partitioning_does_not_matter(seed in 0u64..10_000, parts in 1usize..6) {
        let (params, corpus) = instance(seed);
        let all: Vec<usize> = (0..corpus.len()).collect();
        let one = EmConfig { partitions: 1, ..EmConfig::default() };
        let many = EmConfig { partitions: parts, ..EmConfig::default() };
        let (a, la) = em_iteration(&corpus, &all, &params, &one).unwrap();
        let (b, lb) = em_iteration(&corpus, &all, &params, &many).unwrap();
        prop_assert!(Dense::of(&a).max_diff(&b) <= 1e-9);
        prop_assert!((la - lb).abs() <= 1e-9 * la.abs());
    }
}
