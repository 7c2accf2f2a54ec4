use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};

/// Entry-index partition of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0)
            || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "split ratios {self:?} must be nonnegative and sum to 1"
            )));
        }
        Ok(())
    }
}

/// Random review-level split for rating prediction.
///
/// Entries are shuffled with `seed`, then cut into train / validation / test
/// by the rounded ratios. Validation and test entries whose user or product
/// has no train entry are removed.
pub fn split_rating(corpus: &Corpus, ratios: SplitRatios, seed: u64) -> Result<SplitSpec> {
    ratios.validate()?;
    if corpus.is_empty() {
        return Err(Error::Empty("cannot split an empty corpus".into()));
    }
    let n = corpus.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_train = ((n as f64 * ratios.train).round() as usize).clamp(1, n);
    let n_val = ((n as f64 * ratios.validation).round() as usize).min(n - n_train);
    let mut train = order[..n_train].to_vec();
    let mut validation = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();

    let entries = corpus.entries();
    let known_users: HashSet<usize> = train.iter().map(|&i| entries[i].user).collect();
    let known_products: HashSet<usize> = train.iter().map(|&i| entries[i].product).collect();
    let known = |i: &usize| {
        known_users.contains(&entries[*i].user) && known_products.contains(&entries[*i].product)
    };
    let (before_v, before_t) = (validation.len(), test.len());
    validation.retain(known);
    test.retain(known);
    log::debug!(
        "rating split: dropped {} validation and {} test entries with unseen users or products",
        before_v - validation.len(),
        before_t - test.len()
    );

    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(SplitSpec {
        train,
        validation,
        test,
        seed,
    })
}

/// All-but-one protocol: one random entry of every user with at least
/// `min_reviews` entries is held out (returned as `test`); everything else
/// is train. `validation` is always empty.
pub fn split_all_but_one(corpus: &Corpus, min_reviews: usize, seed: u64) -> Result<SplitSpec> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot split an empty corpus".into()));
    }
    let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); corpus.num_users()];
    for (i, e) in corpus.entries().iter().enumerate() {
        by_user[e.user].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held: HashSet<usize> = HashSet::new();
    for list in &by_user {
        if list.len() >= min_reviews.max(1) {
            held.insert(list[rng.random_range(0..list.len())]);
        }
    }
    if held.is_empty() {
        log::warn!("no user has at least {min_reviews} reviews; held-out set is empty");
    }
    let mut train = Vec::with_capacity(corpus.len() - held.len());
    let mut test = Vec::with_capacity(held.len());
    for i in 0..corpus.len() {
        if held.contains(&i) {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    Ok(SplitSpec {
        train,
        validation: Vec::new(),
        test,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Entry, Vocabulary};

    fn corpus(pairs: &[(usize, usize)]) -> Corpus {
        let n_users = pairs.iter().map(|p| p.0).max().unwrap() + 1;
        let n_products = pairs.iter().map(|p| p.1).max().unwrap() + 1;
        let entries = pairs
            .iter()
            .map(|&(user, product)| Entry {
                user,
                product,
                rating: 3.0,
                counts: vec![(0, 2)],
            })
            .collect();
        Corpus::new(
            (0..n_users).map(|i| format!("u{i}")).collect(),
            (0..n_products).map(|i| format!("p{i}")).collect(),
            Vocabulary::new(vec!["w".into()]).unwrap(),
            entries,
        )
        .unwrap()
    }

    #[test]
    fn ratio_arithmetic_before_filtering() {
        // a single user and product: nothing is filtered
        let c = corpus(&[(0, 0); 10]);
        let s = split_rating(&c, SplitRatios::default(), 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn single_entry_goes_to_train() {
        let c = corpus(&[(0, 0)]);
        let s = split_rating(&c, SplitRatios::default(), 1).unwrap();
        assert_eq!(s.train, vec![0]);
        assert!(s.validation.is_empty() && s.test.is_empty());
    }

    #[test]
    fn unseen_product_is_dropped() {
        let ratios = SplitRatios {
            train: 0.5,
            validation: 0.0,
            test: 0.5,
        };
        // entry 1 is the only one with product 1; whichever side it lands on,
        // a test entry with product 1 can never survive.
        for seed in 0..20 {
            let c = corpus(&[(0, 0), (0, 1)]);
            let s = split_rating(&c, ratios, seed).unwrap();
            for &i in &s.test {
                let e = &c.entries()[i];
                assert!(s.train.iter().any(|&t| c.entries()[t].product == e.product));
            }
            assert_eq!(s.train.len(), 1);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let pairs: Vec<_> = (0..50).map(|i| (i % 7, i % 5)).collect();
        let c = corpus(&pairs);
        let a = split_rating(&c, SplitRatios::default(), 42).unwrap();
        let b = split_rating(&c, SplitRatios::default(), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_but_one_thresholds() {
        let mut pairs = vec![(0, 0); 12];
        pairs.extend(vec![(1, 0); 9]);
        let c = corpus(&pairs);
        let s = split_all_but_one(&c, 10, 3).unwrap();
        assert_eq!(s.test.len(), 1);
        assert_eq!(c.entries()[s.test[0]].user, 0);
        assert_eq!(s.train.len(), 20);
        assert!(s.validation.is_empty());
    }

    #[test]
    fn all_but_one_without_eligible_users() {
        let c = corpus(&[(0, 0), (1, 0)]);
        let s = split_all_but_one(&c, 10, 3).unwrap();
        assert!(s.test.is_empty());
        assert_eq!(s.train.len(), 2);
    }

    #[test]
    fn rejects_bad_ratios() {
        let c = corpus(&[(0, 0)]);
        let r = SplitRatios {
            train: 0.9,
            validation: 0.2,
            test: 0.1,
        };
        assert!(split_rating(&c, r, 0).is_err());
    }
}
