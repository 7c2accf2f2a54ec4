//! Reading a trained model: per-class word distributions, top-word grid
//! reports and class assignment of users that were not seen in training.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Vocabulary, WordCounts};
use crate::em::{ModelParams, ProjectedPriors};
use crate::error::{Error, Result};
use crate::grid::GridLayout;
use crate::prob::log_sum_exp;
use crate::{Axis, Float};

/// One word distribution per class of a grid, row-major `C × V`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWordDistribution<F> {
    pub axis: Axis,
    pub grid: GridLayout,
    pub vocab_size: usize,
    /// Class index on the opposite axis that was held fixed, if any.
    pub condition: Option<usize>,
    dists: Vec<F>,
}

impl<F: Float> ClassWordDistribution<F> {
    pub fn new(axis: Axis, grid: GridLayout, vocab_size: usize, dists: Vec<F>) -> Result<Self> {
        if dists.len() != grid.len() * vocab_size {
            return Err(Error::Dimension(
                "distribution table does not match grid and vocabulary".into(),
            ));
        }
        Ok(Self {
            axis,
            grid,
            vocab_size,
            condition: None,
            dists,
        })
    }

    pub fn classes(&self) -> usize {
        self.grid.len()
    }

    pub fn class(&self, c: usize) -> &[F] {
        &self.dists[c * self.vocab_size..(c + 1) * self.vocab_size]
    }
}

/// Word distribution of each class on `axis` under a flat prior over the
/// classes of the other axis, i.e. the plain average of `phi` slices.
pub fn class_word_distribution<F: Float>(
    params: &ModelParams<F>,
    axis: Axis,
) -> ClassWordDistribution<F> {
    let (k, l, v) = (params.k(), params.l(), params.vocab_size());
    let (grid, classes, other) = match axis {
        Axis::User => (params.user_grid(), k, l),
        Axis::Product => (params.product_grid(), l, k),
    };
    let scale = F::one() / F::of_count(other);
    let mut dists = vec![F::zero(); classes * v];
    for w in 0..v {
        let block = params.phi_word(w);
        for (i, &x) in block.iter().enumerate() {
            let c = match axis {
                Axis::User => i / l,
                Axis::Product => i % l,
            };
            dists[c * v + w] += x * scale;
        }
    }
    ClassWordDistribution {
        axis,
        grid,
        vocab_size: v,
        condition: None,
        dists,
    }
}

/// Word distribution of each class on `axis` with the class of the other
/// axis fixed to `condition`: the `phi` slices themselves.
pub fn conditional_class_distribution<F: Float>(
    params: &ModelParams<F>,
    axis: Axis,
    condition: usize,
) -> Result<ClassWordDistribution<F>> {
    let (k, l, v) = (params.k(), params.l(), params.vocab_size());
    let (grid, classes, other) = match axis {
        Axis::User => (params.user_grid(), k, l),
        Axis::Product => (params.product_grid(), l, k),
    };
    if condition >= other {
        return Err(Error::OutOfRange(format!(
            "conditioning class {condition} on a grid of {other} classes"
        )));
    }
    let mut dists = vec![F::zero(); classes * v];
    for w in 0..v {
        for c in 0..classes {
            dists[c * v + w] = match axis {
                Axis::User => params.phi(w, c, condition),
                Axis::Product => params.phi(w, condition, c),
            };
        }
    }
    Ok(ClassWordDistribution {
        axis,
        grid,
        vocab_size: v,
        condition: Some(condition),
        dists,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordProb {
    pub word: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWords {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub words: Vec<WordProb>,
}

/// Top words of every class, laid out on the class grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub axis: Axis,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<usize>,
    pub classes: Vec<ClassWords>,
}

/// Indices of the `n` largest entries, descending, ties by word order.
fn ranked<F: Float>(dist: &[F], vocab: &Vocabulary, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| {
        dist[b]
            .partial_cmp(&dist[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| vocab.word(a).cmp(vocab.word(b)))
    });
    idx.truncate(n);
    idx
}

/// The `n` most probable words of every class.
pub fn top_words<F: Float>(
    dist: &ClassWordDistribution<F>,
    vocab: &Vocabulary,
    n: usize,
) -> Result<GridReport> {
    if vocab.len() != dist.vocab_size {
        return Err(Error::Dimension(format!(
            "vocabulary has {} words, distributions have {}",
            vocab.len(),
            dist.vocab_size
        )));
    }
    if n > vocab.len() {
        return Err(Error::InvalidArgument(format!(
            "asked for {n} words from a vocabulary of {}",
            vocab.len()
        )));
    }
    let classes = (0..dist.classes())
        .map(|c| {
            let (row, col) = dist.grid.coords(c);
            let words = ranked(dist.class(c), vocab, n)
                .into_iter()
                .map(|w| WordProb {
                    word: vocab.word(w).to_string(),
                    p: dist.class(c)[w].as_f64(),
                })
                .collect();
            ClassWords {
                index: c,
                row,
                col,
                words,
            }
        })
        .collect();
    Ok(GridReport {
        axis: dist.axis,
        rows: dist.grid.rows(),
        cols: dist.grid.cols(),
        condition: dist.condition,
        classes,
    })
}

/// Fixed-width text layout: one band per grid row, one column per class.
pub fn render_grid_text(report: &GridReport) -> String {
    let cell = |w: &WordProb| format!("{} {:.4}", w.word, w.p);
    let header = |c: &ClassWords| format!("[{},{}] #{}", c.row, c.col, c.index);
    let width = report
        .classes
        .iter()
        .flat_map(|c| c.words.iter().map(cell).chain(std::iter::once(header(c))))
        .map(|s| s.chars().count())
        .max()
        .unwrap_or(0)
        + 2;
    let depth = report
        .classes
        .iter()
        .map(|c| c.words.len())
        .max()
        .unwrap_or(0);

    let mut out = String::new();
    let _ = write!(
        out,
        "{} classes ({} x {})",
        report.axis, report.rows, report.cols
    );
    if let Some(c) = report.condition {
        let _ = write!(out, ", conditioned on {} class {c}", report.axis.other());
    }
    out.push('\n');
    for r in 0..report.rows {
        let band: Vec<&ClassWords> = report.classes.iter().filter(|c| c.row == r).collect();
        let mut line = String::new();
        for c in &band {
            let _ = write!(line, "{:<width$}", header(c));
        }
        out.push_str(line.trim_end());
        out.push('\n');
        for i in 0..depth {
            let mut line = String::new();
            for c in &band {
                let text = c.words.get(i).map(cell).unwrap_or_default();
                let _ = write!(line, "{text:<width$}");
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn render_grid_json(report: &GridReport) -> Vec<u8> {
    serde_json::to_vec_pretty(report).expect("report serializes")
}

pub fn parse_grid_json(bytes: &[u8]) -> Result<GridReport> {
    serde_json::from_slice(bytes).map_err(|e| Error::InvalidArgument(format!("grid report: {e}")))
}

/// Class posterior of a new user from one review of a known product.
#[derive(Debug, Clone, PartialEq)]
pub struct OosPosterior<F> {
    /// `P(y_u = k' | review)` under a flat class prior.
    pub posterior: Vec<F>,
    /// `ln P(review | y_u = k', product)` per class.
    pub class_log_likelihood: Vec<F>,
    /// `ln P(review | product)` with the flat prior.
    pub log_evidence: F,
}

impl<F: Float> OosPosterior<F> {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.posterior.iter().enumerate() {
            if p > self.posterior[best] {
                best = i;
            }
        }
        best
    }
}

/// Counts of in-vocabulary tokens; others are dropped.
pub fn review_counts(tokens: &[String], vocab: &Vocabulary) -> WordCounts {
    let mut counts = std::collections::BTreeMap::new();
    for t in tokens {
        if let Some(w) = vocab.get(t) {
            *counts.entry(w).or_insert(0u32) += 1;
        }
    }
    counts.into_iter().collect()
}

/// Bayes assignment of an unseen user to user classes.
///
/// Each class scores the review by `Σ_w n(w) ln Σ_l' phi[w][k'][l'] b[p][l']`;
/// the flat prior cancels and the posterior is the softmax of the scores.
pub fn oos_posterior<F: Float>(
    review: &WordCounts,
    product: usize,
    params: &ModelParams<F>,
    priors: &ProjectedPriors<F>,
) -> Result<OosPosterior<F>> {
    if product >= params.n_products() {
        return Err(Error::Query(format!("unknown product index {product}")));
    }
    if review.iter().all(|&(_, c)| c == 0) {
        return Err(Error::Query(
            "the review has no vocabulary word, so it carries no evidence about the user's class"
                .into(),
        ));
    }
    if let Some(&(w, _)) = review.iter().find(|&&(w, _)| w >= params.vocab_size()) {
        return Err(Error::OutOfRange(format!("word index {w}")));
    }
    let (k, l) = (params.k(), params.l());
    let b = priors.b(product);
    let mut scores = vec![F::zero(); k];
    for &(w, c) in review {
        let block = params.phi_word(w);
        let n = F::of_count(c as usize);
        for (kp, s) in scores.iter_mut().enumerate() {
            let p: F = block[kp * l..(kp + 1) * l]
                .iter()
                .zip(b)
                .map(|(&f, &bl)| f * bl)
                .sum();
            *s += n * p.ln();
        }
    }
    let norm = log_sum_exp(&scores);
    if !norm.is_finite() {
        return Err(Error::Numerical(
            "review has zero probability under every class".into(),
        ));
    }
    let posterior = scores.iter().map(|&s| (s - norm).exp()).collect();
    Ok(OosPosterior {
        posterior,
        log_evidence: norm - F::of_count(k).ln(),
        class_log_likelihood: scores,
    })
}

/// Jensen-Shannon divergence in nats.
pub fn js_divergence<F: Float>(p: &[F], q: &[F]) -> F {
    let half = F::of(0.5);
    let kl = |a: F, m: F| {
        if a > F::zero() {
            a * (a / m).ln()
        } else {
            F::zero()
        }
    };
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = half * (a + b);
            half * (kl(a, m) + kl(b, m))
        })
        .sum()
}

/// Mean JS divergence between grid-adjacent class pairs and between
/// non-adjacent pairs. Either mean is `None` when no such pair exists.
pub fn topographic_contrast<F: Float>(dist: &ClassWordDistribution<F>) -> (Option<F>, Option<F>) {
    let (mut adj, mut n_adj, mut far, mut n_far) = (F::zero(), 0usize, F::zero(), 0usize);
    for a in 0..dist.classes() {
        for b in a + 1..dist.classes() {
            let d = js_divergence(dist.class(a), dist.class(b));
            if dist.grid.adjacent(a, b) {
                adj += d;
                n_adj += 1;
            } else {
                far += d;
                n_far += 1;
            }
        }
    }
    let mean = |s: F, n: usize| (n > 0).then(|| s / F::of_count(n));
    (mean(adj, n_adj), mean(far, n_far))
}
