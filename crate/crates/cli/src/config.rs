//! Run configuration: flat JSON, every field overridable from the command line.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use tlcm::corpus::{Normalizer, SplitRatios, Stopwords, VocabScoring};
use tlcm::em::EmConfig;
use tlcm::som::{SomConfig, SomInitConfig};
use tlcm::Error;

/// Which entries EM trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SplitKind {
    /// 80/10/10 review split for rating prediction.
    Rating,
    /// One held-out review per user with enough reviews.
    AllButOne,
}

impl std::fmt::Display for SplitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitKind::Rating => "rating",
            SplitKind::AllButOne => "all-but-one",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scoring {
    TfIdf,
    Frequency,
}

impl From<Scoring> for VocabScoring {
    fn from(s: Scoring) -> Self {
        match s {
            Scoring::TfIdf => VocabScoring::TfIdf,
            Scoring::Frequency => VocabScoring::Frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k_rows: usize,
    pub k_cols: usize,
    pub l_rows: usize,
    pub l_cols: usize,
    pub vocab_size: usize,
    pub vocab_scoring: Scoring,
    pub max_tokens: usize,
    /// Stopword file, one word per line; the bundled English list when unset.
    pub stopwords: Option<PathBuf>,
    pub sigma_u: f64,
    pub sigma_p: f64,
    /// Softening constant of the SOM assignments.
    pub softening: f64,
    /// Laplace constant of the initial word distribution.
    pub laplace_m: f64,
    pub som_epochs: usize,
    pub som_seed: u64,
    /// L2-normalize term-frequency vectors before the SOM.
    pub som_normalize: bool,
    pub em_max_iter: usize,
    pub em_rel_tol: f64,
    pub em_phi_floor: f64,
    pub em_partitions: usize,
    pub split: SplitKind,
    pub split_seed: u64,
    pub split_train: f64,
    pub split_validation: f64,
    pub split_test: f64,
    /// Minimum reviews for a user to lose one to the all-but-one test set.
    pub min_reviews: usize,
    pub ridge_lambda: f64,
    pub clamp: bool,
    pub corpus_dir: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let em = EmConfig::default();
        let ratios = SplitRatios::default();
        Self {
            k_rows: 5,
            k_cols: 5,
            l_rows: 4,
            l_cols: 4,
            vocab_size: 2000,
            vocab_scoring: Scoring::TfIdf,
            max_tokens: tlcm::corpus::DEFAULT_MAX_TOKENS,
            stopwords: None,
            sigma_u: 3.0,
            sigma_p: 2.0,
            softening: 5.0,
            laplace_m: 1.0,
            som_epochs: SomConfig::default().epochs,
            som_seed: 0,
            som_normalize: SomConfig::default().normalize,
            em_max_iter: em.max_iter,
            em_rel_tol: em.rel_tol,
            em_phi_floor: em.phi_floor,
            em_partitions: em.partitions,
            split: SplitKind::Rating,
            split_seed: 0,
            split_train: ratios.train,
            split_validation: ratios.validation,
            split_test: ratios.test,
            min_reviews: 10,
            ridge_lambda: tlcm::rating::DEFAULT_RIDGE_LAMBDA,
            clamp: false,
            corpus_dir: None,
            model_path: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(Error::from)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> tlcm::Result<()> {
        let positive = [
            ("k_rows", self.k_rows),
            ("k_cols", self.k_cols),
            ("l_rows", self.l_rows),
            ("l_cols", self.l_cols),
            ("vocab_size", self.vocab_size),
            ("max_tokens", self.max_tokens),
            ("som_epochs", self.som_epochs),
            ("em_partitions", self.em_partitions),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        for (name, v) in [
            ("sigma_u", self.sigma_u),
            ("sigma_p", self.sigma_p),
            ("laplace_m", self.laplace_m),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.softening > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "softening must exceed 1, got {}",
                self.softening
            )));
        }
        if !(self.em_rel_tol >= 0.0) || !(self.em_phi_floor >= 0.0) || !(self.ridge_lambda >= 0.0) {
            return Err(Error::InvalidArgument(
                "em_rel_tol, em_phi_floor and ridge_lambda must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k_rows * self.k_cols
    }

    pub fn l(&self) -> usize {
        self.l_rows * self.l_cols
    }

    pub fn normalizer(&self) -> tlcm::Result<Normalizer> {
        let stopwords = match &self.stopwords {
            Some(p) => Stopwords::from_reader(BufReader::new(fs::File::open(p)?))?,
            None => Stopwords::english(),
        };
        Ok(Normalizer::new(stopwords, self.max_tokens))
    }

    pub fn em(&self) -> EmConfig {
        EmConfig {
            max_iter: self.em_max_iter,
            rel_tol: self.em_rel_tol,
            phi_floor: self.em_phi_floor,
            partitions: self.em_partitions,
        }
    }

    pub fn ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.split_train,
            validation: self.split_validation,
            test: self.split_test,
        }
    }

    pub fn som_init(&self) -> SomInitConfig {
        SomInitConfig {
            som: SomConfig {
                epochs: self.som_epochs,
                normalize: self.som_normalize,
                ..SomConfig::default()
            },
            softening: self.softening,
            laplace: self.laplace_m,
            seed: self.som_seed,
        }
    }
}

/// Command-line overrides, one per config field.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "k_rows", alias = "k-rows", global = true)]
    pub k_rows: Option<usize>,
    #[arg(long = "k_cols", alias = "k-cols", global = true)]
    pub k_cols: Option<usize>,
    #[arg(long = "l_rows", alias = "l-rows", global = true)]
    pub l_rows: Option<usize>,
    #[arg(long = "l_cols", alias = "l-cols", global = true)]
    pub l_cols: Option<usize>,
    #[arg(long = "vocab_size", alias = "vocab-size", global = true)]
    pub vocab_size: Option<usize>,
    #[arg(long = "vocab_scoring", alias = "vocab-scoring", global = true)]
    pub vocab_scoring: Option<Scoring>,
    #[arg(long = "max_tokens", alias = "max-tokens", global = true)]
    pub max_tokens: Option<usize>,
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,
    #[arg(long = "sigma_u", alias = "sigma-u", global = true)]
    pub sigma_u: Option<f64>,
    #[arg(long = "sigma_p", alias = "sigma-p", global = true)]
    pub sigma_p: Option<f64>,
    #[arg(long, global = true)]
    pub softening: Option<f64>,
    #[arg(long = "laplace_m", alias = "laplace-m", global = true)]
    pub laplace_m: Option<f64>,
    #[arg(long = "som_epochs", alias = "som-epochs", global = true)]
    pub som_epochs: Option<usize>,
    #[arg(long = "som_seed", alias = "som-seed", global = true)]
    pub som_seed: Option<u64>,
    #[arg(long = "som_normalize", alias = "som-normalize", global = true)]
    pub som_normalize: Option<bool>,
    #[arg(long = "em_max_iter", alias = "em-max-iter", global = true)]
    pub em_max_iter: Option<usize>,
    #[arg(long = "em_rel_tol", alias = "em-rel-tol", global = true)]
    pub em_rel_tol: Option<f64>,
    #[arg(long = "em_phi_floor", alias = "em-phi-floor", global = true)]
    pub em_phi_floor: Option<f64>,
    #[arg(long = "em_partitions", alias = "em-partitions", global = true)]
    pub em_partitions: Option<usize>,
    #[arg(long, global = true)]
    pub split: Option<SplitKind>,
    #[arg(long = "split_seed", alias = "split-seed", global = true)]
    pub split_seed: Option<u64>,
    #[arg(long = "split_train", alias = "split-train", global = true)]
    pub split_train: Option<f64>,
    #[arg(long = "split_validation", alias = "split-validation", global = true)]
    pub split_validation: Option<f64>,
    #[arg(long = "split_test", alias = "split-test", global = true)]
    pub split_test: Option<f64>,
    #[arg(long = "min_reviews", alias = "min-reviews", global = true)]
    pub min_reviews: Option<usize>,
    #[arg(long = "ridge_lambda", alias = "ridge-lambda", global = true)]
    pub ridge_lambda: Option<f64>,
    #[arg(long, global = true)]
    pub clamp: Option<bool>,
    #[arg(
        long = "corpus_dir",
        alias = "corpus-dir",
        alias = "corpus",
        global = true
    )]
    pub corpus_dir: Option<PathBuf>,
    #[arg(
        long = "model_path",
        alias = "model-path",
        alias = "model",
        global = true
    )]
    pub model_path: Option<PathBuf>,
}

impl ConfigArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    c.$f = v;
                }
            )*};
        }
        take!(
            k_rows,
            k_cols,
            l_rows,
            l_cols,
            vocab_size,
            vocab_scoring,
            max_tokens,
            sigma_u,
            sigma_p,
            softening,
            laplace_m,
            som_epochs,
            som_seed,
            som_normalize,
            em_max_iter,
            em_rel_tol,
            em_phi_floor,
            em_partitions,
            split,
            split_seed,
            split_train,
            split_validation,
            split_test,
            min_reviews,
            ridge_lambda,
            clamp
        );
        if self.stopwords.is_some() {
            c.stopwords = self.stopwords.clone();
        }
        if self.corpus_dir.is_some() {
            c.corpus_dir = self.corpus_dir.clone();
        }
        if self.model_path.is_some() {
            c.model_path = self.model_path.clone();
        }
        c.validate()?;
        Ok(c)
    }
}
