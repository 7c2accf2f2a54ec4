use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::json;
use tlcm::corpus::{
    ingest_path, preprocess, split_all_but_one, split_rating, Corpus, InputFormat, SplitSpec,
};
use tlcm::em::{fit_em, nll, project_priors};
use tlcm::grid::{channel_noise, make_grid};
use tlcm::inference::{
    class_word_distribution, conditional_class_distribution, oos_posterior, render_grid_json,
    render_grid_text, review_counts, top_words,
};
use tlcm::rating::{
    baseline_global_mean, build_features, evaluate_mse, fit_ridge, rating_examples,
};
use tlcm::som::som_initialize;
use tlcm::{Axis, Error};

use crate::config::{RunConfig, SplitKind};
use crate::model_file::ModelFile;

pub fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> anyhow::Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("no {what} given")).into())
}

pub fn ingest(
    input: &Path,
    out: &Path,
    format: Option<InputFormat>,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    let ingested =
        ingest_path(input, format).with_context(|| format!("ingesting {}", input.display()))?;
    let corpus = preprocess(
        &ingested.reviews,
        &cfg.normalizer()?,
        cfg.vocab_size,
        cfg.vocab_scoring.into(),
    )?;
    corpus.save_dir(out)?;
    log::info!("wrote corpus to {}", out.display());
    print_json(&json!({
        "input_records": ingested.reviews.len() + ingested.skipped,
        "skipped": ingested.skipped,
        "corpus": corpus.summary(),
        "out": out,
    }))
}

pub fn split_for(corpus: &Corpus, cfg: &RunConfig) -> tlcm::Result<SplitSpec> {
    match cfg.split {
        SplitKind::Rating => split_rating(corpus, cfg.ratios(), cfg.split_seed),
        SplitKind::AllButOne => split_all_but_one(corpus, cfg.min_reviews, cfg.split_seed),
    }
}

/// SOM initialization and EM on the configured split, then TLCM-LR on the
/// same train entries.
pub fn train_model(corpus: &Corpus, cfg: &RunConfig) -> anyhow::Result<ModelFile> {
    let split = split_for(corpus, cfg)?;
    log::info!(
        "{} split: {} train, {} validation, {} test",
        cfg.split,
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    let nu = channel_noise(make_grid(cfg.k_rows, cfg.k_cols)?, cfg.sigma_u)?;
    let np = channel_noise(make_grid(cfg.l_rows, cfg.l_cols)?, cfg.sigma_p)?;
    let init =
        som_initialize(corpus, &split.train, &nu, &np, &cfg.som_init())?.into_model(nu, np)?;
    let (params, trace) = fit_em(corpus, &split.train, init, &cfg.em(), |it| {
        eprintln!(
            "{}",
            serde_json::to_string(it).expect("log line serializes")
        );
    })?;
    let examples = rating_examples(corpus, &split.train, &params)?;
    let rating = fit_ridge(&examples, cfg.ridge_lambda)?.with_clamp(cfg.clamp);
    // where the file is written is not part of the model
    let snapshot = RunConfig {
        model_path: None,
        ..cfg.clone()
    };
    Ok(ModelFile::new(
        snapshot,
        corpus.users().to_vec(),
        corpus.products().to_vec(),
        corpus.vocab().words().to_vec(),
        &params,
        trace,
        Some(&rating),
    ))
}

pub fn train(cfg: &RunConfig) -> anyhow::Result<()> {
    let dir = required(&cfg.corpus_dir, "corpus directory (--corpus)")?;
    let out = required(&cfg.model_path, "model path (--model)")?;
    let corpus = Corpus::load_dir(dir)?;
    let model = train_model(&corpus, cfg)?;
    model.save(out)?;
    print_json(&json!({
        "model": out,
        "iterations": model.trace.iterations,
        "converged": model.trace.converged,
        "loglik": model.trace.loglik.last(),
    }))
}

/// The model's id lists must match the corpus exactly.
fn check_compatible(model: &ModelFile, corpus: &Corpus) -> tlcm::Result<()> {
    if model.vocab != corpus.vocab().words() {
        return Err(Error::Dimension(
            "corpus vocabulary differs from the model's".into(),
        ));
    }
    if model.users != corpus.users() || model.products != corpus.products() {
        return Err(Error::Dimension(
            "corpus users or products differ from the model's".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Protocol {
    NllAllButOne,
    MseRating,
}

pub fn eval(model_path: &Path, corpus_dir: &Path, protocol: Protocol) -> anyhow::Result<()> {
    let model = ModelFile::load(model_path)?;
    let corpus = Corpus::load_dir(corpus_dir)?;
    check_compatible(&model, &corpus)?;
    let cfg = &model.config;
    let wanted = match protocol {
        Protocol::NllAllButOne => SplitKind::AllButOne,
        Protocol::MseRating => SplitKind::Rating,
    };
    if cfg.split != wanted {
        return Err(Error::Dimension(format!(
            "the model was trained on a {} split, the protocol needs {wanted}",
            cfg.split
        ))
        .into());
    }
    // the split is a pure function of corpus, config and seed
    let split = split_for(&corpus, cfg)?;
    let params = model.params()?;
    match protocol {
        Protocol::NllAllButOne => {
            let value = nll(&corpus, &split.test, &params)?;
            print_json(
                &json!({"protocol": "nll-all-but-one", "value": value, "count": split.test.len()}),
            )
        }
        Protocol::MseRating => {
            let train = rating_examples(&corpus, &split.train, &params)?;
            let test = rating_examples(&corpus, &split.test, &params)?;
            let lr = fit_ridge(&train, cfg.ridge_lambda)?.with_clamp(cfg.clamp);
            let result = evaluate_mse(&lr, &test)?;
            let baseline = evaluate_mse(&baseline_global_mean(&train)?, &test)?;
            print_json(&json!({
                "protocol": "mse-rating",
                "value": result.mse,
                "count": result.count,
                "baseline_mse": baseline.mse,
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn grid(
    model_path: &Path,
    axis: Axis,
    n: usize,
    condition: Option<usize>,
    format: ReportFormat,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let model = ModelFile::load(model_path)?;
    let params = model.params()?;
    let dist = match condition {
        None => class_word_distribution(&params, axis),
        Some(c) => conditional_class_distribution(&params, axis, c)
            .map_err(|e| Error::Query(format!("bad conditioning class: {e}")))?,
    };
    let vocab = tlcm::corpus::Vocabulary::new(model.vocab.clone())?;
    let report = top_words(&dist, &vocab, n.min(vocab.len()))?;
    let bytes = match format {
        ReportFormat::Text => render_grid_text(&report).into_bytes(),
        ReportFormat::Json => {
            let mut b = render_grid_json(&report);
            b.push(b'\n');
            b
        }
    };
    match out {
        Some(p) => {
            fs::write(p, &bytes).map_err(Error::from)?;
            print_json(&json!({"report": p, "classes": report.classes.len()}))
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

pub fn oos(model_path: &Path, product: &str, review: &str, top: usize) -> anyhow::Result<()> {
    let model = ModelFile::load(model_path)?;
    let params = model.params()?;
    let p = model
        .products
        .iter()
        .position(|x| x == product)
        .ok_or_else(|| Error::Query(format!("unknown product {product:?}")))?;
    let vocab = tlcm::corpus::Vocabulary::new(model.vocab.clone())?;
    let tokens = model.config.normalizer()?.normalize(review);
    let counts = review_counts(&tokens, &vocab);
    let post = oos_posterior(&counts, p, &params, &project_priors(&params))?;
    let best = post.argmax();
    let report = top_words(
        &class_word_distribution(&params, Axis::User),
        &vocab,
        top.min(vocab.len()),
    )?;
    let class = &report.classes[best];
    print_json(&json!({
        "product": product,
        "tokens_used": counts.iter().map(|&(_, c)| c as u64).sum::<u64>(),
        "posterior": post.posterior,
        "argmax": best,
        "argmax_cell": [class.row, class.col],
        "log_evidence": post.log_evidence,
        "top_words": class.words,
    }))
}

pub fn predict(model_path: &Path, user: &str, product: &str) -> anyhow::Result<()> {
    let model = ModelFile::load(model_path)?;
    let params = model.params()?;
    let rating = model
        .rating_model()?
        .ok_or_else(|| Error::InvalidArgument("the model file has no rating regression".into()))?;
    let u = model
        .users
        .iter()
        .position(|x| x == user)
        .ok_or_else(|| Error::Query(format!("unknown user {user:?}")))?;
    let p = model
        .products
        .iter()
        .position(|x| x == product)
        .ok_or_else(|| Error::Query(format!("unknown product {product:?}")))?;
    let value = rating.predict(&build_features(u, p, &params)?)?;
    print_json(&json!({"user": user, "product": product, "rating": value}))
}
