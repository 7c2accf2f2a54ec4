//! The latent class model proper: likelihood, E-step posteriors, closed-form
//! M-step, the EM driver and a sampler for the generative process.

mod params;
mod sample;
mod step;

pub use params::{
    log_likelihood, nll, project_priors, review_log_probability, word_probability, ModelParams,
    ProjectedPriors,
};
pub use sample::{sample_corpus, synthetic_rating};
pub use step::{
    accumulate, channel_kernel, e_step, em_iteration, fit_em, m_step, posterior_y, posterior_z,
    EmConfig, EmTrace, IterationLog, SufficientStats, DEFAULT_PHI_FLOOR,
};
