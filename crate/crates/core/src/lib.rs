//! Bayesian fault-tree risk assessment.
//!
//! A [`FaultTree`] of AND/OR gates is read as a belief network over its
//! events. Expert pairwise comparisons become beta priors on the primary
//! event probabilities ([`elicitation`]), which are propagated through the
//! tree and updated with complete or partial observations
//! ([`likelihood`], [`inference`]). [`simulation`] runs repeated-update
//! studies on synthetic data.

pub mod beta;
pub mod data;
pub mod elicitation;
pub mod error;
pub mod fault_tree;
pub mod inference;
pub mod likelihood;
pub mod rng;
pub mod simulation;

pub use beta::{beta_mean, beta_quantile, fit_central_interval, BetaParams};
pub use elicitation::{
    build_priors, parse_sessions, reverse, scaled_interval, score, weights, ComparisonLevel, ComparisonMatrix,
    ComparisonSession, Elicitation, ElicitedPrior, ScaledInterval, WeightVector,
};
pub use error::{Error, Result};
pub use fault_tree::{EventId, EventState, FaultTree, Gate, Structure, TreeDocument};
pub use inference::{
    conjugate_oracle, conjugate_top_mean, posterior_importance, posterior_mh, push_forward, sample_prior, summarize,
    MhSettings, PriorSpec, SampleSet, SamplingMethod, Summary,
};
pub use likelihood::{
    is_consistent, loglik_complete, loglik_marginal, loglik_tree, propagate_implications, DatasetLikelihood,
    LikelihoodMethod, LogLikelihood, Observation,
};
pub use simulation::{mask, run_study, simulate_observation, MaskPolicy, Sampler, StudyConfig, StudyReport};
