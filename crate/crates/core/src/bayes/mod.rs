//! Hierarchical Bayesian PLTF trained by Gibbs sampling.
//!
//! Rows of `U`, `V` and `R` have Gaussian priors whose means and precision
//! matrices carry Gaussian-Wishart hyperpriors; the noise precision `alpha`
//! has a Gamma prior. Every conditional is conjugate under the identity link,
//! so a sweep draws, in order: `alpha`, the three `(mu, Lambda)` pairs, then
//! the rows of `U`, `V` and `R`, each block conditioned on the newest values
//! of the others.

mod chain;
mod conditionals;
pub mod dist;
mod index;
mod priors;

pub use chain::{
    gibbs_sweep, random_factors, run_chain, run_chain_with, ChainConfig, ChainInit, ChainState,
    PredictiveAccumulator, SampleSet, SweepOptions,
};
pub use conditionals::{
    alpha_posterior, hyper_posterior, row_posterior, sample_alpha, sample_factor_hypers,
    sample_r_rows, sample_rows, sample_u_rows, sample_v_rows, GammaPosterior, GaussianWishart,
    RowPosterior,
};
pub use index::{Block, ObservationIndex};
pub use priors::{FactorHyperState, HyperPriors};
