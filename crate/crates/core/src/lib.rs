//! Probabilistic latent tensor factorization (PLTF) for predicting link
//! patterns in multi-relational networks.
//!
//! A network of `N` objects connected by `T` relation types is stored as a
//! partially observed binary `N x N x T` tensor. Each ordered object pair
//! `(i, j)` owns a tube fiber of length `T`, its *link pattern*. The model
//! approximates the tensor with a rank-`D` CP decomposition
//!
//! ```text
//! Y[i, j, t] ~ N( sum_d U[i, d] * V[j, d] * R[t, d], 1 / alpha )
//! ```
//!
//! and is trained either by MAP estimation with Polak-Ribiere nonlinear
//! conjugate gradient ([`map`]) or by a conjugate hierarchical Bayesian Gibbs
//! sampler ([`bayes`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, experiment
//! orchestration and the command line live in the companion `pltf` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bayes;
mod error;
pub mod map;
mod matrix;
pub mod model;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::FactorMatrix;
pub use model::{logistic, LatentFactors, ModelConfig};
pub use tensor::{Entry, FiberKey, LinkPattern, LinkValue, RelationalTensor, SliceView};
