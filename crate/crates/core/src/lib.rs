//! Bayesian inference when observations are uncertain.
//!
//! Three ways of conditioning a base model `p(y, x) = p(y | x) p(x)` on an
//! uncertain statement about y are implemented side by side:
//!
//! * Jeffrey's rule, for a distribution `q(y | zeta)` caused by external evidence;
//! * virtual evidence, for a likelihood `q(zeta | y)`;
//! * distributional evidence, for a distribution `q(y)` asserted given the latent.
//!
//! [`model::dispatch_infer`] picks the rule from the evidence type. Closed forms
//! live in [`gaussian`] and [`discrete`], sampling engines in [`montecarlo`], and
//! the necessary conditions for Jeffrey's rule to be consistent with the base
//! model in [`consistency`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consistency;
pub mod density;
pub mod discrete;
pub mod error;
pub mod gaussian;
pub mod model;
pub mod montecarlo;
pub mod seed;

pub use density::{Categorical, Density, Normal, PointMass, PositiveNormal, Support};
pub use discrete::{JointTable, LikelihoodRatios};
pub use error::{Result, UevError};
pub use gaussian::{BallDrop, GaussianChain, GaussianParams};
pub use model::{dispatch_infer, BaseModel, Evidence, ModelFamily, Posterior, PosteriorTable, VirtualLikelihood};
pub use montecarlo::{DistributionalMode, Engine, EngineConfig, McmcRun, WeightedSamples};
