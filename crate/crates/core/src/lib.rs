//! Stochastic combinatorial semi-bandits with linear generalization.
//!
//! The learner repeatedly picks a feasible set `A^t` of at most `K` items,
//! observes the weight of every chosen item, and tries to maximize the
//! summed weight. Item means are modelled as `w̄(e) ≈ ⟨φ_e, θ*⟩`, so what is
//! learned is the `d`-dimensional coefficient vector rather than `L`
//! separate means.
//!
//! - [`model`]: items, features, actions, feedback, `f(A, w)`.
//! - [`belief`]: Gaussian belief with rank-1 Kalman updates.
//! - [`oracles`]: grid longest path, top-K, partition quotas, γ-approximation.
//! - [`agents`]: CombLinTS, CombLinUCB, CombUCB1, CombTS.
//! - [`environments`]: coherent Gaussian and Bernoulli truths, CSV tables.
//! - [`metrics`]: regret, per-step return, width bound.
//! - [`harness`]: seeded Monte-Carlo runner, sweeps, result files.

pub mod agents;
pub mod belief;
pub mod environments;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod oracles;
pub mod rng;

pub use error::{Error, Result};
pub use rng::SimRng;
