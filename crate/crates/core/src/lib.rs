//! # dragmc
//!
//! Metropolis samplers for targets `π(x, y) ∝ exp(−E(x, y))` whose variables
//! split into *slow* ones (`x`, expensive to change) and *fast* ones (`y`,
//! cheap to re-evaluate once the slow part has been prepared).
//!
//! The centrepiece is [`kernels::drag_step`]: it proposes a large move in
//! `x` and drags `y` through a ladder of intermediate distributions
//!
//! ```text
//! ρ_i(y) ∝ exp(−((1 − i/n)·E(x, y) + (i/n)·E(x*, y))),   i = 0..n
//! ```
//!
//! before accepting the endpoint jointly. Each outer step costs a single slow
//! preparation regardless of `n`.
//!
//! Baselines (joint, single-variable and marginal Metropolis), autocorrelation
//! diagnostics, the two reference test problems and an exact discrete
//! transition-matrix oracle are included, along with the experiment harness
//! used by the `dragmc` command-line tool.
//!
//! ```rust
//! use dragmc::kernels::{drag_step, DragConfig, GaussianWalkProposal, KernelStats};
//! use dragmc::model::{ChainState, FastVector, ModelHandle, SlowVector};
//! use dragmc::testbed::Test1Model;
//! use dragmc::seeded_rng;
//!
//! let model = ModelHandle::new(Test1Model::new());
//! let mut state = ChainState::new(
//!     &model,
//!     SlowVector::new(vec![0.0]).unwrap(),
//!     FastVector::new(vec![0.0]).unwrap(),
//! )
//! .unwrap();
//! let outer = GaussianWalkProposal::new(vec![1.0]).unwrap();
//! let cfg = DragConfig::new(20, GaussianWalkProposal::new(vec![0.2]).unwrap()).unwrap();
//! let mut rng = seeded_rng(7);
//! let mut stats = KernelStats::default();
//! for _ in 0..100 {
//!     state = drag_step(state, &outer, &cfg, &model, &mut rng, &mut stats).unwrap();
//! }
//! // one slow preparation per outer proposal, plus the initial state
//! assert_eq!(model.eval_counts().slow_preparations, stats.outer_proposals + 1);
//! ```

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod model;
pub mod testbed;

pub use error::{Error, Result};

/// Generator used by every kernel and harness run.
pub type SamplerRng = rand_chacha::ChaCha8Rng;

/// Seeds the generator used throughout the crate.
pub fn seeded_rng(seed: u64) -> SamplerRng {
    use rand::SeedableRng;
    SamplerRng::seed_from_u64(seed)
}
