//! Reference problems with known answers.
//!
//! [`Test1Model`] has energy `x² + 50(1+x²)²(y − sin x)²`: `y | x` is normal
//! with mean `sin x` and sd `0.1/(1+x²)`, and the marginal energy of `x` is
//! `x² + ln(1+x²)`. [`Test2Model`] adds a second fast variable `z` with
//! `12.5(z − y)²`, leaving the `(x, y)` and `x` marginals unchanged.
//!
//! In both, `sin x` and `(1+x²)²` are the designated slow work and are
//! computed only in `prepare`.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::EnergyModel;
use crate::Error;

mod discrete;
pub mod oracle;

pub use discrete::{
    discrete_drag_transition_matrix, fixed_y_metropolis_matrix, max_balance_violation, DiscreteModel,
    GridProposal, TransitionMatrix,
};

/// Closed form of the first test energy, in the same operation order as
/// the cached evaluation of [`Test1Model`].
pub fn test1_energy(x: f64, y: f64) -> f64 {
    let q = 1.0 + x * x;
    let r = y - x.sin();
    x * x + (50.0 * (q * q)) * (r * r)
}

/// Closed form of the second test energy; `yz = (y, z)`.
pub fn test2_energy(x: f64, yz: (f64, f64)) -> f64 {
    let (y, z) = yz;
    let d = z - y;
    test1_energy(x, y) + 12.5 * (d * d)
}

/// Marginal energy of `x` shared by both test problems.
pub fn test1_marginal_energy(x: f64) -> f64 {
    x * x + (x * x).ln_1p()
}

/// Standard deviation of `y` given `x`.
pub fn test1_conditional_sd(x: f64) -> f64 {
    0.1 / (1.0 + x * x)
}

/// Draws `y ~ N(sin x, (0.1/(1+x²))²)`.
pub fn test1_conditional_sample<R: Rng + ?Sized>(x: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    x.sin() + test1_conditional_sd(x) * z
}

/// Slow quantities of the test problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineCache {
    pub x_sq: f64,
    pub sin_x: f64,
    /// `50(1+x²)²`
    pub scale: f64,
}

fn sine_cache(x: f64) -> SineCache {
    let q = 1.0 + x * x;
    SineCache {
        x_sq: x * x,
        sin_x: x.sin(),
        scale: 50.0 * (q * q),
    }
}

#[inline]
fn cached_test1(c: &SineCache, y: f64) -> f64 {
    let r = y - c.sin_x;
    c.x_sq + c.scale * (r * r)
}

#[derive(Debug, Default)]
pub struct Test1Model {
    sine_evals: Cell<u64>,
}

impl Test1Model {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of times `sin` has been evaluated.
    pub fn sine_evals(&self) -> u64 {
        self.sine_evals.get()
    }
}

impl EnergyModel for Test1Model {
    type Payload = SineCache;

    fn slow_dim(&self) -> usize {
        1
    }

    fn fast_dim(&self) -> usize {
        1
    }

    fn prepare(&self, x: &[f64]) -> SineCache {
        self.sine_evals.set(self.sine_evals.get() + 1);
        sine_cache(x[0])
    }

    fn energy(&self, c: &SineCache, y: &[f64]) -> f64 {
        cached_test1(c, y[0])
    }
}

#[derive(Debug, Default)]
pub struct Test2Model {
    sine_evals: Cell<u64>,
}

impl Test2Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sine_evals(&self) -> u64 {
        self.sine_evals.get()
    }
}

impl EnergyModel for Test2Model {
    type Payload = SineCache;

    fn slow_dim(&self) -> usize {
        1
    }

    fn fast_dim(&self) -> usize {
        2
    }

    fn prepare(&self, x: &[f64]) -> SineCache {
        self.sine_evals.set(self.sine_evals.get() + 1);
        sine_cache(x[0])
    }

    fn energy(&self, c: &SineCache, yz: &[f64]) -> f64 {
        let d = yz[1] - yz[0];
        cached_test1(c, yz[0]) + 12.5 * (d * d)
    }
}

/// Problems selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Test1,
    Test2,
    Discrete,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::Test1, Problem::Test2, Problem::Discrete];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Test1 => "test1",
            Problem::Test2 => "test2",
            Problem::Discrete => "discrete",
        }
    }

    pub fn slow_dim(self) -> usize {
        1
    }

    pub fn fast_dim(self) -> usize {
        match self {
            Problem::Test1 | Problem::Discrete => 1,
            Problem::Test2 => 2,
        }
    }

    /// Closed-form marginal energy of the slow variables, where known.
    pub fn marginal_energy(self) -> Option<fn(&[f64]) -> f64> {
        match self {
            Problem::Test1 | Problem::Test2 => Some(|x: &[f64]| test1_marginal_energy(x[0])),
            Problem::Discrete => None,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown problem {s:?} (expected test1, test2 or discrete)")))
    }
}
