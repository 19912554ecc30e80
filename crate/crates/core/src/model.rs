//! The split-evaluation energy contract.
//!
//! A model separates the energy `E(x, y)` into a *slow* preparation that
//! depends only on `x` and a *fast* evaluation that combines the prepared
//! quantities with `y`. [`ModelHandle`] wraps a model, validates inputs and
//! counts both kinds of work so that samplers can be compared by cost.

use std::cell::Cell;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::{Error, Result};

/// Inline storage for low-dimensional coordinate vectors.
pub type Coords = SmallVec<[f64; 4]>;

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Input(format!("{what} must have at least one entry")));
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Input(format!("{what}[{i}] = {v} is not finite")));
    }
    Ok(())
}

macro_rules! coord_vector {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Coords);

        impl $name {
            pub fn new(values: impl Into<Vec<f64>>) -> Result<Self> {
                let values = values.into();
                check_finite(&values, $what)?;
                Ok(Self(Coords::from_vec(values)))
            }

            /// Wraps coordinates produced by arithmetic on finite inputs.
            pub(crate) fn from_coords(values: Coords) -> Self {
                debug_assert!(values.iter().all(|v| v.is_finite()));
                Self(values)
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
        }

        impl std::ops::Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }
    };
}

coord_vector!(
    /// Values of the slow variables `x`.
    SlowVector,
    "slow vector"
);
coord_vector!(
    /// Values of the fast variables `y`.
    FastVector,
    "fast vector"
);

/// An energy function split into a slow preparation and a fast evaluation.
///
/// `energy(&prepare(x), y)` must be a pure function of `(x, y)`: the same
/// inputs give bit-identical results every time.
pub trait EnergyModel {
    /// Intermediate quantities computed from the slow variables.
    type Payload: fmt::Debug + Send + Sync;

    fn slow_dim(&self) -> usize;

    fn fast_dim(&self) -> usize;

    /// The expensive computation. Called once per distinct slow vector.
    fn prepare(&self, x: &[f64]) -> Self::Payload;

    /// The cheap computation of `E(x, y)` from a prepared payload.
    fn energy(&self, payload: &Self::Payload, y: &[f64]) -> f64;
}

/// Work counters of a [`ModelHandle`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub slow_preparations: u64,
    pub fast_evaluations: u64,
}

#[derive(Debug)]
struct ContextInner<P> {
    payload: P,
    x: SlowVector,
    index: u64,
    model_id: u64,
}

/// Prepared quantities for one slow vector. Immutable and cheap to clone,
/// so a kernel can hold the contexts for `x` and `x*` at the same time.
#[derive(Debug)]
pub struct SlowContext<P> {
    inner: Arc<ContextInner<P>>,
}

impl<P> Clone for SlowContext<P> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<P> SlowContext<P> {
    /// The slow vector this context was built from.
    pub fn x(&self) -> &SlowVector {
        &self.inner.x
    }

    pub fn payload(&self) -> &P {
        &self.inner.payload
    }

    /// Position of this context in its model's preparation sequence,
    /// starting at 0.
    pub fn index(&self) -> u64 {
        self.inner.index
    }
}

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(0);

/// A model together with its work counters.
///
/// Counters live on the handle, so separate chains need separate handles.
/// The handle is `Send` but not `Sync`.
pub struct ModelHandle<M: EnergyModel> {
    model: M,
    id: u64,
    slow_preparations: Cell<u64>,
    fast_evaluations: Cell<u64>,
    slow_delay: Duration,
    delay_spent: Cell<Duration>,
}

impl<M: EnergyModel + fmt::Debug> fmt::Debug for ModelHandle<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelHandle")
            .field("model", &self.model)
            .field("counts", &self.eval_counts())
            .field("slow_delay", &self.slow_delay)
            .finish()
    }
}

impl<M: EnergyModel> ModelHandle<M> {
    pub fn new(model: M) -> Self {
        Self {
            model,
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
            slow_preparations: Cell::new(0),
            fast_evaluations: Cell::new(0),
            slow_delay: Duration::ZERO,
            delay_spent: Cell::new(Duration::ZERO),
        }
    }

    /// Adds an artificial busy-wait to every slow preparation, to emulate an
    /// expensive model.
    pub fn with_slow_delay(mut self, delay: Duration) -> Self {
        self.slow_delay = delay;
        self
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn slow_dim(&self) -> usize {
        self.model.slow_dim()
    }

    pub fn fast_dim(&self) -> usize {
        self.model.fast_dim()
    }

    pub fn slow_delay(&self) -> Duration {
        self.slow_delay
    }

    /// Total time spent in the artificial delay so far.
    pub fn delay_spent(&self) -> Duration {
        self.delay_spent.get()
    }

    pub fn prepare_slow(&self, x: &SlowVector) -> Result<SlowContext<M::Payload>> {
        if x.len() != self.model.slow_dim() {
            return Err(Error::Config(format!(
                "slow vector has dimension {}, model expects {}",
                x.len(),
                self.model.slow_dim()
            )));
        }
        check_finite(x, "slow vector")?;

        let start = Instant::now();
        let payload = self.model.prepare(x);
        if !self.slow_delay.is_zero() {
            while start.elapsed() < self.slow_delay {
                std::hint::spin_loop();
            }
            self.delay_spent
                .set(self.delay_spent.get() + self.slow_delay);
        }

        let index = self.slow_preparations.get();
        self.slow_preparations.set(index + 1);
        Ok(SlowContext {
            inner: Arc::new(ContextInner {
                payload,
                x: x.clone(),
                index,
                model_id: self.id,
            }),
        })
    }

    pub fn energy(&self, ctx: &SlowContext<M::Payload>, y: &[f64]) -> Result<f64> {
        if ctx.inner.model_id != self.id {
            return Err(Error::Input(
                "slow context was prepared by a different model handle".into(),
            ));
        }
        if y.len() != self.model.fast_dim() {
            return Err(Error::Input(format!(
                "fast vector has dimension {}, model expects {}",
                y.len(),
                self.model.fast_dim()
            )));
        }
        self.fast_evaluations.set(self.fast_evaluations.get() + 1);
        Ok(self.model.energy(&ctx.inner.payload, y))
    }

    pub fn eval_counts(&self) -> EvalCounts {
        EvalCounts {
            slow_preparations: self.slow_preparations.get(),
            fast_evaluations: self.fast_evaluations.get(),
        }
    }
}

/// Current point of a joint chain over `(x, y)`.
///
/// The state owns the context prepared for its `x` and the cached energy
/// `E(x, y)`, so moving only `y` never needs a slow preparation.
#[derive(Debug)]
pub struct ChainState<P> {
    ctx: SlowContext<P>,
    y: FastVector,
    energy: f64,
}

impl<P> Clone for ChainState<P> {
    fn clone(&self) -> Self {
        Self {
            ctx: self.ctx.clone(),
            y: self.y.clone(),
            energy: self.energy,
        }
    }
}

impl<P> ChainState<P> {
    /// Builds a state, spending one slow preparation and one fast evaluation.
    pub fn new<M>(model: &ModelHandle<M>, x: SlowVector, y: FastVector) -> Result<Self>
    where
        M: EnergyModel<Payload = P>,
    {
        let ctx = model.prepare_slow(&x)?;
        let energy = model.energy(&ctx, &y)?;
        if !energy.is_finite() {
            return Err(Error::Input(format!(
                "initial state has non-finite energy {energy}"
            )));
        }
        Ok(Self { ctx, y, energy })
    }

    pub(crate) fn from_parts(ctx: SlowContext<P>, y: FastVector, energy: f64) -> Self {
        Self { ctx, y, energy }
    }

    pub fn x(&self) -> &SlowVector {
        self.ctx.x()
    }

    pub fn y(&self) -> &FastVector {
        &self.y
    }

    pub fn ctx(&self) -> &SlowContext<P> {
        &self.ctx
    }

    /// `E(x, y)` for the current point.
    pub fn energy(&self) -> f64 {
        self.energy
    }
}
