//! Metropolis kernels over split slow/fast models.
//!
//! All proposals are symmetric, so the Hastings correction `S(x|x*)/S(x*|x)`
//! is identically one and never computed. Acceptance is decided in log space
//! as `ln(u) < log_ratio` with `u` uniform on the open interval `(0, 1)`.
//!
//! Random draws happen in a fixed order within one step: outer proposal
//! draws first, then for each ladder level (in order) the inner proposal
//! draws followed by the inner accept draw, then the outer accept draw.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::{ChainState, Coords, EnergyModel, FastVector, ModelHandle, SlowContext, SlowVector};
use crate::{Error, Result};

/// A symmetric proposal `S(x*|x) = S(x|x*)`.
pub trait SymmetricProposal {
    fn dim(&self) -> usize;

    fn propose<R: Rng + ?Sized>(&self, current: &[f64], rng: &mut R) -> Coords;
}

/// Random walk with independent Gaussian increments per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianWalkProposal {
    sds: Vec<f64>,
}

impl GaussianWalkProposal {
    pub fn new(sds: Vec<f64>) -> Result<Self> {
        if sds.is_empty() {
            return Err(Error::Config("proposal needs at least one coordinate".into()));
        }
        if let Some(sd) = sds.iter().find(|sd| !(sd.is_finite() && **sd > 0.0)) {
            return Err(Error::Config(format!(
                "proposal standard deviations must be positive and finite, got {sd}"
            )));
        }
        Ok(Self { sds })
    }

    /// Same standard deviation on every coordinate.
    pub fn isotropic(dim: usize, sd: f64) -> Result<Self> {
        Self::new(vec![sd; dim])
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }
}

impl SymmetricProposal for GaussianWalkProposal {
    fn dim(&self) -> usize {
        self.sds.len()
    }

    fn propose<R: Rng + ?Sized>(&self, current: &[f64], rng: &mut R) -> Coords {
        debug_assert_eq!(current.len(), self.sds.len());
        current
            .iter()
            .zip(&self.sds)
            .map(|(c, sd)| {
                let z: f64 = rng.sample(StandardNormal);
                c + sd * z
            })
            .collect()
    }
}

/// Draws `current + N(0, diag(sds²))`, one normal draw per coordinate.
pub fn propose_walk<R: Rng + ?Sized>(
    current: &[f64],
    proposal: &GaussianWalkProposal,
    rng: &mut R,
) -> Result<Coords> {
    check_dim("proposal", proposal.dim(), current.len())?;
    Ok(proposal.propose(current, rng))
}

/// Metropolis test in log space. Always consumes exactly one uniform draw.
pub fn metropolis_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> Result<bool> {
    let u: f64 = rng.sample(Open01);
    if log_ratio.is_nan() {
        return Err(Error::NanLogRatio);
    }
    Ok(u.ln() < log_ratio)
}

/// Unnormalized log density of the `i`-th ladder distribution at a point
/// `y` where `e_x = E(x, y)` and `e_xstar = E(x*, y)`:
/// `−((1 − i/n)·e_x + (i/n)·e_xstar)`.
pub fn log_rho_i(i: usize, n: usize, e_x: f64, e_xstar: f64) -> Result<f64> {
    if n == 0 || i > n {
        return Err(Error::Input(format!(
            "ladder level {i} out of range for n = {n}"
        )));
    }
    Ok(ladder_log_density(i, n, e_x, e_xstar))
}

// Written so that swapping (i, e_x, e_xstar) for (n − i, e_xstar, e_x) gives a
// bit-identical result. The endpoints never multiply an energy by zero, so an
// infinite energy on the unused side cannot produce NaN.
#[inline]
fn ladder_log_density(i: usize, n: usize, e_x: f64, e_xstar: f64) -> f64 {
    if i == 0 {
        -e_x
    } else if i == n {
        -e_xstar
    } else {
        let (w_x, w_xstar) = ((n - i) as f64, i as f64);
        -((w_x * e_x + w_xstar * e_xstar) / n as f64)
    }
}

/// Log acceptance ratio of a dragging update from the energies along the
/// path: `e_x[i] = E(x, y_i)`, `e_xstar[i] = E(x*, y_i)` for `i = 0..n`.
/// Equal to the mean of `e_x` minus the mean of `e_xstar`.
pub fn drag_log_accept_ratio(e_x: &[f64], e_xstar: &[f64]) -> Result<f64> {
    if e_x.len() != e_xstar.len() {
        return Err(Error::Input(format!(
            "energy lists differ in length ({} vs {})",
            e_x.len(),
            e_xstar.len()
        )));
    }
    if e_x.is_empty() {
        return Err(Error::Input("energy lists are empty".into()));
    }
    let mut acc = LadderSums::default();
    for (a, b) in e_x.iter().zip(e_xstar) {
        acc.push(*a, *b);
    }
    Ok(acc.log_ratio())
}

// Running sum of E(x, y_i) − E(x*, y_i). Both the list form above and the
// streaming form inside `drag_step` go through this.
#[derive(Debug, Default, Clone, Copy)]
struct LadderSums {
    diff: f64,
    len: usize,
}

impl LadderSums {
    #[inline]
    fn push(&mut self, e_x: f64, e_xstar: f64) {
        self.diff += e_x - e_xstar;
        self.len += 1;
    }

    #[inline]
    fn log_ratio(&self) -> f64 {
        self.diff / self.len as f64
    }
}

/// Settings of the dragging kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragConfig<Q = GaussianWalkProposal> {
    /// Number of ladder segments; `n − 1` intermediate distributions are
    /// visited. `n = 1` is a plain Metropolis update of `x` with `y` fixed.
    pub n: usize,
    pub inner_proposal: Q,
    pub inner_steps_per_level: usize,
}

impl<Q: SymmetricProposal> DragConfig<Q> {
    pub fn new(n: usize, inner_proposal: Q) -> Result<Self> {
        Self::with_inner_steps(n, inner_proposal, 1)
    }

    pub fn with_inner_steps(n: usize, inner_proposal: Q, inner_steps_per_level: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("drag ladder needs n >= 1".into()));
        }
        if inner_steps_per_level == 0 {
            return Err(Error::Config("inner_steps_per_level must be >= 1".into()));
        }
        Ok(Self {
            n,
            inner_proposal,
            inner_steps_per_level,
        })
    }
}

/// Proposal and acceptance counters.
///
/// For the dragging kernel "outer" is the move in `x` and "inner" the ladder
/// updates of `y`. The single-variable kernel counts `x` updates as outer and
/// `y` updates as inner.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelStats {
    pub outer_proposals: u64,
    pub outer_accepts: u64,
    pub inner_proposals: u64,
    pub inner_accepts: u64,
}

impl KernelStats {
    fn outer(&mut self, accepted: bool) {
        self.outer_proposals += 1;
        self.outer_accepts += u64::from(accepted);
    }

    fn inner(&mut self, accepted: bool) {
        self.inner_proposals += 1;
        self.inner_accepts += u64::from(accepted);
    }
}

/// A fast-variable point on the ladder with both of its energies.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderPoint {
    pub y: FastVector,
    /// `E(x, y)`
    pub e_x: f64,
    /// `E(x*, y)`
    pub e_xstar: f64,
}

fn check_dim(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Config(format!(
            "{what} has dimension {got}, expected {want}"
        )));
    }
    Ok(())
}

/// Metropolis updates of `y` leaving the ladder distribution `ρ_i` invariant.
///
/// Each proposal costs two fast evaluations; the energies of the current
/// point are carried in `point`. The same inner proposal is used at every
/// level, which makes the update under `(x, x*)` at level `i` identical to
/// the update under `(x*, x)` at level `n − i`.
#[allow(clippy::too_many_arguments)]
pub fn inner_transition<M, Q, R>(
    i: usize,
    n: usize,
    point: LadderPoint,
    ctx_x: &SlowContext<M::Payload>,
    ctx_xstar: &SlowContext<M::Payload>,
    cfg: &DragConfig<Q>,
    model: &ModelHandle<M>,
    rng: &mut R,
    stats: &mut KernelStats,
) -> Result<LadderPoint>
where
    M: EnergyModel,
    Q: SymmetricProposal,
    R: Rng + ?Sized,
{
    if i == 0 || i >= n {
        return Err(Error::Input(format!(
            "inner transitions exist only for levels 1..{n}, got {i}"
        )));
    }
    check_dim("inner proposal", cfg.inner_proposal.dim(), model.fast_dim())?;

    let mut point = point;
    let mut current = ladder_log_density(i, n, point.e_x, point.e_xstar);
    for _ in 0..cfg.inner_steps_per_level {
        let y_new = cfg.inner_proposal.propose(&point.y, rng);
        let e_x = model.energy(ctx_x, &y_new)?;
        let e_xstar = model.energy(ctx_xstar, &y_new)?;
        let proposed = ladder_log_density(i, n, e_x, e_xstar);
        let accepted = metropolis_accept(proposed - current, rng)?;
        stats.inner(accepted);
        if accepted {
            point = LadderPoint {
                y: FastVector::from_coords(y_new),
                e_x,
                e_xstar,
            };
            current = proposed;
        }
    }
    Ok(point)
}

/// One dragging update: propose `x*`, drag `y` through the `n − 1`
/// intermediate distributions, then accept `(x*, y_{n−1})` with log
/// probability `min(0, mean_i E(x, y_i) − mean_i E(x*, y_i))`.
///
/// Exactly one slow preparation (for `x*`) is made per call.
pub fn drag_step<M, O, Q, R>(
    state: ChainState<M::Payload>,
    outer: &O,
    cfg: &DragConfig<Q>,
    model: &ModelHandle<M>,
    rng: &mut R,
    stats: &mut KernelStats,
) -> Result<ChainState<M::Payload>>
where
    M: EnergyModel,
    O: SymmetricProposal,
    Q: SymmetricProposal,
    R: Rng + ?Sized,
{
    check_dim("outer proposal", outer.dim(), model.slow_dim())?;

    let x_star = SlowVector::from_coords(outer.propose(state.x(), rng));
    let ctx_star = model.prepare_slow(&x_star)?;

    let mut point = LadderPoint {
        y: state.y().clone(),
        e_x: state.energy(),
        e_xstar: model.energy(&ctx_star, state.y())?,
    };
    let mut sums = LadderSums::default();
    sums.push(point.e_x, point.e_xstar);

    if point.e_xstar == f64::INFINITY {
        // every path through y_0 has zero weight under x*
        let _ = metropolis_accept(f64::NEG_INFINITY, rng)?;
        stats.outer(false);
        return Ok(state);
    }

    for i in 1..cfg.n {
        point = inner_transition(i, cfg.n, point, state.ctx(), &ctx_star, cfg, model, rng, stats)?;
        sums.push(point.e_x, point.e_xstar);
    }

    let accepted = metropolis_accept(sums.log_ratio(), rng)?;
    stats.outer(accepted);
    if accepted {
        Ok(ChainState::from_parts(ctx_star, point.y, point.e_xstar))
    } else {
        Ok(state)
    }
}

/// Random-walk Metropolis on `(x, y)` together; `proposal` covers the slow
/// coordinates followed by the fast ones.
pub fn joint_step<M, O, R>(
    state: ChainState<M::Payload>,
    proposal: &O,
    model: &ModelHandle<M>,
    rng: &mut R,
    stats: &mut KernelStats,
) -> Result<ChainState<M::Payload>>
where
    M: EnergyModel,
    O: SymmetricProposal,
    R: Rng + ?Sized,
{
    let d_slow = model.slow_dim();
    check_dim("joint proposal", proposal.dim(), d_slow + model.fast_dim())?;

    let mut current: Coords = state.x().iter().copied().collect();
    current.extend(state.y().iter().copied());
    let proposed = proposal.propose(&current, rng);

    let x_star = SlowVector::from_coords(proposed[..d_slow].iter().copied().collect());
    let y_star = FastVector::from_coords(proposed[d_slow..].iter().copied().collect());
    let ctx_star = model.prepare_slow(&x_star)?;
    let e_star = model.energy(&ctx_star, &y_star)?;

    let accepted = metropolis_accept(state.energy() - e_star, rng)?;
    stats.outer(accepted);
    if accepted {
        Ok(ChainState::from_parts(ctx_star, y_star, e_star))
    } else {
        Ok(state)
    }
}

/// A Metropolis update of `x` alone (counted as outer) followed by one of
/// the fast vector `y` alone (counted as inner). Only the first needs a slow
/// preparation.
pub fn single_var_step<M, OX, OY, R>(
    state: ChainState<M::Payload>,
    x_proposal: &OX,
    y_proposal: &OY,
    model: &ModelHandle<M>,
    rng: &mut R,
    stats: &mut KernelStats,
) -> Result<ChainState<M::Payload>>
where
    M: EnergyModel,
    OX: SymmetricProposal,
    OY: SymmetricProposal,
    R: Rng + ?Sized,
{
    check_dim("x proposal", x_proposal.dim(), model.slow_dim())?;
    check_dim("y proposal", y_proposal.dim(), model.fast_dim())?;

    let x_star = SlowVector::from_coords(x_proposal.propose(state.x(), rng));
    let ctx_star = model.prepare_slow(&x_star)?;
    let e_star = model.energy(&ctx_star, state.y())?;
    let accepted = metropolis_accept(state.energy() - e_star, rng)?;
    stats.outer(accepted);
    let state = if accepted {
        ChainState::from_parts(ctx_star, state.y().clone(), e_star)
    } else {
        state
    };

    let y_star = y_proposal.propose(state.y(), rng);
    let e_star = model.energy(state.ctx(), &y_star)?;
    let accepted = metropolis_accept(state.energy() - e_star, rng)?;
    stats.inner(accepted);
    if accepted {
        Ok(ChainState::from_parts(
            state.ctx().clone(),
            FastVector::from_coords(y_star),
            e_star,
        ))
    } else {
        Ok(state)
    }
}

/// State of a chain over the slow variables alone.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalState {
    pub x: SlowVector,
    /// Marginal energy at `x`.
    pub energy: f64,
}

impl MarginalState {
    pub fn new(x: SlowVector, marginal_energy: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let energy = marginal_energy(&x);
        if !energy.is_finite() {
            return Err(Error::Input(format!(
                "initial marginal energy {energy} is not finite"
            )));
        }
        Ok(Self { x, energy })
    }
}

/// Metropolis on `x` under a closed-form marginal energy. Makes no calls
/// into the joint model.
pub fn marginal_step<F, O, R>(
    state: MarginalState,
    marginal_energy: F,
    proposal: &O,
    rng: &mut R,
    stats: &mut KernelStats,
) -> Result<MarginalState>
where
    F: Fn(&[f64]) -> f64,
    O: SymmetricProposal,
    R: Rng + ?Sized,
{
    check_dim("marginal proposal", proposal.dim(), state.x.len())?;
    let x_star = proposal.propose(&state.x, rng);
    let e_star = marginal_energy(&x_star);
    let accepted = metropolis_accept(state.energy - e_star, rng)?;
    stats.outer(accepted);
    if accepted {
        Ok(MarginalState {
            x: SlowVector::from_coords(x_star),
            energy: e_star,
        })
    } else {
        Ok(state)
    }
}
