//! A grid model small enough to write down the exact transition matrix of
//! one dragging update, by enumerating every proposal and every path of
//! intermediate fast values.
//!
//! Grid points are addressed by index, so the model's coordinates are the
//! indices themselves stored as `f64`. Anything off the grid has infinite
//! energy and is never accepted.

use rand::Rng;

use crate::kernels::{drag_log_accept_ratio, log_rho_i, SymmetricProposal};
use crate::model::{Coords, EnergyModel};
use crate::testbed::test1_energy;
use crate::{Error, Result};

const MAX_SLOW_POINTS: usize = 5;
const MAX_FAST_POINTS: usize = 9;
const MAX_LADDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `energies[ix][iy]`
    energies: Vec<Vec<f64>>,
}

impl DiscreteModel {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, energy: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::Input("grid axes must be non-empty".into()));
        }
        if xs.len() > MAX_SLOW_POINTS || ys.len() > MAX_FAST_POINTS {
            return Err(Error::Input(format!(
                "grid {}x{} exceeds the {MAX_SLOW_POINTS}x{MAX_FAST_POINTS} limit",
                xs.len(),
                ys.len()
            )));
        }
        let energies: Vec<Vec<f64>> = xs
            .iter()
            .map(|&x| ys.iter().map(|&y| energy(x, y)).collect())
            .collect();
        if energies.iter().flatten().any(|e| !e.is_finite()) {
            return Err(Error::Input("tabulated energies must be finite".into()));
        }
        Ok(Self { xs, ys, energies })
    }

    /// `x ∈ {−1, 0, 1}`, seven evenly spaced `y` on `[−1.5, 1.5]`, energies
    /// from the first test problem.
    pub fn standard() -> Self {
        let ys = (0..7).map(|k| -1.5 + 0.5 * k as f64).collect();
        Self::new(vec![-1.0, 0.0, 1.0], ys, test1_energy).expect("standard grid is valid")
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn n_states(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    /// Row-major state index of grid point `(ix, iy)`.
    pub fn state_index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ys.len() + iy
    }

    pub fn grid_energy(&self, ix: usize, iy: usize) -> f64 {
        self.energies[ix][iy]
    }

    /// Normalized target probabilities over states.
    pub fn stationary(&self) -> Vec<f64> {
        let e_min = self.energies.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self.energies.iter().flatten().map(|e| (e_min - e).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    }

    /// Proposal for the slow index: uniform over the whole axis.
    pub fn slow_proposal(&self) -> GridProposal {
        GridProposal::Uniform { size: self.xs.len() }
    }

    /// Proposal for the fast index: one step left or right.
    pub fn fast_proposal(&self) -> GridProposal {
        GridProposal::Neighbor
    }
}

fn grid_index(v: f64, len: usize) -> Option<usize> {
    (v >= 0.0 && v < len as f64 && v.fract() == 0.0).then_some(v as usize)
}

impl EnergyModel for DiscreteModel {
    /// Row of the slow index, or `None` off the grid.
    type Payload = Option<usize>;

    fn slow_dim(&self) -> usize {
        1
    }

    fn fast_dim(&self) -> usize {
        1
    }

    fn prepare(&self, x: &[f64]) -> Option<usize> {
        grid_index(x[0], self.xs.len())
    }

    fn energy(&self, row: &Option<usize>, y: &[f64]) -> f64 {
        match (row, grid_index(y[0], self.ys.len())) {
            (Some(ix), Some(iy)) => self.energies[*ix][iy],
            _ => f64::INFINITY,
        }
    }
}

/// Symmetric proposals on grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridProposal {
    /// Any of `size` indices with equal probability, ignoring the current one.
    Uniform { size: usize },
    /// `current ± 1` with probability ½ each; may leave the grid.
    Neighbor,
}

impl GridProposal {
    /// Probability of proposing index `to` from index `from` on an axis of
    /// length `len` (mass leaving the grid is not represented).
    pub fn prob(&self, from: usize, to: usize, len: usize) -> f64 {
        match *self {
            GridProposal::Uniform { size } => {
                debug_assert_eq!(size, len);
                1.0 / size as f64
            }
            GridProposal::Neighbor => {
                if from.abs_diff(to) == 1 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }
}

impl SymmetricProposal for GridProposal {
    fn dim(&self) -> usize {
        1
    }

    fn propose<R: Rng + ?Sized>(&self, current: &[f64], rng: &mut R) -> Coords {
        let next = match *self {
            GridProposal::Uniform { size } => rng.random_range(0..size) as f64,
            GridProposal::Neighbor => {
                if rng.random::<bool>() {
                    current[0] + 1.0
                } else {
                    current[0] - 1.0
                }
            }
        };
        Coords::from_slice(&[next])
    }
}

/// Dense row-stochastic matrix over the states of a [`DiscreteModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.size + to]
    }

    fn add(&mut self, from: usize, to: usize, p: f64) {
        self.data[from * self.size + to] += p;
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.size..(from + 1) * self.size]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.size)
            .map(|u| (self.row(u).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `max |π_u P(u→v) − π_v P(v→u)|` over all state pairs.
pub fn max_balance_violation(pi: &[f64], p: &TransitionMatrix) -> f64 {
    let mut worst = 0.0f64;
    for u in 0..p.size() {
        for v in 0..p.size() {
            worst = worst.max((pi[u] * p.get(u, v) - pi[v] * p.get(v, u)).abs());
        }
    }
    worst
}

fn accept_prob(log_ratio: f64) -> f64 {
    log_ratio.min(0.0).exp()
}

// Exact Metropolis kernel on the fast axis targeting ladder level i between
// slow rows ix and ix_star, applied `steps` times.
fn inner_kernel(
    dm: &DiscreteModel,
    proposal: GridProposal,
    ix: usize,
    ix_star: usize,
    i: usize,
    n: usize,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let ny = dm.ys.len();
    let log_rho = |iy: usize| log_rho_i(i, n, dm.energies[ix][iy], dm.energies[ix_star][iy]);
    let mut t = vec![vec![0.0; ny]; ny];
    for from in 0..ny {
        let here = log_rho(from)?;
        let mut moved = 0.0;
        for to in 0..ny {
            if to == from {
                continue;
            }
            let q = proposal.prob(from, to, ny);
            if q > 0.0 {
                let p = q * accept_prob(log_rho(to)? - here);
                t[from][to] = p;
                moved += p;
            }
        }
        t[from][from] = 1.0 - moved;
    }
    let mut out = t.clone();
    for _ in 1..steps {
        out = (0..ny)
            .map(|a| {
                (0..ny)
                    .map(|c| (0..ny).map(|b| out[a][b] * t[b][c]).sum())
                    .collect()
            })
            .collect();
    }
    Ok(out)
}

/// Exact transition matrix of one dragging update with `n` ladder segments
/// and `inner_steps` Metropolis updates per level, using
/// [`DiscreteModel::slow_proposal`] and [`DiscreteModel::fast_proposal`].
///
/// Every proposal `x*` and every path `y_1..y_{n−1}` is enumerated.
pub fn discrete_drag_transition_matrix(dm: &DiscreteModel, n: usize, inner_steps: usize) -> Result<TransitionMatrix> {
    if n == 0 || n > MAX_LADDER {
        return Err(Error::Input(format!("ladder size n = {n} must be in 1..={MAX_LADDER}")));
    }
    if inner_steps == 0 {
        return Err(Error::Input("inner_steps must be >= 1".into()));
    }
    let (nx, ny) = (dm.xs.len(), dm.ys.len());
    let slow = dm.slow_proposal();
    let mut p = TransitionMatrix::zeros(dm.n_states());

    for ix in 0..nx {
        for ix_star in 0..nx {
            let q = slow.prob(ix, ix_star, nx);
            let kernels = (1..n)
                .map(|i| inner_kernel(dm, dm.fast_proposal(), ix, ix_star, i, n, inner_steps))
                .collect::<Result<Vec<_>>>()?;
            for iy in 0..ny {
                let from = dm.state_index(ix, iy);
                let mut path = vec![iy];
                enumerate_paths(dm, &kernels, ix, ix_star, q, &mut path, &mut |end, weight, log_ratio| {
                    let a = accept_prob(log_ratio);
                    p.add(from, dm.state_index(ix_star, end), weight * a);
                    p.add(from, from, weight * (1.0 - a));
                })?;
            }
        }
    }
    Ok(p)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_paths(
    dm: &DiscreteModel,
    kernels: &[Vec<Vec<f64>>],
    ix: usize,
    ix_star: usize,
    weight: f64,
    path: &mut Vec<usize>,
    visit: &mut impl FnMut(usize, f64, f64),
) -> Result<()> {
    let level = path.len();
    if level == kernels.len() + 1 {
        let e_x: Vec<f64> = path.iter().map(|&iy| dm.energies[ix][iy]).collect();
        let e_xstar: Vec<f64> = path.iter().map(|&iy| dm.energies[ix_star][iy]).collect();
        visit(*path.last().unwrap(), weight, drag_log_accept_ratio(&e_x, &e_xstar)?);
        return Ok(());
    }
    let t = &kernels[level - 1];
    let prev = path[level - 1];
    for (next, &tp) in t[prev].iter().enumerate() {
        if tp > 0.0 {
            path.push(next);
            enumerate_paths(dm, kernels, ix, ix_star, weight * tp, path, visit)?;
            path.pop();
        }
    }
    Ok(())
}

/// Exact matrix of a Metropolis update of the slow index with the fast index
/// held fixed.
pub fn fixed_y_metropolis_matrix(dm: &DiscreteModel) -> TransitionMatrix {
    let (nx, ny) = (dm.xs.len(), dm.ys.len());
    let slow = dm.slow_proposal();
    let mut p = TransitionMatrix::zeros(dm.n_states());
    for ix in 0..nx {
        for iy in 0..ny {
            let from = dm.state_index(ix, iy);
            for ix_star in 0..nx {
                let q = slow.prob(ix, ix_star, nx);
                let a = accept_prob(dm.energies[ix][iy] - dm.energies[ix_star][iy]);
                p.add(from, dm.state_index(ix_star, iy), q * a);
                p.add(from, from, q * (1.0 - a));
            }
        }
    }
    p
}
