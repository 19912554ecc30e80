//! Experiment runner behind the `dragmc` command-line tool.
//!
//! An [`ExperimentConfig`] names a test problem and a sampling method with
//! its proposal scales. [`run_experiment`] runs the chain, drops the burn-in,
//! computes diagnostics for the first slow coordinate and optionally writes
//! `chain.csv` and `report.json`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{rejection_rate, ChainSummary, Counter};
use crate::kernels::{
    drag_step, joint_step, marginal_step, single_var_step, DragConfig, GaussianWalkProposal, KernelStats,
    MarginalState,
};
use crate::model::{ChainState, Coords, EnergyModel, EvalCounts, FastVector, ModelHandle, SlowVector};
use crate::testbed::{
    discrete_drag_transition_matrix, max_balance_violation, test1_conditional_sample, DiscreteModel, Problem,
    Test1Model, Test2Model,
};
use crate::{seeded_rng, Error, Result, SamplerRng};

/// Minimum run length for diagnostics.
pub const MIN_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Joint,
    Single,
    Marginal,
    Drag,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Joint, Method::Single, Method::Marginal, Method::Drag];

    pub fn name(self) -> &'static str {
        match self {
            Method::Joint => "joint",
            Method::Single => "single",
            Method::Marginal => "marginal",
            Method::Drag => "drag",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("method: unknown method {s:?} (expected joint, single, marginal or drag)")))
    }
}

fn default_inner_steps() -> usize {
    1
}

/// Settings of one run.
///
/// `outer_sd` holds the proposal scales of the `x` move (for `joint`, of
/// the whole `(x, y)` vector); `inner_sd` those of the `y` moves (`single`
/// and `drag` only). A single value is broadcast to every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub method: Method,
    #[serde(default)]
    pub n: Option<usize>,
    pub outer_sd: Vec<f64>,
    #[serde(default)]
    pub inner_sd: Vec<f64>,
    #[serde(default = "default_inner_steps")]
    pub inner_steps_per_level: usize,
    pub iterations: usize,
    /// Fraction of the run discarded before diagnostics.
    pub burn_in: f64,
    pub seed: u64,
    pub max_lag: usize,
    #[serde(default)]
    pub slow_delay_us: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Proposal scales and run lengths of the standard method comparison.
    ///
    /// Joint Metropolis uses sd 0.5 per coordinate on `test1` and 0.3 on
    /// `test2`; single-variable 0.25; marginal 1.0; dragging 1.0 for `x` and
    /// 0.2 for each fast coordinate. Runs are 10⁵ iterations, except
    /// dragging with more than 100 segments which uses 2×10⁴.
    pub fn standard(problem: Problem, method: Method, n: Option<usize>) -> Self {
        let d_fast = problem.fast_dim();
        let (outer_sd, inner_sd) = match method {
            Method::Joint => {
                let sd = if problem == Problem::Test2 { 0.3 } else { 0.5 };
                (vec![sd; 1 + d_fast], vec![])
            }
            Method::Single => (vec![0.25], vec![0.25; d_fast]),
            Method::Marginal => (vec![1.0], vec![]),
            Method::Drag => (vec![1.0], vec![0.2; d_fast]),
        };
        let iterations = match (method, n) {
            (Method::Drag, Some(n)) if n > 100 => 20_000,
            _ => 100_000,
        };
        Self {
            problem,
            method,
            n: if method == Method::Drag { n.or(Some(20)) } else { None },
            outer_sd,
            inner_sd,
            inner_steps_per_level: 1,
            iterations,
            burn_in: 0.1,
            seed: 1,
            max_lag: 30,
            slow_delay_us: 0,
            out_dir: None,
        }
    }

    /// Short name such as `joint` or `drag-100`.
    pub fn label(&self) -> String {
        match (self.method, self.n) {
            (Method::Drag, Some(n)) => format!("drag-{n}"),
            (m, _) => m.name().to_string(),
        }
    }

    pub fn burn_in_count(&self) -> usize {
        (self.iterations as f64 * self.burn_in).floor() as usize
    }

    /// Reads a JSON config. Only `problem` and `method` are required; other
    /// fields default to [`ExperimentConfig::standard`] for that pair.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Head {
            problem: Problem,
            method: Method,
            #[serde(default)]
            n: Option<usize>,
        }
        let bad = |e: serde_json::Error| Error::Config(e.to_string());
        let given: serde_json::Value = serde_json::from_str(text).map_err(bad)?;
        let serde_json::Value::Object(fields) = given else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let head: Head = serde_json::from_value(serde_json::Value::Object(fields.clone())).map_err(bad)?;
        let mut merged = match serde_json::to_value(Self::standard(head.problem, head.method, head.n))? {
            serde_json::Value::Object(m) => m,
            _ => unreachable!("config serializes to an object"),
        };
        merged.extend(fields);
        serde_json::from_value(serde_json::Value::Object(merged)).map_err(bad)
    }

    /// Checks every field, naming the offending one in the error.
    pub fn validate(&self) -> Result<()> {
        self.plan().map(|_| ())
    }

    fn plan(&self) -> Result<Plan> {
        let cfg_err = |field: &str, msg: String| Error::Config(format!("{field}: {msg}"));
        if self.problem == Problem::Discrete {
            return Err(cfg_err(
                "problem",
                "the discrete problem is only available through the detailed-balance check".into(),
            ));
        }
        match (self.method, self.n) {
            (Method::Drag, None) => return Err(cfg_err("n", "required for the drag method".into())),
            (Method::Drag, Some(0)) => return Err(cfg_err("n", "must be at least 1".into())),
            (m, Some(_)) if m != Method::Drag => {
                return Err(cfg_err("n", format!("only valid for the drag method, not {m}")))
            }
            _ => {}
        }
        if self.iterations < MIN_ITERATIONS {
            return Err(cfg_err(
                "iterations",
                format!("must be at least {MIN_ITERATIONS}, got {}", self.iterations),
            ));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(cfg_err("burn_in", format!("must be in [0, 1), got {}", self.burn_in)));
        }
        let kept = self.iterations - self.burn_in_count();
        if kept <= self.max_lag || kept < 100 {
            return Err(cfg_err(
                "max_lag",
                format!("{} post-burn-in samples are too few for max_lag {}", kept, self.max_lag),
            ));
        }
        if self.inner_steps_per_level == 0 {
            return Err(cfg_err("inner_steps_per_level", "must be at least 1".into()));
        }
        if self.problem.marginal_energy().is_none() && self.method == Method::Marginal {
            return Err(cfg_err("method", format!("no closed-form marginal for {}", self.problem)));
        }

        let (d_slow, d_fast) = (self.problem.slow_dim(), self.problem.fast_dim());
        let outer_dim = if self.method == Method::Joint { d_slow + d_fast } else { d_slow };
        let outer = proposal_from("outer_sd", &self.outer_sd, outer_dim)?;
        let inner = match self.method {
            Method::Single | Method::Drag => Some(proposal_from("inner_sd", &self.inner_sd, d_fast)?),
            Method::Joint | Method::Marginal => {
                if !self.inner_sd.is_empty() {
                    return Err(cfg_err("inner_sd", format!("not used by the {} method", self.method)));
                }
                None
            }
        };
        Ok(Plan { outer, inner })
    }
}

fn proposal_from(field: &str, sds: &[f64], dim: usize) -> Result<GaussianWalkProposal> {
    let sds = match sds.len() {
        0 => return Err(Error::Config(format!("{field}: missing"))),
        1 => vec![sds[0]; dim],
        k if k == dim => sds.to_vec(),
        k => {
            return Err(Error::Config(format!(
                "{field}: expected 1 or {dim} values, got {k}"
            )))
        }
    };
    GaussianWalkProposal::new(sds).map_err(|e| Error::Config(format!("{field}: {e}")))
}

struct Plan {
    outer: GaussianWalkProposal,
    inner: Option<GaussianWalkProposal>,
}

/// One post-burn-in iteration of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRow {
    pub iter: usize,
    pub x: Coords,
    pub y: Coords,
    /// Whether the (outer) move of `x` was accepted in this iteration.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub label: String,
    /// Diagnostics of the first slow coordinate.
    pub summary: ChainSummary,
    pub rejection_rates: BTreeMap<String, f64>,
    pub kernel_stats: KernelStats,
    pub eval_counts: EvalCounts,
    pub wall_clock_secs: f64,
    /// Compute time plus the configured slow delay for every slow preparation.
    pub simulated_cost_secs: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub chain: Vec<ChainRow>,
}

impl ExperimentOutput {
    /// The recorded values of the first slow coordinate.
    pub fn x_trace(&self) -> Vec<f64> {
        self.chain.iter().map(|r| r.x[0]).collect()
    }
}

// Everything a chain loop produces before diagnostics.
struct RawRun {
    chain: Vec<ChainRow>,
    stats: KernelStats,
    counts: EvalCounts,
    delay_spent: Duration,
}

fn push_row(chain: &mut Vec<ChainRow>, burn: usize, iter: usize, x: &[f64], y: &[f64], accepted: bool) {
    if iter >= burn {
        chain.push(ChainRow {
            iter,
            x: Coords::from_slice(x),
            y: Coords::from_slice(y),
            accepted,
        });
    }
}

fn run_joint_model<M: EnergyModel>(model: M, cfg: &ExperimentConfig, plan: &Plan, rng: &mut SamplerRng) -> Result<RawRun> {
    let model = ModelHandle::new(model).with_slow_delay(Duration::from_micros(cfg.slow_delay_us));
    let x0 = SlowVector::new(vec![0.0; model.slow_dim()])?;
    let y0 = FastVector::new(vec![0.0; model.fast_dim()])?;
    let mut state = ChainState::new(&model, x0, y0)?;
    let mut stats = KernelStats::default();
    let burn = cfg.burn_in_count();
    let mut chain = Vec::with_capacity(cfg.iterations - burn);

    let drag_cfg = match (cfg.method, &plan.inner) {
        (Method::Drag, Some(inner)) => Some(DragConfig::with_inner_steps(
            cfg.n.unwrap_or(1),
            inner.clone(),
            cfg.inner_steps_per_level,
        )?),
        _ => None,
    };

    for iter in 0..cfg.iterations {
        let before = stats.outer_accepts;
        state = match cfg.method {
            Method::Joint => joint_step(state, &plan.outer, &model, rng, &mut stats)?,
            Method::Single => {
                let inner = plan.inner.as_ref().expect("validated");
                single_var_step(state, &plan.outer, inner, &model, rng, &mut stats)?
            }
            Method::Drag => {
                let dc = drag_cfg.as_ref().expect("validated");
                drag_step(state, &plan.outer, dc, &model, rng, &mut stats)?
            }
            Method::Marginal => unreachable!("marginal runs do not use the joint model"),
        };
        push_row(&mut chain, burn, iter, state.x(), state.y(), stats.outer_accepts > before);
    }
    Ok(RawRun {
        chain,
        stats,
        counts: model.eval_counts(),
        delay_spent: model.delay_spent(),
    })
}

fn run_marginal(cfg: &ExperimentConfig, plan: &Plan, rng: &mut SamplerRng) -> Result<RawRun> {
    let energy = cfg.problem.marginal_energy().expect("validated");
    let mut state = MarginalState::new(SlowVector::new(vec![0.0; cfg.problem.slow_dim()])?, energy)?;
    let mut stats = KernelStats::default();
    let burn = cfg.burn_in_count();
    let mut chain = Vec::with_capacity(cfg.iterations - burn);
    for iter in 0..cfg.iterations {
        let before = stats.outer_accepts;
        state = marginal_step(state, energy, &plan.outer, rng, &mut stats)?;
        push_row(&mut chain, burn, iter, &state.x, &[], stats.outer_accepts > before);
    }
    Ok(RawRun {
        chain,
        stats,
        counts: EvalCounts::default(),
        delay_spent: Duration::ZERO,
    })
}

fn rejection_rates(method: Method, stats: &KernelStats) -> Result<BTreeMap<String, f64>> {
    let (outer, inner) = match method {
        Method::Joint => ("joint", None),
        Method::Single => ("x", Some("y")),
        Method::Marginal => ("x", None),
        Method::Drag => ("outer", Some("inner")),
    };
    let mut rates = BTreeMap::new();
    rates.insert(outer.to_string(), rejection_rate(stats, Counter::Outer)?);
    if let Some(inner) = inner {
        if stats.inner_proposals > 0 {
            rates.insert(inner.to_string(), rejection_rate(stats, Counter::Inner)?);
        }
    }
    Ok(rates)
}

/// Runs one configured chain. Deterministic for a given seed, apart from the
/// timing fields of the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let plan = cfg.plan()?;
    let mut rng = seeded_rng(cfg.seed);
    let start = Instant::now();
    let raw = match (cfg.method, cfg.problem) {
        (Method::Marginal, _) => run_marginal(cfg, &plan, &mut rng)?,
        (_, Problem::Test1) => run_joint_model(Test1Model::new(), cfg, &plan, &mut rng)?,
        (_, Problem::Test2) => run_joint_model(Test2Model::new(), cfg, &plan, &mut rng)?,
        (_, Problem::Discrete) => unreachable!("rejected by validation"),
    };
    let wall = start.elapsed();

    let rates = rejection_rates(cfg.method, &raw.stats)?;
    let trace: Vec<f64> = raw.chain.iter().map(|r| r.x[0]).collect();
    let summary = ChainSummary::new(&trace, cfg.max_lag, rates.clone())?;
    let compute = wall.saturating_sub(raw.delay_spent);
    let simulated = compute + Duration::from_micros(cfg.slow_delay_us) * raw.counts.slow_preparations as u32;

    let report = ExperimentReport {
        config: cfg.clone(),
        label: cfg.label(),
        summary,
        rejection_rates: rates,
        kernel_stats: raw.stats,
        eval_counts: raw.counts,
        wall_clock_secs: wall.as_secs_f64(),
        simulated_cost_secs: simulated.as_secs_f64(),
    };
    let output = ExperimentOutput { report, chain: raw.chain };
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        write_chain_csv(&dir.join("chain.csv"), &output.chain)?;
        write_json(&dir.join("report.json"), &output.report)?;
    }
    Ok(output)
}

fn axis_names(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (0..dim).map(|k| format!("{prefix}{k}")).collect()
    }
}

/// Writes `iter, x…, y…, accepted` with a header row.
pub fn write_chain_csv(path: &Path, chain: &[ChainRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let (dx, dy) = chain.first().map_or((1, 0), |r| (r.x.len(), r.y.len()));
    let mut header = vec!["iter".to_string()];
    header.extend(axis_names("x", dx));
    if dy > 0 {
        header.extend(axis_names("y", dy));
    }
    header.push("accepted".into());
    w.write_record(&header).map_err(csv_err)?;
    for row in chain {
        let mut rec = vec![row.iter.to_string()];
        rec.extend(row.x.iter().chain(&row.y).map(|v| v.to_string()));
        rec.push(u8::from(row.accepted).to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Settings of the scatter sample of the first test distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Config {
    pub seed: u64,
    pub points: usize,
    pub thin: usize,
    pub burn_in: usize,
    pub proposal_sd: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for Figure1Config {
    fn default() -> Self {
        Self {
            seed: 1,
            points: 1000,
            thin: 20,
            burn_in: 2000,
            proposal_sd: 1.0,
            out_dir: None,
        }
    }
}

/// Samples `x` with marginal Metropolis, keeps every `thin`-th value and
/// fills in `y` from its exact conditional. Writes `fig1.csv` when an
/// output directory is set.
pub fn emit_figure1(cfg: &Figure1Config) -> Result<Vec<(f64, f64)>> {
    if cfg.points == 0 || cfg.thin == 0 {
        return Err(Error::Config("points and thin must be positive".into()));
    }
    let proposal = GaussianWalkProposal::new(vec![cfg.proposal_sd])
        .map_err(|e| Error::Config(format!("outer_sd: {e}")))?;
    let energy = Problem::Test1.marginal_energy().expect("test1 has a marginal");
    let mut rng = seeded_rng(cfg.seed);
    let mut stats = KernelStats::default();
    let mut state = MarginalState::new(SlowVector::new(vec![0.0])?, energy)?;
    for _ in 0..cfg.burn_in {
        state = marginal_step(state, energy, &proposal, &mut rng, &mut stats)?;
    }
    let mut points = Vec::with_capacity(cfg.points);
    while points.len() < cfg.points {
        for _ in 0..cfg.thin {
            state = marginal_step(state, energy, &proposal, &mut rng, &mut stats)?;
        }
        let x = state.x[0];
        points.push((x, test1_conditional_sample(x, &mut rng)));
    }
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("fig1.csv")).map_err(csv_err)?;
        w.write_record(["x", "y"]).map_err(csv_err)?;
        for (x, y) in &points {
            w.write_record([x.to_string(), y.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(points)
}

/// The six method settings compared on a test problem: joint,
/// single-variable, marginal, and dragging with 20, 100 and 500 segments.
pub fn standard_methods(problem: Problem) -> Vec<ExperimentConfig> {
    vec![
        ExperimentConfig::standard(problem, Method::Joint, None),
        ExperimentConfig::standard(problem, Method::Single, None),
        ExperimentConfig::standard(problem, Method::Marginal, None),
        ExperimentConfig::standard(problem, Method::Drag, Some(20)),
        ExperimentConfig::standard(problem, Method::Drag, Some(100)),
        ExperimentConfig::standard(problem, Method::Drag, Some(500)),
    ]
}

/// Settings applied to every method of a comparison.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SharedSettings {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub burn_in: Option<f64>,
    pub max_lag: Option<usize>,
    pub slow_delay_us: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfRow {
    pub method: String,
    pub lag: usize,
    pub acf: f64,
}

#[derive(Debug, Clone)]
pub struct AcfComparison {
    pub rows: Vec<AcfRow>,
    pub reports: Vec<ExperimentReport>,
}

/// Runs each method (concurrently, one thread per method) and collects
/// their autocorrelation curves. Writes `acf.csv`, `summary.json` and, if
/// requested, `acf.svg`.
pub fn emit_acf_comparison(
    problem: Problem,
    methods: &[ExperimentConfig],
    shared: &SharedSettings,
) -> Result<AcfComparison> {
    let configs: Vec<ExperimentConfig> = methods
        .iter()
        .map(|m| {
            let mut c = m.clone();
            c.problem = problem;
            c.seed = shared.seed.unwrap_or(c.seed);
            c.iterations = shared.iterations.unwrap_or(c.iterations);
            c.burn_in = shared.burn_in.unwrap_or(c.burn_in);
            c.max_lag = shared.max_lag.unwrap_or(c.max_lag);
            c.slow_delay_us = shared.slow_delay_us.unwrap_or(c.slow_delay_us);
            c.out_dir = None;
            c
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }

    let results: Vec<Result<ExperimentOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_experiment(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Input("experiment thread panicked".into()))))
            .collect()
    });
    let reports = results
        .into_iter()
        .map(|r| r.map(|o| o.report))
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<AcfRow> = reports
        .iter()
        .flat_map(|r| {
            r.summary.acf.iter().map(|(lag, acf)| AcfRow {
                method: r.label.clone(),
                lag,
                acf,
            })
        })
        .collect();

    if let Some(dir) = &shared.out_dir {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("acf.csv")).map_err(csv_err)?;
        for row in &rows {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush()?;
        write_json(&dir.join("summary.json"), &reports)?;
        if shared.svg {
            fs::write(dir.join("acf.svg"), acf_svg(problem, &reports))?;
        }
    }
    Ok(AcfComparison { rows, reports })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line chart of each report's autocorrelations against lag.
pub fn acf_svg(problem: Problem, reports: &[ExperimentReport]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 60.0, 150.0, 30.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let max_lag = reports.iter().map(|r| r.summary.acf.max_lag()).max().unwrap_or(1).max(1) as f64;
    let min_acf = reports
        .iter()
        .flat_map(|r| r.summary.acf.values().iter().copied())
        .fold(0.0f64, f64::min)
        .max(-1.0);
    let px = |lag: f64| left + plot_w * lag / max_lag;
    let py = |v: f64| top + plot_h * (1.0 - (v - min_acf) / (1.0 - min_acf));

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg += &format!("<text x=\"{}\" y=\"18\" text-anchor=\"middle\">Autocorrelation of x ({problem})</text>\n", left + plot_w / 2.0);
    svg += &format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>\n"
    );
    svg += &format!(
        "<line x1=\"{left}\" y1=\"{y0:.2}\" x2=\"{}\" y2=\"{y0:.2}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
        left + plot_w,
        y0 = py(0.0)
    );
    for k in 0..=6 {
        let lag = max_lag * k as f64 / 6.0;
        svg += &format!(
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{:.0}</text>\n",
            px(lag),
            top + plot_h + 18.0,
            lag
        );
    }
    for v in [min_acf, 0.0, 0.5, 1.0] {
        svg += &format!("<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>\n", left - 6.0, py(v) + 4.0);
    }
    svg += &format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">lag</text>\n", left + plot_w / 2.0, h - 10.0);
    for (i, r) in reports.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = r
            .summary
            .acf
            .iter()
            .map(|(lag, v)| format!("{:.2},{:.2}", px(lag as f64), py(v)))
            .collect();
        svg += &format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        );
        let ly = top + 16.0 + 18.0 * i as f64;
        svg += &format!(
            "<line x1=\"{x1}\" y1=\"{ly}\" x2=\"{x2}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{tx}\" y=\"{ty}\">{}</text>\n",
            r.label,
            x1 = left + plot_w + 12.0,
            x2 = left + plot_w + 36.0,
            tx = left + plot_w + 42.0,
            ty = ly + 4.0
        );
    }
    svg += "</svg>\n";
    svg
}

/// Outcome of the exhaustive detailed-balance check for one ladder size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceCheck {
    pub n: usize,
    pub states: usize,
    pub max_violation: f64,
    pub max_row_sum_error: f64,
}

/// Exact detailed-balance check of the dragging update on the standard
/// discrete model.
pub fn db_check(ns: &[usize]) -> Result<Vec<BalanceCheck>> {
    let dm = DiscreteModel::standard();
    let pi = dm.stationary();
    ns.iter()
        .map(|&n| {
            let p = discrete_drag_transition_matrix(&dm, n, 1)?;
            Ok(BalanceCheck {
                n,
                states: p.size(),
                max_violation: max_balance_violation(&pi, &p),
                max_row_sum_error: p.max_row_sum_error(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(method: Method, n: Option<usize>) -> ExperimentConfig {
        let mut c = ExperimentConfig::standard(Problem::Test1, method, n);
        c.iterations = 2000;
        c
    }

    #[test]
    fn standard_configs_validate() {
        for p in [Problem::Test1, Problem::Test2] {
            for c in standard_methods(p) {
                c.validate().unwrap();
            }
        }
        assert_eq!(ExperimentConfig::standard(Problem::Test1, Method::Drag, Some(500)).iterations, 20_000);
        assert_eq!(ExperimentConfig::standard(Problem::Test1, Method::Drag, Some(100)).iterations, 100_000);
    }

    #[test]
    fn validation_names_fields() {
        let cases: Vec<(ExperimentConfig, &str)> = vec![
            (ExperimentConfig { n: None, ..quick(Method::Drag, Some(20)) }, "n:"),
            (ExperimentConfig { n: Some(5), ..quick(Method::Joint, None) }, "n:"),
            (ExperimentConfig { iterations: 10, ..quick(Method::Joint, None) }, "iterations:"),
            (ExperimentConfig { burn_in: 1.0, ..quick(Method::Joint, None) }, "burn_in:"),
            (ExperimentConfig { outer_sd: vec![0.5, 0.5, 0.5], ..quick(Method::Joint, None) }, "outer_sd:"),
            (ExperimentConfig { outer_sd: vec![-1.0], ..quick(Method::Marginal, None) }, "outer_sd:"),
            (ExperimentConfig { inner_sd: vec![], ..quick(Method::Single, None) }, "inner_sd:"),
            (ExperimentConfig { inner_sd: vec![0.2], ..quick(Method::Marginal, None) }, "inner_sd:"),
            (ExperimentConfig { problem: Problem::Discrete, ..quick(Method::Joint, None) }, "problem:"),
            (ExperimentConfig { max_lag: 5000, ..quick(Method::Joint, None) }, "max_lag:"),
        ];
        for (cfg, field) in cases {
            let err = cfg.validate().unwrap_err();
            assert!(err.is_config(), "{err}");
            assert!(err.to_string().contains(field), "{err} should name {field}");
        }
    }

    #[test]
    fn scalar_sd_broadcasts() {
        let c = ExperimentConfig {
            outer_sd: vec![0.3],
            ..ExperimentConfig::standard(Problem::Test2, Method::Joint, None)
        };
        assert_eq!(c.plan().unwrap().outer.sds(), &[0.3, 0.3, 0.3]);
    }

    #[test]
    fn labels() {
        assert_eq!(quick(Method::Drag, Some(100)).label(), "drag-100");
        assert_eq!(quick(Method::Single, None).label(), "single");
    }

    #[test]
    fn row_count_and_rates() {
        for (m, n) in [(Method::Joint, None), (Method::Single, None), (Method::Marginal, None), (Method::Drag, Some(3))] {
            let out = run_experiment(&quick(m, n)).unwrap();
            assert_eq!(out.chain.len(), 1800);
            assert_eq!(out.chain[0].iter, 200);
            let keys: Vec<&str> = out.report.rejection_rates.keys().map(String::as_str).collect();
            let expect: &[&str] = match m {
                Method::Joint => &["joint"],
                Method::Single => &["x", "y"],
                Method::Marginal => &["x"],
                Method::Drag => &["inner", "outer"],
            };
            assert_eq!(keys, expect);
            if m != Method::Marginal {
                assert_eq!(
                    out.report.eval_counts.slow_preparations,
                    out.report.kernel_stats.outer_proposals + 1
                );
            } else {
                assert_eq!(out.report.eval_counts, EvalCounts::default());
            }
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let out = run_experiment(&quick(Method::Drag, Some(4))).unwrap();
        let text = serde_json::to_string(&out.report).unwrap();
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, out.report);
        assert_eq!(back.config, quick(Method::Drag, Some(4)));
    }

    #[test]
    fn db_check_small() {
        let rows = db_check(&[1, 2, 3]).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert_eq!(r.states, 21);
            assert!(r.max_violation < 1e-12);
        }
    }

    #[test]
    fn svg_has_one_line_per_method() {
        let reports: Vec<ExperimentReport> = [quick(Method::Joint, None), quick(Method::Marginal, None)]
            .iter()
            .map(|c| run_experiment(c).unwrap().report)
            .collect();
        let svg = acf_svg(Problem::Test1, &reports);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
