//! Trajectory simulation of the boundary-driven pair-flip dynamics.
//!
//! One time step resamples the last site, then applies the two brickwork
//! layers in the configured order; this is the sampling form of
//! [`build_full_local`](crate::chains::build_full_local). States are stored
//! one byte per site.
//!
//! Trajectory `i` draws from ChaCha8 seeded with the master seed on stream
//! `i`, so results do not depend on the thread count. Trajectories are
//! grouped into fixed batches; observables are accumulated as integers per
//! batch and merged in batch order, and the first-passage bootstrap resamples
//! batches.

pub mod sampler;
pub mod stats;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census::cone::Cone;
use crate::census::{cone_stats, SectorCensus};
use crate::chains::{GateKind, Layer, LayerOrder};
use crate::error::{invalid, Error, Result};
use crate::numeric::rational_f64;
use crate::walks::{SpinString, MAX_ALPHABET};
use sampler::ConeSampler;
use stats::{quantile, resample_counts};

pub const DEFAULT_TRAJECTORIES: usize = 10_000;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
const MAX_BATCHES: usize = 100;

/// Per-step observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Normalized charge `2 Q_a / L` of symbol `a` (1-based).
    Charge(u32),
    /// Depth of the current sector.
    Depth,
    /// Indicator that the sector lies outside the cone `C_d`.
    ConeEscape(usize),
    /// Indicator that site `i` (1-based) still holds its initial symbol.
    MatchSite(usize),
}

impl Observable {
    /// Column stem used in CSV headers.
    pub fn name(&self) -> String {
        match self {
            Self::Charge(a) => format!("Q{a}"),
            Self::Depth => "depth".into(),
            Self::ConeEscape(d) => format!("escape_C{d}"),
            Self::MatchSite(i) => format!("match_{i}"),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Charge(a) => write!(f, "charge:{a}"),
            Self::Depth => f.write_str("depth"),
            Self::ConeEscape(d) => write!(f, "escape:{d}"),
            Self::MatchSite(i) => write!(f, "match:{i}"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    /// `charge:a`, `depth`, `escape:d` or `match:i`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = || -> Result<usize> {
            arg.parse()
                .map_err(|_| Error::Parse(format!("observable {s:?} needs a numeric argument")))
        };
        match head {
            "charge" => Ok(Self::Charge(num()? as u32)),
            "depth" => Ok(Self::Depth),
            "escape" => Ok(Self::ConeEscape(num()?)),
            "match" => Ok(Self::MatchSite(num()?)),
            _ => Err(Error::Parse(format!(
                "unknown observable {s:?} (expected charge:a, depth, escape:d or match:i)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// The `(ba)(ba)…` string maximizing `Q_a`.
    MaxCharge { symbol: u32 },
    Fixed { state: String },
    /// Uniform over all `N^L` strings.
    Uniform,
    /// Uniform over the strings of the cone `C_d`.
    Cone { d: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: u32,
    pub len: usize,
    pub gate: GateKind,
    pub order: LayerOrder,
    pub trajectories: usize,
    pub t_max: u64,
    pub seed: u64,
    pub observables: Vec<Observable>,
    /// First-passage threshold on the normalized charge.
    pub gamma: f64,
    pub initial: InitialState,
    /// Also run until every single trajectory has crossed the threshold.
    pub per_trajectory: bool,
}

impl SimConfig {
    /// Maximal-`Q_1` start, pair-flip gate, charge of symbol 1 observed.
    pub fn new(n: u32, len: usize) -> Self {
        Self {
            n,
            len,
            gate: GateKind::PairFlip,
            order: LayerOrder::default(),
            trajectories: DEFAULT_TRAJECTORIES,
            t_max: 100_000,
            seed: 0,
            observables: vec![Observable::Charge(1)],
            gamma: 0.1,
            initial: InitialState::MaxCharge { symbol: 1 },
            per_trajectory: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_ALPHABET).contains(&self.n) {
            return Err(invalid(format!("N must lie in 2..={MAX_ALPHABET}")));
        }
        if self.len < 2 {
            return Err(invalid("L must be at least 2"));
        }
        if self.trajectories == 0 {
            return Err(invalid("need at least one trajectory"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        for o in &self.observables {
            match *o {
                Observable::Charge(a) if a == 0 || a > self.n => {
                    return Err(invalid(format!("charge symbol {a} outside 1..={}", self.n)))
                }
                Observable::ConeEscape(d) if d < 1 || d > self.len => {
                    return Err(invalid(format!("cone depth {d} outside 1..={}", self.len)))
                }
                Observable::MatchSite(i) if i == 0 || i > self.len => {
                    return Err(invalid(format!("site {i} outside 1..={}", self.len)))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// dynamics

/// Resamples the last site uniformly.
pub fn bath_step<R: Rng + ?Sized>(state: &mut [u8], n: u32, rng: &mut R) {
    if let Some(last) = state.last_mut() {
        *last = rng.random_range(0..n) as u8;
    }
}

/// Applies one gate to every equal pair of a layer.
pub fn layer_step<R: Rng + ?Sized>(state: &mut [u8], layer: Layer, n: u32, gate: GateKind, rng: &mut R) {
    let start = match layer {
        Layer::Odd => 0,
        Layer::Even => 1,
    };
    let mut p = start;
    while p + 1 < state.len() {
        let a = state[p];
        if a == state[p + 1] {
            let b = match gate {
                GateKind::PairFlip => rng.random_range(0..n) as u8,
                GateKind::TemperleyLieb => {
                    let r = rng.random_range(0..n * n);
                    if r < 2 * (n - 1) {
                        ((u32::from(a) + 1 + r / 2) % n) as u8
                    } else {
                        a
                    }
                }
            };
            state[p] = b;
            state[p + 1] = b;
        }
        p += 2;
    }
}

/// One full time step in place.
pub fn step<R: Rng + ?Sized>(state: &mut [u8], n: u32, gate: GateKind, order: LayerOrder, rng: &mut R) {
    bath_step(state, n, rng);
    for layer in order.layers() {
        layer_step(state, layer, n, gate, rng);
    }
}

/// One full time step of a [`SpinString`].
pub fn step_string<R: Rng + ?Sized>(s: &SpinString, gate: GateKind, order: LayerOrder, rng: &mut R) -> SpinString {
    let mut digits = s.digits().to_vec();
    step(&mut digits, s.alphabet(), gate, order, rng);
    SpinString::from_digits(s.alphabet(), digits).expect("steps keep symbols in range")
}

/// Empirical one-step distribution from `start`, as counts over the base-`N`
/// state index.
pub fn one_step_counts(
    start: &SpinString,
    gate: GateKind,
    order: LayerOrder,
    samples: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    let n = start.alphabet();
    let size = u64::from(n)
        .checked_pow(start.len() as u32)
        .filter(|&s| s <= 1 << 24)
        .ok_or_else(|| invalid("one-step histogram needs N^L ≤ 2^24"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start.index());
    let mut counts = vec![0u64; size as usize];
    let mut state = start.digits().to_vec();
    for _ in 0..samples {
        state.copy_from_slice(start.digits());
        step(&mut state, n, gate, order, &mut rng);
        let idx = state.iter().fold(0usize, |acc, &d| acc * n as usize + d as usize);
        counts[idx] += 1;
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// ensemble engine

#[derive(Debug, Clone)]
enum Probe {
    Charge(u8),
    Depth,
    Escape { apex: Vec<u8>, d: usize },
    Match(usize),
}

impl Probe {
    fn new(o: Observable) -> Result<Self> {
        Ok(match o {
            Observable::Charge(a) => Self::Charge((a - 1) as u8),
            Observable::Depth => Self::Depth,
            Observable::ConeEscape(d) => Self::Escape {
                apex: (0..d - 1).map(|i| (i % 2) as u8).collect(),
                d,
            },
            Observable::MatchSite(i) => Self::Match(i - 1),
        })
    }

    /// Integer value; normalized later.
    fn eval(&self, state: &[u8], initial: &[u8], stack: &mut Vec<u8>) -> i64 {
        match self {
            Self::Charge(a) => state
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == *a)
                .map(|(i, _)| if i % 2 == 0 { -1 } else { 1 })
                .sum(),
            Self::Depth => {
                reduce_into(state, stack);
                stack.len() as i64
            }
            Self::Escape { apex, d } => {
                reduce_into(state, stack);
                let inside = stack.len() >= *d && stack.starts_with(apex);
                i64::from(!inside)
            }
            Self::Match(i) => i64::from(state[*i] == initial[*i]),
        }
    }
}

fn reduce_into(state: &[u8], stack: &mut Vec<u8>) {
    stack.clear();
    for &s in state {
        if stack.last() == Some(&s) {
            stack.pop();
        } else {
            stack.push(s);
        }
    }
}

struct Trajectory {
    state: Vec<u8>,
    initial: Vec<u8>,
    rng: ChaCha8Rng,
    first_below: Option<u64>,
}

/// Per-batch sums for one chunk of steps, `steps × probes`, row major.
struct ChunkSums {
    sum: Vec<i64>,
    sumsq: Vec<u64>,
}

struct Engine {
    n: u32,
    len: usize,
    gate: GateKind,
    order: LayerOrder,
    probes: Vec<Probe>,
    trajectories: Vec<Trajectory>,
    batch_size: usize,
    /// Per-trajectory threshold on `2 Q` (charge probe 0), if tracked.
    threshold: Option<f64>,
    t: u64,
}

impl Engine {
    fn new(cfg: &SimConfig, probes: Vec<Probe>, track_first: bool) -> Result<Self> {
        cfg.validate()?;
        let fixed = match &cfg.initial {
            InitialState::MaxCharge { symbol } => {
                Some(SpinString::max_charge_state(cfg.n, cfg.len, *symbol)?.into_digits())
            }
            InitialState::Fixed { state } => {
                let s = SpinString::parse(cfg.n, state)?;
                if s.len() != cfg.len {
                    return Err(invalid(format!("initial state has length {}, not {}", s.len(), cfg.len)));
                }
                Some(s.into_digits())
            }
            _ => None,
        };
        let sampler = match &cfg.initial {
            InitialState::Cone { d } => Some(ConeSampler::new(cfg.n, cfg.len, &Cone::canonical(cfg.n, *d)?)?),
            _ => None,
        };
        let trajectories = (0..cfg.trajectories)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64);
                let state = match (&fixed, &sampler) {
                    (Some(f), _) => f.clone(),
                    (None, Some(s)) => s.sample(&mut rng),
                    (None, None) => (0..cfg.len).map(|_| rng.random_range(0..cfg.n) as u8).collect(),
                };
                Trajectory {
                    initial: state.clone(),
                    state,
                    rng,
                    first_below: None,
                }
            })
            .collect();
        let batches = cfg.trajectories.min(MAX_BATCHES);
        let threshold = if track_first {
            match probes.first() {
                Some(Probe::Charge(_)) => Some(cfg.gamma * cfg.len as f64),
                _ => return Err(invalid("first passage needs a charge observable first")),
            }
        } else {
            None
        };
        Ok(Self {
            n: cfg.n,
            len: cfg.len,
            gate: cfg.gate,
            order: cfg.order,
            probes,
            trajectories,
            batch_size: cfg.trajectories.div_ceil(batches),
            threshold,
            t: 0,
        })
    }

    fn num_batches(&self) -> usize {
        self.trajectories.len().div_ceil(self.batch_size)
    }

    fn batch_len(&self, b: usize) -> usize {
        (self.trajectories.len() - b * self.batch_size).min(self.batch_size)
    }

    /// Records observables at the current time, then `steps - 1` more after
    /// single steps; with `advance_first` every record follows a step.
    fn run(&mut self, steps: usize, advance_first: bool) -> Vec<ChunkSums> {
        let np = self.probes.len();
        let (n, gate, order, t0) = (self.n, self.gate, self.order, self.t);
        let probes = &self.probes;
        let threshold = self.threshold;
        let out = self
            .trajectories
            .par_chunks_mut(self.batch_size)
            .map(|batch| {
                let mut sum = vec![0i64; steps * np];
                let mut sumsq = vec![0u64; steps * np];
                let mut stack = Vec::with_capacity(batch.first().map_or(0, |t| t.state.len()));
                for tr in batch.iter_mut() {
                    for s in 0..steps {
                        if advance_first || s > 0 {
                            step(&mut tr.state, n, gate, order, &mut tr.rng);
                        }
                        let t = t0 + s as u64 + u64::from(advance_first);
                        for (k, p) in probes.iter().enumerate() {
                            let v = p.eval(&tr.state, &tr.initial, &mut stack);
                            sum[s * np + k] += v;
                            sumsq[s * np + k] += (v * v) as u64;
                            if k == 0 && tr.first_below.is_none() {
                                if let Some(th) = threshold {
                                    if 2.0 * v as f64 <= th {
                                        tr.first_below = Some(t);
                                    }
                                }
                            }
                        }
                    }
                }
                ChunkSums { sum, sumsq }
            })
            .collect();
        self.t += steps as u64 - u64::from(!advance_first);
        out
    }

    fn normalization(&self, k: usize) -> f64 {
        match self.probes[k] {
            Probe::Charge(_) => 2.0 / self.len as f64,
            _ => 1.0,
        }
    }
}

// ---------------------------------------------------------------------------
// results

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub observable: Observable,
    pub name: String,
    pub mean: Vec<f64>,
    /// Sample standard deviation over `√n_trajectories`.
    pub std_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstPassage {
    pub gamma: f64,
    /// First step at which the ensemble-mean normalized charge is `≤ γ`.
    pub t_q: Option<u64>,
    /// The threshold was not reached by `t_max`.
    pub censored: bool,
    /// 95% percentile bootstrap interval over trajectory batches; the upper
    /// end is absent when too many resamples never crossed.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub resamples: usize,
    pub censored_resamples: usize,
    /// Mean of per-trajectory first passages, when every trajectory crossed.
    pub per_trajectory_mean: Option<f64>,
    pub per_trajectory_censored: usize,
    pub steps_simulated: u64,
    pub trajectories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSeries {
    pub n: u32,
    pub len: usize,
    pub trajectories: usize,
    pub times: Vec<u64>,
    pub series: Vec<ObservableSeries>,
    pub first_passage: Option<FirstPassage>,
}

impl EnsembleSeries {
    pub fn get(&self, o: Observable) -> Option<&ObservableSeries> {
        self.series.iter().find(|s| s.observable == o)
    }

    /// `t,mean_<obs>,stderr_<obs>,…`
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t")?;
        for s in &self.series {
            write!(out, ",mean_{0},stderr_{0}", s.name)?;
        }
        writeln!(out)?;
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{t}")?;
            for s in &self.series {
                write!(out, ",{},{}", s.mean[i], s.std_error[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Sums per time across batches, merged in batch order.
struct Accumulator {
    np: usize,
    n: usize,
    sum: Vec<i64>,
    sumsq: Vec<u64>,
    /// Charge-probe sums per batch over time, for the bootstrap.
    batch_charge: Option<Vec<Vec<i64>>>,
}

impl Accumulator {
    fn absorb(&mut self, chunks: &[ChunkSums]) {
        let steps = chunks[0].sum.len() / self.np;
        let base = self.sum.len();
        self.sum.resize(base + steps * self.np, 0);
        self.sumsq.resize(base + steps * self.np, 0);
        for c in chunks {
            for (a, b) in self.sum[base..].iter_mut().zip(&c.sum) {
                *a += b;
            }
            for (a, b) in self.sumsq[base..].iter_mut().zip(&c.sumsq) {
                *a += b;
            }
        }
        if let Some(bc) = &mut self.batch_charge {
            for (series, c) in bc.iter_mut().zip(chunks) {
                series.extend((0..steps).map(|s| c.sum[s * self.np]));
            }
        }
    }

    fn series(&self, engine: &Engine, observables: &[Observable]) -> Vec<ObservableSeries> {
        let steps = self.sum.len() / self.np;
        let n = self.n as f64;
        observables
            .iter()
            .enumerate()
            .map(|(k, &o)| {
                let scale = engine.normalization(k);
                let (mut mean, mut std_error) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
                for s in 0..steps {
                    let sum = self.sum[s * self.np + k] as f64;
                    let sumsq = self.sumsq[s * self.np + k] as f64;
                    let m = sum / n;
                    let var = if self.n > 1 {
                        ((sumsq - sum * m) / (n - 1.0)).max(0.0)
                    } else {
                        0.0
                    };
                    mean.push(m * scale);
                    std_error.push((var / n).sqrt() * scale);
                }
                ObservableSeries {
                    observable: o,
                    name: o.name(),
                    mean,
                    std_error,
                }
            })
            .collect()
    }
}

/// Incremental first-crossing search for the point estimate and every
/// bootstrap resample.
struct Crossings {
    /// `γ L`: the mean of `2 Q` must drop to this.
    target: f64,
    point: Option<u64>,
    weights: Vec<Vec<u32>>,
    totals: Vec<f64>,
    crossed: Vec<Option<u64>>,
    scanned: usize,
}

impl Crossings {
    fn new(gamma: f64, len: usize, batch_sizes: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let weights: Vec<Vec<u32>> = (0..BOOTSTRAP_RESAMPLES)
            .map(|_| resample_counts(batch_sizes.len(), &mut rng))
            .collect();
        let totals = weights
            .iter()
            .map(|w| w.iter().zip(batch_sizes).map(|(&c, &s)| f64::from(c) * s as f64).sum())
            .collect();
        Self {
            target: gamma * len as f64,
            point: None,
            crossed: vec![None; weights.len()],
            weights,
            totals,
            scanned: 0,
        }
    }

    fn update(&mut self, batch_charge: &[Vec<i64>], trajectories: usize, t_start: u64) {
        let steps = batch_charge[0].len();
        for s in self.scanned..steps {
            if self.point.is_none() {
                let total: i64 = batch_charge.iter().map(|b| b[s]).sum();
                if 2.0 * total as f64 <= self.target * trajectories as f64 {
                    self.point = Some(t_start + s as u64);
                }
            }
        }
        let (target, scanned) = (self.target, self.scanned);
        self.crossed
            .par_iter_mut()
            .zip(&self.weights)
            .zip(&self.totals)
            .filter(|((c, _), _)| c.is_none())
            .for_each(|((c, w), &total)| {
                for s in scanned..steps {
                    let sum: f64 = w
                        .iter()
                        .zip(batch_charge)
                        .filter(|(&k, _)| k > 0)
                        .map(|(&k, b)| f64::from(k) * b[s] as f64)
                        .sum();
                    if 2.0 * sum <= target * total {
                        *c = Some(t_start + s as u64);
                        break;
                    }
                }
            });
        self.scanned = steps;
    }

    fn done(&self) -> bool {
        self.point.is_some() && self.crossed.iter().all(Option::is_some)
    }

    fn report(&self, gamma: f64, engine: &Engine) -> FirstPassage {
        let mut times: Vec<f64> = self
            .crossed
            .iter()
            .map(|c| c.map_or(f64::INFINITY, |t| t as f64))
            .collect();
        times.sort_by(f64::total_cmp);
        let finite = |x: f64| x.is_finite().then_some(x);
        let firsts: Vec<u64> = engine
            .trajectories
            .iter()
            .filter_map(|t| t.first_below)
            .collect();
        let per_trajectory_censored = engine.trajectories.len() - firsts.len();
        FirstPassage {
            gamma,
            t_q: self.point,
            censored: self.point.is_none(),
            ci_low: finite(quantile(&times, 0.025)),
            ci_high: finite(quantile(&times, 0.975)),
            resamples: self.crossed.len(),
            censored_resamples: self.crossed.iter().filter(|c| c.is_none()).count(),
            per_trajectory_mean: (engine.threshold.is_some() && per_trajectory_censored == 0)
                .then(|| firsts.iter().sum::<u64>() as f64 / firsts.len() as f64),
            per_trajectory_censored,
            steps_simulated: engine.t,
            trajectories: engine.trajectories.len(),
        }
    }
}

fn batch_sizes(engine: &Engine) -> Vec<usize> {
    (0..engine.num_batches()).map(|b| engine.batch_len(b)).collect()
}

/// Simulates `t_max` steps and records every observable at `t = 0..=t_max`.
/// When the first observable is a charge, the first passage below
/// `cfg.gamma` is reported as well.
pub fn run_ensemble(cfg: &SimConfig) -> Result<EnsembleSeries> {
    if cfg.observables.is_empty() {
        return Err(invalid("no observables requested"));
    }
    let probes = cfg
        .observables
        .iter()
        .map(|&o| Probe::new(o))
        .collect::<Result<Vec<_>>>()?;
    let charge_first = matches!(probes[0], Probe::Charge(_));
    let mut engine = Engine::new(cfg, probes, charge_first)?;
    let mut acc = Accumulator {
        np: engine.probes.len(),
        n: cfg.trajectories,
        sum: Vec::new(),
        sumsq: Vec::new(),
        batch_charge: charge_first.then(|| vec![Vec::new(); engine.num_batches()]),
    };
    let mut remaining = cfg.t_max as usize + 1;
    let mut first = true;
    while remaining > 0 {
        let steps = remaining.min(1024);
        let chunks = engine.run(steps, !first);
        acc.absorb(&chunks);
        remaining -= steps;
        first = false;
    }
    let first_passage = acc.batch_charge.as_ref().map(|bc| {
        let mut c = Crossings::new(cfg.gamma, cfg.len, &batch_sizes(&engine), cfg.seed);
        c.update(bc, cfg.trajectories, 0);
        c.report(cfg.gamma, &engine)
    });
    Ok(EnsembleSeries {
        n: cfg.n,
        len: cfg.len,
        trajectories: cfg.trajectories,
        times: (0..=cfg.t_max).collect(),
        series: acc.series(&engine, &cfg.observables),
        first_passage,
    })
}

/// First passage of the ensemble-mean charge below `cfg.gamma`, simulating
/// only until it (and every bootstrap resample) has crossed.
pub fn estimate_tq(cfg: &SimConfig) -> Result<FirstPassage> {
    Ok(estimate_tq_many(cfg, &[cfg.gamma])?.remove(0))
}

/// [`estimate_tq`] for several thresholds from one set of trajectories.
pub fn estimate_tq_many(cfg: &SimConfig, gammas: &[f64]) -> Result<Vec<FirstPassage>> {
    let symbol = match cfg.initial {
        InitialState::MaxCharge { symbol } => symbol,
        _ => return Err(invalid("first passage starts from the maximal-charge state")),
    };
    if gammas.is_empty() || gammas.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
        return Err(invalid("thresholds must lie in (0, 1)"));
    }
    let lowest = gammas.iter().copied().fold(f64::INFINITY, f64::min);
    let run_cfg = SimConfig {
        observables: vec![Observable::Charge(symbol)],
        gamma: lowest,
        ..cfg.clone()
    };
    let mut engine = Engine::new(&run_cfg, vec![Probe::new(Observable::Charge(symbol))?], true)?;
    let sizes = batch_sizes(&engine);
    let mut crossings: Vec<Crossings> = gammas
        .iter()
        .map(|&g| Crossings::new(g, cfg.len, &sizes, cfg.seed))
        .collect();
    let mut acc = Accumulator {
        np: 1,
        n: cfg.trajectories,
        sum: Vec::new(),
        sumsq: Vec::new(),
        batch_charge: Some(vec![Vec::new(); engine.num_batches()]),
    };
    let mut first = true;
    loop {
        let recorded = if first { 0 } else { engine.t + 1 };
        let budget = (cfg.t_max + 1).saturating_sub(recorded) as usize;
        let steps = (recorded as usize / 8).clamp(64, 8192).min(budget);
        if steps == 0 {
            break;
        }
        let chunks = engine.run(steps, !first);
        first = false;
        acc.absorb(&chunks);
        let bc = acc.batch_charge.as_ref().expect("tracked");
        for c in &mut crossings {
            c.update(bc, cfg.trajectories, 0);
        }
        let trajectories_done =
            !cfg.per_trajectory || engine.trajectories.iter().all(|t| t.first_below.is_some());
        if crossings.iter().all(Crossings::done) && trajectories_done {
            break;
        }
    }
    Ok(crossings
        .iter()
        .zip(gammas)
        .map(|(c, &g)| c.report(g, &engine))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapePoint {
    pub t: u64,
    pub estimate: f64,
    pub std_error: f64,
    /// `t Φ(C_d)`.
    pub bound: f64,
    /// `estimate ≤ bound + 4 std_error`.
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeReport {
    pub d: usize,
    pub expansion: f64,
    pub points: Vec<EscapePoint>,
    pub all_within: bool,
}

/// Probability of being outside `C_d` after `t` steps, from a uniform start
/// in `C_d`, against the linear bound `t Φ(C_d)`.
pub fn cone_escape_probability(cfg: &SimConfig, d: usize, t_samples: &[u64]) -> Result<EscapeReport> {
    let census = SectorCensus::new(cfg.n, cfg.len)?;
    let expansion = rational_f64(&cone_stats(&census, d)?.boundary_flow);
    let t_max = t_samples.iter().copied().max().unwrap_or(0);
    let run_cfg = SimConfig {
        observables: vec![Observable::ConeEscape(d)],
        initial: InitialState::Cone { d },
        t_max,
        ..cfg.clone()
    };
    let series = run_ensemble(&run_cfg)?;
    let s = &series.series[0];
    let points: Vec<EscapePoint> = t_samples
        .iter()
        .map(|&t| {
            let (estimate, std_error) = (s.mean[t as usize], s.std_error[t as usize]);
            let bound = t as f64 * expansion;
            EscapePoint {
                t,
                estimate,
                std_error,
                bound,
                within: estimate <= bound + 4.0 * std_error,
            }
        })
        .collect();
    Ok(EscapeReport {
        d,
        expansion,
        all_within: points.iter().all(|p| p.within),
        points,
    })
}

#[cfg(test)]
mod tests;
