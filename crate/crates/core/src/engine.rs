//! Alternating-projection sweeps (MAP and RMAP), scan orders, the resetting
//! strategy, and run-level termination with oscillation detection.

use crate::constraints::{ConstraintFamily, PairConstraint, SubsetId, MEMBER_TOL};
use crate::constraints::dist4;
use crate::error::{Error, Result};
use crate::model::{roa, Instance, Placement};
use crate::projection::{check_lambda, io_target, project_local, TIE_TOL};
use crate::superiorize::hpwl_unchecked;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt::Write as _;

/// ROA below which a placement counts as feasible.
pub const ROA_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderKind {
    /// Modules by area, non-ascending, then a nested pair loop.
    Area,
    /// Modules by `x + y`, non-descending, then a nested pair loop.
    Position,
    /// Seeded shuffle of all pairs.
    Random(u64),
}

/// One realized sweep order: every pair exactly once, as indices into
/// `ConstraintFamily::pairs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanOrder {
    pub kind: OrderKind,
    pub pairs: Vec<usize>,
}

impl ScanOrder {
    /// The visited pairs as `(i, j)` with `i < j`.
    pub fn pair_ids(&self, family: &ConstraintFamily) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|&t| (family.pairs[t].i, family.pairs[t].j)).collect()
    }
}

pub fn make_order(inst: &Instance, p: &Placement, family: &ConstraintFamily, kind: OrderKind) -> ScanOrder {
    let n = inst.n_modules();
    let nested = |ids: Vec<usize>| {
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..ids.len() {
            for b in a + 1..ids.len() {
                pairs.push(family.pair_index(ids[a], ids[b]));
            }
        }
        pairs
    };
    let pairs = match kind {
        OrderKind::Area => {
            let mut ids: Vec<usize> = (0..n).collect();
            ids.sort_by(|&a, &b| inst.modules[b].area().total_cmp(&inst.modules[a].area()));
            nested(ids)
        }
        OrderKind::Position => {
            let mut ids: Vec<usize> = (0..n).collect();
            ids.sort_by(|&a, &b| (p.x(a) + p.y(a)).total_cmp(&(p.x(b) + p.y(b))));
            nested(ids)
        }
        OrderKind::Random(seed) => {
            let mut pairs: Vec<usize> = (0..family.pairs.len()).collect();
            pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            pairs
        }
    };
    ScanOrder { kind, pairs }
}

/// Order used for sweep number `sweep` of a run; random orders draw a fresh
/// shuffle per sweep from the base seed.
pub fn order_for_sweep(
    inst: &Instance,
    p: &Placement,
    family: &ConstraintFamily,
    kind: OrderKind,
    sweep: usize,
) -> ScanOrder {
    let kind_now = match kind {
        OrderKind::Random(seed) => OrderKind::Random(seed.wrapping_add(sweep as u64)),
        k => k,
    };
    let mut order = make_order(inst, p, family, kind_now);
    order.kind = kind;
    order
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Relaxation for MAP steps and I/O projections, in `(0, 2]`.
    pub lambda: f64,
    /// Softmax temperature of RMAP; `0` selects the argmax.
    pub epsilon: f64,
    /// Reset threshold `S`; `None` disables resets.
    pub reset_threshold: Option<u32>,
    /// When one counter of a pair trips, clear all four of that pair.
    pub simultaneous_reset: bool,
    pub member_tol: f64,
}

impl SweepConfig {
    /// Defaults scaled to the die: `ε = 1e-3 (W + H)`, `S = 3`, `λ = 1`.
    pub fn for_instance(inst: &Instance) -> Self {
        SweepConfig {
            lambda: 1.0,
            epsilon: 1e-3 * (inst.region.width + inst.region.height),
            reset_threshold: Some(3),
            simultaneous_reset: false,
            member_tol: MEMBER_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if self.reset_threshold == Some(0) {
            return Err(Error::InvalidConfig("reset threshold S must be positive".into()));
        }
        if !(self.member_tol >= 0.0) {
            return Err(Error::InvalidConfig("membership tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-pair, per-subset projection counters of the resetting strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResetState {
    pub counters: Vec<[u32; 4]>,
}

impl ResetState {
    pub fn new(family: &ConstraintFamily) -> Self {
        ResetState { counters: vec![[0; 4]; family.pairs.len()] }
    }
}

/// Outcome of [`preference_ratio`] for one pair visit.
#[derive(Clone, Debug, PartialEq)]
pub struct Preference {
    /// `η_k`; `-inf` for reset or empty subsets.
    pub eta: [f64; 4],
    pub distance: [f64; 4],
    /// Projected local coordinates `(x_i, x_j, y_i, y_j)` per subset.
    pub targets: [[f64; 4]; 4],
    /// Whether the pair was violated at visit time.
    pub violated: bool,
}

/// Preference ratios of one pair with the resetting rule.
///
/// Each ratio is the negative distance to its subset. While the pair is
/// violated, a subset whose counter exceeds `S` gets `-inf` and its counter
/// is cleared, and the subset finally preferred has its counter bumped.
/// Satisfied pairs leave the counters alone.
pub fn preference_ratio(
    p: &Placement,
    pair: &PairConstraint,
    counters: &mut [u32; 4],
    cfg: &SweepConfig,
) -> Preference {
    let u = pair.local(p);
    let mut eta = [f64::NEG_INFINITY; 4];
    let mut distance = [f64::INFINITY; 4];
    let mut targets = [u; 4];
    for id in SubsetId::ALL {
        let s = pair.subset(id);
        if s.nonempty {
            let q = project_local(s, &u);
            distance[id.index()] = dist4(&u, &q);
            targets[id.index()] = q;
            eta[id.index()] = -distance[id.index()];
        }
    }
    let min = distance.iter().copied().fold(f64::INFINITY, f64::min);
    let violated = min > cfg.member_tol;
    if violated {
        if let Some(s) = cfg.reset_threshold {
            let tripped: Vec<usize> = (0..4).filter(|&k| eta[k].is_finite() && counters[k] > s).collect();
            for &k in &tripped {
                eta[k] = f64::NEG_INFINITY;
                counters[k] = 0;
            }
            if cfg.simultaneous_reset && !tripped.is_empty() {
                *counters = [0; 4];
            }
        }
        if let Some(k) = argmax(&eta) {
            counters[k] = counters[k].saturating_add(1);
        }
    }
    Preference { eta, distance, targets, violated }
}

/// Index of the largest finite entry; ties within `TIE_TOL` go to the
/// lowest index.
fn argmax(eta: &[f64; 4]) -> Option<usize> {
    let max = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    (0..4).find(|&k| eta[k] >= max - TIE_TOL)
}

/// Softmax weights `exp(η/ε)`, normalized; `ε = 0` puts all mass on the
/// argmax.
pub fn softmax_weights(eta: &[f64; 4], epsilon: f64) -> Option<[f64; 4]> {
    let k = argmax(eta)?;
    let mut w = [0.0; 4];
    if epsilon == 0.0 {
        w[k] = 1.0;
        return Some(w);
    }
    let max = eta[k];
    for i in 0..4 {
        w[i] = if eta[i].is_finite() { ((eta[i] - max) / epsilon).exp() } else { 0.0 };
    }
    let sum: f64 = w.iter().sum();
    for x in &mut w {
        *x /= sum;
    }
    Some(w)
}

fn write_local(p: &mut Placement, pair: &PairConstraint, q: &[f64; 4]) {
    let n = p.n_entities();
    let z = p.as_mut_slice();
    z[pair.i] = q[0];
    z[pair.j] = q[1];
    z[n + pair.i] = q[2];
    z[n + pair.j] = q[3];
}

fn io_sweep(p: &mut Placement, family: &ConstraintFamily, lambda: f64) {
    for c in &family.io {
        let (x, y) = p.io(c.pin);
        let (tx, ty) = io_target(c, x, y);
        p.set_io(c.pin, x + lambda * (tx - x), y + lambda * (ty - y));
    }
}

/// One RMAP sweep: for each pair in order, move to the preference-weighted
/// average of the four subset projections. I/O constraints follow with
/// relaxation `λ`.
pub fn rmap_sweep(
    p: &mut Placement,
    family: &ConstraintFamily,
    order: &ScanOrder,
    cfg: &SweepConfig,
    reset: &mut ResetState,
) -> Result<()> {
    for &t in &order.pairs {
        let pair = &family.pairs[t];
        let pref = preference_ratio(p, pair, &mut reset.counters[t], cfg);
        if !pref.violated {
            continue;
        }
        let w = softmax_weights(&pref.eta, cfg.epsilon).ok_or(Error::AllWeightsZero(pair.i, pair.j))?;
        let mut q = [0.0; 4];
        for k in 0..4 {
            if w[k] > 0.0 {
                for c in 0..4 {
                    q[c] += w[k] * pref.targets[k][c];
                }
            }
        }
        write_local(p, pair, &q);
    }
    io_sweep(p, family, cfg.lambda);
    Ok(())
}

/// Relaxed projection of one pair onto its closest subset, ties broken
/// `L < R < B < A`. Returns whether the placement moved.
pub fn map_pair_step(p: &mut Placement, pair: &PairConstraint, lambda: f64) -> Result<bool> {
    let u = pair.local(p);
    let mut best: Option<([f64; 4], f64)> = None;
    for id in SubsetId::ALL {
        let s = pair.subset(id);
        if !s.nonempty {
            continue;
        }
        let q = project_local(s, &u);
        let d = dist4(&u, &q);
        if best.is_none_or(|(_, bd)| d < bd - TIE_TOL) {
            best = Some((q, d));
        }
    }
    let (q, d) = best.ok_or(Error::NoFeasibleSubset(pair.i, pair.j))?;
    if d == 0.0 {
        return Ok(false);
    }
    let mut next = q;
    if lambda != 1.0 {
        for c in 0..4 {
            next[c] = u[c] + lambda * (q[c] - u[c]);
        }
    }
    write_local(p, pair, &next);
    Ok(true)
}

/// One MAP sweep over the pairs in `order`, then the I/O constraints.
pub fn map_sweep(p: &mut Placement, family: &ConstraintFamily, order: &ScanOrder, lambda: f64) -> Result<()> {
    check_lambda(lambda)?;
    for &t in &order.pairs {
        map_pair_step(p, &family.pairs[t], lambda)?;
    }
    io_sweep(p, family, lambda);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Map,
    Rmap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Feasible,
    Oscillating,
    MaxIter,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Feasible => 0,
            Status::Oscillating => 2,
            Status::MaxIter => 3,
        }
    }
}

/// Oscillation detection window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleWindow {
    /// Largest period searched.
    pub max_period: usize,
    /// Number of consecutive sweeps over which the recurrence must hold.
    pub span: usize,
    /// State comparison tolerance (max-norm, length units).
    pub state_tol: f64,
    /// ROA equality tolerance for the constant-ROA rule.
    pub roa_tol: f64,
}

impl Default for CycleWindow {
    fn default() -> Self {
        CycleWindow { max_period: 50, span: 20, state_tol: 1e-9, roa_tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleReport {
    pub detected: bool,
    pub period: usize,
    /// The distinct states of one period, oldest first.
    pub states: Vec<Placement>,
    pub mean_roa: f64,
}

impl CycleReport {
    fn none() -> Self {
        CycleReport { detected: false, period: 0, states: Vec::new(), mean_roa: f64::NAN }
    }
}

/// Smallest period `p <= max_period` such that each of the last `span`
/// states matches the state `p` sweeps earlier within `state_tol`.
pub fn detect_cycle(states: &[Placement], roas: &[f64], window: &CycleWindow) -> CycleReport {
    let n = states.len();
    if n < 2 {
        return CycleReport::none();
    }
    for period in 1..=window.max_period {
        let span = window.span.max(period);
        if n < span + period {
            break;
        }
        let periodic = (n - span..n).all(|k| states[k].max_abs_diff(&states[k - period]) <= window.state_tol);
        if periodic {
            let cycle: Vec<Placement> = states[n - period..].to_vec();
            let mean_roa = if roas.len() == n {
                roas[n - period..].iter().sum::<f64>() / period as f64
            } else {
                f64::NAN
            };
            return CycleReport { detected: true, period, states: cycle, mean_roa };
        }
    }
    CycleReport::none()
}

/// Quantized FNV-1a hash of the coordinates.
pub fn placement_hash(p: &Placement, quantum: f64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &v in p.as_slice() {
        let q = (v / quantum).round() as i64;
        for b in q.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub sweep: usize,
    pub roa: f64,
    pub hpwl: f64,
    pub hash: u64,
    pub cycle_flag: bool,
    /// Projection length of Per-RMAP iterations.
    pub gamma: Option<f64>,
    /// Perturbation decay index of Per-RMAP iterations.
    pub ell: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    /// CSV with header `sweep,roa,hpwl,cycle_flag`, plus `gamma,ell` when
    /// any record carries them.
    pub fn to_csv(&self) -> String {
        let extended = self.records.iter().any(|r| r.gamma.is_some() || r.ell.is_some());
        let mut out = String::from("sweep,roa,hpwl,cycle_flag");
        if extended {
            out.push_str(",gamma,ell");
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{:.12e},{:.12e},{}", r.sweep, r.roa, r.hpwl, r.cycle_flag as u8);
            if extended {
                let g = r.gamma.map(|g| format!("{g:.12e}")).unwrap_or_default();
                let l = r.ell.map(|l| l.to_string()).unwrap_or_default();
                let _ = write!(out, ",{g},{l}");
            }
            out.push('\n');
        }
        out
    }

    pub fn last_roa(&self) -> Option<f64> {
        self.records.last().map(|r| r.roa)
    }
}

/// Sliding window of recent states for oscillation checks.
#[derive(Clone, Debug)]
pub(crate) struct StateWindow {
    cap: usize,
    states: VecDeque<Placement>,
    roas: VecDeque<f64>,
}

impl StateWindow {
    pub(crate) fn new(window: &CycleWindow) -> Self {
        let cap = window.span.max(window.max_period) + window.max_period + 1;
        StateWindow { cap, states: VecDeque::with_capacity(cap), roas: VecDeque::with_capacity(cap) }
    }

    pub(crate) fn push(&mut self, p: &Placement, roa: f64) {
        if self.states.len() == self.cap {
            self.states.pop_front();
            self.roas.pop_front();
        }
        self.states.push_back(p.clone());
        self.roas.push_back(roa);
    }

    pub(crate) fn check(&self, window: &CycleWindow) -> CycleReport {
        let states: Vec<Placement> = self.states.iter().cloned().collect();
        let roas: Vec<f64> = self.roas.iter().copied().collect();
        let report = detect_cycle(&states, &roas, window);
        if report.detected {
            return report;
        }
        let n = roas.len();
        if n > window.span {
            let last = roas[n - 1];
            if roas[n - 1 - window.span..].iter().all(|r| (r - last).abs() <= window.roa_tol) {
                return CycleReport {
                    detected: true,
                    period: 0,
                    states: vec![states[n - 1].clone()],
                    mean_roa: last,
                };
            }
        }
        CycleReport::none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub sweep: SweepConfig,
    pub order: OrderKind,
    pub max_sweeps: usize,
    pub roa_threshold: f64,
    pub window: CycleWindow,
    /// Stop as soon as an oscillation is detected instead of running to
    /// `max_sweeps`. On by default for MAP only, since RMAP resets are
    /// meant to break cycles.
    pub stop_on_oscillation: bool,
}

impl RunConfig {
    pub fn new(inst: &Instance, mode: Mode) -> Self {
        RunConfig {
            mode,
            sweep: SweepConfig::for_instance(inst),
            order: OrderKind::Position,
            max_sweeps: 10_000,
            roa_threshold: ROA_THRESHOLD,
            window: CycleWindow::default(),
            stop_on_oscillation: mode == Mode::Map,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub placement: Placement,
    pub status: Status,
    pub sweeps: usize,
    pub roa: f64,
    pub trajectory: Trajectory,
    pub cycle: Option<CycleReport>,
}

/// Plain MAP or RMAP from `init` until feasible, oscillating, or capped.
pub fn run_feasibility(
    inst: &Instance,
    family: &ConstraintFamily,
    init: &Placement,
    cfg: &RunConfig,
) -> Result<RunOutcome> {
    cfg.sweep.validate()?;
    let mut p = init.clone();
    let mut reset = ResetState::new(family);
    let mut trajectory = Trajectory::default();
    let mut window = StateWindow::new(&cfg.window);
    let mut current = roa(inst, &p);
    let quantum = cfg.window.state_tol.max(f64::MIN_POSITIVE);
    let record = |t: &mut Trajectory, sweep: usize, p: &Placement, r: f64, flag: bool| {
        t.records.push(TrajectoryRecord {
            sweep,
            roa: r,
            hpwl: hpwl_unchecked(inst, p),
            hash: placement_hash(p, quantum),
            cycle_flag: flag,
            gamma: None,
            ell: None,
        });
    };
    record(&mut trajectory, 0, &p, current, false);
    window.push(&p, current);
    if current < cfg.roa_threshold {
        return Ok(RunOutcome { placement: p, status: Status::Feasible, sweeps: 0, roa: current, trajectory, cycle: None });
    }
    let mut last_cycle: Option<CycleReport> = None;
    for sweep in 1..=cfg.max_sweeps {
        let order = order_for_sweep(inst, &p, family, cfg.order, sweep);
        match cfg.mode {
            Mode::Map => map_sweep(&mut p, family, &order, cfg.sweep.lambda)?,
            Mode::Rmap => rmap_sweep(&mut p, family, &order, &cfg.sweep, &mut reset)?,
        }
        current = roa(inst, &p);
        window.push(&p, current);
        if current < cfg.roa_threshold {
            record(&mut trajectory, sweep, &p, current, false);
            return Ok(RunOutcome { placement: p, status: Status::Feasible, sweeps: sweep, roa: current, trajectory, cycle: None });
        }
        let cycle = window.check(&cfg.window);
        record(&mut trajectory, sweep, &p, current, cycle.detected);
        if cycle.detected {
            last_cycle = Some(cycle);
            if cfg.stop_on_oscillation {
                return Ok(RunOutcome {
                    placement: p,
                    status: Status::Oscillating,
                    sweeps: sweep,
                    roa: current,
                    trajectory,
                    cycle: last_cycle,
                });
            }
        } else {
            last_cycle = None;
        }
    }
    let status = if last_cycle.is_some() { Status::Oscillating } else { Status::MaxIter };
    Ok(RunOutcome { placement: p, status, sweeps: cfg.max_sweeps, roa: current, trajectory, cycle: last_cycle })
}
