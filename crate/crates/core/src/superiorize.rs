//! Wirelength superiorization: HPWL and its subgradient, the decaying
//! perturbation step, the Per-RMAP driver, post-processing, and I/O pin
//! legalization.

use crate::constraints::{ConstraintFamily, IoConstraint};
use crate::engine::{
    order_for_sweep, placement_hash, rmap_sweep, CycleWindow, OrderKind, ResetState, StateWindow, Status,
    SweepConfig, Trajectory, TrajectoryRecord, ROA_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::model::{pin_position, roa, Instance, Pin, PinOwner, Placement, Side};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Half-perimeter wirelength summed over all nets.
pub fn hpwl(inst: &Instance, p: &Placement) -> Result<f64> {
    let mut total = 0.0;
    for net in &inst.nets {
        if net.pins.is_empty() {
            return Err(Error::InvalidInstance(format!("net {} has no pins", net.name)));
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for pin in &net.pins {
            let (x, y) = pin_position(inst, p, pin)?;
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        total += (x1 - x0) + (y1 - y0);
    }
    Ok(total)
}

/// [`hpwl`] for instances already validated.
pub(crate) fn hpwl_unchecked(inst: &Instance, p: &Placement) -> f64 {
    hpwl(inst, p).unwrap_or(f64::NAN)
}

fn owner_index(inst: &Instance, p: &Placement, pin: &Pin) -> Option<usize> {
    match pin.owner {
        PinOwner::Module(i) => Some(i),
        PinOwner::Io(k) => (!inst.io_pins[k].fixed).then(|| p.n_modules() + k),
    }
}

/// A subgradient of HPWL in `R^{2N}`.
///
/// Per net and axis, the first pin attaining the maximum contributes `+1`
/// to its owner's coordinate and the first pin attaining the minimum
/// contributes `-1`. Fixed I/O pins absorb their contribution.
pub fn hpwl_subgradient(inst: &Instance, p: &Placement) -> Result<Vec<f64>> {
    let n = p.n_entities();
    let mut v = vec![0.0; 2 * n];
    for net in &inst.nets {
        if net.pins.is_empty() {
            continue;
        }
        let mut pos = Vec::with_capacity(net.pins.len());
        for pin in &net.pins {
            pos.push(pin_position(inst, p, pin)?);
        }
        for axis in 0..2 {
            let coord = |k: usize| if axis == 0 { pos[k].0 } else { pos[k].1 };
            let (mut hi, mut lo) = (0, 0);
            for k in 1..pos.len() {
                if coord(k) > coord(hi) {
                    hi = k;
                }
                if coord(k) < coord(lo) {
                    lo = k;
                }
            }
            let base = if axis == 0 { 0 } else { n };
            if let Some(e) = owner_index(inst, p, &net.pins[hi]) {
                v[base + e] += 1.0;
            }
            if let Some(e) = owner_index(inst, p, &net.pins[lo]) {
                v[base + e] -= 1.0;
            }
        }
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbConfig {
    /// Perturbation passes per iteration.
    pub num: usize,
    pub lambda_min: f64,
    pub lambda_init: f64,
    /// Decay kernel in `(0, 1)`.
    pub decay: f64,
    /// Step-shrinking retries per pass.
    pub retries: usize,
}

impl PerturbConfig {
    pub fn for_instance(inst: &Instance) -> Self {
        PerturbConfig {
            num: 1,
            lambda_min: 0.1,
            lambda_init: 0.05 * (inst.region.width + inst.region.height),
            decay: 0.999,
            retries: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min >= 0.0) {
            return Err(Error::InvalidConfig("lambda_min must be non-negative".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidConfig(format!("decay kernel must lie in (0, 1), got {}", self.decay)));
        }
        if !(self.lambda_init >= 0.0 && self.lambda_init.is_finite()) {
            return Err(Error::InvalidConfig("lambda_init must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// `max(λ_min, λ_init · Λ^ℓ)`.
    pub fn step_length(&self, ell: u64) -> f64 {
        let e = ell.min(i32::MAX as u64) as i32;
        self.lambda_min.max(self.lambda_init * self.decay.powi(e))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerturbStats {
    pub tried: usize,
    pub accepted: usize,
    /// Sum of every step length tried.
    pub length_sum: f64,
    /// HPWL before and after each accepted step.
    pub accepted_hpwl: Vec<(f64, f64)>,
}

/// One call of the perturbation step at iteration `k`. Returns the new
/// decay index `ℓ_k`.
pub fn perturb<R: Rng + ?Sized>(
    inst: &Instance,
    p: &mut Placement,
    k: u64,
    ell_prev: u64,
    cfg: &PerturbConfig,
    rng: &mut R,
    stats: &mut PerturbStats,
) -> Result<u64> {
    let mut ell = ell_prev;
    for _ in 0..cfg.num {
        ell = if k < ell_prev { rng.gen_range(k..=ell_prev) } else { k };
        let v = hpwl_subgradient(inst, p)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let base = hpwl(inst, p)?;
        for _ in 0..cfg.retries {
            let step = cfg.step_length(ell);
            stats.tried += 1;
            stats.length_sum += step;
            let mut trial = p.clone();
            for (z, g) in trial.as_mut_slice().iter_mut().zip(&v) {
                *z -= step * g / norm;
            }
            let h = hpwl(inst, &trial)?;
            if h < base {
                *p = trial;
                stats.accepted += 1;
                stats.accepted_hpwl.push((base, h));
                break;
            }
            ell += 1;
        }
    }
    Ok(ell)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverConfig {
    pub gamma_init: f64,
    /// Projection progress factor `Γ > 1`.
    pub gamma_growth: f64,
    /// Post-processing restart fraction `θ`.
    pub theta: f64,
    pub max_iterations: usize,
    pub roa_threshold: f64,
    pub window: CycleWindow,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            gamma_init: 0.1,
            gamma_growth: 1.1,
            theta: 0.5,
            max_iterations: 10_000,
            roa_threshold: ROA_THRESHOLD,
            window: CycleWindow::default(),
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_init > 0.0 && self.gamma_init <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma_init must lie in (0, 1], got {}", self.gamma_init)));
        }
        if !(self.gamma_growth >= 1.0) {
            return Err(Error::InvalidConfig(format!("Gamma must be at least 1, got {}", self.gamma_growth)));
        }
        if !(self.theta >= 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        Ok(())
    }

    /// `min(1, γ_init · Γ^k)`.
    pub fn gamma(&self, k: u64) -> f64 {
        let e = k.min(i32::MAX as u64) as i32;
        (self.gamma_init * self.gamma_growth.powi(e)).min(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct PerRmapOutcome {
    pub placement: Placement,
    pub status: Status,
    /// Iterations executed by this call.
    pub iterations: usize,
    /// Iteration index the call started from.
    pub start_iteration: u64,
    pub ell: u64,
    pub roa: f64,
    pub hpwl: f64,
    pub trajectory: Trajectory,
    pub perturb: PerturbStats,
}

/// Where a Per-RMAP run starts its iteration counter and decay index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Restart {
    pub iteration: u64,
    pub ell: u64,
}

/// Perturb, regenerate the position order, then take a `γ`-scaled RMAP
/// step, until the ROA check passes. A fresh run from a feasible start
/// returns at once; a restarted run iterates at least once.
#[allow(clippy::too_many_arguments)]
pub fn per_rmap<R: Rng + ?Sized>(
    inst: &Instance,
    family: &ConstraintFamily,
    init: &Placement,
    sweep: &SweepConfig,
    perturb_cfg: &PerturbConfig,
    driver: &DriverConfig,
    restart: Restart,
    rng: &mut R,
) -> Result<PerRmapOutcome> {
    sweep.validate()?;
    perturb_cfg.validate()?;
    driver.validate()?;
    let mut p = init.clone();
    let mut reset = ResetState::new(family);
    let mut trajectory = Trajectory::default();
    let mut window = StateWindow::new(&driver.window);
    let mut stats = PerturbStats::default();
    let mut ell = restart.ell;
    let quantum = driver.window.state_tol.max(f64::MIN_POSITIVE);
    let mut current = roa(inst, &p);
    let mut status = Status::MaxIter;
    let mut iterations = 0;
    window.push(&p, current);
    trajectory.records.push(TrajectoryRecord {
        sweep: 0,
        roa: current,
        hpwl: hpwl_unchecked(inst, &p),
        hash: placement_hash(&p, quantum),
        cycle_flag: false,
        gamma: None,
        ell: Some(ell),
    });
    // a restarted run always takes at least one iteration
    let steps = if current < driver.roa_threshold && restart == Restart::default() {
        status = Status::Feasible;
        0
    } else {
        driver.max_iterations
    };
    for step in 0..steps {
        let k = restart.iteration + step as u64;
        ell = perturb(inst, &mut p, k, ell, perturb_cfg, rng, &mut stats)?;
        let order = order_for_sweep(inst, &p, family, OrderKind::Position, step + 1);
        let gamma = driver.gamma(k);
        let mut projected = p.clone();
        rmap_sweep(&mut projected, family, &order, sweep, &mut reset)?;
        if gamma >= 1.0 {
            p = projected;
        } else {
            for (z, t) in p.as_mut_slice().iter_mut().zip(projected.as_slice()) {
                *z += gamma * (t - *z);
            }
        }
        iterations = step + 1;
        current = roa(inst, &p);
        window.push(&p, current);
        let feasible = current < driver.roa_threshold;
        let cycle = if feasible { false } else { window.check(&driver.window).detected };
        trajectory.records.push(TrajectoryRecord {
            sweep: iterations,
            roa: current,
            hpwl: hpwl_unchecked(inst, &p),
            hash: placement_hash(&p, quantum),
            cycle_flag: cycle,
            gamma: Some(gamma),
            ell: Some(ell),
        });
        if feasible {
            status = Status::Feasible;
            break;
        }
        if cycle {
            status = Status::Oscillating;
            break;
        }
    }
    let hp = hpwl(inst, &p)?;
    Ok(PerRmapOutcome {
        placement: p,
        status,
        iterations,
        start_iteration: restart.iteration,
        ell,
        roa: current,
        hpwl: hp,
        trajectory,
        perturb: stats,
    })
}

/// Reruns Per-RMAP from a feasible result with the iteration counter and
/// decay index restarted at `floor(k_total · θ)`, and keeps whichever
/// feasible result has the lower HPWL.
pub fn post_process<R: Rng + ?Sized>(
    inst: &Instance,
    family: &ConstraintFamily,
    main: &PerRmapOutcome,
    sweep: &SweepConfig,
    perturb_cfg: &PerturbConfig,
    driver: &DriverConfig,
    rng: &mut R,
) -> Result<PerRmapOutcome> {
    if main.status != Status::Feasible {
        return Ok(main.clone());
    }
    let k_total = main.start_iteration + main.iterations as u64;
    let k0 = (k_total as f64 * driver.theta).floor() as u64;
    let rerun = per_rmap(inst, family, &main.placement, sweep, perturb_cfg, driver, Restart { iteration: k0, ell: k0 }, rng)?;
    if rerun.status == Status::Feasible && rerun.hpwl < main.hpwl {
        Ok(rerun)
    } else {
        Ok(main.clone())
    }
}

/// Snaps side-assigned pins to pitch slots along their side, keeping their
/// order along the side and using each slot at most once. Pitch defaults to
/// `side length / (pins on side + 1)`.
pub fn legalize_io(p: &Placement, io: &[IoConstraint], pitch: Option<f64>) -> Result<Placement> {
    let mut out = p.clone();
    for side in Side::ALL {
        let on_side: Vec<&IoConstraint> = io.iter().filter(|c| c.side == side).collect();
        if on_side.is_empty() {
            continue;
        }
        let region = on_side[0].region;
        let length = match side {
            Side::Left | Side::Right => region.height,
            Side::Bottom | Side::Top => region.width,
        };
        let pitch = pitch.unwrap_or(length / (on_side.len() + 1) as f64);
        if !(pitch > 0.0) {
            return Err(Error::InvalidConfig(format!("pin pitch must be positive, got {pitch}")));
        }
        let n_slots = (length / pitch + 1e-9).floor() as usize + 1;
        if on_side.len() > n_slots {
            return Err(Error::TooManyPins { side, pins: on_side.len(), slots: n_slots });
        }
        let tangential = |c: &IoConstraint| {
            let (x, y) = p.io(c.pin);
            match side {
                Side::Left | Side::Right => y,
                Side::Bottom | Side::Top => x,
            }
        };
        let mut sorted = on_side.clone();
        sorted.sort_by(|a, b| tangential(a).total_cmp(&tangential(b)).then(a.pin.cmp(&b.pin)));
        let positions: Vec<f64> = sorted.iter().map(|c| tangential(c)).collect();
        let slots: Vec<f64> = (0..n_slots).map(|m| (m as f64 * pitch).min(length)).collect();
        let assignment = monotone_assignment(&positions, &slots);
        for (c, &s) in sorted.iter().zip(&assignment) {
            let t = slots[s];
            let (x, y) = match side {
                Side::Left => (0.0, t),
                Side::Right => (region.width, t),
                Side::Bottom => (t, 0.0),
                Side::Top => (t, region.height),
            };
            out.set_io(c.pin, x, y);
        }
    }
    Ok(out)
}

/// Order-preserving assignment of sorted `points` to strictly increasing
/// `slots` minimizing total absolute displacement. Requires
/// `points.len() <= slots.len()`.
pub fn monotone_assignment(points: &[f64], slots: &[f64]) -> Vec<usize> {
    let (n, m) = (points.len(), slots.len());
    if n == 0 {
        return Vec::new();
    }
    // cost[a][b]: best cost placing the first a+1 points with point a in slot b
    let mut cost = vec![vec![f64::INFINITY; m]; n];
    let mut from = vec![vec![usize::MAX; m]; n];
    for b in 0..m {
        cost[0][b] = (points[0] - slots[b]).abs();
    }
    for a in 1..n {
        let (mut best, mut arg) = (f64::INFINITY, usize::MAX);
        for b in a..m {
            if cost[a - 1][b - 1] < best {
                best = cost[a - 1][b - 1];
                arg = b - 1;
            }
            if best.is_finite() {
                cost[a][b] = best + (points[a] - slots[b]).abs();
                from[a][b] = arg;
            }
        }
    }
    let mut b = (0..m).min_by(|&x, &y| cost[n - 1][x].total_cmp(&cost[n - 1][y])).unwrap();
    let mut out = vec![0; n];
    for a in (0..n).rev() {
        out[a] = b;
        if a > 0 {
            b = from[a][b];
        }
    }
    out
}
