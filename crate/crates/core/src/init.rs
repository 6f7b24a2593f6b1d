//! Wirelength-driven initial placement: a quadratic net model solved with
//! Jacobi-preconditioned conjugate gradients, then small modules pushed
//! out toward the die boundary.

use crate::error::{Error, Result};
use crate::model::{Instance, Pin, PinOwner, Placement};
use serde::{Deserialize, Serialize};

/// Symmetric sparse matrix stored by rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        SparseMatrix { rows: vec![Vec::new(); n] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` at `(r, c)`.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        match self.rows[r].iter_mut().find(|(k, _)| *k == c) {
            Some((_, x)) => *x += v,
            None => self.rows[r].push((c, v)),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.rows[r].iter().find(|(k, _)| *k == c).map_or(0.0, |(_, v)| *v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|r| self.get(r, r)).collect()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(c, v)| v * x[c]).sum()).collect()
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                d[r][c] += v;
            }
        }
        d
    }

    pub fn from_dense(d: &[Vec<f64>]) -> Self {
        let mut m = SparseMatrix::new(d.len());
        for (r, row) in d.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    m.add(r, c, v);
                }
            }
        }
        m
    }
}

/// One end of a spring: a free variable with a pin offset, or a fixed point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint {
    Var { var: usize, dx: f64, dy: f64 },
    Fixed { x: f64, y: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spring {
    pub a: Endpoint,
    pub b: Endpoint,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    /// Nets with more pins than this become stars.
    pub star_above: usize,
}

impl Default for NetModel {
    fn default() -> Self {
        NetModel { star_above: 3 }
    }
}

/// Per-axis system `A u = b`. Variables are module corners followed by
/// star centers; I/O pins are fixed. Both axes share the matrix.
#[derive(Clone, Debug)]
pub struct QuadraticSystem {
    pub n_modules: usize,
    pub n_centers: usize,
    pub matrix: SparseMatrix,
    pub rhs_x: Vec<f64>,
    pub rhs_y: Vec<f64>,
    pub springs: Vec<Spring>,
}

impl QuadraticSystem {
    pub fn n_vars(&self) -> usize {
        self.n_modules + self.n_centers
    }

    /// Quadratic wirelength `Σ w ((xa - xb)^2 + (ya - yb)^2)` at the given
    /// variable values.
    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let at = |e: &Endpoint| match *e {
            Endpoint::Var { var, dx, dy } => (x[var] + dx, y[var] + dy),
            Endpoint::Fixed { x, y } => (x, y),
        };
        self.springs
            .iter()
            .map(|s| {
                let (pa, pb) = (at(&s.a), at(&s.b));
                s.weight * ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2))
            })
            .sum()
    }
}

fn endpoint(inst: &Instance, pin: &Pin) -> Endpoint {
    match pin.owner {
        PinOwner::Module(i) => Endpoint::Var { var: i, dx: pin.dx, dy: pin.dy },
        PinOwner::Io(k) => Endpoint::Fixed { x: inst.io_pins[k].x, y: inst.io_pins[k].y },
    }
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

pub fn build_system(inst: &Instance, model: NetModel) -> Result<QuadraticSystem> {
    inst.validate()?;
    let n_m = inst.n_modules();
    let mut springs = Vec::new();
    let mut n_centers = 0;
    for net in &inst.nets {
        let p = net.pins.len();
        if p < 2 {
            continue;
        }
        let ends: Vec<Endpoint> = net.pins.iter().map(|pin| endpoint(inst, pin)).collect();
        if p <= model.star_above {
            let w = 1.0 / (p - 1) as f64;
            for a in 0..p {
                for b in a + 1..p {
                    springs.push(Spring { a: ends[a], b: ends[b], weight: w });
                }
            }
        } else {
            let center = Endpoint::Var { var: n_m + n_centers, dx: 0.0, dy: 0.0 };
            n_centers += 1;
            let w = p as f64 / (p - 1) as f64;
            for &e in &ends {
                springs.push(Spring { a: e, b: center, weight: w });
            }
        }
    }
    let n = n_m + n_centers;
    let mut matrix = SparseMatrix::new(n);
    let (mut rhs_x, mut rhs_y) = (vec![0.0; n], vec![0.0; n]);
    let mut parent: Vec<usize> = (0..n).collect();
    let mut anchored = vec![false; n];
    for s in &springs {
        match (s.a, s.b) {
            (Endpoint::Var { var: u, dx: dxu, dy: dyu }, Endpoint::Var { var: v, dx: dxv, dy: dyv }) => {
                if u == v {
                    continue;
                }
                // w (u + du - v - dv)^2
                matrix.add(u, u, s.weight);
                matrix.add(v, v, s.weight);
                matrix.add(u, v, -s.weight);
                matrix.add(v, u, -s.weight);
                rhs_x[u] -= s.weight * (dxu - dxv);
                rhs_x[v] += s.weight * (dxu - dxv);
                rhs_y[u] -= s.weight * (dyu - dyv);
                rhs_y[v] += s.weight * (dyu - dyv);
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                parent[ru] = rv;
            }
            (Endpoint::Var { var, dx, dy }, Endpoint::Fixed { x, y })
            | (Endpoint::Fixed { x, y }, Endpoint::Var { var, dx, dy }) => {
                matrix.add(var, var, s.weight);
                rhs_x[var] += s.weight * (x - dx);
                rhs_y[var] += s.weight * (y - dy);
                anchored[var] = true;
            }
            (Endpoint::Fixed { .. }, Endpoint::Fixed { .. }) => {}
        }
    }
    let mut root_anchored = vec![false; n];
    for v in 0..n {
        if anchored[v] {
            let r = find(&mut parent, v);
            root_anchored[r] = true;
        }
    }
    for v in 0..n {
        let r = find(&mut parent, v);
        if !root_anchored[r] {
            return Err(Error::FloatingComponent(v));
        }
    }
    Ok(QuadraticSystem { n_modules: n_m, n_centers, matrix, rhs_x, rhs_y, springs })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients; stops once
/// `||b - A x|| <= tol ||b||`.
pub fn solve_pcg(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<PcgSolution> {
    let n = a.dim();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(PcgSolution { x, iterations: 0, residual: 0.0 });
    }
    let inv: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm {
            return Ok(PcgSolution { x, iterations: it, residual: rnorm / bnorm });
        }
        let ap = a.mul(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::PcgDiverged { iterations: it, residual: rnorm / bnorm });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        z = r.iter().zip(&inv).map(|(r, m)| r * m).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let rnorm = dot(&r, &r).sqrt();
    if rnorm <= tol * bnorm {
        Ok(PcgSolution { x, iterations: max_iter, residual: rnorm / bnorm })
    } else {
        Err(Error::PcgDiverged { iterations: max_iter, residual: rnorm / bnorm })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub model: NetModel,
    pub tol: f64,
    pub max_iter: usize,
    pub shift: ShiftConfig,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig { model: NetModel::default(), tol: 1e-8, max_iter: 10_000, shift: ShiftConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftConfig {
    /// A module is small when a side is below this fraction of the largest
    /// side along the same axis.
    pub small_fraction: f64,
    /// Shifting runs only when the largest/smallest dimension ratio exceeds
    /// this value.
    pub ratio_threshold: f64,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        ShiftConfig { small_fraction: 0.1, ratio_threshold: 10.0 }
    }
}

/// Unclamped QP optimum: module corners and star centers per axis.
pub fn solve_qp(sys: &QuadraticSystem, tol: f64, max_iter: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = solve_pcg(&sys.matrix, &sys.rhs_x, tol, max_iter)?.x;
    let y = solve_pcg(&sys.matrix, &sys.rhs_y, tol, max_iter)?.x;
    Ok((x, y))
}

/// Full initialization: QP solve, modules clamped into the die, star
/// centers dropped, I/O pins at their recorded positions, then shifting.
pub fn initial_placement(inst: &Instance, cfg: &InitConfig) -> Result<Placement> {
    let sys = build_system(inst, cfg.model)?;
    let (x, y) = solve_qp(&sys, cfg.tol, cfg.max_iter)?;
    let mut p = inst.initial_placement();
    for (i, m) in inst.modules.iter().enumerate() {
        let cx = x[i].clamp(0.0, inst.region.width - m.width);
        let cy = y[i].clamp(0.0, inst.region.height - m.height);
        p.set_module(i, cx, cy);
    }
    Ok(shift_small_modules(&p, inst, &cfg.shift))
}

/// Moves small modules along the ray from the die center through their own
/// center until they touch the die boundary. A module sitting exactly at
/// the die center goes right.
pub fn shift_small_modules(p: &Placement, inst: &Instance, cfg: &ShiftConfig) -> Placement {
    let mut out = p.clone();
    if inst.modules.is_empty() {
        return out;
    }
    let dims = inst.modules.iter().flat_map(|m| [m.width, m.height]);
    let (lo, hi) = dims.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    if !(hi / lo > cfg.ratio_threshold) {
        return out;
    }
    let wmax = inst.modules.iter().map(|m| m.width).fold(0.0, f64::max);
    let hmax = inst.modules.iter().map(|m| m.height).fold(0.0, f64::max);
    let (w, h) = (inst.region.width, inst.region.height);
    for (i, m) in inst.modules.iter().enumerate() {
        if !(m.width < cfg.small_fraction * wmax || m.height < cfg.small_fraction * hmax) {
            continue;
        }
        let (mx, my) = (p.x(i) + m.width / 2.0, p.y(i) + m.height / 2.0);
        let (mut dx, mut dy) = (mx - w / 2.0, my - h / 2.0);
        if dx == 0.0 && dy == 0.0 {
            dx = 1.0;
            dy = 0.0;
        }
        let reach = |pos: f64, d: f64, lo: f64, hi: f64| {
            if d > 0.0 {
                (hi - pos) / d
            } else if d < 0.0 {
                (lo - pos) / d
            } else {
                f64::INFINITY
            }
        };
        let t = reach(mx, dx, m.width / 2.0, w - m.width / 2.0)
            .min(reach(my, dy, m.height / 2.0, h - m.height / 2.0))
            .max(0.0);
        let nx = (mx + t * dx - m.width / 2.0).clamp(0.0, w - m.width);
        let ny = (my + t * dy - m.height / 2.0).clamp(0.0, h - m.height);
        out.set_module(i, nx, ny);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IoPin, Module, Net, Region};

    fn io(name: &str, x: f64, y: f64) -> IoPin {
        IoPin { name: name.into(), side: None, fixed: true, x, y }
    }

    #[test]
    fn clique_and_star_weights() {
        let mut inst = Instance::new(
            "w",
            Region::new(10.0, 10.0).unwrap(),
            (0..5).map(|k| Module::new(format!("m{k}"), 1.0, 1.0)).collect(),
        );
        inst.io_pins.push(io("p", 0.0, 0.0));
        inst.nets.push(Net { name: "two".into(), pins: vec![Pin::module(0, 0.0, 0.0), Pin::io(0)] });
        let sys = build_system(&inst, NetModel::default());
        assert!(matches!(sys, Err(Error::FloatingComponent(1))));
        inst.nets.push(Net {
            name: "three".into(),
            pins: vec![Pin::module(0, 0.0, 0.0), Pin::module(1, 0.0, 0.0), Pin::module(2, 0.0, 0.0)],
        });
        inst.nets.push(Net { name: "five".into(), pins: (0..5).map(|k| Pin::module(k, 0.0, 0.0)).collect() });
        let sys = build_system(&inst, NetModel::default()).unwrap();
        assert_eq!(sys.springs[0].weight, 1.0);
        assert!(sys.springs[1..4].iter().all(|s| s.weight == 0.5));
        assert_eq!(sys.springs.len(), 1 + 3 + 5);
        assert!(sys.springs[4..].iter().all(|s| s.weight == 1.25));
        assert_eq!(sys.n_centers, 1);
    }

    #[test]
    fn midpoint_between_two_fixed_pins() {
        let mut inst = Instance::new("m", Region::new(10.0, 10.0).unwrap(), vec![Module::new("a", 1.0, 1.0)]);
        inst.io_pins.push(io("l", 0.0, 3.0));
        inst.io_pins.push(io("r", 10.0, 3.0));
        for k in 0..2 {
            inst.nets.push(Net { name: format!("n{k}"), pins: vec![Pin::module(0, 0.0, 0.0), Pin::io(k)] });
        }
        let sys = build_system(&inst, NetModel::default()).unwrap();
        let (x, y) = solve_qp(&sys, 1e-12, 100).unwrap();
        assert!((x[0] - 5.0).abs() < 1e-12);
        assert!((y[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_system() {
        let mut a = SparseMatrix::new(3);
        for k in 0..3 {
            a.add(k, k, 1.0);
        }
        let b = [1.0, -2.0, 3.5];
        let s = solve_pcg(&a, &b, 1e-12, 10).unwrap();
        assert_eq!(s.x, b.to_vec());
    }

    #[test]
    fn pcg_reports_non_convergence() {
        let d = vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]];
        let a = SparseMatrix::from_dense(&d);
        assert!(matches!(solve_pcg(&a, &[1.0, 2.0, 3.0], 1e-14, 1), Err(Error::PcgDiverged { iterations: 1, .. })));
    }

    #[test]
    fn shift_cases() {
        let mut mods: Vec<Module> = (0..4).map(|k| Module::new(format!("big{k}"), 20.0, 20.0)).collect();
        mods.push(Module::new("small", 1.0, 1.0));
        let inst = Instance::new("s", Region::new(100.0, 100.0).unwrap(), mods);
        let mut p = inst.initial_placement();
        p.set_module(4, 54.5, 49.5);
        let q = shift_small_modules(&p, &inst, &ShiftConfig::default());
        assert_eq!((q.x(4), q.y(4)), (99.0, 49.5));
        for k in 0..4 {
            assert_eq!((q.x(k), q.y(k)), (p.x(k), p.y(k)));
        }
        p.set_module(4, 49.5, 49.5);
        let q = shift_small_modules(&p, &inst, &ShiftConfig::default());
        assert_eq!((q.x(4), q.y(4)), (99.0, 49.5));

        let same = Instance::new(
            "u",
            Region::new(10.0, 10.0).unwrap(),
            vec![Module::new("a", 2.0, 2.0), Module::new("b", 2.0, 2.0)],
        );
        let p = Placement::from_xy(&[3.0, 5.0], &[3.0, 4.0]);
        assert_eq!(shift_small_modules(&p, &same, &ShiftConfig::default()), p);
    }
}
