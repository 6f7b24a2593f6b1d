//! Domain types shared by every other module: the die, modules, I/O pins,
//! nets and the flat placement vector.
//!
//! A placement over `N = N_m + N_io` entities is stored as one vector of
//! length `2N`: all x-coordinates first, then all y-coordinates. Modules
//! occupy entity indices `0..N_m`, I/O pins follow at `N_m..N`. A module's
//! coordinate is its bottom-left corner.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fixed outline `[0, width] x [0, height]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "die must have positive finite size, got {width} x {height}"
            )));
        }
        Ok(Region { width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Module {
    pub name: String,
    pub width: f64,
    pub height: f64,
}

impl Module {
    pub fn new(name: impl Into<String>, width: f64, height: f64) -> Self {
        Module { name: name.into(), width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Die boundary a pin is assigned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Closest die side to `(x, y)`; ties resolve in `ALL` order.
    pub fn nearest(region: &Region, x: f64, y: f64) -> Side {
        let d = [x.abs(), (region.width - x).abs(), y.abs(), (region.height - y).abs()];
        let mut best = 0;
        for k in 1..4 {
            if d[k] < d[best] {
                best = k;
            }
        }
        Side::ALL[best]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IoPin {
    pub name: String,
    /// Present only when I/O assignment is active.
    pub side: Option<Side>,
    pub fixed: bool,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PinOwner {
    Module(usize),
    Io(usize),
}

/// A net terminal. Offsets are measured from the owner's bottom-left
/// corner and are zero for I/O pins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    pub owner: PinOwner,
    pub dx: f64,
    pub dy: f64,
}

impl Pin {
    pub fn module(id: usize, dx: f64, dy: f64) -> Self {
        Pin { owner: PinOwner::Module(id), dx, dy }
    }

    pub fn io(id: usize) -> Self {
        Pin { owner: PinOwner::Io(id), dx: 0.0, dy: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub pins: Vec<Pin>,
}

/// A complete floorplanning problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub region: Region,
    pub modules: Vec<Module>,
    pub io_pins: Vec<IoPin>,
    pub nets: Vec<Net>,
}

impl Instance {
    pub fn new(name: impl Into<String>, region: Region, modules: Vec<Module>) -> Self {
        Instance { name: name.into(), region, modules, io_pins: Vec::new(), nets: Vec::new() }
    }

    pub fn n_modules(&self) -> usize {
        self.modules.len()
    }

    pub fn n_io(&self) -> usize {
        self.io_pins.len()
    }

    /// Checks every structural invariant: module sizes fit the die, pin
    /// owners exist, module pin offsets lie on the module, nets are non-empty.
    pub fn validate(&self) -> Result<()> {
        let r = &self.region;
        for m in &self.modules {
            if !(m.width > 0.0 && m.height > 0.0) {
                return Err(Error::InvalidInstance(format!("module {} has non-positive size", m.name)));
            }
            if m.width > r.width || m.height > r.height {
                return Err(Error::InvalidInstance(format!(
                    "module {} ({} x {}) does not fit the {} x {} die",
                    m.name, m.width, m.height, r.width, r.height
                )));
            }
        }
        for net in &self.nets {
            if net.pins.is_empty() {
                return Err(Error::InvalidInstance(format!("net {} has no pins", net.name)));
            }
            for pin in &net.pins {
                self.check_pin(pin)?;
            }
        }
        Ok(())
    }

    fn check_pin(&self, pin: &Pin) -> Result<()> {
        match pin.owner {
            PinOwner::Module(i) => {
                let m = self.modules.get(i).ok_or(Error::InvalidId(i))?;
                let eps = 1e-9 * (1.0 + m.width.max(m.height));
                if pin.dx < -eps || pin.dy < -eps || pin.dx > m.width + eps || pin.dy > m.height + eps {
                    return Err(Error::InvalidInstance(format!(
                        "pin offset ({}, {}) lies outside module {}",
                        pin.dx, pin.dy, m.name
                    )));
                }
            }
            PinOwner::Io(p) => {
                if p >= self.io_pins.len() {
                    return Err(Error::InvalidId(self.modules.len() + p));
                }
            }
        }
        Ok(())
    }

    /// Placement with modules at the origin and I/O pins at their recorded
    /// coordinates.
    pub fn initial_placement(&self) -> Placement {
        let mut p = Placement::zeros(self.n_modules(), self.n_io());
        for (k, pin) in self.io_pins.iter().enumerate() {
            p.set_io(k, pin.x, pin.y);
        }
        p
    }

    pub fn total_module_area(&self) -> f64 {
        self.modules.iter().map(Module::area).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entity {
    Module(usize),
    Io(usize),
}

/// Stacked coordinate vector `z = (x_1..x_N, y_1..y_N)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    n_modules: usize,
    n_io: usize,
    z: Vec<f64>,
}

impl Placement {
    pub fn zeros(n_modules: usize, n_io: usize) -> Self {
        Placement { n_modules, n_io, z: vec![0.0; 2 * (n_modules + n_io)] }
    }

    /// Builds a placement from a stacked vector of length `2 (n_modules + n_io)`.
    pub fn from_vec(n_modules: usize, n_io: usize, z: Vec<f64>) -> Result<Self> {
        if z.len() != 2 * (n_modules + n_io) {
            return Err(Error::InvalidInstance(format!(
                "placement vector has length {}, expected {}",
                z.len(),
                2 * (n_modules + n_io)
            )));
        }
        Ok(Placement { n_modules, n_io, z })
    }

    /// Module-only placement from separate x and y lists.
    pub fn from_xy(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len(), "x and y must have equal length");
        let mut z = x.to_vec();
        z.extend_from_slice(y);
        Placement { n_modules: x.len(), n_io: 0, z }
    }

    pub fn n_modules(&self) -> usize {
        self.n_modules
    }

    pub fn n_io(&self) -> usize {
        self.n_io
    }

    pub fn n_entities(&self) -> usize {
        self.n_modules + self.n_io
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.z
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.z
    }

    pub fn index(&self, entity: Entity, axis: Axis) -> usize {
        let e = match entity {
            Entity::Module(i) => {
                assert!(i < self.n_modules, "module index {i} out of range");
                i
            }
            Entity::Io(p) => {
                assert!(p < self.n_io, "io index {p} out of range");
                self.n_modules + p
            }
        };
        match axis {
            Axis::X => e,
            Axis::Y => self.n_entities() + e,
        }
    }

    pub fn entity_of(&self, flat: usize) -> (Entity, Axis) {
        let n = self.n_entities();
        assert!(flat < 2 * n, "flat index {flat} out of range");
        let (e, axis) = if flat < n { (flat, Axis::X) } else { (flat - n, Axis::Y) };
        let entity = if e < self.n_modules { Entity::Module(e) } else { Entity::Io(e - self.n_modules) };
        (entity, axis)
    }

    pub fn x(&self, module: usize) -> f64 {
        self.z[module]
    }

    pub fn y(&self, module: usize) -> f64 {
        self.z[self.n_entities() + module]
    }

    pub fn set_module(&mut self, module: usize, x: f64, y: f64) {
        let n = self.n_entities();
        self.z[module] = x;
        self.z[n + module] = y;
    }

    pub fn io(&self, pin: usize) -> (f64, f64) {
        let e = self.n_modules + pin;
        (self.z[e], self.z[self.n_entities() + e])
    }

    pub fn set_io(&mut self, pin: usize, x: f64, y: f64) {
        let e = self.n_modules + pin;
        let n = self.n_entities();
        self.z[e] = x;
        self.z[n + e] = y;
    }

    pub fn distance(&self, other: &Placement) -> f64 {
        self.z.iter().zip(&other.z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Placement) -> f64 {
        self.z.iter().zip(&other.z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Overlap area of modules `i` and `j`.
pub fn overlap_area(inst: &Instance, p: &Placement, i: usize, j: usize) -> Result<f64> {
    let n = inst.n_modules();
    if i >= n {
        return Err(Error::InvalidId(i));
    }
    if j >= n {
        return Err(Error::InvalidId(j));
    }
    if i == j {
        return Err(Error::InvalidInstance(format!("overlap of module {i} with itself")));
    }
    Ok(overlap_unchecked(inst, p, i, j))
}

pub(crate) fn overlap_unchecked(inst: &Instance, p: &Placement, i: usize, j: usize) -> f64 {
    let (mi, mj) = (&inst.modules[i], &inst.modules[j]);
    let ox = (p.x(i) + mi.width).min(p.x(j) + mj.width) - p.x(i).max(p.x(j));
    let oy = (p.y(i) + mi.height).min(p.y(j) + mj.height) - p.y(i).max(p.y(j));
    ox.max(0.0) * oy.max(0.0)
}

/// Sum of pairwise module overlaps.
pub fn total_overlap(inst: &Instance, p: &Placement) -> f64 {
    let n = inst.n_modules();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += overlap_unchecked(inst, p, i, j);
        }
    }
    sum
}

/// Relative overlapping area: total pairwise overlap over die area.
pub fn roa(inst: &Instance, p: &Placement) -> f64 {
    total_overlap(inst, p) / inst.region.area()
}

/// Pair with the largest overlap, if any pair overlaps.
pub fn max_overlap_pair(inst: &Instance, p: &Placement) -> Option<(usize, usize, f64)> {
    let n = inst.n_modules();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let a = overlap_unchecked(inst, p, i, j);
            if a > 0.0 && best.is_none_or(|b| a > b.2) {
                best = Some((i, j, a));
            }
        }
    }
    best
}

pub fn pin_position(inst: &Instance, p: &Placement, pin: &Pin) -> Result<(f64, f64)> {
    match pin.owner {
        PinOwner::Module(i) => {
            if i >= inst.n_modules() || i >= p.n_modules() {
                return Err(Error::InvalidId(i));
            }
            Ok((p.x(i) + pin.dx, p.y(i) + pin.dy))
        }
        PinOwner::Io(k) => {
            if k >= inst.n_io() || k >= p.n_io() {
                return Err(Error::InvalidId(inst.n_modules() + k));
            }
            Ok(p.io(k))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn squares(n: usize) -> Instance {
        let modules = (0..n).map(|i| Module::new(format!("m{i}"), 1.0, 1.0)).collect();
        Instance::new("sq", Region::new(10.0, 10.0).unwrap(), modules)
    }

    #[test]
    fn identical_squares_overlap_fully() {
        let inst = squares(2);
        let p = Placement::from_xy(&[2.0, 2.0], &[3.0, 3.0]);
        assert_eq!(overlap_area(&inst, &p, 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_and_touching_have_zero_overlap() {
        let inst = squares(2);
        let p = Placement::from_xy(&[0.0, 5.0], &[0.0, 0.0]);
        assert_eq!(overlap_area(&inst, &p, 0, 1).unwrap(), 0.0);
        let p = Placement::from_xy(&[0.0, 1.0], &[0.0, 0.5]);
        assert_eq!(overlap_area(&inst, &p, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn overlap_rejects_bad_ids() {
        let inst = squares(2);
        let p = Placement::from_xy(&[0.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(overlap_area(&inst, &p, 0, 7), Err(Error::InvalidId(7))));
        assert!(overlap_area(&inst, &p, 1, 1).is_err());
    }

    #[test]
    fn index_map_round_trips() {
        let p = Placement::zeros(3, 2);
        for flat in 0..10 {
            let (e, a) = p.entity_of(flat);
            assert_eq!(p.index(e, a), flat);
        }
        assert_eq!(p.index(Entity::Io(0), Axis::X), 3);
        assert_eq!(p.index(Entity::Module(1), Axis::Y), 6);
    }

    #[test]
    fn pin_positions() {
        let mut inst = squares(1);
        inst.modules[0] = Module::new("m", 2.0, 2.0);
        inst.io_pins.push(IoPin { name: "p".into(), side: None, fixed: true, x: 0.0, y: 5.0 });
        let mut p = inst.initial_placement();
        p.set_module(0, 2.0, 3.0);
        assert_eq!(pin_position(&inst, &p, &Pin::module(0, 0.0, 0.0)).unwrap(), (2.0, 3.0));
        assert_eq!(pin_position(&inst, &p, &Pin::module(0, 1.0, 1.0)).unwrap(), (3.0, 4.0));
        p.set_module(0, 7.0, 1.0);
        assert_eq!(pin_position(&inst, &p, &Pin::io(0)).unwrap(), (0.0, 5.0));
        assert!(pin_position(&inst, &p, &Pin::io(3)).is_err());
        assert!(pin_position(&inst, &p, &Pin::module(2, 0.0, 0.0)).is_err());
    }

    #[test]
    fn nearest_side() {
        let r = Region::new(10.0, 20.0).unwrap();
        assert_eq!(Side::nearest(&r, 0.5, 10.0), Side::Left);
        assert_eq!(Side::nearest(&r, 9.0, 10.0), Side::Right);
        assert_eq!(Side::nearest(&r, 5.0, 0.2), Side::Bottom);
        assert_eq!(Side::nearest(&r, 5.0, 19.9), Side::Top);
    }

    #[test]
    fn validate_catches_oversized_module() {
        let mut inst = squares(1);
        inst.modules[0].width = 11.0;
        assert!(inst.validate().is_err());
    }
}
