//! Constraint sets of the feasibility problem.
//!
//! Each pair of modules `(i, j)` contributes the union
//! `C_ij = C_ij,L ∪ C_ij,R ∪ C_ij,B ∪ C_ij,A`. Every member of the union is a
//! convex polyhedron over the four local coordinates `(x_i, x_j, y_i, y_j)`:
//! the box keeping both modules inside the die, intersected with one
//! ordering halfspace (`i` left of `j`, right of, below, above).

use crate::error::{Error, Result};
use crate::model::{Instance, Placement, Region, Side};
use crate::projection;
use serde::{Deserialize, Serialize};

/// Default absolute membership tolerance in length units.
pub const MEMBER_TOL: f64 = 1e-9;

/// Which relative position of module `i` with respect to module `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubsetId {
    /// `i` left of `j`.
    L,
    /// `i` right of `j`.
    R,
    /// `i` below `j`.
    B,
    /// `i` above `j`.
    A,
}

impl SubsetId {
    pub const ALL: [SubsetId; 4] = [SubsetId::L, SubsetId::R, SubsetId::B, SubsetId::A];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> SubsetId {
        match self {
            SubsetId::L => SubsetId::R,
            SubsetId::R => SubsetId::L,
            SubsetId::B => SubsetId::A,
            SubsetId::A => SubsetId::B,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, SubsetId::L | SubsetId::R)
    }

    pub fn letter(self) -> char {
        match self {
            SubsetId::L => 'L',
            SubsetId::R => 'R',
            SubsetId::B => 'B',
            SubsetId::A => 'A',
        }
    }
}

/// `a · u <= b` over local coordinates `u = (x_i, x_j, y_i, y_j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfspace {
    pub a: [f64; 4],
    pub b: f64,
}

impl Halfspace {
    /// Signed slack `b - a·u`; negative when violated.
    pub fn slack(&self, u: &[f64; 4]) -> f64 {
        self.b - dot4(&self.a, u)
    }

    pub fn norm(&self) -> f64 {
        dot4(&self.a, &self.a).sqrt()
    }
}

pub(crate) fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// One convex member `C_ij,k` of a pair constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSubset {
    pub i: usize,
    pub j: usize,
    pub id: SubsetId,
    /// Lower bounds of `(x_i, x_j, y_i, y_j)`.
    pub lower: [f64; 4],
    /// Upper bounds of `(x_i, x_j, y_i, y_j)`.
    pub upper: [f64; 4],
    pub ordering: Halfspace,
    pub nonempty: bool,
}

impl ConvexSubset {
    /// Box bounds as eight halfspaces followed by the ordering halfspace.
    pub fn halfspaces(&self) -> Vec<Halfspace> {
        let mut out = Vec::with_capacity(9);
        for c in 0..4 {
            let mut a = [0.0; 4];
            a[c] = -1.0;
            out.push(Halfspace { a, b: -self.lower[c] });
            let mut a = [0.0; 4];
            a[c] = 1.0;
            out.push(Halfspace { a, b: self.upper[c] });
        }
        out.push(self.ordering);
        out
    }

    /// Local coordinates `(x_i, x_j, y_i, y_j)` of `p`.
    pub fn local(&self, p: &Placement) -> [f64; 4] {
        [p.x(self.i), p.x(self.j), p.y(self.i), p.y(self.j)]
    }

    /// Flat indices in `p` matching the local coordinates.
    pub fn flat_indices(&self, p: &Placement) -> [usize; 4] {
        let n = p.n_entities();
        [self.i, self.j, n + self.i, n + self.j]
    }

    pub fn contains_local(&self, u: &[f64; 4], tol: f64) -> bool {
        (0..4).all(|c| u[c] >= self.lower[c] - tol && u[c] <= self.upper[c] + tol) && self.ordering.slack(u) >= -tol
    }

    pub(crate) fn empty_error(&self) -> Error {
        Error::EmptySubset { i: self.i, j: self.j, subset: self.id }
    }
}

/// Non-overlap-plus-boundary constraint of one module pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairConstraint {
    pub i: usize,
    pub j: usize,
    pub subsets: [ConvexSubset; 4],
}

impl PairConstraint {
    pub fn new(inst: &Instance, i: usize, j: usize) -> Result<Self> {
        let n = inst.n_modules();
        if i >= n {
            return Err(Error::InvalidId(i));
        }
        if j >= n {
            return Err(Error::InvalidId(j));
        }
        if i == j {
            return Err(Error::InvalidInstance(format!("pair constraint of module {i} with itself")));
        }
        let r = inst.region;
        let (mi, mj) = (&inst.modules[i], &inst.modules[j]);
        let lower = [0.0; 4];
        let upper = [r.width - mi.width, r.width - mj.width, r.height - mi.height, r.height - mj.height];
        let fits_x = fits(mi.width + mj.width, r.width);
        let fits_y = fits(mi.height + mj.height, r.height);
        let make = |id: SubsetId, a: [f64; 4], b: f64, nonempty: bool| ConvexSubset {
            i,
            j,
            id,
            lower,
            upper,
            ordering: Halfspace { a, b },
            nonempty,
        };
        Ok(PairConstraint {
            i,
            j,
            subsets: [
                make(SubsetId::L, [1.0, -1.0, 0.0, 0.0], -mi.width, fits_x),
                make(SubsetId::R, [-1.0, 1.0, 0.0, 0.0], -mj.width, fits_x),
                make(SubsetId::B, [0.0, 0.0, 1.0, -1.0], -mi.height, fits_y),
                make(SubsetId::A, [0.0, 0.0, -1.0, 1.0], -mj.height, fits_y),
            ],
        })
    }

    pub fn subset(&self, id: SubsetId) -> &ConvexSubset {
        &self.subsets[id.index()]
    }

    pub fn nonempty(&self, id: SubsetId) -> bool {
        self.subsets[id.index()].nonempty
    }

    pub fn local(&self, p: &Placement) -> [f64; 4] {
        [p.x(self.i), p.x(self.j), p.y(self.i), p.y(self.j)]
    }
}

fn fits(total: f64, available: f64) -> bool {
    total <= available * (1.0 + 1e-12)
}

/// `D_p`: an I/O pin constrained to one side of the die.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IoConstraint {
    pub pin: usize,
    pub side: Side,
    pub region: Region,
}

impl IoConstraint {
    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        let (w, h) = (self.region.width, self.region.height);
        match self.side {
            Side::Left => x.abs() <= tol && y >= -tol && y <= h + tol,
            Side::Right => (x - w).abs() <= tol && y >= -tol && y <= h + tol,
            Side::Bottom => y.abs() <= tol && x >= -tol && x <= w + tol,
            Side::Top => (y - h).abs() <= tol && x >= -tol && x <= w + tol,
        }
    }
}

/// All constraints of an instance: one pair constraint per `i < j`, plus an
/// I/O constraint per side-assigned movable pin when I/O assignment is on.
#[derive(Clone, Debug)]
pub struct ConstraintFamily {
    pub region: Region,
    pub n_modules: usize,
    pub pairs: Vec<PairConstraint>,
    pub io: Vec<IoConstraint>,
}

impl ConstraintFamily {
    pub fn new(inst: &Instance, with_io: bool) -> Result<Self> {
        let n = inst.n_modules();
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push(PairConstraint::new(inst, i, j)?);
            }
        }
        let io = if with_io {
            inst.io_pins
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.fixed)
                .filter_map(|(k, p)| p.side.map(|side| IoConstraint { pin: k, side, region: inst.region }))
                .collect()
        } else {
            Vec::new()
        };
        Ok(ConstraintFamily { region: inst.region, n_modules: n, pairs, io })
    }

    /// Position of pair `(i, j)`, `i < j`, in `pairs`.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        debug_assert!(j < self.n_modules);
        let n = self.n_modules;
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairConstraint {
        &self.pairs[self.pair_index(i, j)]
    }

    /// True when every pair has some subset at zero distance.
    pub fn is_feasible(&self, p: &Placement, tol: f64) -> bool {
        self.pairs.iter().all(|pc| {
            SubsetId::ALL.iter().any(|&k| pc.nonempty(k) && member(p, pc, k, tol))
        })
    }
}

pub fn member(p: &Placement, pair: &PairConstraint, id: SubsetId, tol: f64) -> bool {
    let s = pair.subset(id);
    s.nonempty && s.contains_local(&s.local(p), tol)
}

/// Euclidean distance from `p` to the subset, through its exact projection.
pub fn distance(p: &Placement, subset: &ConvexSubset) -> Result<f64> {
    if !subset.nonempty {
        return Err(subset.empty_error());
    }
    let u = subset.local(p);
    let q = projection::project_local(subset, &u);
    Ok(dist4(&u, &q))
}

/// Distance from a member point to the subset's complement: the smallest
/// normalized slack over its halfspaces.
pub fn interior_depth(p: &Placement, subset: &ConvexSubset) -> Result<f64> {
    if !subset.nonempty {
        return Err(subset.empty_error());
    }
    let u = subset.local(p);
    if !subset.contains_local(&u, MEMBER_TOL) {
        return Err(Error::NotMember { i: subset.i, j: subset.j, subset: subset.id });
    }
    let depth = subset
        .halfspaces()
        .iter()
        .map(|h| h.slack(&u) / h.norm())
        .fold(f64::INFINITY, f64::min);
    Ok(depth.max(0.0))
}

pub(crate) fn dist4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for c in 0..4 {
        s += (a[c] - b[c]) * (a[c] - b[c]);
    }
    s.sqrt()
}
