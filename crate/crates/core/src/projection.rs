//! Exact metric projections.
//!
//! A pair subset factorizes into a 2-D polygon along its ordering axis (box
//! plus the ordering halfplane) and two independent intervals along the
//! other axis. The interval part is a clamp. The polygon part is solved by
//! candidate enumeration: the point itself, its projection onto each edge
//! line, and every vertex. The closest feasible candidate is the projection.

use crate::constraints::{dist4, ConvexSubset, IoConstraint, PairConstraint, SubsetId};
use crate::error::{Error, Result};
use crate::model::{Placement, Side};

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    pub placement: Placement,
    /// Flat indices whose value changed.
    pub moved: Vec<usize>,
    pub distance: f64,
    /// Target subset; `None` for I/O projections.
    pub subset: Option<SubsetId>,
}

type Halfplane = ([f64; 2], f64);

/// Nearest point of the nonempty convex polygon `{q : a·q <= b}`.
pub(crate) fn project_polygon(p: [f64; 2], planes: &[Halfplane]) -> [f64; 2] {
    let scale = planes.iter().fold(1.0f64, |m, (_, b)| m.max(b.abs())).max(p[0].abs()).max(p[1].abs());
    let tol = 1e-12 * scale;
    let feasible = |q: &[f64; 2]| planes.iter().all(|(a, b)| a[0] * q[0] + a[1] * q[1] <= b + tol);
    if feasible(&p) {
        return p;
    }
    let mut best: Option<([f64; 2], f64)> = None;
    let mut consider = |q: [f64; 2]| {
        if feasible(&q) {
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((q, d));
            }
        }
    };
    for (a, b) in planes {
        let nn = a[0] * a[0] + a[1] * a[1];
        let t = (a[0] * p[0] + a[1] * p[1] - b) / nn;
        consider([p[0] - t * a[0], p[1] - t * a[1]]);
    }
    for k in 0..planes.len() {
        for l in k + 1..planes.len() {
            let ((a1, b1), (a2, b2)) = (planes[k], planes[l]);
            let det = a1[0] * a2[1] - a1[1] * a2[0];
            if det.abs() < 1e-14 {
                continue;
            }
            consider([(b1 * a2[1] - b2 * a1[1]) / det, (a1[0] * b2 - a2[0] * b1) / det]);
        }
    }
    best.expect("nonempty polygon has a feasible vertex").0
}

/// Projection of local coordinates `(x_i, x_j, y_i, y_j)` onto a nonempty subset.
pub(crate) fn project_local(s: &ConvexSubset, u: &[f64; 4]) -> [f64; 4] {
    let (ord, free) = if s.id.is_horizontal() { ([0, 1], [2, 3]) } else { ([2, 3], [0, 1]) };
    let mut out = *u;
    for c in free {
        out[c] = u[c].clamp(s.lower[c], s.upper[c]);
    }
    let (a0, a1) = (s.ordering.a[ord[0]], s.ordering.a[ord[1]]);
    let planes: [Halfplane; 5] = [
        ([-1.0, 0.0], -s.lower[ord[0]]),
        ([1.0, 0.0], s.upper[ord[0]]),
        ([0.0, -1.0], -s.lower[ord[1]]),
        ([0.0, 1.0], s.upper[ord[1]]),
        ([a0, a1], s.ordering.b),
    ];
    let q = project_polygon([u[ord[0]], u[ord[1]]], &planes);
    out[ord[0]] = q[0];
    out[ord[1]] = q[1];
    out
}

/// Exact projection of `p` onto `C_ij,k`.
pub fn project_subset(p: &Placement, pair: &PairConstraint, id: SubsetId) -> Result<ProjectionResult> {
    let s = pair.subset(id);
    if !s.nonempty {
        return Err(s.empty_error());
    }
    let u = s.local(p);
    let q = project_local(s, &u);
    let idx = s.flat_indices(p);
    let mut placement = p.clone();
    let mut moved = Vec::new();
    for c in 0..4 {
        if q[c] != u[c] {
            placement.as_mut_slice()[idx[c]] = q[c];
            moved.push(idx[c]);
        }
    }
    Ok(ProjectionResult { placement, moved, distance: dist4(&u, &q), subset: Some(id) })
}

/// Absolute tolerance under which two subset distances count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Every subset projection attaining the minimum distance, in `L, R, B, A`
/// order. Empty subsets are skipped.
pub fn project_union_closest(p: &Placement, pair: &PairConstraint) -> Result<Vec<ProjectionResult>> {
    let mut all = Vec::with_capacity(4);
    for id in SubsetId::ALL {
        if pair.nonempty(id) {
            all.push(project_subset(p, pair, id)?);
        }
    }
    let min = all.iter().map(|r| r.distance).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::NoFeasibleSubset(pair.i, pair.j));
    }
    all.retain(|r| r.distance <= min + TIE_TOL);
    Ok(all)
}

pub fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

/// `z + λ (target - z)`.
pub fn relaxed_step(p: &Placement, target: &Placement, lambda: f64) -> Result<Placement> {
    check_lambda(lambda)?;
    if p.as_slice().len() != target.as_slice().len() {
        return Err(Error::InvalidInstance("relaxed step between placements of different size".into()));
    }
    let mut out = p.clone();
    for (z, t) in out.as_mut_slice().iter_mut().zip(target.as_slice()) {
        *z += lambda * (t - *z);
    }
    Ok(out)
}

/// Nearest point of the side segment `D_p` to an I/O pin's position.
pub fn io_target(c: &IoConstraint, x: f64, y: f64) -> (f64, f64) {
    let (w, h) = (c.region.width, c.region.height);
    match c.side {
        Side::Left => (0.0, y.clamp(0.0, h)),
        Side::Right => (w, y.clamp(0.0, h)),
        Side::Bottom => (x.clamp(0.0, w), 0.0),
        Side::Top => (x.clamp(0.0, w), h),
    }
}

pub fn project_io(p: &Placement, c: &IoConstraint) -> Result<ProjectionResult> {
    if c.pin >= p.n_io() {
        return Err(Error::InvalidId(p.n_modules() + c.pin));
    }
    let (x, y) = p.io(c.pin);
    let (tx, ty) = io_target(c, x, y);
    let mut placement = p.clone();
    placement.set_io(c.pin, tx, ty);
    let n = p.n_entities();
    let e = p.n_modules() + c.pin;
    let mut moved = Vec::new();
    if tx != x {
        moved.push(e);
    }
    if ty != y {
        moved.push(n + e);
    }
    let distance = ((tx - x).powi(2) + (ty - y).powi(2)).sqrt();
    Ok(ProjectionResult { placement, moved, distance, subset: None })
}
