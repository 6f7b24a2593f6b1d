//! Local convergence geometry at feasible fixed points: active indices,
//! escaping and separating distances, per-pair radii, the global radius of
//! attraction, and sampling harnesses that check them empirically.

use crate::constraints::{distance, interior_depth, ConstraintFamily, PairConstraint, SubsetId, MEMBER_TOL};
use crate::engine::{make_order, map_pair_step, OrderKind, ROA_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::{max_overlap_pair, roa, Instance, Placement};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;

/// Absolute tolerance on distances when deciding activity.
pub const ACTIVE_TOL: f64 = 1e-9;

fn subset_distances(p: &Placement, pair: &PairConstraint) -> Result<[f64; 4]> {
    let mut d = [f64::INFINITY; 4];
    for id in SubsetId::ALL {
        let s = pair.subset(id);
        if s.nonempty {
            d[id.index()] = distance(p, s)?;
        }
    }
    Ok(d)
}

/// Subsets at minimal distance, within `tol`, in `L, R, B, A` order.
pub fn active_indices(p: &Placement, pair: &PairConstraint, tol: f64) -> Result<Vec<SubsetId>> {
    let d = subset_distances(p, pair)?;
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::NoFeasibleSubset(pair.i, pair.j));
    }
    Ok(SubsetId::ALL.into_iter().filter(|id| d[id.index()] <= min + tol).collect())
}

/// Smallest interior depth over the active subsets.
pub fn escaping_distance(p: &Placement, pair: &PairConstraint, tol: f64) -> Result<f64> {
    let active = active_indices(p, pair, tol)?;
    let mut d = f64::INFINITY;
    for id in active {
        d = d.min(interior_depth(p, pair.subset(id))?);
    }
    Ok(d)
}

/// Smallest distance to a non-active subset.
pub fn separating_distance(p: &Placement, pair: &PairConstraint, tol: f64) -> Result<f64> {
    let active = active_indices(p, pair, tol)?;
    if active.len() == 4 {
        return Err(Error::AllActive(pair.i, pair.j));
    }
    let d = subset_distances(p, pair)?;
    Ok(SubsetId::ALL.into_iter().filter(|id| !active.contains(id)).map(|id| d[id.index()]).fold(f64::INFINITY, f64::min))
}

/// `min(d_sep, d_esc)`.
pub fn radius_rough(p: &Placement, pair: &PairConstraint, tol: f64) -> Result<f64> {
    Ok(separating_distance(p, pair, tol)?.min(escaping_distance(p, pair, tol)?))
}

fn divider_gap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    ((a - b) + (c - d) / 2.0).abs() / std::f64::consts::SQRT_2
}

/// One active subset: `min(d_sep, (d_sep + d_esc) / 2)`. Two active
/// subsets: the distance to the nearer center-alignment hyperplane.
pub fn radius_sharp(p: &Placement, pair: &PairConstraint, tol: f64) -> Result<f64> {
    let active = active_indices(p, pair, tol)?;
    match active.len() {
        1 => {
            let (sep, esc) = (separating_distance(p, pair, tol)?, escaping_distance(p, pair, tol)?);
            Ok(sep.min((sep + esc) / 2.0))
        }
        2 => {
            let [xi, xj, yi, yj] = pair.local(p);
            let (si, sj) = (pair.subset(SubsetId::L), pair.subset(SubsetId::B));
            // w_i and h_i are the ordering offsets of L and B; w_j and h_j of R and A
            let (wi, hi) = (-si.ordering.b, -sj.ordering.b);
            let (wj, hj) = (-pair.subset(SubsetId::R).ordering.b, -pair.subset(SubsetId::A).ordering.b);
            Ok(divider_gap(xi, xj, wi, wj).min(divider_gap(yi, yj, hi, hj)))
        }
        _ => Err(Error::AllActive(pair.i, pair.j)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    pub active: Vec<SubsetId>,
    pub d_esc: f64,
    pub d_sep: f64,
    pub rough: f64,
    /// `None` when more than two subsets are active.
    pub sharp: Option<f64>,
}

impl PairReport {
    /// The radius used for this pair: sharp when defined, rough otherwise.
    pub fn radius(&self) -> f64 {
        self.sharp.unwrap_or(self.rough)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub pairs: Vec<PairReport>,
    pub radius: f64,
    /// Minimum of the rough per-pair radii.
    pub rough_radius: f64,
    /// Pairs with more than two active subsets.
    pub too_many_active: usize,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,active,d_esc,d_sep,r_rough,r_sharp\n");
        for r in &self.pairs {
            let k: String = r.active.iter().map(|id| id.letter()).collect();
            let sharp = r.sharp.map(|s| format!("{s:.12e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{k},{:.12e},{:.12e},{:.12e},{sharp}", r.i, r.j, r.d_esc, r.d_sep, r.rough);
        }
        let _ = writeln!(out, "global,,,,,{:.12e},{:.12e}", self.rough_radius, self.radius);
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "radius of attraction: {:.6e}", self.radius);
        let _ = writeln!(out, "rough radius: {:.6e}", self.rough_radius);
        let _ = writeln!(out, "pairs with |K| > 2: {}", self.too_many_active);
        for r in &self.pairs {
            let k: String = r.active.iter().map(|id| id.letter()).collect();
            let sharp = r.sharp.map_or("-".to_string(), |s| format!("{s:.6e}"));
            let _ = writeln!(
                out,
                "  ({:>3},{:>3}) K={k:<2} d_esc={:.6e} d_sep={:.6e} rough={:.6e} sharp={sharp}",
                r.i, r.j, r.d_esc, r.d_sep, r.rough
            );
        }
        out
    }
}

/// Per-pair radii and their minimum at a feasible placement.
pub fn attraction_radius(inst: &Instance, p: &Placement, family: &ConstraintFamily) -> Result<ConvergenceReport> {
    if !family.is_feasible(p, MEMBER_TOL) {
        let (i, j, area) = max_overlap_pair(inst, p).unwrap_or_else(|| {
            let pc = family.pairs.iter().find(|pc| {
                !SubsetId::ALL.iter().any(|&k| crate::constraints::member(p, pc, k, MEMBER_TOL))
            });
            pc.map_or((0, 0, 0.0), |pc| (pc.i, pc.j, 0.0))
        });
        return Err(Error::Infeasible { i, j, area });
    }
    let mut pairs = Vec::with_capacity(family.pairs.len());
    let mut too_many = 0;
    for pc in &family.pairs {
        let active = active_indices(p, pc, ACTIVE_TOL)?;
        let d_esc = escaping_distance(p, pc, ACTIVE_TOL)?;
        let d_sep = if active.len() == 4 { 0.0 } else { separating_distance(p, pc, ACTIVE_TOL)? };
        let sharp = if active.len() <= 2 { Some(radius_sharp(p, pc, ACTIVE_TOL)?) } else { None };
        if active.len() > 2 {
            too_many += 1;
        }
        pairs.push(PairReport { i: pc.i, j: pc.j, active, d_esc, d_sep, rough: d_sep.min(d_esc), sharp });
    }
    let radius = pairs.iter().map(PairReport::radius).fold(f64::INFINITY, f64::min);
    let rough_radius = pairs.iter().map(|r| r.rough).fold(f64::INFINITY, f64::min);
    Ok(ConvergenceReport { pairs, radius, rough_radius, too_many_active: too_many })
}

/// Uniform sample from the `dim`-ball of radius `r`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, r: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            let scale = r * rng.gen::<f64>().powf(1.0 / dim as f64) / n;
            return g.into_iter().map(|x| x * scale).collect();
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BallCheck {
    pub samples: usize,
    pub violations: usize,
}

/// Samples the pair's local coordinates uniformly in the ball of radius
/// `r` around `p` and counts samples whose active set is not contained in
/// the active set at `p`.
pub fn check_ball<R: Rng + ?Sized>(
    p: &Placement,
    pair: &PairConstraint,
    r: f64,
    samples: usize,
    rng: &mut R,
) -> Result<BallCheck> {
    let base = active_indices(p, pair, ACTIVE_TOL)?;
    let n = p.n_entities();
    let idx = [pair.i, pair.j, n + pair.i, n + pair.j];
    let mut out = BallCheck { samples, violations: 0 };
    let mut q = p.clone();
    for _ in 0..samples {
        let off = sample_ball(rng, 4, r);
        for c in 0..4 {
            q.as_mut_slice()[idx[c]] = p.as_slice()[idx[c]] + off[c];
        }
        let k = active_indices(&q, pair, ACTIVE_TOL)?;
        if !k.iter().all(|id| base.contains(id)) {
            out.violations += 1;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttractorCheck {
    pub runs: usize,
    /// Runs whose iterates left the ball at some pair step.
    pub exited: usize,
    /// Runs that did not reach the ROA threshold within the sweep cap.
    pub not_feasible: usize,
    pub max_sweeps_used: usize,
}

/// Runs MAP from `starts` uniform points in the ball of radius
/// `shrink · r` around `z_star` (module coordinates only), for every order
/// and relaxation given, checking ball containment after every pair step.
#[allow(clippy::too_many_arguments)]
pub fn verify_attractor<R: Rng + ?Sized>(
    inst: &Instance,
    family: &ConstraintFamily,
    z_star: &Placement,
    r: f64,
    shrink: f64,
    starts: usize,
    orders: &[OrderKind],
    lambdas: &[f64],
    max_sweeps: usize,
    rng: &mut R,
) -> Result<AttractorCheck> {
    let mut out = AttractorCheck { runs: 0, exited: 0, not_feasible: 0, max_sweeps_used: 0 };
    let n = z_star.n_entities();
    let nm = z_star.n_modules();
    let radius = r * shrink;
    // roundoff allowance on the containment test
    let slack = 1e-12 * (1.0 + z_star.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for _ in 0..starts {
        let off = sample_ball(rng, 2 * nm, radius);
        let mut start = z_star.clone();
        for k in 0..nm {
            start.as_mut_slice()[k] += off[k];
            start.as_mut_slice()[n + k] += off[nm + k];
        }
        for &kind in orders {
            for &lambda in lambdas {
                out.runs += 1;
                let mut p = start.clone();
                let mut exited = false;
                let mut feasible = roa(inst, &p) < ROA_THRESHOLD;
                let mut sweep = 0;
                while !feasible && sweep < max_sweeps {
                    sweep += 1;
                    let kind_now = match kind {
                        OrderKind::Random(s) => OrderKind::Random(s.wrapping_add(sweep as u64)),
                        k => k,
                    };
                    let order = make_order(inst, &p, family, kind_now);
                    for &t in &order.pairs {
                        map_pair_step(&mut p, &family.pairs[t], lambda)?;
                        if p.distance(z_star) > radius + slack {
                            exited = true;
                        }
                    }
                    feasible = roa(inst, &p) < ROA_THRESHOLD;
                }
                out.max_sweeps_used = out.max_sweeps_used.max(sweep);
                if exited {
                    out.exited += 1;
                }
                if !feasible {
                    out.not_feasible += 1;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Module, Region};

    fn pair_instance(wi: f64, hi: f64, wj: f64, hj: f64, w: f64, h: f64) -> (Instance, ConstraintFamily) {
        let inst = Instance::new(
            "p",
            Region::new(w, h).unwrap(),
            vec![Module::new("i", wi, hi), Module::new("j", wj, hj)],
        );
        let fam = ConstraintFamily::new(&inst, false).unwrap();
        (inst, fam)
    }

    #[test]
    fn strictly_left_pair() {
        let (inst, fam) = pair_instance(1.0, 1.0, 1.0, 1.0, 10.0, 10.0);
        let p = Placement::from_xy(&[2.0, 6.0], &[4.0, 4.5]);
        let pc = &fam.pairs[0];
        assert_eq!(active_indices(&p, pc, ACTIVE_TOL).unwrap(), vec![SubsetId::L]);
        // depth limited by the ordering gap 3 / sqrt 2 and the boxes (distance 2 to x_i = 0)
        let esc = escaping_distance(&p, pc, ACTIVE_TOL).unwrap();
        assert!((esc - 2.0).abs() < 1e-12);
        let rep = attraction_radius(&inst, &p, &fam).unwrap();
        assert_eq!(rep.pairs.len(), 1);
        assert_eq!(rep.radius, rep.pairs[0].radius());
        assert!(rep.pairs[0].sharp.unwrap() >= rep.pairs[0].rough);
    }

    #[test]
    fn centered_overlap_activates_left_and_right() {
        let (_, fam) = pair_instance(2.0, 4.0, 2.0, 4.0, 10.0, 10.0);
        let p = Placement::from_xy(&[4.0, 4.0], &[3.0, 3.0]);
        let k = active_indices(&p, &fam.pairs[0], ACTIVE_TOL).unwrap();
        assert!(k.contains(&SubsetId::L) && k.contains(&SubsetId::R));
    }

    #[test]
    fn touching_face_has_zero_escape() {
        let (inst, fam) = pair_instance(1.0, 1.0, 1.0, 1.0, 10.0, 10.0);
        let p = Placement::from_xy(&[2.0, 3.0], &[4.0, 4.5]);
        assert_eq!(escaping_distance(&p, &fam.pairs[0], ACTIVE_TOL).unwrap(), 0.0);
        assert_eq!(radius_rough(&p, &fam.pairs[0], ACTIVE_TOL).unwrap(), 0.0);
        let rep = attraction_radius(&inst, &p, &fam).unwrap();
        assert_eq!(rep.rough_radius, 0.0);
        // B is 0.5 / sqrt 2 away; the sharp radius keeps half of it
        let d_sep = 0.5 / std::f64::consts::SQRT_2;
        assert!((rep.pairs[0].d_sep - d_sep).abs() < 1e-12);
        assert!((rep.radius - d_sep / 2.0).abs() < 1e-12);
    }

    #[test]
    fn aligned_corner_pair_has_zero_sharp_radius() {
        // left and below at once, equal widths with x_i = x_j impossible for L; use
        // a diagonal placement where both L and B hold
        let (_, fam) = pair_instance(1.0, 1.0, 1.0, 1.0, 10.0, 10.0);
        let p = Placement::from_xy(&[2.0, 5.0], &[2.0, 5.0]);
        let pc = &fam.pairs[0];
        assert_eq!(active_indices(&p, pc, ACTIVE_TOL).unwrap(), vec![SubsetId::L, SubsetId::B]);
        let g = radius_sharp(&p, pc, ACTIVE_TOL).unwrap();
        assert!((g - 3.0 / std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_placement_rejected() {
        let (inst, fam) = pair_instance(2.0, 2.0, 2.0, 2.0, 10.0, 10.0);
        let p = Placement::from_xy(&[0.0, 1.0], &[0.0, 1.0]);
        assert!(matches!(attraction_radius(&inst, &p, &fam), Err(Error::Infeasible { i: 0, j: 1, .. })));
    }
}
