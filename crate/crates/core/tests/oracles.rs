//! Library results checked against independent brute-force computations.

mod common;

use common::{random_placement, small_instance};
use fsplan::bench::{random_instance, RandomSpec};
use fsplan::constraints::{distance, ConstraintFamily, ConvexSubset, SubsetId};
use fsplan::init::{build_system, solve_qp, NetModel};
use fsplan::model::{roa, IoPin, Net, Pin, Side};
use fsplan::superiorize::monotone_assignment;
use fsplan::Instance;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn roa_matches_grid_rasterization() {
    const G: usize = 600;
    for seed in 0..50 {
        let inst = small_instance(seed, 2 + (seed as usize % 4), 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = random_placement(&inst, &mut rng);
        for i in 0..inst.n_modules() {
            let m = &inst.modules[i];
            p.set_module(i, p.x(i).clamp(0.0, inst.region.width - m.width), p.y(i).clamp(0.0, inst.region.height - m.height));
        }
        let (w, h) = (inst.region.width, inst.region.height);
        let (cw, ch) = (w / G as f64, h / G as f64);
        let inside = |i: usize, x: f64, y: f64| {
            let m = &inst.modules[i];
            x >= p.x(i) && x < p.x(i) + m.width && y >= p.y(i) && y < p.y(i) + m.height
        };
        let mut cells = 0usize;
        let mut slack = 0.0;
        let n = inst.n_modules();
        for i in 0..n {
            for j in i + 1..n {
                for a in 0..G {
                    for b in 0..G {
                        let (x, y) = ((a as f64 + 0.5) * cw, (b as f64 + 0.5) * ch);
                        if inside(i, x, y) && inside(j, x, y) {
                            cells += 1;
                        }
                    }
                }
                let (mi, mj) = (&inst.modules[i], &inst.modules[j]);
                slack += (mi.width.min(mj.width) + cw) * ch + (mi.height.min(mj.height) + ch) * cw;
            }
        }
        let grid = cells as f64 * cw * ch / (w * h);
        let exact = roa(&inst, &p);
        assert!((grid - exact).abs() <= slack / (w * h), "seed {seed}: grid {grid} exact {exact}");
    }
}

/// Exact projection onto `{q : A q <= b}` in four dimensions by trying
/// every set of at most four constraints as the active set.
fn active_set_distance(u: [f64; 4], planes: &[([f64; 4], f64)]) -> f64 {
    let m = planes.len();
    let uv = DVector::from_row_slice(&u);
    let feasible = |q: &DVector<f64>| planes.iter().all(|(a, b)| (0..4).map(|c| a[c] * q[c]).sum::<f64>() <= b + 1e-9);
    let mut best = if feasible(&uv) { 0.0 } else { f64::INFINITY };
    for mask in 1u32..(1 << m) {
        let ids: Vec<usize> = (0..m).filter(|k| mask & (1 << k) != 0).collect();
        if ids.len() > 4 {
            continue;
        }
        let a = DMatrix::from_fn(ids.len(), 4, |r, c| planes[ids[r]].0[c]);
        let b = DVector::from_fn(ids.len(), |r, _| planes[ids[r]].1);
        let gram = &a * a.transpose();
        let Some(inv) = gram.try_inverse() else { continue };
        let q = &uv - a.transpose() * (inv * (&a * &uv - b));
        if feasible(&q) {
            best = best.min((&q - &uv).norm());
        }
    }
    best
}

fn planes(s: &ConvexSubset) -> Vec<([f64; 4], f64)> {
    s.halfspaces().iter().map(|h| (h.a, h.b)).collect()
}

#[test]
fn subset_distance_matches_active_set_enumeration() {
    let mut cases = 0;
    for seed in 0..40u64 {
        let inst = small_instance(seed, 2, 0.3);
        let fam = ConstraintFamily::new(&inst, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let pair = &fam.pairs[0];
        for _ in 0..3 {
            let p = random_placement(&inst, &mut rng);
            for id in SubsetId::ALL {
                let s = pair.subset(id);
                if !s.nonempty {
                    continue;
                }
                let want = active_set_distance(s.local(&p), &planes(s));
                let got = distance(&p, s).unwrap();
                assert!((got - want).abs() <= 1e-6, "seed {seed} {id:?}: {got} vs {want}");
                cases += 1;
            }
        }
    }
    assert!(cases >= 100);
}

fn increasing_choices(n: usize, m: usize, from: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if acc.len() == n {
        out.push(acc.clone());
        return;
    }
    for s in from..m {
        acc.push(s);
        increasing_choices(n, m, s + 1, acc, out);
        acc.pop();
    }
}

#[test]
fn monotone_assignment_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let m = rng.gen_range(1..8);
        let n = rng.gen_range(0..=m);
        let mut points: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        points.sort_by(f64::total_cmp);
        let slots: Vec<f64> = (0..m).map(|k| k as f64 * 10.0 / m as f64).collect();
        let cost = |a: &[usize]| points.iter().zip(a).map(|(p, &s)| (p - slots[s]).abs()).sum::<f64>();
        let mut all = Vec::new();
        increasing_choices(n, m, 0, &mut Vec::new(), &mut all);
        let best = all.iter().map(|a| cost(a)).fold(f64::INFINITY, f64::min);
        let got = monotone_assignment(&points, &slots);
        assert_eq!(got.len(), n);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        assert!((cost(&got) - best).abs() < 1e-12, "{got:?}: {} vs {best}", cost(&got));
    }
}

fn dense_solve(inst: &Instance, model: NetModel) -> (Vec<f64>, Vec<f64>) {
    let sys = build_system(inst, model).unwrap();
    let a = sys.matrix.to_dense();
    let n = sys.n_vars();
    let mat = DMatrix::from_fn(n, n, |r, c| a[r][c]);
    let chol = mat.cholesky().expect("system matrix is positive definite");
    let x = chol.solve(&DVector::from_vec(sys.rhs_x.clone()));
    let y = chol.solve(&DVector::from_vec(sys.rhs_y.clone()));
    (x.as_slice()[..inst.n_modules()].to_vec(), y.as_slice()[..inst.n_modules()].to_vec())
}

#[test]
fn clique_and_star_give_the_same_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for pins in 3..=8usize {
        for _ in 0..5 {
            let modules = pins - 1;
            let mut inst = small_instance(rng.gen(), modules, 0.5);
            let h = inst.region.height;
            inst.io_pins = (0..=modules)
                .map(|k| IoPin { name: format!("p{k}"), side: Some(Side::Left), fixed: true, x: 0.0, y: rng.gen_range(0.0..h) })
                .collect();
            let module_pin = |i: usize, rng: &mut ChaCha8Rng| {
                let m = &inst.modules[i];
                Pin::module(i, rng.gen_range(0.0..m.width), rng.gen_range(0.0..m.height))
            };
            let mut big: Vec<Pin> = (0..modules).map(|i| module_pin(i, &mut rng)).collect();
            big.push(Pin::io(modules));
            let mut nets = vec![Net { name: "big".into(), pins: big }];
            for i in 0..modules {
                let pins = vec![module_pin(i, &mut rng), Pin::io(i)];
                nets.push(Net { name: format!("a{i}"), pins });
            }
            inst.nets = nets;
            let clique = dense_solve(&inst, NetModel { star_above: usize::MAX });
            let star = dense_solve(&inst, NetModel { star_above: 2 });
            for i in 0..modules {
                assert!((clique.0[i] - star.0[i]).abs() < 1e-9, "{pins} pins: x{i} {} vs {}", clique.0[i], star.0[i]);
                assert!((clique.1[i] - star.1[i]).abs() < 1e-9, "{pins} pins: y{i} {} vs {}", clique.1[i], star.1[i]);
            }
        }
    }
}

#[test]
fn qp_solution_beats_random_points() {
    for seed in 0..10 {
        let inst = random_instance(&RandomSpec { modules: 12, io_pins: 8, extra_nets: 20, whitespace: 0.4, side_range: (1.0, 4.0), seed })
            .unwrap();
        let sys = build_system(&inst, NetModel::default()).unwrap();
        let (x, y) = solve_qp(&sys, 1e-12, 10_000).unwrap();
        let best = sys.objective(&x, &y);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let rx: Vec<f64> = (0..sys.n_vars()).map(|_| rng.gen_range(0.0..inst.region.width)).collect();
            let ry: Vec<f64> = (0..sys.n_vars()).map(|_| rng.gen_range(0.0..inst.region.height)).collect();
            assert!(best <= sys.objective(&rx, &ry) + 1e-9);
        }
        // small moves away from the optimum never help either
        for _ in 0..100 {
            let k = rng.gen_range(0..sys.n_vars());
            let mut px = x.clone();
            px[k] += rng.gen_range(-1e-3..1e-3);
            assert!(best <= sys.objective(&px, &y) + 1e-12 * best.max(1.0));
        }
    }
}
