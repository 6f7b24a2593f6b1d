#![allow(dead_code)]

use fsplan::model::{Module, Region};
use fsplan::{Instance, Placement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Modules with sides in `[0.5, 3]` on a square die leaving roughly
/// `whitespace` free, widened if needed so every pair can be separated.
pub fn small_instance(seed: u64, n: usize, whitespace: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modules: Vec<Module> =
        (0..n).map(|k| Module::new(format!("m{k}"), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0))).collect();
    let area: f64 = modules.iter().map(Module::area).sum();
    let side = (area / (1.0 - whitespace)).sqrt();
    // every pair must fit side by side or stacked
    let mut need = 0.0f64;
    for a in &modules {
        for b in &modules {
            need = need.max((a.width + b.width).min(a.height + b.height)).max(a.width).max(a.height);
        }
    }
    let side = side.max(need);
    Instance::new(format!("s{seed}"), Region::new(side, side).unwrap(), modules)
}

/// Module corners drawn uniformly from a box a little larger than the die.
pub fn random_placement(inst: &Instance, rng: &mut ChaCha8Rng) -> Placement {
    let (w, h) = (inst.region.width, inst.region.height);
    let x: Vec<f64> = (0..inst.n_modules()).map(|_| rng.gen_range(-0.2 * w..1.2 * w)).collect();
    let y: Vec<f64> = (0..inst.n_modules()).map(|_| rng.gen_range(-0.2 * h..1.2 * h)).collect();
    Placement::from_xy(&x, &y)
}
