use crate::source::{Source, SourceArgs};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use fsplan::bench::{placement_text, svg_text};
use fsplan::constraints::ConstraintFamily;
use fsplan::engine::{run_feasibility, Mode, OrderKind, RunConfig, Status, SweepConfig, Trajectory};
use fsplan::init::InitConfig;
use fsplan::model::roa;
use fsplan::superiorize::{hpwl, legalize_io, per_rmap, post_process, DriverConfig, PerturbConfig, Restart};
use fsplan::{Instance, Placement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Map,
    Rmap,
    PerRmap,
}

impl SolveMode {
    pub fn label(self) -> &'static str {
        match self {
            SolveMode::Map => "map",
            SolveMode::Rmap => "rmap",
            SolveMode::PerRmap => "per-rmap",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Area,
    Position,
    Random,
}

#[allow(non_snake_case)]
#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value = "per-rmap")]
    pub mode: SolveMode,
    #[arg(long, value_enum, default_value = "position")]
    pub order: OrderArg,
    /// Relaxation parameter of the projections, in (0, 2].
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "lambda-min")]
    pub lambda_min: Option<f64>,
    /// Initial perturbation length; defaults to 0.05 (W + H).
    #[arg(long = "lambda-init")]
    pub lambda_init: Option<f64>,
    /// Decay kernel of the perturbation length.
    #[arg(long = "Lambda")]
    pub Lambda: Option<f64>,
    #[arg(long = "gamma-init")]
    pub gamma_init: Option<f64>,
    #[arg(long = "Gamma")]
    pub Gamma: Option<f64>,
    /// Reset threshold; `inf` disables resets.
    #[arg(long = "S")]
    pub S: Option<String>,
    /// Softmax temperature; defaults to 1e-3 (W + H).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Perturbation passes per iteration.
    #[arg(long)]
    pub num: Option<usize>,
    /// Free the I/O pins along their sides and legalize them at the end.
    #[arg(long)]
    pub io_assign: bool,
    /// Skip the post-processing rerun of Per-RMAP.
    #[arg(long)]
    pub no_post: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
    /// Replay a saved config.json; instance and solver flags are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "FSPLAN_OUT", default_value = "fsplan-out")]
    pub out: PathBuf,
}

/// Everything a run depends on. Written to `config.json` in the run
/// directory; `solve --config` on that file reproduces the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub source: Source,
    pub mode: SolveMode,
    pub order: OrderKind,
    pub max_sweeps: usize,
    pub sweep: SweepConfig,
    pub perturb: PerturbConfig,
    pub driver: DriverConfig,
    pub init: InitConfig,
    pub io_assign: bool,
    pub post_process: bool,
    pub seed: u64,
}

impl SolveArgs {
    fn build(&self, inst: &Instance, source: Source) -> Result<SolveConfig> {
        let mut sweep = SweepConfig::for_instance(inst);
        if let Some(l) = self.lambda {
            sweep.lambda = l;
        }
        if let Some(e) = self.epsilon {
            sweep.epsilon = e;
        }
        if let Some(s) = &self.S {
            sweep.reset_threshold = match s.as_str() {
                "inf" | "none" => None,
                v => Some(v.parse().with_context(|| format!("--S expects a positive integer or inf, got {v:?}"))?),
            };
        }
        let mut perturb = PerturbConfig::for_instance(inst);
        if let Some(v) = self.lambda_min {
            perturb.lambda_min = v;
        }
        if let Some(v) = self.lambda_init {
            perturb.lambda_init = v;
        }
        if let Some(v) = self.Lambda {
            perturb.decay = v;
        }
        if let Some(v) = self.num {
            perturb.num = v;
        }
        let mut driver = DriverConfig { max_iterations: self.max_sweeps, ..DriverConfig::default() };
        if let Some(v) = self.gamma_init {
            driver.gamma_init = v;
        }
        if let Some(v) = self.Gamma {
            driver.gamma_growth = v;
        }
        if let Some(v) = self.theta {
            driver.theta = v;
        }
        let order = match self.order {
            OrderArg::Area => OrderKind::Area,
            OrderArg::Position => OrderKind::Position,
            OrderArg::Random => OrderKind::Random(self.seed),
        };
        Ok(SolveConfig {
            source,
            mode: self.mode,
            order,
            max_sweeps: self.max_sweeps,
            sweep,
            perturb,
            driver,
            init: InitConfig::default(),
            io_assign: self.io_assign,
            post_process: !self.no_post,
            seed: self.seed,
        })
    }
}

pub struct SolveResult {
    pub status: Status,
    pub placement: Placement,
    pub sweeps: usize,
    pub roa: f64,
    pub hpwl: f64,
    pub period: Option<usize>,
    pub trajectory: Trajectory,
    pub post: Option<(f64, f64)>,
}

/// Runs the configured pipeline: start placement, solver, optional
/// post-processing and pin legalization.
pub fn run(cfg: &SolveConfig) -> Result<(Instance, SolveResult)> {
    let (mut inst, start) = cfg.source.load(&cfg.init)?;
    if cfg.io_assign {
        for pin in &mut inst.io_pins {
            pin.fixed = false;
        }
    }
    let family = ConstraintFamily::new(&inst, cfg.io_assign)?;
    let mut result = match cfg.mode {
        SolveMode::Map | SolveMode::Rmap => {
            let mode = if cfg.mode == SolveMode::Map { Mode::Map } else { Mode::Rmap };
            let mut rc = RunConfig::new(&inst, mode);
            rc.sweep = cfg.sweep.clone();
            rc.order = cfg.order;
            rc.max_sweeps = cfg.max_sweeps;
            let out = run_feasibility(&inst, &family, &start, &rc)?;
            SolveResult {
                status: out.status,
                hpwl: hpwl(&inst, &out.placement)?,
                placement: out.placement,
                sweeps: out.sweeps,
                roa: out.roa,
                period: out.cycle.map(|c| c.period),
                trajectory: out.trajectory,
                post: None,
            }
        }
        SolveMode::PerRmap => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let main = per_rmap(&inst, &family, &start, &cfg.sweep, &cfg.perturb, &cfg.driver, Restart::default(), &mut rng)?;
            let (best, post) = if cfg.post_process && main.status == Status::Feasible {
                let best = post_process(&inst, &family, &main, &cfg.sweep, &cfg.perturb, &cfg.driver, &mut rng)?;
                let pair = (main.hpwl, best.hpwl);
                (best, Some(pair))
            } else {
                (main.clone(), None)
            };
            SolveResult {
                status: best.status,
                placement: best.placement,
                sweeps: main.iterations,
                roa: best.roa,
                hpwl: best.hpwl,
                period: None,
                trajectory: main.trajectory,
                post,
            }
        }
    };
    if cfg.io_assign {
        result.placement = legalize_io(&result.placement, &family.io, None)?;
        result.roa = roa(&inst, &result.placement);
        result.hpwl = hpwl(&inst, &result.placement)?;
    }
    Ok((inst, result))
}

fn summary_pairs(inst: &Instance, cfg: &SolveConfig, r: &SolveResult) -> Vec<(&'static str, String)> {
    let mut kv = vec![
        ("instance", inst.name.clone()),
        ("mode", cfg.mode.label().to_string()),
        ("status", format!("{:?}", r.status)),
        ("sweeps", r.sweeps.to_string()),
        ("roa", format!("{:.12e}", r.roa)),
        ("hpwl", format!("{:.12e}", r.hpwl)),
        ("seed", cfg.seed.to_string()),
    ];
    if let Some(p) = r.period {
        kv.push(("period", p.to_string()));
    }
    if let Some((before, after)) = r.post {
        kv.push(("hpwl_before_post", format!("{before:.12e}")));
        kv.push(("hpwl_after_post", format!("{after:.12e}")));
    }
    kv
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let source = args.source.resolve()?;
            let (inst, _) = source.load(&InitConfig::default())?;
            args.build(&inst, source)?
        }
    };
    cfg.sweep.validate()?;
    cfg.perturb.validate()?;
    cfg.driver.validate()?;
    if cfg.max_sweeps == 0 {
        bail!("--max-sweeps must be positive");
    }
    let t0 = Instant::now();
    let (inst, result) = run(&cfg)?;
    let wall = t0.elapsed().as_secs_f64();

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out, "config.json", &(serde_json::to_string_pretty(&cfg)? + "\n"))?;
    write(&args.out, "placement.pl", &placement_text(&inst, &result.placement))?;
    write(&args.out, "layout.svg", &svg_text(&inst, &result.placement))?;
    write(&args.out, "trajectory.csv", &result.trajectory.to_csv())?;
    let kv = summary_pairs(&inst, &cfg, &result);
    let mut machine = String::new();
    let mut human = String::new();
    for (k, v) in &kv {
        let _ = writeln!(machine, "{k}={v}");
    }
    let _ = writeln!(human, "{} ({}): {:?} after {} sweeps", inst.name, cfg.mode.label(), result.status, result.sweeps);
    let _ = writeln!(human, "  ROA  {:.4}%", 100.0 * result.roa);
    let _ = writeln!(human, "  HPWL {:.6}", result.hpwl);
    if let Some(p) = result.period {
        let _ = writeln!(human, "  cycle period {p}");
    }
    if let Some((before, after)) = result.post {
        let _ = writeln!(human, "  post-processing HPWL {before:.6} -> {after:.6}");
    }
    let _ = writeln!(human, "  wall time {wall:.3} s");
    write(&args.out, "summary.kv", &machine)?;
    write(&args.out, "summary.txt", &human)?;
    print!("{human}");
    println!("  outputs in {}", args.out.display());
    Ok(result.status.exit_code())
}
