use crate::source::SourceArgs;
use anyhow::{Context, Result};
use clap::Args;
use fsplan::bench::read_placement;
use fsplan::constraints::ConstraintFamily;
use fsplan::convergence::{attraction_radius, verify_attractor};
use fsplan::engine::OrderKind;
use fsplan::init::InitConfig;
use fsplan::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Placement to analyze, in pl format.
    #[arg(long)]
    pub placement: PathBuf,
    /// Also run this many MAP trajectories from inside the ball.
    #[arg(long)]
    pub verify: Option<usize>,
    /// Write the per-pair report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<i32> {
    let source = args.source.resolve()?;
    let (inst, _) = source.load(&InitConfig::default())?;
    let text = std::fs::read_to_string(&args.placement).with_context(|| format!("reading {}", args.placement.display()))?;
    let p = read_placement(&inst, &args.placement.display().to_string(), &text)?;
    let family = ConstraintFamily::new(&inst, false)?;
    let report = match attraction_radius(&inst, &p, &family) {
        Ok(r) => r,
        Err(Error::Infeasible { i, j, area }) => {
            eprintln!(
                "error: placement is infeasible: {} and {} overlap by {area}",
                inst.modules[i].name, inst.modules[j].name
            );
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    print!("{}", report.to_text());
    if let Some(path) = &args.csv {
        std::fs::write(path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let Some(starts) = args.verify else { return Ok(0) };
    if !(report.radius > 0.0) {
        println!("verification skipped: radius is zero");
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let orders = [OrderKind::Area, OrderKind::Position, OrderKind::Random(args.seed)];
    let check = verify_attractor(&inst, &family, &p, report.radius, 0.99, starts, &orders, &[0.5, 1.0, 1.5], 2000, &mut rng)?;
    println!(
        "verification: {} runs, {} left the ball, {} not feasible, at most {} sweeps",
        check.runs, check.exited, check.not_feasible, check.max_sweeps_used
    );
    Ok(if check.exited == 0 && check.not_feasible == 0 { 0 } else { 4 })
}
