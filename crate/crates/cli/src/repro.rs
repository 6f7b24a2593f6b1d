use anyhow::{bail, Result};
use clap::Args;
use fsplan::bench::synthetic;
use fsplan::constraints::ConstraintFamily;
use fsplan::engine::{run_feasibility, Mode, OrderKind, RunConfig, RunOutcome, Status};

#[derive(Args, Debug)]
pub struct ReproArgs {
    /// n3, n3v, n4 or n5.
    pub example: String,
    /// n3: area, position or random. n5: default or alternate.
    #[arg(long)]
    pub variant: Option<String>,
    /// Relaxation parameter for n3v.
    #[arg(long, default_value_t = 1.8)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_sweeps: usize,
}

fn run(name: &str, start: &str, order: OrderKind, lambda: f64, sweeps: usize) -> Result<(RunOutcome, bool)> {
    let s = synthetic(name)?;
    let family = ConstraintFamily::new(&s.instance, false)?;
    let mut cfg = RunConfig::new(&s.instance, Mode::Map);
    cfg.order = order;
    cfg.sweep.lambda = lambda;
    cfg.max_sweeps = sweeps;
    cfg.stop_on_oscillation = false;
    let Some(z0) = s.start(start) else { bail!("{name} has no start {start:?}") };
    let out = run_feasibility(&s.instance, &family, z0, &cfg)?;
    let unchanged = out.placement.as_slice() == z0.as_slice();
    Ok((out, unchanged))
}

pub fn cmd_repro(args: &ReproArgs) -> Result<i32> {
    let sweeps = args.max_sweeps;
    let (out, unchanged, expect, pass) = match (args.example.as_str(), args.variant.as_deref()) {
        ("n3", v) => {
            let order = match v.unwrap_or("area") {
                "area" => OrderKind::Area,
                "position" => OrderKind::Position,
                "random" => OrderKind::Random(0),
                other => bail!("unknown n3 variant {other:?}"),
            };
            let (o, u) = run("n3", "default", order, 1.0, sweeps)?;
            let (expect, pass) = match order {
                OrderKind::Area => ("stuck at an infeasible state after moving", o.status != Status::Feasible && !u && period(&o) == Some(1)),
                OrderKind::Position => ("unchanged at the start", u),
                OrderKind::Random(_) => ("never feasible", o.status != Status::Feasible),
            };
            (o, u, expect, pass)
        }
        ("n3v", None) => {
            let (o, u) = run("n3v", "default", OrderKind::Area, args.lambda, sweeps)?;
            if args.lambda > 1.5 {
                let pass = period(&o) == Some(4);
                (o, u, "period-4 cycle", pass)
            } else {
                let pass = o.status != Status::Feasible && period(&o) == Some(1);
                (o, u, "stuck (period 1)", pass)
            }
        }
        ("n4", None) => {
            let (o, u) = run("n4", "default", OrderKind::Position, 1.0, sweeps)?;
            let pass = period(&o) == Some(2);
            (o, u, "period-2 cycle", pass)
        }
        ("n5", v) => match v.unwrap_or("default") {
            "default" => {
                let (o, u) = run("n5", "default", OrderKind::Position, 1.0, sweeps)?;
                let pass = period(&o) == Some(12);
                (o, u, "period-12 cycle", pass)
            }
            "alternate" => {
                let (o, u) = run("n5", "alternate", OrderKind::Position, 1.0, sweeps)?;
                let pass = o.status == Status::Feasible && o.sweeps == 1;
                (o, u, "feasible in one sweep", pass)
            }
            other => bail!("unknown n5 variant {other:?}"),
        },
        (name, Some(v)) if ["n3v", "n4"].contains(&name) => bail!("{name} takes no variant (got {v:?})"),
        (name, _) => bail!("unknown example {name:?}; expected n3, n3v, n4 or n5"),
    };
    println!("{}: {:?} after {} sweeps, ROA {:.4}%", args.example, out.status, out.sweeps, 100.0 * out.roa);
    match &out.cycle {
        Some(c) if c.period > 0 => println!("  cycle period {}", c.period),
        Some(_) => println!("  overlap constant, state not repeating"),
        None => {}
    }
    if unchanged {
        println!("  placement never moved");
    }
    println!("  expected: {expect} ... {}", if pass { "reproduced" } else { "NOT reproduced" });
    Ok(if pass { 0 } else { 5 })
}

fn period(o: &RunOutcome) -> Option<usize> {
    o.cycle.as_ref().map(|c| c.period)
}
