//! Fixed-outline floorplanning as a feasibility problem.
//!
//! Every pair of modules must sit in one of four convex regions (left,
//! right, below, above). The solvers here alternate projections onto those
//! unions: plain MAP picks the nearest region, RMAP averages over regions
//! with softmax preferences and a reset rule, and Per-RMAP interleaves
//! wirelength-reducing perturbations.
//!
//! ```
//! use fsplan::{bench, constraints::ConstraintFamily, engine::{run_feasibility, Mode, RunConfig, Status}};
//!
//! let n3 = bench::synthetic("n3").unwrap();
//! let family = ConstraintFamily::new(&n3.instance, false).unwrap();
//! let cfg = RunConfig::new(&n3.instance, Mode::Rmap);
//! let out = run_feasibility(&n3.instance, &family, n3.start("default").unwrap(), &cfg).unwrap();
//! assert_eq!(out.status, Status::Feasible);
//! ```

pub mod bench;
pub mod constraints;
pub mod convergence;
pub mod engine;
pub mod error;
pub mod init;
pub mod model;
pub mod projection;
pub mod superiorize;

pub use error::{Error, Result};
pub use model::{Instance, Placement};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/map.md")]
    mod map {}
    #[doc = include_str!("../../../book/src/rmap.md")]
    mod rmap {}
    #[doc = include_str!("../../../book/src/superiorization.md")]
    mod superiorization {}
    #[doc = include_str!("../../../book/src/initialization.md")]
    mod initialization {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
