use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use fsplan::bench::{self, known_die, load_instance, BookshelfPaths, DieSpec};
use fsplan::init::{initial_placement, InitConfig};
use fsplan::{Instance, Placement};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Where the instance comes from.
#[derive(Args, Clone, Debug)]
pub struct SourceArgs {
    /// Built-in instance: n3, n3v, n4 or n5.
    #[arg(long, conflicts_with_all = ["blocks", "nets"])]
    pub synthetic: Option<String>,
    /// Named start of a synthetic instance.
    #[arg(long, default_value = "default", requires = "synthetic")]
    pub start: String,
    #[arg(long, requires = "nets")]
    pub blocks: Option<PathBuf>,
    #[arg(long, requires = "blocks")]
    pub nets: Option<PathBuf>,
    #[arg(long)]
    pub pl: Option<PathBuf>,
    /// Instance name; defaults to the blocks file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, requires = "die_height")]
    pub die_width: Option<f64>,
    #[arg(long, requires = "die_width")]
    pub die_height: Option<f64>,
    /// Derive the die from module area with this whitespace fraction.
    #[arg(long, conflicts_with = "die_width")]
    pub whitespace: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub aspect: f64,
    /// Start from the pl positions instead of the quadratic initialization.
    #[arg(long, requires = "pl")]
    pub use_pl: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Synthetic { name: String, start: String },
    Bookshelf { name: String, blocks: PathBuf, nets: PathBuf, pl: Option<PathBuf>, die: DieSpec, use_pl: bool },
}

impl SourceArgs {
    pub fn resolve(&self) -> Result<Source> {
        if let Some(name) = &self.synthetic {
            return Ok(Source::Synthetic { name: name.clone(), start: self.start.clone() });
        }
        let (Some(blocks), Some(nets)) = (&self.blocks, &self.nets) else {
            bail!("give either --synthetic NAME or --blocks and --nets");
        };
        let name = match &self.name {
            Some(n) => n.clone(),
            None => blocks.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        };
        let die = match (self.die_width, self.die_height, self.whitespace) {
            (Some(width), Some(height), _) => DieSpec::Fixed { width, height },
            (_, _, Some(fraction)) => DieSpec::Whitespace { fraction, aspect: self.aspect },
            _ => known_die(&name)
                .ok_or_else(|| anyhow!("no die size known for {name:?}; pass --die-width/--die-height or --whitespace"))?,
        };
        Ok(Source::Bookshelf {
            name,
            blocks: blocks.clone(),
            nets: nets.clone(),
            pl: self.pl.clone(),
            die,
            use_pl: self.use_pl,
        })
    }
}

impl Source {
    /// The instance and the placement a solver run starts from.
    pub fn load(&self, init: &InitConfig) -> Result<(Instance, Placement)> {
        match self {
            Source::Synthetic { name, start } => {
                let s = bench::synthetic(name)?;
                let p = s.start(start).cloned().ok_or_else(|| {
                    let names: Vec<&str> = s.starts.iter().map(|(n, _)| *n).collect();
                    anyhow!("{name} has no start {start:?} (available: {})", names.join(", "))
                })?;
                Ok((s.instance, p))
            }
            Source::Bookshelf { name, blocks, nets, pl, die, use_pl } => {
                let paths = BookshelfPaths { blocks: blocks.clone(), nets: nets.clone(), pl: pl.clone() };
                let loaded = load_instance(name, &paths, *die).with_context(|| format!("loading {name}"))?;
                let p = if *use_pl {
                    loaded.placement
                } else {
                    initial_placement(&loaded.instance, init).context("quadratic initialization")?
                };
                Ok((loaded.instance, p))
            }
        }
    }
}
