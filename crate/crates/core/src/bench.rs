//! Bookshelf-style blocks/nets/pl ingestion, the small synthetic
//! instances, a random instance generator, and result writers.

use crate::error::{Error, Result};
use crate::model::{Instance, IoPin, Module, Net, Pin, Placement, Region, Side};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DieSpec {
    Fixed { width: f64, height: f64 },
    /// Die area = module area / (1 - whitespace), width / height = aspect.
    Whitespace { fraction: f64, aspect: f64 },
}

impl DieSpec {
    pub fn region(&self, module_area: f64) -> Result<Region> {
        match *self {
            DieSpec::Fixed { width, height } => Region::new(width, height),
            DieSpec::Whitespace { fraction, aspect } => {
                if !(0.0..1.0).contains(&fraction) || !(aspect > 0.0) {
                    return Err(Error::InvalidConfig(format!("bad die parameters: whitespace {fraction}, aspect {aspect}")));
                }
                let area = module_area / (1.0 - fraction);
                let w = (area * aspect).sqrt();
                Region::new(w, area / w)
            }
        }
    }
}

/// Die sizes of the named MCNC and GSRC instances.
pub fn known_die(name: &str) -> Option<DieSpec> {
    let (width, height) = match name {
        "apte" => (10500.0, 10500.0),
        "xerox" => (5831.0, 6412.0),
        "hp" => (4928.0, 4200.0),
        "ami33" => (2058.0, 1463.0),
        "ami49" => (7672.0, 7840.0),
        "n100" | "n200" | "n300" => (800.0, 800.0),
        _ => return None,
    };
    Some(DieSpec::Fixed { width, height })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BookshelfPaths {
    pub blocks: PathBuf,
    pub nets: PathBuf,
    pub pl: Option<PathBuf>,
}

impl BookshelfPaths {
    /// `<dir>/<name>.blocks`, `.nets`, and `.pl` when present.
    pub fn in_dir(dir: &Path, name: &str) -> Self {
        let pl = dir.join(format!("{name}.pl"));
        BookshelfPaths {
            blocks: dir.join(format!("{name}.blocks")),
            nets: dir.join(format!("{name}.nets")),
            pl: pl.exists().then_some(pl),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub instance: Instance,
    /// Module positions from the pl file (origin when absent), I/O pins at
    /// their fixed coordinates.
    pub placement: Placement,
}

struct Lines<'a> {
    file: &'a str,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(file: &'a str, text: &'a str) -> Self {
        Lines { file, iter: text.lines().enumerate() }
    }

    /// Next non-empty line with comments stripped, and its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (k, raw) in self.iter.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Some((k + 1, line));
            }
        }
        None
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { file: self.file.to_string(), line, msg: msg.into() }
    }
}

fn is_header(line: &str) -> bool {
    line.starts_with("UCSC") || line.starts_with("UCLA")
}

fn key_value(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once(':')?;
    Some((k.trim(), v.trim()))
}

fn num(lines: &Lines, line: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| lines.err(line, format!("expected a number, found {s:?}")))
}

struct Blocks {
    modules: Vec<Module>,
    terminals: Vec<String>,
}

fn parse_blocks(file: &str, text: &str) -> Result<Blocks> {
    let mut lines = Lines::new(file, text);
    let mut modules = Vec::new();
    let mut terminals = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let (mut want_hard, mut want_soft, mut want_term) = (None, None, None);
    while let Some((ln, line)) = lines.next() {
        if is_header(line) {
            continue;
        }
        if let Some((k, v)) = key_value(line) {
            if !line.contains('(') {
                let n = v.parse::<usize>().map_err(|_| lines.err(ln, format!("bad count {v:?}")))?;
                match k {
                    "NumHardRectilinearBlocks" => want_hard = Some(n),
                    "NumSoftRectangularBlocks" => want_soft = Some(n),
                    "NumTerminals" => want_term = Some(n),
                    _ => {}
                }
                continue;
            }
        }
        let mut toks = line.split_whitespace();
        let name = toks.next().unwrap_or_default().to_string();
        let kind = toks.next().ok_or_else(|| lines.err(ln, "missing block type"))?;
        if let Some(prev) = seen.insert(name.clone(), ln) {
            return Err(lines.err(ln, format!("duplicate name {name:?} (first on line {prev})")));
        }
        match kind {
            "terminal" => terminals.push(name),
            "hardrectilinear" => {
                let rest: String = toks.collect::<Vec<_>>().join(" ");
                let coords: Vec<f64> = rest
                    .split(|c: char| c == '(' || c == ')' || c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| num(&lines, ln, s))
                    .collect::<Result<_>>()?;
                if coords.len() < 3 || !(coords.len() - 1).is_multiple_of(2) || coords[0] as usize * 2 != coords.len() - 1 {
                    return Err(lines.err(ln, "malformed vertex list"));
                }
                let xs = coords[1..].iter().step_by(2);
                let ys = coords[2..].iter().step_by(2);
                let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
                let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
                modules.push(Module::new(name, x1 - x0, y1 - y0));
            }
            "softrectangular" => {
                let area = num(&lines, ln, toks.next().ok_or_else(|| lines.err(ln, "missing area"))?)?;
                let side = area.sqrt();
                modules.push(Module::new(name, side, side));
            }
            other => return Err(lines.err(ln, format!("unknown block type {other:?}"))),
        }
    }
    let n_hard_soft = want_hard.unwrap_or(0) + want_soft.unwrap_or(0);
    if (want_hard.is_some() || want_soft.is_some()) && n_hard_soft != modules.len() {
        return Err(lines.err(0, format!("header declares {n_hard_soft} blocks, found {}", modules.len())));
    }
    if let Some(n) = want_term {
        if n != terminals.len() {
            return Err(lines.err(0, format!("header declares {n} terminals, found {}", terminals.len())));
        }
    }
    Ok(Blocks { modules, terminals })
}

#[derive(Clone, Copy)]
enum Owner {
    Module(usize),
    Io(usize),
}

fn parse_nets(file: &str, text: &str, names: &HashMap<String, Owner>, modules: &[Module]) -> Result<Vec<Net>> {
    let mut lines = Lines::new(file, text);
    let mut nets: Vec<Net> = Vec::new();
    let mut remaining = 0usize;
    let (mut want_nets, mut want_pins) = (None, None);
    let mut total_pins = 0;
    while let Some((ln, line)) = lines.next() {
        if is_header(line) {
            continue;
        }
        if let Some((k, v)) = key_value(line) {
            match k {
                "NumNets" => {
                    want_nets = Some(v.parse::<usize>().map_err(|_| lines.err(ln, "bad NumNets"))?);
                    continue;
                }
                "NumPins" => {
                    want_pins = Some(v.parse::<usize>().map_err(|_| lines.err(ln, "bad NumPins"))?);
                    continue;
                }
                "NetDegree" => {
                    if remaining != 0 {
                        return Err(lines.err(ln, format!("previous net is missing {remaining} pins")));
                    }
                    let mut t = v.split_whitespace();
                    remaining = t
                        .next()
                        .and_then(|d| d.parse().ok())
                        .ok_or_else(|| lines.err(ln, format!("bad NetDegree {v:?}")))?;
                    let name = t.next().map_or_else(|| format!("net{}", nets.len()), str::to_string);
                    nets.push(Net { name, pins: Vec::new() });
                    continue;
                }
                _ => {}
            }
        }
        if remaining == 0 {
            return Err(lines.err(ln, "pin outside of a net"));
        }
        let (head, offsets) = match line.split_once(':') {
            Some((h, o)) => (h, Some(o)),
            None => (line, None),
        };
        let name = head.split_whitespace().next().unwrap_or_default();
        let owner = *names.get(name).ok_or_else(|| lines.err(ln, format!("unknown block {name:?}")))?;
        let pin = match owner {
            Owner::Io(k) => Pin::io(k),
            Owner::Module(i) => {
                let m = &modules[i];
                let (mut dx, mut dy) = (0.0, 0.0);
                if let Some(o) = offsets {
                    let parts: Vec<&str> = o.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(lines.err(ln, "expected two pin offsets"));
                    }
                    let parse = |s: &str, size: f64| -> Result<f64> {
                        match s.strip_prefix('%') {
                            Some(p) => Ok(num(&lines, ln, p)? / 100.0 * size),
                            None => num(&lines, ln, s),
                        }
                    };
                    dx = parse(parts[0], m.width)?;
                    dy = parse(parts[1], m.height)?;
                }
                Pin::module(i, m.width / 2.0 + dx, m.height / 2.0 + dy)
            }
        };
        nets.last_mut().expect("inside a net").pins.push(pin);
        remaining -= 1;
        total_pins += 1;
    }
    if remaining != 0 {
        return Err(lines.err(0, format!("last net is missing {remaining} pins")));
    }
    if let Some(n) = want_nets {
        if n != nets.len() {
            return Err(lines.err(0, format!("header declares {n} nets, found {}", nets.len())));
        }
    }
    if let Some(n) = want_pins {
        if n != total_pins {
            return Err(lines.err(0, format!("header declares {n} pins, found {total_pins}")));
        }
    }
    Ok(nets)
}

struct PlEntry {
    x: f64,
    y: f64,
    line: usize,
}

fn parse_pl(file: &str, text: &str) -> Result<HashMap<String, PlEntry>> {
    let mut lines = Lines::new(file, text);
    let mut out = HashMap::new();
    while let Some((ln, line)) = lines.next() {
        if is_header(line) {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(lines.err(ln, "expected `name x y`"));
        }
        let (x, y) = (num(&lines, ln, toks[1])?, num(&lines, ln, toks[2])?);
        if out.insert(toks[0].to_string(), PlEntry { x, y, line: ln }).is_some() {
            return Err(lines.err(ln, format!("duplicate entry {:?}", toks[0])));
        }
    }
    Ok(out)
}

/// Builds an instance from blocks/nets/pl text. Pin offsets are read as
/// center-relative (percent of the block size when prefixed with `%`) and
/// stored corner-relative. Terminals are fixed at their pl coordinates and
/// assigned to the nearest die side.
pub fn parse_bookshelf(
    name: &str,
    blocks: (&str, &str),
    nets: (&str, &str),
    pl: Option<(&str, &str)>,
    die: DieSpec,
) -> Result<Loaded> {
    let b = parse_blocks(blocks.0, blocks.1)?;
    let total: f64 = b.modules.iter().map(Module::area).sum();
    let region = die.region(total)?;
    for m in &b.modules {
        if m.width > region.width || m.height > region.height {
            return Err(Error::Parse {
                file: blocks.0.to_string(),
                line: 0,
                msg: format!("module {} ({}x{}) does not fit the die", m.name, m.width, m.height),
            });
        }
    }
    let mut names = HashMap::new();
    for (i, m) in b.modules.iter().enumerate() {
        names.insert(m.name.clone(), Owner::Module(i));
    }
    for (k, t) in b.terminals.iter().enumerate() {
        names.insert(t.clone(), Owner::Io(k));
    }
    let net_list = parse_nets(nets.0, nets.1, &names, &b.modules)?;
    let positions = match pl {
        Some((f, text)) => {
            let map = parse_pl(f, text)?;
            for (n, e) in &map {
                if !names.contains_key(n) {
                    return Err(Error::Parse { file: f.to_string(), line: e.line, msg: format!("unknown block {n:?}") });
                }
            }
            map
        }
        None => HashMap::new(),
    };
    let io_pins = b
        .terminals
        .iter()
        .map(|t| {
            let (x, y) = positions.get(t).map_or((0.0, 0.0), |e| (e.x, e.y));
            IoPin { name: t.clone(), side: Some(Side::nearest(&region, x, y)), fixed: true, x, y }
        })
        .collect();
    let mut instance = Instance::new(name, region, b.modules);
    instance.io_pins = io_pins;
    instance.nets = net_list;
    instance.validate()?;
    let mut placement = instance.initial_placement();
    for (i, m) in instance.modules.iter().enumerate() {
        if let Some(e) = positions.get(&m.name) {
            placement.set_module(i, e.x, e.y);
        }
    }
    Ok(Loaded { instance, placement })
}

pub fn load_instance(name: &str, paths: &BookshelfPaths, die: DieSpec) -> Result<Loaded> {
    let read = |p: &Path| std::fs::read_to_string(p);
    let blocks = read(&paths.blocks)?;
    let nets = read(&paths.nets)?;
    let pl = paths.pl.as_deref().map(read).transpose()?;
    let (bf, nf) = (paths.blocks.display().to_string(), paths.nets.display().to_string());
    let pf = paths.pl.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    parse_bookshelf(name, (&bf, &blocks), (&nf, &nets), pl.as_deref().map(|t| (pf.as_str(), t)), die)
}

/// Module and I/O coordinates in pl format, `/FIXED` on fixed terminals,
/// 17 significant digits.
pub fn placement_text(inst: &Instance, p: &Placement) -> String {
    let mut out = String::from("UCLA pl 1.0\n\n");
    for (i, m) in inst.modules.iter().enumerate() {
        let _ = writeln!(out, "{} {:.16e} {:.16e}", m.name, p.x(i), p.y(i));
    }
    for (k, pin) in inst.io_pins.iter().enumerate() {
        let (x, y) = p.io(k);
        let marker = if pin.fixed { " /FIXED" } else { "" };
        let _ = writeln!(out, "{} {:.16e} {:.16e}{marker}", pin.name, x, y);
    }
    out
}

pub fn write_placement(inst: &Instance, p: &Placement, path: &Path) -> Result<()> {
    std::fs::write(path, placement_text(inst, p))?;
    Ok(())
}

/// Reads module and I/O coordinates for `inst` from pl text.
pub fn read_placement(inst: &Instance, file: &str, text: &str) -> Result<Placement> {
    let map = parse_pl(file, text)?;
    let mut p = inst.initial_placement();
    let missing = |n: &str| Error::Parse { file: file.to_string(), line: 0, msg: format!("no entry for {n:?}") };
    for (i, m) in inst.modules.iter().enumerate() {
        let e = map.get(&m.name).ok_or_else(|| missing(&m.name))?;
        p.set_module(i, e.x, e.y);
    }
    for (k, pin) in inst.io_pins.iter().enumerate() {
        if let Some(e) = map.get(&pin.name) {
            p.set_io(k, e.x, e.y);
        }
    }
    Ok(p)
}

/// Die outline, one labelled rectangle per module, and a tick per I/O pin.
/// Output depends only on the inputs.
pub fn svg_text(inst: &Instance, p: &Placement) -> String {
    let (w, h) = (inst.region.width, inst.region.height);
    let pad = 0.05 * w.max(h);
    let stroke = 0.004 * w.max(h);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        -pad,
        -pad,
        w + 2.0 * pad,
        h + 2.0 * pad
    );
    let _ = writeln!(out, r#"<g transform="matrix(1 0 0 -1 0 {h})">"#);
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="black" stroke-width="{stroke}"/>"#
    );
    for (i, m) in inst.modules.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<rect id="m{i}" x="{}" y="{}" width="{}" height="{}" fill="#8fb3d9" fill-opacity="0.6" stroke="#1f3b57" stroke-width="{stroke}"/>"##,
            p.x(i),
            p.y(i),
            m.width,
            m.height
        );
    }
    let tick = 0.015 * w.max(h);
    for k in 0..inst.n_io() {
        let (x, y) = p.io(k);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="red" stroke-width="{stroke}"/>"#,
            x - tick,
            x + tick
        );
    }
    let _ = writeln!(out, "</g>");
    let font = 0.03 * w.max(h);
    for (i, m) in inst.modules.iter().enumerate() {
        let cx = p.x(i) + m.width / 2.0;
        let cy = h - (p.y(i) + m.height / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{cx}" y="{cy}" font-size="{font}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            i + 1
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}

pub fn write_svg(inst: &Instance, p: &Placement, path: &Path) -> Result<()> {
    std::fs::write(path, svg_text(inst, p))?;
    Ok(())
}

/// Named starting placements of a synthetic instance.
#[derive(Clone, Debug)]
pub struct Synthetic {
    pub instance: Instance,
    pub starts: Vec<(&'static str, Placement)>,
}

impl Synthetic {
    pub fn start(&self, name: &str) -> Option<&Placement> {
        self.starts.iter().find(|(n, _)| *n == name).map(|(_, p)| p)
    }
}

fn boxes(w: &[f64], h: &[f64]) -> Vec<Module> {
    w.iter().zip(h).enumerate().map(|(i, (&w, &h))| Module::new(format!("m{}", i + 1), w, h)).collect()
}

/// The feasibility-only instances `n3`, `n3v`, `n4`, and `n5` with their
/// documented starting placements. Every instance has a `"default"` start;
/// `n5` also has `"alternate"`.
pub fn synthetic(name: &str) -> Result<Synthetic> {
    let (region, w, h, starts): (_, &[f64], &[f64], Vec<(&'static str, [&[f64]; 2])>) = match name {
        "n3" => (
            (11.0, 11.0),
            &[3.0, 4.0, 5.0],
            &[3.0, 4.0, 5.0],
            vec![("default", [&[0.0, 2.0, 6.0], &[4.0, 2.0, 0.0]])],
        ),
        "n3v" => (
            (5.0, 11.0),
            &[2.0, 2.0, 2.0],
            &[3.0, 4.0, 5.0],
            vec![("default", [&[0.0, 1.0, 3.0], &[2.0, 1.0, 0.0]])],
        ),
        "n4" => (
            (8.0, 12.0),
            &[4.0, 8.0, 6.0, 4.0],
            &[4.0, 4.0, 4.0, 4.0],
            vec![("default", [&N4_X, &N4_Y])],
        ),
        "n5" => (
            (3.0, 3.0),
            &[1.0, 2.0, 1.0, 2.0, 1.0],
            &[1.0, 1.0, 2.0, 1.0, 2.0],
            vec![
                ("default", [&[2.0, 1.0, 1.0, 1.0, 0.0], &[1.0, 2.0, 0.0, 0.0, 1.0]]),
                ("alternate", [&[1.0, 1.0, 1.5, 0.5, 0.0], &[1.0, 2.0, 0.0, 0.0, 1.0]]),
            ],
        ),
        other => return Err(Error::UnknownInstance(other.to_string())),
    };
    let instance = Instance::new(name, Region::new(region.0, region.1)?, boxes(w, h));
    let starts = starts.into_iter().map(|(n, [x, y])| (n, Placement::from_xy(x, y))).collect();
    Ok(Synthetic { instance, starts })
}

pub const SYNTHETIC_NAMES: [&str; 4] = ["n3", "n3v", "n4", "n5"];

const N4_X: [f64; 4] = [0.0, 0.0, 2.0, 4.0];
const N4_Y: [f64; 4] = [0.0, 2.0, 4.0, 8.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub modules: usize,
    pub io_pins: usize,
    /// Extra random nets beyond the spanning ones.
    pub extra_nets: usize,
    pub whitespace: f64,
    /// Module sides drawn uniformly from this range.
    pub side_range: (f64, f64),
    pub seed: u64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { modules: 10, io_pins: 8, extra_nets: 20, whitespace: 0.15, side_range: (1.0, 5.0), seed: 0 }
    }
}

/// Random connected netlist on a square die with the given whitespace.
/// Every module reaches a fixed boundary pin through some chain of nets.
pub fn random_instance(spec: &RandomSpec) -> Result<Instance> {
    if spec.modules == 0 || spec.io_pins == 0 {
        return Err(Error::InvalidConfig("random instances need at least one module and one I/O pin".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.side_range;
    let modules: Vec<Module> = (0..spec.modules)
        .map(|i| Module::new(format!("m{i}"), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)))
        .collect();
    let area: f64 = modules.iter().map(Module::area).sum();
    let mut region = DieSpec::Whitespace { fraction: spec.whitespace, aspect: 1.0 }.region(area)?;
    let biggest = modules.iter().map(|m| m.width.max(m.height)).fold(0.0, f64::max);
    if region.width < biggest {
        region = Region::new(biggest, biggest.max(region.height))?;
    }
    let io_pins: Vec<IoPin> = (0..spec.io_pins)
        .map(|k| {
            let side = Side::ALL[k % 4];
            let t = rng.gen::<f64>();
            let (x, y) = match side {
                Side::Left => (0.0, t * region.height),
                Side::Right => (region.width, t * region.height),
                Side::Bottom => (t * region.width, 0.0),
                Side::Top => (t * region.width, region.height),
            };
            IoPin { name: format!("p{k}"), side: Some(side), fixed: true, x, y }
        })
        .collect();
    let center_pin = |m: &Module, rng: &mut ChaCha8Rng| {
        Pin { owner: crate::model::PinOwner::Module(0), dx: rng.gen_range(0.0..=m.width), dy: rng.gen_range(0.0..=m.height) }
    };
    let mut nets = Vec::new();
    for i in 0..spec.modules {
        let mut a = center_pin(&modules[i], &mut rng);
        a.owner = crate::model::PinOwner::Module(i);
        let b = if i == 0 || rng.gen_bool(0.3) {
            Pin::io(rng.gen_range(0..spec.io_pins))
        } else {
            let j = rng.gen_range(0..i);
            let mut b = center_pin(&modules[j], &mut rng);
            b.owner = crate::model::PinOwner::Module(j);
            b
        };
        nets.push(Net { name: format!("s{i}"), pins: vec![a, b] });
    }
    let ids: Vec<usize> = (0..spec.modules).collect();
    for k in 0..spec.extra_nets {
        let degree = rng.gen_range(2..=5usize).min(spec.modules.max(2));
        let mut pins = Vec::with_capacity(degree);
        for &i in ids.choose_multiple(&mut rng, degree.min(spec.modules)) {
            let mut p = center_pin(&modules[i], &mut rng);
            p.owner = crate::model::PinOwner::Module(i);
            pins.push(p);
        }
        if pins.len() < 2 || rng.gen_bool(0.2) {
            pins.push(Pin::io(rng.gen_range(0..spec.io_pins)));
        }
        nets.push(Net { name: format!("r{k}"), pins });
    }
    let mut inst = Instance::new(format!("random{}", spec.seed), region, modules);
    inst.io_pins = io_pins;
    inst.nets = nets;
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::overlap_area;

    #[test]
    fn synthetic_facts() {
        let n5 = synthetic("n5").unwrap();
        assert_eq!(n5.instance.total_module_area(), 9.0);
        assert_eq!(n5.instance.region.area(), 9.0);
        let n3 = synthetic("n3").unwrap();
        let p = n3.start("default").unwrap();
        assert_eq!(overlap_area(&n3.instance, p, 0, 1).unwrap(), 2.0);
        let n4 = synthetic("n4").unwrap();
        assert_eq!(n4.instance.total_module_area(), 88.0);
        assert_eq!(n4.instance.region.area(), 96.0);
        assert!(matches!(synthetic("n6"), Err(Error::UnknownInstance(_))));
    }

    const BLOCKS: &str = "UCSC blocks 1.0\n# comment\nNumSoftRectangularBlocks : 0\nNumHardRectilinearBlocks : 2\nNumTerminals : 1\n\nbk1 hardrectilinear 4 (0, 0) (0, 20) (40, 20) (40, 0)\nbk2 hardrectilinear 4 (0, 0) (0, 10) (10, 10) (10, 0)\np1 terminal\n";
    const NETS: &str = "UCLA nets 1.0\nNumNets : 1\nNumPins : 3\nNetDegree : 3\np1 B\nbk1 B : %50.0 %-50.0\nbk2 B\n";
    const PL: &str = "UCLA pl 1.0\nbk1 5 6\np1 0 50 /FIXED\n";

    #[test]
    fn parse_small_bookshelf() {
        let die = DieSpec::Fixed { width: 100.0, height: 100.0 };
        let l = parse_bookshelf("t", ("b", BLOCKS), ("n", NETS), Some(("p", PL)), die).unwrap();
        let inst = &l.instance;
        assert_eq!((inst.n_modules(), inst.n_io(), inst.nets.len()), (2, 1, 1));
        assert_eq!((inst.modules[0].width, inst.modules[0].height), (40.0, 20.0));
        // center + (50% w, -50% h) = (40, 0) from the corner
        assert_eq!((inst.nets[0].pins[1].dx, inst.nets[0].pins[1].dy), (40.0, 0.0));
        assert_eq!((inst.nets[0].pins[2].dx, inst.nets[0].pins[2].dy), (5.0, 5.0));
        assert_eq!(l.placement.x(0), 5.0);
        assert_eq!(l.placement.io(0), (0.0, 50.0));
        assert_eq!(inst.io_pins[0].side, Some(Side::Left));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let die = DieSpec::Fixed { width: 100.0, height: 100.0 };
        let dup = BLOCKS.replace("bk2 hard", "bk1 hard");
        match parse_bookshelf("t", ("b", &dup), ("n", NETS), None, die) {
            Err(Error::Parse { line: 8, msg, .. }) => assert!(msg.contains("duplicate")),
            other => panic!("{other:?}"),
        }
        let bad = NETS.replace("bk2 B", "bk9 B");
        match parse_bookshelf("t", ("b", BLOCKS), ("n", &bad), None, die) {
            Err(Error::Parse { line: 7, .. }) => {}
            other => panic!("{other:?}"),
        }
        let small = DieSpec::Fixed { width: 30.0, height: 30.0 };
        assert!(parse_bookshelf("t", ("b", BLOCKS), ("n", NETS), None, small).is_err());
    }

    #[test]
    fn placement_text_precision_and_markers() {
        let die = DieSpec::Fixed { width: 100.0, height: 100.0 };
        let l = parse_bookshelf("t", ("b", BLOCKS), ("n", NETS), Some(("p", PL)), die).unwrap();
        let mut p = l.placement.clone();
        p.set_module(1, 1.0 / 3.0, 2.0 / 7.0);
        let text = placement_text(&l.instance, &p);
        assert!(text.lines().any(|l| l.starts_with("p1 ") && l.ends_with("/FIXED")));
        let back = read_placement(&l.instance, "out", &text).unwrap();
        assert_eq!(back, p);
        let digits = text.lines().find(|l| l.starts_with("bk2")).unwrap().split_whitespace().nth(1).unwrap();
        let mantissa = digits.split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 9);
    }

    #[test]
    fn svg_is_deterministic() {
        let n5 = synthetic("n5").unwrap();
        let p = n5.start("default").unwrap();
        assert_eq!(svg_text(&n5.instance, p), svg_text(&n5.instance, p));
        let empty = Instance::new("e", Region::new(2.0, 2.0).unwrap(), vec![]);
        let s = svg_text(&empty, &empty.initial_placement());
        assert_eq!(s.matches("<rect").count(), 1);
    }

    #[test]
    fn random_instances_validate() {
        for seed in 0..5 {
            let inst = random_instance(&RandomSpec { seed, ..RandomSpec::default() }).unwrap();
            assert_eq!(inst.n_modules(), 10);
            let ws = 1.0 - inst.total_module_area() / inst.region.area();
            assert!(ws >= 0.15 - 1e-9);
        }
    }
}
