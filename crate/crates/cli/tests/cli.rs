use std::path::Path;
use std::process::{Command, Output};

fn fsplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsplan")).args(args).env_remove("FSPLAN_OUT").output().unwrap()
}

fn summary(dir: &Path) -> Vec<(String, String)> {
    std::fs::read_to_string(dir.join("summary.kv"))
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn get(kv: &[(String, String)], key: &str) -> String {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()).unwrap_or_else(|| panic!("no {key}"))
}

/// Eight modules on a ring of nets, four boundary terminals.
fn write_bookshelf(dir: &Path) -> (String, String, String) {
    let sizes = [(30, 20), (20, 20), (40, 10), (10, 30), (25, 25), (15, 35), (20, 10), (30, 30)];
    let mut blocks = format!(
        "UCSC blocks 1.0\nNumSoftRectangularBlocks : 0\nNumHardRectilinearBlocks : {}\nNumTerminals : 4\n\n",
        sizes.len()
    );
    for (k, (w, h)) in sizes.iter().enumerate() {
        blocks += &format!("b{k} hardrectilinear 4 (0, 0) (0, {h}) ({w}, {h}) ({w}, 0)\n");
    }
    for t in 0..4 {
        blocks += &format!("t{t} terminal\n");
    }
    let mut nets = Vec::new();
    for k in 0..sizes.len() {
        nets.push(vec![format!("b{k} B"), format!("b{} B : %20.0 %-10.0", (k + 1) % sizes.len())]);
    }
    for t in 0..4 {
        nets.push(vec![format!("t{t} B"), format!("b{} B", 2 * t), format!("b{} B", 2 * t + 1)]);
    }
    let pins: usize = nets.iter().map(Vec::len).sum();
    let mut net_text = format!("UCLA nets 1.0\nNumNets : {}\nNumPins : {pins}\n", nets.len());
    for n in &nets {
        net_text += &format!("NetDegree : {}\n", n.len());
        for p in n {
            net_text += p;
            net_text += "\n";
        }
    }
    let pl = "UCLA pl 1.0\nt0 0 60 /FIXED\nt1 120 60 /FIXED\nt2 60 0 /FIXED\nt3 60 120 /FIXED\n";
    let paths: Vec<String> = ["ring.blocks", "ring.nets", "ring.pl"].iter().map(|f| dir.join(f).display().to_string()).collect();
    std::fs::write(&paths[0], blocks).unwrap();
    std::fs::write(&paths[1], net_text).unwrap();
    std::fs::write(&paths[2], pl).unwrap();
    (paths[0].clone(), paths[1].clone(), paths[2].clone())
}

#[test]
fn rmap_solves_n3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = fsplan(&["solve", "--synthetic", "n3", "--mode", "rmap", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let kv = summary(&out);
    assert_eq!(get(&kv, "status"), "Feasible");
    assert!(get(&kv, "roa").parse::<f64>().unwrap() < 1e-3);
    for f in ["placement.pl", "layout.svg", "trajectory.csv", "summary.txt", "config.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn map_on_n4_stalls_at_the_reported_overlap() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = fsplan(&["solve", "--synthetic", "n4", "--mode", "map", "--lambda", "1", "--max-sweeps", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let roa: f64 = get(&summary(&out), "roa").parse().unwrap();
    assert!((roa - 0.208).abs() < 0.02, "{roa}");
}

#[test]
fn saved_config_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (blocks, nets, pl) = write_bookshelf(tmp.path());
    let a = tmp.path().join("a");
    let o = fsplan(&[
        "solve", "--blocks", &blocks, "--nets", &nets, "--pl", &pl, "--die-width", "120", "--die-height", "120",
        "--mode", "per-rmap", "--seed", "9", "--max-sweeps", "3000", "--out", a.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(get(&summary(&a), "hpwl_after_post").parse::<f64>().unwrap() <= get(&summary(&a), "hpwl_before_post").parse().unwrap());
    let b = tmp.path().join("b");
    let cfg = a.join("config.json");
    let o = fsplan(&["solve", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["placement.pl", "layout.svg", "trajectory.csv", "summary.kv", "config.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn io_assignment_puts_pins_on_their_sides() {
    let tmp = tempfile::tempdir().unwrap();
    let (blocks, nets, pl) = write_bookshelf(tmp.path());
    let out = tmp.path().join("io");
    let o = fsplan(&[
        "solve", "--blocks", &blocks, "--nets", &nets, "--pl", &pl, "--die-width", "120", "--die-height", "120",
        "--io-assign", "--max-sweeps", "3000", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("placement.pl")).unwrap();
    for line in text.lines().filter(|l| l.starts_with('t')) {
        let f: Vec<f64> = line.split_whitespace().skip(1).take(2).map(|v| v.parse().unwrap()).collect();
        let on_edge = [f[0], f[1]].iter().any(|&v| v.abs() < 1e-9 || (v - 120.0).abs() < 1e-9);
        assert!(on_edge, "{line}");
        assert!(!line.contains("/FIXED"));
    }
}

#[test]
fn analyze_reports_radius_and_rejects_overlap() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("n5");
    let o = fsplan(&["solve", "--synthetic", "n5", "--start", "alternate", "--mode", "map", "--out", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let pl = run.join("placement.pl");
    let o = fsplan(&["analyze", "--synthetic", "n5", "--placement", pl.to_str().unwrap(), "--verify", "5"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    let r: f64 = stdout.lines().next().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(r > 0.0);
    assert!(stdout.contains("0 left the ball, 0 not feasible"));

    let bad = tmp.path().join("bad.pl");
    std::fs::write(&bad, "UCLA pl 1.0\nm1 0 0\nm2 0 0\nm3 1 1\nm4 1 1\nm5 2 2\n").unwrap();
    let o = fsplan(&["analyze", "--synthetic", "n5", "--placement", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("overlap"));
}

#[test]
fn repro_alternate_n5_start() {
    let o = fsplan(&["repro", "n5", "--variant", "alternate"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("reproduced"));
}

#[test]
fn bad_input_exits_one() {
    assert_eq!(fsplan(&["solve", "--synthetic", "n9"]).status.code(), Some(1));
    assert_eq!(fsplan(&["solve", "--synthetic", "n3", "--lambda", "3"]).status.code(), Some(1));
    assert_eq!(fsplan(&["solve", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(fsplan(&["repro", "n7"]).status.code(), Some(1));
}
