use std::path::Path;
use std::process::{Command, Output};

use twofold::hbt::{extract_visibility, WavepacketConfig};
use twofold::report::{read_duality, read_events, read_pattern, OutputFormat};

fn twofold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twofold"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn hom_orthogonal_prints_half() {
    let o = twofold(&["hom", "--overlap", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("P_C = 0.5 "), "{}", stdout(&o));
}

#[test]
fn hom_writes_delay_scan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = twofold(&["hom", "--theta", "0", "--sigma-t", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,p_c"));
    assert_eq!(lines.next(), Some("0,0"));
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn duality_sweep_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = twofold(&[
        "duality",
        "--points",
        "101",
        "--experiment",
        "hom",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_duality(&out, OutputFormat::Csv).unwrap();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.residual <= 1e-12 && r.experiment == "HOM"));
    let header = std::fs::read_to_string(&out).unwrap();
    assert!(header.starts_with("s,D,V,sum,residual,experiment\n"));
}

#[test]
fn hbt_fringe_file_has_full_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fringes.csv");
    let o = twofold(&[
        "hbt",
        "--eps",
        "1",
        "--x0",
        "10",
        "--delta",
        "200",
        "--eta",
        "+1",
        "--overlap",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let period = WavepacketConfig::far_field().fringe_period();
    let pattern = read_pattern(&out, OutputFormat::Csv, period).unwrap();
    assert!((extract_visibility(&pattern).unwrap() - 1.0).abs() < 1e-6);

    // ≥ 3 periods with alternating extrema: corrected − mean changes sign
    // twice per period
    let span = pattern.separations.last().unwrap() - pattern.separations[0];
    assert!(span >= 3.0 * period);
    let mean = pattern.corrected.iter().sum::<f64>() / pattern.len() as f64;
    let signs: Vec<bool> = pattern
        .corrected
        .iter()
        .map(|c| c - mean)
        .filter(|d| d.abs() > 1e-9)
        .map(|d| d > 0.0)
        .collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(changes >= 6, "{changes}");
}

#[test]
fn fermion_flag_accepts_negative_sign() {
    let o = twofold(&["hbt", "--eta", "-1", "--overlap", "0.6"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("V = 0.36"));
}

#[test]
fn json_pattern_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = twofold(&[
        "hbt",
        "--overlap",
        "0.8",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let p = read_pattern(&out, OutputFormat::Json, WavepacketConfig::far_field().fringe_period()).unwrap();
    assert!((extract_visibility(&p).unwrap() - 0.64).abs() < 1e-12);
}

#[test]
fn eraser_summary() {
    let o = twofold(&["eraser", "--overlap", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.contains("HOM P(e1@D1, e2@D2) = 0 "), "{line}");
    assert!(line.contains("post-selected = 1"), "{line}");
    // e2 = (d_A − d_B)/√2
    let o = twofold(&[
        "eraser",
        "--overlap",
        "0",
        "--e2-theta",
        "1.5707963267948966",
        "--e2-phi",
        "3.141592653589793",
    ]);
    let line = stdout(&o);
    let p: f64 = line
        .strip_prefix("HOM P(e1@D1, e2@D2) = ")
        .and_then(|r| r.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .expect("joint probability in summary");
    assert!((p - 0.25).abs() < 1e-12, "{line}");
}

#[test]
fn sampling_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = twofold(&[
            "sample",
            "--overlap",
            "0.6",
            "--events",
            "20000",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        (std::fs::read(&out).unwrap(), stdout(&o))
    };
    let (a, sa) = run("a.csv");
    let (b, sb) = run("b.csv");
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    let batch = read_events(&dir.path().join("a.csv"), OutputFormat::Csv, 9).unwrap();
    assert_eq!(batch.count(), 20000);
}

#[test]
fn hom_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let o = twofold(&[
        "sample",
        "--target",
        "hom",
        "--overlap",
        "1",
        "--events",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("outcome\n"));
    assert!(!text.contains("coincidence"));
}

#[test]
fn config_errors_exit_two() {
    for args in [
        vec!["hom"],
        vec!["hom", "--overlap", "0.5", "--theta", "1"],
        vec!["hom", "--overlap", "1.5"],
        vec!["hbt", "--overlap", "0.5", "--eps", "-1"],
        vec!["hbt", "--overlap", "0.5", "--eta", "2"],
        vec!["duality", "--points", "1"],
        vec!["sample", "--overlap", "0.5", "--events", "0"],
        vec!["bogus"],
    ] {
        let o = twofold(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_one() {
    let o = twofold(&["hbt", "--overlap", "1", "--out", "/nonexistent-dir/x/f.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/x/f.csv"));
    assert!(!Path::new("/nonexistent-dir/x/f.csv").exists());
}
