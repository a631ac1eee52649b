use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skyrmion"))
}

fn config(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect()
}

fn run(args: &[&str], out: &Path) -> Output {
    let o = bin().args(args).arg("--out").arg(out).output().unwrap();
    assert!(
        o.status.success(),
        "{args:?}: {}\n{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

#[test]
fn table_writes_csv_with_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("bit_flip.toml");
    run(&["table", "--config", cfg.to_str().unwrap(), "--resolution", "64"], dir.path());
    let csv = std::fs::read_to_string(dir.path().join("bit_flip.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,channel,sweep_value,l1,l2,n_initial,n_final,valid_fraction,singular,boundary_phi,wall_time"
    );
    assert_eq!(lines.count(), 6);
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let cfg = config("retarder.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        run(
            &["homotopy", "--config", cfg.to_str().unwrap(), "--resolution", "64", "--deterministic"],
            d.path(),
        );
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("retarder.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn sweep_marks_singular_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("depolarizing.toml");
    run(&["sweep", "--config", cfg.to_str().unwrap(), "--resolution", "48"], dir.path());
    let csv = std::fs::read_to_string(dir.path().join("depolarizing.csv")).unwrap();
    let singular: Vec<&str> = csv.lines().skip(1).filter(|l| l.contains(",true,")).collect();
    assert_eq!(singular.len(), 1);
    assert!(singular[0].contains(",1.0000000000000000e0,"));
}

#[test]
fn simulate_dumps_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("compactify.toml");
    let o = run(
        &["simulate", "--config", cfg.to_str().unwrap(), "--resolution", "64", "--dump-fields"],
        dir.path(),
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("boundary_phi"));
    let dumps: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "skgf").then_some(p)
        })
        .collect();
    assert_eq!(dumps.len(), 4);
    for p in dumps {
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"SKGF");
    }
}

#[test]
fn oracle_writes_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["oracle", "--samples", "20", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert!(csv.starts_with("family,p,rho,phi,component,pipeline,analytic,relative_error"));
    assert!(csv.lines().count() > 20);
}

#[test]
fn verify_passes_on_a_simple_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.toml");
    std::fs::write(
        &path,
        r#"
[grid]
nx = 128
ny = 128

[[channels]]
name = "flip"
family = "bit_flip"
p = { family = "constant", value = 0.2 }

[[channels]]
name = "half"
family = "convex"
components = [{ channel = "flip", weight = 1.0 }]

[run]
experiment = "simulate"
channel = "half"
"#,
    )
    .unwrap();
    let o = run(&["verify", "--config", path.to_str().unwrap()], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(!stdout.contains("FAIL"), "{stdout}");
    assert!(dir.path().join("verify.csv").exists());
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[run]\nexperiment = \"table\"\nchannel = \"missing\"\n").unwrap();
    let o = bin()
        .args(["table", "--config", path.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing"));
}
