use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rankin_core::maassio::{serialize_maass, synthetic_form};

fn lab(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankin-lab"))
        .args(args)
        .arg("--cache-dir")
        .arg(cache)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

#[test]
fn eigen_writes_cache_and_keeps_larger() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["eigen", "--weight", "12", "--nmax", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("eig_k12.csv");
    let before = fs::read(&path).unwrap();
    let report = json(&out);
    assert_eq!(report["report"]["leading"][1], "-24");
    assert_eq!(report["config"]["nmax"], 1000);
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));

    let out = lab(dir.path(), &["eigen", "--weight", "12", "--nmax", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&path).unwrap(), before);
}

#[test]
fn identities_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(
        dir.path(),
        &["identities", "--weight", "18", "--nmax", "10000"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["eigen", "--weight", "14"][..],
        &["variance", "--samples", "0"],
        &["nonsense"],
        &["majorant", "--b", "0.5"],
        &["lvalue", "--s", "0.4"],
    ] {
        let out = lab(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["perron", "--z", "1000", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z,remainder,envelope"));
    assert_eq!(lines.count(), 13);
}

#[test]
fn maass_commands() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, tj) in [11.0, 14.5].into_iter().enumerate() {
        let f = synthetic_form(tj, 3000, i as u64, format!("syn{i}")).unwrap();
        let p = dir.path().join(format!("form{i}.txt"));
        fs::write(&p, serialize_maass(&f)).unwrap();
        files.push(p.display().to_string());
    }
    let out = lab(
        dir.path(),
        &["maass-validate", "--input", &files[0], "--input", &files[1]],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let bad = dir.path().join("bad.txt");
    let mut f = synthetic_form(12.0, 500, 4, "bad").unwrap();
    f.set_lambda(10, 3.0);
    fs::write(&bad, serialize_maass(&f)).unwrap();
    let out = lab(
        dir.path(),
        &["maass-validate", "--input", bad.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["passed"], false);

    let broken = dir.path().join("broken.txt");
    fs::write(&broken, "# tj=3\n2,0.5\n").unwrap();
    let out = lab(
        dir.path(),
        &["maass-validate", "--input", broken.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing λ(1)"));

    let out = lab(
        dir.path(),
        &[
            "maass-family",
            "--input",
            &files[0],
            "--input",
            &files[1],
            "--T",
            "10",
            "--spectral-smoothing",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&out);
    assert_eq!(r["report"]["family"]["partial_family"], true);
    assert_eq!(r["report"]["family"]["forms"][1], "syn1");
}
