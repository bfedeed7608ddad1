use std::path::Path;
use std::process::{Command, Output};

use entryscope_core::synthgen::{generate_world, WorldConfig};

fn entryscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entryscope"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = entryscope(&["threats", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_required_value_is_a_usage_error() {
    let out = entryscope(&["threats", "--records", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stage_failure_exits_one() {
    let out = entryscope(&["threats", "--records", "/nonexistent/records.csv", "--entrant", "WN", "--out", "/tmp"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn staged_run_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let raw = generate_world(&WorldConfig::default()).unwrap();
    let inputs = raw.write(&dir.path().join("raw")).unwrap();
    let out = dir.path().join("out");
    let config = dir.path().join("run.cfg");
    std::fs::write(
        &config,
        format!(
            "# staged run\ncoupon={}\nticket={}\nt100={}\ncpi={}\ntemps={}\nairports={}\nbase_quarter={}\nentrant={}\nout=/wrong\n",
            s(&inputs.coupon),
            s(&inputs.ticket),
            s(&inputs.t100),
            s(&inputs.cpi),
            s(&inputs.temperature),
            s(&inputs.airports),
            raw.base_quarter,
            raw.entrant,
        ),
    )
    .unwrap();
    let cfg = s(&config);
    let records = out.join("records.csv");

    let ok = |o: Output| {
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    ok(entryscope(&["--config", cfg, "ingest", "--out", s(&out)]));
    assert!(records.is_file());
    ok(entryscope(&["networks", "--records", s(&records), "--out", s(&out), "--largest-component"]));
    assert!(out.join("edge_measures.csv").is_file());
    let text = ok(entryscope(&["--config", cfg, "threats", "--records", s(&records), "--out", s(&out)]));
    assert!(text.starts_with(&format!("{} threat events", raw.threats.len())), "{text}");
    ok(entryscope(&[
        "panel",
        "--records",
        s(&records),
        "--threats",
        s(&out.join("threats.csv")),
        "--out",
        s(&out),
        "--largest-component",
    ]));
    let text = ok(entryscope(&[
        "fit",
        "--panel",
        s(&out.join("panel.csv")),
        "--outcome",
        "mean_fare",
        "--se",
        "cluster",
        "--out",
        s(&out),
    ]));
    assert!(text.contains("Entry te"), "{text}");
    let fit = out.join("fit_mean_fare.csv");
    assert!(fit.is_file());

    let report = dir.path().join("report");
    ok(entryscope(&["report", "--fit", s(&fit), "--kind", "event_curve", "--out", s(&report)]));
    let curve = std::fs::read_to_string(report.join("event_curve.csv")).unwrap();
    let entry = curve.lines().find(|l| l.starts_with("entry0,")).unwrap();
    let cols: Vec<f64> = entry.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    assert!((cols[2] - 100.0 * cols[0].exp_m1()).abs() < 1e-9);

    ok(entryscope(&["report", "--fit", s(&fit), "--kind", "table", "--out", s(&report)]));
    assert!(report.join("table.csv").is_file());
    ok(entryscope(&["report", "--threats", s(&out.join("threats.csv")), "--kind", "histograms", "--out", s(&report)]));
    let bad = entryscope(&["report", "--fit", s(&fit), "--kind", "bogus"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn selftest_uses_fixture_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_entryscope"))
        .arg("selftest")
        .env("ENTRYSCOPE_FIXTURES", dir.path())
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("8 passed, 0 failed"), "{text}");
    assert!(dir.path().join("boundary").join("coupon.csv").is_file());
    assert!(dir.path().join("world").join("out").join("records.csv").is_file());
}
