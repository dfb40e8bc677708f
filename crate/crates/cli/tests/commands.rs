use std::process::{Command, Output};

fn hdcascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdcascade"))
        .args(args)
        .env_remove("HDCASCADE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> serde_json::Value {
    let out = hdcascade(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(args: &[&str]) -> Vec<Vec<String>> {
    let out = hdcascade(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn capacity_examples() {
    for (model, relays, want) in [
        ("ternary", "1", 1.1389),
        ("binary", "1", 0.8295),
        ("binary", "3", 0.5),
    ] {
        let v = json(&["capacity", "--model", model, "--relays", relays]);
        let c = v["capacity_bits"].as_f64().unwrap();
        assert!((c - want).abs() < 1e-4, "{model} {relays}: {c}");
        assert_eq!(
            v["cut_values"].as_array().unwrap().len(),
            relays.parse::<usize>().unwrap() + 1
        );
        assert!(v["chain"]["edges"][0].as_array().unwrap().len() == 9);
    }
    let v = json(&["capacity", "--relays", "1", "--method", "both"]);
    assert!(v["cross_check_delta"].as_f64().unwrap().abs() < 1e-6);
    let v = json(&["capacity", "--relays", "1", "--method", "closed-form"]);
    assert!((v["capacity_bits"].as_f64().unwrap() - 1.1389).abs() < 1e-4);
}

#[test]
fn capacity_usage_errors() {
    assert_eq!(
        hdcascade(&["capacity", "--model", "quaternary"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hdcascade(&["capacity", "--relays", "2", "--method", "closed-form"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hdcascade(&["capacity", "--relays", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn region_examples() {
    let rows = csv_rows(&["region", "--asymptotic", "--points", "100"]);
    assert!(rows.iter().any(|r| r[2] == "outer_bound"
        && (num(&r[0]) - 0.5283).abs() < 1e-4
        && (num(&r[1]) - 1.0566).abs() < 1e-4));
    for label in ["sum_cap_line", "outer_bound", "achievable_asymptotic"] {
        assert!(rows.iter().any(|r| r[2] == label));
    }

    let rows = csv_rows(&["region", "--points", "1"]);
    let outer: Vec<_> = rows.iter().filter(|r| r[2] == "outer_bound").collect();
    assert_eq!(outer.len(), 2);

    let rows = csv_rows(&["region", "--n-finite", "640"]);
    let outer: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[2] == "outer_bound")
        .map(|r| (num(&r[0]), num(&r[1])))
        .collect();
    let bound = |r0: f64| {
        let i = outer.iter().position(|p| p.0 >= r0).unwrap();
        if i == 0 {
            return outer[0].1;
        }
        let (a, b) = (outer[i - 1], outer[i]);
        a.1 + (b.1 - a.1) * (r0 - a.0) / (b.0 - a.0)
    };
    let finite: Vec<_> = rows
        .iter()
        .filter(|r| r[2] == "achievable_finite_n")
        .collect();
    assert!(!finite.is_empty());
    for r in finite {
        // the outer curve is concave, so the chords lie below it
        assert!(num(&r[1]) <= bound(num(&r[0])) + 1e-3, "{r:?}");
    }
    assert_eq!(
        hdcascade(&["region", "--points", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        hdcascade(&["region", "--asymptotic", "--n-finite", "8"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_examples() {
    let v = json(&[
        "simulate", "--relays", "1", "--n", "6", "--slots", "2", "--blocks", "10", "--seed", "1",
    ]);
    assert_eq!(v["messages_sent"], 9);
    assert_eq!(v["messages_correct"], 9);

    let v = json(&[
        "simulate",
        "--relays",
        "2",
        "--n",
        "64",
        "--optimize-slots",
        "--blocks",
        "40",
        "--seed",
        "7",
    ]);
    assert_eq!(v["messages_correct"], v["messages_sent"]);
    assert!(v["achieved_rate_bits_per_use"].as_f64().unwrap() > 0.9);

    let v = json(&[
        "simulate",
        "--two-source",
        "--n",
        "6",
        "--slots",
        "2",
        "--k0",
        "1",
        "--blocks",
        "20",
    ]);
    assert_eq!(v["messages_correct"], 19);
    assert_eq!(v["relay_messages_correct"], 20);
    assert!(v["achieved_rate_bits_per_use"].as_f64().unwrap() > 0.0);
    assert!(v["relay_rate_bits_per_use"].as_f64().unwrap() > 0.0);

    let v = json(&[
        "simulate",
        "--relays",
        "3",
        "--n",
        "12",
        "--optimize-slots",
        "--model",
        "binary",
        "--blocks",
        "9",
    ]);
    assert_eq!(v["messages_correct"], 6);
}

#[test]
fn simulate_usage_errors() {
    assert_eq!(
        hdcascade(&["simulate", "--n", "6", "--slots", "7"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hdcascade(&["simulate", "--n", "6", "--slots", "2", "--blocks", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(hdcascade(&["simulate", "--n", "6"]).status.code(), Some(2));
    assert_eq!(
        hdcascade(&["simulate", "--n", "640", "--slots", "181", "--blocks", "2000", "--trace"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn cutset_examples() {
    for args in [
        &[
            "cutset-check",
            "--relays",
            "3",
            "--trials",
            "200",
            "--seed",
            "42",
        ][..],
        &["cutset-check", "--relays", "1", "--trials", "1"][..],
        &[
            "cutset-check",
            "--relays",
            "4",
            "--relay-source",
            "2",
            "--trials",
            "50",
            "--seed",
            "9",
        ][..],
    ] {
        let v = json(args);
        assert_eq!(v["violations"].as_array().unwrap().len(), 0);
        assert!(v["subsets_checked"].as_u64().unwrap() > 0);
    }
    assert_eq!(
        hdcascade(&["cutset-check", "--relays", "6"]).status.code(),
        Some(2)
    );
    assert_eq!(
        hdcascade(&["cutset-check", "--relays", "5", "--relay-source", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_examples() {
    let rows = csv_rows(&["sweep", "--relays", "1", "--n-list", "8,16,64,256,640"]);
    assert_eq!(rows.len(), 5);
    assert!(num(&rows[4][5]) < 0.03);
    assert_eq!(
        csv_rows(&["sweep", "--relays", "1", "--n-list", "640"]).len(),
        1
    );
    let rows = csv_rows(&["sweep", "--relays", "2", "--n-list", "16,64,256"]);
    assert!(rows.windows(2).all(|w| num(&w[1][5]) < num(&w[0][5])));
    assert_eq!(
        hdcascade(&["sweep", "--n-list", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn seeded_runs_are_byte_identical() {
    for args in [
        &[
            "simulate",
            "--relays",
            "2",
            "--n",
            "32",
            "--optimize-slots",
            "--blocks",
            "20",
            "--seed",
            "5",
            "--trace",
        ][..],
        &[
            "cutset-check",
            "--relays",
            "3",
            "--trials",
            "20",
            "--seed",
            "3",
        ][..],
        &["sweep", "--relays", "2", "--n-list", "16,32", "--seed", "4"][..],
    ] {
        assert_eq!(hdcascade(args).stdout, hdcascade(args).stdout);
    }
}

#[test]
fn output_targets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.json");
    let out = hdcascade(&["capacity", "--output", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["capacity_bits"].is_number());

    let out = Command::new(env!("CARGO_BIN_EXE_hdcascade"))
        .args(["region", "--points", "5"])
        .env("HDCASCADE_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("region.csv")).unwrap();
    assert!(text.starts_with("r0_bits,r1_bits,label\n"));

    let rows = csv_rows(&["--format", "csv", "capacity"]);
    assert_eq!(rows[0][0], "ternary");
}
