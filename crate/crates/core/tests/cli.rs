use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_subspace-bounds"))
        .args(args)
        .env_remove("SUBSPACE_BOUNDS_SEED")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn bound_json_has_schema_and_value() {
    let (code, stdout, _) = run(&["bound", "hs", "--spectrum", "spike:2,1,1,3", "--n", "100"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["kind"], "hs");
    assert!(v["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["bound", "hs", "--spectrum", "spike:2,1,1,3"][..],
        &["bound", "denoise", "--spectrum", "spike:2,1,1,3"],
        &["bound", "hs", "--spectrum", "nope", "--n", "5"],
        &["bound", "hs", "--spectrum", "spike:2,1,1,3", "--n", "5", "--delta", "0"],
        &["simulate", "--loss", "hs", "--spectrum", "spike:2,1,1,3", "--n", "5", "--reps", "0"],
        &["report", "--family", "exp", "--d-grid", ""],
        &["frobnicate"],
    ] {
        assert_eq!(run(args).0, 2, "{args:?}");
    }
}

#[test]
fn unmet_condition_exits_3() {
    let (code, _, stderr) = run(&["bound", "relrank", "--spectrum", "exp:1,10", "--d", "3", "--n", "2"]);
    assert_eq!(code, 3, "{stderr}");
}

#[test]
fn verify_suites_pass() {
    for suite in ["fisher-limit", "derivatives", "loss-identity", "lp-oracle"] {
        let (code, stdout, _) = run(&["verify", suite, "--trials", "10", "--seed", "1"]);
        assert_eq!(code, 0, "{suite}");
        let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(v["pass"], true);
    }
}

#[test]
fn simulate_appends_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("risk.csv");
    let out = path.to_str().unwrap();
    let args = [
        "simulate", "--loss", "hs", "--spectrum", "spike:3,1,1,4", "--n", "30", "--reps", "200", "--seed", "2",
        "--out", out,
    ];
    assert_eq!(run(&args).0, 0);
    assert_eq!(run(&args).0, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("model,"));
    assert_eq!(lines[1], lines[2]);
}

#[test]
fn seed_from_environment() {
    let args = ["verify", "lp-oracle", "--trials", "5"];
    let with_env = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_subspace-bounds"))
            .args(args)
            .env("SUBSPACE_BOUNDS_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(with_env("9"), run(&["verify", "lp-oracle", "--trials", "5", "--seed", "9"]).1.into_bytes());
    assert_ne!(with_env("9"), with_env("10"));
}
