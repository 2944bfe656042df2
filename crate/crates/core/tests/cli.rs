use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tracemin"));
    c.env_remove("TRACEMIN_SEED");
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).expect("utf-8"))
}

const FIXTURES: [&str; 5] =
    ["ky_fan", "indefinite_unbounded", "signature_coupled", "defective", "complex_definite"];

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn expected_exit(cmd: &str, fixture: &str) -> i32 {
    match (cmd, fixture) {
        ("solve" | "verify", "signature_coupled") => 2,
        _ => 0,
    }
}

#[test]
fn goldens_for_file_commands() {
    for f in FIXTURES {
        let path = fixture(&format!("{f}.json"));
        let p = path.to_str().unwrap();
        for (cmd, extra) in [("solve", vec!["--optimizer"]), ("pencil", vec![]), ("verify", vec!["--seed", "7"])] {
            let mut args = vec![cmd, p];
            args.extend(extra);
            let (code, out) = run(&args);
            assert_eq!(code, expected_exit(cmd, f), "{cmd} {f}: {out}");
            check_golden(&format!("{f}.{cmd}.json"), &out);
        }
    }
}

#[test]
fn goldens_for_counterexample() {
    for (mu, delta, name) in [("2", "0.25", "counterexample_2_0.25"), ("4", "0.2", "counterexample_4_0.2")] {
        let (code, out) = run(&["counterexample", "--mu", mu, "--delta", delta]);
        assert_eq!(code, 0);
        check_golden(&format!("{name}.json"), &out);
    }
}

#[test]
fn ky_fan_value_and_verify_gap() {
    let (code, out) = run(&["solve", fixture("ky_fan.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["value"].as_f64(), Some(3.0));
    assert!(v.get("x_opt").is_none());

    let (code, out) = run(&["verify", fixture("ky_fan.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "PASS");
    assert!(v["gap"].as_f64().unwrap().abs() <= 1e-5);
}

#[test]
fn unbounded_problem_is_a_valid_answer() {
    let (code, out) = run(&["solve", fixture("indefinite_unbounded.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["finite"], false);
    assert!(v.get("value").is_none());

    let (code, out) = run(&["verify", fixture("indefinite_unbounded.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["oracle_unbounded"], true);
    assert_eq!(v["verdict"], "PASS");
}

#[test]
fn coupled_signature_weights_are_rejected() {
    let (code, out) = run(&["solve", fixture("signature_coupled.json").to_str().unwrap()]);
    assert_eq!(code, 2);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["code"], "BLOCK_STRUCTURE_VIOLATED");
}

#[test]
fn pencil_reports_split_and_defect() {
    let (_, out) = run(&["pencil", fixture("indefinite_unbounded.json").to_str().unwrap()]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["lambda_plus"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["lambda_minus"][0].as_f64().unwrap() + 2.0).abs() < 1e-9);
    assert_eq!(v["diagonalizable"], true);

    let (_, out) = run(&["pencil", fixture("defective.json").to_str().unwrap()]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["m0"], 1);
    assert_eq!(v["diagonalizable"], false);
}

fn write_temp(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tracemin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn exit_codes() {
    let zero_b = write_temp("zero_b.json", r#"{"a": [[1]], "b": [[0]], "d": [[1]], "k": 1}"#);
    let (code, out) = run(&["solve", zero_b.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.contains("INFEASIBLE_CONSTRAINT"));

    let not_psd = write_temp(
        "not_psd.json",
        r#"{"a": [[0, 1], [1, 0]], "b": [[1, 0], [0, -1]], "d": [[1]], "k": 1}"#,
    );
    let (code, out) = run(&["pencil", not_psd.to_str().unwrap()]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("NOT_PSD_PENCIL"));

    let max_indef = write_temp(
        "max.json",
        r#"{"a": [[1, 0], [0, 2]], "b": [[1, 0], [0, -1]], "d": [[1]], "k": 1, "sense": "max"}"#,
    );
    let (code, out) = run(&["solve", max_indef.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.contains("UNSUPPORTED_SENSE"));

    let garbage = write_temp("garbage.json", "{ not json");
    let (code, out) = run(&["solve", garbage.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("PARSE_ERROR"));

    let non_herm = write_temp("nonherm.json", r#"{"a": [[1, 2], [0, 1]], "b": [[1, 0], [0, 1]], "d": [[1]], "k": 1}"#);
    let (code, out) = run(&["solve", non_herm.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("INVALID_INPUT"));

    let (code, _) = run(&["counterexample", "--mu", "2", "--delta", "0.6"]);
    assert_eq!(code, 1);
    let (code, _) = run(&["no-such-command"]);
    assert_eq!(code, 1);
    let (code, _) = run(&["--help"]);
    assert_eq!(code, 0);
    let (code, out) = run(&["selftest"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"PASS\""));
}

#[test]
fn json_round_trip_is_bit_stable() {
    for f in FIXTURES {
        let p = fixture(&format!("{f}.json"));
        let args = ["verify", p.to_str().unwrap(), "--seed", "11", "--restarts", "6", "--iters", "200"];
        let (_, first) = run(&args);
        let (_, second) = run(&args);
        assert_eq!(first, second, "verify output differs between runs for {f}");
        let parsed: Value = serde_json::from_str(&first).unwrap();
        let reserialized = serde_json::to_string_pretty(&parsed).unwrap() + "\n";
        assert_eq!(reserialized, first);
        let (_, solved) = run(&["solve", p.to_str().unwrap(), "--optimizer"]);
        let parsed: Value = serde_json::from_str(&solved).unwrap();
        assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", solved);
    }
}

#[test]
fn seed_from_environment() {
    let p = fixture("ky_fan.json");
    let with_env = bin().args(["verify", p.to_str().unwrap()]).env("TRACEMIN_SEED", "7").output().unwrap();
    let (_, explicit) = run(&["verify", p.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(String::from_utf8(with_env.stdout).unwrap(), explicit);
}

fn leaves(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => m.values().for_each(|x| leaves(x, out)),
        Value::Array(a) => a.iter().for_each(|x| leaves(x, out)),
        Value::Number(n) => out.push(n.to_string()),
        _ => {}
    }
}

#[test]
fn text_and_json_carry_the_same_numbers() {
    for f in FIXTURES {
        let p = fixture(&format!("{f}.json"));
        for cmd in ["solve", "pencil"] {
            let (_, json) = run(&[cmd, p.to_str().unwrap(), "--json", "--optimizer"][..if cmd == "solve" { 4 } else { 3 }]);
            let (_, text) = run(&[cmd, p.to_str().unwrap(), "--text", "--optimizer"][..if cmd == "solve" { 4 } else { 3 }]);
            let mut nums = Vec::new();
            leaves(&serde_json::from_str(&json).unwrap(), &mut nums);
            let text_nums: Vec<String> = text
                .lines()
                .filter_map(|l| l.split_once(" = ").map(|(_, v)| v.to_string()))
                .filter(|v| v.parse::<f64>().is_ok())
                .collect();
            let mut a = nums.clone();
            let mut b = text_nums;
            a.sort();
            b.sort();
            assert_eq!(a, b, "{cmd} {f}");
        }
    }
}

#[test]
fn d_blocks_and_bare_reals_parse() {
    let p = write_temp(
        "blocks.json",
        r#"{"a": [[1, 0], [0, 2]], "b": [[1, 0], [0, -1]], "d_plus": [[1]], "d_minus": [[0.5]],
            "constraint": "signature", "k_plus": 1, "k_minus": 1}"#,
    );
    let (code, out) = run(&["solve", p.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    // 1·λ⁺ - 0.5·λ⁻ with λ⁺ = 1, λ⁻ = -2.
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}
