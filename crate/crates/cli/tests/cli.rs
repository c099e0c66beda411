use equisum_cli::{parse_int, run_with};
use serde_json::Value;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["equisum"];
    argv.extend(args);
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut a = args.to_vec();
    a.push("--json");
    let (code, out, err) = run(&a);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("rho-table") && out.contains("simulate"));
    let (code, out, _) = run(&["check", "--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("--perturb"));
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["nonsense"]).0, 1);
    assert_eq!(run(&["check", "--flag", "binary"]).0, 1);
    assert_eq!(run(&["check", "--flag", "file"]).0, 1);
    assert_eq!(run(&["check", "--flag", "file", "--file", "/nonexistent/flag"]).0, 1);
    assert_eq!(run(&["simulate", "equal-sums", "--trials", "0"]).0, 1);
    assert_eq!(run(&["simulate", "equal-sums", "--c", "1.5", "--trials", "1"]).0, 1);
    assert_eq!(run(&["--config", "/nonexistent/cfg", "eta"]).0, 1);
}

#[test]
fn guards_exit_two() {
    let (code, _, err) = run(&["rho-table", "--max-j", "41"]);
    assert_eq!(code, 2);
    assert!(err.contains("max-j"));
    assert_eq!(run(&["rho-table", "--max-j", "4", "--method", "genotype"]).0, 2);
    assert_eq!(run(&["check", "--flag", "binary", "--order", "9"]).0, 2);
    assert_eq!(run(&["simulate", "delta-perm", "--n", "1000", "--trials", "1"]).0, 2);
}

#[test]
fn eta_and_limit() {
    let v = json(&["eta"]);
    assert_eq!(v["schema"], "equisum.eta/1");
    assert!((v["eta"].as_f64().unwrap() - 0.35332277270132347).abs() < 1e-12);
    let v = json(&["rho-limit"]);
    assert!((v["rho"].as_f64().unwrap() - 0.28121134969637466).abs() < 1e-12);
    assert!((v["half_rho"].as_f64().unwrap() - 0.140605674848).abs() < 1e-10);
}

#[test]
fn rho_table_methods_agree() {
    let (code, csv, _) = run(&["rho-table", "--max-j", "3"]);
    assert_eq!(code, 0);
    assert!(csv.starts_with("j,rho_j,residual\n"));
    let a = json(&["rho-table", "--max-j", "3"]);
    for m in ["genotype", "tree"] {
        let b = json(&["rho-table", "--max-j", "3", "--method", m]);
        for j in 0..3 {
            let x = a["rows"][j]["rho"].as_f64().unwrap();
            let y = b["rows"][j]["rho"].as_f64().unwrap();
            assert!((x - y).abs() < 1e-10, "{m} j={}", j + 1);
        }
    }
}

#[test]
fn check_reports() {
    let v = json(&["check", "--flag", "mt", "--order", "2"]);
    assert_eq!(v["passed"], true);
    assert_eq!(v["flag"], "maier_tenenbaum");
    assert_eq!(v["subflag_count"], 6);
    let c = v["c_star"].as_array().unwrap();
    assert!((c[1].as_f64().unwrap() - 0.135113844).abs() < 1e-8);
    let (code, csv, _) = run(&["check", "--flag", "mt", "--order", "2", "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(csv.lines().next().unwrap(), "id,dims,basic,e_value,slack,status");
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn measures_sum_to_one() {
    let v = json(&["measures", "--flag", "binary", "--order", "2"]);
    let total: f64 = v["support"].as_array().unwrap().iter().map(|p| p["weight"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let g = v["gamma_mass"].as_array().unwrap();
    assert!((g[1].as_f64().unwrap() - (-2f64).exp()).abs() < 1e-12);
}

#[test]
fn tree_covers_cube() {
    let v = json(&["tree", "--flag", "binary", "--order", "2"]);
    let cells = v["cells"].as_array().unwrap();
    let level0: usize = cells.iter().filter(|c| c["level"] == 0).map(|c| c["members"].as_array().unwrap().len()).sum();
    assert_eq!(level0, 16);
    assert_eq!(cells.iter().filter(|c| c["level"] == 2).count(), 1);
    assert_eq!(cells.iter().filter(|c| c["level"] == 0).count(), 15);
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = std::env::temp_dir().join(format!("equisum-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# sweep\ntrials = 30\nseed = 5\nx = 1e6\nformat = json\n").unwrap();
    let (code, out, _) = run(&["--config", cfg.to_str().unwrap(), "simulate", "delta-int"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["trials"], 30);
    assert_eq!(v["x"], 1_000_000);
    let (_, out, _) = run(&["--config", cfg.to_str().unwrap(), "simulate", "delta-int", "--trials", "7"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["trials"], 7);
    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "eta"]).0, 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn out_file_gets_csv_rows() {
    let path = std::env::temp_dir().join(format!("equisum-out-{}.csv", std::process::id()));
    let (code, _, _) =
        run(&["simulate", "delta-perm", "--n", "30", "--trials", "25", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trial,n,cycle_type,delta");
    assert_eq!(text.lines().count(), 26);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn workers_env_and_flag() {
    let bin = env!("CARGO_BIN_EXE_equisum");
    let args = ["simulate", "delta-int", "--x", "2^30", "--trials", "50", "--format", "csv"];
    let a = Command::new(bin).args(args).env("EQUISUM_WORKERS", "1").output().unwrap();
    let b = Command::new(bin).args(args).args(["--workers", "6"]).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(bin).args(args).env("EQUISUM_WORKERS", "many").output().unwrap();
    assert_eq!(c.status.code(), Some(1));
}

#[test]
fn integers_parse() {
    assert_eq!(parse_int("1e6"), Ok(1_000_000));
    assert_eq!(parse_int("2^40"), Ok(1 << 40));
    assert_eq!(parse_int("12"), Ok(12));
    assert!(parse_int("1.5").is_err());
    assert!(parse_int("2^70").is_err());
}
