use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN04: &str = r#"seed = 11
[model]
mode = "homogeneous"
drift = -0.4
[[model.atom]]
weight = 1.0
parts = [0.5, 0.5]
[experiment]
t_grid = [1.0, 2.0]
"#;

const BIN04_SS: &str = r#"seed = 11
[model]
mode = "self_similar"
drift = -0.4
alpha = 1.0
[[model.atom]]
weight = 1.0
jump = -0.6931471805599453
[simulation]
horizon = 2.0
floor = 1e-3
[experiment]
t_grid = [0.5, 1.0]
epsilon = [0.05]
"#;

fn gfrag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfrag")).args(args).env_remove("GFRAG_SEED").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(gfrag(&[]).status.code(), Some(1));
    assert_eq!(gfrag(&["--help"]).status.code(), Some(0));
    assert_eq!(gfrag(&["cumulant", "frobnicate"]).status.code(), Some(1));
}

#[test]
fn roots_are_printed_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", BIN04);
    let out = gfrag(&["cumulant", "roots", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["omega_minus"].as_f64().unwrap() - 1.181374).abs() < 1e-5);
    assert!((v["omega_plus"].as_f64().unwrap() - 9.980199).abs() < 1e-5);
    assert!((v["q_bar"].as_f64().unwrap() - 2.421343).abs() < 1e-5);
    assert_eq!(v["provenance"]["seed"], 11);
    assert_eq!(v["provenance"]["config_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn eval_writes_a_kappa_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", BIN04);
    let out = gfrag(&["cumulant", "eval", "--config", &cfg, "--q-grid", "1:3:0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "q,kappa,kappa1,kappa2,psi");
    assert_eq!(rows.len(), 6);
    let at2: Vec<f64> = rows[3].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(at2[0], 2.0);
    assert!((at2[1] - (0.5 - 1.0 + 0.2)).abs() < 1e-14);
    assert_eq!(gfrag(&["cumulant", "eval", "--config", &cfg, "--q-grid", "3:1:1"]).status.code(), Some(1));
}

#[test]
fn invalid_configs_exit_with_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let bad = BIN04.replace("drift = -0.4", "drift = -0.4\nsigma2 = -1.0").replace("weight = 1.0", "weight = -2.0");
    let cfg = write(dir.path(), "bad.toml", &bad);
    let out = gfrag(&["cumulant", "roots", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("sigma2") && err.contains("weight"), "{err}");
    let missing = gfrag(&["cumulant", "roots", "--config", "/nonexistent/m.toml"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn homogeneous_outputs_carry_provenance_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", BIN04);
    let run = |sub: &str, extra: &[&str]| {
        let out = dir.path().join(sub);
        let mut args = vec!["sim", "homogeneous", "--config", &cfg, "--replicas", "200", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = gfrag(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", &[]);
    let b = run("b", &["--workers", "1"]);
    for name in ["martingale.csv", "largest.csv", "windows.csv"] {
        let head = first_line(&a.join(name));
        assert!(head.starts_with("# gfrag ") && head.contains("config_hash=") && head.ends_with("seed=11"), "{head}");
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
    let c = run("c", &["--seed", "12"]);
    assert!(first_line(&c.join("martingale.csv")).ends_with("seed=12"));
}

#[test]
fn environment_seed_sits_between_flag_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", BIN04);
    let run = |sub: &str, flag: Option<&str>| {
        let out = dir.path().join(sub);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_gfrag"));
        cmd.args(["sim", "homogeneous", "--config", &cfg, "--replicas", "50", "--out", out.to_str().unwrap()]);
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.env("GFRAG_SEED", "99").status().unwrap().success());
        first_line(&out.join("martingale.csv"))
    };
    assert!(run("env", None).ends_with("seed=99"));
    assert!(run("flag", Some("5")).ends_with("seed=5"));
}

#[test]
fn self_similar_commands_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ss.toml", BIN04_SS);
    let out = dir.path().join("cells");
    let o = gfrag(&["sim", "cellsystem", "--config", &cfg, "--replicas", "50", "--dump-genealogy", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["malthusian.csv", "rho.csv", "frozen.csv"] {
        assert!(first_line(&out.join(name)).starts_with("# gfrag "));
    }
    let genealogy = fs::read_to_string(out.join("genealogy.jsonl")).unwrap();
    for line in genealogy.lines() {
        let _: serde_json::Value = serde_json::from_str(line).unwrap();
    }
    assert!(genealogy.lines().count() >= 1);
    let mal = fs::read_to_string(out.join("malthusian.csv")).unwrap();
    assert!(mal.lines().any(|l| l == "t,mean,stderr,bias_bound,n"));

    let spine = dir.path().join("spine");
    assert!(gfrag(&["study", "spine", "--config", &cfg, "--replicas", "50", "--out", spine.to_str().unwrap()]).status.success());
    assert!(spine.join("spine.csv").exists());
    let frozen = dir.path().join("freeze");
    assert!(gfrag(&["study", "freeze", "--config", &cfg, "--replicas", "50", "--out", frozen.to_str().unwrap()]).status.success());
    assert!(frozen.join("frozen.csv").exists());
}

#[test]
fn homogeneous_config_is_rejected_by_cell_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", BIN04);
    let out = dir.path().join("x");
    assert_eq!(gfrag(&["sim", "cellsystem", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn unknown_budget_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfrag(&["verify", "all", "--budget", "huge", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
