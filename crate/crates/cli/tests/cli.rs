use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const HALF_BALL: &str = "[domain]\nkind = \"half_ball\"\nradius = 1.0\n";

const PROFILE: &str = "
[numerics.profile]
r_list = [4.0, 8.0]
r_outer = 16.0
h_rim = 0.02
";

fn mixeig(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixeig")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    std::fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn mesh_command() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", HALF_BALL);
    let o = mixeig(&["mesh", "--config", &cfg, "--mesh-out", "m.txt"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("m.txt")).unwrap();
    assert!(text.starts_with("3 "));
    let out = stdout(&o);
    let vol: f64 = out.split("volume ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(rel(vol, 2.0 * PI / 3.0) < 0.01, "{out}");

    let missing = config(tmp.path(), "bad.toml", "[domain]\nkind = \"half_ball\"\n");
    let o = mixeig(&["mesh", "--config", &missing], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("radius"), "{}", stderr(&o));

    let o = mixeig(&["mesh", "--config", &cfg, "--epsilon", "0.6"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("diameter constraint"));

    let unknown = config(tmp.path(), "u.toml", &format!("{HALF_BALL}[numerics]\nh_fra = 0.1\n"));
    assert_eq!(mixeig(&["mesh", "--config", &unknown], tmp.path()).status.code(), Some(3));
}

fn values(dir: &Path) -> Vec<f64> {
    let v = json(&dir.join("spectrum.json"));
    v["result"]["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// j₁,₁² from the first positive root of tan x = x.
fn lambda_exact() -> f64 {
    let mut x: f64 = 4.5;
    for _ in 0..50 {
        x -= (x.sin() - x * x.cos()) / (x * x.sin());
    }
    x * x
}

#[test]
fn eig_and_frequency_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = config(dir, "c.toml", &format!("{HALF_BALL}[numerics]\neig_count = 2\n"));
    let o = mixeig(&["eig", "--config", &cfg, "--out", "dir"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir_vals = values(&dir.join("dir"));
    assert!(rel(dir_vals[0], lambda_exact()) < 0.02, "{dir_vals:?}");
    let doc = json(&dir.join("dir/spectrum.json"));
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
    assert!(doc["versions"]["mixeig"].is_string());

    let o = mixeig(&["eig", "--config", &cfg, "--bc", "mixed", "--out", "mixed"], dir);
    assert!(o.status.success());
    assert_eq!(values(&dir.join("mixed")), dir_vals);

    let o = mixeig(&["eig", "--config", &cfg, "--bc", "flat", "--out", "flat"], dir);
    assert!(o.status.success());
    assert!(rel(values(&dir.join("flat"))[0], PI * PI) < 0.02);

    // x_N on the same mesh: swap the field block of an eigenfield file
    let text = std::fs::read_to_string(dir.join("dir/phi_1.field")).unwrap();
    let nv: usize = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let field_at = lines.iter().position(|l| l.starts_with("field ")).unwrap();
    let mut out: Vec<String> = lines[..=field_at].iter().map(|s| s.to_string()).collect();
    out.extend(lines[1..=nv].iter().map(|l| l.split_whitespace().nth(2).unwrap().to_string()));
    std::fs::write(dir.join("xn.field"), out.join("\n") + "\n").unwrap();
    let o = mixeig(&["frequency", "xn.field", "--lambda", "0", "--radii", "0.4,0.6,0.8"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(csv.lines().next(), Some("r,H,E,N"));
    for row in csv.lines().skip(1) {
        let n: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((n - 1.0).abs() < 0.02, "{row}");
    }

    let o = mixeig(&["frequency", "dir/phi_1.field"], dir);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("--lambda"));
    let o = mixeig(&["frequency", "dir/phi_1.field", "--lambda", "20", "--radii", "0.05"], dir);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("under-resolved"));
}

#[test]
fn profile_command() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = config(dir, "c.toml", &format!("{HALF_BALL}{PROFILE}"));
    let o = mixeig(&["profile", "--config", &cfg, "--out", "p"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&dir.join("p/profile.json"))["result"]["C"].as_f64().unwrap();
    assert!(rel(c, 4.0 / 3.0) < 0.05, "C = {c}");

    let zero = config(dir, "z.toml", &format!("{HALF_BALL}{PROFILE}[psi]\ngamma = 1\ncoefficients = [0.0]\n"));
    let o = mixeig(&["profile", "--config", &zero, "--out", "z"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json(&dir.join("z/profile.json"));
    assert_eq!(doc["result"]["C"].as_f64(), Some(0.0));
    assert!(!doc["result"]["warnings"].as_array().unwrap().is_empty());
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn sweep_is_deterministic_and_reportable() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let body = format!(
        "{HALF_BALL}[patch]\nkind = \"polygon\"\nvertices = [[-1, -1], [1, -1], [1, 1], [-1, 1]]\n\
         [sweep]\nepsilon_list = [0.3, 0.25, 0.2]\ngamma_radii = [0.3, 0.4]\n{}",
        PROFILE.replace("h_rim = 0.02", "h_rim = 0.04")
    );
    let cfg = config(dir, "sq.toml", &body);
    let a = mixeig(&["--jobs", "1", "sweep", "--config", &cfg, "--out", "a"], dir);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = mixeig(&["sweep", "--config", &cfg, "--out", "b", "--check", "sandwich"], dir);
    assert!(b.status.success(), "{}", stderr(&b));
    let line = stdout(&b).lines().find(|l| l.contains("sandwich")).unwrap().to_string();
    assert!(line.starts_with("[PASS] sandwich"), "{line}");
    for f in ["sweep.json", "sweep.csv", "rate.dat"] {
        assert_eq!(std::fs::read(dir.join("a").join(f)).unwrap(), std::fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.join("a/sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("epsilon,lambda_eps,lambda,d,C_emp"));
    assert_eq!(csv.lines().count(), 4);
    assert!(json(&dir.join("b/checks.json"))["result"][0]["pass"].as_bool().unwrap());

    let o = mixeig(&["report", "a/sweep.json"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("convergence"));
    let o = mixeig(&["report", "b/checks.json"], dir);
    assert_eq!(o.status.code(), Some(3));
}
