//! End-to-end tests of the `hybrid-fv` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hybrid_fv::expr::Expression;
use hybrid_fv::geometry::Point;
use hybrid_fv::problem::{make_test1, Test2Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-fv"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("case.toml");
    fs::write(&p, text).unwrap();
    p
}

fn invoke(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_TEST1: &str = "[problem]\nkind = \"test1\"\n[mesh]\nresolution = [2, 1, 1]\nrefine_probability = 0.5\nseed = 3\n[time]\nT = 0.2\nN = 4\n";

const SMALL_TEST2: &str = "[problem]\nkind = \"test2\"\n[mesh]\nresolution = [8, 1, 1]\n[time]\nT = 0.25\nN = 5\n[output]\nsnapshot_stride = 2\n";

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TEST1);
    let out = dir.path().join("out");
    let o = invoke("run", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["metadata.toml", "diagnostics.csv", "errors.csv", "solution_00000.vtk", "solution_00004.vtk"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 5);
    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(errors.starts_with("time,rel_error\n"));
    let vtk = fs::read_to_string(out.join("solution_00004.vtk")).unwrap();
    for name in ["u", "beta_u", "region"] {
        assert!(vtk.contains(&format!("SCALARS {name} double 1")), "no {name} array");
    }
    // metadata echoes the resolved configuration and reparses
    let meta = fs::read_to_string(out.join("metadata.toml")).unwrap();
    let v: toml::Table = meta.parse().unwrap();
    assert_eq!(v["time"]["N"].as_integer(), Some(4));
    assert_eq!(v["solver"]["abs_tol"].as_float(), Some(1e-10));
}

#[test]
fn test2_run_writes_front() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TEST2);
    let out = dir.path().join("out");
    let o = invoke("run", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let front = fs::read_to_string(out.join("front.dat")).unwrap();
    assert_eq!(front.lines().count(), 7);
    let last: Vec<f64> = front.lines().last().unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
    assert!((last[2] - 0.4).abs() < 1e-12);
    assert!((last[1] - last[2]).abs() <= 2.0 / 8.0, "front {} vs {}", last[1], last[2]);
    let snaps: Vec<_> =
        ["00000", "00002", "00004", "00005"].iter().map(|n| out.join(format!("solution_{n}.vtk"))).collect();
    assert!(snaps.iter().all(|p| p.is_file()));
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TEST1);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(invoke("run", &cfg, &a, &[]).status.success());
    assert!(invoke("run", &cfg, &b, &[]).status.success());
    for f in ["diagnostics.csv", "errors.csv", "solution_00004.vtk"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    // metadata differs only in the output directory
    let meta = |d: &Path| -> Vec<String> {
        fs::read_to_string(d.join("metadata.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("dir = "))
            .map(String::from)
            .collect()
    };
    assert_eq!(meta(&a), meta(&b));
}

#[test]
fn seed_flag_changes_the_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TEST1);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(invoke("mesh-gen", &cfg, &a, &[]).status.success());
    assert!(invoke("mesh-gen", &cfg, &b, &["--seed", "11"]).status.success());
    assert_ne!(fs::read(a.join("mesh.txt")).unwrap(), fs::read(b.join("mesh.txt")).unwrap());
    let report = fs::read_to_string(a.join("mesh_report.txt")).unwrap();
    assert!(report.contains("valid: yes"));
    assert!(a.join("mesh.vtk").is_file());
}

#[test]
fn generated_mesh_file_can_be_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TEST1);
    let a = dir.path().join("a");
    assert!(invoke("mesh-gen", &cfg, &a, &[]).status.success());
    let text = SMALL_TEST1.replace("[time]", &format!("file = {:?}\n[time]", a.join("mesh.txt")));
    let cfg2 = dir.path().join("file.toml");
    fs::write(&cfg2, text).unwrap();
    let (r1, r2) = (dir.path().join("r1"), dir.path().join("r2"));
    assert!(invoke("run", &cfg, &r1, &[]).status.success());
    let o = invoke("run", &cfg2, &r2, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(r1.join("errors.csv")).unwrap(), fs::read(r2.join("errors.csv")).unwrap());
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TEST1);
    let out = dir.path().join("out");
    let o = invoke("run", &cfg, &out, &["--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("configuration ok"));
    assert!(!out.exists());
}

#[test]
fn configuration_errors_exit_nonzero_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (text, key) in [
        ("[problem]\nkind = \"test1\"\n[time]\nN = 0\n", "time.N"),
        ("[problem]\nkind = \"test1\"\n[time]\nT = -1.0\n", "time.T"),
        ("[problem]\nkind = \"test2\"\ndelta = 0.0\n", "problem.delta"),
        ("[problem]\nkind = \"test1\"\n[mesh]\nfile = \"nowhere.txt\"\n", "mesh.file"),
        ("[problem]\nkind = \"test1\"\n[solver]\nlinear = \"magic\"\n", "solver.linear"),
        ("[problem]\nkind = \"test1\"\nbogus = 1\n", "bogus"),
    ] {
        let cfg = write_config(dir.path(), text);
        let o = invoke("run", &cfg, &out, &[]);
        assert!(!o.status.success(), "accepted: {text}");
        assert!(stderr(&o).contains(key), "{key} not named in: {}", stderr(&o));
        assert!(!out.exists());
    }
    let missing = invoke("run", &dir.path().join("absent.toml"), &out, &[]);
    assert!(!missing.status.success());
    let bad_alpha = invoke("run", &write_config(dir.path(), SMALL_TEST1), &out, &["--alpha", "-1"]);
    assert!(!bad_alpha.status.success());
}

#[test]
fn condense_flag_does_not_change_the_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TEST1);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(invoke("run", &cfg, &a, &["--condense", "on"]).status.success());
    assert!(invoke("run", &cfg, &b, &["--condense", "off"]).status.success());
    let read = |d: &Path| -> Vec<f64> {
        fs::read_to_string(d.join("errors.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    for (x, y) in read(&a).iter().zip(read(&b)) {
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-12), "{x} vs {y}");
    }
}

#[test]
fn failing_solve_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL_TEST1}[solver]\nmax_iter = 1\nabs_tol = 1e-300\n"));
    let out = dir.path().join("out");
    let o = invoke("run", &cfg, &out, &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("step 1"), "{}", stderr(&o));
    assert!(out.join("diagnostics.csv").is_file());
}

#[test]
fn convergence_command_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL_TEST1}[convergence]\nlevels = 2\n"));
    let out = dir.path().join("out");
    let o = invoke("convergence", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "N,h,elements,faces,Err,order,runtime_s");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("4,"));
    assert!(lines[2].starts_with("8,"));
    assert!(out.join("convergence.dat").is_file());
}

#[test]
fn check_reports_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TEST2);
    let o = invoke("check", &cfg, &dir.path().join("out"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("beta: sqrt"));
    assert!(s.contains("warning"), "{s}");
}

#[test]
fn shipped_configs_resolve() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let out = tempfile::tempdir().unwrap();
    for name in ["test1.toml", "test2.toml", "custom.toml"] {
        let o = invoke("run", &root.join(name), out.path(), &["--dry-run"]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn custom_expression_problem_converges_to_its_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/custom.toml");
    let out = dir.path().join("out");
    let o = invoke("run", &root, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    let max = errors.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(max < 1e-2, "relative error {max}");
}

fn random_points(n: usize, hi: [f64; 3], seed: u64) -> Vec<(Point, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x =
                Point::new(rng.random_range(0.0..hi[0]), rng.random_range(0.0..hi[1]), rng.random_range(0.0..hi[2]));
            (x, rng.random_range(0.0..1.0))
        })
        .collect()
}

#[test]
fn expressions_match_closed_forms() {
    let spec = make_test1();
    let exact = spec.exact.as_ref().unwrap();
    let e1 = Expression::parse("exp(x1 + x2 + x3 - t - 3)").unwrap();
    for (x, t) in random_points(1000, [2.0, 1.0, 1.0], 1) {
        let (a, b) = (e1.eval(&x, t).unwrap(), exact.eval(&x, t).unwrap());
        assert!((a - b).abs() <= 1e-14 * b.abs(), "{x:?} {t}");
    }
    let p = Test2Params::default();
    let e2 = Expression::parse("(1 - exp(20 * ((x1 - 0.8 * t - 0.2) - abs(x1 - 0.8 * t - 0.2))))^2").unwrap();
    for (x, t) in random_points(1000, [1.0, 1.0, 1.0], 2) {
        let (a, b) = (e2.eval(&x, t).unwrap(), p.exact(x[0], t));
        assert!((a - b).abs() <= 1e-12, "{x:?} {t}: {a} vs {b}");
    }
}
