use std::process::{Command, Output};

use ou_offdiag::cli::{parse_regime_csv, parse_sweep_csv};
use ou_offdiag::experiments::{self, SweepResult};
use ou_offdiag::{OffDiagHypothesis, QuadratureSpec, RegimeClass, TimeParam};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ou-offdiag"));
    cmd.env_remove("OU_QUAD_TOL");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn first_row(text: &str) -> Vec<f64> {
    let line = text.lines().nth(1).expect("data row");
    line.split(',').map(|v| v.parse().expect("numeric field")).collect()
}

fn footer_value(text: &str, key: &str) -> f64 {
    let footer = text
        .lines()
        .find(|l| l.starts_with("# fitted_slope="))
        .expect("footer line");
    footer
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .expect("key in footer")
        .parse()
        .expect("numeric footer value")
}

const SWEEP_ARGS: [&str; 17] = [
    "sweep", "--t", "0.5", "--p", "1", "--q", "2", "--k", "1", "--n", "1", "--cmin", "4", "--cmax", "12", "--steps",
    "5",
];

#[test]
fn sweep_example() {
    let out = run(&SWEEP_ARGS);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("cB_norm,log_lhs,log_gammaB,log_implied_const\n"));
    let rows = parse_sweep_csv(&text).unwrap();
    assert_eq!(rows.len(), 5);
    let cbs: Vec<f64> = rows.iter().map(|r| r.cb_norm).collect();
    assert_eq!(cbs, vec![4.0, 6.0, 8.0, 10.0, 12.0]);
    let fitted = footer_value(&text, "fitted_slope");
    let predicted = footer_value(&text, "predicted_slope");
    assert!((predicted - 0.255_08).abs() < 1e-5, "{predicted}");
    assert!((fitted - 0.255).abs() / 0.255 < 0.15, "{fitted}");
    assert!(footer_value(&text, "rel_err") < 0.15);
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn sweep_csv_reproduces_library_rows_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let mut args: Vec<&str> = SWEEP_ARGS.to_vec();
    let p = path.to_str().unwrap();
    args.extend(["--output", p]);
    let out = run(&args);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let rows = parse_sweep_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();

    let hyp = OffDiagHypothesis::with_defaults(1.0, 2.0).unwrap();
    let grid = [4.0, 6.0, 8.0, 10.0, 12.0];
    let lib = experiments::sweep_blowup(
        &hyp,
        TimeParam::new(0.5).unwrap(),
        1,
        1,
        &grid,
        &QuadratureSpec::default(),
    )
    .unwrap();
    assert_eq!(rows, lib.rows);
}

#[test]
fn sweep_json_mirrors_csv() {
    let mut args: Vec<&str> = SWEEP_ARGS.to_vec();
    args.extend(["--format", "json"]);
    let json_out = run(&args);
    assert!(json_out.status.success());
    let res: SweepResult = serde_json::from_slice(&json_out.stdout).unwrap();
    let csv_rows = parse_sweep_csv(&stdout(&run(&SWEEP_ARGS))).unwrap();
    assert_eq!(res.rows, csv_rows);
    assert!(res.slope_rel_error.unwrap() < 0.15);
}

#[test]
fn regime_example() {
    let out = run(&[
        "regime", "--qfixed", "2", "--pmin", "1.05", "--pmax", "1.95", "--psteps", "10", "--tmin", "0.1", "--tmax",
        "2", "--tsteps", "20",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("p,q,t,t_star,p_nelson,class\n"));
    let cells = parse_regime_csv(&text).unwrap();
    assert_eq!(cells.len(), 200);
    assert!(cells.iter().all(|c| c.q == 2.0));
    assert_eq!(cells.first().unwrap().p, 1.05);
    assert_eq!(cells.last().unwrap().p, 1.95);
    assert_eq!(cells.last().unwrap().t, 2.0);
    for class in [
        RegimeClass::FailsRestricted,
        RegimeClass::HoldsUnrestricted,
        RegimeClass::Unknown,
    ] {
        assert!(cells.iter().any(|c| c.class == class), "{class} missing");
    }
}

#[test]
fn hypercheck_at_nelson_boundary() {
    let out = run(&["hypercheck", "--t", "0.5", "--p", "1.3678794411714423", "--lambda", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row: Vec<f64> = first_row(&text);
    let (closed, numeric) = (row[4], row[5]);
    assert!((closed - 1.0).abs() < 1e-9, "{closed}");
    assert!((numeric - 1.0).abs() < 1e-9, "{numeric}");
    assert!(text.contains("# verdict=contraction"));
}

#[test]
fn hypercheck_below_boundary_is_not_a_contraction() {
    let out = run(&[
        "hypercheck",
        "--t",
        "0.5",
        "--p",
        "1.2",
        "--lambda",
        "-3",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "no_contraction");
    assert!(v["ratio_numeric"].as_f64().unwrap() > 1.0);
}

#[test]
fn kernel_gamma_apply_dgcheck() {
    let out = run(&["kernel", "--t", "1", "--x", "0", "--y", "0"]);
    let text = stdout(&out);
    let v: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    let expected = -0.5 * (1.0 - (-2.0f64).exp()).ln();
    assert!((v - expected).abs() < 1e-14);

    // Out of f64 range: the linear column stays empty.
    let out = run(&["kernel", "--t", "0.1", "--x", "30", "--y", "30"]);
    let line = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(line.ends_with(','), "{line}");

    let out = run(&["gamma", "--center", "0", "--radius", "1"]);
    let row: Vec<f64> = first_row(&stdout(&out));
    assert!((row[1] - libm::erf(1.0)).abs() < 1e-10);

    let out = run(&["apply", "--t", "0.5", "--center", "8", "--y", "8.5"]);
    let text = stdout(&out);
    assert!(text.starts_with("log_value,value,log_closed_form\n"));
    let row: Vec<f64> = first_row(&text);
    assert!((row[0] - row[2]).abs() < 1e-7);

    let out = run(&[
        "apply", "--t", "0.5", "--center", "1,-1", "--radius", "0.5", "--y", "0.5,0",
    ]);
    assert!(stdout(&out).starts_with("log_value,value\n"));

    let out = run(&["dgcheck", "--t", "1", "--center", "4", "--k", "2"]);
    assert!(out.status.success());
    let row: Vec<f64> = first_row(&stdout(&out));
    assert!(row.iter().all(|v| v.is_finite()));
    let doubled = run(&["dgcheck", "--t", "1", "--center", "4", "--k", "2", "--mcintosh", "2"]);
    let row2: Vec<f64> = first_row(&stdout(&doubled));
    assert!((row2[1] - row[1] - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn invalid_parameters_exit_2() {
    for args in [
        vec!["kernel", "--t", "-1", "--x", "1", "--y", "1"],
        vec!["kernel", "--t", "1", "--x", "1", "--y", "1,2"],
        vec!["sweep", "--t", "0.5", "--p", "2", "--q", "1"],
        vec!["sweep", "--t", "0.5", "--p", "1", "--q", "2", "--cmin", "1"],
        vec!["hypercheck", "--t", "0.5", "--p", "3", "--lambda", "1"],
        vec![
            "regime", "--qfixed", "2", "--pmin", "1.9", "--pmax", "1.1", "--psteps", "3", "--tmin", "0.1", "--tmax",
            "1", "--tsteps", "2",
        ],
        vec!["gamma", "--center", "0", "--radius", "1", "--tol", "2"],
        vec!["nonsense"],
        vec!["gamma"],
    ] {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn non_convergence_exits_3_with_partial_rows() {
    let out = run(&[
        "sweep",
        "--t",
        "0.5",
        "--p",
        "1",
        "--q",
        "2",
        "--tol",
        "1e-15",
        "--max-refinements",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("did not converge"), "{stderr}");
    assert!(stdout(&out).contains("# partial: aborted at"));
}

#[test]
fn environment_tolerance_override() {
    let out = bin()
        .args(["gamma", "--center", "0"])
        .env("OU_QUAD_TOL", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tol"));
    // An explicit flag wins over the environment.
    let out = bin()
        .args(["gamma", "--center", "0", "--tol", "1e-9"])
        .env("OU_QUAD_TOL", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest", "--seed", "7"]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 20);
    assert!(!text.contains("FAIL"));
}
