//! End-to-end tests of the `rbg` binary: contract examples, output schemas,
//! exit codes, config-file precedence and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rbg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbg"))
        .args(args)
        .env_remove("RBG_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).expect("utf-8 stderr");
    serde_json::from_str(text.lines().next().expect("one stderr line")).expect("json stderr")
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().expect("header").split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect::<Vec<_>>())
        .collect();
    (header, rows)
}

fn field<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    let idx = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("column {name}"));
    &row[idx]
}

#[test]
fn degrees_example_reports_n_mean_near_five() {
    let out = rbg(&[
        "degrees", "--lambda", "5", "--mu", "50", "--conn", "boolean:0.2122", "--d", "2",
        "--reps", "10000", "--seed", "7",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_csv(&stdout_str(&out));
    assert_eq!(
        header.join(","),
        "observable,lambda,mu,family,theta,p,d,L,reps,mean,variance,ci95"
    );
    let observables: Vec<&str> =
        rows.iter().map(|r| field(&header, r, "observable")).collect();
    assert_eq!(observables, ["hub_degree", "M", "N", "conn_distance"]);
    let n = rows.iter().find(|r| field(&header, r, "observable") == "N").expect("N row");
    let mean: f64 = field(&header, n, "mean").parse().unwrap();
    let ci95: f64 = field(&header, n, "ci95").parse().unwrap();
    let en = 5.0 * 50.0 * (std::f64::consts::PI * 0.2122 * 0.2122).powi(2);
    assert!(
        (mean - en).abs() <= 3.0 * ci95,
        "N mean {mean} vs theory {en} outside 3 x {ci95}"
    );
}

#[test]
fn theory_example_contains_expected_m_exp() {
    let out = rbg(&[
        "theory", "--conn", "exp:0.2122", "--lambda", "5", "--mu", "50", "--d", "2",
        "--format", "json",
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&stdout_str(&out)).expect("json stdout");
    assert_eq!(doc["command"], "theory");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["config"]["conn"], "exp:0.2122");
    let rows = doc["rows"].as_array().expect("rows");
    let m_exp = rows
        .iter()
        .find(|r| r["quantity"] == "expected_M_exp")
        .expect("expected_M_exp row");
    let value = m_exp["value"].as_f64().unwrap();
    let error = m_exp["estimated_abs_error"].as_f64().unwrap();
    assert!(value > 0.0 && value.is_finite());
    assert!(error > 0.0 && error < 1e-4, "quadrature error {error}");
    // Independent cross-check: the generic quadrature row must agree.
    let m = rows.iter().find(|r| r["quantity"] == "expected_M").expect("expected_M row");
    assert!((m["value"].as_f64().unwrap() - value).abs() < 1e-6);
}

#[test]
fn percolate_csv_schema_and_json_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let args = [
        "percolate", "--fix", "mu=3", "--conn", "boolean:0.5", "--grid", "2:8:4", "--L",
        "8,16", "--reps", "60", "--seed", "1",
    ];
    let out = rbg(&[&args[..], &["--out", csv_path.to_str().unwrap()]].concat());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_csv(&fs::read_to_string(&csv_path).unwrap());
    assert_eq!(header.join(","), "param,value,L,reps,perc_prob,ci_lo,ci_hi");
    assert_eq!(rows.len(), 8, "4 grid points x 2 sides");
    assert!(rows.iter().all(|r| field(&header, r, "param") == "lambda"));

    let out = rbg(&[&args[..], &["--format", "json"]].concat());
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(doc["command"], "percolate");
    assert_eq!(doc["config"]["fix"], "mu=3");
    assert_eq!(doc["config"]["grid"], "2:8:4");
    let result = &doc["result"];
    assert_eq!(result["points"].as_array().unwrap().len(), 8);
    assert_eq!(result["param"], "lambda");
    assert_eq!(result["fixed_value"], 3.0);
    assert!(result["censored"].is_boolean());
    // The JSON mirrors the CSV values exactly.
    let first = &result["points"][0];
    assert_eq!(first["value"].as_f64().unwrap().to_string(), rows[0][1]);
    assert_eq!(first["prob"].as_f64().unwrap().to_string(), rows[0][4]);
}

#[test]
fn identical_configs_reproduce_results_regardless_of_workers() {
    // CSV output carries no config echo, so it must be byte-identical.
    let csv_args = [
        "percolate", "--fix", "mu=3", "--conn", "boolean:0.5", "--grid", "2:8:3", "--L", "8",
        "--reps", "40", "--seed", "9",
    ];
    let a = rbg(&[&csv_args[..], &["--workers", "1"]].concat());
    let b = rbg(&[&csv_args[..], &["--workers", "2"]].concat());
    let c = rbg(&csv_args);
    assert!(a.status.success() && b.status.success() && c.status.success());
    assert_eq!(stdout_str(&a), stdout_str(&b));
    assert_eq!(stdout_str(&a), stdout_str(&c));

    // JSON outputs echo the worker count, so compare the result payloads.
    let json_args = [&csv_args[..], &["--format", "json"]].concat();
    let a = rbg(&[&json_args[..], &["--workers", "1"]].concat());
    let b = rbg(&[&json_args[..], &["--workers", "2"]].concat());
    let da: Value = serde_json::from_str(&stdout_str(&a)).unwrap();
    let db: Value = serde_json::from_str(&stdout_str(&b)).unwrap();
    assert_eq!(da["config"]["workers"], 1);
    assert_eq!(db["config"]["workers"], 2);
    assert_eq!(da["result"], db["result"]);
}

#[test]
fn missing_seed_is_a_config_error() {
    let out = rbg(&["degrees", "--lambda", "5", "--mu", "50", "--conn", "boolean:0.2122"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("seed"));
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_flag_is_a_config_error() {
    let out = rbg(&[
        "percolate", "--fix", "sigma=3", "--conn", "boolean:0.5", "--grid", "1:2:4", "--L",
        "8", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");
}

#[test]
fn strict_censored_sweep_exits_one_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("censored.csv");
    let out = rbg(&[
        "zeta", "--conn", "boolean:1.0", "--grid", "0.05:0.1:2", "--L", "6,8", "--reps",
        "20", "--seed", "3", "--strict", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "experiment");
    // The artifact is still written (atomically) before the strict failure.
    let (_, rows) = parse_csv(&fs::read_to_string(&path).unwrap());
    assert_eq!(rows.len(), 4);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# defaults\nlambda=5\nmu=50\nconn=boolean:0.2122\nreps=500\nseed=7\n",
    )
    .unwrap();
    let base = rbg(&["degrees", "--config", cfg.to_str().unwrap()]);
    assert!(base.status.success());
    let over = rbg(&["degrees", "--config", cfg.to_str().unwrap(), "--reps", "400"]);
    assert!(over.status.success());
    let (header, rows) = parse_csv(&stdout_str(&over));
    assert!(rows.iter().all(|r| field(&header, r, "reps") == "400"));
    let (header, rows) = parse_csv(&stdout_str(&base));
    assert!(rows.iter().all(|r| field(&header, r, "reps") == "500"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "lambada=5\n").unwrap();
    let out = rbg(&["degrees", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("lambada"));
}

#[test]
fn fig1_dumps_points_edges_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = rbg(&["figs", "fig1", "--seed", "11", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for scenario in ["f1", "f2"] {
        let points =
            fs::read_to_string(dir.path().join(format!("fig1_{scenario}_points.csv"))).unwrap();
        let (p_header, p_rows) = parse_csv(&points);
        assert_eq!(p_header.join(","), "kind,index,x0,x1");
        let n_agents = p_rows.iter().filter(|r| r[0] == "agent").count();
        let n_hubs = p_rows.iter().filter(|r| r[0] == "hub").count();
        assert!(n_agents > 0 && n_hubs > 0);

        let edges =
            fs::read_to_string(dir.path().join(format!("fig1_{scenario}_edges.csv"))).unwrap();
        let (e_header, e_rows) = parse_csv(&edges);
        assert_eq!(e_header.join(","), "agent,hub,distance");
        for row in &e_rows {
            let a: usize = row[0].parse().unwrap();
            let h: usize = row[1].parse().unwrap();
            assert!(a < n_agents && h < n_hubs, "edge ({a},{h}) out of range");
        }

        let header: Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(format!("fig1_{scenario}_header.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(header["header"]["n_agents"].as_u64().unwrap() as usize, n_agents);
        assert_eq!(header["header"]["n_edges"].as_u64().unwrap() as usize, e_rows.len());
        assert_eq!(header["config"]["viewport"], 1.0);
    }
}

#[test]
fn fig2_emits_theory_curves_and_sim_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = rbg(&[
        "figs", "fig2", "--seed", "5", "--reps", "200", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_csv(&fs::read_to_string(dir.path().join("fig2.csv")).unwrap());
    assert_eq!(header.join(","), "scenario,p,quantity,source,value,error");
    for scenario in ["5x50", "50x5"] {
        for quantity in ["E_N", "sqrt_V_N", "E_M"] {
            assert!(rows
                .iter()
                .any(|r| r[0] == scenario && r[2] == quantity && r[3] == "theory"));
        }
        // The standard deviation of M is simulation-only.
        assert!(rows.iter().any(|r| r[0] == scenario && r[2] == "sqrt_V_M" && r[3] == "sim"));
        assert!(!rows.iter().any(|r| r[0] == scenario && r[2] == "sqrt_V_M" && r[3] == "theory"));
    }
    // E N is invariant under dispersion: the theory curve must be flat.
    let en: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "5x50" && r[2] == "E_N" && r[3] == "theory")
        .map(|r| r[4].parse().unwrap())
        .collect();
    assert!(en.len() > 10);
    assert!(en.iter().all(|v| (v - en[0]).abs() < 1e-9));
}

#[test]
fn atomic_outputs_leave_no_temp_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deg.csv");
    let out = rbg(&[
        "degrees", "--lambda", "5", "--mu", "50", "--conn", "boolean:0.2122", "--reps",
        "200", "--seed", "7", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, vec!["deg.csv".to_string()]);
    assert!(Path::new(&path).exists());
}
