use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_strip-homog");

const LAPLACIAN: &str = r#"{ "family": "linear", "a": { "a11": 1.0, "a12": 0.0, "a22": 1.0 } }"#;

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn solve_config(boundary: &str, assertions: &str, extra: &str) -> String {
    format!(
        r#"{{ "kind": "solve", "operator": {LAPLACIAN}, "boundary": {boundary},
            "geometry": {{ "nu": [0, 1] }}, "numerics": {{ "eps": 0.125, "radius": 4.0 {extra} }},
            "assertions": {assertions} }}"#
    )
}

#[test]
fn constant_flux_solve_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &solve_config(r#"{ "family": "constant", "g": 0.3 }"#, r#"{ "mu": 0.3 }"#, ""));
    let out = dir.path().join("out");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let verdict = std::fs::read_to_string(out.join("verdict.txt")).unwrap();
    assert!(verdict.lines().all(|l| l.starts_with("PASS")));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.starts_with("nu_1,nu_2,tau_1,tau_2,q_t,epsilon,h,R,"));
    let field = std::fs::read_to_string(out.join("field.csv")).unwrap();
    assert!(field.starts_with("x1,x2,tangent_coord,normal_coord,value,tag\n"));
    assert!(field.contains("neumann_top") && field.contains("lateral") && field.contains("interior"));
}

#[test]
fn supercritical_contact_angle_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &solve_config(r#"{ "family": "capillarity", "theta": 1.2 }"#, "{}", ""));
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("obliqueness violated"));
}

#[test]
fn malformed_and_mismatched_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", "{ not json");
    assert_eq!(run(&["solve", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "c.json", &solve_config(r#"{ "family": "constant", "g": 0.3 }"#, "{}", ""));
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_assertion_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &solve_config(r#"{ "family": "constant", "g": 0.3 }"#, r#"{ "mu": 0.5, "mu_tol": 1e-3 }"#, ""),
    );
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL |mu - 0.5|"));
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &solve_config(r#"{ "family": "capillarity", "theta": 0.5 }"#, "{}", r#", "max_iter": 0"#),
    );
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn single_worker_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(
            r#"{{ "kind": "lipschitz_q", "operator": {LAPLACIAN}, "boundary": {{ "family": "capillarity", "theta": 0.5 }},
                "numerics": {{ "eps": 0.125, "radius": 4.0 }}, "lipschitz": {{ "count": 3 }} }}"#
        ),
    );
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&["lipschitz-q", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "1", "--seed", "11"]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(out.join("lipschitz.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn lattice_rows_carry_their_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{ "kind": "lattice", "geometry": { "nu": [1, 2] },
             "lattice": { "x_values": [0.5], "n_values": [4], "s_values": [0.1], "eps_values": [0.01] } }"#,
    );
    let o = run(&["lattice", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("lattice.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "quantity,nu_1,nu_2,x,n,s,epsilon,value");
    assert!(lines.iter().any(|l| l.starts_with("period_t,") && l.ends_with(",2.23606797749979")));
    // {k/2 : k = 1..4} = {0.5, 0, 0.5, 0}: discrepancy 1/2.
    assert!(lines.iter().any(|l| l.starts_with("discrepancy,") && l.ends_with(",0.5")));
}

#[test]
fn report_needs_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing data"));
}

#[test]
fn sweep_then_report_draws_the_rate_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(
            r#"{{ "kind": "sweep", "operator": {LAPLACIAN},
                "boundary": {{ "family": "linear_oblique", "gamma": [0.3, 1.0],
                  "g": {{ "terms": [{{ "coeff": 1.0, "factors": [{{ "func": "sin", "axis": 0, "freq": 1 }}] }}] }} }},
                "numerics": {{ "eps_list": [0.25, 0.125, 0.0625], "radius": 4.0 }} }}"#
        ),
    );
    let out = dir.path().join("run");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("fitted_exponent"));
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("nu_1,nu_2,tau_1,tau_2,q_t,epsilon,h,R,mu,lambda_bound,residual,iterations\n"));
    assert_eq!(sweep.lines().count(), 4);

    let plots = dir.path().join("plots");
    let o = run(&["report", out.to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(plots.join("rate_1.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 2);
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert!(!plots.join("rate_2.svg").exists());
}

#[test]
fn continuity_at_two_deltas_gives_a_gap_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(
            r#"{{ "kind": "continuity", "operator": {LAPLACIAN},
                "boundary": {{ "family": "capillarity", "theta": {{ "terms": [
                  {{ "coeff": 0.4 }}, {{ "coeff": 0.2, "factors": [{{ "func": "cos", "axis": 1, "freq": 1 }}] }} ] }} }},
                "continuity": [ {{ "delta": 0.5, "nu1": [1, 6], "nu2": [1, 8] }},
                                {{ "delta": 0.25, "nu1": [1, 33], "nu2": [1, 40] }} ] }}"#
        ),
    );
    let out = dir.path().join("run");
    let o = run(&["continuity", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("continuity.csv")).unwrap();
    assert!(csv.starts_with("delta,theta_1,theta_2,N,M,k,mu_k,mu_N_Gk,headline_gap,"));
    // k runs over 1..=1/delta for each delta.
    assert_eq!(csv.lines().count(), 1 + 2 + 4);
    let o = run(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(out.join("gap_vs_delta.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "delta,headline_gap");
    assert!(lines[1].starts_with("0.5,") && lines[2].starts_with("0.25,"));
}
