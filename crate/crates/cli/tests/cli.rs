use std::process::{Command, Output};

fn hinfty(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hinfty")).args(args).output().expect("binary runs")
}

fn hinfty_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hinfty")).args(args).env(key, value).output().expect("binary runs")
}

fn records(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(out: &Output, name: &str) -> Vec<String> {
    let (header, rows) = records(out);
    let idx = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.into_iter().map(|r| r[idx].clone()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn signature_reports_index_one() {
    let out = hinfty(&["signature", "--n", "3", "--t", "0.5", "--K", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(column(&out, "index"), vec!["1"]);
}

#[test]
fn signature_sweep_over_t_list() {
    let out = hinfty(&["signature", "--n", "3", "--t-list", "0.5,1.5,2.5,3.5", "--K", "30"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(column(&out, "index"), vec!["1", "3", "6", "10"]);
}

#[test]
fn dist_at_zero_is_zero() {
    let out = hinfty(&["dist", "--n", "2", "--t", "0.5", "--u", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(num(&column(&out, "dist")[0]), 0.0);
}

#[test]
fn dist_grid_and_seventeen_digits() {
    let out = hinfty(&["dist", "--t", "0.5", "--u-grid", "0:2:0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let d = column(&out, "dist");
    assert_eq!(d.len(), 5);
    let mantissa = d[4].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn speed_matches_closed_form() {
    let out = hinfty(&["speed", "--n", "3", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let closed = num(&column(&out, "closed")[0]);
    let fitted = num(&column(&out, "fitted")[0]);
    assert!((closed - 0.64550).abs() < 1e-5);
    assert!((fitted - closed).abs() < 1e-4);
}

#[test]
fn lambda_table() {
    let out = hinfty(&["lambda", "--n", "2", "--t", "0.5", "--K", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let lam: Vec<f64> = column(&out, "lambda_k").iter().map(|s| num(s)).collect();
    assert_eq!(lam.len(), 5);
    assert_eq!(lam[0], 1.0);
    assert!((lam[1] + 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn boundary_table_and_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    let out = hinfty(&["boundary", "--t", "0.5", "--K", "32", "--m", "8", "--cloud", cloud.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let plain: Vec<f64> = column(&out, "plain_partial").iter().map(|s| num(s)).collect();
    assert!(plain.windows(2).all(|w| w[1] > w[0]));
    let text = std::fs::read_to_string(&cloud).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,K,provenance,x1"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn renorm_columns() {
    let out = hinfty(&["renorm", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let ratios: Vec<f64> = column(&out, "dist_over_sqrt_t").iter().map(|s| num(s)).collect();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min < 1.2);
}

#[test]
fn cocycle_small_run() {
    let out = hinfty(&["cocycle", "--l", "1,2", "--pairs", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for s in column(&out, "power_slope") {
        assert!((num(&s) - 1.0).abs() < 1e-3);
    }
    assert_eq!(column(&out, "primitive_diverges"), vec!["true", "true"]);
}

#[test]
fn tree_from_edge_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("star.txt");
    std::fs::write(&path, "0 1\n0 2\n0 3\n0 4\n").unwrap();
    let out = hinfty(&["tree", "--edges", path.to_str().unwrap(), "--lam", "1.1,2,5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(column(&out, "positive_eigenvalues"), vec!["1", "1", "1"]);
}

#[test]
fn malformed_tree_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycle.txt");
    std::fs::write(&path, "0 1\n1 2\n2 0\n").unwrap();
    assert_eq!(hinfty(&["tree", "--edges", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn relation_residuals() {
    let out = hinfty(&["relation", "--n", "3", "--samples", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for s in column(&out, "sigma_residual") {
        assert!(num(&s) < 1e-10);
    }
}

#[test]
fn continuity_small_run() {
    let out = hinfty(&["continuity", "--K", "8", "--m", "16", "--iters", "1", "--t-list", "0.9,0.99"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(column(&out, "t").len(), 2);
}

#[test]
fn identical_seed_gives_identical_bytes() {
    let args = ["tree", "--samples", "20", "--seed", "42"];
    let a = hinfty(&args);
    let b = hinfty_env(&args, "HINFTY_THREADS", "1");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = hinfty(&["tree", "--samples", "20", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sig.csv");
    let out = hinfty(&["signature", "--t", "0.5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("n,t,K,index"));
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(hinfty(&["signature", "--n", "3"]).status.code(), Some(2));
    assert_eq!(hinfty(&["signature", "--t", "0.5", "--K", "3"]).status.code(), Some(2));
    assert_eq!(hinfty(&["dist", "--t", "1.5"]).status.code(), Some(2));
    assert_eq!(hinfty(&["speed", "--bogus"]).status.code(), Some(2));
    assert_eq!(hinfty_env(&["signature", "--t", "0.5"], "HINFTY_THREADS", "many").status.code(), Some(2));
}

#[test]
fn invariant_failures_exit_three() {
    // A negative tolerance makes the upper-bound check impossible to meet.
    let out = hinfty(&["dist", "--t", "0.5", "--u", "1", "--tol=-1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("upper bound"));
    // The table is still written.
    assert_eq!(column(&out, "u").len(), 1);
    // Integer t is a reducible point: signature is undefined there.
    assert_eq!(hinfty(&["signature", "--t", "1"]).status.code(), Some(2));
}
