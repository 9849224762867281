use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use censdens::dataset::read_dataset;
use censdens::{Bandwidths, FittedSample, Kernel, Method};

fn censdens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_censdens"))
        .args(args)
        .env_remove("CENSDENS_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = censdens(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn simulate(dir: &Path, name: &str, n: usize, seed: u64) -> String {
    let path = dir.join(name).to_str().unwrap().to_owned();
    ok(&["simulate", "--n", &n.to_string(), "--cp", "0.3", "--seed", &seed.to_string(), "-o", &path]);
    path
}

fn rows(path: &str) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn simulate_is_deterministic_and_reports_censoring() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.csv", 300, 1);
    let b = simulate(dir.path(), "b.csv", 300, 1);
    let c = simulate(dir.path(), "c.csv", 300, 2);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let out = ok(&["simulate", "--n", "400", "--cp", "0.3", "--seed", "4", "-o", &a]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let reported: f64 = stderr
        .lines()
        .find_map(|l| l.strip_prefix("realized censoring fraction: "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    let data = read_dataset(Path::new(&a)).unwrap();
    let censored = data.iter().filter(|o| o.delta == 0).count() as f64 / data.len() as f64;
    assert_eq!(reported, censored);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let explicit = simulate(dir.path(), "e.csv", 50, 9);
    let env = dir.path().join("v.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_censdens"))
        .args(["simulate", "--n", "50", "--cp", "0.3", "-o", env.to_str().unwrap()])
        .env("CENSDENS_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(explicit).unwrap(), fs::read(env).unwrap());
}

#[test]
fn invalid_arguments_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = out.to_str().unwrap();
    for args in [
        vec!["simulate", "--n", "10", "--cp", "1.5", "-o", o],
        vec!["simulate", "--n", "10", "--cp", "0.3", "--rho", "1.0", "-o", o],
        vec!["simulate", "--n", "ten", "--cp", "0.3", "-o", o],
    ] {
        let res = censdens(&args);
        assert_eq!(res.status.code(), Some(2), "{args:?}");
    }
    assert!(!out.exists());
    let data = simulate(dir.path(), "d.csv", 50, 1);
    let res = censdens(&["fit", "-i", &data, "--x", "1", "--y-grid", "1:3:5", "--h", "-0.5", "--b", "0.3", "-o", o]);
    assert_eq!(res.status.code(), Some(2));
    let res = censdens(&["fit", "-i", "/nonexistent/data.csv", "--x", "1", "--y-grid", "1:3:5", "--h", "0.5", "--b", "0.3", "-o", o]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn fit_matches_library_and_flags_degenerate_designs() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", 200, 3);
    let out = dir.path().join("fit.csv").to_str().unwrap().to_owned();
    ok(&["fit", "-i", &data, "--x", "1", "--y-grid", "0.5:4.5:9", "--h", "0.6", "--b", "0.4", "--method", "nw", "-o", &out]);
    let fitted = FittedSample::new(read_dataset(Path::new(&data)).unwrap()).unwrap();
    let epa = Kernel::epanechnikov();
    let bw = Bandwidths::new(0.6, 0.4).unwrap();
    let fits = rows(&out);
    assert_eq!(fits.len(), 9);
    for r in &fits {
        let y: f64 = r[0].parse().unwrap();
        let f: f64 = r[1].parse().unwrap();
        let lib = fitted.estimate(Method::Nw, 1.0, y, bw, &epa, &epa).unwrap().f.unwrap();
        assert_eq!(f, lib);
        assert_eq!(r[3], "ok");
    }

    let flat = dir.path().join("flat.csv");
    let mut text = String::from("x,t,delta\n");
    for i in 0..20 {
        text.push_str(&format!("1.0,{},{}\n", 0.5 + 0.1 * i as f64, (i % 3 != 0) as u8));
    }
    fs::write(&flat, text).unwrap();
    let out2 = dir.path().join("flat_fit.csv").to_str().unwrap().to_owned();
    ok(&["fit", "-i", flat.to_str().unwrap(), "--x", "1", "--y-grid", "0.8,1.2", "--h", "0.5", "--b", "0.3", "-o", &out2]);
    assert!(rows(&out2).iter().all(|r| r[3] == "fallback"));
}

fn ci_widths(data: &str, out: &str) -> Vec<f64> {
    ok(&["ci", "-i", data, "--x", "1", "--y-grid", "1.5:3.5:5", "--h", "0.5", "--b", "0.5", "--level", "0.9", "-o", out]);
    rows(out)
        .iter()
        .map(|r| {
            let v: Vec<f64> = r[1..4].iter().map(|s| s.parse().unwrap()).collect();
            assert!(v[1] <= v[0] && v[0] <= v[2]);
            assert_eq!(r[4], "0.9");
            assert_eq!(r[5], "ok");
            v[2] - v[1]
        })
        .collect()
}

#[test]
fn intervals_contain_the_estimate_and_shrink_with_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ci.csv").to_str().unwrap().to_owned();
    let mut ratios = Vec::new();
    for seed in 0..5 {
        let small = simulate(dir.path(), "s.csv", 1000, seed);
        let w1 = ci_widths(&small, &out);
        let large = simulate(dir.path(), "l.csv", 2000, seed + 100);
        let w2 = ci_widths(&large, &out);
        ratios.extend(w1.iter().zip(&w2).map(|(a, b)| b / a));
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    assert!((median - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.1, "median width ratio {median}");
}

#[test]
fn ci_flags_points_beyond_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", 100, 5);
    let out = dir.path().join("ci.csv").to_str().unwrap().to_owned();
    ok(&["ci", "-i", &data, "--x", "1", "--y-grid", "2,1000", "--h", "0.5", "--b", "0.5", "-o", &out]);
    let r = rows(&out);
    assert_eq!(r[0][5], "ok");
    assert_eq!(r[1][5], "unsupported");
}

#[test]
fn bench_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let grid = dir.path().join(format!("grid_{tag}.csv"));
        let summary = dir.path().join(format!("summary_{tag}.csv"));
        let args = [
            "bench", "--M", "3", "--n", "50,80", "--cp", "0.1,0.3", "--h-grid", "0.5:1.0:2", "--b-grid", "0.5:1.0:2",
            "--seed", "1", "-o", grid.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
        ];
        let out = ok(&args);
        (fs::read(grid).unwrap(), fs::read(summary).unwrap(), out.stdout)
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let grid = String::from_utf8(a.0).unwrap();
    assert!(grid.starts_with("estimator,n,cp,h,b,gmse,excluded\n"));
    assert_eq!(grid.lines().count(), 1 + 3 * 2 * 2 * 4);
    assert_eq!(String::from_utf8(a.1).unwrap().lines().count(), 1 + 12);
}

#[test]
fn assert_ordering_fails_on_undersized_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("g.csv");
    let summary = dir.path().join("s.csv");
    let out = censdens(&[
        "bench", "--M", "5", "--n", "100", "--cp", "0.1", "--h-grid", "0.1:0.3:3", "--b-grid", "0.1:0.3:3",
        "--seed", "1", "--assert-ordering", "-o", grid.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(grid.exists());
}

#[test]
fn normality_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("norm.json");
    ok(&["normality", "--n", "300", "--trials", "40", "--method", "ll", "--format", "json", "--seed", "2", "-o", out.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    let r = &v.as_array().unwrap()[0];
    assert_eq!(r["method"], "LL");
    assert_eq!(r["trials"], 40);
    assert!(r["ks_p"].as_f64().unwrap() >= 0.0);
    assert_eq!(r["standardized"].as_array().unwrap().len() + r["excluded"].as_u64().unwrap() as usize, 40);
}
