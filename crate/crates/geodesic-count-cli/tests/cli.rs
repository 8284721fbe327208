use std::fs;
use std::process::{Command, Output};

use tempfile::tempdir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_geodesic-count"));
    c.env_remove("GEODESIC_COUNT_CACHE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn sieve_payloads_and_idempotence() {
    let dir = tempdir().unwrap();
    let p8 = dir.path().join("c8.bin");
    let o = run(&["sieve", "--limit", "8", "--out", p8.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = fs::read(&p8).unwrap();
    assert_eq!(&first[..8], b"N2SIEVE1");
    assert_eq!(&first[8..12], &1u32.to_le_bytes());
    assert_eq!(&first[12..20], &8u64.to_le_bytes());
    assert_eq!(&first[20..], &[1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 2, 0, 1, 0]);

    assert!(run(&["sieve", "--limit", "8", "--out", p8.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(&p8).unwrap(), first);

    let p1 = dir.path().join("c1.bin");
    assert!(run(&["sieve", "--limit", "1", "--out", p1.to_str().unwrap()]).status.success());
    assert_eq!(&fs::read(&p1).unwrap()[20..], &[1, 0]);
}

#[test]
fn sieve_requires_a_destination() {
    assert_eq!(run(&["sieve", "--limit", "8"]).status.code(), Some(2));
    assert_eq!(run(&["sieve", "--limit", "0", "--out", "/tmp/x"]).status.code(), Some(2));
}

#[test]
fn correlate_single_point() {
    let o = run(&["correlate", "--p", "3", "--sign", "plus", "--xmax", "5"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let v: Vec<f64> = rows[0].iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(v[0], 5.0);
    assert_eq!(v[1], 3.0);
    assert!((v[2] - 2.361).abs() < 1e-3, "{v:?}");
    assert!((v[3] - 0.639).abs() < 1e-3, "{v:?}");
    assert!(stdout(&o).starts_with("x,S,M,E\n"));
}

#[test]
fn correlate_at_zero() {
    let o = run(&["correlate", "--xmax", "0", "--grid", "lin:4"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[1] == "0"));
}

#[test]
fn correlate_json_matches_csv() {
    let args = ["correlate", "--p", "5", "--sign", "minus", "--xmax", "200", "--grid", "lin:20"];
    let csv_out = run(&args);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let json_out = run(&json_args);
    assert!(csv_out.status.success() && json_out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    assert_eq!(v["input"]["p"], 5);
    assert_eq!(v["input"]["sign"], "minus");
    assert_eq!(v["input"]["x_max"], 200.0);
    let rows = v["rows"].as_array().unwrap();
    let csv = csv_rows(&stdout(&csv_out));
    assert_eq!(rows.len(), csv.len());
    for (j, c) in rows.iter().zip(&csv) {
        assert_eq!(j["x"].as_f64().unwrap(), c[0].parse::<f64>().unwrap());
        assert_eq!(j["S"].as_u64().unwrap(), c[1].parse::<u64>().unwrap());
        assert_eq!(j["M"].as_f64().unwrap(), c[2].parse::<f64>().unwrap());
        assert_eq!(j["E"].as_f64().unwrap(), c[3].parse::<f64>().unwrap());
        let (s, m, e) = (j["S"].as_f64().unwrap(), j["M"].as_f64().unwrap(), j["E"].as_f64().unwrap());
        assert!((s - m - e).abs() < 1e-9);
    }
}

#[test]
fn csv_output_is_byte_identical_across_runs() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, workers) in [(&a, "1"), (&b, "2")] {
        let o = run(&["correlate", "--p", "3", "--xmax", "5000", "--grid", "geo:50", "--xmin", "10", "--workers", workers, "--out", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn cache_is_created_reused_and_validated() {
    let dir = tempdir().unwrap();
    let cache = dir.path().join("table.bin");
    let c = cache.to_str().unwrap();
    let o = run(&["correlate", "--p", "3", "--xmax", "100", "--cache", c]);
    assert!(o.status.success());
    let bytes = fs::read(&cache).unwrap();
    assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 301);

    let again = run(&["correlate", "--p", "3", "--xmax", "50", "--cache", c]);
    assert!(again.status.success());
    assert_eq!(fs::read(&cache).unwrap(), bytes);

    let grown = run(&["correlate", "--p", "3", "--xmax", "200", "--cache", c]);
    assert!(grown.status.success());
    assert_eq!(u64::from_le_bytes(fs::read(&cache).unwrap()[12..20].try_into().unwrap()), 601);

    fs::write(&cache, b"not a cache").unwrap();
    let bad = run(&["correlate", "--p", "3", "--xmax", "10", "--cache", c]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stderr(&bad).contains("not a sieve cache"));
}

#[test]
fn cache_path_from_environment() {
    let dir = tempdir().unwrap();
    let cache = dir.path().join("env.bin");
    let o = bin()
        .args(["correlate", "--p", "3", "--xmax", "10"])
        .env("GEODESIC_COUNT_CACHE", &cache)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(cache.exists());
}

#[test]
fn config_file_sits_below_flags() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "p = 5\nformat = \"json\"\n[tol]\nfoo = 0.5\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = run(&["mainterm", "--config", c]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"][0]["p"], 5);
    assert_eq!(v["input"]["tol"]["foo"], 0.5);
    assert_eq!(v["input"]["d"], 0.1);

    let o = run(&["mainterm", "--config", c, "--p", "7", "--format", "csv"]);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("7,8,"));

    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(run(&["mainterm", "--config", c]).status.code(), Some(2));
    assert_eq!(run(&["mainterm", "--config", "/nonexistent/run.toml"]).status.code(), Some(3));
}

#[test]
fn mainterm_for_five() {
    let o = run(&["mainterm", "--p", "5"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][0], "5");
    assert_eq!(rows[0][1], "4");
    let per: f64 = rows[0][2].parse().unwrap();
    let both: f64 = rows[0][3].parse().unwrap();
    let l = (1.0f64 + 2f64.sqrt()).ln() / std::f64::consts::PI;
    assert!((per - 5.0 * l * l).abs() < 1e-14);
    assert!((both - 2.0 * per).abs() < 1e-14);
    assert!((per - 0.39354).abs() < 1e-4);
    assert!((both - 0.78711).abs() < 1e-4);
}

#[test]
fn cosets_for_three_ten() {
    let o = run(&["cosets", "--p", "3", "--xmax", "10"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
    let mut bs: Vec<i64> = rows.iter().map(|r| r[0].parse::<i64>().unwrap().abs()).collect();
    bs.sort();
    assert_eq!(bs, vec![1, 5, 5, 5, 5, 7, 7, 7, 7]);
}

#[test]
fn report_for_three_ten() {
    let o = run(&["report", "--p", "3", "--xmax", "10", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v["rows"][0];
    assert_eq!((r["n1"].as_i64(), r["n2"].as_i64(), r["n3"].as_i64(), r["n4"].as_i64()), (Some(9), Some(0), Some(0), Some(1)));
    assert_eq!(r["nmumu_pp"], 2);
}

#[test]
fn error_scan_slope() {
    let o = run(&["error-scan", "--p", "3", "--sign", "plus", "--xmin", "1e4", "--xmax", "1e6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv_rows(&stdout(&o)).len(), 200);
    let fits = csv_rows(&stderr(&o));
    assert_eq!(fits.len(), 2);
    for f in fits {
        let slope: f64 = f[1].parse().unwrap();
        assert!(slope <= 0.72, "{f:?}");
    }
}

#[test]
fn error_scan_rejects_bad_range() {
    assert_eq!(run(&["error-scan", "--xmin", "0.5", "--xmax", "100"]).status.code(), Some(2));
    assert_eq!(run(&["error-scan", "--xmin", "10", "--xmax", "100", "--grid", "geo:3"]).status.code(), Some(2));
}

#[test]
fn verify_trace_point_passes() {
    let o = run(&["verify", "--suite", "trace", "--p", "3", "--xmax", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn verify_injected_fault_names_identity() {
    let o = run(&["verify", "--suite", "trace", "--p", "3", "--xmax", "20", "--tol", "geoside_c=0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trace/geoside_c"), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], false);
    let failing: Vec<_> = v["reports"].as_array().unwrap().iter().filter(|r| r["pass"] == false).collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0]["identity"], "geoside_c");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["correlate", "--d", "1.5"],
        vec!["correlate", "--p", "9"],
        vec!["correlate", "--grid", "lin:1"],
        vec!["correlate", "--grid", "log:4"],
        vec!["verify", "--suite", "nothing"],
        vec!["verify", "--tol", "novalue"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_is_a_resource_error() {
    let o = run(&["mainterm", "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(3));
}
