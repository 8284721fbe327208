//! Subcommand implementations. Each writes CSV or a JSON summary (with the
//! resolved configuration echoed under `input`) to `--out` or stdout.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use geodesic_count::counting::{
    c_p, count_report_with_table, error_series, exponent_fit, lattice_count_coefficient, main_coefficient,
    middle_term_is_empty, windowed_rms, Branch, CountReport, FitResult,
};
use geodesic_count::group::{enumerate_double_cosets, sign_class};
use geodesic_count::quadfield::{ideal_count_sieve, IdealCountTable};
use geodesic_count::trace::trace_suite_on;
use geodesic_count::verify::{run_suite, Suite, VerificationReport};
use serde::Serialize;
use serde_json::json;

use crate::cache;
use crate::config::{suite_str, Command, Format, GridSpec, RunConfig, Spacing};
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Resource(format!("starting {n} workers: {e}")))?;
    }
    match &cfg.command {
        Command::Sieve { limit } => sieve(cfg, *limit),
        Command::Correlate => correlate(cfg),
        Command::Verify { suite } => {
            let suites: Vec<Suite> = if suite.is_empty() {
                vec![Suite::Geometry, Suite::Specfun, Suite::Trace, Suite::Group]
            } else {
                suite.iter().map(|s| s.0).collect()
            };
            verify(cfg, &suites)
        }
        Command::ErrorScan { windows } => error_scan(cfg, *windows),
        Command::Mainterm => mainterm(cfg),
        Command::Cosets => cosets(cfg),
        Command::Report => report(cfg),
    }
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::Resource(format!("creating {}: {e}", path.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_csv<R: Serialize>(cfg: &RunConfig, rows: &[R]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink(cfg)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(cfg: &RunConfig, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = sink(cfg)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Resource(format!("writing JSON: {e}")))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn emit<R: Serialize>(cfg: &RunConfig, rows: &[R], extra: serde_json::Value) -> Result<(), CliError> {
    match cfg.format {
        Format::Csv => write_csv(cfg, rows),
        Format::Json => {
            let mut v = json!({ "input": cfg, "rows": rows });
            if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
                obj.extend(more);
            }
            write_json(cfg, &v)
        }
    }
}

/// The ideal-count table for n ≤ `needed`, from the cache when it is large
/// enough. A missing or short cache is (re)built and written back.
pub fn load_table(cache_path: Option<&Path>, needed: u64) -> Result<IdealCountTable, CliError> {
    let needed = needed.max(1);
    if let Some(path) = cache_path {
        if path.exists() {
            let table = cache::read(path)?;
            if table.limit() >= needed {
                return Ok(table);
            }
        }
        let table = ideal_count_sieve(needed)?;
        cache::write(path, &table)?;
        return Ok(table);
    }
    Ok(ideal_count_sieve(needed)?)
}

fn sieve(cfg: &RunConfig, limit: u64) -> Result<(), CliError> {
    if limit < 1 {
        return Err(CliError::Usage("--limit must be at least 1".into()));
    }
    let path = cfg
        .out
        .as_deref()
        .or(cfg.cache_path.as_deref())
        .ok_or_else(|| CliError::Usage("sieve needs --out or --cache".into()))?;
    let table = ideal_count_sieve(limit)?;
    cache::write(path, &table)?;
    eprintln!("wrote {} counts to {}", table.limit(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct SeriesRow {
    x: f64,
    #[serde(rename = "S")]
    s: u64,
    #[serde(rename = "M")]
    m: f64,
    #[serde(rename = "E")]
    e: f64,
}

fn warn_spectrum(p: u64) {
    if !middle_term_is_empty(p) {
        eprintln!("warning: p = {p} has spectral terms X^s_j that E does not model");
    }
}

fn series_rows(table: &IdealCountTable, p: u64, branch: Branch, xs: &[f64]) -> Result<Vec<SeriesRow>, CliError> {
    let series = error_series(table, p, branch, xs)?;
    Ok((0..xs.len())
        .map(|i| SeriesRow { x: series.xs[i], s: series.s[i], m: series.m[i], e: series.e[i] })
        .collect())
}

fn needed_for(p: u64, x: f64) -> u64 {
    p * x.floor() as u64 + 1
}

fn correlate(cfg: &RunConfig) -> Result<(), CliError> {
    let xs = match cfg.grid {
        Some(g) => g.points(cfg.xmin.unwrap_or(0.0), cfg.x_max)?,
        None => vec![cfg.x_max],
    };
    warn_spectrum(cfg.p);
    let table = load_table(cfg.cache_path.as_deref(), needed_for(cfg.p, cfg.x_max))?;
    let rows = series_rows(&table, cfg.p, cfg.sign.into(), &xs)?;
    emit(cfg, &rows, json!({ "unmodeled_spectrum": !middle_term_is_empty(cfg.p) }))
}

#[derive(Serialize)]
struct FitRow {
    fit: &'static str,
    slope: f64,
    stderr: f64,
    samples: usize,
    window: Option<usize>,
}

impl FitRow {
    fn new(fit: &'static str, r: FitResult, window: Option<usize>) -> Self {
        FitRow { fit, slope: r.slope, stderr: r.stderr, samples: r.samples, window }
    }
}

fn error_scan(cfg: &RunConfig, windows: usize) -> Result<(), CliError> {
    let hi = cfg.x_max;
    let lo = cfg.xmin.unwrap_or((hi / 100.0).max(1.0));
    if !(lo >= 1.0 && hi > lo) {
        return Err(CliError::Usage(format!("error-scan needs 1 ≤ xmin < xmax, got [{lo}, {hi}]")));
    }
    let grid = cfg.grid.unwrap_or(GridSpec { spacing: Spacing::Geo, count: 200 });
    let xs = grid.points(lo, hi)?;
    let p = cfg.p;
    let branch: Branch = cfg.sign.into();
    warn_spectrum(p);
    let table = load_table(cfg.cache_path.as_deref(), needed_for(p, hi))?;
    let rows = series_rows(&table, p, branch, &xs)?;
    let pointwise = exponent_fit(&rows.iter().map(|r| (r.x, r.e)).collect::<Vec<_>>())?;
    let rms = exponent_fit(&windowed_rms(&table, p, branch, lo, hi, windows)?)?;
    let fits = [FitRow::new("pointwise", pointwise, None), FitRow::new("rms", rms, Some(windows))];
    match cfg.format {
        Format::Csv => {
            write_csv(cfg, &rows)?;
            let mut w = csv::Writer::from_writer(io::stderr().lock());
            for f in &fits {
                w.serialize(f)?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Json => emit(cfg, &rows, json!({ "fits": fits, "unmodeled_spectrum": !middle_term_is_empty(p) })),
    }
}

#[derive(Serialize)]
struct MaintermRow {
    p: u64,
    c_p: u64,
    /// (4p/c_p)(log ε/π)², the slope of one correlation branch.
    coefficient_per_branch: f64,
    /// Sum over both branches.
    coefficient: f64,
    lattice_count_coefficient: f64,
    middle_term_empty: bool,
}

fn mainterm(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.p;
    let per = main_coefficient(p);
    let row = MaintermRow {
        p,
        c_p: c_p(p),
        coefficient_per_branch: per,
        coefficient: 2.0 * per,
        lattice_count_coefficient: lattice_count_coefficient(p),
        middle_term_empty: middle_term_is_empty(p),
    };
    emit(cfg, &[row], json!({}))
}

#[derive(Serialize)]
struct CosetRow {
    #[serde(rename = "B")]
    b: i128,
    u: i64,
    v: i64,
    s: i64,
    t: i64,
    mu: i32,
    mu_prime: i32,
    sign_ad: i32,
    sign_ac: i32,
    norm_a: u64,
    norm_b: u64,
    fiber_index: u8,
}

fn cosets(cfg: &RunConfig) -> Result<(), CliError> {
    let x = cfg.x_max.floor() as i64;
    let rows: Vec<CosetRow> = enumerate_double_cosets(cfg.p as i64, x)
        .into_iter()
        .map(|c| CosetRow {
            b: c.b_value,
            u: c.rep.u,
            v: c.rep.v,
            s: c.rep.s,
            t: c.rep.t,
            mu: c.mu,
            mu_prime: c.mu_prime,
            sign_ad: c.sign_ad(),
            sign_ac: sign_class(&c.rep).1,
            norm_a: c.ideal_pair.na,
            norm_b: c.ideal_pair.nb,
            fiber_index: c.fiber_index,
        })
        .collect();
    emit(cfg, &rows, json!({}))
}

#[derive(Serialize)]
struct ReportRow {
    p: u64,
    x: i64,
    n1: i64,
    n2: i64,
    n3: i64,
    n4: i64,
    identity: i64,
    nmumu_pp: i64,
    nmumu_pm: i64,
    nmumu_mp: i64,
    nmumu_mm: i64,
    pairs_plus: u64,
    pairs_minus: u64,
}

impl From<&CountReport> for ReportRow {
    fn from(r: &CountReport) -> Self {
        ReportRow {
            p: r.p,
            x: r.x,
            n1: r.n1,
            n2: r.n2,
            n3: r.n3,
            n4: r.n4,
            identity: r.identity,
            nmumu_pp: r.nmumu.plus_plus,
            nmumu_pm: r.nmumu.plus_minus,
            nmumu_mp: r.nmumu.minus_plus,
            nmumu_mm: r.nmumu.minus_minus,
            pairs_plus: r.pair_counts.plus,
            pairs_minus: r.pair_counts.minus,
        }
    }
}

fn report(cfg: &RunConfig) -> Result<(), CliError> {
    let x = cfg.x_max.floor() as i64;
    let table = load_table(cfg.cache_path.as_deref(), (x.max(1) as u64).div_ceil(2) + 2)?;
    let r = count_report_with_table(&table, cfg.p, x)?;
    emit(cfg, &[ReportRow::from(&r)], json!({}))
}

#[derive(Serialize)]
struct VerifyRow<'a> {
    suite: &'static str,
    identity: &'a str,
    max_rel_err: f64,
    tolerance: f64,
    pass: bool,
    grid: String,
}

fn verify(cfg: &RunConfig, suites: &[Suite]) -> Result<(), CliError> {
    let tols = cfg.tolerances();
    let mut results: Vec<(Suite, VerificationReport)> = Vec::new();
    for &suite in suites {
        let reports = if suite == Suite::Trace && cfg.explicit_point {
            let (p, x) = (cfg.p as i64, cfg.x_max);
            trace_suite_on(&tols, &[p], &[x], cfg.d, &[(p, x, cfg.d)])
        } else {
            run_suite(suite, &tols)
        };
        let passed = reports.iter().filter(|r| r.pass).count();
        eprintln!("{}: {passed}/{} passed", suite_str(suite), reports.len());
        results.extend(reports.into_iter().map(|r| (suite, r)));
    }
    let all_pass = results.iter().all(|(_, r)| r.pass);
    match cfg.format {
        Format::Csv => {
            let rows: Vec<VerifyRow> = results
                .iter()
                .map(|(s, r)| VerifyRow {
                    suite: suite_str(*s),
                    identity: &r.identity,
                    max_rel_err: r.max_rel_err,
                    tolerance: r.tolerance,
                    pass: r.pass,
                    grid: r.grid.join("; "),
                })
                .collect();
            write_csv(cfg, &rows)?;
        }
        Format::Json => {
            let reports: Vec<_> = results
                .iter()
                .map(|(s, r)| {
                    let mut v = serde_json::to_value(r).expect("report serialises");
                    v["suite"] = json!(suite_str(*s));
                    if !r.max_rel_err.is_finite() {
                        v["max_rel_err"] = json!(null);
                    }
                    v
                })
                .collect();
            write_json(cfg, &json!({ "input": cfg, "pass": all_pass, "reports": reports }))?;
        }
    }
    match results.iter().find(|(_, r)| !r.pass) {
        Some((s, r)) => Err(CliError::Verification(format!(
            "{}/{} (max_rel_err {:.3e} > tolerance {:.3e})",
            suite_str(*s),
            r.identity,
            r.max_rel_err,
            r.tolerance
        ))),
        None => Ok(()),
    }
}
