//! Correlation sums Σ 𝒩(n)𝒩(pn±1), their main terms, the counting functions
//! N₁..N₄ and N^{μ,μ′}, error series, exact mean squares and exponent fits.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::group::{enumerate_double_cosets, is_prime, sign_class};
use crate::quadfield::{ideal_count_sieve, IdealCountTable, QuadFieldError, LOG_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountingError {
    #[error("ideal table covers n ≤ {limit}, but {needed} is required")]
    SieveRange { needed: u64, limit: u64 },
    #[error("cross-check failed for p = {p}, X = {x}: {detail}")]
    CrossCheck { p: i64, x: i64, detail: String },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("p = {0} is not prime")]
    NotPrime(i64),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    QuadField(#[from] QuadFieldError),
}

/// The two correlation branches N(𝔞) = pN(𝔟) ± 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> i64 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" | "plus" | "+1" | "1" => Ok(Branch::Plus),
            "-" | "minus" | "-1" => Ok(Branch::Minus),
            _ => Err(format!("unknown branch `{s}` (expected + or -)")),
        }
    }
}

/// c_p: p−1 for p ≡ ±3 (mod 8), p+1 for p ≡ ±1 (mod 8), 2 for p = 2.
pub fn c_p(p: u64) -> u64 {
    match p % 8 {
        3 | 5 => p - 1,
        1 | 7 => p + 1,
        _ => p,
    }
}

/// (4p/c_p)·(log ε/π)², the slope of each correlation sum.
pub fn main_coefficient(p: u64) -> f64 {
    let l = LOG_EPS / PI;
    4.0 * p as f64 / c_p(p) as f64 * l * l
}

/// 2·len(ℓ)²/(π·Vol(Γ\ℍ)) with len(ℓ) = 4 log ε and Vol = 2πc_p: the slope of
/// N₁(X) in |B| ≤ X.
pub fn lattice_count_coefficient(p: u64) -> f64 {
    let len = 4.0 * LOG_EPS;
    let vol = 2.0 * PI * c_p(p) as f64;
    2.0 * len * len / (PI * vol)
}

/// Primes for which the spectral middle term of the correlation asymptotic is
/// known to be empty.
pub fn middle_term_is_empty(p: u64) -> bool {
    p < 70 || matches!(p, 83 | 101 | 107 | 109)
}

fn check_prime(p: u64) -> Result<(), CountingError> {
    if is_prime(p as i64) {
        Ok(())
    } else {
        Err(CountingError::NotPrime(p as i64))
    }
}

fn ensure_table(table: &IdealCountTable, needed: u64) -> Result<(), CountingError> {
    if needed > table.limit() {
        Err(CountingError::SieveRange { needed, limit: table.limit() })
    } else {
        Ok(())
    }
}

/// 𝒩(n)𝒩(pn±1); the caller guarantees table coverage.
#[inline]
fn term(table: &IdealCountTable, p: u64, branch: Branch, n: u64) -> u64 {
    let m = match branch {
        Branch::Plus => p * n + 1,
        Branch::Minus => p * n - 1,
    };
    table.get(n) as u64 * table.get(m) as u64
}

const CHUNK: u64 = 1 << 16;

/// Σ_{n ≤ X} 𝒩(n)𝒩(pn±1). The table must cover pX+1.
pub fn correlation_sum(table: &IdealCountTable, p: u64, branch: Branch, x: u64) -> Result<u64, CountingError> {
    check_prime(p)?;
    if x == 0 {
        return Ok(0);
    }
    ensure_table(table, p * x + 1)?;
    let chunks = x.div_ceil(CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .map(|k| {
            let lo = k * CHUNK + 1;
            let hi = ((k + 1) * CHUNK).min(x);
            (lo..=hi).map(|n| term(table, p, branch, n)).sum::<u64>()
        })
        .sum())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PairCounts {
    pub plus: u64,
    pub minus: u64,
}

/// N^{μ,μ′}(X) over the non-identity classes, indexed by (sign(ab), sign(ac)).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MuMuCounts {
    pub plus_plus: i64,
    pub plus_minus: i64,
    pub minus_plus: i64,
    pub minus_minus: i64,
}

impl MuMuCounts {
    pub fn get(&self, mu: i32, mu_prime: i32) -> i64 {
        match (mu > 0, mu_prime > 0) {
            (true, true) => self.plus_plus,
            (true, false) => self.plus_minus,
            (false, true) => self.minus_plus,
            (false, false) => self.minus_minus,
        }
    }

    fn slot(&mut self, mu: i32, mu_prime: i32) -> &mut i64 {
        match (mu > 0, mu_prime > 0) {
            (true, true) => &mut self.plus_plus,
            (true, false) => &mut self.plus_minus,
            (false, true) => &mut self.minus_plus,
            (false, false) => &mut self.minus_minus,
        }
    }
}

/// N₁..N₄ and N^{μ,μ′} at (p, X). The identity class (whose off-diagonal
/// signs vanish) is counted in N₁ and N₄ but kept out of `nmumu`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountReport {
    pub p: u64,
    pub x: i64,
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub n4: i64,
    pub nmumu: MuMuCounts,
    pub identity: i64,
    pub pair_counts: PairCounts,
}

impl CountReport {
    /// (N₁ + μN₂ + μ′N₃ + μμ′N₄)/4 with the identity removed from each N_i.
    pub fn nmumu_from_sums(&self, mu: i32, mu_prime: i32) -> i64 {
        let (m, mp) = (mu as i64, mu_prime as i64);
        let id = self.identity;
        let num = (self.n1 - id) + m * self.n2 + mp * self.n3 + m * mp * (self.n4 - id);
        num / 4
    }
}

/// Pair counts Σ 𝒩(m)𝒩(pm±1) over 2pm ± 1 ≤ X.
pub fn pair_counts(table: &IdealCountTable, p: u64, x: i64) -> Result<PairCounts, CountingError> {
    let bound = |branch: Branch| -> u64 {
        let num = x - branch.sign();
        if num < 2 * p as i64 {
            0
        } else {
            (num as u64) / (2 * p)
        }
    };
    Ok(PairCounts {
        plus: correlation_sum(table, p, Branch::Plus, bound(Branch::Plus))?,
        minus: correlation_sum(table, p, Branch::Minus, bound(Branch::Minus))?,
    })
}

/// Builds the report from the class enumeration and checks it against the
/// pair counts (four classes per pair, alternating μ within a fiber).
pub fn count_report_with_table(table: &IdealCountTable, p: u64, x: i64) -> Result<CountReport, CountingError> {
    check_prime(p)?;
    if x < 1 {
        return Err(CountingError::Grid(format!("X = {x} must be at least 1")));
    }
    let classes = enumerate_double_cosets(p as i64, x);
    let (mut n1, mut n2, mut n3, mut n4, mut identity) = (0i64, 0i64, 0i64, 0i64, 0i64);
    let mut nmumu = MuMuCounts::default();
    for cl in &classes {
        let (sab, sac) = sign_class(&cl.rep);
        n1 += 1;
        n2 += sab as i64;
        n3 += sac as i64;
        n4 += cl.sign_ad() as i64;
        if cl.is_identity() {
            identity += 1;
        } else {
            *nmumu.slot(sab, sac) += 1;
        }
    }
    let pairs = pair_counts(table, p, x)?;
    let report = CountReport { p, x, n1, n2, n3, n4, nmumu, identity, pair_counts: pairs };

    let (plus, minus) = (pairs.plus as i64, pairs.minus as i64);
    let mismatch = |detail: String| CountingError::CrossCheck { p: p as i64, x, detail };
    if n1 != 4 * (plus + minus) + 1 {
        return Err(mismatch(format!("N1 = {n1}, pairs give {}", 4 * (plus + minus) + 1)));
    }
    if n4 != 4 * (plus - minus) + 1 {
        return Err(mismatch(format!("N4 = {n4}, pairs give {}", 4 * (plus - minus) + 1)));
    }
    if n2 != 0 || n3 != 0 {
        return Err(mismatch(format!("N2 = {n2}, N3 = {n3}, expected 0")));
    }
    for (mu, mp) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let direct = report.nmumu.get(mu, mp);
        let from_sums = report.nmumu_from_sums(mu, mp);
        if direct != from_sums {
            return Err(mismatch(format!("N^({mu},{mp}) = {direct}, sums give {from_sums}")));
        }
    }
    Ok(report)
}

/// [`count_report_with_table`] with a table sieved just far enough.
pub fn count_report(p: u64, x: i64) -> Result<CountReport, CountingError> {
    let needed = (x.max(1) as u64).div_ceil(2) + 2;
    let table = ideal_count_sieve(needed)?;
    count_report_with_table(&table, p, x)
}

/// Samples of S(x) = Σ_{n ≤ x} 𝒩(n)𝒩(pn±1), M(x) = main_coefficient·x and
/// E = S − M, with the integer jump locations of S up to the last sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorSeries {
    pub p: u64,
    pub branch: Branch,
    pub xs: Vec<f64>,
    pub s: Vec<u64>,
    pub m: Vec<f64>,
    pub e: Vec<f64>,
    pub jumps: Vec<u64>,
    /// Set when p lies outside the primes for which the middle term is known
    /// to vanish, so E also contains unmodelled spectral terms.
    pub unmodeled_spectrum: bool,
}

fn validate_grid(xs: &[f64]) -> Result<(), CountingError> {
    if let Some(bad) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(CountingError::Grid(format!("sample {bad} is not a finite non-negative real")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CountingError::Grid("samples must be strictly increasing".into()));
    }
    Ok(())
}

pub fn error_series(table: &IdealCountTable, p: u64, branch: Branch, xs: &[f64]) -> Result<ErrorSeries, CountingError> {
    check_prime(p)?;
    validate_grid(xs)?;
    let top = xs.last().map_or(0, |x| x.floor() as u64);
    if top > 0 {
        ensure_table(table, p * top + 1)?;
    }
    let c = main_coefficient(p);
    let mut series = ErrorSeries {
        p,
        branch,
        xs: xs.to_vec(),
        s: Vec::with_capacity(xs.len()),
        m: Vec::with_capacity(xs.len()),
        e: Vec::with_capacity(xs.len()),
        jumps: Vec::new(),
        unmodeled_spectrum: !middle_term_is_empty(p),
    };
    let mut n = 0u64;
    let mut s = 0u64;
    for &x in xs {
        let upto = x.floor() as u64;
        while n < upto {
            n += 1;
            let t = term(table, p, branch, n);
            if t > 0 {
                s += t;
                series.jumps.push(n);
            }
        }
        let m = c * x;
        series.s.push(s);
        series.m.push(m);
        series.e.push(s as f64 - m);
    }
    Ok(series)
}

/// ∫_a^b e(x)² dx for e linear with e(a) = ea, e(b) = eb.
pub fn integrate_square_linear(a: f64, b: f64, ea: f64, eb: f64) -> f64 {
    (b - a) * (ea * ea + ea * eb + eb * eb) / 3.0
}

/// A piece of a piecewise-linear function on [start, end].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value_start: f64,
    pub value_end: f64,
}

/// (1/X)·Σ ∫_segment e² for segments tiling [X, 2X].
pub fn mean_square_of_segments(x: f64, segments: &[Segment]) -> f64 {
    segments
        .iter()
        .map(|s| integrate_square_linear(s.start, s.end, s.value_start, s.value_end))
        .sum::<f64>()
        / x
}

/// ∫_lo^hi E(x)² dx, exactly: S is constant between integers, so E is linear there.
fn integrate_error_square(
    table: &IdealCountTable,
    p: u64,
    branch: Branch,
    lo: f64,
    hi: f64,
    s_at_lo: u64,
) -> (f64, u64) {
    let c = main_coefficient(p);
    let mut s = s_at_lo;
    let mut acc = 0.0;
    let mut left = lo;
    let mut n = lo.floor() as u64 + 1;
    while (n as f64) <= hi {
        let right = n as f64;
        let sf = s as f64;
        acc += integrate_square_linear(left, right, sf - c * left, sf - c * right);
        s += term(table, p, branch, n);
        left = right;
        n += 1;
    }
    let sf = s as f64;
    acc += integrate_square_linear(left, hi, sf - c * left, sf - c * hi);
    (acc, s)
}

/// (1/X)∫_X^{2X} E(x)² dx, integrated exactly step by step. The table must
/// cover 2pX+1.
pub fn mean_square_error(table: &IdealCountTable, p: u64, branch: Branch, x: f64) -> Result<f64, CountingError> {
    check_prime(p)?;
    if !(x.is_finite() && x > 0.0) {
        return Err(CountingError::Grid(format!("X = {x} must be positive")));
    }
    let top = (2.0 * x).floor() as u64;
    ensure_table(table, p * top.max(1) + 1)?;
    let s0 = correlation_sum(table, p, branch, x.floor() as u64)?;
    let (integral, _) = integrate_error_square(table, p, branch, x, 2.0 * x, s0);
    Ok(integral / x)
}

/// Root-mean-square of E over `windows` geometric windows tiling [lo, hi],
/// reported at the geometric centre of each window.
pub fn windowed_rms(
    table: &IdealCountTable,
    p: u64,
    branch: Branch,
    lo: f64,
    hi: f64,
    windows: usize,
) -> Result<Vec<(f64, f64)>, CountingError> {
    check_prime(p)?;
    if !(lo >= 1.0 && hi > lo && windows >= 1) {
        return Err(CountingError::Grid(format!("window range [{lo}, {hi}] with {windows} windows")));
    }
    ensure_table(table, p * hi.floor() as u64 + 1)?;
    let ratio = hi / lo;
    let edges: Vec<f64> = (0..=windows)
        .map(|k| if k == windows { hi } else { lo * ratio.powf(k as f64 / windows as f64) })
        .collect();
    let mut s = correlation_sum(table, p, branch, lo.floor() as u64)?;
    let mut out = Vec::with_capacity(windows);
    for w in edges.windows(2) {
        let (integral, s_end) = integrate_error_square(table, p, branch, w[0], w[1], s);
        s = s_end;
        out.push(((w[0] * w[1]).sqrt(), (integral / (w[1] - w[0])).sqrt()));
    }
    Ok(out)
}

/// Least-squares fit of log y = slope·log x + intercept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Log-log slope of (x, |E(x)|) samples; zero values are dropped.
pub fn exponent_fit(samples: &[(f64, f64)]) -> Result<FitResult, CountingError> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(x, y)| (x, y.abs()))
        .filter(|&(_, y)| y > 0.0 && y.is_finite())
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(CountingError::DegenerateFit(format!(
            "{} usable samples, at least {MIN_FIT_SAMPLES} required",
            pts.len()
        )));
    }
    if pts.iter().any(|&(x, _)| !(x > 0.0 && x.is_finite())) {
        return Err(CountingError::DegenerateFit("abscissae must be positive".into()));
    }
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 1e-12 * n {
        return Err(CountingError::DegenerateFit("abscissae do not vary".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(FitResult { slope, intercept, stderr, samples: pts.len() })
}

/// Exponent fit of the windowed RMS of E over [lo, hi].
pub fn exponent_fit_rms(
    table: &IdealCountTable,
    p: u64,
    branch: Branch,
    lo: f64,
    hi: f64,
    windows: usize,
) -> Result<FitResult, CountingError> {
    exponent_fit(&windowed_rms(table, p, branch, lo, hi, windows)?)
}
