//! Named verification reports and tolerance overrides shared by the module
//! suites.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::count_report_with_table;
use crate::geometry::{
    dist_formula, geodesic_line_distance_numeric, huber_coords, huber_to_point, orientation_and_side, tan_v_along_axis,
    tan_v_direct, tan_v_theta_derivative, HPoint,
};
use crate::group::{certified_height, enumerate_double_cosets, lattice_scan_oracle, sign_class, GroupElement};
use crate::quadfield::{ideal_count_bruteforce, ideal_count_sieve};

/// Outcome of one numerical identity check over a grid.
///
/// For slope and envelope checks `max_rel_err` carries the worst normalised
/// statistic described in the identity's documentation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub identity: String,
    pub grid: Vec<String>,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(identity: impl Into<String>, grid: Vec<String>, max_rel_err: f64, tolerance: f64) -> Self {
        VerificationReport {
            identity: identity.into(),
            grid,
            max_rel_err,
            tolerance,
            pass: max_rel_err <= tolerance,
        }
    }

    /// A check that could not be evaluated at all.
    pub fn failed(identity: impl Into<String>, grid: Vec<String>, reason: &str, tolerance: f64) -> Self {
        let mut grid = grid;
        grid.push(format!("error: {reason}"));
        VerificationReport {
            identity: identity.into(),
            grid,
            max_rel_err: f64::INFINITY,
            tolerance,
            pass: false,
        }
    }
}

/// Per-identity tolerance overrides, parsed from `NAME=VALUE` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tolerances {
    overrides: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.overrides.insert(name.into(), value);
    }

    /// Parses `NAME=VALUE`.
    pub fn parse_override(&mut self, spec: &str) -> Result<(), String> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| format!("tolerance override `{spec}` is not NAME=VALUE"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("tolerance override `{spec}` has a non-numeric value"))?;
        if !(value >= 0.0) {
            return Err(format!("tolerance override `{spec}` must be non-negative"));
        }
        self.set(name.trim(), value);
        Ok(())
    }

    pub fn get(&self, name: &str, default: f64) -> f64 {
        self.overrides.get(name).copied().unwrap_or(default)
    }
}

/// |a − b| / max(|a|, |b|, floor).
pub fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// The module suites runnable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Suite {
    Geometry,
    Specfun,
    Trace,
    Group,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geometry" => Ok(Suite::Geometry),
            "specfun" => Ok(Suite::Specfun),
            "trace" => Ok(Suite::Trace),
            "group" => Ok(Suite::Group),
            _ => Err(format!("unknown suite `{s}` (expected geometry, specfun, trace or group)")),
        }
    }
}

pub fn run_suite(suite: Suite, tols: &Tolerances) -> Vec<VerificationReport> {
    match suite {
        Suite::Geometry => geometry_suite(tols),
        Suite::Specfun => {
            let mut v = crate::specfun::verify::identity_suite(tols);
            v.extend(crate::specfun::verify::envelope_suite(tols));
            v
        }
        Suite::Trace => crate::trace::trace_suite(tols),
        Suite::Group => group_suite(tols),
    }
}

/// 200 class representatives drawn without replacement from the non-identity
/// classes with |B| ≤ 200 for p ∈ {2,3,5,7}.
pub fn sample_elements(seed: u64) -> Vec<GroupElement> {
    let mut rng = StdRng::seed_from_u64(seed);
    let pool: Vec<GroupElement> = [2i64, 3, 5, 7]
        .iter()
        .flat_map(|&p| enumerate_double_cosets(p, 200))
        .filter(|c| !c.is_identity())
        .map(|c| c.rep)
        .collect();
    pool.choose_multiple(&mut rng, 200).copied().collect()
}

fn fold_check<F>(name: &str, tol: f64, grid: Vec<String>, body: F) -> VerificationReport
where
    F: FnOnce() -> Result<f64, String>,
{
    match body() {
        Ok(err) => VerificationReport::new(name, grid, err, tol),
        Err(e) => VerificationReport::failed(name, grid, &e, tol),
    }
}

/// Distances, orientation dictionary, the tan v closed form and its
/// θ-derivative on 200 sampled elements, and the Huber round trip.
pub fn geometry_suite(tols: &Tolerances) -> Vec<VerificationReport> {
    let elems = sample_elements(0x6e0_d351c);
    let grid = vec!["200 class representatives, p ∈ {2,3,5,7}, |B| ≤ 200".to_string()];
    let mut out = Vec::new();

    out.push(fold_check("geodesic_distance", tols.get("geodesic_distance", 1e-8), grid.clone(), || {
        let errs: Vec<f64> = elems
            .par_iter()
            .map(|g| geodesic_line_distance_numeric(g).map(|d| (d - dist_formula(g)).abs()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        Ok(errs.into_iter().fold(0.0, f64::max))
    }));

    out.push(fold_check("orientation_dictionary", tols.get("orientation_dictionary", 0.0), grid.clone(), || {
        let mut mismatches = 0usize;
        for g in &elems {
            if orientation_and_side(g).map_err(|e| e.to_string())? != sign_class(g) {
                mismatches += 1;
            }
        }
        Ok(mismatches as f64)
    }));

    let thetas: Vec<f64> = (0..=12).map(|i| -0.3 + 0.05 * i as f64).collect();
    let ys: Vec<f64> = (0..=20).map(|i| 0.1 * 100f64.powf(i as f64 / 20.0)).collect();
    out.push(fold_check(
        "tan_v_closed_form",
        tols.get("tan_v_closed_form", 1e-10),
        vec![grid[0].clone(), "θ ∈ [−0.3, 0.3] step 0.05, y ∈ [0.1, 10] geometric (21)".into()],
        || {
            let mut worst: f64 = 0.0;
            for g in &elems {
                for &t in &thetas {
                    for &y in &ys {
                        let a = tan_v_along_axis(g, t, y);
                        let b = tan_v_direct(g, t, y);
                        worst = worst.max(rel_diff(a, b, 1.0));
                    }
                }
            }
            Ok(worst)
        },
    ));

    out.push(fold_check(
        "tan_v_theta_derivative",
        tols.get("tan_v_theta_derivative", 1e-6),
        vec![grid[0].clone(), "y ∈ {0.5, 1, 2}, |∂θ tan v − B|".into()],
        || {
            let mut worst: f64 = 0.0;
            for g in &elems {
                let b = g.b_invariant() as f64;
                for y in [0.5, 1.0, 2.0] {
                    let d = tan_v_theta_derivative(g, y, 1e-3);
                    worst = worst.max((d - b).abs());
                }
            }
            Ok(worst)
        },
    ));

    out.push(fold_check(
        "huber_roundtrip",
        tols.get("huber_roundtrip", 1e-12),
        vec!["x ∈ [−5, 5], y ∈ [0.01, 100], 32 × 32 grid".into()],
        || {
            let mut worst: f64 = 0.0;
            for i in 0..32 {
                for j in 0..32 {
                    let x = -5.0 + 10.0 * i as f64 / 31.0;
                    let y = 0.01 * 1e4f64.powf(j as f64 / 31.0);
                    let z = HPoint::new(x, y).map_err(|e| e.to_string())?;
                    let w = huber_to_point(huber_coords(z));
                    worst = worst.max(rel_diff(w.x, x, 1.0)).max(rel_diff(w.y, y, 1.0));
                }
            }
            Ok(worst)
        },
    ));
    out
}

/// Enumeration against the lattice oracle and the correlation pair counts,
/// N^{μ,μ′} symmetry, and the ideal-count sieve against brute force and
/// multiplicativity. Statistics are mismatch counts.
pub fn group_suite(tols: &Tolerances) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    let cases: Vec<(i64, i64)> = [2i64, 3, 5, 7].iter().flat_map(|&p| [50i64, 200, 1000].map(|x| (p, x))).collect();
    let grid = vec!["p ∈ {2,3,5,7}, X ∈ {50, 200, 1000}".to_string()];

    out.push(fold_check("coset_dictionary", tols.get("coset_dictionary", 0.0), grid.clone(), || {
        let table = ideal_count_sieve(1000).map_err(|e| e.to_string())?;
        let mut mismatches = 0usize;
        for &(p, x) in &cases {
            let enumerated = enumerate_double_cosets(p, x);
            let oracle = lattice_scan_oracle(p, x, certified_height(p, x)).map_err(|e| e.to_string())?;
            if enumerated != oracle {
                mismatches += 1;
            }
            if count_report_with_table(&table, p as u64, x).is_err() {
                mismatches += 1;
            }
        }
        Ok(mismatches as f64)
    }));

    out.push(fold_check(
        "nmumu_symmetry",
        tols.get("nmumu_symmetry", 0.0),
        vec!["p ∈ {2,3,5,7}, X = 10⁴".into()],
        || {
            let table = ideal_count_sieve(10_000).map_err(|e| e.to_string())?;
            let mut mismatches = 0usize;
            for p in [2u64, 3, 5, 7] {
                let r = count_report_with_table(&table, p, 10_000).map_err(|e| e.to_string())?;
                if r.nmumu.plus_plus != r.nmumu.minus_minus || r.nmumu.plus_minus != r.nmumu.minus_plus {
                    mismatches += 1;
                }
            }
            Ok(mismatches as f64)
        },
    ));

    out.push(fold_check(
        "sieve_bruteforce",
        tols.get("sieve_bruteforce", 0.0),
        vec!["n ≤ 10⁴".into()],
        || {
            let table = ideal_count_sieve(10_000).map_err(|e| e.to_string())?;
            let mismatches = (1..=10_000u64)
                .into_par_iter()
                .filter(|&n| table.get(n) as u64 != ideal_count_bruteforce(n))
                .count();
            Ok(mismatches as f64)
        },
    ));

    out.push(fold_check(
        "multiplicativity",
        tols.get("multiplicativity", 0.0),
        vec!["coprime m, n ≤ 10³".into()],
        || {
            let table = ideal_count_sieve(1_000_000).map_err(|e| e.to_string())?;
            let mismatches: usize = (1..=1000u64)
                .into_par_iter()
                .map(|m| {
                    (1..=1000u64)
                        .filter(|&n| gcd(m, n) == 1 && table.get(m * n) != table.get(m) * table.get(n))
                        .count()
                })
                .sum();
            Ok(mismatches as f64)
        },
    ));
    out
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_parsing() {
        let mut t = Tolerances::new();
        t.parse_override("euler_transform=0").unwrap();
        assert_eq!(t.get("euler_transform", 1e-8), 0.0);
        assert_eq!(t.get("other", 1e-8), 1e-8);
        assert!(t.parse_override("x").is_err());
        assert!(t.parse_override("x=abc").is_err());
        assert!(t.parse_override("x=-1").is_err());
    }

    #[test]
    fn report_pass_flag() {
        assert!(VerificationReport::new("a", vec![], 1e-9, 1e-8).pass);
        assert!(!VerificationReport::new("a", vec![], 1e-9, 0.0).pass);
        assert!(!VerificationReport::failed("a", vec![], "boom", 1.0).pass);
    }
}
