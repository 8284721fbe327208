//! Geometric sides of the modified relative trace formulae: closed
//! double-coset sums of g-transforms against direct integration of the coset
//! series along the closed geodesic, and the smoothed counting relations.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::group::{enumerate_double_cosets, is_prime, sign_class, DoubleCosetClass};
use crate::quadfield::LOG_EPS;
use crate::geometry::tan_v_along_axis;
use crate::specfun::{g_transform, quad, Profile, SmoothingParams, SpecFunError, TestFunction, TestKind};
use crate::verify::{Tolerances, VerificationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error(transparent)]
    Quadrature(#[from] SpecFunError),
    #[error("coset sweep for B = {b_value} did not leave the support after {segments} segments")]
    Truncation { b_value: i128, segments: usize },
    #[error("support bound {bound} does not cover |B| ≤ {needed}")]
    SupportBound { bound: f64, needed: f64 },
    #[error("p = {0} is not prime")]
    NotPrime(i64),
}

/// len(ℓ) = 2 log m with m = ε², the length of the closed geodesic.
pub const LEN_L: f64 = 4.0 * LOG_EPS;

/// Largest number of h-translates of the fundamental segment visited per class.
pub const MAX_SWEEP: usize = 10_000;

/// A radial profile h(x) = f(1+x²) with compact support.
pub trait RadialFunction: Sync {
    fn h(&self, x: f64) -> f64;
    fn h_x(&self, x: f64) -> f64;
    /// Support end in v = 1+x².
    fn support_end(&self) -> f64;
    /// Kinks of f in v.
    fn breakpoints(&self) -> Vec<f64>;

    fn x_end(&self) -> f64 {
        (self.support_end() - 1.0).max(0.0).sqrt()
    }
}

impl RadialFunction for TestFunction {
    fn h(&self, x: f64) -> f64 {
        TestFunction::h(self, x)
    }
    fn h_x(&self, x: f64) -> f64 {
        TestFunction::h_x(self, x)
    }
    fn support_end(&self) -> f64 {
        TestFunction::support_end(self)
    }
    fn breakpoints(&self) -> Vec<f64> {
        TestFunction::breakpoints(self)
    }
}

/// f ≡ 0 on [1, support_end].
#[derive(Clone, Copy, Debug)]
pub struct ZeroFunction {
    pub support_end: f64,
}

impl RadialFunction for ZeroFunction {
    fn h(&self, _: f64) -> f64 {
        0.0
    }
    fn h_x(&self, _: f64) -> f64 {
        0.0
    }
    fn support_end(&self) -> f64 {
        self.support_end
    }
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Parts (a)–(c) of the trace formulae.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TraceKind {
    /// g₀⁺ + Σ g(B²; f)
    A,
    /// −Σ_{|B|>1} sign(ac)·g(B²; √(v−1) f)
    B,
    /// g₀⁻ + Σ B·g(B²; f + 2(v−1)f′)
    C,
}

impl std::str::FromStr for TraceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" | "A" => Ok(TraceKind::A),
            "b" | "B" => Ok(TraceKind::B),
            "c" | "C" => Ok(TraceKind::C),
            _ => Err(format!("unknown trace kind `{s}` (expected a, b or c)")),
        }
    }
}

/// Which geodesic integral of the coset series is evaluated directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Order {
    /// I_{f,0}(0) = ∫_ℓ Σ f(1/cos² v(γz)) ds
    Untwisted,
    /// I_{f,1}(0) = ∫_ℓ Σ tan v(γz)·f(1/cos² v(γz)) ds
    Zeroth,
    /// I′_{f,1}(0), from the θ-derivative of the integrand
    FirstTheta,
}

impl TraceKind {
    pub fn order(self) -> Order {
        match self {
            TraceKind::A => Order::Untwisted,
            TraceKind::B => Order::Zeroth,
            TraceKind::C => Order::FirstTheta,
        }
    }
}

/// Contribution of one double coset to both evaluations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassContribution {
    pub b_value: i128,
    pub sign_ac: i32,
    pub closed: f64,
    pub direct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometricSideResult {
    pub kind: TraceKind,
    pub value_closed: f64,
    pub value_direct: f64,
    pub g0_term: f64,
    pub class_contributions: Vec<ClassContribution>,
}

impl GeometricSideResult {
    /// |closed − direct| / (1 + |closed|).
    pub fn discrepancy(&self) -> f64 {
        (self.value_closed - self.value_direct).abs() / (1.0 + self.value_closed.abs())
    }

    /// Largest relative discrepancy per class; terms below 10⁻⁹ of the
    /// largest class term are measured against that floor.
    pub fn worst_class_rel_err(&self) -> f64 {
        let scale = self.class_contributions.iter().map(|c| c.closed.abs()).fold(0.0, f64::max);
        self.class_contributions
            .iter()
            .map(|c| (c.closed - c.direct).abs() / c.closed.abs().max(1e-9 * scale).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// h(x), x·h(x) or (x h)′ = h + x h′, matching the kind.
fn combination<F: RadialFunction + ?Sized>(f: &F, kind: TraceKind, x: f64) -> f64 {
    match kind {
        TraceKind::A => f.h(x),
        TraceKind::B => x * f.h(x),
        TraceKind::C => f.h(x) + x * f.h_x(x),
    }
}

fn profile_for<F: RadialFunction + ?Sized>(f: &F, kind: TraceKind) -> Profile<'_> {
    Profile::new(
        move |v| combination(f, kind, (v - 1.0).max(0.0).sqrt()),
        f.support_end(),
        f.breakpoints(),
    )
}

fn contributing_classes<F: RadialFunction + ?Sized>(
    f: &F,
    p: i64,
    support_bound: f64,
) -> Result<Vec<DoubleCosetClass>, TraceError> {
    if !is_prime(p) {
        return Err(TraceError::NotPrime(p));
    }
    let needed = f.support_end().sqrt();
    if support_bound < needed {
        return Err(TraceError::SupportBound { bound: support_bound, needed });
    }
    Ok(enumerate_double_cosets(p, support_bound.ceil() as i64)
        .into_iter()
        .filter(|c| !c.is_identity())
        .collect())
}

/// Closed term of one class.
fn closed_term(
    kind: TraceKind,
    class: &DoubleCosetClass,
    profile: &Profile<'_>,
) -> Result<f64, TraceError> {
    let b = class.b_value as f64;
    let u = b * b;
    Ok(match kind {
        TraceKind::A => g_transform(u, profile)?,
        TraceKind::B => {
            if class.b_value.abs() <= 1 {
                0.0
            } else {
                -(sign_class(&class.rep).1 as f64) * g_transform(u, profile)?
            }
        }
        TraceKind::C => b * g_transform(u, profile)?,
    })
}

/// f(1)·len(ℓ) where the kind has an identity term.
fn g0_term<F: RadialFunction + ?Sized>(f: &F, kind: TraceKind) -> f64 {
    match kind {
        TraceKind::A | TraceKind::C => f.h(0.0) * LEN_L,
        TraceKind::B => 0.0,
    }
}

/// ∫₀^∞ of the coset integrand of one class over y, as a sum over the
/// h-translates γhᵏ of the fundamental segment 1 ≤ y < ε⁴.
fn direct_class_term<F: RadialFunction + ?Sized>(f: &F, order: Order, class: &DoubleCosetClass) -> Result<f64, TraceError> {
    let g = &class.rep;
    let [a, b, c, d] = g.entries_f64();
    let (ac, bd) = (a * c, b * d);
    let bval = g.b_invariant() as f64;
    let x_end = f.x_end();
    let l0 = 0.5 * (bd / ac).abs().ln();
    let s = (ac * bd).abs().sqrt();
    let cosh_form = ac * bd > 0.0;
    // |T| as a function of w = log y − log y₀
    let abs_t = |w: f64| if cosh_form { 2.0 * s * w.cosh() } else { 2.0 * s * w.sinh().abs() };

    // min |T| = √(B²−1) for |B| > 1; B² ≥ support end leaves at most a point of contact
    if cosh_form && (class.b_value * class.b_value) as f64 >= f.support_end() {
        return Ok(0.0);
    }

    let mut breaks = vec![l0];
    for xb in f.breakpoints().into_iter().map(|v| (v - 1.0).max(0.0).sqrt()).chain([x_end]) {
        let r = xb / (2.0 * s);
        let w = if cosh_form {
            if r < 1.0 {
                continue;
            }
            r.acosh()
        } else {
            r.asinh()
        };
        breaks.extend([l0 - w, l0 + w]);
    }

    let integrand = |l: f64| {
        let t = tan_v_along_axis(g, 0.0, l.exp());
        let x = t.abs();
        if x >= x_end {
            return 0.0;
        }
        match order {
            Order::Untwisted => f.h(x),
            Order::Zeroth => t * f.h(x),
            Order::FirstTheta => bval * (f.h(x) + x * f.h_x(x)),
        }
    };

    let seg = 4.0 * LOG_EPS;
    let k0 = (l0 / seg).floor() as i64;
    let mut total = 0.0;
    let mut segments = 0usize;
    for dir in [1i64, -1] {
        let mut k = if dir > 0 { k0 } else { k0 - 1 };
        loop {
            let (lo, hi) = (k as f64 * seg, (k + 1) as f64 * seg);
            // nearest point of the segment to y₀
            let w_near = if l0 < lo { lo - l0 } else if l0 > hi { l0 - hi } else { 0.0 };
            let outside = if cosh_form || w_near > 0.0 { abs_t(w_near) >= x_end } else { false };
            if outside {
                break;
            }
            let inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
            total += quad(integrand, lo, hi, &inner)?;
            segments += 1;
            if segments > MAX_SWEEP {
                return Err(TraceError::Truncation { b_value: class.b_value, segments });
            }
            k += dir;
        }
    }
    Ok(total)
}

/// Direct evaluation of I_{f,0}(0), I_{f,1}(0) or I′_{f,1}(0): the identity
/// term plus, for every contributing double coset, the sum over its
/// Γ₁-cosets γhᵏ of the integral along ℓ.
pub fn direct_coset_integral<F: RadialFunction + ?Sized>(
    order: Order,
    f: &F,
    p: i64,
    support_bound: f64,
) -> Result<f64, TraceError> {
    let classes = contributing_classes(f, p, support_bound)?;
    let identity = match order {
        Order::Untwisted | Order::FirstTheta => f.h(0.0) * LEN_L,
        Order::Zeroth => 0.0,
    };
    let terms: Vec<f64> = classes
        .par_iter()
        .map(|c| direct_class_term(f, order, c))
        .collect::<Result<_, _>>()?;
    Ok(identity + pairwise_sum(&terms))
}

/// Both evaluations of the geometric side, class by class.
pub fn geometric_side<F: RadialFunction + ?Sized>(
    kind: TraceKind,
    f: &F,
    p: i64,
    support_bound: f64,
) -> Result<GeometricSideResult, TraceError> {
    let classes = contributing_classes(f, p, support_bound)?;
    let profile = profile_for(f, kind);
    let order = kind.order();
    let class_contributions: Vec<ClassContribution> = classes
        .par_iter()
        .map(|c| {
            Ok(ClassContribution {
                b_value: c.b_value,
                sign_ac: sign_class(&c.rep).1,
                closed: closed_term(kind, c, &profile)?,
                direct: direct_class_term(f, order, c)?,
            })
        })
        .collect::<Result<_, TraceError>>()?;
    let g0 = g0_term(f, kind);
    let closed: Vec<f64> = class_contributions.iter().map(|c| c.closed).collect();
    let direct: Vec<f64> = class_contributions.iter().map(|c| c.direct).collect();
    Ok(GeometricSideResult {
        kind,
        value_closed: g0 + pairwise_sum(&closed),
        value_direct: g0 + pairwise_sum(&direct),
        g0_term: g0,
        class_contributions,
    })
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Pass threshold for the normalised smoothed-count residuals.
pub const SMOOTHED_COUNT_THRESHOLD: f64 = 10.0;

/// Smoothed geometric sides against the sharp counts:
/// I′_{f₄,1}(0) ≈ Σ_{1<|B|≤X} sign(ad) and I_{f₃,1}(0) ≈ −Σ_{1<|B|≤X} sign(ac).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothedCountReport {
    pub p: i64,
    pub x: f64,
    pub d: f64,
    pub y: f64,
    /// I′_{f₄,1}(0)
    pub lhs_ad: f64,
    pub count_ad: i64,
    /// |lhs_ad − count_ad| / (Y + X^{2/3})
    pub ratio_ad: f64,
    /// I_{f₃,1}(0)
    pub lhs_ac: f64,
    pub count_ac: i64,
    pub ratio_ac: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn smoothed_count_check(p: i64, x: f64, d: f64) -> Result<SmoothedCountReport, TraceError> {
    if !is_prime(p) {
        return Err(TraceError::NotPrime(p));
    }
    let params = SmoothingParams::new(x, d)?;
    let bound = params.support_end().sqrt();
    let f4 = TestFunction::new(TestKind::F4, params);
    let f3 = TestFunction::new(TestKind::F3, params);
    let lhs_ad = geometric_side(TraceKind::C, &f4, p, bound)?.value_closed;
    let lhs_ac = geometric_side(TraceKind::B, &f3, p, bound)?.value_closed;
    let (mut count_ad, mut count_ac) = (0i64, 0i64);
    for c in enumerate_double_cosets(p, x.floor() as i64) {
        if c.b_value.abs() > 1 {
            count_ad += c.sign_ad() as i64;
            count_ac += sign_class(&c.rep).1 as i64;
        }
    }
    let scale = params.y + x.powf(2.0 / 3.0);
    let ratio_ad = (lhs_ad - count_ad as f64).abs() / scale;
    let ratio_ac = (lhs_ac + count_ac as f64).abs() / scale;
    Ok(SmoothedCountReport {
        p,
        x,
        d,
        y: params.y,
        lhs_ad,
        count_ad,
        ratio_ad,
        lhs_ac,
        count_ac,
        ratio_ac,
        threshold: SMOOTHED_COUNT_THRESHOLD,
        pass: ratio_ad <= SMOOTHED_COUNT_THRESHOLD && ratio_ac <= SMOOTHED_COUNT_THRESHOLD,
    })
}

/// One closed-versus-direct comparison, in the JSON layout of the CLI.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub kind: TraceKind,
    pub p: i64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub closed: f64,
    pub direct: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Test function used for each kind: f₁ for (a), f₃ for (b), f₄ for (c).
pub fn default_test_kind(kind: TraceKind) -> TestKind {
    match kind {
        TraceKind::A => TestKind::F1,
        TraceKind::B => TestKind::F3,
        TraceKind::C => TestKind::F4,
    }
}

/// Closed versus direct for the default test function of `kind`. The
/// statistic is the larger of the total discrepancy |closed − direct|/(1+|closed|)
/// and the worst per-class relative discrepancy.
pub fn trace_report(kind: TraceKind, p: i64, x: f64, d: f64, tol: f64) -> Result<TraceReport, TraceError> {
    let params = SmoothingParams::new(x, d)?;
    let f = TestFunction::new(default_test_kind(kind), params);
    let r = geometric_side(kind, &f, p, params.support_end().sqrt())?;
    let rel_err = r.discrepancy().max(r.worst_class_rel_err());
    Ok(TraceReport {
        kind,
        p,
        x,
        d,
        closed: r.value_closed,
        direct: r.value_direct,
        rel_err,
        pass: rel_err <= tol,
    })
}

pub const TRACE_PRIMES: [i64; 3] = [2, 3, 5];
pub const TRACE_XS: [f64; 3] = [10.0, 20.0, 40.0];
pub const TRACE_D: f64 = 0.3;
/// (p, X, D) points of the smoothed-count check in the default suite.
pub const SMOOTHED_GRID: [(i64, f64, f64); 4] = [(3, 50.0, 0.2), (7, 50.0, 0.2), (2, 40.0, 0.3), (5, 100.0, 0.2)];

/// Closed versus direct geometric sides for kinds (a), (b), (c) over
/// p ∈ {2,3,5}, X ∈ {10,20,40}, and the smoothed-count residuals.
pub fn trace_suite(tols: &Tolerances) -> Vec<VerificationReport> {
    trace_suite_on(tols, &TRACE_PRIMES, &TRACE_XS, TRACE_D, &SMOOTHED_GRID)
}

/// [`trace_suite`] over caller-chosen grids.
pub fn trace_suite_on(
    tols: &Tolerances,
    primes: &[i64],
    xs: &[f64],
    d: f64,
    smoothed: &[(i64, f64, f64)],
) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    for (name, kind) in [("geoside_a", TraceKind::A), ("geoside_b", TraceKind::B), ("geoside_c", TraceKind::C)] {
        let tol = tols.get(name, 1e-6);
        let mut grid = Vec::new();
        let mut worst: f64 = 0.0;
        let mut error = None;
        for &p in primes {
            for &x in xs {
                match trace_report(kind, p, x, d, tol) {
                    Ok(r) => {
                        worst = worst.max(r.rel_err);
                        grid.push(format!("p={p} X={x} D={d} closed={:.10e} direct={:.10e}", r.closed, r.direct));
                    }
                    Err(e) => error = Some(e.to_string()),
                }
            }
        }
        out.push(match error {
            Some(e) => VerificationReport::failed(name, grid, &e, tol),
            None => VerificationReport::new(name, grid, worst, tol),
        });
    }

    let tol = tols.get("smoothed_count", SMOOTHED_COUNT_THRESHOLD);
    let mut grid = Vec::new();
    let mut worst: f64 = 0.0;
    let mut error = None;
    for &(p, x, d) in smoothed {
        match smoothed_count_check(p, x, d) {
            Ok(r) => {
                worst = worst.max(r.ratio_ad).max(r.ratio_ac);
                grid.push(format!("p={p} X={x} D={d} ratio_ad={:.4} ratio_ac={:.4}", r.ratio_ad, r.ratio_ac));
            }
            Err(e) => error = Some(e.to_string()),
        }
    }
    out.push(match error {
        Some(e) => VerificationReport::failed("smoothed_count", grid, &e, tol),
        None => VerificationReport::new("smoothed_count", grid, worst, tol),
    });
    out
}
