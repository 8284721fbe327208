//! Identity and envelope suites for the special-function layer.
//!
//! Every check has a stable name, which is also the key for tolerance
//! overrides.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::gamma::{beta, log_gamma};
use super::hypergeom::{hyp2f1_large_param_asymptotic, hyp_large_arg, pfq};
use super::kernels::{
    gamma_j, gamma_k, g_j, g_k, js, js_expansion, js_quadrature, ks, ks_expansion, ks_quadrature, ks_rr,
    ks_rr_asymptotic, ks_rr_quadrature, f3_main_term, sieve_coeffs,
};
use super::quad::quad_fallible;
use super::testfn::{f4_inverse_closed_form, f4_target, f4_target_deriv, Combination, TestFunction, TestKind};
use super::transforms::{d1_closed, d1_transform, g_inverse, g_inverse_fallible, g_transform, g_transform_derivative};
use super::{rel_err, SmoothingParams, SpecFunError, SpectralParam};
use crate::verify::{Tolerances, VerificationReport};

type C = Complex64;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

/// Runs `body` and folds its error into a failed report.
fn check<F>(name: &str, tol: f64, body: F) -> VerificationReport
where
    F: FnOnce(&mut Vec<String>) -> Result<f64, SpecFunError>,
{
    let mut grid = Vec::new();
    match body(&mut grid) {
        Ok(err) => VerificationReport::new(name, grid, err, tol),
        Err(e) => VerificationReport::failed(name, grid, &e.to_string(), tol),
    }
}

/// ∫₀¹ (1−x)^{t−1} x^{r−1} g(x) dx, with power substitutions at both ends so
/// that the endpoint factors become bounded.
fn beta_weighted_integral<G>(t: C, r: C, g: G) -> Result<C, SpecFunError>
where
    G: Fn(f64) -> Result<C, SpecFunError>,
{
    // left half: x = y^k
    let k = if r.re < 1.0 { 1.0 / r.re } else { 1.0 };
    let left = quad_fallible(
        |y: f64| {
            if y <= 0.0 {
                return Ok(c(0.0));
            }
            let x = y.powf(k);
            let w = ((k * r - 1.0) * y.ln()).exp() * k * ((t - 1.0) * (-x).ln_1p()).exp();
            Ok(w * g(x)?)
        },
        0.0,
        0.5f64.powf(1.0 / k),
        &[],
    )?;
    // right half: 1 − x = y^m
    let m = if t.re < 1.0 { 1.0 / t.re } else { 1.0 };
    let right = quad_fallible(
        |y: f64| {
            if y <= 0.0 {
                return Ok(c(0.0));
            }
            let one_minus = y.powf(m);
            let x = 1.0 - one_minus;
            let w = ((m * t - 1.0) * y.ln()).exp() * m * ((r - 1.0) * x.ln()).exp();
            Ok(w * g(x)?)
        },
        0.0,
        0.5f64.powf(1.0 / m),
        &[],
    )?;
    Ok(left + right)
}

fn fmt_c(z: C) -> String {
    format!("{:.4}{:+.4}i", z.re, z.im)
}

/// Euler transform: ∫₀¹(1−x)^{t−1}x^{r−1}ₚF_q(a;b;ux)dx = B(t,r)·ₚ₊₁F_q₊₁(r,a;t+r,b;u)
/// over 20 seeded random draws.
pub fn euler_transform(tol: f64) -> VerificationReport {
    check("euler_transform", tol, |grid| {
        let mut rng = StdRng::seed_from_u64(0x5eed_0001);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let t = C::new(rng.gen_range(0.05..3.0), rng.gen_range(-1.0..1.0));
            let r = C::new(rng.gen_range(0.05..3.0), rng.gen_range(-1.0..1.0));
            let a = [C::new(rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(0.1..2.0))];
            let b = [c(rng.gen_range(0.6..3.0))];
            let u = rng.gen_range(-5.0..0.0);
            let lhs = beta_weighted_integral(t, r, |x| pfq(&a, &b, c(u * x)))?;
            let rhs = beta(t, r)? * pfq(&[r, a[0], a[1]], &[t + r, b[0]], c(u))?;
            worst = worst.max(rel_err(lhs, rhs));
            grid.push(format!("t={} r={} u={u:.3}", fmt_c(t), fmt_c(r)));
        }
        Ok(worst)
    })
}

/// Quadratic transform, in the form with the factor 4:
/// F(α,β;(α+β+1)/2;(1+√z)/2) − F(…;(1−√z)/2) = 4Γ((α+β+1)/2)/(Γ(α/2)Γ(β/2))·√(πz)·F((α+1)/2,(β+1)/2;3/2;z).
pub fn quadratic_transform(tol: f64) -> VerificationReport {
    check("quadratic_transform", tol, |grid| {
        let vals = [0.3, 0.8, 1.7];
        let mut worst: f64 = 0.0;
        for &al in &vals {
            for &be in &vals {
                for &z in &[0.05, 0.2, 0.45, 0.7, 0.89] {
                    let cc = c((al + be + 1.0) / 2.0);
                    let sq = f64::sqrt(z);
                    let lhs = pfq(&[c(al), c(be)], &[cc], c((1.0 + sq) / 2.0))?
                        - pfq(&[c(al), c(be)], &[cc], c((1.0 - sq) / 2.0))?;
                    let pre = (log_gamma(cc)? - log_gamma(c(al / 2.0))? - log_gamma(c(be / 2.0))?).exp();
                    let rhs = pre * 4.0 * (PI * z).sqrt() * pfq(&[c((al + 1.0) / 2.0), c((be + 1.0) / 2.0)], &[c(1.5)], c(z))?;
                    worst = worst.max(rel_err(lhs, rhs));
                }
                grid.push(format!("alpha={al} beta={be} z∈{{0.05,0.2,0.45,0.7,0.89}}"));
            }
        }
        Ok(worst)
    })
}

/// d/dx ₚF_q(a;b;x) = Πa/Πb · ₚF_q(a+1;b+1;x), checked by a central difference.
pub fn derivative_identity(tol: f64) -> VerificationReport {
    check("derivative_identity", tol, |grid| {
        let cases: [(Vec<C>, Vec<C>); 4] = [
            (vec![c(0.5), c(1.0 / 3.0)], vec![c(1.5)]),
            (vec![C::new(0.75, 2.0), C::new(0.75, -2.0)], vec![c(1.5)]),
            (vec![c(1.0), C::new(1.25, 3.0), C::new(0.75, -3.0)], vec![c(2.0), c(1.5)]),
            (vec![c(0.3)], vec![c(1.2), c(2.5)]),
        ];
        let mut worst: f64 = 0.0;
        for (a, b) in &cases {
            let ratio = a.iter().fold(c(1.0), |acc, &x| acc * x) / b.iter().fold(c(1.0), |acc, &x| acc * x);
            let a1: Vec<C> = a.iter().map(|&x| x + 1.0).collect();
            let b1: Vec<C> = b.iter().map(|&x| x + 1.0).collect();
            for &x in &[-3.0, -0.5, 0.3] {
                let h = 1e-4 * (1.0 + f64::abs(x));
                let fd = (pfq(a, b, c(x + h))? * 8.0 - pfq(a, b, c(x - h))? * 8.0 - pfq(a, b, c(x + 2.0 * h))?
                    + pfq(a, b, c(x - 2.0 * h))?)
                    / (12.0 * h);
                let exact = ratio * pfq(&a1, &b1, c(x))?;
                worst = worst.max(rel_err(fd, exact));
            }
            grid.push(format!("p={} q={} x∈{{-3,-0.5,0.3}}", a.len(), b.len()));
        }
        Ok(worst)
    })
}

/// Connection formula versus the Euler integral
/// B(t,r)·₂F₁(r,a;t+r;x) = ∫₀¹(1−y)^{t−1}y^{r−1}(1−xy)^{−a}dy, including
/// coalescing parameter pairs.
pub fn connection_formula(tol: f64) -> VerificationReport {
    check("connection_formula", tol, |grid| {
        // (r, a, t)
        let cases = [
            (c(0.5), c(1.0 / 3.0), c(1.0)),
            (c(1.0), c(1.0), c(1.0)),
            (c(0.75), c(0.75), c(0.75)),
            (C::new(0.75, 2.0), C::new(0.75, -2.0), c(1.5)),
            (c(0.5), c(2.5), c(0.7)),
        ];
        let mut worst: f64 = 0.0;
        for &(r, a, t) in &cases {
            for &x in &[-1.0, -2.0, -5.0, -20.0, -100.0] {
                let lhs = beta(t, r)? * hyp_large_arg(&[r, a], &[t + r], x)?;
                let rhs = beta_weighted_integral(t, r, |y| Ok((-a * (-x * y).ln_1p()).exp()))?;
                worst = worst.max(rel_err(lhs, rhs));
            }
            grid.push(format!("2F1({}, {}; {}) x∈{{-1,-2,-5,-20,-100}}", fmt_c(r), fmt_c(a), fmt_c(t + r)));
        }
        Ok(worst)
    })
}

/// h → g → h round trip for h = f₃_(b), with g′ by differentiation under the
/// integral sign.
pub fn g_inverse_roundtrip(tol: f64) -> VerificationReport {
    check("g_inverse_roundtrip", tol, |grid| {
        let p = SmoothingParams::new(50.0, 0.2)?;
        let f3 = TestFunction::new(TestKind::F3, p);
        let prof = f3.profile(Combination::B);
        let mut worst: f64 = 0.0;
        for &t in &[3.0, 10.0, p.x * p.x / 2.0] {
            let back = g_inverse_fallible(t, |u| g_transform_derivative(u, &prof), p.support_end(), &prof.breakpoints)?;
            worst = worst.max(crate::verify::rel_diff(back, f3.value(t), 1e-12));
            grid.push(format!("X=50 D=0.2 t={t}"));
        }
        Ok(worst)
    })
}

/// g(u; f₄ + 2(x−1)f₄′) equals the prescribed target, and inverting the target
/// reproduces the I_c closed form and the f₄ combination.
pub fn f4_target_reproduction(tol: f64) -> VerificationReport {
    check("f4_target", tol, |grid| {
        let mut worst: f64 = 0.0;
        for &(x, d) in &[(20.0, 0.25), (100.0, 0.1)] {
            let p = SmoothingParams::new(x, d)?;
            let f4 = TestFunction::new(TestKind::F4, p);
            let prof = f4.profile(Combination::C);
            let x2 = x * x;
            let end = p.support_end();
            for &u in &[1.2, 2.0, 2.9, 3.5, 0.5 * x2, 0.99 * x2, 0.5 * (x2 + end), 0.999 * end] {
                let g = g_transform(u, &prof)?;
                worst = worst.max(crate::verify::rel_diff(g, f4_target(u, &p), 1e-3));
            }
            for &v in &[1.5, 2.5, 0.5 * x2, 0.5 * (x2 + end)] {
                let inv = g_inverse(v, |u| f4_target_deriv(u, &p), end, &[3.0, x2])?;
                let closed = f4_inverse_closed_form(v, &p);
                let direct = f4.combination(Combination::C, v) / (v - 1.0).sqrt();
                worst = worst.max(crate::verify::rel_diff(inv, closed, 1e-6));
                worst = worst.max(crate::verify::rel_diff(direct, closed, 1e-6));
            }
            grid.push(format!("X={x} D={d}"));
        }
        Ok(worst)
    })
}

/// d⁽¹⁾ forms (i), (ii) and the kernel closed form agree.
pub fn d1_forms(kind: TestKind, tol: f64) -> VerificationReport {
    let name = match kind {
        TestKind::F3 => "d1_forms_f3",
        TestKind::F4 => "d1_forms_f4",
        TestKind::F1 => "d1_forms_f1",
    };
    check(name, tol, |grid| {
        let mut worst: f64 = 0.0;
        for &(x, d) in &[(50.0, 0.2), (300.0, 0.1)] {
            let p = SmoothingParams::new(x, d)?;
            let f = TestFunction::new(kind, p);
            for &t in &[0.0, 0.5, 2.0, 10.0, 30.0] {
                let forms = d1_transform(&f, &SpectralParam::from_t(t))?;
                worst = worst.max(forms.max_rel_err());
            }
            let forms = d1_transform(&f, &SpectralParam::real(0.75))?;
            worst = worst.max(forms.max_rel_err());
            grid.push(format!("X={x} D={d} t∈{{0,0.5,2,10,30}} s=0.75"));
        }
        Ok(worst)
    })
}

/// J_s, K_s, K_s(R,r) closed forms against their defining integrals.
pub fn kernel_quadrature(tol: f64) -> VerificationReport {
    check("kernel_quadrature", tol, |grid| {
        let mut worst: f64 = 0.0;
        let params = [
            SpectralParam::from_t(0.0),
            SpectralParam::from_t(2.0),
            SpectralParam::from_t(10.0),
            SpectralParam::real(0.7),
        ];
        for sp in &params {
            for &u in &[0.5, 5.0, 20.0, 50.0] {
                worst = worst.max(rel_err(js(u, sp)?, js_quadrature(u, sp)?));
                worst = worst.max(rel_err(ks(u, sp)?, ks_quadrature(u, sp)?));
            }
            let p = SmoothingParams::new(50.0, 0.2)?;
            worst = worst.max(rel_err(ks_rr(&p, sp)?, ks_rr_quadrature(&p, sp)?));
            grid.push(format!("s={} u∈{{0.5,5,20,50}}", fmt_c(sp.s)));
        }
        Ok(worst)
    })
}

/// J_s(u) equals its two-term large-u expansion, and G_J, G_K → 1.
pub fn expansion_identities(tol: f64) -> VerificationReport {
    check("expansion_identities", tol, |grid| {
        let mut worst: f64 = 0.0;
        for sp in [SpectralParam::real(0.7), SpectralParam::from_t(2.0), SpectralParam::from_t(25.0)] {
            for &u in &[3.0, 30.0, 3000.0] {
                worst = worst.max(rel_err(js(u, &sp)?, js_expansion(u, &sp)?));
            }
            worst = worst.max((g_j(1e9, sp.s)? - 1.0).norm());
            worst = worst.max((g_k(1e5, sp.s)? - 1.0).norm());
            grid.push(format!("s={} u∈{{3,30,3000}}", fmt_c(sp.s)));
        }
        Ok(worst)
    })
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// |₂F₁(r,r+c;2r+b;z)/asymptotic − 1| decays like 1/t along r = 1/2+it;
/// the statistic is the largest deviation of the log-log slope from −1.
pub fn large_parameter_asymptotic(tol: f64) -> VerificationReport {
    check("large_parameter_asymptotic", tol, |grid| {
        let ts = [10.0, 20.0, 40.0, 80.0];
        let mut worst: f64 = 0.0;
        for &(b, cc, z) in &[(0.7, 0.2, -0.5), (1.5, 0.5, -0.9), (2.0, -0.3, -0.2)] {
            let mut devs = Vec::new();
            for &t in &ts {
                let r = C::new(0.5, t);
                let f = pfq(&[r, r + cc], &[2.0 * r + b], c(z))?;
                let asy = hyp2f1_large_param_asymptotic(r, c(cc), c(b), z)?;
                devs.push((f / asy - 1.0).norm());
            }
            let slope = loglog_slope(&ts, &devs);
            worst = worst.max((slope + 1.0).abs());
            grid.push(format!("b={b} c={cc} z={z} slope={slope:.3}"));
        }
        Ok(worst)
    })
}

/// The full identity suite with default tolerances, subject to overrides.
pub fn identity_suite(tols: &Tolerances) -> Vec<VerificationReport> {
    vec![
        euler_transform(tols.get("euler_transform", 1e-8)),
        quadratic_transform(tols.get("quadratic_transform", 1e-8)),
        derivative_identity(tols.get("derivative_identity", 1e-6)),
        connection_formula(tols.get("connection_formula", 1e-8)),
        g_inverse_roundtrip(tols.get("g_inverse_roundtrip", 1e-6)),
        f4_target_reproduction(tols.get("f4_target", 1e-8)),
        d1_forms(TestKind::F3, tols.get("d1_forms_f3", 1e-7)),
        d1_forms(TestKind::F4, tols.get("d1_forms_f4", 1e-7)),
        kernel_quadrature(tols.get("kernel_quadrature", 1e-7)),
        expansion_identities(tols.get("expansion_identities", 1e-6)),
        large_parameter_asymptotic(tols.get("large_parameter_asymptotic", 0.2)),
    ]
}

/// Envelope statistics of one dimensionless ratio family: the overall
/// maximum, and the growth factors between the upper and lower halves of the
/// t-grid and between the largest and smallest X.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Envelope {
    pub max: f64,
    pub t_growth: f64,
    pub x_growth: f64,
}

impl Envelope {
    /// Normalised statistic: ≤ 1 iff max ≤ `bound`, t_growth ≤ 2 and x_growth ≤ 2.
    pub fn score(&self, bound: f64) -> f64 {
        (self.max / bound).max(self.t_growth / 2.0).max(self.x_growth / 2.0)
    }
}

/// Constant that every envelope ratio must stay below.
pub const ENVELOPE_BOUND: f64 = 10.0;
pub const ENVELOPE_XS: [f64; 3] = [1e2, 1e3, 1e4];
pub const ENVELOPE_DS: [f64; 2] = [0.1, 0.3];

/// ratio(X, D, t) over X ∈ {10², 10³, 10⁴}, D ∈ {0.1, 0.3}, t = 1, 2, …, 100.
fn envelope_of<F>(mut ratio: F) -> Result<Envelope, SpecFunError>
where
    F: FnMut(f64, f64, f64) -> Result<f64, SpecFunError>,
{
    let mut env = Envelope::default();
    let mut per_x = [0.0f64; 3];
    let (mut lower, mut upper) = (0.0f64, 0.0f64);
    for (ix, &x) in ENVELOPE_XS.iter().enumerate() {
        for &d in &ENVELOPE_DS {
            for ti in 1..=100 {
                let v = ratio(x, d, ti as f64)?;
                per_x[ix] = per_x[ix].max(v);
                if ti <= 50 {
                    lower = lower.max(v);
                } else {
                    upper = upper.max(v);
                }
            }
        }
    }
    env.max = per_x.iter().copied().fold(0.0, f64::max);
    env.t_growth = upper / lower;
    env.x_growth = per_x[2] / per_x[0];
    Ok(env)
}

/// Envelope checks for the decay estimates of d⁽¹⁾(f₃), d⁽¹⁾(f₄), γ_J, γ_K,
/// a(t,D), K_s(R,r), the t = 0 case, and the O(1/u) remainder of the K_s
/// expansion.
pub fn envelope_suite(tols: &Tolerances) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    let d1 = |kind: TestKind, x: f64, d: f64, t: f64| -> Result<f64, SpecFunError> {
        let p = SmoothingParams::new(x, d)?;
        let f = TestFunction::new(kind, p);
        Ok(d1_closed(&f, &SpectralParam::from_t(t))?.map_or(0.0, |v| v.norm()))
    };
    type RatioFn<'a> = Box<dyn Fn(f64, f64, f64) -> Result<f64, SpecFunError> + 'a>;
    let families: Vec<(&str, &str, RatioFn)> = vec![
        (
            "envelope_d1_f3_x_half",
            "|d1(f3)|·t^{3/2}/X^{1/2}",
            Box::new(|x, d, t| Ok(d1(TestKind::F3, x, d, t)? * t.powf(1.5) / x.sqrt())),
        ),
        (
            "envelope_d1_f3_y",
            "|d1(f3)|·t^{5/2}·Y/X^{3/2}",
            Box::new(|x, d, t| Ok(d1(TestKind::F3, x, d, t)? * t.powf(2.5) * d * x / x.powf(1.5))),
        ),
        (
            "envelope_d1_f4_x_half",
            "|d1(f4)|·t^{5/2}/X^{1/2}",
            Box::new(|x, d, t| Ok(d1(TestKind::F4, x, d, t)? * t.powf(2.5) / x.sqrt())),
        ),
        (
            "envelope_d1_f4_y",
            "|d1(f4)|·t^{7/2}·Y/X^{3/2}",
            Box::new(|x, d, t| Ok(d1(TestKind::F4, x, d, t)? * t.powf(3.5) * d * x / x.powf(1.5))),
        ),
        (
            "envelope_gamma_j",
            "|γ_J(1/2+it)|·t^{5/2}",
            Box::new(|_, _, t| Ok(gamma_j(C::new(0.5, t))?.norm() * t.powf(2.5))),
        ),
        (
            "envelope_gamma_k",
            "|γ_K(1/2+it)|·t^{7/2}",
            Box::new(|_, _, t| Ok(gamma_k(C::new(0.5, t))?.norm() * t.powf(3.5))),
        ),
        (
            "envelope_sieve_a",
            "|a(t,D)|·t^{5/2}/min(1/D,t)",
            Box::new(|_, d, t| Ok(sieve_coeffs(t, d)?.0.norm() * t.powf(2.5) / (1.0 / d).min(t))),
        ),
        (
            "envelope_sieve_residual",
            "|d1(f3) − X^{1/2}(a(t,D)X^{it}+a(−t,D)X^{−it})|·t^{3/2}·X^{3/2}",
            Box::new(|x, d, t| {
                let p = SmoothingParams::new(x, d)?;
                let f = TestFunction::new(TestKind::F3, p);
                let v = d1_closed(&f, &SpectralParam::from_t(t))?.unwrap_or(c(0.0));
                Ok((v - f3_main_term(x, d, t)?).norm() * t.powf(1.5) * x.powf(1.5))
            }),
        ),
        (
            "envelope_ks_rr",
            "|K_s(R,r) − asymptotic|·t^{7/2}/log X",
            Box::new(|x, d, t| {
                let p = SmoothingParams::new(x, d)?;
                let sp = SpectralParam::from_t(t);
                Ok((ks_rr(&p, &sp)? - ks_rr_asymptotic(&p, &sp)).norm() * t.powf(3.5) / x.ln())
            }),
        ),
    ];
    for (name, desc, f) in families {
        let tol = tols.get(name, 1.0);
        let grid = vec![desc.to_string(), "X∈{1e2,1e3,1e4} D∈{0.1,0.3} t=1..100".to_string()];
        match envelope_of(f) {
            Ok(env) => {
                let mut grid = grid;
                grid.push(format!("max={:.4} t_growth={:.3} x_growth={:.3}", env.max, env.t_growth, env.x_growth));
                out.push(VerificationReport::new(name, grid, env.score(ENVELOPE_BOUND), tol));
            }
            Err(e) => out.push(VerificationReport::failed(name, grid, &e.to_string(), tol)),
        }
    }

    // t = 0: |d1(f)| / (X^{1/2} log X)
    for (name, kind) in [("envelope_half_f3", TestKind::F3), ("envelope_half_f4", TestKind::F4)] {
        let tol = tols.get(name, 1.0);
        out.push(check(name, tol, |grid| {
            let mut per_x = [0.0f64; 3];
            for (ix, &x) in ENVELOPE_XS.iter().enumerate() {
                for &d in &ENVELOPE_DS {
                    per_x[ix] = per_x[ix].max(d1(kind, x, d, 0.0)? / (x.sqrt() * x.ln()));
                }
            }
            let max = per_x.iter().copied().fold(0.0, f64::max);
            let env = Envelope { max, t_growth: 0.0, x_growth: per_x[2] / per_x[0] };
            grid.push("|d1_0(f)|/(X^{1/2} log X), X∈{1e2,1e3,1e4} D∈{0.1,0.3}".into());
            grid.push(format!("max={max:.4} x_growth={:.3}", env.x_growth));
            Ok(env.score(ENVELOPE_BOUND))
        }));
    }

    // K_s(u) − expansion = O(1/u): slope −1 ± 0.2
    let tol = tols.get("ks_remainder_slope", 0.2);
    out.push(check("ks_remainder_slope", tol, |grid| {
        let us = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0];
        let mut worst: f64 = 0.0;
        for &t in &[2.0, 5.0, 10.0, 20.0] {
            let sp = SpectralParam::from_t(t);
            let mut rem = Vec::new();
            for &u in &us {
                rem.push((ks(u, &sp)? - ks_expansion(u, &sp)?).norm());
            }
            let slope = loglog_slope(&us, &rem);
            worst = worst.max((slope + 1.0).abs());
            grid.push(format!("t={t} slope={slope:.4}"));
        }
        Ok(worst)
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.3)).collect();
        assert!((loglog_slope(&xs, &ys) + 1.3).abs() < 1e-12);
    }

    #[test]
    fn beta_integral_matches_beta_function() {
        let t = C::new(0.3, 0.4);
        let r = C::new(0.2, -0.7);
        let v = beta_weighted_integral(t, r, |_| Ok(c(1.0))).unwrap();
        assert!(rel_err(v, beta(t, r).unwrap()) < 1e-9);
    }

    #[test]
    fn zero_tolerance_fails() {
        assert!(!derivative_identity(0.0).pass);
        assert!(derivative_identity(1e-6).pass);
    }
}
