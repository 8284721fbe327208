//! The g-transform pair and the spectral transforms d⁽⁰⁾, d⁽¹⁾.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use super::kernels::{d0_kernel, d1_kernel, d1_kernel_averaged, js, ks, ks_rr};
use super::quad::{quad, quad_fallible};
use super::testfn::{Profile, TestFunction, TestKind};
use super::{SpecFunError, SpectralParam};

type C = Complex64;

/// Breakpoints t_k > base mapped to w = √(t_k − base).
fn w_breaks(base: f64, breaks: &[f64]) -> Vec<f64> {
    breaks.iter().filter(|&&t| t > base).map(|&t| (t - base).sqrt()).collect()
}

/// g(u; φ) = ∫_{max(u,1)}^∞ φ(t) / √((t−u)(t−1)) dt.
///
/// For u ≥ 1 the substitution t = u + w² removes the endpoint singularity;
/// for u < 1 the integral is taken in x = √(t−1).
pub fn g_transform(u: f64, phi: &Profile) -> Result<f64, SpecFunError> {
    let end = phi.support_end;
    if u >= end {
        return Ok(0.0);
    }
    let f = &phi.value;
    if u >= 1.0 {
        let v = quad(
            |w| {
                let t = u + w * w;
                f(t) / (t - 1.0).sqrt()
            },
            0.0,
            (end - u).sqrt(),
            &w_breaks(u, &phi.breakpoints),
        )?;
        Ok(2.0 * v)
    } else {
        let v = quad(
            |x| f(1.0 + x * x) / (x * x + 1.0 - u).sqrt(),
            0.0,
            (end - 1.0).sqrt(),
            &w_breaks(1.0, &phi.breakpoints),
        )?;
        Ok(2.0 * v)
    }
}

/// dg/du, differentiating under the integral; needs the profile derivative.
pub fn g_transform_derivative(u: f64, phi: &Profile) -> Result<f64, SpecFunError> {
    let end = phi.support_end;
    if u >= end {
        return Ok(0.0);
    }
    let f = &phi.value;
    if u >= 1.0 {
        let Some(fp) = &phi.deriv else {
            return Err(SpecFunError::Parameter("profile has no derivative".into()));
        };
        let v = quad(
            |w| {
                let t = u + w * w;
                let tm1 = t - 1.0;
                fp(t) / tm1.sqrt() - 0.5 * f(t) / (tm1 * tm1.sqrt())
            },
            0.0,
            (end - u).sqrt(),
            &w_breaks(u, &phi.breakpoints),
        )?;
        Ok(2.0 * v)
    } else {
        quad(
            |x| {
                let d = x * x + 1.0 - u;
                f(1.0 + x * x) / (d * d.sqrt())
            },
            0.0,
            (end - 1.0).sqrt(),
            &w_breaks(1.0, &phi.breakpoints),
        )
    }
}

/// h(t)/√(t−1) = −(1/π)∫_t^∞ g′(u)/√(u−t) du, with g′ supported on
/// [1, support_end] and kinks at `breakpoints`.
pub fn g_inverse<F: Fn(f64) -> f64>(
    t: f64,
    g_prime: F,
    support_end: f64,
    breakpoints: &[f64],
) -> Result<f64, SpecFunError> {
    if t >= support_end {
        return Ok(0.0);
    }
    let v = quad(|w| g_prime(t + w * w), 0.0, (support_end - t).sqrt(), &w_breaks(t, breakpoints))?;
    Ok(-2.0 * v / PI)
}

/// Fallible variant of [`g_inverse`] for g′ computed by quadrature.
pub fn g_inverse_fallible<F: Fn(f64) -> Result<f64, SpecFunError>>(
    t: f64,
    g_prime: F,
    support_end: f64,
    breakpoints: &[f64],
) -> Result<f64, SpecFunError> {
    if t >= support_end {
        return Ok(0.0);
    }
    let v: f64 = quad_fallible(|w| g_prime(t + w * w), 0.0, (support_end - t).sqrt(), &w_breaks(t, breakpoints))?;
    Ok(-2.0 * v / PI)
}

/// d⁽¹⁾ form (i): ∫₀^∞ x²h(x)·₂F₁((s+1)/2, (2−s)/2; 3/2; −x²) dx.
pub fn d1_form_i<H: Fn(f64) -> f64>(h: H, x_end: f64, breaks: &[f64], sp: &SpectralParam) -> Result<C, SpecFunError> {
    quad_fallible(|x| Ok(d1_kernel(x, sp.s)? * (x * x * h(x))), 0.0, x_end, breaks)
}

/// d⁽¹⁾ form (ii): −∫₀^∞ (x²/2)(x h(x))′·₃F₂(1, (s+1)/2, (2−s)/2; 2, 3/2; −x²) dx.
pub fn d1_form_ii<H: Fn(f64) -> f64>(
    xh_prime: H,
    x_end: f64,
    breaks: &[f64],
    sp: &SpectralParam,
) -> Result<C, SpecFunError> {
    let v = quad_fallible(
        |x| Ok(d1_kernel_averaged(x, sp.s)? * (0.5 * x * x * xh_prime(x))),
        0.0,
        x_end,
        breaks,
    )?;
    Ok(-v)
}

/// d⁽⁰⁾ = ∫₀^∞ h(x)·₂F₁(s/2, (1−s)/2; 1/2; −x²) dx.
pub fn d0_form<H: Fn(f64) -> f64>(h: H, x_end: f64, breaks: &[f64], sp: &SpectralParam) -> Result<C, SpecFunError> {
    quad_fallible(|x| Ok(d0_kernel(x, sp.s)? * h(x)), 0.0, x_end, breaks)
}

/// The three evaluations of d⁽¹⁾(f).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct D1Forms {
    pub form_i: C,
    pub form_ii: C,
    /// Kernel closed form, available for f₃ and f₄.
    pub closed: Option<C>,
}

impl D1Forms {
    /// Largest pairwise relative discrepancy.
    pub fn max_rel_err(&self) -> f64 {
        let mut vals = vec![self.form_i, self.form_ii];
        vals.extend(self.closed);
        let mut worst: f64 = 0.0;
        for i in 0..vals.len() {
            for j in (i + 1)..vals.len() {
                worst = worst.max(super::rel_err(vals[i], vals[j]));
            }
        }
        worst
    }
}

/// d⁽¹⁾(f₃) = (J_s(R²) − J_s(r²))/(R² − r²) and
/// d⁽¹⁾(f₄) = (K_s(R) − K_s(r))/(R − r) − K_s(√2)/√2 + K_s(R,r).
pub fn d1_closed(f: &TestFunction, sp: &SpectralParam) -> Result<Option<C>, SpecFunError> {
    let p = &f.params;
    match f.kind {
        TestKind::F3 => {
            let (r2_big, r2) = (p.big_r * p.big_r, p.r * p.r);
            Ok(Some((js(r2_big, sp)? - js(r2, sp)?) / p.h))
        }
        TestKind::F4 => Ok(Some(
            (ks(p.big_r, sp)? - ks(p.r, sp)?) / (p.big_r - p.r) - ks(SQRT_2, sp)? / SQRT_2 + ks_rr(p, sp)?,
        )),
        TestKind::F1 => Ok(None),
    }
}

/// All available evaluations of d⁽¹⁾(f).
pub fn d1_transform(f: &TestFunction, sp: &SpectralParam) -> Result<D1Forms, SpecFunError> {
    let breaks = f.x_breakpoints();
    let x_end = f.x_end();
    Ok(D1Forms {
        form_i: d1_form_i(|x| f.h(x), x_end, &breaks, sp)?,
        form_ii: d1_form_ii(|x| f.xh_prime(x), x_end, &breaks, sp)?,
        closed: d1_closed(f, sp)?,
    })
}

pub fn d0_transform(f: &TestFunction, sp: &SpectralParam) -> Result<C, SpecFunError> {
    d0_form(|x| f.h(x), f.x_end(), &f.x_breakpoints(), sp)
}
