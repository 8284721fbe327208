//! The kernels J_s, K_s, K_s(R,r), their large-argument expansions
//! (γ_J, γ_K, G_J, G_K, C(s)) and the sieve coefficients a(t,D), b(t,D).

use std::f64::consts::{LN_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use super::gamma::{digamma, log_gamma};
use super::hypergeom::pfq;
use super::quad::quad_fallible;
use super::{SmoothingParams, SpecFunError, SpectralParam};

type C = Complex64;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

/// u^w for u > 0 on the principal branch.
pub(crate) fn rpow(u: f64, w: C) -> C {
    (w * u.ln()).exp()
}

/// Upper parameters ((s+1)/2, (2−s)/2) shared by all d⁽¹⁾ kernels.
fn d1_pair(s: C) -> [C; 2] {
    [(s + 1.0) / 2.0, (2.0 - s) / 2.0]
}

/// ₂F₁((s+1)/2, (2−s)/2; 3/2; −x²), the weight-1 kernel.
pub fn d1_kernel(x: f64, s: C) -> Result<C, SpecFunError> {
    pfq(&d1_pair(s), &[c(1.5)], c(-x * x))
}

/// ₃F₂(1, (s+1)/2, (2−s)/2; 2, 3/2; −x²), its averaged form.
pub fn d1_kernel_averaged(x: f64, s: C) -> Result<C, SpecFunError> {
    let [p, q] = d1_pair(s);
    pfq(&[c(1.0), p, q], &[c(2.0), c(1.5)], c(-x * x))
}

/// ₂F₁(s/2, (1−s)/2; 1/2; −x²), the weight-0 kernel.
pub fn d0_kernel(x: f64, s: C) -> Result<C, SpecFunError> {
    pfq(&[s / 2.0, (1.0 - s) / 2.0], &[c(0.5)], c(-x * x))
}

/// J_s(u) = (u²/8)·₂F₁((s+1)/2, (2−s)/2; 3; −u).
pub fn js(u: f64, sp: &SpectralParam) -> Result<C, SpecFunError> {
    if !(u > 0.0) {
        return Err(SpecFunError::Domain(format!("J_s needs u > 0, got {u}")));
    }
    Ok(pfq(&d1_pair(sp.s), &[c(3.0)], c(-u))? * (u * u / 8.0))
}

/// J_s(u) = (2/π)∫₀^√u x²√(u−x²)·₂F₁(…; 3/2; −x²) dx by quadrature.
pub fn js_quadrature(u: f64, sp: &SpectralParam) -> Result<C, SpecFunError> {
    let su = u.sqrt();
    let v = quad_fallible(
        |x| Ok(d1_kernel(x, sp.s)? * (x * x * ((su - x) * (su + x)).max(0.0).sqrt())),
        0.0,
        su,
        &[],
    )?;
    Ok(v * (2.0 / PI))
}

/// K_s(u) = −(u³/6π)·₄F₃(1, 1, (s+1)/2, (2−s)/2; 5/2, 2, 3/2; −u²).
pub fn ks(u: f64, sp: &SpectralParam) -> Result<C, SpecFunError> {
    if !(u > 0.0) {
        return Err(SpecFunError::Domain(format!("K_s needs u > 0, got {u}")));
    }
    let [p, q] = d1_pair(sp.s);
    let f = pfq(&[c(1.0), c(1.0), p, q], &[c(2.5), c(2.0), c(1.5)], c(-u * u))?;
    Ok(f * (-u * u * u / (6.0 * PI)))
}

/// K_s(u) = −(1/2π)∫₀^u x√(u²−x²)·₃F₂(…; −x²) dx by quadrature.
pub fn ks_quadrature(u: f64, sp: &SpectralParam) -> Result<C, SpecFunError> {
    let v = quad_fallible(
        |x| Ok(d1_kernel_averaged(x, sp.s)? * (x * ((u - x) * (u + x)).max(0.0).sqrt())),
        0.0,
        u,
        &[],
    )?;
    Ok(v * (-1.0 / (2.0 * PI)))
}

/// K_s(R,r) = (8a√2/15π)·₃F₂(1, (s+1)/2, (2−s)/2; 7/2, 3/2; −2).
pub fn ks_rr(p: &SmoothingParams, sp: &SpectralParam) -> Result<C, SpecFunError> {
    let [pp, q] = d1_pair(sp.s);
    let f = pfq(&[c(1.0), pp, q], &[c(3.5), c(1.5)], c(-2.0))?;
    Ok(f * (8.0 * p.a * SQRT_2 / (15.0 * PI)))
}

/// K_s(R,r) = (a/π)∫₀^√2 x³√(2−x²)·₃F₂(…; −x²) dx by quadrature.
pub fn ks_rr_quadrature(p: &SmoothingParams, sp: &SpectralParam) -> Result<C, SpecFunError> {
    let v = quad_fallible(
        |x| Ok(d1_kernel_averaged(x, sp.s)? * (x * x * x * (2.0 - x * x).max(0.0).sqrt())),
        0.0,
        SQRT_2,
        &[],
    )?;
    Ok(v * (p.a / PI))
}

/// (1/(πλ))·((R log R − r log r)/(R−r) − log 2/2), the large-t form of K_s(R,r).
pub fn ks_rr_asymptotic(p: &SmoothingParams, sp: &SpectralParam) -> C {
    let (big_r, r) = (p.big_r, p.r);
    let bracket = (big_r * big_r.ln() - r * r.ln()) / (big_r - r) - LN_2 / 2.0;
    c(bracket) / (PI * sp.lambda)
}

/// γ_J(s) = Γ(1/2−s) / (4Γ(1−s/2)Γ(5/2−s/2)).
pub fn gamma_j(s: C) -> Result<C, SpecFunError> {
    let l = log_gamma(0.5 - s)? - log_gamma(1.0 - s / 2.0)? - log_gamma(2.5 - s / 2.0)?;
    Ok(l.exp() / 4.0)
}

/// γ_K(s) = Γ((1−s)/2)²Γ(1/2−s) / (16Γ(1−s/2)²Γ((3−s)/2)Γ(2−s/2)).
pub fn gamma_k(s: C) -> Result<C, SpecFunError> {
    let l = 2.0 * log_gamma((1.0 - s) / 2.0)? + log_gamma(0.5 - s)?
        - 2.0 * log_gamma(1.0 - s / 2.0)?
        - log_gamma((3.0 - s) / 2.0)?
        - log_gamma(2.0 - s / 2.0)?;
    Ok(l.exp() / 16.0)
}

/// C(s) = (−ψ(−s/2) − ψ((s−1)/2) + ψ(3/2) + ψ(1/2)) / (2πs(1−s)).
pub fn c_coeff(s: C) -> Result<C, SpecFunError> {
    if s == c(0.5) {
        return Err(SpecFunError::Pole { at: 0.5 });
    }
    let psi = -digamma(-s / 2.0)? - digamma((s - 1.0) / 2.0)? + digamma(c(1.5))? + digamma(c(0.5))?;
    Ok(psi / (2.0 * PI * s * (1.0 - s)))
}

/// G_J(u,s) = ₂F₁((s+1)/2, (s−3)/2; s+1/2; −1/u).
pub fn g_j(u: f64, s: C) -> Result<C, SpecFunError> {
    pfq(&[(s + 1.0) / 2.0, (s - 3.0) / 2.0], &[s + 0.5], c(-1.0 / u))
}

/// G_K(u,s) = ₃F₂(s/2, s/2−1, s/2−1/2; s/2+1/2, s+1/2; −u⁻²).
pub fn g_k(u: f64, s: C) -> Result<C, SpecFunError> {
    let h = s / 2.0;
    pfq(&[h, h - 1.0, h - 0.5], &[h + 0.5, s + 0.5], c(-1.0 / (u * u)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpansionCoeffs {
    pub gamma_j_s: C,
    pub gamma_j_reflected: C,
    pub gamma_k_s: C,
    pub gamma_k_reflected: C,
    pub c: C,
}

/// (γ_J(s), γ_J(1−s), γ_K(s), γ_K(1−s), C(s)); PoleError at s = 1/2.
pub fn expansion_coeffs(sp: &SpectralParam) -> Result<ExpansionCoeffs, SpecFunError> {
    let s = sp.s;
    Ok(ExpansionCoeffs {
        gamma_j_s: gamma_j(s)?,
        gamma_j_reflected: gamma_j(1.0 - s)?,
        gamma_k_s: gamma_k(s)?,
        gamma_k_reflected: gamma_k(1.0 - s)?,
        c: c_coeff(s)?,
    })
}

/// γ_J(s)G_J(u,s)u^{(3−s)/2} + γ_J(1−s)G_J(u,1−s)u^{1+s/2}, valid for u > 1.
pub fn js_expansion(u: f64, sp: &SpectralParam) -> Result<C, SpecFunError> {
    let s = sp.s;
    let e = expansion_coeffs(sp)?;
    Ok(e.gamma_j_s * g_j(u, s)? * rpow(u, (3.0 - s) / 2.0)
        + e.gamma_j_reflected * g_j(u, 1.0 - s)? * rpow(u, 1.0 + s / 2.0))
}

/// −γ_K(s)G_K(u,s)u^{2−s} − γ_K(1−s)G_K(u,1−s)u^{s+1} − u log u/(πλ) + C(s)u,
/// which equals K_s(u) up to O(1/u).
pub fn ks_expansion(u: f64, sp: &SpectralParam) -> Result<C, SpecFunError> {
    let s = sp.s;
    let e = expansion_coeffs(sp)?;
    Ok(-e.gamma_k_s * g_k(u, s)? * rpow(u, 2.0 - s)
        - e.gamma_k_reflected * g_k(u, 1.0 - s)? * rpow(u, s + 1.0)
        - c(u * u.ln()) / (PI * sp.lambda)
        + e.c * u)
}

/// (a(t,D), b(t,D)) = (γ_J(1−s)((D+1)^{2+s}−1)/((D+1)²−1), −γ_K(1−s)((D+1)^{1+s}−1)/D)
/// with s = 1/2+it. The reflected pair a(−t,D), b(−t,D) is obtained by negating t.
pub fn sieve_coeffs(t: f64, d: f64) -> Result<(C, C), SpecFunError> {
    if t == 0.0 {
        return Err(SpecFunError::Pole { at: 0.5 });
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(SpecFunError::Parameter(format!("D = {d} must lie in (0, 1)")));
    }
    let s = C::new(0.5, t);
    let one_d = 1.0 + d;
    let a = gamma_j(1.0 - s)? * (rpow(one_d, 2.0 + s) - 1.0) / (one_d * one_d - 1.0);
    let b = -gamma_k(1.0 - s)? * (rpow(one_d, 1.0 + s) - 1.0) / d;
    Ok((a, b))
}

/// X^{1/2}(a(t,D)X^{it} + a(−t,D)X^{−it}), the leading part of d⁽¹⁾(f₃).
pub fn f3_main_term(x: f64, d: f64, t: f64) -> Result<C, SpecFunError> {
    let (a_pos, _) = sieve_coeffs(t, d)?;
    let (a_neg, _) = sieve_coeffs(-t, d)?;
    let xit = rpow(x, C::new(0.0, t));
    Ok((a_pos * xit + a_neg / xit) * x.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::rel_err;

    #[test]
    fn js_small_argument() {
        let sp = SpectralParam::from_t(2.0);
        let u = 1e-4;
        assert!(rel_err(js(u, &sp).unwrap(), c(u * u / 8.0)) < 1e-3);
    }

    #[test]
    fn js_closed_form_vs_quadrature() {
        let sp = SpectralParam::from_t(2.0);
        let a = js(5.0, &sp).unwrap();
        let b = js_quadrature(5.0, &sp).unwrap();
        assert!(rel_err(a, b) < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn ks_closed_form_vs_quadrature() {
        let sp = SpectralParam::from_t(3.0);
        for u in [0.5, 2.0, 20.0] {
            let a = ks(u, &sp).unwrap();
            let b = ks_quadrature(u, &sp).unwrap();
            assert!(rel_err(a, b) < 1e-7, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn intozlem_reference_values() {
        let sp = SpectralParam::real(0.7);
        let j = js(30.0, &sp).unwrap();
        assert!((j.re - 37.438_505_436_467).abs() < 1e-9 * 37.4);
        assert!(rel_err(js_expansion(30.0, &sp).unwrap(), j) < 1e-6);
        let sp = SpectralParam::from_s(C::new(0.5, 2.0));
        let j = js(30.0, &sp).unwrap();
        assert!((j.re + 2.325_366_255_896_53).abs() < 1e-9);
        let k = ks(160.0, &SpectralParam::real(0.7)).unwrap();
        assert!((k.re + 5899.705).abs() < 1e-2);
    }

    #[test]
    fn expansion_pole_at_half() {
        assert!(matches!(expansion_coeffs(&SpectralParam::real(0.5)), Err(SpecFunError::Pole { .. })));
    }

    #[test]
    fn g_functions_tend_to_one() {
        let s = C::new(0.5, 4.0);
        assert!((g_j(1e8, s).unwrap() - 1.0).norm() < 1e-6);
        assert!((g_k(1e4, s).unwrap() - 1.0).norm() < 1e-6);
    }

    #[test]
    fn sieve_small_d_limit() {
        let t = 3.0;
        let s = C::new(0.5, t);
        let d = 1e-7;
        let (_, b) = sieve_coeffs(t, d).unwrap();
        let expect = -gamma_k(1.0 - s).unwrap() * (1.0 + s);
        assert!(rel_err(b, expect) < 1e-6);
        assert!(sieve_coeffs(0.0, 0.1).is_err());
    }
}
