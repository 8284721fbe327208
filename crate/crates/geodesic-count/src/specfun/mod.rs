//! Special functions and the analytic objects built from them: Γ and ψ,
//! adaptive quadrature, ₚF_q, the g-transform pair, the smoothing test
//! functions, their spectral transforms and the kernels J_s, K_s.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub use crate::verify::VerificationReport;

pub mod gamma;
pub mod hypergeom;
pub mod kernels;
pub mod quad;
pub mod testfn;
pub mod transforms;
pub mod verify;

pub use gamma::{digamma, gamma as gamma_fn, log_gamma, rgamma};
pub use hypergeom::{hyp_large_arg, pfq, pfq_real};
pub use kernels::{expansion_coeffs, js, ks, ks_rr, sieve_coeffs, ExpansionCoeffs};
pub use quad::{integrate, quad, quad_fallible, QuadOptions};
pub use testfn::{f4_inverse_closed_form, f4_target, f4_target_deriv, Combination, Profile, TestFunction, TestKind};
pub use transforms::{d0_transform, d1_closed, d1_transform, g_inverse, g_transform, g_transform_derivative, D1Forms};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("pole at {at}")]
    Pole { at: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("series did not reach tolerance within {terms} terms")]
    Divergence { terms: usize },
    #[error("{method} evaluation lost precision (condition number {condition:.3e})")]
    IllConditioned { method: &'static str, condition: f64 },
    #[error("argument outside the supported domain: {0}")]
    Domain(String),
    #[error("quadrature failed after {panels} panels (error estimate {error:.3e})")]
    Quadrature { panels: usize, error: f64 },
    #[error("integration did not converge: {0}")]
    Convergence(String),
}

/// A spectral parameter s with s = 1/2 + it and λ = s(1−s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralParam {
    pub s: Complex64,
    pub t: Complex64,
    pub lambda: Complex64,
}

impl SpectralParam {
    pub fn from_s(s: Complex64) -> Self {
        let i = Complex64::new(0.0, 1.0);
        SpectralParam {
            s,
            t: (s - 0.5) / i,
            lambda: s * (1.0 - s),
        }
    }

    /// s = 1/2 + it for real t.
    pub fn from_t(t: f64) -> Self {
        Self::from_s(Complex64::new(0.5, t))
    }

    pub fn real(s: f64) -> Self {
        Self::from_s(Complex64::new(s, 0.0))
    }

    /// The reflected parameter 1 − s.
    pub fn reflect(&self) -> Self {
        Self::from_s(1.0 - self.s)
    }
}

/// Smoothing window parameters for the test functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothingParams {
    pub x: f64,
    pub d: f64,
    pub y: f64,
    pub big_r: f64,
    pub r: f64,
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub bc: f64,
}

impl SmoothingParams {
    /// Requires X ≥ 2 (so that √2 < r) and 0 < D < 1.
    pub fn new(x: f64, d: f64) -> Result<Self, SpecFunError> {
        if !(x >= 2.0 && x.is_finite()) {
            return Err(SpecFunError::Parameter(format!("X = {x} must be ≥ 2")));
        }
        if !(d > 0.0 && d < 1.0) {
            return Err(SpecFunError::Parameter(format!("D = {d} must lie in (0, 1)")));
        }
        let y = d * x;
        let big_r2 = (x + y) * (x + y) - 1.0;
        let r2 = x * x - 1.0;
        let big_r = big_r2.sqrt();
        let r = r2.sqrt();
        let a = 3.0 * std::f64::consts::SQRT_2 / 8.0
            * ((big_r * big_r.ln() - r * r.ln()) / (big_r - r) - std::f64::consts::LN_2 / 2.0);
        Ok(SmoothingParams {
            x,
            d,
            y,
            big_r,
            r,
            h: big_r2 - r2,
            a,
            b: std::f64::consts::FRAC_1_SQRT_2 - 3.0 * a,
            m: big_r / (big_r - r),
            bc: 1.0 / (big_r - r),
        })
    }

    /// (X+Y)², the right end of every test function support.
    pub fn support_end(&self) -> f64 {
        (self.x + self.y) * (self.x + self.y)
    }
}

pub(crate) fn rel_err(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn smoothing_params_relations() {
        let sp = SmoothingParams::new(50.0, 0.2).unwrap();
        assert_relative_eq!(sp.big_r * sp.big_r - sp.r * sp.r, sp.h, max_relative = 1e-12);
        assert_relative_eq!(3.0 * sp.a + sp.b, std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-14);
        assert_relative_eq!(sp.m / sp.r - sp.bc, 1.0 / sp.r, max_relative = 1e-12);
        assert!(SmoothingParams::new(1.5, 0.2).is_err());
        assert!(SmoothingParams::new(10.0, 1.0).is_err());
    }

    #[test]
    fn spectral_param_lambda() {
        let sp = SpectralParam::from_t(3.0);
        assert_relative_eq!(sp.lambda.re, 9.25, max_relative = 1e-15);
        assert!(sp.lambda.im.abs() < 1e-15);
        assert_relative_eq!(sp.t.re, 3.0);
        assert_relative_eq!((sp.s + sp.reflect().s).re, 1.0);
    }
}
