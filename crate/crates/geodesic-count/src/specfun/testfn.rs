//! The smoothing test functions f₁, f₃, f₄ and the g-transform target of f₄.
//!
//! Everything is evaluated in the radial variable x = √(v−1), where v ≥ 1 is
//! the argument of f. With h(x) = f(1+x²):
//! - f_(a)(v) = h(x),
//! - f_(b)(v) = √(v−1)·f(v) = x·h(x),
//! - f_(c)(v) = f(v) + 2(v−1)f′(v) = (x·h(x))′,
//! - f′(v) = h′(x)/(2x).

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use super::SmoothingParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TestKind {
    F1,
    F3,
    F4,
}

/// Which derived function of f enters a g-transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Combination {
    A,
    B,
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub kind: TestKind,
    pub params: SmoothingParams,
}

/// √(c² − x²), zero past c.
fn root(c: f64, x: f64) -> f64 {
    if x >= c {
        0.0
    } else {
        ((c - x) * (c + x)).sqrt()
    }
}

/// (S_c − c) − c·log((c+S_c)/(2c)), which vanishes at x = 0 to second order.
fn phi(c: f64, x: f64) -> f64 {
    let sc = root(c, x);
    let x2 = x * x;
    -x2 / (c + sc) - c * (-x2 / (2.0 * c * (c + sc))).ln_1p()
}

/// S_c − c·log((c+S_c)/x), an antiderivative of S_c/x.
fn big_a(c: f64, x: f64) -> f64 {
    let sc = root(c, x);
    sc - c * ((c + sc) / x).ln()
}

impl TestFunction {
    pub fn new(kind: TestKind, params: SmoothingParams) -> Self {
        TestFunction { kind, params }
    }

    /// Right end of the support in v.
    pub fn support_end(&self) -> f64 {
        self.params.support_end()
    }

    /// Right end of the support in x.
    pub fn x_end(&self) -> f64 {
        self.params.big_r
    }

    /// Kinks in v.
    pub fn breakpoints(&self) -> Vec<f64> {
        let p = &self.params;
        let mut v = vec![p.x * p.x, self.support_end()];
        if self.kind == TestKind::F4 {
            v.insert(0, 3.0);
        }
        v
    }

    /// Kinks in x.
    pub fn x_breakpoints(&self) -> Vec<f64> {
        let p = &self.params;
        let mut v = vec![p.r, p.big_r];
        if self.kind == TestKind::F4 {
            v.insert(0, SQRT_2);
        }
        v
    }

    fn f3_scale(&self) -> f64 {
        2.0 / (PI * self.params.h)
    }

    /// F(x) = x·h₄(x) and F′(x), the antiderivative structure of f₄.
    fn f4_primitive(&self, x: f64) -> (f64, f64) {
        let p = &self.params;
        let (big_r, r, a) = (p.big_r, p.r, p.a);
        let w = big_r - r;
        if x <= 0.0 {
            return (0.0, 0.0);
        }
        if x >= big_r {
            return (0.0, 0.0);
        }
        if x < SQRT_2 {
            let (sr_big, sr, s2) = (root(big_r, x), root(r, x), root(SQRT_2, x));
            let f = (phi(big_r, x) - phi(r, x)) / (PI * w) - SQRT_2 / (2.0 * PI) * phi(SQRT_2, x)
                + 2.0 * a / (3.0 * PI) * (s2 * s2 * s2 - 2.0 * SQRT_2);
            let fp = x / PI
                * ((1.0 / (big_r + sr_big) + 1.0 / (r + sr)) / (sr_big + sr) + 1.0 / (SQRT_2 * (SQRT_2 + s2)))
                - 2.0 * a * x / PI * s2;
            (f, fp)
        } else if x < r {
            let (sr_big, sr) = (root(big_r, x), root(r, x));
            let f = (big_a(big_r, x) - big_a(r, x)) / (PI * w);
            let fp = (big_r + r) / (PI * x * (sr_big + sr));
            (f, fp)
        } else {
            let sr_big = root(big_r, x);
            (big_a(big_r, x) / (PI * w), sr_big / (PI * x * w))
        }
    }

    /// h(x) = f(1+x²).
    pub fn h(&self, x: f64) -> f64 {
        let p = &self.params;
        let x = x.abs();
        match self.kind {
            TestKind::F3 => self.f3_scale() * (root(p.big_r, x) - root(p.r, x)),
            TestKind::F1 => x * self.f3_scale() * (root(p.big_r, x) - root(p.r, x)),
            TestKind::F4 => {
                if x < 1e-6 {
                    0.5 * self.f4_kappa() * x
                } else {
                    self.f4_primitive(x).0 / x
                }
            }
        }
    }

    /// F′(0)/x as x → 0 for f₄.
    fn f4_kappa(&self) -> f64 {
        let p = &self.params;
        (1.0 / (2.0 * p.big_r * p.r) + 0.25) / PI - 2.0 * SQRT_2 * p.a / PI
    }

    /// dh/dx.
    pub fn h_x(&self, x: f64) -> f64 {
        let p = &self.params;
        let x = x.abs();
        let d_root = |c: f64| if x >= c { 0.0 } else { -x / root(c, x) };
        match self.kind {
            TestKind::F3 => self.f3_scale() * (d_root(p.big_r) - d_root(p.r)),
            TestKind::F1 => {
                self.f3_scale() * ((root(p.big_r, x) - root(p.r, x)) + x * (d_root(p.big_r) - d_root(p.r)))
            }
            TestKind::F4 => {
                if x < 1e-6 {
                    0.5 * self.f4_kappa()
                } else {
                    let (f, fp) = self.f4_primitive(x);
                    (fp - f / x) / x
                }
            }
        }
    }

    /// (x·h(x))′, which is f_(c) at v = 1+x².
    pub fn xh_prime(&self, x: f64) -> f64 {
        match self.kind {
            TestKind::F4 => self.f4_primitive(x.abs()).1,
            _ => self.h(x) + x * self.h_x(x),
        }
    }

    fn radial(v: f64) -> f64 {
        (v - 1.0).max(0.0).sqrt()
    }

    /// f(v).
    pub fn value(&self, v: f64) -> f64 {
        self.h(Self::radial(v))
    }

    /// f′(v) for v > 1.
    pub fn deriv(&self, v: f64) -> f64 {
        let x = Self::radial(v);
        self.h_x(x) / (2.0 * x)
    }

    pub fn combination(&self, c: Combination, v: f64) -> f64 {
        let x = Self::radial(v);
        match c {
            Combination::A => self.h(x),
            Combination::B => x * self.h(x),
            Combination::C => self.xh_prime(x),
        }
    }

    /// d/dv of a combination, where a closed form is available.
    pub fn combination_deriv(&self, c: Combination, v: f64) -> Option<f64> {
        let x = Self::radial(v);
        match c {
            Combination::A => Some(self.h_x(x) / (2.0 * x)),
            Combination::B => Some(self.xh_prime(x) / (2.0 * x)),
            Combination::C => None,
        }
    }

    /// The combination as a [`Profile`] for the g-transform.
    pub fn profile(&self, c: Combination) -> Profile<'_> {
        let deriv: Option<Box<dyn Fn(f64) -> f64 + Sync + '_>> = match c {
            Combination::C => None,
            _ => Some(Box::new(move |v| self.combination_deriv(c, v).unwrap_or(0.0))),
        };
        Profile {
            value: Box::new(move |v| self.combination(c, v)),
            deriv,
            support_end: self.support_end(),
            breakpoints: self.breakpoints(),
        }
    }
}

/// A compactly supported function of v ≥ 1 with known kinks, optionally
/// with its derivative.
pub struct Profile<'a> {
    pub value: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    pub deriv: Option<Box<dyn Fn(f64) -> f64 + Sync + 'a>>,
    pub support_end: f64,
    pub breakpoints: Vec<f64>,
}

impl<'a> Profile<'a> {
    pub fn zero() -> Self {
        Profile {
            value: Box::new(|_| 0.0),
            deriv: Some(Box::new(|_| 0.0)),
            support_end: 1.0,
            breakpoints: Vec::new(),
        }
    }

    /// The indicator of [1, end].
    pub fn indicator(end: f64) -> Self {
        Profile {
            value: Box::new(move |v| if v <= end { 1.0 } else { 0.0 }),
            deriv: Some(Box::new(|_| 0.0)),
            support_end: end,
            breakpoints: Vec::new(),
        }
    }

    pub fn new<F: Fn(f64) -> f64 + Sync + 'a>(value: F, support_end: f64, breakpoints: Vec<f64>) -> Self {
        Profile {
            value: Box::new(value),
            deriv: None,
            support_end,
            breakpoints,
        }
    }

    pub fn with_deriv<F: Fn(f64) -> f64 + Sync + 'a>(mut self, deriv: F) -> Self {
        self.deriv = Some(Box::new(deriv));
        self
    }
}

/// g(u; f₄ + 2(x−1)f₄′) as prescribed: au+b, 1/√(u−1), M/√(u−1) − B, 0.
pub fn f4_target(u: f64, p: &SmoothingParams) -> f64 {
    let x2 = p.x * p.x;
    if u <= 3.0 {
        p.a * u + p.b
    } else if u <= x2 {
        1.0 / (u - 1.0).sqrt()
    } else if u <= p.support_end() {
        p.m / (u - 1.0).sqrt() - p.bc
    } else {
        0.0
    }
}

/// Derivative of [`f4_target`] away from its kinks.
pub fn f4_target_deriv(u: f64, p: &SmoothingParams) -> f64 {
    let x2 = p.x * p.x;
    if u <= 3.0 {
        p.a
    } else if u <= x2 {
        -0.5 / (u - 1.0).powf(1.5)
    } else if u <= p.support_end() {
        -0.5 * p.m / (u - 1.0).powf(1.5)
    } else {
        0.0
    }
}

/// I_c(v) = √(c−v) / (π√(c−1)(v−1)) for v < c, else 0.
fn i_kernel(c: f64, v: f64) -> f64 {
    if v >= c {
        0.0
    } else {
        (c - v).sqrt() / (PI * (c - 1.0).sqrt() * (v - 1.0))
    }
}

/// The piecewise closed form of (f₄ + 2(v−1)f₄′)/√(v−1) obtained by
/// inverting the target in terms of I_c.
pub fn f4_inverse_closed_form(v: f64, p: &SmoothingParams) -> f64 {
    let x2 = p.x * p.x;
    let end = p.support_end();
    if v <= 3.0 {
        i_kernel(x2, v) + p.m * (i_kernel(end, v) - i_kernel(x2, v))
            - i_kernel(3.0, v)
            - 2.0 * p.a / PI * (3.0 - v).sqrt()
    } else if v <= x2 {
        i_kernel(x2, v) + p.m * (i_kernel(end, v) - i_kernel(x2, v))
    } else if v < end {
        p.m * i_kernel(end, v)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params() -> SmoothingParams {
        SmoothingParams::new(50.0, 0.2).unwrap()
    }

    #[test]
    fn f1_f3_relation_and_support() {
        let p = params();
        let f1 = TestFunction::new(TestKind::F1, p);
        let f3 = TestFunction::new(TestKind::F3, p);
        for v in [1.5, 10.0, 2000.0, 2600.0, 3500.0] {
            assert_relative_eq!(f1.value(v), (v - 1.0).sqrt() * f3.value(v), max_relative = 1e-14);
        }
        assert_eq!(f1.value(p.support_end()), 0.0);
        assert_eq!(f1.value(p.support_end() + 1.0), 0.0);
        assert_eq!(f1.value(1.0), 0.0);
    }

    #[test]
    fn f4_primitive_derivative_matches_display() {
        let p = params();
        let f4 = TestFunction::new(TestKind::F4, p);
        let display = |x: f64| {
            let base = (root(p.big_r, x) - root(p.r, x)) / (PI * x * (p.big_r - p.r));
            if x <= SQRT_2 {
                base - (SQRT_2 + 4.0 * p.a * x * x) / (2.0 * PI * x) * root(SQRT_2, x)
            } else {
                base
            }
        };
        for x in [0.05, 0.7, 1.3, 2.0, 30.0, 48.0, 55.0, 59.0] {
            assert_relative_eq!(f4.xh_prime(x), display(x), max_relative = 1e-10, epsilon = 1e-14);
            // numerical derivative of F = x·h
            let dx = 1e-5;
            let fd = ((x + dx) * f4.h(x + dx) - (x - dx) * f4.h(x - dx)) / (2.0 * dx);
            assert_relative_eq!(fd, f4.xh_prime(x), max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn f4_vanishes_at_both_ends_and_is_continuous() {
        let p = params();
        let f4 = TestFunction::new(TestKind::F4, p);
        assert_eq!(f4.value(1.0), 0.0);
        assert_eq!(f4.value(p.support_end() + 1.0), 0.0);
        assert_abs_diff_eq!(f4.h(p.big_r * (1.0 - 1e-12)), 0.0, epsilon = 1e-6);
        for knot in [SQRT_2, p.r] {
            let lo = f4.h(knot * (1.0 - 1e-12));
            let hi = f4.h(knot * (1.0 + 1e-12));
            assert_abs_diff_eq!(lo, hi, epsilon = 1e-9);
        }
        let lo = f4.h(0.999e-6);
        let hi = f4.h(1.001e-6);
        assert_relative_eq!(lo, hi, max_relative = 1e-2);
    }

    #[test]
    fn target_continuity() {
        let p = params();
        assert_relative_eq!(f4_target(3.0, &p), std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-14);
        assert_relative_eq!(f4_target(3.0 + 1e-12, &p), std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-10);
        let x2 = p.x * p.x;
        assert_relative_eq!(p.m / (x2 - 1.0).sqrt() - p.bc, 1.0 / (x2 - 1.0).sqrt(), max_relative = 1e-12);
        assert_abs_diff_eq!(f4_target(p.support_end() - 1e-9, &p), 0.0, epsilon = 1e-10);
        assert_eq!(f4_target(p.support_end() + 5.0, &p), 0.0);
    }

    #[test]
    fn f4_reproduces_inverse_closed_form() {
        let p = params();
        let f4 = TestFunction::new(TestKind::F4, p);
        for v in [1.2, 2.0, 2.9, 3.5, 100.0, 2400.0, 2600.0, 3500.0] {
            let lhs = f4.combination(Combination::C, v) / (v - 1.0).sqrt();
            assert_relative_eq!(lhs, f4_inverse_closed_form(v, &p), max_relative = 1e-9, epsilon = 1e-15);
        }
    }
}
