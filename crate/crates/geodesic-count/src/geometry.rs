//! Upper half-plane geometry: Möbius action, Huber coordinates adapted to the
//! imaginary axis, distances between points and between geodesics, and the
//! angle function tan v(γ e^{iθ} iy) along the axis.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::group::GroupElement;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x}, {y}) is not in the upper half-plane")]
    NotInUpperHalfPlane { x: f64, y: f64 },
    #[error("golden-section search did not converge within {iterations} iterations")]
    Convergence { iterations: usize },
    #[error("geodesics intersect or coincide (|B| = {b} ≤ 1)")]
    Intersecting { b: i128 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if y > 0.0 && x.is_finite() && y.is_finite() {
            Ok(HPoint { x, y })
        } else {
            Err(GeometryError::NotInUpperHalfPlane { x, y })
        }
    }

    /// The point iy on the imaginary axis.
    pub fn on_axis(y: f64) -> Self {
        HPoint { x: 0.0, y }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    fn from_complex(z: Complex64) -> Self {
        HPoint { x: z.re, y: z.im }
    }
}

/// (u, v) = (log|z|, −arctan(x/y)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HuberCoords {
    pub u: f64,
    pub v: f64,
}

pub fn mobius_apply(g: &GroupElement, z: HPoint) -> HPoint {
    let [a, b, c, d] = g.entries_f64();
    let z = z.to_complex();
    HPoint::from_complex((z * a + b) / (z * c + d))
}

pub fn huber_coords(z: HPoint) -> HuberCoords {
    HuberCoords {
        u: z.x.hypot(z.y).ln(),
        v: -(z.x / z.y).atan(),
    }
}

pub fn huber_to_point(h: HuberCoords) -> HPoint {
    let r = h.u.exp();
    HPoint {
        x: -r * h.v.sin(),
        y: r * h.v.cos(),
    }
}

pub fn point_distance(z: HPoint, w: HPoint) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    let q = (dx * dx + dy * dy) / (2.0 * z.y * w.y);
    // acosh(1+q) without cancellation near q = 0
    (q + (q * (q + 2.0)).sqrt()).ln_1p()
}

const GOLDEN_TOL: f64 = 1e-10;
const GOLDEN_CAP: usize = 200;

/// Minimise a unimodal function on [lo, hi]; returns (argmin, min).
fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> Result<(f64, f64), GeometryError> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (lo0, hi0) = (lo, hi);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_CAP {
        if hi - lo < GOLDEN_TOL {
            let x = 0.5 * (lo + hi);
            if x - lo0 < 10.0 * GOLDEN_TOL || hi0 - x < 10.0 * GOLDEN_TOL {
                // minimum pinned to the bracket edge
                return Err(GeometryError::Convergence { iterations: GOLDEN_CAP });
            }
            let fx = f(x);
            return Ok((x, fx.min(f1).min(f2)));
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    Err(GeometryError::Convergence { iterations: GOLDEN_CAP })
}

/// Distance from w to the imaginary axis, by minimising over the foot iy₁.
fn axis_distance_numeric(w: HPoint) -> Result<f64, GeometryError> {
    let c = w.x.hypot(w.y).ln();
    golden_section(|l| point_distance(HPoint::on_axis(l.exp()), w), c - 5.0, c + 5.0).map(|(_, d)| d)
}

/// Distance between the imaginary axis and its image under γ, by nested
/// golden-section search over the two feet in logarithmic coordinates.
pub fn geodesic_line_distance_numeric(g: &GroupElement) -> Result<f64, GeometryError> {
    let b = g.b_invariant();
    if b.abs() <= 1 {
        return Err(GeometryError::Intersecting { b });
    }
    let [a, bb, c, d] = g.entries_f64();
    let centre = 0.5 * ((bb * d).abs().ln() - (a * c).abs().ln());
    let mut err = None;
    let res = golden_section(
        |l| match axis_distance_numeric(mobius_apply(g, HPoint::on_axis(l.exp()))) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        centre - 10.0,
        centre + 10.0,
    );
    if let Some(e) = err {
        return Err(e);
    }
    res.map(|(_, d)| d)
}

/// cosh dist(γl, l) = max(|B(γ)|, 1).
pub fn dist_formula(g: &GroupElement) -> f64 {
    (g.b_invariant().abs().max(1) as f64).acosh()
}

/// Orientation of γl relative to l: (clockwise, side), where side is the sign
/// of the endpoints a/c, b/d and clockwise = sign(a/c − b/d) = sign(1/(cd)).
pub fn orientation_and_side(g: &GroupElement) -> Result<(i32, i32), GeometryError> {
    let b = g.b_invariant();
    if b.abs() <= 1 {
        return Err(GeometryError::Intersecting { b });
    }
    let [a, bb, c, d] = g.entries_f64();
    let foot1 = a / c;
    let foot2 = bb / d;
    debug_assert_eq!(foot1.signum(), foot2.signum());
    let side = foot1.signum() as i32;
    let clockwise = (c * d).signum() as i32;
    Ok((clockwise, side))
}

/// Closed form: tan v(γ e^{iθ} iy) = B tanθ − (ac·y + bd/y)/cosθ.
pub fn tan_v_along_axis(g: &GroupElement, theta: f64, y: f64) -> f64 {
    let [a, b, c, d] = g.entries_f64();
    let bv = g.b_invariant() as f64;
    bv * theta.tan() - (a * c * y + b * d / y) / theta.cos()
}

/// tan v of γ(e^{iθ} iy) computed through the Möbius action, as −x/y of the
/// image point (v = −arctan(x/y)).
pub fn tan_v_direct(g: &GroupElement, theta: f64, y: f64) -> f64 {
    let z = HPoint {
        x: -y * theta.sin(),
        y: y * theta.cos(),
    };
    let w = mobius_apply(g, z);
    -w.x / w.y
}

/// ∂/∂θ tan v(γ e^{iθ} iy) at θ = 0 by a five-point central stencil on the
/// direct evaluation.
pub fn tan_v_theta_derivative(g: &GroupElement, y: f64, h: f64) -> f64 {
    let f = |t: f64| tan_v_direct(g, t, y);
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}
