//! log Γ, Γ, 1/Γ and ψ on the complex plane.

use num_complex::Complex64;

use super::SpecFunError;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// B_{2k} / (2k(2k−1)) for k = 1..10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

/// B_{2k} / (2k) for k = 1..10.
const DIGAMMA_ASY: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
    43867.0 / 14_364.0,
    -174_611.0 / 6600.0,
];

fn is_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Number of unit shifts needed to put z in the Stirling region.
fn shift_count(z: Complex64) -> usize {
    let mut n = 0usize;
    let mut w = z;
    while w.re < 10.0 || w.norm() < 15.0 {
        w += 1.0;
        n += 1;
    }
    n
}

/// Principal branch of log Γ(z), analytic on ℂ minus (−∞, 0].
pub fn log_gamma(z: Complex64) -> Result<Complex64, SpecFunError> {
    if is_pole(z) {
        return Err(SpecFunError::Pole { at: z.re });
    }
    let n = shift_count(z);
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    for _ in 0..n {
        shift += w.ln();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    Ok((w - 0.5) * w.ln() - w + HALF_LN_2PI + series - shift)
}

pub fn gamma(z: Complex64) -> Result<Complex64, SpecFunError> {
    log_gamma(z).map(|l| l.exp())
}

/// 1/Γ(z), entire; zero at the non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    match log_gamma(z) {
        Ok(l) => (-l).exp(),
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

pub fn log_gamma_real(x: f64) -> Result<f64, SpecFunError> {
    log_gamma(Complex64::new(x, 0.0)).map(|l| l.re)
}

/// ψ(z) = Γ′(z)/Γ(z).
pub fn digamma(z: Complex64) -> Result<Complex64, SpecFunError> {
    if is_pole(z) {
        return Err(SpecFunError::Pole { at: z.re });
    }
    let n = shift_count(z);
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    for _ in 0..n {
        shift += w.inv();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv2;
    for c in DIGAMMA_ASY {
        series += pow * c;
        pow *= inv2;
    }
    Ok(w.ln() - inv * 0.5 - series - shift)
}

/// Beta function B(x, y) = Γ(x)Γ(y)/Γ(x+y).
pub fn beta(x: Complex64, y: Complex64) -> Result<Complex64, SpecFunError> {
    Ok((log_gamma(x)? + log_gamma(y)? - log_gamma(x + y)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn log_gamma_examples() {
        assert!(log_gamma(c(1.0)).unwrap().norm() < 1e-15);
        assert_relative_eq!(log_gamma(c(0.5)).unwrap().re, std::f64::consts::PI.sqrt().ln(), max_relative = 1e-14);
        assert_relative_eq!(log_gamma(c(5.0)).unwrap().re, 24f64.ln(), max_relative = 1e-14);
        assert!(matches!(log_gamma(c(-3.0)), Err(SpecFunError::Pole { .. })));
        assert!(matches!(log_gamma(c(0.0)), Err(SpecFunError::Pole { .. })));
    }

    #[test]
    fn reflection_on_negative_half_plane() {
        // Γ(z)Γ(1−z) = π / sin(πz)
        for &(x, y) in &[(-3.3, 0.7), (-12.5, 4.0), (0.2, -30.0), (-19.1, 99.0)] {
            let z = Complex64::new(x, y);
            let lhs = (log_gamma(z).unwrap() + log_gamma(1.0 - z).unwrap()).exp();
            let rhs = std::f64::consts::PI / (z * std::f64::consts::PI).sin();
            assert_relative_eq!((lhs / rhs).re, 1.0, max_relative = 1e-11);
            assert!((lhs / rhs).im.abs() < 1e-11);
        }
    }

    #[test]
    fn recurrence_on_grid() {
        for i in -20..20 {
            for j in [-100.0, -7.0, 0.3, 50.0] {
                let z = Complex64::new(i as f64 + 0.37, j);
                let d = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap() - z.ln();
                // equal modulo 2πi; both sides on the principal branch
                let k = (d.im / (2.0 * std::f64::consts::PI)).round();
                assert!(d.re.abs() < 1e-11 * (1.0 + log_gamma(z).unwrap().norm()));
                assert!((d.im - 2.0 * std::f64::consts::PI * k).abs() < 1e-9);
                let p = digamma(z + 1.0).unwrap() - digamma(z).unwrap() - z.inv();
                assert!(p.norm() < 1e-10 * (1.0 + digamma(z).unwrap().norm()));
            }
        }
    }

    #[test]
    fn digamma_examples() {
        assert_relative_eq!(digamma(c(1.0)).unwrap().re, -EULER_GAMMA, max_relative = 1e-13);
        assert_relative_eq!(
            digamma(c(0.5)).unwrap().re,
            -EULER_GAMMA - 2.0 * 2f64.ln(),
            max_relative = 1e-13
        );
        assert!(digamma(c(-2.0)).is_err());
    }

    #[test]
    fn reciprocal_gamma_vanishes_at_poles() {
        assert_eq!(rgamma(c(-4.0)), Complex64::new(0.0, 0.0));
        assert_relative_eq!(rgamma(c(3.0)).re, 0.5, max_relative = 1e-14);
    }
}
