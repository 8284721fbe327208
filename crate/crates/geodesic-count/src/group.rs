//! The arithmetic group Γ ⊂ PSL₂(ℝ) of matrices
//! `[[a, b], [p·b̄, ā]]` with a = u+v√2, b = s+t√2 and determinant one,
//! its double cosets under the diagonal subgroup generated by
//! h = diag(ε², ε⁻²), and their enumeration by |B| = |ad+bc|.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quadfield::{canonical_generators, isqrt, unit_power, QuadInt, LOG_EPS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("determinant (u²−2v²) − p(s²−2t²) = {det}, expected 1")]
    Determinant { det: i128 },
    #[error("p = {0} is not prime")]
    NotPrime(i64),
    #[error("scan height {height} is below the certified bound {required} for X = {x}")]
    HeightTooSmall { height: i64, required: i64, x: i64 },
    #[error("coordinates do not fit in 64-bit integers")]
    Overflow,
}

pub fn is_prime(p: i64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of Γ, stored as the PSL representative whose coordinate tuple
/// (u, v, s, t) is lexicographically positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroupElement {
    pub p: i64,
    pub u: i64,
    pub v: i64,
    pub s: i64,
    pub t: i64,
}

impl GroupElement {
    pub fn identity(p: i64) -> Self {
        GroupElement { p, u: 1, v: 0, s: 0, t: 0 }
    }

    /// The generator h = diag(ε², ε⁻²) of the axis stabiliser.
    pub fn h(p: i64) -> Self {
        GroupElement { p, u: 3, v: 2, s: 0, t: 0 }
    }

    pub fn a(&self) -> QuadInt {
        QuadInt::new(self.u as i128, self.v as i128)
    }

    pub fn b(&self) -> QuadInt {
        QuadInt::new(self.s as i128, self.t as i128)
    }

    pub fn c(&self) -> QuadInt {
        self.b().conj().scale(self.p as i128)
    }

    pub fn d(&self) -> QuadInt {
        self.a().conj()
    }

    /// N(a), which is ad.
    pub fn norm_a(&self) -> i128 {
        self.a().norm()
    }

    /// N(b); bc = p·N(b).
    pub fn norm_b(&self) -> i128 {
        self.b().norm()
    }

    /// B(γ) = ad + bc = N(a) + p·N(b).
    pub fn b_invariant(&self) -> i128 {
        self.norm_a() + self.p as i128 * self.norm_b()
    }

    /// Entries (a, b, c, d) in the real embedding √2 ↦ 1.41421…
    pub fn entries_f64(&self) -> [f64; 4] {
        [
            self.a().to_f64(),
            self.b().to_f64(),
            self.c().to_f64(),
            self.d().to_f64(),
        ]
    }

    pub fn is_identity(&self) -> bool {
        self.s == 0 && self.t == 0
    }

    pub fn inverse(&self) -> GroupElement {
        from_entries(self.p, self.a().conj(), -self.b()).expect("inverse of a valid element")
    }

    /// Matrix product self·other.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        assert_eq!(self.p, other.p, "elements of different groups");
        let p = self.p as i128;
        let a = self.a() * other.a() + (self.b() * other.b().conj()).scale(p);
        let b = self.a() * other.b() + self.b() * other.a().conj();
        from_entries(self.p, a, b).expect("product stays in Γ")
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[p={}; a={}, b={}]", self.p, self.a(), self.b())
    }
}

fn psl_normalise(mut e: GroupElement) -> GroupElement {
    let key = [e.u, e.v, e.s, e.t];
    if key.iter().find(|&&c| c != 0).copied().unwrap_or(1) < 0 {
        e.u = -e.u;
        e.v = -e.v;
        e.s = -e.s;
        e.t = -e.t;
    }
    e
}

/// Build and validate an element from its coordinates.
pub fn make_element(p: i64, u: i64, v: i64, s: i64, t: i64) -> Result<GroupElement, GroupError> {
    if !is_prime(p) {
        return Err(GroupError::NotPrime(p));
    }
    let e = GroupElement { p, u, v, s, t };
    let det = e.norm_a() - p as i128 * e.norm_b();
    if det != 1 {
        return Err(GroupError::Determinant { det });
    }
    Ok(psl_normalise(e))
}

fn from_entries(p: i64, a: QuadInt, b: QuadInt) -> Result<GroupElement, GroupError> {
    let cvt = |x: i128| i64::try_from(x).map_err(|_| GroupError::Overflow);
    let e = GroupElement {
        p,
        u: cvt(a.x)?,
        v: cvt(a.y)?,
        s: cvt(b.x)?,
        t: cvt(b.y)?,
    };
    let det = a.norm() - p as i128 * b.norm();
    if det != 1 {
        return Err(GroupError::Determinant { det });
    }
    Ok(psl_normalise(e))
}

/// (sign(ab), sign(ac)), exact in ℤ[√2].
pub fn sign_class(g: &GroupElement) -> (i32, i32) {
    let sa = g.a().signum();
    (sa * g.b().signum(), sa * g.c().signum())
}

/// Ideal data attached to a class: (a) has norm `na`, (b) has norm `nb`,
/// and `branch` = sign N(a), i.e. N(𝔞) − pN(𝔟) = branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IdealPair {
    pub na: u64,
    pub nb: u64,
    pub branch: i32,
}

/// A double coset ⟨h⟩γ⟨h⟩ with its canonical representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DoubleCosetClass {
    pub rep: GroupElement,
    pub b_value: i128,
    pub mu: i32,
    pub mu_prime: i32,
    pub ideal_pair: IdealPair,
    pub fiber_index: u8,
}

impl DoubleCosetClass {
    pub fn is_identity(&self) -> bool {
        self.rep.is_identity()
    }

    /// sign(ad) = sign N(a); +1 for the identity.
    pub fn sign_ad(&self) -> i32 {
        self.ideal_pair.branch
    }
}

impl PartialOrd for DoubleCosetClass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DoubleCosetClass {
    fn cmp(&self, other: &Self) -> Ordering {
        self.b_value
            .abs()
            .cmp(&other.b_value.abs())
            .then_with(|| self.rep.cmp(&other.rep))
    }
}

fn eps_pow_even(k: i64) -> QuadInt {
    unit_power(2 * k).expect("unit power within range")
}

/// Scale a nonzero x by ε^{2k} (k ≡ parity mod 2 when `step` = 2) so that
/// |x|/|x̄| lands in [1, ε^{4·step}).
fn window_exponent(x: QuadInt, step: i64, parity: i64) -> (i64, QuadInt) {
    let xf = x.to_f64().abs();
    let nf = (x.norm() as f64).abs();
    // log(|x|/|x̄|) = 2 log|x| − log|N(x)|
    let l = 2.0 * xf.ln() - nf.ln();
    let mut k = (-l / (4.0 * LOG_EPS)).floor() as i64;
    if step == 2 && (k - parity).rem_euclid(2) != 0 {
        k += 1;
    }
    let upper = unit_power(4 * step).expect("small unit power");
    loop {
        let y = x * eps_pow_even(k);
        let ya = y.abs();
        let yc = y.conj().abs();
        if ya.cmp_real(yc) == Ordering::Less {
            k += step;
            continue;
        }
        if ya.cmp_real(upper * yc) != Ordering::Less {
            k -= step;
            continue;
        }
        return (k, y);
    }
}

/// Canonical representative of the double coset of γ.
///
/// Orbit of (a, b): (±ε^{2α}a, ±ε^{2β}b) with α ≡ β (mod 2) and a common sign.
/// The representative has a > 0 with a/√|N(a)| ∈ [1, ε²) (fixing α), then
/// |b|/√|N(b)| ∈ [1, ε⁴) with β of the parity of α.
pub fn canonical_double_coset(g: &GroupElement) -> DoubleCosetClass {
    let p = g.p;
    if g.is_identity() {
        return DoubleCosetClass {
            rep: GroupElement::identity(p),
            b_value: 1,
            mu: 0,
            mu_prime: 0,
            ideal_pair: IdealPair { na: 1, nb: 0, branch: 1 },
            fiber_index: 0,
        };
    }
    let (mut a, mut b) = (g.a(), g.b());
    if a.signum() < 0 {
        a = -a;
        b = -b;
    }
    let (alpha, a1) = window_exponent(a, 1, 0);
    let (_, b1) = window_exponent(b, 2, alpha.rem_euclid(2));
    let eps4 = QuadInt::new(17, 12);
    let q = (b1.abs().cmp_real(eps4 * b1.conj().abs()) != Ordering::Less) as u8;
    let neg = (b1.signum() < 0) as u8;
    let rep = from_entries(p, a1, b1).expect("canonical rep stays in Γ");
    let na = a1.norm();
    let nb = b1.norm();
    let mu = a1.signum() * b1.signum();
    let mu_prime = a1.signum() * b1.conj().signum();
    DoubleCosetClass {
        rep,
        b_value: na + p as i128 * nb,
        mu,
        mu_prime,
        ideal_pair: IdealPair {
            na: na.unsigned_abs() as u64,
            nb: nb.unsigned_abs() as u64,
            branch: na.signum() as i32,
        },
        fiber_index: 2 * q + neg,
    }
}

/// The four classes over one ideal pair, from generators a₀, b₀ with
/// N(a₀) − pN(b₀) = 1: (a₀,b₀), (−a₀,b₀), (ε²a₀,b₀), (−ε²a₀,b₀).
fn fiber(p: i64, a0: QuadInt, b0: QuadInt) -> [DoubleCosetClass; 4] {
    let e2 = QuadInt::new(3, 2);
    [a0, -a0, e2 * a0, -(e2 * a0)].map(|a| {
        let g = from_entries(p, a, b0).expect("fiber element in Γ");
        canonical_double_coset(&g)
    })
}

/// All double cosets with |B| ≤ X, built from pairs of ideals (𝔞, 𝔟) with
/// N(𝔞) = pN(𝔟) ± 1, four classes per pair, plus the identity.
pub fn enumerate_double_cosets(p: i64, x: i64) -> Vec<DoubleCosetClass> {
    assert!(is_prime(p), "p must be prime");
    let mut out = vec![canonical_double_coset(&GroupElement::identity(p))];
    if x < 1 {
        return out;
    }
    let eps = QuadInt::EPS;
    let mut tasks = Vec::new();
    for branch in [1i64, -1] {
        let mut m = 1i64;
        while 2 * p * m + branch <= x {
            tasks.push((m, branch));
            m += 1;
        }
    }
    let mut found: Vec<DoubleCosetClass> = tasks
        .par_iter()
        .flat_map_iter(|&(m, branch)| {
            let na = (p * m + branch) as u64;
            let gens_a = canonical_generators(na);
            let gens_b = canonical_generators(m as u64);
            let mut v = Vec::with_capacity(4 * gens_a.len() * gens_b.len());
            for &ga in &gens_a {
                for &gb in &gens_b {
                    let (a0, b0) = if branch > 0 { (ga, gb) } else { (eps * ga, eps * gb) };
                    debug_assert_eq!(a0.norm() - p as i128 * b0.norm(), 1);
                    v.extend(fiber(p, a0, b0));
                }
            }
            v
        })
        .collect();
    for c in &found {
        // a = d = 0 would need pN(b) = −1
        assert!(!c.rep.a().is_zero(), "element with vanishing diagonal");
    }
    out.append(&mut found);
    out.sort();
    out
}

/// Coordinate bound satisfied by every canonical representative with |B| ≤ X.
pub fn certified_height(p: i64, x: i64) -> i64 {
    let e2 = 1.0 + 2.0f64.sqrt();
    let e2 = e2 * e2;
    let e4 = e2 * e2;
    let na_max = ((x + 1) / 2) as f64;
    let m_max = ((x + 1) / (2 * p)) as f64;
    let ab = (e2 + 1.0) / 2.0 * na_max.sqrt();
    let st = (e4 + 1.0) / 2.0 * m_max.sqrt();
    ab.max(st).floor() as i64
}

/// Independent oracle: scan all (u, v, s, t) with coordinates bounded by
/// `height`, determinant one and |B| ≤ X, and reduce to distinct classes.
pub fn lattice_scan_oracle(p: i64, x: i64, height: i64) -> Result<Vec<DoubleCosetClass>, GroupError> {
    if !is_prime(p) {
        return Err(GroupError::NotPrime(p));
    }
    let required = certified_height(p, x);
    if height < required {
        return Err(GroupError::HeightTooSmall { height, required, x });
    }
    let h = height as i128;
    let k = ((x + 1) / 2) as i128;
    let pp = p as i128;
    let rows: Vec<BTreeSet<DoubleCosetClass>> = (-h..=h)
        .into_par_iter()
        .map(|v| {
            let mut set = BTreeSet::new();
            let lo = isqrt((2 * v * v - k).max(0));
            let hi = isqrt(2 * v * v + k).min(h);
            for um in lo.max(0)..=hi {
                let na = um * um - 2 * v * v;
                if na.abs() > k || (2 * na - 1).abs() > x as i128 {
                    continue;
                }
                if (na - 1) % pp != 0 {
                    continue;
                }
                let nb = (na - 1) / pp;
                for t in -h..=h {
                    let ss = nb + 2 * t * t;
                    if ss < 0 {
                        continue;
                    }
                    let s = isqrt(ss);
                    if s * s != ss || s > h {
                        continue;
                    }
                    for u in [um, -um] {
                        for s in [s, -s] {
                            let g = GroupElement {
                                p,
                                u: u as i64,
                                v: v as i64,
                                s: s as i64,
                                t: t as i64,
                            };
                            set.insert(canonical_double_coset(&g));
                        }
                    }
                }
            }
            set
        })
        .collect();
    let mut all = BTreeSet::new();
    for r in rows {
        all.extend(r);
    }
    Ok(all.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_examples() {
        let g = make_element(7, 4, 2, 1, 0).unwrap();
        assert_eq!(g.b_invariant(), 15);
        let g = make_element(3, 0, 1, 1, 1).unwrap();
        assert_eq!(g.b_invariant(), -5);
        assert_eq!(
            make_element(3, 1, 0, 1, 0),
            Err(GroupError::Determinant { det: -2 })
        );
    }

    #[test]
    fn b_two_ways() {
        for c in enumerate_double_cosets(5, 200) {
            let g = c.rep;
            assert_eq!(g.b_invariant(), 2 * g.norm_a() - 1);
        }
    }

    #[test]
    fn psl_normalisation() {
        let g = make_element(7, -4, -2, -1, 0).unwrap();
        assert_eq!((g.u, g.v, g.s, g.t), (4, 2, 1, 0));
    }

    #[test]
    fn sign_examples() {
        assert_eq!(sign_class(&make_element(7, 4, 2, 1, 0).unwrap()), (1, 1));
        assert_eq!(sign_class(&GroupElement::identity(3)), (0, 0));
        assert_eq!(sign_class(&make_element(3, 0, 1, 1, 1).unwrap()), (1, -1));
    }

    #[test]
    fn double_coset_invariance() {
        let g = make_element(7, 4, 2, 1, 0).unwrap();
        let h = GroupElement::h(7);
        let hgh = h.compose(&g).compose(&h);
        assert_eq!(canonical_double_coset(&g), canonical_double_coset(&hgh));
        let neg = make_element(7, -4, -2, 1, 0).unwrap();
        assert_ne!(canonical_double_coset(&g), canonical_double_coset(&neg));
        let id = canonical_double_coset(&GroupElement::identity(7));
        assert_eq!(id.b_value, 1);
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_double_cosets(3, 10).len(), 9);
        assert_eq!(enumerate_double_cosets(3, 4).len(), 1);
        assert_eq!(enumerate_double_cosets(7, 15).len(), 5);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(lattice_scan_oracle(3, 10, 40).unwrap(), enumerate_double_cosets(3, 10));
        assert_eq!(lattice_scan_oracle(3, 4, 40).unwrap().len(), 1);
        assert_eq!(lattice_scan_oracle(2, 20, 40).unwrap(), enumerate_double_cosets(2, 20));
        assert!(matches!(
            lattice_scan_oracle(2, 20, 5),
            Err(GroupError::HeightTooSmall { .. })
        ));
    }

    #[test]
    fn fibers_have_alternating_signs() {
        let classes = enumerate_double_cosets(3, 300);
        let mut by_pair = std::collections::BTreeMap::<IdealPair, Vec<_>>::new();
        for c in classes.iter().filter(|c| !c.is_identity()) {
            by_pair.entry(c.ideal_pair).or_default().push(*c);
        }
        for (_, cs) in by_pair {
            assert_eq!(cs.len() % 4, 0);
            let mu: i32 = cs.iter().map(|c| c.mu).sum();
            let mp: i32 = cs.iter().map(|c| c.mu_prime).sum();
            assert_eq!((mu, mp), (0, 0));
        }
    }

    #[test]
    fn vanishing_diagonal_is_impossible() {
        for p in [2, 3, 5, 7] {
            for c in enumerate_double_cosets(p, 500) {
                assert!(c.b_value.abs() > 1 || c.is_identity());
                assert_ne!(c.b_value, -1);
            }
        }
    }
}
