//! Exact scalar arithmetic: Laurent polynomials in `q` with rational
//! coefficients, and the fraction field built on top of them.
//!
//! Every computation in this crate is exact. There is no floating point
//! anywhere; coefficients are arbitrary-precision rationals and the
//! deformation parameter `q` is a formal variable.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// A Laurent polynomial in `q`: a finite map from integer exponents to
/// nonzero rational coefficients. The zero polynomial is the empty map.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LaurentScalar {
    terms: BTreeMap<i64, BigRational>,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl LaurentScalar {
    pub fn zero() -> Self {
        LaurentScalar { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::monomial(BigRational::one(), 0)
    }

    /// The monomial `c * q^exp`; collapses to zero when `c == 0`.
    pub fn monomial(c: BigRational, exp: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        LaurentScalar { terms }
    }

    pub fn from_int(n: i64) -> Self {
        Self::monomial(BigRational::from(BigInt::from(n)), 0)
    }

    /// The variable `q` itself.
    pub fn q() -> Self {
        Self::monomial(BigRational::one(), 1)
    }

    /// `q^n` for any integer `n` (negative allowed).
    pub fn q_pow(n: i64) -> Self {
        Self::monomial(BigRational::one(), n)
    }

    /// `q - q^-1`, the Hecke gap.
    pub fn hecke_gap() -> Self {
        Self::q_pow(1) - Self::q_pow(-1)
    }

    /// `q + q^-1`.
    pub fn q_plus_qinv() -> Self {
        Self::q_pow(1) + Self::q_pow(-1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self.terms.get(&0).map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeff(&self, exp: i64) -> BigRational {
        self.terms.get(&exp).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    fn insert_term(&mut self, exp: i64, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// Exponent-negation `q -> q^-1`; an involution.
    pub fn bar(&self) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            out.insert_term(-e, c.clone());
        }
        out
    }

    /// Multiply by `q^n`.
    pub fn shift(&self, n: i64) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            out.insert_term(e + n, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero();
        for (e, k) in &self.terms {
            out.insert_term(*e, k * c);
        }
        out
    }

    /// Exact evaluation at a nonzero rational point.
    ///
    /// Returns `None` when `q0 == 0` (negative exponents make 0 illegal).
    pub fn eval(&self, q0: &BigRational) -> Option<BigRational> {
        if q0.is_zero() {
            return None;
        }
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            acc += c * rational_pow(q0, *e);
        }
        Some(acc)
    }

    /// Substitute `q = q0`, producing a constant Laurent scalar.
    pub fn specialize(&self, q0: &BigRational) -> Option<Self> {
        self.eval(q0).map(|v| Self::monomial(v, 0))
    }
}

fn rational_pow(base: &BigRational, exp: i64) -> BigRational {
    if exp == 0 {
        return BigRational::one();
    }
    // num-rational's pow takes i32; desk-scale exponents always fit.
    let p = base.pow(exp.unsigned_abs() as i32);
    if exp < 0 {
        p.recip()
    } else {
        p
    }
}

impl Add for &LaurentScalar {
    type Output = LaurentScalar;
    fn add(self, rhs: &LaurentScalar) -> LaurentScalar {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &LaurentScalar {
    type Output = LaurentScalar;
    fn sub(self, rhs: &LaurentScalar) -> LaurentScalar {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert_term(*e, -c.clone());
        }
        out
    }
}

impl Mul for &LaurentScalar {
    type Output = LaurentScalar;
    fn mul(self, rhs: &LaurentScalar) -> LaurentScalar {
        let mut out = LaurentScalar::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                out.insert_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &LaurentScalar {
    type Output = LaurentScalar;
    fn neg(self) -> LaurentScalar {
        let mut out = LaurentScalar::zero();
        for (e, c) in &self.terms {
            out.insert_term(*e, -c.clone());
        }
        out
    }
}

macro_rules! forward_owned_binop {
    ($t:ty, $tr:ident, $m:ident) => {
        impl $tr for $t {
            type Output = $t;
            fn $m(self, rhs: $t) -> $t {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned_binop!(LaurentScalar, Add, add);
forward_owned_binop!(LaurentScalar, Sub, sub);
forward_owned_binop!(LaurentScalar, Mul, mul);

impl Neg for LaurentScalar {
    type Output = LaurentScalar;
    fn neg(self) -> LaurentScalar {
        -&self
    }
}

impl AddAssign<&LaurentScalar> for LaurentScalar {
    fn add_assign(&mut self, rhs: &LaurentScalar) {
        for (e, c) in &rhs.terms {
            self.insert_term(*e, c.clone());
        }
    }
}

impl SubAssign<&LaurentScalar> for LaurentScalar {
    fn sub_assign(&mut self, rhs: &LaurentScalar) {
        for (e, c) in &rhs.terms {
            self.insert_term(*e, -c.clone());
        }
    }
}

impl MulAssign<&LaurentScalar> for LaurentScalar {
    fn mul_assign(&mut self, rhs: &LaurentScalar) {
        *self = &*self * rhs;
    }
}

fn fmt_rational(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for LaurentScalar {
    /// Canonical rendering: terms in ascending exponent, e.g.
    /// `-q^-1 + 2 + q^3`. Used verbatim in reports.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let unit_coeff = abs.is_one();
            match (*e, unit_coeff) {
                (0, _) => write!(f, "{}", fmt_rational(&abs))?,
                (1, true) => write!(f, "q")?,
                (1, false) => write!(f, "{}*q", fmt_rational(&abs))?,
                (_, true) => write!(f, "q^{}", e)?,
                (_, false) => write!(f, "{}*q^{}", fmt_rational(&abs), e)?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Polynomial gcd over Q[q] of the "ordinary" parts (exponents shifted to
/// start at 0). Returns a polynomial with lowest coefficient 1.
fn poly_gcd(a: &LaurentScalar, b: &LaurentScalar) -> LaurentScalar {
    if a.is_zero() {
        return normalize_unit(b);
    }
    if b.is_zero() {
        return normalize_unit(a);
    }
    let mut x = a.shift(-a.min_exp().unwrap());
    let mut y = b.shift(-b.min_exp().unwrap());
    while !y.is_zero() {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
    }
    normalize_unit(&x)
}

/// Remainder of ordinary-polynomial division (inputs must have min_exp 0).
fn poly_rem(a: &LaurentScalar, b: &LaurentScalar) -> LaurentScalar {
    let mut r = a.clone();
    let db = b.max_exp().unwrap();
    let lb = b.coeff(db);
    while !r.is_zero() && r.max_exp().unwrap() >= db {
        let dr = r.max_exp().unwrap();
        let factor = LaurentScalar::monomial(r.coeff(dr) / lb.clone(), dr - db);
        r -= &(&factor * b);
    }
    if r.is_zero() {
        r
    } else {
        r.shift(-r.min_exp().unwrap())
    }
}

/// Strip the unit `c * q^k` so the lowest term becomes `1 * q^0`.
fn normalize_unit(a: &LaurentScalar) -> LaurentScalar {
    if a.is_zero() {
        return a.clone();
    }
    let e = a.min_exp().unwrap();
    let c = a.coeff(e);
    a.shift(-e).scale(&c.recip())
}

/// An exact element of the fraction field Q(q), stored as a reduced ratio of
/// Laurent polynomials. The denominator is kept canonical: an ordinary
/// polynomial with constant term 1. Almost every scalar in practice has
/// denominator 1 or a power of `q + q^-1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    num: LaurentScalar,
    den: LaurentScalar,
}

impl Scalar {
    pub fn from_poly(num: LaurentScalar) -> Self {
        Scalar { num, den: LaurentScalar::one() }
    }

    pub fn new(num: LaurentScalar, den: LaurentScalar) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut s = Scalar { num, den };
        s.reduce();
        s
    }

    pub fn zero() -> Self {
        Self::from_poly(LaurentScalar::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(LaurentScalar::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_poly(LaurentScalar::from_int(n))
    }

    pub fn q_pow(n: i64) -> Self {
        Self::from_poly(LaurentScalar::q_pow(n))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn numer(&self) -> &LaurentScalar {
        &self.num
    }

    pub fn denom(&self) -> &LaurentScalar {
        &self.den
    }

    /// The polynomial content when the denominator is 1.
    pub fn as_poly(&self) -> Option<&LaurentScalar> {
        if self.den.is_one() {
            Some(&self.num)
        } else {
            None
        }
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = LaurentScalar::one();
            return;
        }
        let g = poly_gcd(&self.num, &self.den);
        if !g.is_one() {
            self.num = poly_div_exact(&self.num, &g);
            self.den = poly_div_exact(&self.den, &g);
        }
        // Canonical denominator: ordinary polynomial, constant term 1.
        let e = self.den.min_exp().unwrap();
        let c = self.den.coeff(e);
        self.den = self.den.shift(-e).scale(&c.recip());
        self.num = self.num.shift(-e).scale(&c.recip());
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero scalar");
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn bar(&self) -> Self {
        Self::new(self.num.bar(), self.den.bar())
    }

    /// Exact evaluation at nonzero rational `q0`; `None` if `q0` is zero or a
    /// pole of the denominator.
    pub fn eval(&self, q0: &BigRational) -> Option<BigRational> {
        let d = self.den.eval(q0)?;
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(q0)? / d)
    }

    pub fn specialize(&self, q0: &BigRational) -> Option<Self> {
        self.eval(q0)
            .map(|v| Self::from_poly(LaurentScalar::monomial(v, 0)))
    }

    /// Whether this scalar is a single monomial `c * q^k`; returns `(c, k)`.
    pub fn as_monomial(&self) -> Option<(BigRational, i64)> {
        let p = self.as_poly()?;
        if p.terms.len() == 1 {
            let (e, c) = p.terms.iter().next().unwrap();
            Some((c.clone(), *e))
        } else {
            None
        }
    }
}

/// Exact division, used only when divisibility is guaranteed by a prior gcd.
fn poly_div_exact(a: &LaurentScalar, b: &LaurentScalar) -> LaurentScalar {
    if a.is_zero() {
        return LaurentScalar::zero();
    }
    let sa = a.min_exp().unwrap();
    let sb = b.min_exp().unwrap();
    let mut r = a.shift(-sa);
    let bb = b.shift(-sb);
    let db = bb.max_exp().unwrap();
    let lb = bb.coeff(db);
    let mut quo = LaurentScalar::zero();
    while !r.is_zero() {
        let dr = r.max_exp().unwrap();
        debug_assert!(dr >= db, "non-exact polynomial division");
        let factor = LaurentScalar::monomial(r.coeff(dr) / lb.clone(), dr - db);
        r -= &(&factor * &bb);
        quo += &factor;
    }
    quo.shift(sa - sb)
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        Scalar::new(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar::new(
            &(&self.num * &rhs.den) - &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        Scalar::new(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { num: -&self.num, den: self.den.clone() }
    }
}

forward_owned_binop!(Scalar, Add, add);
forward_owned_binop!(Scalar, Sub, sub);
forward_owned_binop!(Scalar, Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        *self = &*self + rhs;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        *self = &*self * rhs;
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// The deformation parameter: either the generic formal variable `q`, or a
/// concrete nonzero rational specialization. Every constructor in the crate
/// draws its q-powers from one of these, so specialized builds stay exact
/// and internally consistent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QParam(Option<BigRational>);

impl QParam {
    pub fn generic() -> Self {
        QParam(None)
    }

    /// Specialize at a nonzero rational point.
    pub fn at(q0: BigRational) -> Self {
        assert!(!q0.is_zero(), "q must be nonzero");
        QParam(Some(q0))
    }

    pub fn is_generic(&self) -> bool {
        self.0.is_none()
    }

    pub fn point(&self) -> Option<&BigRational> {
        self.0.as_ref()
    }

    pub fn q_pow(&self, n: i64) -> Scalar {
        match &self.0 {
            None => Scalar::q_pow(n),
            Some(q0) => Scalar::from_poly(LaurentScalar::monomial(
                rational_pow(q0, n),
                0,
            )),
        }
    }

    /// `q - q^-1`.
    pub fn gap(&self) -> Scalar {
        &self.q_pow(1) - &self.q_pow(-1)
    }

    /// `q + q^-1`.
    pub fn q_plus_qinv(&self) -> Scalar {
        &self.q_pow(1) + &self.q_pow(-1)
    }

    /// Specialize a symbolic scalar to this parameter (identity when
    /// generic). Panics on a pole, which cannot happen for the unitless
    /// denominators used in this crate away from roots of q + q^-1.
    pub fn apply(&self, s: &Scalar) -> Scalar {
        match &self.0 {
            None => s.clone(),
            Some(q0) => s.specialize(q0).expect("pole at specialized q"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> LaurentScalar {
        LaurentScalar::q()
    }

    #[test]
    fn qparam_consistency() {
        let g = QParam::generic();
        assert_eq!(g.q_pow(2), Scalar::q_pow(2));
        let p = QParam::at(rat(2, 1));
        assert_eq!(p.q_pow(-1), Scalar::from_poly(LaurentScalar::monomial(rat(1, 2), 0)));
        assert_eq!(p.gap(), Scalar::from_poly(LaurentScalar::monomial(rat(3, 2), 0)));
        assert_eq!(p.apply(&Scalar::q_pow(3)), Scalar::from_poly(LaurentScalar::monomial(rat(8, 1), 0)));
    }

    #[test]
    fn gap_product() {
        // (q - q^-1)(q + q^-1) = q^2 - q^-2
        let lhs = &LaurentScalar::hecke_gap() * &LaurentScalar::q_plus_qinv();
        let expect = LaurentScalar::q_pow(2) - LaurentScalar::q_pow(-2);
        assert_eq!(lhs, expect);
    }

    #[test]
    fn gap_square() {
        // (q - q^-1)^2 = q^2 - 2 + q^-2
        let g = LaurentScalar::hecke_gap();
        let expect = LaurentScalar::q_pow(2) - LaurentScalar::from_int(2)
            + LaurentScalar::q_pow(-2);
        assert_eq!(&g * &g, expect);
    }

    #[test]
    fn annihilator() {
        let x = q() - LaurentScalar::q_pow(-3);
        assert!((&x * &LaurentScalar::zero()).is_zero());
    }

    #[test]
    fn eval_points() {
        let p = LaurentScalar::q_pow(2) - LaurentScalar::q_pow(-2);
        assert_eq!(p.eval(&rat(1, 1)).unwrap(), rat(0, 1));
        assert_eq!(q().eval(&rat(3, 2)).unwrap(), rat(3, 2));
        let g = LaurentScalar::hecke_gap();
        assert_eq!(g.eval(&rat(2, 1)).unwrap(), rat(3, 2));
        assert!(g.eval(&rat(0, 1)).is_none());
    }

    #[test]
    fn bar_involution() {
        assert_eq!(q().bar(), LaurentScalar::q_pow(-1));
        let g = LaurentScalar::hecke_gap();
        assert_eq!(g.bar(), -g.clone());
        let x = &g * &q() + LaurentScalar::from_int(7);
        assert_eq!(x.bar().bar(), x);
    }

    #[test]
    fn display_ascending() {
        let x = LaurentScalar::q_pow(3) + LaurentScalar::from_int(2)
            - LaurentScalar::q_pow(-1);
        assert_eq!(x.to_string(), "-q^-1 + 2 + q^3");
        assert_eq!(LaurentScalar::zero().to_string(), "0");
        let y = LaurentScalar::monomial(rat(3, 2), 2);
        assert_eq!(y.to_string(), "3/2*q^2");
    }

    #[test]
    fn fraction_reduction() {
        // (q^2 - q^-2) / (q + q^-1) reduces to q - q^-1
        let s = Scalar::new(
            LaurentScalar::q_pow(2) - LaurentScalar::q_pow(-2),
            LaurentScalar::q_plus_qinv(),
        );
        assert_eq!(s, Scalar::from_poly(LaurentScalar::hecke_gap()));
        assert!(s.as_poly().is_some());
    }

    #[test]
    fn fraction_field_ops() {
        let a = Scalar::new(LaurentScalar::one(), LaurentScalar::q_plus_qinv());
        let b = a.recip();
        assert!( (&a * &b).is_one());
        let c = &a + &a;
        assert_eq!(
            c,
            Scalar::new(LaurentScalar::from_int(2), LaurentScalar::q_plus_qinv())
        );
        assert!((&a - &a).is_zero());
    }

    #[test]
    fn fraction_eval() {
        let a = Scalar::new(LaurentScalar::one(), LaurentScalar::q_plus_qinv());
        assert_eq!(a.eval(&rat(2, 1)).unwrap(), rat(2, 5));
        assert_eq!(a.eval(&rat(1, 1)).unwrap(), rat(1, 2));
    }
}
