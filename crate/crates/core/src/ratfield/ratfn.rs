//! Rational functions in canonical form.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::{Poly, RatFieldError, Rational};

/// A rational function `num / den` over Q.
///
/// Canonical form: `num` and `den` are coprime and `den` is monic. The zero
/// function is `0 / 1`. Equality of values is equality of the stored pair.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    pub fn zero() -> Self {
        RatFn { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFn { num: Poly::one(), den: Poly::one() }
    }

    pub fn z() -> Self {
        RatFn { num: Poly::z(), den: Poly::one() }
    }

    pub fn constant(c: Rational) -> Self {
        RatFn { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn from_int(c: i64) -> Self {
        RatFn::constant(Rational::from_integer(c.into()))
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFn { num: p, den: Poly::one() }
    }

    /// Builds `num / den`, reducing to canonical form.
    pub fn new(num: Poly, den: Poly) -> Result<Self, RatFieldError> {
        if den.is_zero() {
            return Err(RatFieldError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(RatFn::zero());
        }
        let g = num.gcd(&den)?;
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.exact_div(&g)?, den.exact_div(&g)?)
        };
        Ok(Self::from_coprime(num, den))
    }

    /// Assumes `num` and `den` coprime; only rescales to a monic denominator.
    fn from_coprime(num: Poly, den: Poly) -> Self {
        let lc = den.leading_coeff().expect("nonzero denominator").clone();
        if lc.is_one() {
            RatFn { num, den }
        } else {
            let inv = lc.recip();
            RatFn { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    /// `max(deg num, deg den)`.
    pub fn degree(&self) -> usize {
        self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0))
    }

    pub fn inv(&self) -> Result<RatFn, RatFieldError> {
        if self.is_zero() {
            return Err(RatFieldError::DivisionByZero);
        }
        Ok(Self::from_coprime(self.den.clone(), self.num.clone()))
    }

    pub fn scale(&self, c: &Rational) -> RatFn {
        if c.is_zero() {
            return RatFn::zero();
        }
        RatFn { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn checked_div(&self, rhs: &RatFn) -> Result<RatFn, RatFieldError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn pow(&self, mut e: u32) -> RatFn {
        let mut base = self.clone();
        let mut acc = RatFn::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// The conjugation involution `(f/g)* = f*/g* · z^(deg g - deg f)`.
    ///
    /// On the unit circle this agrees with `r(conj ζ)`.
    pub fn conj(&self) -> RatFn {
        let Some(df) = self.num.degree() else {
            return RatFn::zero();
        };
        let dg = self.den.degree().expect("nonzero denominator");
        let (mut num, mut den) = (self.num.conj(), self.den.conj());
        // Both reversals have nonzero constant terms, so neither shares a
        // factor with z, and reversal preserves coprimality.
        if dg >= df {
            num = num.shift(dg - df);
        } else {
            den = den.shift(df - dg);
        }
        Self::from_coprime(num, den)
    }

    pub fn eval_rational(&self, x: &Rational) -> Result<Rational, RatFieldError> {
        let d = self.den.eval_rational(x);
        if d.is_zero() {
            return Err(RatFieldError::PoleRational(x.clone()));
        }
        Ok(self.num.eval_rational(x) / d)
    }

    /// Floating evaluation; a denominator that vanishes to working precision is a pole.
    pub fn eval_complex(&self, x: Complex64) -> Result<Complex64, RatFieldError> {
        let d = self.den.eval_complex(x);
        let scale = self.den.eval_abs_bound(x.norm()).max(f64::MIN_POSITIVE);
        if d.norm() <= 1e-13 * scale {
            return Err(RatFieldError::Pole { re: x.re, im: x.im });
        }
        Ok(self.num.eval_complex(x) / d)
    }

    /// Evaluation at `e^{iθ}` on the unit circle.
    pub fn eval_unit(&self, theta: f64) -> Result<Complex64, RatFieldError> {
        self.eval_complex(Complex64::from_polar(1.0, theta))
    }
}

impl Default for RatFn {
    fn default() -> Self {
        RatFn::zero()
    }
}

impl From<Poly> for RatFn {
    fn from(p: Poly) -> Self {
        RatFn::from_poly(p)
    }
}

impl From<Rational> for RatFn {
    fn from(c: Rational) -> Self {
        RatFn::constant(c)
    }
}

impl Add for &RatFn {
    type Output = RatFn;
    fn add(self, rhs: &RatFn) -> RatFn {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RatFn::new(&self.num + &rhs.num, self.den.clone()).expect("nonzero denominator");
        }
        let g = self.den.gcd(&rhs.den).expect("nonzero denominators");
        if g.is_one() {
            let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
            if num.is_zero() {
                return RatFn::zero();
            }
            return RatFn { num, den: &self.den * &rhs.den };
        }
        let b1 = self.den.exact_div(&g).expect("gcd divides");
        let d1 = rhs.den.exact_div(&g).expect("gcd divides");
        let t = &(&self.num * &d1) + &(&rhs.num * &b1);
        if t.is_zero() {
            return RatFn::zero();
        }
        let g2 = t.gcd(&g).expect("nonzero");
        if g2.is_one() {
            RatFn { num: t, den: &(&b1 * &d1) * &g }
        } else {
            let num = t.exact_div(&g2).expect("gcd divides");
            let den = &(&b1 * &d1) * &g.exact_div(&g2).expect("gcd divides");
            RatFn { num, den }
        }
    }
}

impl Neg for &RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        RatFn { num: -&self.num, den: self.den.clone() }
    }
}

impl Sub for &RatFn {
    type Output = RatFn;
    fn sub(self, rhs: &RatFn) -> RatFn {
        self + &(-rhs)
    }
}

impl Mul for &RatFn {
    type Output = RatFn;
    fn mul(self, rhs: &RatFn) -> RatFn {
        if self.is_zero() || rhs.is_zero() {
            return RatFn::zero();
        }
        if self.is_constant() {
            return rhs.scale(&self.num.constant_term());
        }
        if rhs.is_constant() {
            return self.scale(&rhs.num.constant_term());
        }
        let g1 = self.num.gcd(&rhs.den).expect("nonzero");
        let g2 = rhs.num.gcd(&self.den).expect("nonzero");
        let cut = |p: &Poly, g: &Poly| if g.is_one() { p.clone() } else { p.exact_div(g).expect("gcd divides") };
        let num = &cut(&self.num, &g1) * &cut(&rhs.num, &g2);
        let den = &cut(&self.den, &g2) * &cut(&rhs.den, &g1);
        RatFn { num, den }
    }
}

/// Panics on division by zero; use [`RatFn::checked_div`] to handle it.
impl Div for &RatFn {
    type Output = RatFn;
    fn div(self, rhs: &RatFn) -> RatFn {
        self.checked_div(rhs).expect("division by the zero rational function")
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RatFn {
            type Output = RatFn;
            fn $m(self, rhs: RatFn) -> RatFn {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&RatFn> for RatFn {
            type Output = RatFn;
            fn $m(self, rhs: &RatFn) -> RatFn {
                (&self).$m(rhs)
            }
        }
        impl $tr<RatFn> for &RatFn {
            type Output = RatFn;
            fn $m(self, rhs: RatFn) -> RatFn {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        -&self
    }
}

impl std::iter::Sum for RatFn {
    fn sum<I: Iterator<Item = RatFn>>(iter: I) -> RatFn {
        iter.fold(RatFn::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for RatFn {
    fn product<I: Iterator<Item = RatFn>>(iter: I) -> RatFn {
        iter.fold(RatFn::one(), |a, b| a * b)
    }
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFn({})", self)
    }
}
