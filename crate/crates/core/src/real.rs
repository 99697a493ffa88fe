//! Scalar abstraction shared by the f64 and double-double code paths.
//!
//! [`DD`] is an unevaluated sum `hi + lo` of two f64 values with `|lo| ≤ ulp(hi)/2`,
//! carrying about 32 significant digits. It exists for gap series very close
//! to the critical point, where the smallest eigenvalue sits twelve or more
//! orders below the largest.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + PartialOrd
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + 'static
{
    fn c(x: f64) -> Self;
    fn f64(self) -> f64;
    /// Relative spacing of representable values near one.
    fn roundoff() -> Self;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn cos(self) -> Self;
    fn sin(self) -> Self;

    fn zero() -> Self {
        Self::c(0.0)
    }

    fn one() -> Self {
        Self::c(1.0)
    }

    fn two() -> Self {
        Self::c(2.0)
    }

    fn half() -> Self {
        Self::c(0.5)
    }

    fn max(self, o: Self) -> Self {
        if o > self {
            o
        } else {
            self
        }
    }

    fn min(self, o: Self) -> Self {
        if o < self {
            o
        } else {
            self
        }
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
}

impl Real for f64 {
    #[inline]
    fn c(x: f64) -> Self {
        x
    }
    #[inline]
    fn f64(self) -> f64 {
        self
    }
    fn roundoff() -> Self {
        f64::EPSILON
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn max(self, o: Self) -> Self {
        f64::max(self, o)
    }
    #[inline]
    fn min(self, o: Self) -> Self {
        f64::min(self, o)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

#[derive(Clone, Copy, Default, PartialEq)]
pub struct DD {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: DD = DD { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };
const FRAC_PI_2: DD = DD { hi: std::f64::consts::FRAC_PI_2, lo: 6.123_233_995_736_766e-17 };

impl DD {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DD { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = quick_two_sum(a, b);
        DD { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        DD::from_sum(p, e + self.lo * b)
    }

    fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        DD { hi: self.hi * s, lo: self.lo * s }
    }

    fn round(self) -> f64 {
        let r = self.hi.round();
        if r == self.hi {
            (r + self.lo.round()).round()
        } else if (r - self.hi).abs() == 0.5 && self.lo != 0.0 {
            // tie in hi broken by the sign of lo
            if self.lo > 0.0 { self.hi.ceil() } else { self.hi.floor() }
        } else {
            r
        }
    }

    /// Taylor series of sin and cos on a reduced argument `|r| ≤ π/4`.
    fn sin_cos_reduced(r: DD) -> (DD, DD) {
        let r2 = r * r;
        let mut term = r;
        let mut s = r;
        let mut k = 1.0;
        while term.hi.abs() > 1e-34 {
            term = -term * r2 / DD::c((k + 1.0) * (k + 2.0));
            s += term;
            k += 2.0;
        }
        let mut term = DD::one();
        let mut c = DD::one();
        let mut k = 0.0;
        while term.hi.abs() > 1e-34 {
            term = -term * r2 / DD::c((k + 1.0) * (k + 2.0));
            c += term;
            k += 2.0;
        }
        (s, c)
    }

    fn sin_cos(self) -> (DD, DD) {
        let q = (self / FRAC_PI_2).round();
        let r = self - FRAC_PI_2 * DD::c(q);
        let (s, c) = DD::sin_cos_reduced(r);
        match (q as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl Debug for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DD({:e} + {:e})", self.hi, self.lo)
    }
}

impl Display for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&(self.hi + self.lo), f)
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }
}

impl PartialOrd for DD {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&o.lo),
            ord => Some(ord),
        }
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        DD::from_sum(s, e + f)
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        DD::from_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o.mul_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o.mul_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for DD {
            fn $m(&mut self, o: DD) {
                *self = *self $op o;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl Sum for DD {
    fn sum<I: Iterator<Item = DD>>(iter: I) -> DD {
        iter.fold(DD::zero(), |a, b| a + b)
    }
}

impl Real for DD {
    #[inline]
    fn c(x: f64) -> Self {
        DD::from(x)
    }

    #[inline]
    fn f64(self) -> f64 {
        self.hi + self.lo
    }

    fn roundoff() -> Self {
        DD::from(2f64.powi(-104))
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::from(self.hi.sqrt());
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - DD { hi: p, lo: e }).hi;
        DD::from_sum(x, r / (2.0 * x))
    }

    fn exp(self) -> Self {
        if self.hi > 709.0 {
            return DD::from(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DD::zero();
        }
        let k = (self / LN2).round();
        let r = self - LN2 * DD::c(k);
        let mut term = DD::one();
        let mut s = DD::one();
        let mut i = 1.0;
        while term.hi.abs() > 1e-34 {
            term = term * r / DD::c(i);
            s += term;
            i += 1.0;
        }
        s.ldexp(k as i32)
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return DD::from(self.hi.ln());
        }
        // one Newton step on exp(y) = x doubles the f64 guess's digits
        let y = DD::from(self.hi.ln());
        y + self * (-y).exp() - DD::one()
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    fn sin(self) -> Self {
        self.sin_cos().0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: DD, hi: f64, lo: f64, tol: f64) -> bool {
        ((a - DD::new(hi, lo)).abs()).f64() < tol
    }

    #[test]
    fn dd_keeps_digits_f64_drops() {
        let a = DD::c(1.0) + DD::c(1e-20);
        assert!(a - DD::c(1.0) > DD::c(0.0));
        assert_eq!(1.0f64 + 1e-20 - 1.0, 0.0);
    }

    #[test]
    fn dd_division() {
        let third = DD::one() / DD::c(3.0);
        assert!((third * DD::c(3.0) - DD::one()).abs().f64() < 1e-32);
        assert!(close(third, 0.333_333_333_333_333_3, 1.850_371_707_708_594e-17, 1e-32));
    }

    #[test]
    fn dd_sqrt_and_ln() {
        let two = DD::c(2.0);
        let r = two.sqrt();
        assert!((r * r - two).abs().f64() < 1e-31);
        assert!(close(two.ln(), LN2.hi, LN2.lo, 1e-31));
        let e = DD::one().exp();
        assert!(close(e, std::f64::consts::E, 1.445_646_891_729_250_2e-16, 1e-31));
        assert!((e.ln() - DD::one()).abs().f64() < 1e-31);
    }

    #[test]
    fn dd_trig() {
        for x in [0.3, 1.0, 2.5, -4.0, 7.0] {
            let d = DD::c(x);
            let (s, c) = (d.sin(), d.cos());
            assert!((s * s + c * c - DD::one()).abs().f64() < 1e-31);
            assert!((s.f64() - x.sin()).abs() < 1e-15);
            assert!((c.f64() - x.cos()).abs() < 1e-15);
        }
        // π/2 is the reduction constant, so cos of its DD value is tiny
        assert!(FRAC_PI_2.cos().abs().f64() < 1e-32);
    }

    #[test]
    fn powi_matches() {
        assert_eq!(Real::powi(1.5f64, 3), 3.375);
        assert!((Real::powi(DD::c(1.5), -2) - DD::c(4.0) / DD::c(9.0)).abs().f64() < 1e-32);
    }
}
