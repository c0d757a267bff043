//! Outward-rounded interval arithmetic and verified eigenvalue bound
//! certification. Every interval operation returns an enclosure of the exact
//! set image; the certification routines in [`verify`] build on that to count
//! pencil eigenvalues rigorously.

pub mod round;
mod verify;

pub use verify::{
    certified_lower_by_bisection, certify_lower_bound, certify_positive_definite,
    certify_upper_bound, tighten_certified_lower, tighten_certified_upper, verified_inertia,
    InertiaCert,
};

use crate::error::{Error, Result};
use crate::linalg::SymMat;
use round::*;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Closed interval [lo, hi] with finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Symmetric matrix of interval entries; (i, j) and (j, i) share one slot.
pub type IntervalMatrix = SymMat<Interval>;

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        debug_assert!(lo.is_finite() && hi.is_finite());
        Interval { lo, hi }
    }

    /// Degenerate interval holding exactly one float.
    pub fn point(x: f64) -> Self {
        Interval::new(x, x)
    }

    pub fn zero() -> Self {
        Interval::point(0.0)
    }

    /// Tight enclosure of the exact rational num/den.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        assert!(
            num.unsigned_abs() < (1 << 53) && den.unsigned_abs() < (1 << 53),
            "ratio operands exceed exact f64 range"
        );
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let (nf, df) = (num as f64, den as f64);
        let q = nf / df;
        // The remainder of a correctly rounded division is exactly
        // representable, so the fma residual is exact and its sign tells the
        // rounding direction.
        let r = q.mul_add(df, -nf);
        if r == 0.0 {
            Interval::point(q)
        } else if r > 0.0 {
            // q * den > num, so q overshoots the exact quotient
            Interval::new(q.next_down(), q)
        } else {
            Interval::new(q, q.next_up())
        }
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Smallest absolute value over the interval; zero if it contains zero.
    pub fn mignitude(self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    /// Largest absolute value over the interval.
    pub fn magnitude(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.contains(0.0)
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn intersects(self, other: Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Square with the image tightened at zero: [a] * [a] would lose the
    /// nonnegativity of x^2 when the interval straddles zero.
    pub fn square(self) -> Interval {
        let (l, h) = (self.lo, self.hi);
        if l >= 0.0 {
            Interval::new(mul_down(l, l), mul_up(h, h))
        } else if h <= 0.0 {
            Interval::new(mul_down(h, h), mul_up(l, l))
        } else {
            let m = l.abs().max(h.abs());
            Interval::new(0.0, mul_up(m, m))
        }
    }

    /// Division that reports an interval containing zero in the divisor.
    pub fn checked_div(self, rhs: Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::IntervalDomain("division by interval containing zero"));
        }
        Ok(self / rhs)
    }

    /// Square root; errors if any part of the interval is negative.
    pub fn checked_sqrt(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::IntervalDomain("sqrt of interval with negative part"));
        }
        Ok(Interval::new(sqrt_down(self.lo), sqrt_up(self.hi)))
    }

    /// Enclosure of sqrt(max(x, 0)); used for geometric quantities that are
    /// nonnegative by construction but may carry a slightly negative lower
    /// endpoint from rounding.
    pub fn sqrt_clamped(self) -> Interval {
        Interval::new(sqrt_down(self.lo.max(0.0)), sqrt_up(self.hi.max(0.0)))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.17e}, {:.17e}]", self.lo, self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: sub_down(self.lo, rhs.hi),
            hi: sub_up(self.hi, rhs.lo),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    #[inline]
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: Interval) -> Interval {
        let (al, ah) = (self.lo, self.hi);
        let (bl, bh) = (rhs.lo, rhs.hi);
        let p1 = al * bl;
        let p2 = al * bh;
        let p3 = ah * bl;
        let p4 = ah * bh;
        Interval {
            lo: p1.min(p2).min(p3).min(p4).next_down(),
            hi: p1.max(p2).max(p3).max(p4).next_up(),
        }
    }
}

impl Div for Interval {
    type Output = Interval;
    #[inline]
    fn div(self, rhs: Interval) -> Interval {
        assert!(
            !rhs.contains_zero(),
            "division by interval containing zero: {rhs}"
        );
        let (al, ah) = (self.lo, self.hi);
        let (bl, bh) = (rhs.lo, rhs.hi);
        let q1 = al / bl;
        let q2 = al / bh;
        let q3 = ah / bl;
        let q4 = ah / bh;
        Interval {
            lo: q1.min(q2).min(q3).min(q4).next_down(),
            hi: q1.max(q2).max(q3).max(q4).next_up(),
        }
    }
}

impl AddAssign for Interval {
    #[inline]
    fn add_assign(&mut self, rhs: Interval) {
        *self = *self + rhs;
    }
}

impl SubAssign for Interval {
    #[inline]
    fn sub_assign(&mut self, rhs: Interval) {
        *self = *self - rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_sub_examples() {
        let a = Interval::new(1.0, 2.0);
        let b = Interval::new(3.0, 4.0);
        let s = a + b;
        assert!(s.lo <= 4.0 && 4.0 <= s.lo.next_up().next_up());
        assert!(s.hi >= 6.0);
        assert!(s.contains(4.0) && s.contains(6.0));
        let d = b - a;
        assert!(d.contains(1.0) && d.contains(3.0));
    }

    #[test]
    fn sqrt_of_exact_square() {
        let r = Interval::new(4.0, 9.0).checked_sqrt().unwrap();
        assert!(r.contains(2.0) && r.contains(3.0));
        assert!((r.width() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt3_over_2_enclosure() {
        // published digits of sqrt(3)/2
        let enc = Interval::point(3.0).checked_sqrt().unwrap() / Interval::point(2.0);
        assert!(enc.contains(0.8660254037844386));
        assert!(enc.width() <= 1e-15);
    }

    #[test]
    fn division_by_zero_interval_is_domain_error() {
        let a = Interval::new(1.0, 2.0);
        assert!(a.checked_div(Interval::new(-1.0, 1.0)).is_err());
        assert!(Interval::new(-4.0, -1.0).checked_sqrt().is_err());
    }

    #[test]
    fn square_straddling_zero_stays_nonnegative() {
        let s = Interval::new(-2.0, 1.0).square();
        assert_eq!(s.lo, 0.0);
        assert!(s.hi >= 4.0);
    }

    #[test]
    fn mul_sign_cases_contain_products() {
        let cases = [
            (Interval::new(-2.0, 3.0), Interval::new(-5.0, 7.0)),
            (Interval::new(1.0, 2.0), Interval::new(-3.0, -1.0)),
            (Interval::new(-4.0, -2.0), Interval::new(-1.0, 5.0)),
        ];
        for (a, b) in cases {
            let p = a * b;
            for x in [a.lo, a.hi, a.midpoint()] {
                for y in [b.lo, b.hi, b.midpoint()] {
                    assert!(p.contains(x * y), "{p} misses {}", x * y);
                }
            }
        }
    }

    #[test]
    fn ratio_enclosures() {
        let third = Interval::from_ratio(1, 3);
        assert!(third.lo <= 1.0 / 3.0 && 1.0 / 3.0 <= third.hi);
        assert!(third.width() <= 2e-16 && third.width() > 0.0);
        // dyadic rationals are exact
        assert_eq!(Interval::from_ratio(3, 8), Interval::point(0.375));
        assert_eq!(Interval::from_ratio(-1, 2), Interval::point(-0.5));
    }
}
