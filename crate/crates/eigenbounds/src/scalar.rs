//! Scalar abstraction over plain floats (fast mode) and intervals (rigorous
//! mode). Mesh lowering, polynomial integration and matrix assembly are
//! generic over this trait, so both modes share one code path.

use crate::polyint::Coeff;
use crate::rigor::{round, Interval};
use std::fmt::Debug;
use std::ops::{AddAssign, Div, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Float,
    Interval,
}

impl ScalarKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarKind::Float => "float",
            ScalarKind::Interval => "interval",
        }
    }
}

pub trait Scalar:
    Coeff
    + Debug
    + Sub<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
    + Send
    + Sync
{
    const KIND: ScalarKind;

    fn one() -> Self;
    fn from_int(v: i64) -> Self;
    /// Exact value num/den (outward-rounded enclosure for intervals).
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Embed a float as an exact scalar (width-zero interval).
    fn from_f64_exact(x: f64) -> Self;
    /// Enclosure of sqrt(3), for lowering symbolic coordinates.
    fn sqrt3() -> Self;

    /// x^2 tightened at zero for intervals.
    fn square(self) -> Self;
    /// Enclosure of sqrt(max(x, 0)); inputs are nonnegative by construction
    /// up to rounding.
    fn sqrt_nonneg(self) -> Self;

    /// Representative float (midpoint for intervals).
    fn approx(self) -> f64;
    fn lower(self) -> f64;
    fn upper(self) -> f64;
    /// Smallest absolute value over the scalar; zero when it straddles zero.
    fn mignitude(self) -> f64;
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Float;

    fn one() -> Self {
        1.0
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64_exact(x: f64) -> Self {
        x
    }

    fn sqrt3() -> Self {
        3.0_f64.sqrt()
    }

    fn square(self) -> Self {
        self * self
    }

    fn sqrt_nonneg(self) -> Self {
        self.max(0.0).sqrt()
    }

    fn approx(self) -> f64 {
        self
    }

    fn lower(self) -> f64 {
        self
    }

    fn upper(self) -> f64 {
        self
    }

    fn mignitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Interval {
    const KIND: ScalarKind = ScalarKind::Interval;

    fn one() -> Self {
        Interval::point(1.0)
    }

    fn from_int(v: i64) -> Self {
        debug_assert!(v.unsigned_abs() < (1 << 53));
        Interval::point(v as f64)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Interval::from_ratio(num, den)
    }

    fn from_f64_exact(x: f64) -> Self {
        Interval::point(x)
    }

    fn sqrt3() -> Self {
        Interval::new(round::sqrt_down(3.0), round::sqrt_up(3.0))
    }

    fn square(self) -> Self {
        Interval::square(self)
    }

    fn sqrt_nonneg(self) -> Self {
        self.sqrt_clamped()
    }

    fn approx(self) -> f64 {
        self.midpoint()
    }

    fn lower(self) -> f64 {
        self.lo
    }

    fn upper(self) -> f64 {
        self.hi
    }

    fn mignitude(self) -> f64 {
        Interval::mignitude(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exercise<S: Scalar>() {
        let two = S::from_int(2);
        let half = S::from_ratio(1, 2);
        let one = two * half;
        assert!((one.approx() - 1.0).abs() < 1e-15);
        let r3 = S::sqrt3();
        assert!(r3.lower() <= 1.7320508075688772 && 1.7320508075688772 <= r3.upper().next_up());
        let s = (S::from_int(-3)).square();
        assert!((s.approx() - 9.0).abs() < 1e-14);
    }

    #[test]
    fn both_scalars_behave() {
        exercise::<f64>();
        exercise::<Interval>();
    }

    #[test]
    fn interval_ratio_contains_truth() {
        let x = <Interval as Scalar>::from_ratio(1, 3);
        assert!(x.lo <= 1.0 / 3.0 && 1.0 / 3.0 <= x.hi);
        assert!(x.lo < x.hi || x.lo == x.hi); // enclosure may be a point only if exact
        assert!(x.lo != x.hi, "1/3 is not a dyadic rational");
    }
}
