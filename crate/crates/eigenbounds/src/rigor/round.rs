//! Directed rounding on top of round-to-nearest arithmetic.
//!
//! The hardware rounding mode is never touched: a round-to-nearest result
//! differs from the exact value by strictly less than one ulp, so stepping
//! one float down (up) gives a value certainly below (above) the exact
//! result. This keeps every primitive free of process-global state and safe
//! under concurrent use.

/// Largest float strictly below the exact sum a + b.
#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    (a + b).next_down()
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    (a + b).next_up()
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    (a - b).next_down()
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    (a - b).next_up()
}

#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    (a * b).next_down()
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    (a * b).next_up()
}

#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    (a / b).next_down()
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    (a / b).next_up()
}

/// IEEE sqrt is correctly rounded, so one-ulp widening encloses it as well.
#[inline]
pub fn sqrt_down(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    a.sqrt().next_down().max(0.0)
}

#[inline]
pub fn sqrt_up(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    a.sqrt().next_up()
}

// Branch-free outward steps for the hot factorization kernels. Two relative
// ulps plus one subnormal quantum strictly covers one nearest-rounding error;
// see `succ_covers_next_float` below for the sampled check.
const PHI: f64 = 8.881784197001252e-16; // 2^-51
const ETA: f64 = 1e-307; // comfortably above 2 * MIN_POSITIVE would be wasteful; this
                         // exceeds one ulp of every subnormal and normal below ~1e-292

/// A float certainly <= every real that rounds (to nearest) onto `x`.
#[inline]
pub fn pred(x: f64) -> f64 {
    x - (PHI * x.abs() + ETA)
}

/// A float certainly >= every real that rounds (to nearest) onto `x`.
#[inline]
pub fn succ(x: f64) -> f64 {
    x + (PHI * x.abs() + ETA)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_ulp_widening_brackets_exact_results() {
        // 0.1 + 0.2 is inexact; the directed results must straddle the
        // nearest-rounded sum.
        let s = 0.1_f64 + 0.2_f64;
        assert!(add_down(0.1, 0.2) < s && s < add_up(0.1, 0.2));
        // Exact operations stay within one ulp.
        assert!(add_down(0.5, 0.25) < 0.75 && add_up(0.5, 0.25) > 0.75);
    }

    #[test]
    fn succ_covers_next_float() {
        let samples = [
            0.0,
            1.0,
            -1.0,
            0.1,
            -0.3,
            1e-300,
            -1e-300,
            12345.678,
            1e280,
            f64::MIN_POSITIVE,
        ];
        for &x in &samples {
            assert!(pred(x) < x, "pred({x}) not below");
            assert!(succ(x) > x, "succ({x}) not above");
            assert!(pred(x) <= x.next_down());
            assert!(succ(x) >= x.next_up());
        }
    }

    #[test]
    fn sqrt_bounds_contain_true_root() {
        let lo = sqrt_down(2.0);
        let hi = sqrt_up(2.0);
        assert!(lo * lo < 2.0);
        assert!(hi * hi > 2.0);
        assert_eq!(sqrt_down(0.0), 0.0);
    }
}
