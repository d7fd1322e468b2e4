//! Double-double helpers that patch accuracy gaps in `twofloat`: its
//! division is only correct to about one ulp of the high word.

use twofloat::TwoFloat;

/// `a / b` to full double-double accuracy (three-term long division).
pub(crate) fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

/// pi as an unevaluated sum `hi + lo`.
pub(crate) fn pi() -> TwoFloat {
    TwoFloat::new_add(std::f64::consts::PI, 1.224_646_799_147_353_2e-16)
}

/// `x^p` by repeated exact-rounding multiplication.
pub(crate) fn powi(x: f64, p: u32) -> TwoFloat {
    let mut acc = TwoFloat::from(1.0);
    for _ in 0..p {
        acc *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_is_double_double_accurate() {
        let third = div(TwoFloat::from(1.0), TwoFloat::from(3.0));
        let back = third * 3.0 - 1.0;
        assert!(f64::from(back).abs() < 1e-31);
        let b = TwoFloat::new_add(3.0, 1e-17);
        let q = div(TwoFloat::from(1.0), b);
        assert!(f64::from(q * b - 1.0).abs() < 1e-31);
    }

    #[test]
    fn pi_low_word() {
        let p = pi();
        assert_eq!(p.hi(), std::f64::consts::PI);
        // sin(pi_hi) = pi - pi_hi to double precision
        assert!((p.lo() - std::f64::consts::PI.sin()).abs() < 1e-31);
    }

    #[test]
    fn powers_are_exact_for_dyadics() {
        assert_eq!(f64::from(powi(0.5, 10)), 1.0 / 1024.0);
        assert_eq!(f64::from(powi(3.0, 0)), 1.0);
    }
}
