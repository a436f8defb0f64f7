//! Frame transforms between phase (abc), stationary (αβ0) and rotor (dq)
//! coordinates.
//!
//! Amplitude-invariant scaling (K = 2/3) throughout, so a balanced set of
//! peak amplitude `A` maps to an αβ (or dq) vector of length `A`. The
//! electrical angle is measured from the α axis to the d axis, with q
//! leading d by 90°.

use std::f64::consts::FRAC_1_SQRT_2;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;
const K: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AbcVector {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AbcVector {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn max(self) -> f64 {
        self.a.max(self.b).max(self.c)
    }

    pub fn min(self) -> f64 {
        self.a.min(self.b).min(self.c)
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.a), f(self.b), f(self.c))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AlphaBetaVector {
    pub alpha: f64,
    pub beta: f64,
    /// Zero-sequence component.
    pub zero: f64,
}

impl AlphaBetaVector {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            zero: 0.0,
        }
    }

    pub fn magnitude(self) -> f64 {
        self.alpha.hypot(self.beta)
    }

    /// Angle of the (α, β) vector wrapped to `[0, 2π)`.
    pub fn angle(self) -> f64 {
        wrap_angle(self.beta.atan2(self.alpha))
    }

    pub fn scale(self, k: f64) -> Self {
        Self {
            alpha: self.alpha * k,
            beta: self.beta * k,
            zero: self.zero * k,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DqVector {
    pub d: f64,
    pub q: f64,
}

impl DqVector {
    pub const fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn magnitude(self) -> f64 {
        self.d.hypot(self.q)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.d * k, self.q * k)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = theta.rem_euclid(tau);
    // rem_euclid can round up to exactly τ for tiny negative inputs
    if w >= tau {
        0.0
    } else {
        w
    }
}

pub fn clarke(v: AbcVector) -> AlphaBetaVector {
    AlphaBetaVector {
        alpha: K * (v.a - 0.5 * v.b - 0.5 * v.c),
        beta: K * SQRT3_2 * (v.b - v.c),
        zero: K * FRAC_1_SQRT_2 * (v.a + v.b + v.c),
    }
}

pub fn inverse_clarke(v: AlphaBetaVector) -> AbcVector {
    // per-phase common mode (a + b + c) / 3
    let common = v.zero / (3.0 * K * FRAC_1_SQRT_2);
    AbcVector {
        a: v.alpha + common,
        b: -0.5 * v.alpha + SQRT3_2 * v.beta + common,
        c: -0.5 * v.alpha - SQRT3_2 * v.beta + common,
    }
}

/// Rotates a stationary vector into the rotor frame (rotation by −θ).
/// The zero-sequence component is dropped.
pub fn park(v: AlphaBetaVector, theta_e: f64) -> DqVector {
    let (s, c) = theta_e.sin_cos();
    DqVector {
        d: c * v.alpha + s * v.beta,
        q: -s * v.alpha + c * v.beta,
    }
}

pub fn inverse_park(v: DqVector, theta_e: f64) -> AlphaBetaVector {
    let (s, c) = theta_e.sin_cos();
    AlphaBetaVector::new(c * v.d - s * v.q, s * v.d + c * v.q)
}

/// Phase quantities from rotor-frame ones (balanced, no zero sequence).
pub fn dq_to_abc(v: DqVector, theta_e: f64) -> AbcVector {
    inverse_clarke(inverse_park(v, theta_e))
}

pub fn abc_to_dq(v: AbcVector, theta_e: f64) -> DqVector {
    park(clarke(v), theta_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn clarke_examples() {
        assert_eq!(clarke(AbcVector::default()), AlphaBetaVector::default());

        let v = clarke(AbcVector::new(1.0, -0.5, -0.5));
        assert!(
            close(v.alpha, 1.0, 1e-15) && close(v.beta, 0.0, 1e-15) && close(v.zero, 0.0, 1e-15)
        );

        let v = clarke(AbcVector::new(1.0, 1.0, 1.0));
        assert!(close(v.alpha, 0.0, 1e-15) && close(v.beta, 0.0, 1e-15));
        assert!(close(v.zero, SQRT_2, 1e-15));
    }

    #[test]
    fn inverse_clarke_examples() {
        let x = AbcVector::new(0.3, -1.2, 0.9);
        let y = inverse_clarke(clarke(x));
        assert!(close(x.a, y.a, 1e-15) && close(x.b, y.b, 1e-15) && close(x.c, y.c, 1e-15));

        let y = inverse_clarke(AlphaBetaVector::new(1.0, 0.0));
        assert!(close(y.a, 1.0, 1e-15) && close(y.b, -0.5, 1e-15) && close(y.c, -0.5, 1e-15));
        assert_eq!(
            inverse_clarke(AlphaBetaVector::default()),
            AbcVector::default()
        );
    }

    #[test]
    fn park_examples() {
        assert_eq!(
            park(AlphaBetaVector::new(1.0, 0.0), 0.0),
            DqVector::new(1.0, 0.0)
        );
        let v = park(AlphaBetaVector::new(1.0, 0.0), FRAC_PI_2);
        assert!(close(v.d, 0.0, 1e-15) && close(v.q, -1.0, 1e-15));
        let v = park(AlphaBetaVector::new(0.6, 0.8), 1.234);
        assert!(close(v.d * v.d + v.q * v.q, 1.0, 1e-15));
    }

    #[test]
    fn inverse_park_examples() {
        let v = inverse_park(DqVector::new(1.0, 0.0), 0.0);
        assert!(close(v.alpha, 1.0, 0.0) && close(v.beta, 0.0, 0.0));
        let v = inverse_park(DqVector::new(1.0, 0.0), FRAC_PI_2);
        assert!(close(v.alpha, 0.0, 1e-15) && close(v.beta, 1.0, 1e-15));
    }

    #[test]
    fn dq_to_abc_balanced_set() {
        // d-axis aligned with phase a at θ = 0: (1, 0) → (1, −½, −½)
        let abc = dq_to_abc(DqVector::new(1.0, 0.0), 0.0);
        assert!(close(abc.a, 1.0, 1e-15) && close(abc.b, -0.5, 1e-15));
        // q leads d: pure q at θ = 0 peaks on phase b a third of a turn later
        let abc = dq_to_abc(DqVector::new(0.0, 1.0), -PI / 2.0 + 2.0 * PI / 3.0);
        assert!(close(abc.b, 1.0, 1e-12));
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!(close(wrap_angle(-0.1), 2.0 * PI - 0.1, 1e-15));
        assert!(wrap_angle(-1e-300) < 2.0 * PI);
        assert!(close(wrap_angle(7.0 * PI), PI, 1e-12));
    }

    proptest! {
        #[test]
        fn clarke_round_trip(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64) {
            let y = inverse_clarke(clarke(AbcVector::new(a, b, c)));
            prop_assert!(close(y.a, a, 1e-12 * (1.0 + a.abs().max(b.abs()).max(c.abs()))));
            prop_assert!(close(y.b, b, 1e-12 * (1.0 + a.abs().max(b.abs()).max(c.abs()))));
            prop_assert!(close(y.c, c, 1e-12 * (1.0 + a.abs().max(b.abs()).max(c.abs()))));
        }

        #[test]
        fn balanced_set_has_no_zero_sequence(a in -1e3..1e3f64, b in -1e3..1e3f64) {
            let v = clarke(AbcVector::new(a, b, -a - b));
            prop_assert!(v.zero.abs() < 1e-12);
        }

        #[test]
        fn park_is_norm_preserving_rotation(al in -1e3..1e3f64, be in -1e3..1e3f64, th in -10.0..10.0f64) {
            let x = AlphaBetaVector::new(al, be);
            let dq = park(x, th);
            prop_assert!(close(dq.magnitude(), x.magnitude(), 1e-12 * (1.0 + x.magnitude())));
            let back = inverse_park(dq, th);
            prop_assert!(close(back.alpha, al, 1e-12 * (1.0 + x.magnitude())));
            prop_assert!(close(back.beta, be, 1e-12 * (1.0 + x.magnitude())));
        }
    }
}
