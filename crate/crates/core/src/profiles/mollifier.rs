//! The `exp(-1/x²)` smooth step.
//!
//! On the unit interval the step is
//! `ψ(u) = f(1-u) / (f(u) + f(1-u))` with `f(u) = exp(-1/u²)`, which equals 1
//! for `u ≤ 0`, 0 for `u ≥ 1`, and is C^∞. It is evaluated in the logistic
//! form `1 / (1 + exp(1/(1-u)² - 1/u²))` so neither factor underflows.

use crate::jet::Jet;
use crate::scalar::Scalar;

// exp(-700) is below any tolerance used here; past it the plateau is exact.
const PLATEAU_EXPONENT: f64 = 700.0;

/// Unit step: 1 for `u ≤ 0`, 0 for `u ≥ 1`.
pub fn unit_step<S: Scalar>(u: S) -> S {
    let u0 = u.val();
    if u0 <= 0.0 {
        return S::cst(1.0);
    }
    if u0 >= 1.0 {
        return S::cst(0.0);
    }
    let w = S::cst(1.0) - u;
    let g = S::cst(1.0) / (w * w) - S::cst(1.0) / (u * u);
    let g0 = g.val();
    if g0 > PLATEAU_EXPONENT {
        S::cst(0.0)
    } else if g0 < -PLATEAU_EXPONENT {
        S::cst(1.0)
    } else if g0 > 0.0 {
        let e = (-g).exp();
        e / (e + 1.0)
    } else {
        let e = g.exp();
        S::cst(1.0) / (e + 1.0)
    }
}

/// `ψ_{a,b}(x)`: 1 for `x ≤ a`, 0 for `x ≥ b`, smooth in between.
pub fn smooth_step(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a < b);
    unit_step((x - a) / (b - a))
}

/// Complementary orientation: 0 for `x ≤ a`, 1 for `x ≥ b`.
pub fn smooth_rise(x: f64, a: f64, b: f64) -> f64 {
    1.0 - smooth_step(x, a, b)
}

pub fn step_jet(x: Jet, a: f64, b: f64) -> Jet {
    unit_step((x - a) / (b - a))
}

/// Generic rise `0 → 1` on `[0, 1]` in the unit variable.
pub fn unit_rise<S: Scalar>(u: S) -> S {
    S::cst(1.0) - unit_step(u)
}
