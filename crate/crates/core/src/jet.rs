//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] carries the Taylor coefficients `f(x0 + h) = Σ c[k] h^k` up to
//! [`ORDER`]. Composing elementary operations on jets propagates exact
//! derivatives (up to round-off) through the closed-form profile pieces, which
//! is what the junction certification and the curvature formulas consume.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Highest derivative order tracked.
pub const ORDER: usize = 4;
const LEN: usize = ORDER + 1;

const FACTORIAL: [f64; LEN] = [1.0, 1.0, 2.0, 6.0, 24.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; LEN],
}

impl Jet {
    pub const ZERO: Jet = Jet { c: [0.0; LEN] };

    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = v;
        Jet { c }
    }

    /// The identity function expanded at `x`.
    pub fn variable(x: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = x;
        c[1] = 1.0;
        Jet { c }
    }

    pub fn from_taylor(c: [f64; LEN]) -> Self {
        Jet { c }
    }

    /// Build a jet from derivative values `[f, f', f'', ...]`.
    pub fn from_derivatives(d: [f64; LEN]) -> Self {
        let mut c = [0.0; LEN];
        for k in 0..LEN {
            c[k] = d[k] / FACTORIAL[k];
        }
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        self.c[k] * FACTORIAL[k]
    }

    pub fn derivatives(&self) -> [f64; LEN] {
        let mut d = [0.0; LEN];
        for k in 0..LEN {
            d[k] = self.derivative(k);
        }
        d
    }

    pub fn taylor(&self) -> &[f64; LEN] {
        &self.c
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Jet of `F` where `F'' = self`, given `F` and `F'` at the point.
    pub fn double_antiderivative(&self, value: f64, slope: f64) -> Jet {
        let mut c = [0.0; LEN];
        c[0] = value;
        c[1] = slope;
        for k in 0..LEN - 2 {
            c[k + 2] = self.c[k] / ((k + 1) * (k + 2)) as f64;
        }
        Jet { c }
    }

    pub fn scale(self, s: f64) -> Jet {
        let mut c = self.c;
        for v in &mut c {
            *v *= s;
        }
        Jet { c }
    }

    pub fn recip(self) -> Jet {
        Jet::constant(1.0) / self
    }

    pub fn exp(self) -> Jet {
        let mut e = [0.0; LEN];
        e[0] = self.c[0].exp();
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Jet { c: e }
    }

    pub fn ln(self) -> Jet {
        let a0 = self.c[0];
        let mut l = [0.0; LEN];
        l[0] = a0.ln();
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 1..k {
                acc += j as f64 * l[j] * self.c[k - j];
            }
            l[k] = (self.c[k] - acc / k as f64) / a0;
        }
        Jet { c: l }
    }

    pub fn sin_cos(self) -> (Jet, Jet) {
        let mut s = [0.0; LEN];
        let mut co = [0.0; LEN];
        s[0] = self.c[0].sin();
        co[0] = self.c[0].cos();
        for k in 1..LEN {
            let mut acc_s = 0.0;
            let mut acc_c = 0.0;
            for j in 1..=k {
                let w = j as f64 * self.c[j];
                acc_s += w * co[k - j];
                acc_c += w * s[k - j];
            }
            s[k] = acc_s / k as f64;
            co[k] = -acc_c / k as f64;
        }
        (Jet { c: s }, Jet { c: co })
    }

    pub fn sin(self) -> Jet {
        self.sin_cos().0
    }

    pub fn cos(self) -> Jet {
        self.sin_cos().1
    }

    /// `self^p` for a positive base.
    pub fn powf(self, p: f64) -> Jet {
        let a0 = self.c[0];
        let mut w = [0.0; LEN];
        w[0] = a0.powf(p);
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += ((p + 1.0) * j as f64 - k as f64) * self.c[j] * w[k - j];
            }
            w[k] = acc / (k as f64 * a0);
        }
        Jet { c: w }
    }

    pub fn sqrt(self) -> Jet {
        self.powf(0.5)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut c = self.c;
        for k in 0..LEN {
            c[k] += rhs.c[k];
        }
        Jet { c }
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let mut c = self.c;
        for k in 0..LEN {
            c[k] -= rhs.c[k];
        }
        Jet { c }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for i in 0..LEN {
            for j in 0..LEN - i {
                c[i + j] += self.c[i] * rhs.c[j];
            }
        }
        Jet { c }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let b0 = rhs.c[0];
        let mut q = [0.0; LEN];
        for k in 0..LEN {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= rhs.c[j] * q[k - j];
            }
            q[k] = acc / b0;
        }
        Jet { c: q }
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}
