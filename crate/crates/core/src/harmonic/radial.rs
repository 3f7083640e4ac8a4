//! Radial factors of separated harmonic functions.
//!
//! For `u = R(r) Y_k` the weighted Laplacian reduces to
//! `R'' + p R' + q R = 0` with `p = (n-1)φ'/φ - χ'` and `q = -λ_k/φ²`.
//! The vertex-regular solution is computed through its logarithmic
//! derivative `y = r R'/R` in `x = ln r`, which obeys
//! `y' = -y² - B y - C` with `B = r p - 1` and `C = r² q`, and for which the
//! recessive branch is the attracting one when integrating outward.

use super::ode::{integrate_riccati, Node, RiccatiOptions};
use crate::error::{Error, Result};
use crate::metric::HornMetric;
use crate::quad::gauss_panel;
use crate::sphere::sphere_eigendata;
use serde::Serialize;
use std::sync::OnceLock;

/// Default launch radius relative to the outer radius.
pub const DEFAULT_START_FACTOR: f64 = 1e-13;

/// Tolerance on the ODE residual of every produced mode.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Maximum relative deviation from the frozen-coefficient root at `2·r_start`.
pub const LAUNCH_TOLERANCE: f64 = 0.05;

/// The coefficients `p`, `q` of the radial equation for degree `k`.
#[derive(Clone, Debug)]
pub struct RadialCoefficients {
    metric: HornMetric,
    k: usize,
    lambda: f64,
}

impl RadialCoefficients {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self, r: f64) -> f64 {
        let phi = self.metric.phi_jet(r);
        let chi = self.metric.chi_jet(r);
        (self.metric.n() - 1) as f64 * phi.derivative(1) / phi.value() - chi.derivative(1)
    }

    pub fn q(&self, r: f64) -> f64 {
        let phi = self.metric.phi().value(r);
        -self.lambda / (phi * phi)
    }

    /// `(B, C)` of the Riccati form at `x = ln r`.
    pub fn riccati(&self, x: f64) -> (f64, f64) {
        let r = x.exp();
        (r * self.p(r) - 1.0, r * r * self.q(r))
    }
}

pub fn radial_ode_coefficients(metric: &HornMetric, k: usize) -> RadialCoefficients {
    RadialCoefficients {
        metric: metric.clone(),
        k,
        lambda: sphere_eigendata(k).0,
    }
}

/// Roots `α₊ ≥ α₋` of `α(α-1) + cα + d = 0`, the indicial equation of
/// `R'' + (c/r) R' + (d/r²) R = 0`.
pub fn indicial_exponents(c: f64, d: f64) -> Result<(f64, f64)> {
    let b = c - 1.0;
    let disc = b * b - 4.0 * d;
    if disc < 0.0 {
        return Err(Error::ComplexRoots(disc));
    }
    let sq = disc.sqrt();
    // avoid cancellation in the smaller root
    let big = if b >= 0.0 {
        -0.5 * (b + sq)
    } else {
        0.5 * (sq - b)
    };
    let other = if big != 0.0 { d / big } else { 0.0 };
    Ok((big.max(other), big.min(other)))
}

/// Exponents from the relation `α(α + (1-η)) = λ`, i.e. `c = 2-η`, `d = -λ`.
pub fn eta_relation_exponents(eta: f64, lambda: f64) -> Result<(f64, f64)> {
    indicial_exponents(2.0 - eta, -lambda)
}

/// Exponents of the Euler equation on a cone `φ = a r` with constant weight.
pub fn cone_exponents(a: f64, lambda: f64) -> Result<(f64, f64)> {
    indicial_exponents(2.0, -lambda / (a * a))
}

/// Positive root of `y² + B y + C = 0` (the recessive log-derivative with frozen coefficients).
pub fn frozen_root(b: f64, c: f64) -> f64 {
    let disc = (b * b - 4.0 * c).max(0.0).sqrt();
    if b > 0.0 {
        // -C / ((B + disc)/2) avoids cancellation
        -2.0 * c / (b + disc)
    } else {
        0.5 * (disc - b)
    }
}

/// `R ≈ exp(-wkb_constant · r^{-ε})` near a horn vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WkbAsymptotic {
    pub epsilon: f64,
    pub wkb_constant: f64,
}

/// One sample of a radial factor; `log_value` stays finite when `R` underflows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialSample {
    pub r: f64,
    pub log_value: f64,
    pub value: f64,
    pub derivative: f64,
}

/// The vertex-regular radial factor `R_k`, normalized by `R_k(r_out) = 1`.
#[derive(Clone, Debug)]
pub struct RadialMode {
    coeffs: RadialCoefficients,
    r_start: f64,
    r_out: f64,
    /// Riccati nodes in `x = ln r`; empty for the constant mode.
    nodes: Vec<Node>,
    l_out: f64,
    small_r_asymptotic: Option<WkbAsymptotic>,
    indicial_at_infinity: Option<(f64, f64)>,
    max_residual: f64,
    /// `ln ∫_0^{r_i} R² φ^{n-1} e^{-χ}` at each node.
    cumulative: OnceLock<Vec<f64>>,
}

/// Solves for the vertex-regular `R_k` on `r_span = (r_start, r_out)`.
///
/// The integration starts at the frozen-coefficient root at `r_start`.
/// `k = 0` gives the exact constant.
pub fn solve_radial(metric: &HornMetric, k: usize, r_span: (f64, f64)) -> Result<RadialMode> {
    solve_radial_with(metric, k, r_span, &RiccatiOptions::default())
}

/// Launch span `(DEFAULT_START_FACTOR·r_out, r_out)`.
pub fn default_span(r_out: f64) -> (f64, f64) {
    (DEFAULT_START_FACTOR * r_out, r_out)
}

pub fn solve_radial_with(
    metric: &HornMetric,
    k: usize,
    r_span: (f64, f64),
    opts: &RiccatiOptions,
) -> Result<RadialMode> {
    let (r_start, r_out) = r_span;
    if !(r_start > 0.0 && r_start < r_out && r_out <= metric.r_max()) {
        return Err(Error::Config(format!(
            "radial span ({r_start:e}, {r_out:e}) must satisfy 0 < r_start < r_out <= {}",
            metric.r_max()
        )));
    }
    let coeffs = radial_ode_coefficients(metric, k);
    let small_r_asymptotic = metric.epsilon().filter(|_| k > 0).map(|eps| WkbAsymptotic {
        epsilon: eps,
        wkb_constant: 2.0 * coeffs.lambda.sqrt() / eps,
    });
    let indicial_at_infinity = match metric.cone_slope() {
        Some(a) if k > 0 => Some(cone_exponents(a, coeffs.lambda)?),
        Some(_) => Some((0.0, -1.0)),
        None => None,
    };
    let mut mode = RadialMode {
        coeffs,
        r_start,
        r_out,
        nodes: Vec::new(),
        l_out: 0.0,
        small_r_asymptotic,
        indicial_at_infinity,
        max_residual: 0.0,
        cumulative: OnceLock::new(),
    };
    if k == 0 {
        return Ok(mode);
    }

    let (x0, x1) = (r_start.ln(), r_out.ln());
    let frozen = mode.coeffs.clone();
    let riccati = move |x: f64| frozen.riccati(x);
    let (b0, c0) = riccati(x0);
    let breaks: Vec<f64> = metric.fine_breakpoints().iter().map(|b| b.ln()).collect();
    let nodes = integrate_riccati(&riccati, x0, frozen_root(b0, c0), x1, &breaks, opts)?;
    mode.l_out = nodes.last().map_or(0.0, |n| n.l);
    mode.nodes = nodes;

    let r_check = 2.0 * r_start;
    if r_check < r_out {
        let (b, c) = riccati(r_check.ln());
        let expected = frozen_root(b, c);
        let deviation =
            (mode.log_derivative(r_check) - expected).abs() / expected.abs().max(1e-300);
        if !(deviation <= LAUNCH_TOLERANCE) {
            return Err(Error::AsymptoticMismatch {
                r: r_check,
                deviation,
            });
        }
    }

    mode.max_residual = mode.residuals().into_iter().fold(0.0, f64::max);
    if !(mode.max_residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Convergence(format!(
            "radial residual {:e} exceeds {RESIDUAL_TOLERANCE:e} for k = {k}",
            mode.max_residual
        )));
    }
    Ok(mode)
}

fn hermite(t: f64, h: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1;
    let slope = ((6.0 * t2 - 6.0 * t) * f0
        + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
        + (-6.0 * t2 + 6.0 * t) * f1
        + (3.0 * t2 - 2.0 * t) * h * d1)
        / h;
    (value, slope)
}

/// Derivative at `x[i]` of the Lagrange interpolant through the given nodes.
fn lagrange_derivative(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let xi = xs[i];
    let mut total = 0.0;
    for j in 0..xs.len() {
        let w = if j == i {
            (0..xs.len())
                .filter(|&m| m != i)
                .map(|m| 1.0 / (xi - xs[m]))
                .sum::<f64>()
        } else {
            let mut w = 1.0 / (xs[j] - xi);
            for m in 0..xs.len() {
                if m != i && m != j {
                    w *= (xi - xs[m]) / (xs[j] - xs[m]);
                }
            }
            w
        };
        total += w * ys[j];
    }
    total
}

impl RadialMode {
    pub fn k(&self) -> usize {
        self.coeffs.k
    }

    pub fn lambda(&self) -> f64 {
        self.coeffs.lambda
    }

    pub fn coefficients(&self) -> &RadialCoefficients {
        &self.coeffs
    }

    pub fn r_span(&self) -> (f64, f64) {
        (self.r_start, self.r_out)
    }

    pub fn small_r_asymptotic(&self) -> Option<WkbAsymptotic> {
        self.small_r_asymptotic
    }

    pub fn indicial_at_infinity(&self) -> Option<(f64, f64)> {
        self.indicial_at_infinity
    }

    /// Largest relative ODE residual over the integration nodes.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn is_constant(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(ln R, r R'/R)` at `r`. Below `r_start` the log-derivative is frozen at
    /// its launch value, which understates the decay.
    pub fn log_state(&self, r: f64) -> (f64, f64) {
        if self.nodes.is_empty() {
            return (0.0, 0.0);
        }
        let x = r.ln();
        let first = &self.nodes[0];
        if x <= first.x {
            return (first.l - self.l_out + first.y * (x - first.x), first.y);
        }
        let last = self.nodes.last().unwrap();
        if x >= last.x {
            // beyond r_out only by rounding
            return (last.l - self.l_out + last.y * (x - last.x), last.y);
        }
        let i = self.nodes.partition_point(|n| n.x <= x) - 1;
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        let h = b.x - a.x;
        let t = (x - a.x) / h;
        let (l, _) = hermite(t, h, a.l, b.l, a.y, b.y);
        let (y, _) = hermite(t, h, a.y, b.y, a.dy, b.dy);
        (l - self.l_out, y)
    }

    pub fn log_value(&self, r: f64) -> f64 {
        self.log_state(r).0
    }

    /// `r R'(r)/R(r)`.
    pub fn log_derivative(&self, r: f64) -> f64 {
        self.log_state(r).1
    }

    pub fn value(&self, r: f64) -> f64 {
        self.log_value(r).exp()
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let (l, y) = self.log_state(r);
        y * l.exp() / r
    }

    /// Samples on a log grid over the solved span.
    pub fn samples(&self, per_decade: usize) -> Vec<RadialSample> {
        let decades = (self.r_out / self.r_start).log10();
        let n = ((decades * per_decade as f64).ceil() as usize).max(1);
        (0..=n)
            .map(|i| {
                let r = self.r_start * (self.r_out / self.r_start).powf(i as f64 / n as f64);
                let (l, y) = self.log_state(r);
                RadialSample {
                    r,
                    log_value: l,
                    value: l.exp(),
                    derivative: y * l.exp() / r,
                }
            })
            .collect()
    }

    /// Relative residual `|R'' + pR' + qR| / (|R''| + |pR'| + |qR|)` at each
    /// node, with `y'` from a seven-point stencil on the stored `y` values.
    pub fn residuals(&self) -> Vec<f64> {
        let n = self.nodes.len();
        const W: usize = 7;
        if n < W {
            return vec![0.0; n];
        }
        let xs: Vec<f64> = self.nodes.iter().map(|n| n.x).collect();
        let ys: Vec<f64> = self.nodes.iter().map(|n| n.y).collect();
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(W / 2).min(n - W);
                let dy = lagrange_derivative(&xs[lo..lo + W], &ys[lo..lo + W], i - lo);
                let node = &self.nodes[i];
                let y = node.y;
                // multiplied through by r²/R
                let second = dy + y * y - y;
                let first = (node.b + 1.0) * y;
                let num = (second + first + node.c).abs();
                let den = second.abs() + first.abs() + node.c.abs();
                if den == 0.0 {
                    0.0
                } else {
                    num / den
                }
            })
            .collect()
    }

    /// Least-squares slope of `ln R` against `r^{-ε}` on `[r_lo, r_hi]`,
    /// negated, to compare with the WKB constant.
    pub fn wkb_fit(&self, r_lo: f64, r_hi: f64) -> Option<f64> {
        let eps = self.small_r_asymptotic?.epsilon;
        let pts = log_grid(r_lo, r_hi, 64);
        let xs: Vec<f64> = pts.iter().map(|r| r.powf(-eps)).collect();
        let ys: Vec<f64> = pts.iter().map(|&r| self.log_value(r)).collect();
        Some(-linear_slope(&xs, &ys))
    }

    /// Least-squares slope of `ln(r R'/R)` against `ln r` on `[r_lo, r_hi]`.
    pub fn log_derivative_exponent(&self, r_lo: f64, r_hi: f64) -> f64 {
        let pts = log_grid(r_lo, r_hi, 64);
        let xs: Vec<f64> = pts.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|&r| self.log_derivative(r).ln()).collect();
        linear_slope(&xs, &ys)
    }
}

impl RadialMode {
    /// `ln(R² φ^{n-1} e^{-χ} r)` at `x = ln r`, the integrand of
    /// [`Self::log_weighted_integral`] in the variable `x`.
    fn log_integrand(&self, x: f64) -> f64 {
        let r = x.exp();
        let m = &self.coeffs.metric;
        2.0 * self.log_value(r) + (m.n() - 1) as f64 * m.phi().value(r).ln() - m.chi().value(r) + x
    }

    /// `ln ∫_0^x` of the integrand for `x` at or below the launch point,
    /// treating the integrand as locally exponential.
    fn log_tail(&self, x: f64) -> f64 {
        let r = x.exp();
        let m = &self.coeffs.metric;
        let phi = m.phi_jet(r);
        let slope = 2.0 * self.log_derivative(r)
            + (m.n() - 1) as f64 * r * phi.derivative(1) / phi.value()
            - r * m.chi_jet(r).derivative(1)
            + 1.0;
        if slope > 0.0 {
            self.log_integrand(x) - slope.ln()
        } else {
            f64::INFINITY
        }
    }

    /// `ln ∫_a^b` of the integrand over a single interpolation interval.
    ///
    /// Only the window where the integrand is within `e^{-50}` of its
    /// endpoint maximum is integrated, on Gauss panels across which the
    /// exponent changes by at most 4.
    fn log_panel(&self, a: f64, b: f64) -> f64 {
        let (ha, hb) = (self.log_integrand(a), self.log_integrand(b));
        let slope = (hb - ha) / (b - a);
        let (lo, hi) = if slope > 0.0 {
            (a.max(b - 50.0 / slope), b)
        } else if slope < 0.0 {
            (a, b.min(a - 50.0 / slope))
        } else {
            (a, b)
        };
        let panels = ((slope.abs() * (hi - lo) / 4.0).ceil() as usize).max(1);
        let h_ref = ha.max(hb);
        let width = (hi - lo) / panels as f64;
        let sum: f64 = (0..panels)
            .map(|j| {
                let x0 = lo + j as f64 * width;
                gauss_panel(&|x| (self.log_integrand(x) - h_ref).exp(), x0, x0 + width)
            })
            .sum();
        h_ref + sum.ln()
    }

    fn cumulative(&self) -> &Vec<f64> {
        self.cumulative.get_or_init(|| {
            let mut acc = vec![self.log_tail(self.nodes[0].x)];
            for w in self.nodes.windows(2) {
                let panel = self.log_panel(w[0].x, w[1].x);
                acc.push(log_add_exp(*acc.last().unwrap(), panel));
            }
            acc
        })
    }

    /// `ln ∫_0^r R(ρ)² φ(ρ)^{n-1} e^{-χ(ρ)} dρ` for a non-constant mode.
    pub fn log_weighted_integral(&self, r: f64) -> Result<f64> {
        if self.nodes.is_empty() {
            return Err(Error::Config(
                "weighted integral of the constant mode is a metric quantity".into(),
            ));
        }
        let x = r.ln();
        if x <= self.nodes[0].x {
            return Ok(self.log_tail(x));
        }
        let acc = self.cumulative();
        let i = (self.nodes.partition_point(|n| n.x <= x) - 1).min(self.nodes.len() - 1);
        if x == self.nodes[i].x || i == self.nodes.len() - 1 {
            return Ok(acc[i]);
        }
        Ok(log_add_exp(acc[i], self.log_panel(self.nodes[i].x, x)))
    }
}
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub(crate) fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{GluingParams, Regime};
    use approx::assert_relative_eq;

    #[test]
    fn coefficient_examples() {
        let flat = radial_ode_coefficients(&HornMetric::flat(10.0), 0);
        assert_relative_eq!(flat.p(0.5), 4.0, max_relative = 1e-14);
        assert_eq!(flat.q(0.5), 0.0);

        let (eps, eta, k) = (0.5, 0.5, 2);
        let horn = radial_ode_coefficients(&HornMetric::pure_horn(eps, eta, 1.0), k);
        let r: f64 = 0.3;
        assert_relative_eq!(
            horn.p(r),
            (2.0 * (1.0 + eps) + 1.0 - eta) / r,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            horn.q(r),
            -4.0 * 6.0 * r.powf(-2.0 - 2.0 * eps),
            max_relative = 1e-13
        );

        let cone = radial_ode_coefficients(&HornMetric::cone(0.1, 10.0), 1);
        assert_relative_eq!(cone.q(2.0), -2.0 / (0.01 * 4.0), max_relative = 1e-13);
    }

    #[test]
    fn indicial_examples() {
        assert_relative_eq!(
            eta_relation_exponents(0.0, 2.0).unwrap().0,
            1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            eta_relation_exponents(0.5, 2.0).unwrap().0,
            (-0.5 + 8.25f64.sqrt()) / 2.0,
            epsilon = 1e-14
        );
        let (ap, am) = cone_exponents(0.1, 2.0).unwrap();
        assert_relative_eq!(ap, 13.650_971_698_084_906, epsilon = 1e-12);
        assert_relative_eq!(ap * am, -200.0, max_relative = 1e-13);
        assert!(matches!(
            indicial_exponents(1.0, 1.0),
            Err(Error::ComplexRoots(_))
        ));
    }

    #[test]
    fn flat_linear_mode() {
        let mode = solve_radial(&HornMetric::flat(10.0), 1, default_span(1.0)).unwrap();
        for r in [1e-10, 1e-4, 0.01, 0.3, 1.0] {
            assert_relative_eq!(mode.value(r), r, max_relative = 1e-8);
        }
        assert_relative_eq!(mode.derivative(0.2), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn cone_modes_are_powers() {
        let a = 0.4;
        let metric = HornMetric::cone(a, 100.0);
        for k in 1..=3 {
            let mode = solve_radial(&metric, k, default_span(5.0)).unwrap();
            let alpha = mode.indicial_at_infinity().unwrap().0;
            for r in [1e-6, 1e-3, 0.7, 3.0] {
                assert_relative_eq!(
                    mode.log_value(r),
                    alpha * (r / 5.0).ln(),
                    max_relative = 1e-6
                );
            }
        }
    }

    #[test]
    fn constant_mode() {
        let mode =
            solve_radial(&HornMetric::pure_horn(0.5, 0.5, 1.0), 0, default_span(0.1)).unwrap();
        assert!(mode.is_constant());
        assert_eq!(mode.value(1e-3), 1.0);
        assert_eq!(mode.derivative(1e-3), 0.0);
    }

    #[test]
    fn horn_mode_follows_wkb() {
        let metric = HornMetric::pure_horn(0.5, 0.5, 1.0);
        let mode = solve_radial(&metric, 1, default_span(0.1)).unwrap();
        assert!(mode.max_residual() <= RESIDUAL_TOLERANCE);
        let slope = mode.log_derivative_exponent(1e-6, 1e-5);
        assert!((slope + 0.5).abs() < 0.01, "slope {slope}");
        let fitted = mode.wkb_fit(1e-9, 1e-8).unwrap();
        let predicted = mode.small_r_asymptotic().unwrap().wkb_constant;
        assert_relative_eq!(fitted, predicted, max_relative = 0.02);
        assert!(mode.value(0.01) < 1e-10);
    }

    #[test]
    fn glued_preset_modes_solve() {
        for regime in [Regime::PositiveK, Regime::NonpositiveK] {
            let metric = HornMetric::glued(&GluingParams::preset(regime)).unwrap();
            let r_out = metric.r_max().min(20.0) * 0.99;
            for k in [1, 2, 5] {
                let mode = solve_radial(&metric, k, default_span(r_out)).unwrap();
                assert!(mode.max_residual() <= RESIDUAL_TOLERANCE);
                assert!(mode.log_value(1e-6) < -10.0);
            }
        }
    }

    #[test]
    fn rejects_bad_span() {
        let m = HornMetric::pure_horn(0.5, 0.5, 1.0);
        assert!(matches!(
            solve_radial(&m, 1, (0.2, 0.1)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            solve_radial(&m, 1, (0.1, 2.0)),
            Err(Error::Config(_))
        ));
    }
}
