//! Ricci and Bakry–Émery `N`-Ricci tensors of weighted warped products.

use crate::error::{Error, Result};
use crate::metric::{HornMetric, RadialFunction};
use rayon::prelude::*;
use serde::Serialize;

/// Coefficients of `Ric = rr·dr² + sphere·g_{S^{n-1}}` for `dr² + φ² g_{S^{n-1}}`.
///
/// `rr = -(n-1)φ''/φ`, `sphere = (n-2)(1-φ'²) - φ''φ`.
pub fn ric_warped(phi: &dyn RadialFunction, n: usize, r: f64) -> Result<(f64, f64)> {
    let j = phi.jet(r);
    let (f, df, ddf) = (j.value(), j.derivative(1), j.derivative(2));
    if !(f > 0.0) {
        return Err(Error::Domain(format!("warping function is {f} at r = {r}")));
    }
    let n1 = n as f64 - 1.0;
    Ok((-n1 * ddf / f, (n1 - 1.0) * (1.0 - df * df) - ddf * f))
}

/// Coefficients of `Ric_N = Ric + Hess χ - dχ⊗dχ/(N-n)`.
///
/// `Hess χ = χ_rr dr² + φφ'χ_r g_{S^{n-1}}`.
pub fn ric_n_weighted(metric: &HornMetric, r: f64) -> Result<(f64, f64)> {
    let (rr, sphere) = ric_warped(metric.phi(), metric.n(), r)?;
    let phi = metric.phi_jet(r);
    let chi = metric.chi_jet(r);
    let (chi_r, chi_rr) = (chi.derivative(1), chi.derivative(2));
    let dn = metric.big_n() - metric.n() as f64;
    Ok((
        rr + chi_rr - chi_r * chi_r / dn,
        sphere + phi.value() * phi.derivative(1) * chi_r,
    ))
}

/// `Ric₄` of the pure horn `φ = r^{1+ε}/2`, `χ = -(1-η) log r`, `n = 3`.
pub fn ric4_horn_closed_form(epsilon: f64, eta: f64, r: f64) -> (f64, f64) {
    let rr = (eta * (1.0 - eta) - 2.0 * epsilon * (1.0 + epsilon)) / (r * r);
    let sphere = 1.0 - (1.0 + epsilon) * (2.0 + 2.0 * epsilon - eta) / 4.0 * r.powf(2.0 * epsilon);
    (rr, sphere)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct RicciEval {
    pub r: f64,
    /// `Ric_N(∂r, ∂r)`.
    pub rr_component: f64,
    /// `Ric_N(e, e)` for a unit sphere direction `e`.
    pub sphere_component: f64,
    pub min_eigen_gap: f64,
}

/// Evaluates `Ric_N` in an orthonormal frame and its gap above `K`.
pub fn ricci_eval(metric: &HornMetric, k: f64, r: f64) -> Result<RicciEval> {
    let (rr, sphere) = ric_n_weighted(metric, r)?;
    let phi = metric.phi().value(r);
    let sphere_component = sphere / (phi * phi);
    Ok(RicciEval {
        r,
        rr_component: rr,
        sphere_component,
        min_eigen_gap: (rr - k).min(sphere_component - k),
    })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Radial,
    Sphere,
}

#[derive(Clone, Debug, Serialize)]
pub struct RicciReport {
    pub curvature_bound: f64,
    pub tolerance: f64,
    #[serde(skip)]
    pub grid: Vec<RicciEval>,
    pub verdict: Verdict,
    /// `(r, gap)` at the grid minimum of the gap.
    pub worst_point: (f64, f64),
    pub worst_direction: Direction,
}

impl RicciReport {
    /// `Ok` on PASS, otherwise a certification error at the worst point.
    pub fn ensure_pass(&self) -> Result<()> {
        match self.verdict {
            Verdict::Pass => Ok(()),
            Verdict::Fail => Err(Error::Certification {
                message: format!(
                    "Ric_N >= K g fails in the {:?} direction",
                    self.worst_direction
                ),
                r: self.worst_point.0,
                value: self.worst_point.1,
            }),
        }
    }
}

/// Where to evaluate the curvature.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub points: usize,
    /// Smallest radius; the tensor is singular at the vertex itself.
    pub r_min: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 4000,
            r_min: None,
        }
    }
}

fn log_space(a: f64, b: f64, n: usize, out: &mut Vec<f64>) {
    let (la, lb) = (a.ln(), b.ln());
    for i in 0..n {
        out.push((la + (lb - la) * i as f64 / (n.max(2) - 1) as f64).exp());
    }
}

fn lin_space(a: f64, b: f64, n: usize, out: &mut Vec<f64>) {
    for i in 0..n {
        out.push(a + (b - a) * i as f64 / (n.max(2) - 1) as f64);
    }
}

/// Grid: log-spaced towards the vertex, uniform across every transition
/// band (with extra points in the mollifier layers), log-spaced beyond.
pub fn certification_grid(metric: &HornMetric, spec: &GridSpec) -> Vec<f64> {
    let n = spec.points.max(16);
    // stop short of a closing pole where φ = 0
    let r_hi = metric.r_max() * (1.0 - 1e-9);
    let mut out = Vec::with_capacity(n + 16);
    match metric.params() {
        Some(p) => {
            let r_min = spec.r_min.unwrap_or(1e-6 * p.rho);
            let (a, b, w) = (p.weight_start(), p.weight_end(), p.mollifier_eps);
            let share = |f: f64| ((n as f64) * f).round() as usize;
            log_space(r_min, p.rho, share(0.35), &mut out);
            lin_space(p.rho, p.rho + p.zeta, share(0.1), &mut out);
            lin_space(p.rho + p.zeta, a, share(0.15), &mut out);
            lin_space(a, a + w, share(0.05), &mut out);
            lin_space(a, b, share(0.1), &mut out);
            lin_space(b - w, b, share(0.05), &mut out);
            let rest = n.saturating_sub(out.len());
            if r_hi / b > 10.0 {
                log_space(b, r_hi, rest, &mut out);
            } else {
                lin_space(b, r_hi, rest, &mut out);
            }
        }
        None => {
            let r_min = spec.r_min.unwrap_or(1e-6 * r_hi);
            log_space(r_min, r_hi, n, &mut out);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    // segments share endpoints; refill by bisecting the widest log gaps
    while out.len() < n && out.len() >= 2 {
        let i = (1..out.len())
            .max_by(|&i, &j| (out[i] / out[i - 1]).total_cmp(&(out[j] / out[j - 1])))
            .unwrap();
        out.insert(i, (out[i] * out[i - 1]).sqrt());
    }
    out
}

/// Checks `Ric_N ≥ K g` on the certification grid.
///
/// PASS iff the smallest frame gap is at least `-1e-8·max(1, |K|)`.
pub fn certify_lower_bound(metric: &HornMetric, k: f64, spec: &GridSpec) -> Result<RicciReport> {
    let grid = certification_grid(metric, spec);
    let evals = grid
        .par_iter()
        .map(|&r| ricci_eval(metric, k, r))
        .collect::<Result<Vec<_>>>()?;
    let tolerance = 1e-8 * k.abs().max(1.0);
    let worst = evals
        .iter()
        .min_by(|a, b| a.min_eigen_gap.total_cmp(&b.min_eigen_gap))
        .copied()
        .ok_or_else(|| Error::Config("empty grid".into()))?;
    let worst_direction = if worst.rr_component <= worst.sphere_component {
        Direction::Radial
    } else {
        Direction::Sphere
    };
    Ok(RicciReport {
        curvature_bound: k,
        tolerance,
        verdict: Verdict::from_bool(worst.min_eigen_gap >= -tolerance),
        worst_point: (worst.r, worst.min_eigen_gap),
        worst_direction,
        grid: evals,
    })
}

/// Eigenvalues of the doubly warped metric `dr² + (c r^{1-η})² k₁ + (r^{1+ε}/2)² k₂`
/// over the Hopf fibration, as printed closed forms.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct HopfEigenvalues {
    pub e_r: f64,
    pub e_fiber: f64,
    pub e_base: f64,
    /// `e_fiber < 0`, i.e. no lower bound along the circle fibres as `r → 0`.
    pub fiber_negative: bool,
}

/// Hopf-fibration eigenvalues at radius `r`.
///
/// `chi_scale` is the fibre scale `c`; the closed forms do not depend on it.
pub fn hopf_ricci(epsilon: f64, eta: f64, chi_scale: f64, r: f64) -> HopfEigenvalues {
    let _ = chi_scale;
    let r2 = r * r;
    let e_r = (eta * (1.0 - eta) + 2.0 * epsilon * (1.0 + epsilon)) / r2;
    let e_fiber = (eta * (1.0 - eta) - 2.0 * (1.0 - eta) * (1.0 + epsilon)) / r2;
    let e_base = 2.0 * epsilon * (1.0 + epsilon) / r2
        + (4.0 - (1.0 + epsilon).powi(2) * r.powf(2.0 * epsilon)) / r.powf(2.0 + 2.0 * epsilon)
        - (1.0 - eta) * (1.0 + epsilon) / r2;
    HopfEigenvalues {
        e_r,
        e_fiber,
        e_base,
        fiber_negative: e_fiber < 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Model;
    use approx::assert_relative_eq;

    #[test]
    fn flat_cone_is_ricci_flat() {
        let (rr, s) = ric_warped(
            &Model::Power {
                coeff: 1.0,
                exponent: 1.0,
            },
            3,
            0.7,
        )
        .unwrap();
        assert_eq!((rr, s), (0.0, 0.0));
    }

    #[test]
    fn round_sphere_equator() {
        let (rr, s) = ric_warped(&Model::Sine { a: 1.0 }, 3, std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(rr, 2.0, epsilon = 1e-14);
        assert_relative_eq!(s, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn horn_rr_unweighted() {
        let (rr, _) = ric_warped(
            &Model::Power {
                coeff: 0.5,
                exponent: 1.1,
            },
            3,
            1.0,
        )
        .unwrap();
        assert_relative_eq!(rr, -0.22, max_relative = 1e-14);
    }

    #[test]
    fn closed_form_reference_values() {
        let (rr, s) = ric4_horn_closed_form(0.1, 0.5, 1.0);
        assert_relative_eq!(rr, 0.03, max_relative = 1e-13);
        assert_relative_eq!(s, 0.5325, max_relative = 1e-13);
        let (rr, s) = ric4_horn_closed_form(0.0, 0.0, 3.0);
        assert_eq!((rr, s), (0.0, 0.5));
        assert!((ric4_horn_closed_form(0.1, 0.5, 1e-200).1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_horn_matches_closed_form() {
        let m = HornMetric::pure_horn(0.1, 0.5, 10.0);
        let (rr, s) = ric_n_weighted(&m, 1.0).unwrap();
        assert_relative_eq!(rr, 0.03, max_relative = 1e-12);
        assert_relative_eq!(s, 0.5325, max_relative = 1e-12);
    }

    #[test]
    fn nonpositive_domain() {
        let e = ric_warped(&Model::Sine { a: 1.0 }, 3, 4.0).unwrap_err();
        assert_eq!(e.kind(), "DomainError");
    }

    #[test]
    fn hopf_fiber_value() {
        let h = hopf_ricci(0.1, 0.5, 1.0, 1.0);
        assert_relative_eq!(h.e_fiber, -0.85, max_relative = 1e-14);
        assert!(h.fiber_negative);
        assert!(h.e_r > 0.0);
    }

    #[test]
    fn glued_presets_certify() {
        use crate::profiles::{GluingParams, Regime};
        for regime in [Regime::PositiveK, Regime::NonpositiveK] {
            let p = GluingParams::preset(regime);
            let m = HornMetric::glued(&p).unwrap();
            let rep = certify_lower_bound(&m, p.curvature_bound, &GridSpec::default()).unwrap();
            assert_eq!(rep.grid.len(), 4000);
            assert!(rep.verdict.is_pass(), "{regime:?}: {:?}", rep.worst_point);
        }
    }

    #[test]
    fn steep_horn_fails_radially() {
        let m = HornMetric::pure_horn(0.5, 0.1, 1.0);
        let rep = certify_lower_bound(&m, 0.0, &GridSpec::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert_eq!(rep.worst_direction, Direction::Radial);
        let (r, gap) = rep.worst_point;
        assert_relative_eq!(gap * r * r, 0.09 - 1.5, max_relative = 1e-10);
    }
}
