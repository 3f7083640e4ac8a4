//! Separated harmonic fields `u = Σ c_{km} R_k(r) Y_{km}` on a ball `B_s`.

use super::radial::{default_span, solve_radial, RadialMode};
use crate::error::{Error, Result};
use crate::metric::HornMetric;
use crate::quad::integrate_piecewise;
use crate::sphere::{fibonacci_sphere, geodesic_step, real_sh_all, sh_index, tangent_frame};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// Largest spherical-harmonic degree accepted by [`dirichlet_solve`].
pub const MAX_DEGREE: usize = 32;

/// Default truncation degree.
pub const DEFAULT_K_MAX: usize = 8;

/// Boundary data in the real orthonormal basis: `k → (m → coefficient)`.
pub type BoundaryCoeffs = BTreeMap<usize, BTreeMap<i64, f64>>;

const BASE_LATTICE: usize = 2048;
const LATTICE_LEVELS: usize = 6;
const SUP_REFINE_TOL: f64 = 1e-4;
// ln r spread below which the mean-square integrand is negligible
const LOG_DEPTH: f64 = 60.0;

/// Boundary data `Σ_m c_m Y_{k,m}` for a single degree.
pub fn single_degree(k: usize, coeffs: &[(i64, f64)]) -> BoundaryCoeffs {
    let mut map = BoundaryCoeffs::new();
    map.insert(k, coeffs.iter().copied().collect());
    map
}

/// Boundary data `c·Y_{1,0}`.
pub fn y10(c: f64) -> BoundaryCoeffs {
    single_degree(1, &[(0, c)])
}

/// Boundary data `u ≡ c`.
pub fn constant_data(c: f64) -> BoundaryCoeffs {
    single_degree(0, &[(0, c * (4.0 * PI).sqrt())])
}

/// One `(k, m, coefficient)` term with its radial factor.
#[derive(Clone, Debug)]
pub struct ModeTerm {
    pub k: usize,
    pub m: i64,
    pub coeff: f64,
    pub radial: Arc<RadialMode>,
}

#[derive(Clone, Debug)]
struct DegreeBlock {
    k: usize,
    radial: Arc<RadialMode>,
    coeffs: Vec<(i64, f64)>,
    /// `Σ_m c²`, the angular L² mass of the block.
    mass: f64,
}

impl DegreeBlock {
    fn angular(&self, harmonics: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|&(m, c)| c * harmonics[sh_index(self.k, m)])
            .sum()
    }
}

/// A harmonic function on `B_s` with prescribed boundary values.
#[derive(Debug)]
pub struct HarmonicField {
    metric: HornMetric,
    s: f64,
    k_max: usize,
    blocks: Vec<DegreeBlock>,
    truncated_mass: f64,
    /// Angular parts `A_k(p) = Σ_m c_{km} Y_{km}(p)` on nested lattices.
    tables: Vec<OnceLock<Vec<Vec<f64>>>>,
}

impl Clone for HarmonicField {
    fn clone(&self) -> Self {
        HarmonicField {
            metric: self.metric.clone(),
            s: self.s,
            k_max: self.k_max,
            blocks: self.blocks.clone(),
            truncated_mass: self.truncated_mass,
            tables: (0..LATTICE_LEVELS).map(|_| OnceLock::new()).collect(),
        }
    }
}

/// Solves `Δu = 0` on `B_s` with `u|∂B_s = Σ c_{km} Y_{km}`, keeping degrees `≤ k_max`.
pub fn dirichlet_solve(
    metric: &HornMetric,
    s: f64,
    boundary: &BoundaryCoeffs,
    k_max: usize,
) -> Result<HarmonicField> {
    if k_max > MAX_DEGREE {
        return Err(Error::Config(format!(
            "k_max = {k_max} exceeds {MAX_DEGREE}"
        )));
    }
    if metric.n() != 3 {
        return Err(Error::Config(
            "spherical harmonics are implemented for S² only (n = 3)".into(),
        ));
    }
    if !(s > 0.0 && s <= metric.r_max()) {
        return Err(Error::Config(format!(
            "ball radius {s} outside (0, {}]",
            metric.r_max()
        )));
    }
    let mut truncated_mass = 0.0;
    let mut wanted = Vec::new();
    for (&k, row) in boundary {
        let coeffs: Vec<(i64, f64)> = row
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(&m, &c)| (m, c))
            .collect();
        if let Some(&(m, _)) = coeffs.iter().find(|(m, _)| m.unsigned_abs() as usize > k) {
            return Err(Error::Config(format!(
                "order m = {m} invalid for degree {k}"
            )));
        }
        if coeffs.is_empty() {
            continue;
        }
        if k > k_max {
            truncated_mass += coeffs.iter().map(|(_, c)| c * c).sum::<f64>();
        } else {
            wanted.push((k, coeffs));
        }
    }
    let radials: Vec<Arc<RadialMode>> = wanted
        .par_iter()
        .map(|(k, _)| solve_radial(metric, *k, default_span(s)).map(Arc::new))
        .collect::<Result<_>>()?;
    let blocks = wanted
        .into_iter()
        .zip(radials)
        .map(|((k, coeffs), radial)| DegreeBlock {
            k,
            mass: coeffs.iter().map(|(_, c)| c * c).sum(),
            radial,
            coeffs,
        })
        .collect();
    Ok(HarmonicField {
        metric: metric.clone(),
        s,
        k_max,
        blocks,
        truncated_mass,
        tables: (0..LATTICE_LEVELS).map(|_| OnceLock::new()).collect(),
    })
}

/// `ln Σ exp(v)`, `-∞` for an empty or all-`-∞` input.
pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl HarmonicField {
    pub fn metric(&self) -> &HornMetric {
        &self.metric
    }

    pub fn ball_radius(&self) -> f64 {
        self.s
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// L² norm of the dropped boundary coefficients.
    pub fn truncation_norm(&self) -> f64 {
        self.truncated_mass.sqrt()
    }

    pub fn modes(&self) -> Vec<ModeTerm> {
        self.blocks
            .iter()
            .flat_map(|b| {
                b.coeffs.iter().map(|&(m, coeff)| ModeTerm {
                    k: b.k,
                    m,
                    coeff,
                    radial: b.radial.clone(),
                })
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    /// The value at the vertex, i.e. the `k = 0` coefficient times `Y_{00}`.
    pub fn vertex_value(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.k == 0)
            .map(|b| b.coeffs[0].1 / (4.0 * PI).sqrt())
            .sum()
    }

    /// A copy with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> HarmonicField {
        let mut out = self.clone();
        for b in &mut out.blocks {
            for c in &mut b.coeffs {
                c.1 *= factor;
            }
            b.mass *= factor * factor;
        }
        out.truncated_mass *= factor * factor;
        out
    }

    fn max_degree(&self) -> usize {
        self.blocks.iter().map(|b| b.k).max().unwrap_or(0)
    }

    fn log_radials(&self, r: f64) -> Vec<(f64, f64)> {
        self.blocks.iter().map(|b| b.radial.log_state(r)).collect()
    }

    /// `u(r, p)` for a unit vector `p`.
    pub fn value(&self, r: f64, p: [f64; 3]) -> f64 {
        let harmonics = real_sh_all(self.max_degree(), p);
        self.blocks
            .iter()
            .map(|b| b.radial.value(r) * b.angular(&harmonics))
            .sum()
    }

    /// `ln |u(r, p)|`, finite where `u` itself underflows.
    pub fn log_abs_value(&self, r: f64, p: [f64; 3]) -> f64 {
        let harmonics = real_sh_all(self.max_degree(), p);
        let logs = self.log_radials(r);
        let top = logs.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return top;
        }
        let sum: f64 = self
            .blocks
            .iter()
            .zip(&logs)
            .map(|(b, l)| (l.0 - top).exp() * b.angular(&harmonics))
            .sum();
        top + sum.abs().ln()
    }

    /// `|∇u|` at `(r, p)`: radial part plus the sphere gradient scaled by `1/φ`.
    pub fn gradient_norm(&self, r: f64, p: [f64; 3]) -> f64 {
        let k = self.max_degree();
        let logs = self.log_radials(r);
        let radial_part: f64 = {
            let harmonics = real_sh_all(k, p);
            self.blocks
                .iter()
                .zip(&logs)
                .map(|(b, &(l, y))| y * l.exp() / r * b.angular(&harmonics))
                .sum()
        };
        let on_sphere = |q: [f64; 3]| {
            let harmonics = real_sh_all(k, q);
            self.blocks
                .iter()
                .zip(&logs)
                .map(|(b, &(l, _))| l.exp() * b.angular(&harmonics))
                .sum::<f64>()
        };
        let tangential =
            crate::sphere::tangential_gradient_norm(&on_sphere, p) / self.metric.phi().value(r);
        radial_part.hypot(tangential)
    }

    fn table(&self, level: usize) -> &Vec<Vec<f64>> {
        self.tables[level].get_or_init(|| {
            let points = fibonacci_sphere(BASE_LATTICE << level);
            let k = self.max_degree();
            let harmonics: Vec<Vec<f64>> = points.par_iter().map(|p| real_sh_all(k, *p)).collect();
            self.blocks
                .iter()
                .map(|b| harmonics.iter().map(|h| b.angular(h)).collect())
                .collect()
        })
    }

    /// `(ln sup_{∂B_r}|u|, maximizer)`.
    ///
    /// The Fibonacci lattice is doubled from 2048 points until the lattice
    /// maximum changes by less than `1e-4` relative, then the best point is
    /// polished by a shrinking pattern search on the sphere.
    pub fn log_boundary_sup(&self, r: f64) -> (f64, [f64; 3]) {
        let logs = self.log_radials(r);
        let top = logs.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return (top, [0.0, 0.0, 1.0]);
        }
        let weights: Vec<f64> = logs.iter().map(|l| (l.0 - top).exp()).collect();
        let mut best = (0.0, 0usize, 0usize);
        let mut previous = f64::NAN;
        for level in 0..LATTICE_LEVELS {
            let table = self.table(level);
            let n = BASE_LATTICE << level;
            let (val, idx) = (0..n)
                .map(|i| {
                    (
                        weights
                            .iter()
                            .zip(table)
                            .map(|(w, t)| w * t[i])
                            .sum::<f64>()
                            .abs(),
                        i,
                    )
                })
                .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
            best = (val, idx, n);
            if (val - previous).abs() <= SUP_REFINE_TOL * val {
                break;
            }
            previous = val;
        }
        if best.0 == 0.0 {
            return (f64::NEG_INFINITY, [0.0, 0.0, 1.0]);
        }
        let k = self.max_degree();
        let f = |q: [f64; 3]| {
            let h = real_sh_all(k, q);
            self.blocks
                .iter()
                .zip(&weights)
                .map(|(b, w)| w * b.angular(&h))
                .sum::<f64>()
                .abs()
        };
        let start = fibonacci_sphere(best.2)[best.1];
        let (val, p) = polish_max(&f, start, best.0, (4.0 * PI / best.2 as f64).sqrt());
        (top + val.ln(), p)
    }

    /// `sup_{∂B_r}|u|`.
    pub fn boundary_sup(&self, r: f64) -> f64 {
        self.log_boundary_sup(r).0.exp()
    }

    /// `ln ∫_0^r R_k(ρ)² w(ρ) dρ` with `w = φ² e^{-χ}` (`radial = None` means `R ≡ 1`).
    fn log_radial_integral(&self, radial: Option<&RadialMode>, r: f64) -> Result<f64> {
        if let Some(m) = radial.filter(|m| !m.is_constant()) {
            return m.log_weighted_integral(r);
        }
        let metric = &self.metric;
        let h = |x: f64| {
            let rho = x.exp();
            2.0 * metric.phi().value(rho).ln() - metric.chi().value(rho) + x
        };
        let x_hi = r.ln();
        let x_lo = x_hi - LOG_DEPTH;
        let h_ref = (0..=64)
            .map(|i| h(x_lo + (x_hi - x_lo) * i as f64 / 64.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let breaks: Vec<f64> = metric.fine_breakpoints().iter().map(|b| b.ln()).collect();
        let body = integrate_piecewise(&|x| (h(x) - h_ref).exp(), x_lo, x_hi, &breaks, 0.0, 1e-12)?;
        // tail below x_lo for an integrand growing like e^{h}
        let rho = x_lo.exp();
        let phi = metric.phi_jet(rho);
        let slope = 2.0 * rho * phi.derivative(1) / phi.value()
            - rho * metric.chi_jet(rho).derivative(1)
            + 1.0;
        let tail = if slope > 0.0 {
            (h(x_lo) - h_ref).exp() / slope
        } else {
            0.0
        };
        Ok(h_ref + (body + tail).ln())
    }

    /// `ln μ(B_r)`.
    pub fn log_ball_measure(&self, r: f64) -> Result<f64> {
        Ok((4.0 * PI).ln() + self.log_radial_integral(None, r)?)
    }

    /// `ln ∫_{B_r} u² dμ`, using orthonormality of the angular parts.
    pub fn log_ball_integral(&self, r: f64) -> Result<f64> {
        let terms: Vec<f64> = self
            .blocks
            .iter()
            .map(|b| Ok(b.mass.ln() + self.log_radial_integral(Some(&b.radial), r)?))
            .collect::<Result<_>>()?;
        Ok(log_sum_exp(terms))
    }

    /// `ln M_u(r)` where `M_u(r) = μ(B_r)^{-1} ∫_{B_r} u² dμ`.
    pub fn log_mean_square(&self, r: f64) -> Result<f64> {
        if r > self.s * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "radius {r} exceeds ball radius {}",
                self.s
            )));
        }
        Ok(self.log_ball_integral(r)? - self.log_ball_measure(r)?)
    }

    pub fn mean_square(&self, r: f64) -> Result<f64> {
        Ok(self.log_mean_square(r)?.exp())
    }

    /// JSON `{params, s, modes: [{k, m, coeff, radial_samples}]}`.
    pub fn to_json(&self, samples_per_decade: usize) -> serde_json::Value {
        #[derive(Serialize)]
        struct Sample {
            r: f64,
            log_value: f64,
            derivative: f64,
        }
        let modes: Vec<serde_json::Value> = self
            .modes()
            .iter()
            .map(|t| {
                let samples: Vec<Sample> = t
                    .radial
                    .samples(samples_per_decade)
                    .into_iter()
                    .map(|s| Sample { r: s.r, log_value: s.log_value, derivative: s.derivative })
                    .collect();
                serde_json::json!({ "k": t.k, "m": t.m, "coeff": t.coeff, "radial_samples": samples })
            })
            .collect();
        serde_json::json!({
            "params": self.metric.params(),
            "s": self.s,
            "k_max": self.k_max,
            "truncation_norm": self.truncation_norm(),
            "modes": modes,
        })
    }
}

/// Local maximization of `f` on the sphere by a shrinking compass search.
pub(crate) fn polish_max(
    f: &dyn Fn([f64; 3]) -> f64,
    start: [f64; 3],
    start_val: f64,
    step: f64,
) -> (f64, [f64; 3]) {
    let (mut p, mut val, mut step) = (start, start_val, step);
    while step > 1e-9 {
        let (e1, e2) = tangent_frame(p);
        let mut moved = false;
        for e in [e1, e2, e1.map(|v| -v), e2.map(|v| -v)] {
            let q = geodesic_step(p, e, step);
            let v = f(q);
            if v > val {
                (p, val, moved) = (q, v, true);
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (val, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::y1_sup;
    use approx::assert_relative_eq;

    #[test]
    fn constant_data_gives_constant_field() {
        let m = HornMetric::pure_horn(0.5, 0.5, 1.0);
        let f = dirichlet_solve(&m, 0.1, &constant_data(2.5), DEFAULT_K_MAX).unwrap();
        assert_relative_eq!(f.value(0.03, [0.0, 0.6, 0.8]), 2.5, max_relative = 1e-14);
        assert_relative_eq!(f.vertex_value(), 2.5, max_relative = 1e-14);
        assert_relative_eq!(f.mean_square(0.05).unwrap(), 6.25, max_relative = 1e-10);
        assert_relative_eq!(f.boundary_sup(0.02), 2.5, max_relative = 1e-12);
    }

    #[test]
    fn flat_linear_field() {
        let m = HornMetric::flat(10.0);
        let f = dirichlet_solve(&m, 1.0, &y10(1.0), DEFAULT_K_MAX).unwrap();
        let p = [0.0, 0.6, 0.8];
        assert_relative_eq!(f.value(0.5, p), 0.5 * y1_sup() * 0.8, max_relative = 1e-8);
        for r in [1e-3, 0.1, 0.7] {
            assert_relative_eq!(
                f.mean_square(r).unwrap(),
                3.0 * r * r / (20.0 * PI),
                max_relative = 1e-8
            );
            assert_relative_eq!(f.boundary_sup(r), r * y1_sup(), max_relative = 1e-8);
        }
        assert_relative_eq!(f.gradient_norm(0.4, p), y1_sup(), max_relative = 1e-7);
    }

    #[test]
    fn dirichlet_data_reproduced() {
        let m = HornMetric::pure_horn(0.5, 0.5, 1.0);
        let mut data = y10(0.7);
        data.insert(2, [(-1, 0.3), (2, -0.4)].into_iter().collect());
        let f = dirichlet_solve(&m, 0.1, &data, DEFAULT_K_MAX).unwrap();
        for p in fibonacci_sphere(50) {
            let h = real_sh_all(2, p);
            let expected =
                0.7 * h[sh_index(1, 0)] + 0.3 * h[sh_index(2, -1)] - 0.4 * h[sh_index(2, 2)];
            assert!((f.value(0.1, p) - expected).abs() <= 1e-6 * expected.abs().max(1e-12));
        }
    }

    #[test]
    fn horn_mode_is_tiny_near_vertex() {
        let m = HornMetric::pure_horn(0.5, 0.5, 1.0);
        let f = dirichlet_solve(&m, 0.1, &y10(1.0), DEFAULT_K_MAX).unwrap();
        assert!(f.boundary_sup(0.01) < 1e-10);
        let (log_q, _) = f.log_boundary_sup(1e-6);
        assert!(log_q.is_finite() && log_q < -1000.0);
    }

    #[test]
    fn mean_square_is_additive_over_modes() {
        let m = HornMetric::pure_horn(0.5, 0.5, 1.0);
        let a = dirichlet_solve(&m, 0.1, &y10(1.0), 4).unwrap();
        let b = dirichlet_solve(&m, 0.1, &single_degree(2, &[(1, 0.5)]), 4).unwrap();
        let mut both = y10(1.0);
        both.insert(2, [(1, 0.5)].into_iter().collect());
        let ab = dirichlet_solve(&m, 0.1, &both, 4).unwrap();
        for r in [0.01, 0.05, 0.1] {
            let sum = a.mean_square(r).unwrap() + b.mean_square(r).unwrap();
            assert_relative_eq!(ab.mean_square(r).unwrap(), sum, max_relative = 1e-10);
        }
    }

    #[test]
    fn truncation_is_reported() {
        let m = HornMetric::flat(10.0);
        let data = single_degree(3, &[(0, 2.0)]);
        let f = dirichlet_solve(&m, 1.0, &data, 2).unwrap();
        assert!(f.is_zero());
        assert_eq!(f.truncation_norm(), 2.0);
        assert!(dirichlet_solve(&m, 1.0, &data, 40).is_err());
    }
}
