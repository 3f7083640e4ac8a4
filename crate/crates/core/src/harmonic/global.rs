//! Normalized harmonic fields on growing balls of a conical-at-infinity horn.

use super::field::{dirichlet_solve, BoundaryCoeffs, HarmonicField};
use super::radial::{cone_exponents, log_grid};
use crate::error::{Error, Result};
use crate::metric::HornMetric;
use crate::sphere::fibonacci_sphere;
use rayon::prelude::*;
use serde::Serialize;

/// Difference threshold for the convergence verdict.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-4;

const DIFF_RADII: usize = 32;
const DIFF_LATTICE: usize = 2048;

/// Summary of a global construction.
#[derive(Clone, Debug, Serialize)]
pub struct GlobalConstruction {
    pub radii: Vec<f64>,
    pub k0: f64,
    /// Growth exponent of the model solution at infinity.
    pub alpha: f64,
    /// `M_{u_i}(k₀/2)` before normalization.
    pub mean_squares: Vec<f64>,
    /// `sup_{B_{k₀}} |ũ_i - ũ_{i+1}|`.
    pub differences: Vec<f64>,
    pub monotone: bool,
    pub converged: bool,
    #[serde(skip)]
    pub fields: Vec<HarmonicField>,
}

/// `sup_{B_r} |u - v|` on a radius grid times a lattice.
pub fn sup_difference(u: &HarmonicField, v: &HarmonicField, r: f64) -> f64 {
    let lattice = fibonacci_sphere(DIFF_LATTICE);
    let mut radii = log_grid(r / 64.0, r, DIFF_RADII);
    radii.push(r);
    let centre = (u.vertex_value() - v.vertex_value()).abs();
    radii
        .par_iter()
        .map(|&t| {
            lattice
                .iter()
                .map(|p| (u.value(t, *p) - v.value(t, *p)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| centre, f64::max)
}

/// Dirichlet solves on `B_{R_i}` with `data(R_i)`, normalized by `√M(k₀/2)`.
pub fn global_construct_with(
    metric: &HornMetric,
    radii: &[f64],
    k0: f64,
    alpha: f64,
    data: &(dyn Fn(f64) -> BoundaryCoeffs + Sync),
) -> Result<GlobalConstruction> {
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.first().is_none_or(|&r| r < k0) {
        return Err(Error::Config(
            "radii must be increasing and at least k0".into(),
        ));
    }
    let solved: Vec<(HarmonicField, f64)> = radii
        .par_iter()
        .map(|&big_r| {
            let field = dirichlet_solve(metric, big_r, &data(big_r), 2)?;
            let m = if field.is_zero() {
                0.0
            } else {
                field.mean_square(k0 / 2.0)?
            };
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::DegenerateNormalization(m));
            }
            Ok((field.scaled(1.0 / m.sqrt()), m))
        })
        .collect::<Result<_>>()?;
    let (fields, mean_squares): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    let differences: Vec<f64> = fields
        .windows(2)
        .map(|w| sup_difference(&w[0], &w[1], k0))
        .collect();
    let monotone = differences.windows(2).all(|w| w[1] < w[0]);
    let converged = differences
        .last()
        .is_some_and(|&d| d < CONVERGENCE_THRESHOLD);
    Ok(GlobalConstruction {
        radii: radii.to_vec(),
        k0,
        alpha,
        mean_squares,
        differences,
        monotone,
        converged,
        fields,
    })
}

/// Boundary data `R^α (Y_{1,0} + (δ/R) Y_{2,0})` with `α` the growth exponent
/// of degree one on the asymptotic cone.
///
/// The `δ` term makes the normalized fields depend on `R`; with `δ = 0` a
/// single mode normalizes to the same field for every `R`.
pub fn global_harmonic_construct(
    metric: &HornMetric,
    radii: &[f64],
    k0: f64,
    delta: f64,
) -> Result<GlobalConstruction> {
    let a = metric.cone_slope().ok_or_else(|| {
        Error::Config("global construction needs a metric that is conical at infinity".into())
    })?;
    let alpha = cone_exponents(a, 2.0)?.0;
    let data = move |big_r: f64| {
        let scale = big_r.powf(alpha);
        let mut map = BoundaryCoeffs::new();
        map.insert(1, [(0, scale)].into_iter().collect());
        if delta != 0.0 {
            map.insert(2, [(0, scale * delta / big_r)].into_iter().collect());
        }
        map
    };
    global_construct_with(metric, radii, k0, alpha, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cone_is_scale_invariant() {
        let metric = HornMetric::cone(0.5, 200.0);
        let g = global_harmonic_construct(&metric, &[10.0, 20.0, 40.0, 80.0], 2.0, 0.0).unwrap();
        assert!(
            g.differences.iter().all(|&d| d < 1e-8),
            "{:?}",
            g.differences
        );
    }

    #[test]
    fn zero_data_is_degenerate() {
        let metric = HornMetric::cone(0.5, 200.0);
        let err =
            global_construct_with(&metric, &[10.0, 20.0], 2.0, 1.0, &|_| BoundaryCoeffs::new())
                .unwrap_err();
        assert!(matches!(err, Error::DegenerateNormalization(_)));
    }
}
