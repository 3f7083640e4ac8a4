//! Three-circle, gradient and weak-form checks on solved fields.

use super::field::{polish_max, HarmonicField};
use super::radial::log_grid;
use crate::error::{Error, Result};
use crate::quad::integrate_piecewise;
use crate::sphere::fibonacci_sphere;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::LN_2;

/// One evaluation of `M(r) ≤ 4^s M(r/2) ⇒ M(r/2) ≤ 4^s M(r/4)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThreeCircle {
    pub r: f64,
    pub s: f64,
    /// `ln(M(r)/M(r/2))`.
    pub log_ratio_outer: f64,
    /// `ln(M(r/2)/M(r/4))`.
    pub log_ratio_inner: f64,
    pub premise: bool,
    pub conclusion: bool,
    pub implication_holds: bool,
    /// `s(s + 1 - η)` avoids every `k(k+1)`.
    pub admissible: bool,
}

/// Whether `s(s + 1 - η)` stays away from the sphere spectrum `{k(k+1)}`.
pub fn admissible_exponent(s: f64, eta: f64) -> bool {
    let v = s * (s + 1.0 - eta);
    let k_hi = v.max(0.0).sqrt().ceil() as usize + 2;
    (0..=k_hi).all(|k| (v - (k * (k + 1)) as f64).abs() > 1e-9 * v.abs().max(1.0))
}

pub fn three_circle_check(field: &HarmonicField, r: f64, s: f64) -> Result<ThreeCircle> {
    let m1 = field.log_mean_square(r)?;
    let m2 = field.log_mean_square(r / 2.0)?;
    let m4 = field.log_mean_square(r / 4.0)?;
    let bound = 2.0 * s * LN_2;
    let log_ratio_outer = m1 - m2;
    let log_ratio_inner = m2 - m4;
    let premise = log_ratio_outer <= bound;
    let conclusion = log_ratio_inner <= bound;
    Ok(ThreeCircle {
        r,
        s,
        log_ratio_outer,
        log_ratio_inner,
        premise,
        conclusion,
        implication_holds: !premise || conclusion,
        admissible: admissible_exponent(s, field.metric().eta().unwrap_or(0.0)),
    })
}

/// A radius sweep with the empirical threshold `k₀`.
#[derive(Clone, Debug, Serialize)]
pub struct ThreeCircleSweep {
    pub rows: Vec<ThreeCircle>,
    /// Smallest tested radius from which every larger tested radius satisfies the implication.
    pub k0: Option<f64>,
    pub all_hold: bool,
}

pub fn three_circle_sweep(
    field: &HarmonicField,
    radii: &[f64],
    s: f64,
) -> Result<ThreeCircleSweep> {
    let mut rows: Vec<ThreeCircle> = radii
        .par_iter()
        .map(|&r| three_circle_check(field, r, s))
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.r.total_cmp(&b.r));
    let mut k0 = None;
    for row in rows.iter().rev() {
        if !row.implication_holds {
            break;
        }
        k0 = Some(row.r);
    }
    let all_hold = rows.iter().all(|r| r.implication_holds);
    Ok(ThreeCircleSweep { rows, k0, all_hold })
}

/// `r·sup_{B_r}|∇u| / sup_{B_{2r}}|u|` against a budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChengYau {
    pub r: f64,
    pub gradient_sup: f64,
    pub value_sup: f64,
    pub ratio: f64,
    pub budget: f64,
    pub pass: bool,
}

const BALL_RADII: usize = 48;
const GRADIENT_LATTICE: usize = 2048;

fn ball_radii(r: f64) -> Vec<f64> {
    log_grid(1e-4 * r, r, BALL_RADII)
}

/// `sup_{B_r}|u|`, including the vertex value.
pub fn ball_sup(field: &HarmonicField, r: f64) -> f64 {
    ball_radii(r)
        .par_iter()
        .map(|&t| field.boundary_sup(t))
        .reduce(|| field.vertex_value().abs(), f64::max)
}

/// `sup_{B_r}|∇u|` over a radius grid and a 2048-point lattice, polished locally.
pub fn gradient_sup(field: &HarmonicField, r: f64) -> f64 {
    let lattice = fibonacci_sphere(GRADIENT_LATTICE);
    let step = (4.0 * std::f64::consts::PI / GRADIENT_LATTICE as f64).sqrt();
    ball_radii(r)
        .par_iter()
        .map(|&t| {
            let (val, idx) = lattice
                .iter()
                .enumerate()
                .map(|(i, p)| (field.gradient_norm(t, *p), i))
                .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
            if val == 0.0 {
                return 0.0;
            }
            polish_max(&|p| field.gradient_norm(t, p), lattice[idx], val, step).0
        })
        .reduce(|| 0.0, f64::max)
}

pub fn cheng_yau_check(field: &HarmonicField, r: f64, budget: f64) -> Result<ChengYau> {
    if 2.0 * r > field.ball_radius() * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "2r = {} exceeds the ball radius {}",
            2.0 * r,
            field.ball_radius()
        )));
    }
    let gradient = gradient_sup(field, r);
    let value = ball_sup(field, 2.0 * r);
    let ratio = if gradient == 0.0 {
        0.0
    } else {
        r * gradient / value
    };
    Ok(ChengYau {
        r,
        gradient_sup: gradient,
        value_sup: value,
        ratio,
        budget,
        pass: ratio <= budget,
    })
}

/// Worst relative residual of `∫⟨∇u, ∇(ψ Y)⟩ dμ = 0` over random test functions.
#[derive(Clone, Debug, Serialize)]
pub struct WeakResidual {
    pub tests: usize,
    pub max_residual: f64,
}

/// Tolerance for [`weak_residual`].
pub const WEAK_TOLERANCE: f64 = 1e-5;

/// Tests against `ψ(r) Y_{km}` with `ψ = (r-a)²(b-r)²·poly(r)` supported in
/// `[a, b] ⊂ [s/20, s]`, for degrees present in the field.
///
/// Per mode the weak form reduces to `∫ (R'ψ' + λ R ψ / φ²) φ² e^{-χ} dr`;
/// the residual is that integral over the same integral of absolute values.
pub fn weak_residual(field: &HarmonicField, tests: usize, seed: u64) -> Result<WeakResidual> {
    let modes = field.modes();
    let active: Vec<_> = modes.iter().filter(|m| m.k > 0).collect();
    if active.is_empty() {
        return Ok(WeakResidual {
            tests: 0,
            max_residual: 0.0,
        });
    }
    let s = field.ball_radius();
    let metric = field.metric();
    let breaks = metric.fine_breakpoints();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..tests {
        let mode = active[rng.random_range(0..active.len())];
        let a = rng.random_range(0.05 * s..0.85 * s);
        let b = rng.random_range(a + 0.1 * s..=s);
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let psi = |r: f64| {
            let t = (r - a) / (b - a);
            let bump = (r - a).powi(2) * (b - r).powi(2);
            let poly = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
            let d_bump = 2.0 * (r - a) * (b - r).powi(2) - 2.0 * (r - a).powi(2) * (b - r);
            let d_poly = (c[1] + t * (2.0 * c[2] + 3.0 * t * c[3])) / (b - a);
            (bump * poly, d_bump * poly + bump * d_poly)
        };
        let radial = &mode.radial;
        let lambda = radial.lambda();
        let parts = |r: f64| {
            let phi = metric.phi().value(r);
            let w = phi * phi * (-metric.chi().value(r)).exp();
            let (p, dp) = psi(r);
            (
                radial.derivative(r) * dp * w,
                lambda * radial.value(r) * p / (phi * phi) * w,
            )
        };
        let total = integrate_piecewise(
            &|r| parts(r).0.abs() + parts(r).1.abs(),
            a,
            b,
            &breaks,
            0.0,
            1e-6,
        )?;
        let signed = integrate_piecewise(
            &|r| parts(r).0 + parts(r).1,
            a,
            b,
            &breaks,
            1e-9 * total,
            0.0,
        )?;
        if total > 0.0 {
            worst = worst.max(signed.abs() / total);
        }
    }
    Ok(WeakResidual {
        tests,
        max_residual: worst,
    })
}
