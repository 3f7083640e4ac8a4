//! Vanishing order of harmonic fields at the vertex.
//!
//! All magnitudes are tracked as logarithms: on a horn `q(r)` drops below
//! the smallest double long before the grids used here end.

use crate::error::{Error, Result};
use crate::harmonic::{dirichlet_solve, y10, HarmonicField, DEFAULT_K_MAX};
use crate::metric::HornMetric;
use crate::profiles::GluingParams;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::f64::consts::LN_2;
use std::fmt;

/// Quadratic coefficient below which the fit counts as super-polynomial.
pub const CURVATURE_THRESHOLD: f64 = -1e-3;
/// Minimum coefficient of determination for a curvature-based verdict.
pub const MIN_R_SQUARED: f64 = 0.99;
/// Effective order on the innermost decade that alone implies infinite order.
pub const ORDER_CEILING: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayVerdict {
    InfiniteOrder,
    FiniteOrder(f64),
    Inconclusive,
}

impl fmt::Display for DecayVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayVerdict::InfiniteOrder => write!(f, "InfiniteOrder"),
            DecayVerdict::FiniteOrder(m) if (m - m.round()).abs() < 1e-3 => {
                write!(f, "FiniteOrder({})", m.round())
            }
            DecayVerdict::FiniteOrder(m) => write!(f, "FiniteOrder({m:.4})"),
            DecayVerdict::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

impl Serialize for DecayVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `ln q ≈ a + b ln r + c (ln r)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuasiPolyFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug)]
pub struct DecayOptions {
    /// Smallest radius as a multiple of the ball radius.
    pub r_lo_factor: f64,
    /// Largest radius as a multiple of the ball radius.
    pub r_hi_factor: f64,
    pub per_octave: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            r_lo_factor: 1e-5,
            r_hi_factor: 0.5,
            per_octave: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub s: f64,
    pub per_octave: usize,
    pub r_grid: Vec<f64>,
    /// `ln sup_{∂B_r}|u|`.
    pub log_q: Vec<f64>,
    /// `ln M_u(r)`.
    pub log_m: Vec<f64>,
    /// `d ln q / d ln r` by centred differences.
    pub effective_order: Vec<f64>,
    /// `ln D`, `D = sup q` over the outermost octave of the grid.
    pub log_annulus_sup: f64,
    pub fit: Option<QuasiPolyFit>,
    pub verdict: DecayVerdict,
}

/// Geometric grid from `lo` to `hi` with `per_octave` points per doubling.
pub fn octave_grid(lo: f64, hi: f64, per_octave: usize) -> Vec<f64> {
    let steps = ((hi / lo).log2() * per_octave as f64).round() as usize;
    let ratio = 2f64.powf(1.0 / per_octave as f64);
    (0..=steps)
        .map(|i| hi / ratio.powi((steps - i) as i32))
        .collect()
}

fn centred_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (y[b] - y[a]) / (x[b] - x[a])
        })
        .collect()
}

pub fn decay_report(field: &HarmonicField, opts: &DecayOptions) -> Result<DecayReport> {
    let s = field.ball_radius();
    let r_grid = octave_grid(opts.r_lo_factor * s, opts.r_hi_factor * s, opts.per_octave);
    let rows: Vec<(f64, f64)> = r_grid
        .par_iter()
        .map(|&r| {
            let log_q = field.log_boundary_sup(r).0;
            let log_m = if field.is_zero() {
                f64::NEG_INFINITY
            } else {
                field.log_mean_square(r)?
            };
            Ok((log_q, log_m))
        })
        .collect::<Result<_>>()?;
    let (log_q, log_m): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let log_r: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
    let effective_order = if log_q.iter().all(|v| v.is_finite()) {
        centred_slopes(&log_r, &log_q)
    } else {
        vec![f64::NAN; r_grid.len()]
    };
    let top = *r_grid.last().unwrap();
    let log_annulus_sup = r_grid
        .iter()
        .zip(&log_q)
        .filter(|(r, _)| **r >= 0.5 * top * (1.0 - 1e-12))
        .map(|(_, q)| *q)
        .fold(f64::NEG_INFINITY, f64::max);
    let (fit, verdict) = if log_q.iter().all(|v| v.is_finite()) {
        let (fit, verdict) = quasipoly_fit(&r_grid, &log_q)?;
        (Some(fit), verdict)
    } else {
        (None, DecayVerdict::Inconclusive)
    };
    Ok(DecayReport {
        s,
        per_octave: opts.per_octave,
        r_grid,
        log_q,
        log_m,
        effective_order,
        log_annulus_sup,
        fit,
        verdict,
    })
}

/// Least-squares fit of `ln q` on `{1, ln r, (ln r)²}` and the resulting verdict.
pub fn quasipoly_fit(r_grid: &[f64], log_q: &[f64]) -> Result<(QuasiPolyFit, DecayVerdict)> {
    let n = r_grid.len();
    if n < 12 || r_grid.len() != log_q.len() {
        return Err(Error::Fit(format!(
            "need at least 12 matching samples, got {n}"
        )));
    }
    let (lo, hi) = r_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if (hi / lo).log10() < 3.0 - 1e-9 {
        return Err(Error::Fit("grid must span at least three decades".into()));
    }
    let t: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
    let design = DMatrix::from_fn(n, 3, |i, j| t[i].powi(j as i32));
    let rhs = DVector::from_column_slice(log_q);
    let svd = design.clone().svd(true, true);
    if svd.rank(1e-12 * svd.singular_values.max()) < 3 {
        return Err(Error::Fit("design matrix is rank deficient".into()));
    }
    let coef = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let fitted = &design * &coef;
    let mean = log_q.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = log_q.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = log_q
        .iter()
        .zip(fitted.iter())
        .map(|(v, f)| (v - f).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let fit = QuasiPolyFit {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        r_squared,
    };

    let slopes = centred_slopes(&t, log_q);
    let inner: Vec<f64> = t
        .iter()
        .zip(&slopes)
        .filter(|(x, _)| **x <= t[0] + 10f64.ln())
        .map(|(_, s)| *s)
        .collect();
    let inner_order = inner.iter().sum::<f64>() / inner.len() as f64;
    let (s_min, s_max) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| {
            (a.min(s), b.max(s))
        });
    let verdict = if (fit.c <= CURVATURE_THRESHOLD && r_squared >= MIN_R_SQUARED)
        || inner_order > ORDER_CEILING
    {
        DecayVerdict::InfiniteOrder
    } else if fit.c.abs() < -CURVATURE_THRESHOLD && s_max - s_min <= 0.01 * fit.b.abs().max(1.0) {
        DecayVerdict::FiniteOrder(fit.b)
    } else {
        DecayVerdict::Inconclusive
    };
    Ok((fit, verdict))
}

/// `C_fit = max q(r) / (r^ε q(2r))` over grid pairs.
#[derive(Clone, Debug, Serialize)]
pub struct RecursionCheck {
    pub epsilon: f64,
    /// `ln C_fit`; `-∞` for the zero field.
    pub log_c_fit: f64,
    pub c_fit: f64,
    /// Radius of the maximizing pair.
    pub worst_r: f64,
    /// `false` if the maximum sits on the innermost octave, i.e. `C_fit` is
    /// still growing as the grid is extended toward the vertex.
    pub uniform: bool,
    /// `ln(q(r) / (r^ε q(2r)))` for each pair.
    pub log_ratios: Vec<(f64, f64)>,
    /// `q(r₀ 2^{-k}) ≤ 2^{εk(k+1)/2} (C_fit r^ε)^k D` at every available `k`.
    pub chain_holds: bool,
}

pub fn recursion_check(report: &DecayReport, epsilon: f64) -> Result<RecursionCheck> {
    let p = report.per_octave;
    let n = report.r_grid.len();
    if n <= 3 * p {
        return Err(Error::Fit(
            "recursion check needs at least three octaves".into(),
        ));
    }
    let log_ratios: Vec<(f64, f64)> = (0..n - p)
        .map(|i| {
            let r = report.r_grid[i];
            let v = report.log_q[i] - epsilon * r.ln() - report.log_q[i + p];
            (r, if v.is_nan() { f64::NEG_INFINITY } else { v })
        })
        .collect();
    let (worst_r, log_c_fit) =
        log_ratios
            .iter()
            .fold((report.r_grid[0], f64::NEG_INFINITY), |a, b| {
                if b.1 > a.1 {
                    *b
                } else {
                    a
                }
            });
    let uniform =
        log_c_fit == f64::NEG_INFINITY || worst_r >= 2.0 * report.r_grid[0] * (1.0 - 1e-12);

    let mut chain_holds = true;
    if log_c_fit.is_finite() {
        let mut k = 1;
        while k * p < n {
            let i = n - 1 - k * p;
            let r = report.r_grid[i];
            let kf = k as f64;
            let bound = report.log_annulus_sup
                + epsilon * kf * (kf + 1.0) / 2.0 * LN_2
                + kf * (log_c_fit + epsilon * r.ln());
            chain_holds &= report.log_q[i] <= bound + 1e-9 * bound.abs().max(1.0);
            k += 1;
        }
    }
    Ok(RecursionCheck {
        epsilon,
        log_c_fit,
        c_fit: log_c_fit.exp(),
        worst_r,
        uniform,
        log_ratios,
        chain_holds,
    })
}

/// `q(r) ≤ C e^{-(ε/4)(ln r)²}` with `C` read off the outermost octave.
#[derive(Clone, Debug, Serialize)]
pub struct QuasiPolyCertificate {
    pub epsilon: f64,
    pub exponent: f64,
    pub log_c: f64,
    /// Smallest `ln C - ln q(r) - (ε/4)(ln r)²` over the grid.
    pub worst_margin: f64,
    pub holds: bool,
}

pub fn quasipoly_certificate(report: &DecayReport, epsilon: f64) -> QuasiPolyCertificate {
    let exponent = epsilon / 4.0;
    let g: Vec<f64> = report
        .r_grid
        .iter()
        .zip(&report.log_q)
        .map(|(r, q)| q + exponent * r.ln().powi(2))
        .collect();
    let top = *report.r_grid.last().unwrap();
    let log_c = report
        .r_grid
        .iter()
        .zip(&g)
        .filter(|(r, _)| **r >= 0.5 * top * (1.0 - 1e-12))
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_margin = g.iter().map(|v| log_c - v).fold(f64::INFINITY, f64::min);
    let holds = log_c.is_finite() && worst_margin >= -1e-9 * log_c.abs().max(1.0);
    QuasiPolyCertificate {
        epsilon,
        exponent,
        log_c,
        worst_margin,
        holds,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RowTrend {
    Vanishing,
    Bounded,
    Diverging,
}

#[derive(Clone, Debug, Serialize)]
pub struct VioTable {
    pub r_grid: Vec<f64>,
    /// `ln ∫_{B_r} u² dμ`.
    pub log_integral: Vec<f64>,
    /// `ln(∫_{B_r} u² dμ / r^m)` for `m = 0..=m_max`.
    pub rows: Vec<Vec<f64>>,
    /// Slope of each row against `ln r` over the innermost decade.
    pub inner_slopes: Vec<f64>,
    pub trends: Vec<RowTrend>,
    /// First `m` whose row does not tend to zero.
    pub first_persistent: Option<usize>,
    pub all_vanish: bool,
}

/// Largest row index accepted by [`vio_table`].
pub const MAX_VIO_ROW: usize = 30;

const TREND_SLOPE: f64 = 0.1;

/// Geometric grid down to `1e-12·s` with four points per octave.
pub fn default_vio_grid(s: f64) -> Vec<f64> {
    octave_grid(1e-12 * s, 0.5 * s, 4)
}

pub fn vio_table(field: &HarmonicField, r_grid: &[f64], m_max: usize) -> Result<VioTable> {
    if m_max > MAX_VIO_ROW {
        return Err(Error::Config(format!(
            "m_max = {m_max} exceeds {MAX_VIO_ROW}"
        )));
    }
    if r_grid.len() < 4 {
        return Err(Error::Config("vio table needs at least four radii".into()));
    }
    let log_integral: Vec<f64> = r_grid
        .par_iter()
        .map(|&r| {
            if field.is_zero() {
                Ok(f64::NEG_INFINITY)
            } else {
                field.log_ball_integral(r)
            }
        })
        .collect::<Result<_>>()?;
    let log_r: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
    let rows: Vec<Vec<f64>> = (0..=m_max)
        .map(|m| {
            log_integral
                .iter()
                .zip(&log_r)
                .map(|(i, lr)| i - m as f64 * lr)
                .collect()
        })
        .collect();
    let lo = log_r.iter().copied().fold(f64::INFINITY, f64::min);
    let inner: Vec<usize> = (0..r_grid.len())
        .filter(|&i| log_r[i] <= lo + 10f64.ln() + 1e-12)
        .collect();
    let inner_slopes: Vec<f64> = rows
        .iter()
        .map(|row| {
            if row.contains(&f64::NEG_INFINITY) {
                return f64::INFINITY;
            }
            let xs: Vec<f64> = inner.iter().map(|&i| log_r[i]).collect();
            let ys: Vec<f64> = inner.iter().map(|&i| row[i]).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            sxy / sxx
        })
        .collect();
    let trends: Vec<RowTrend> = inner_slopes
        .iter()
        .map(|&s| {
            if s > TREND_SLOPE {
                RowTrend::Vanishing
            } else if s >= -TREND_SLOPE {
                RowTrend::Bounded
            } else {
                RowTrend::Diverging
            }
        })
        .collect();
    let first_persistent = trends.iter().position(|t| *t != RowTrend::Vanishing);
    Ok(VioTable {
        r_grid: r_grid.to_vec(),
        log_integral,
        rows,
        inner_slopes,
        trends,
        first_persistent,
        all_vanish: first_persistent.is_none(),
    })
}

/// Fields used by the decay pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldPreset {
    /// `r·Y_{1,0}` on flat space, ball radius 1.
    FlatLinear,
    /// `Y_{1,0}` boundary data on the glued horn, ball radius `ρ`.
    Horn,
}

impl std::str::FromStr for FieldPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat-linear" => Ok(FieldPreset::FlatLinear),
            "horn" => Ok(FieldPreset::Horn),
            other => Err(Error::Config(format!(
                "unknown field preset '{other}' (expected flat-linear or horn)"
            ))),
        }
    }
}

impl FieldPreset {
    pub fn build(self, params: &GluingParams) -> Result<(HarmonicField, Option<f64>)> {
        match self {
            FieldPreset::FlatLinear => Ok((
                dirichlet_solve(&HornMetric::flat(10.0), 1.0, &y10(1.0), DEFAULT_K_MAX)?,
                None,
            )),
            FieldPreset::Horn => {
                let metric = HornMetric::glued(params)?;
                let field = dirichlet_solve(&metric, params.rho, &y10(1.0), DEFAULT_K_MAX)?;
                Ok((field, Some(params.epsilon)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{cone_exponents, constant_data};
    use crate::profiles::Regime;
    use approx::assert_relative_eq;

    fn synthetic(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let r = octave_grid(1e-5, 0.5, 8);
        let q = r.iter().map(|&x| f(x)).collect();
        (r, q)
    }

    #[test]
    fn fit_recovers_power_law() {
        let (r, q) = synthetic(|x| 2.0 * x.ln());
        let (fit, verdict) = quasipoly_fit(&r, &q).unwrap();
        assert_relative_eq!(fit.b, 2.0, epsilon = 1e-9);
        assert!(fit.c.abs() < 1e-10);
        assert_eq!(verdict, DecayVerdict::FiniteOrder(fit.b));
        assert_eq!(verdict.to_string(), "FiniteOrder(2)");
    }

    #[test]
    fn fit_recovers_quasi_polynomial() {
        let (r, q) = synthetic(|x| -0.2 * x.ln().powi(2));
        let (fit, verdict) = quasipoly_fit(&r, &q).unwrap();
        assert_relative_eq!(fit.c, -0.2, epsilon = 1e-6);
        assert_eq!(verdict, DecayVerdict::InfiniteOrder);
    }

    #[test]
    fn fit_needs_enough_range() {
        let r = octave_grid(1e-2, 0.5, 8);
        let q = vec![0.0; r.len()];
        assert!(matches!(quasipoly_fit(&r, &q), Err(Error::Fit(_))));
    }

    #[test]
    fn flat_linear_is_finite_order_one() {
        let (field, _) = FieldPreset::FlatLinear
            .build(&GluingParams::preset(Regime::PositiveK))
            .unwrap();
        let report = decay_report(&field, &DecayOptions::default()).unwrap();
        assert_eq!(report.verdict.to_string(), "FiniteOrder(1)");
        let vio = vio_table(&field, &default_vio_grid(1.0), 30).unwrap();
        // ∫_{B_r} (r Y10)² = r⁵/5
        assert_eq!(vio.first_persistent, Some(5));
        assert_eq!(vio.trends[5], RowTrend::Bounded);
        assert_eq!(vio.trends[6], RowTrend::Diverging);
        assert_relative_eq!(
            vio.log_integral[10],
            vio.r_grid[10].powi(5).ln() - 5f64.ln(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn cone_recovers_exponent() {
        let metric = HornMetric::cone(0.5, 100.0);
        let field = dirichlet_solve(&metric, 1.0, &y10(1.0), 4).unwrap();
        let report = decay_report(&field, &DecayOptions::default()).unwrap();
        let alpha = cone_exponents(0.5, 2.0).unwrap().0;
        match report.verdict {
            DecayVerdict::FiniteOrder(b) => assert_relative_eq!(b, alpha, max_relative = 1e-2),
            v => panic!("unexpected {v}"),
        }
        let rc = recursion_check(&report, 0.1).unwrap();
        assert!(!rc.uniform);
    }

    #[test]
    fn horn_is_infinite_order() {
        let (field, eps) = FieldPreset::Horn
            .build(&GluingParams::preset(Regime::PositiveK))
            .unwrap();
        let eps = eps.unwrap();
        let report = decay_report(&field, &DecayOptions::default()).unwrap();
        assert_eq!(report.verdict, DecayVerdict::InfiniteOrder);
        assert!(report.fit.unwrap().c < 0.0);
        assert!(quasipoly_certificate(&report, eps).holds);
        let rc = recursion_check(&report, eps).unwrap();
        assert!(rc.uniform && rc.chain_holds && rc.c_fit.is_finite());
        let vio = vio_table(&field, &default_vio_grid(field.ball_radius()), 30).unwrap();
        assert!(vio.all_vanish, "{:?}", vio.inner_slopes);
    }

    #[test]
    fn zero_and_constant_fields() {
        let flat = HornMetric::flat(10.0);
        let zero = dirichlet_solve(&flat, 1.0, &y10(0.0), 4).unwrap();
        let report = decay_report(&zero, &DecayOptions::default()).unwrap();
        assert!(report.log_q.iter().all(|q| *q == f64::NEG_INFINITY));
        let rc = recursion_check(&report, 0.5).unwrap();
        assert_eq!(rc.c_fit, 0.0);
        let vio = vio_table(&zero, &default_vio_grid(1.0), 3).unwrap();
        assert!(vio.all_vanish);
        let c = dirichlet_solve(&flat, 1.0, &constant_data(-2.0), 4).unwrap();
        assert_relative_eq!(c.boundary_sup(0.3), 2.0, max_relative = 1e-12);
    }
}
