use super::junction::{junction_report, Piecewise};
use super::mollifier::unit_step;
use super::params::{derive_gluing_constants, GluingParams, Regime, DEFAULT_OPEN_RMAX};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quad::Cumulative;
use crate::scalar::Scalar;
use serde::Serialize;

const PANELS: usize = 64;
const CERT_POINTS: usize = 4000;

/// Weight `χ` of the measure `e^{-χ} dvol`.
///
/// Equal to `-(1-η) log r` up to `A = ρ+ζ+κ` and constant from `B = ρ+ζ+3κ`
/// on. On `[A, B]` the second derivative is
/// `χ_rr = s1·(1-η)/r² + (1-s1)·s2·k`, where `s1` steps down just after `A`,
/// `s2` steps down just before `B` (both of width `mollifier_eps`) and the
/// constant `k` is fixed by `χ_r(B) = 0`.
#[derive(Clone, Debug)]
pub struct WeightProfile {
    params: GluingParams,
    start: f64,
    end: f64,
    plateau_slope: f64,
    chi_start: f64,
    slope_start: f64,
    plateau_value: f64,
    cache: Cumulative,
}

/// Grid summary of `χ_rr - χ_r²` on the transition band.
#[derive(Clone, Debug, Serialize)]
pub struct ConvexityCertificate {
    pub points: usize,
    pub min_value: f64,
    pub argmin: f64,
    pub pass: bool,
}

pub const CONVEXITY_TOLERANCE: f64 = 1e-10;

fn blend_parts<S: Scalar>(p: &GluingParams, t: S) -> (S, S) {
    let (a, b, w) = (p.weight_start(), p.weight_end(), p.mollifier_eps);
    let s1 = unit_step((t - a) / w);
    let s2 = unit_step((t - (b - w)) / w);
    let horn = s1 * (1.0 - p.eta) / (t * t);
    (horn, (S::cst(1.0) - s1) * s2)
}

fn segments(p: &GluingParams) -> [(f64, usize); 3] {
    let (a, b, w) = (p.weight_start(), p.weight_end(), p.mollifier_eps);
    [(a + w, PANELS), (b - w, PANELS), (b, PANELS)]
}

impl WeightProfile {
    /// Builds the weight and certifies `χ_rr - χ_r² ≥ -1e-10` on the band.
    pub fn new(params: &GluingParams) -> Result<Self> {
        params.validate()?;
        let (a, b) = (params.weight_start(), params.weight_end());
        let r_max = match params.regime {
            Regime::PositiveK => {
                let c = derive_gluing_constants(params)?;
                params.rho + params.zeta - c.xi + std::f64::consts::PI / c.a
            }
            Regime::NonpositiveK => params.r_max.unwrap_or(DEFAULT_OPEN_RMAX),
        };
        if !(a + 2.0 * params.mollifier_eps < b && b < r_max) {
            return Err(Error::Config(format!(
                "weight band [{a}, {b}] must fit inside (0, r_max = {r_max})"
            )));
        }
        let eta = params.eta;
        let segs = segments(params);
        let f0 = |t: f64| blend_parts(params, t).0;
        let f1 = |t: f64| blend_parts(params, t).1;
        let int0 = Cumulative::new(&f0, a, &segs).first(&f0, a, b);
        let int1 = Cumulative::new(&f1, a, &segs).first(&f1, a, b);
        let slope_start = -(1.0 - eta) / a;
        // χ_rr is affine in the plateau constant, so χ_r(B) = 0 is solved directly.
        let plateau_slope = (-slope_start - int0) / int1;

        let p = params.clone();
        let chi_rr = move |t: f64| {
            let (h, m) = blend_parts(&p, t);
            h + m * plateau_slope
        };
        let cache = Cumulative::new(&chi_rr, a, &segs);
        let chi_start = -(1.0 - eta) * a.ln();
        let mut profile = WeightProfile {
            params: params.clone(),
            start: a,
            end: b,
            plateau_slope,
            chi_start,
            slope_start,
            plateau_value: 0.0,
            cache,
        };
        profile.plateau_value = profile.eval_piece(1, b);
        let cert = profile.convexity_certificate();
        if !cert.pass {
            return Err(Error::Certification {
                message: "chi_rr - chi_r^2 negative on the transition band".into(),
                r: cert.argmin,
                value: cert.min_value,
            });
        }
        let smooth = junction_report(&profile, 4);
        if !smooth.pass {
            return Err(Error::Certification {
                message: "weight profile not smooth".into(),
                r: b,
                value: smooth.worst_mismatch,
            });
        }
        Ok(profile)
    }

    pub fn params(&self) -> &GluingParams {
        &self.params
    }

    /// Constant value of `χ_rr` in the middle of the band.
    pub fn plateau_slope(&self) -> f64 {
        self.plateau_slope
    }

    /// `χ(r)` for `r ≥ ρ+ζ+3κ`.
    pub fn plateau_value(&self) -> f64 {
        self.plateau_value
    }

    pub fn band(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn chi_rr_band<S: Scalar>(&self, t: S) -> S {
        let (h, m) = blend_parts(&self.params, t);
        h + m * self.plateau_slope
    }

    fn eval_piece<S: Scalar>(&self, piece: usize, r: S) -> S {
        match piece {
            0 => r.ln() * (-(1.0 - self.params.eta)),
            1 => {
                let f = |t: f64| self.chi_rr_band(t);
                let x = r.val();
                let value = self.chi_start
                    + self.slope_start * (x - self.start)
                    + self.cache.repeated(&f, self.start, x);
                let slope = self.slope_start + self.cache.first(&f, self.start, x);
                self.chi_rr_band(r).integrate_twice(value, slope)
            }
            _ => S::cst(self.plateau_value),
        }
    }

    pub fn piece_index(&self, r: f64) -> usize {
        if r <= self.start {
            0
        } else if r < self.end {
            1
        } else {
            2
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval_piece(self.piece_index(r), r)
    }

    /// `χ` and its derivatives through order 4 at `r > 0`.
    pub fn jet(&self, r: f64) -> Jet {
        self.eval_piece(self.piece_index(r), Jet::variable(r))
    }

    pub fn chi_r(&self, r: f64) -> f64 {
        self.jet(r).derivative(1)
    }

    pub fn chi_rr(&self, r: f64) -> f64 {
        self.jet(r).derivative(2)
    }

    /// Minimum of `χ_rr - χ_r²` over a uniform grid on the band, refined
    /// inside both mollifier layers.
    pub fn convexity_certificate(&self) -> ConvexityCertificate {
        let (a, b, w) = (self.start, self.end, self.params.mollifier_eps);
        let mut grid: Vec<f64> = (0..=CERT_POINTS)
            .map(|i| a + (b - a) * i as f64 / CERT_POINTS as f64)
            .collect();
        for i in 0..=200 {
            let u = i as f64 / 200.0;
            grid.push(a + w * u);
            grid.push(b - w + w * u);
        }
        let (mut min_value, mut argmin) = (f64::INFINITY, a);
        for &r in &grid {
            let j = self.eval_piece(1, Jet::variable(r));
            let v = j.derivative(2) - j.derivative(1).powi(2);
            if v < min_value {
                min_value = v;
                argmin = r;
            }
        }
        ConvexityCertificate {
            points: grid.len(),
            min_value,
            argmin,
            pass: min_value >= -CONVEXITY_TOLERANCE,
        }
    }
}

impl Piecewise for WeightProfile {
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.start, self.end]
    }

    fn piece_jet(&self, piece: usize, r: f64) -> Jet {
        self.eval_piece(piece, Jet::variable(r))
    }
}

pub fn build_weight(params: &GluingParams) -> Result<WeightProfile> {
    WeightProfile::new(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_region_and_plateau() {
        let p = GluingParams::preset(Regime::NonpositiveK);
        let w = build_weight(&p).unwrap();
        assert_relative_eq!(w.value(0.01), -0.5 * 0.01f64.ln(), max_relative = 1e-15);
        let a = p.weight_start();
        assert_relative_eq!(w.chi_r(a), -(1.0 - p.eta) / a, max_relative = 1e-14);
        let b = p.weight_end();
        assert_eq!(w.chi_r(b), 0.0);
        assert_eq!(w.value(1.0), w.plateau_value());
        // slope from the left of B is zero up to quadrature round-off
        let left = w.piece_jet(1, b);
        assert!(left.derivative(1).abs() < 1e-10);
        assert!(left.derivative(2).abs() < 1e-300);
    }

    #[test]
    fn log_weight_at_e() {
        let p = GluingParams {
            eta: 0.5,
            ..GluingParams::preset(Regime::NonpositiveK)
        };
        // e lies beyond the band, so check the log piece directly
        let w = build_weight(&p).unwrap();
        let j: f64 = w.eval_piece(0, std::f64::consts::E);
        assert_relative_eq!(j, -0.5, max_relative = 1e-15);
    }

    #[test]
    fn convexity_holds_for_presets() {
        for regime in [Regime::PositiveK, Regime::NonpositiveK] {
            let w = build_weight(&GluingParams::preset(regime)).unwrap();
            let c = w.convexity_certificate();
            assert!(c.points >= 1000);
            assert!(c.pass, "{c:?}");
        }
    }
}
