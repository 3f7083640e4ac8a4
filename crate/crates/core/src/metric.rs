//! The weighted warped product `(dr² + φ² g_{S^{n-1}}, e^{-χ} dvol)`.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::profiles::{GluingParams, Regime, WarpingProfile, WeightProfile};
use std::sync::Arc;

/// A smooth (or piecewise-smooth) function of the radius with derivatives.
pub trait RadialFunction: Send + Sync + std::fmt::Debug {
    /// Value and derivatives through order 4 at `r > 0`.
    fn jet(&self, r: f64) -> Jet;

    fn value(&self, r: f64) -> f64 {
        self.jet(r).value()
    }

    /// Radii where the closed form changes.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Closed-form radial functions for model spaces and oracles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    /// `c·r^p`.
    Power {
        coeff: f64,
        exponent: f64,
    },
    /// `c·ln r`.
    Log {
        coeff: f64,
    },
    /// `sin(a r)/a`.
    Sine {
        a: f64,
    },
    Constant(f64),
}

impl RadialFunction for Model {
    fn jet(&self, r: f64) -> Jet {
        let x = Jet::variable(r);
        match *self {
            Model::Power {
                coeff,
                exponent: 1.0,
            } => x * coeff,
            Model::Power { coeff, exponent } => x.powf(exponent) * coeff,
            Model::Log { coeff } => x.ln() * coeff,
            Model::Sine { a } => (x * a).sin() / a,
            Model::Constant(c) => Jet::constant(c),
        }
    }

    fn value(&self, r: f64) -> f64 {
        match *self {
            Model::Power { coeff, exponent } => coeff * r.powf(exponent),
            Model::Log { coeff } => coeff * r.ln(),
            Model::Sine { a } => (a * r).sin() / a,
            Model::Constant(c) => c,
        }
    }
}

impl RadialFunction for WarpingProfile {
    fn jet(&self, r: f64) -> Jet {
        WarpingProfile::jet(self, r)
    }
    fn value(&self, r: f64) -> f64 {
        WarpingProfile::value(self, r)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.knots()[1..4].to_vec()
    }
}

impl RadialFunction for WeightProfile {
    fn jet(&self, r: f64) -> Jet {
        WeightProfile::jet(self, r)
    }
    fn value(&self, r: f64) -> f64 {
        WeightProfile::value(self, r)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.band();
        vec![a, b]
    }
}

/// Weighted warped product over the round `S^{n-1}`.
#[derive(Clone, Debug)]
pub struct HornMetric {
    n: usize,
    big_n: f64,
    phi: Arc<dyn RadialFunction>,
    chi: Arc<dyn RadialFunction>,
    r_max: f64,
    params: Option<GluingParams>,
    /// `φ ≈ cone_slope·r` asymptotically, when the space is conical at infinity.
    cone_slope: Option<f64>,
    /// Weight exponent `η` when the weight is `-(1-η) log r` near the vertex.
    eta: Option<f64>,
    /// Horn exponent `ε` when `φ = r^{1+ε}/2` near the vertex.
    epsilon: Option<f64>,
}

impl HornMetric {
    /// General constructor with `n = 3`, `N = 4`.
    pub fn warped(phi: Arc<dyn RadialFunction>, chi: Arc<dyn RadialFunction>, r_max: f64) -> Self {
        HornMetric {
            n: 3,
            big_n: 4.0,
            phi,
            chi,
            r_max,
            params: None,
            cone_slope: None,
            eta: None,
            epsilon: None,
        }
    }

    /// The glued horn for `params`.
    pub fn glued(params: &GluingParams) -> Result<Self> {
        let phi = WarpingProfile::new(params)?;
        let chi = WeightProfile::new(params)?;
        let r_max = phi.r_max();
        let cone_slope = match params.regime {
            Regime::NonpositiveK => Some(phi.constants().a),
            Regime::PositiveK => None,
        };
        Ok(HornMetric {
            n: 3,
            big_n: 4.0,
            phi: Arc::new(phi),
            chi: Arc::new(chi),
            r_max,
            params: Some(params.clone()),
            cone_slope,
            eta: Some(params.eta),
            epsilon: Some(params.epsilon),
        })
    }

    /// `φ = r^{1+ε}/2`, `χ = -(1-η) log r` on `(0, r_max]`.
    pub fn pure_horn(epsilon: f64, eta: f64, r_max: f64) -> Self {
        let mut m = Self::warped(
            Arc::new(Model::Power {
                coeff: 0.5,
                exponent: 1.0 + epsilon,
            }),
            Arc::new(Model::Log {
                coeff: -(1.0 - eta),
            }),
            r_max,
        );
        m.eta = Some(eta);
        m.epsilon = Some(epsilon);
        m
    }

    /// Flat `ℝ³` with Lebesgue measure.
    pub fn flat(r_max: f64) -> Self {
        Self::cone(1.0, r_max)
    }

    /// Cone `φ = a r` with constant weight.
    pub fn cone(a: f64, r_max: f64) -> Self {
        let mut m = Self::warped(
            Arc::new(Model::Power {
                coeff: a,
                exponent: 1.0,
            }),
            Arc::new(Model::Constant(0.0)),
            r_max,
        );
        m.cone_slope = Some(a);
        m
    }

    /// Unit round `S³` minus the poles, unweighted.
    pub fn round_sphere() -> Self {
        Self::warped(
            Arc::new(Model::Sine { a: 1.0 }),
            Arc::new(Model::Constant(0.0)),
            std::f64::consts::PI,
        )
    }

    pub fn with_dimensions(mut self, n: usize, big_n: f64) -> Result<Self> {
        if !(big_n > n as f64) || n < 2 {
            return Err(Error::Config(format!(
                "need N > n >= 2, got n = {n}, N = {big_n}"
            )));
        }
        self.n = n;
        self.big_n = big_n;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_n(&self) -> f64 {
        self.big_n
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn params(&self) -> Option<&GluingParams> {
        self.params.as_ref()
    }

    pub fn cone_slope(&self) -> Option<f64> {
        self.cone_slope
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn phi(&self) -> &dyn RadialFunction {
        self.phi.as_ref()
    }

    pub fn chi(&self) -> &dyn RadialFunction {
        self.chi.as_ref()
    }

    pub fn phi_jet(&self, r: f64) -> Jet {
        self.phi.jet(r)
    }

    pub fn chi_jet(&self, r: f64) -> Jet {
        self.chi.jet(r)
    }

    /// All profile breakpoints inside `(0, r_max)`, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .phi
            .breakpoints()
            .into_iter()
            .chain(self.chi.breakpoints())
            .filter(|&r| r > 0.0 && r < self.r_max)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// [`Self::breakpoints`] plus the inner edges of the weight's mollifier layers.
    pub fn fine_breakpoints(&self) -> Vec<f64> {
        let mut b = self.breakpoints();
        if let Some(p) = &self.params {
            let me = p.mollifier_eps;
            b.extend(
                [p.weight_start() + me, p.weight_end() - me]
                    .into_iter()
                    .filter(|&r| r < self.r_max),
            );
            b.sort_by(f64::total_cmp);
            b.dedup();
        }
        b
    }

    /// Density of the radial measure: `φ^{n-1} e^{-χ}`.
    pub fn radial_density(&self, r: f64) -> f64 {
        self.phi.value(r).powi(self.n as i32 - 1) * (-self.chi.value(r)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glued_breakpoints_are_sorted() {
        let m = HornMetric::glued(&GluingParams::preset(Regime::PositiveK)).unwrap();
        let b = m.breakpoints();
        assert_eq!(b.len(), 4);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(m.cone_slope().is_none());
        let m = HornMetric::glued(&GluingParams::preset(Regime::NonpositiveK)).unwrap();
        assert!(m.cone_slope().unwrap() > 0.4);
    }

    #[test]
    fn model_jets_match_values() {
        for f in [
            Model::Power {
                coeff: 0.5,
                exponent: 1.1,
            },
            Model::Log { coeff: -0.5 },
            Model::Sine { a: 3.0 },
        ] {
            assert!((f.jet(0.3).value() - f.value(0.3)).abs() < 1e-15);
        }
    }
}
