use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which closing piece the horn is glued to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Capped by a round spherical piece: a compact space.
    PositiveK,
    /// Opened into a cone `φ = a·r`: a noncompact space.
    NonpositiveK,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive-k" | "PositiveK" => Ok(Regime::PositiveK),
            "nonpositive-k" | "NonpositiveK" => Ok(Regime::NonpositiveK),
            other => Err(Error::Config(format!("unknown regime '{other}'"))),
        }
    }
}

pub const DEFAULT_OPEN_RMAX: f64 = 100.0;

/// Scalar parameters of one glued horn space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingParams {
    pub regime: Regime,
    /// Horn exponent: `φ = r^{1+ε}/2` near the vertex.
    pub epsilon: f64,
    /// Weight exponent: `χ = -(1-η) log r` near the vertex.
    pub eta: f64,
    pub rho: f64,
    pub zeta: f64,
    pub kappa: f64,
    /// Target lower bound `K` for the weighted Ricci tensor.
    #[serde(rename = "K")]
    pub curvature_bound: f64,
    /// Width of the two smooth steps blending `χ_rr`.
    pub mollifier_eps: f64,
    /// Outer radius. Ignored for the capped regime, which closes at a fixed radius.
    #[serde(default)]
    pub r_max: Option<f64>,
}

impl GluingParams {
    /// Preset with `ε = 0.1`, `η = 0.5`, `ρ = 0.05`, `κ = 0.01`, `ζ = κ²/200`.
    pub fn preset(regime: Regime) -> Self {
        let kappa = 0.01;
        GluingParams {
            regime,
            epsilon: 0.1,
            eta: 0.5,
            rho: 0.05,
            zeta: kappa * kappa / 200.0,
            kappa,
            curvature_bound: match regime {
                Regime::PositiveK => 0.01,
                Regime::NonpositiveK => 0.0,
            },
            mollifier_eps: kappa / 100.0,
            r_max: None,
        }
    }

    pub fn preset_by_name(name: &str) -> Result<Self> {
        Ok(Self::preset(name.parse()?))
    }

    /// Checks the parameter-range invariants.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.epsilon,
            self.eta,
            self.rho,
            self.zeta,
            self.kappa,
            self.curvature_bound,
            self.mollifier_eps,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("parameters must be finite".into()));
        }
        let require = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.into()))
            }
        };
        require(self.epsilon > 0.0, "epsilon must be positive")?;
        require(self.eta > 0.0 && self.eta < 1.0, "eta must lie in (0, 1)")?;
        require(self.rho > 0.0, "rho must be positive")?;
        require(
            self.zeta > 0.0 && self.kappa > 0.0,
            "zeta and kappa must be positive",
        )?;
        require(
            self.kappa <= 0.01 && self.zeta <= 0.01,
            "zeta and kappa must be at most 1/100",
        )?;
        require(
            self.zeta <= self.kappa * self.kappa / 100.0 * (1.0 + 1e-12),
            "zeta must be at most kappa^2/100",
        )?;
        require(
            self.mollifier_eps > 0.0 && self.mollifier_eps <= self.kappa / 100.0 * (1.0 + 1e-12),
            "mollifier_eps must lie in (0, kappa/100]",
        )?;
        if let Some(r) = self.r_max {
            require(r.is_finite() && r > 0.0, "r_max must be positive")?;
        }
        Ok(())
    }

    /// Start of the weight transition band, `ρ+ζ+κ`.
    pub fn weight_start(&self) -> f64 {
        self.rho + self.zeta + self.kappa
    }

    /// End of the weight transition band, `ρ+ζ+3κ`.
    pub fn weight_end(&self) -> f64 {
        self.rho + self.zeta + 3.0 * self.kappa
    }
}

/// Constants `(a, ξ)` of the closing piece.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub a: f64,
    pub xi: f64,
}

/// Solves for `(a, ξ)` so the closing piece matches `r^{1+ε}/2` to first order at `ρ`.
///
/// Capped: `sin(aξ)/a = ρ^{1+ε}/2`, `cos(aξ) = (1+ε)ρ^ε/2`.
/// Open: `aξ = ρ^{1+ε}/2`, `a = (1+ε)ρ^ε/2`.
pub fn derive_gluing_constants(params: &GluingParams) -> Result<DerivedConstants> {
    let (eps, rho) = (params.epsilon, params.rho);
    if !(eps > 0.0 && rho > 0.0) {
        return Err(Error::Config("epsilon and rho must be positive".into()));
    }
    let slope = (1.0 + eps) * rho.powf(eps) / 2.0;
    match params.regime {
        Regime::PositiveK => {
            if slope >= 1.0 {
                return Err(Error::Domain(format!(
                    "(1+epsilon)*rho^epsilon = {} must be below 2 for the capped regime",
                    2.0 * slope
                )));
            }
            let a = (4.0 - 4.0 * slope * slope).sqrt() / rho.powf(1.0 + eps);
            let xi = slope.acos() / a;
            Ok(DerivedConstants { a, xi })
        }
        Regime::NonpositiveK => Ok(DerivedConstants {
            a: slope,
            xi: rho / (1.0 + eps),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn with(regime: Regime, epsilon: f64, rho: f64) -> GluingParams {
        GluingParams {
            epsilon,
            rho,
            ..GluingParams::preset(regime)
        }
    }

    #[test]
    fn capped_constants_reference_values() {
        let c = derive_gluing_constants(&with(Regime::PositiveK, 1.0, 0.1)).unwrap();
        assert_relative_eq!(c.a, 198.997_487_421_324, max_relative = 1e-12);
        assert_relative_eq!(c.xi, 0.007_390_2, max_relative = 1e-4);
        assert_relative_eq!((c.a * c.xi).sin() / c.a, 0.005, max_relative = 1e-12);
        assert_relative_eq!((c.a * c.xi).cos(), 0.1, max_relative = 1e-12);
    }

    #[test]
    fn open_constants_reference_values() {
        let c = derive_gluing_constants(&with(Regime::NonpositiveK, 1.0, 0.1)).unwrap();
        assert_relative_eq!(c.a, 0.1, max_relative = 1e-15);
        assert_relative_eq!(c.xi, 0.05, max_relative = 1e-15);
        assert_relative_eq!(c.a * c.xi, 0.005, max_relative = 1e-15);
    }

    #[test]
    fn arccos_domain_violation() {
        let e = derive_gluing_constants(&with(Regime::PositiveK, 1.0, 2.0)).unwrap_err();
        assert_eq!(e.kind(), "DomainError");
    }

    #[test]
    fn presets_are_valid() {
        for regime in [Regime::PositiveK, Regime::NonpositiveK] {
            GluingParams::preset(regime).validate().unwrap();
        }
    }

    #[test]
    fn validation_rejects_wide_zeta() {
        let p = GluingParams {
            zeta: 1e-5,
            ..GluingParams::preset(Regime::PositiveK)
        };
        assert_eq!(p.validate().unwrap_err().kind(), "ConfigError");
        let p = GluingParams {
            mollifier_eps: 1e-3,
            ..GluingParams::preset(Regime::PositiveK)
        };
        assert_eq!(p.validate().unwrap_err().kind(), "ConfigError");
    }

    #[test]
    fn json_field_names() {
        let p = GluingParams::preset(Regime::NonpositiveK);
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert_eq!(v["regime"], "nonpositive-k");
        assert_eq!(v["K"], 0.0);
        let back: GluingParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
