use super::junction::{junction_report, Piecewise};
use super::mollifier::unit_rise;
use super::params::{
    derive_gluing_constants, DerivedConstants, GluingParams, Regime, DEFAULT_OPEN_RMAX,
};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quad::Cumulative;
use crate::scalar::Scalar;

/// The glue function `l(t)`: the horn's `φ''` blended into the closing piece's `φ''`
/// over `[ρ, ρ+ζ]`.
fn l_generic<S: Scalar>(p: &GluingParams, c: &DerivedConstants, t: S) -> S {
    let eps = p.epsilon;
    let psi = unit_rise((t - p.rho) / p.zeta);
    let horn = t.powf(eps - 1.0) * (eps * (1.0 + eps) / 2.0);
    let l = (S::cst(1.0) - psi) * horn;
    match p.regime {
        Regime::PositiveK => l - psi * ((t - (p.rho + p.zeta - c.xi)) * c.a).sin() * c.a,
        Regime::NonpositiveK => l,
    }
}

pub fn l_profile(t: f64, params: &GluingParams, constants: &DerivedConstants) -> f64 {
    l_generic(params, constants, t)
}

pub fn l_jet(t: f64, params: &GluingParams, constants: &DerivedConstants) -> Jet {
    l_generic(params, constants, Jet::variable(t))
}

// Panels per sub-band for the cached integrals of l.
const PANELS: usize = 64;

/// Warping function `φ` of the glued horn.
///
/// Pieces, with `v0 = ρ^{1+ε}/2`, `s0 = (1+ε)ρ^ε/2` and `I_c(r) = ∫_c^r (r-t) l(t) dt`:
///
/// 1. `r ≤ ρ`: `r^{1+ε}/2`
/// 2. `ρ ≤ r ≤ ρ+ζ`: `v0 + (r-ρ)s0 + I_ρ(r)`
/// 3. `ρ+ζ ≤ r ≤ ρ+ζ+κ`: `v0 + (r-ρ-ζ)s0 + (1-ψ)(I_ρ(r) + ζ s0) + ψ I_{ρ+ζ}(r)`, `ψ` rising over the band
/// 4. beyond: `sin(a(r-ρ-ζ+ξ))/a` (capped) or `a(r-ρ-ζ+ξ)` (open)
#[derive(Clone, Debug)]
pub struct WarpingProfile {
    params: GluingParams,
    constants: DerivedConstants,
    r_max: f64,
    cache: Cumulative,
}

impl WarpingProfile {
    /// Builds the profile and certifies junction smoothness through order 4.
    pub fn new(params: &GluingParams) -> Result<Self> {
        params.validate()?;
        let constants = derive_gluing_constants(params)?;
        let r_max = match params.regime {
            Regime::PositiveK => {
                params.rho + params.zeta - constants.xi + std::f64::consts::PI / constants.a
            }
            Regime::NonpositiveK => params.r_max.unwrap_or(DEFAULT_OPEN_RMAX),
        };
        let knots = [
            0.0,
            params.rho,
            params.rho + params.zeta,
            params.weight_start(),
            r_max,
        ];
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(format!(
                "breakpoints must increase strictly: {knots:?}"
            )));
        }
        let (p, c) = (params.clone(), constants);
        let l = move |t: f64| l_generic(&p, &c, t);
        let cache = Cumulative::new(
            &l,
            params.rho,
            &[
                (params.rho + params.zeta, PANELS),
                (params.weight_start(), PANELS),
            ],
        );
        let profile = WarpingProfile {
            params: params.clone(),
            constants,
            r_max,
            cache,
        };
        profile.certify()?;
        Ok(profile)
    }

    fn certify(&self) -> Result<()> {
        let report = junction_report(self, 4);
        if !report.pass {
            let worst = report
                .entries
                .iter()
                .max_by(|a, b| a.mismatch.total_cmp(&b.mismatch))
                .unwrap();
            return Err(Error::Certification {
                message: format!("warping profile not smooth at order {}", worst.order),
                r: worst.r,
                value: worst.mismatch,
            });
        }
        let n = 2000;
        for i in 1..n {
            let r = self.r_max * i as f64 / n as f64;
            let v = self.value(r);
            if !(v > 0.0) {
                return Err(Error::Certification {
                    message: "warping function not positive".into(),
                    r,
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &GluingParams {
        &self.params
    }

    pub fn constants(&self) -> DerivedConstants {
        self.constants
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `[0, ρ, ρ+ζ, ρ+ζ+κ, r_max]`.
    pub fn knots(&self) -> [f64; 5] {
        let p = &self.params;
        [0.0, p.rho, p.rho + p.zeta, p.weight_start(), self.r_max]
    }

    pub fn l(&self, t: f64) -> f64 {
        l_generic(&self.params, &self.constants, t)
    }

    pub fn piece_index(&self, r: f64) -> usize {
        let k = self.knots();
        if r <= k[1] {
            0
        } else if r <= k[2] {
            1
        } else if r <= k[3] {
            2
        } else {
            3
        }
    }

    fn twice_integrated_l<S: Scalar>(&self, from: f64, r: S) -> S {
        let f = |t: f64| self.l(t);
        let x = r.val();
        let l = l_generic(&self.params, &self.constants, r);
        l.integrate_twice(
            self.cache.repeated(&f, from, x),
            self.cache.first(&f, from, x),
        )
    }

    fn eval_piece<S: Scalar>(&self, piece: usize, r: S) -> S {
        let p = &self.params;
        let c = &self.constants;
        let eps = p.epsilon;
        let v0 = p.rho.powf(1.0 + eps) / 2.0;
        let s0 = (1.0 + eps) * p.rho.powf(eps) / 2.0;
        match piece {
            0 => r.powf(1.0 + eps) * 0.5,
            1 => (r - p.rho) * s0 + v0 + self.twice_integrated_l(p.rho, r),
            2 => {
                let psi = unit_rise((r - (p.rho + p.zeta)) / p.kappa);
                let from_rho = self.twice_integrated_l(p.rho, r) + p.zeta * s0;
                let from_mid = self.twice_integrated_l(p.rho + p.zeta, r);
                (r - (p.rho + p.zeta)) * s0 + v0 + (S::cst(1.0) - psi) * from_rho + psi * from_mid
            }
            _ => {
                let shifted = r - (p.rho + p.zeta - c.xi);
                match p.regime {
                    Regime::PositiveK => (shifted * c.a).sin() / c.a,
                    Regime::NonpositiveK => shifted * c.a,
                }
            }
        }
    }

    /// `φ(r)`, with `φ(0) = 0`.
    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.eval_piece(self.piece_index(r), r)
    }

    /// `φ` and its derivatives through order 4 at `r > 0`.
    pub fn jet(&self, r: f64) -> Jet {
        self.eval_piece(self.piece_index(r), Jet::variable(r))
    }
}

impl Piecewise for WarpingProfile {
    fn breakpoints(&self) -> Vec<f64> {
        self.knots()[1..4].to_vec()
    }

    fn piece_jet(&self, piece: usize, r: f64) -> Jet {
        self.eval_piece(piece, Jet::variable(r))
    }
}

/// Builds the warping profile for `params`.
pub fn build_warping(params: &GluingParams) -> Result<WarpingProfile> {
    WarpingProfile::new(params)
}
