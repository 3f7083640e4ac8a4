//! Run configuration: flags, an optional JSON file, and resolution into parameters.

use clap::Args;
use hornlab::decay::{DecayOptions, FieldPreset};
use hornlab::harmonic::DEFAULT_K_MAX;
use hornlab::{Error, GluingParams, Regime, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Every option of every subcommand. The JSON config uses the same kebab-case keys.
///
/// All fields are optional so a config file and the command line can be layered.
#[derive(Args, Clone, Debug, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Parameter preset: positive-k or nonpositive-k.
    #[arg(long)]
    pub preset: Option<Regime>,
    /// Closing piece of the glued space; defaults to the preset's.
    #[arg(long)]
    pub regime: Option<Regime>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Target lower bound for the weighted Ricci tensor.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[arg(long)]
    pub mollifier_eps: Option<f64>,
    /// Outer radius of the open (cone) regime.
    #[arg(long)]
    pub r_max: Option<f64>,

    /// Seed for randomized sweeps.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for CSV, JSON and SVG outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots (needs --out).
    #[arg(long)]
    #[serde(default)]
    pub svg: bool,

    /// Space for certify-curvature: glued (default) or horn, the unglued `φ = r^{1+ε}/2`.
    #[arg(long)]
    pub metric: Option<MetricKind>,
    /// Curvature grid size.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Smallest radius of the curvature grid.
    #[arg(long)]
    pub r_min: Option<f64>,

    /// Random point pairs for the vertex-avoidance sweep.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Pairs are drawn from the ball of this radius about the vertex.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Pairs that also get an exact geodesic distance.
    #[arg(long)]
    pub exact_pairs: Option<usize>,

    /// Density for check-density: horn-weight or quadratic.
    #[arg(long)]
    pub density: Option<DensityKind>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub x1: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub t_samples: Option<usize>,

    /// Field for solve and decay: horn or flat-linear.
    #[arg(long)]
    pub field: Option<FieldPreset>,
    /// Ball radius of the Dirichlet problem.
    #[arg(long)]
    pub ball_radius: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Random test functions for the weak-form residual.
    #[arg(long)]
    pub weak_tests: Option<usize>,

    /// Growth exponent `s` of the three-circle check.
    #[arg(long)]
    pub s_exponent: Option<f64>,
    /// Number of radii in the three-circle sweep.
    #[arg(long)]
    pub sweep_points: Option<usize>,
    /// Also run the normalized global construction.
    #[arg(long)]
    #[serde(default)]
    pub global: bool,
    /// Radii of the global construction.
    #[arg(long, value_delimiter = ',')]
    pub global_radii: Option<Vec<f64>>,
    /// Normalization radius of the global construction.
    #[arg(long)]
    pub k0: Option<f64>,
    /// Weight of the degree-two term in the global boundary data.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Smallest decay radius as a multiple of the ball radius.
    #[arg(long)]
    pub r_lo_factor: Option<f64>,
    #[arg(long)]
    pub per_octave: Option<usize>,
    /// Highest row of the vanishing-order table.
    #[arg(long)]
    pub m_max: Option<usize>,
}

/// Which space certify-curvature evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Glued,
    /// Pure horn on `(0, r_max]`, `r_max` defaulting to 1.
    Horn,
}

impl std::str::FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glued" => Ok(MetricKind::Glued),
            "horn" => Ok(MetricKind::Horn),
            other => Err(Error::Config(format!(
                "unknown metric '{other}' (expected glued or horn)"
            ))),
        }
    }
}

/// Sampled density for the convexity check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    /// `(φ^{n-1} e^{-χ})^{1/(N-1)}` of the pure horn.
    HornWeight,
    /// `x²`, which is not concave.
    Quadratic,
}

impl std::str::FromStr for DensityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horn-weight" => Ok(DensityKind::HornWeight),
            "quadratic" => Ok(DensityKind::Quadratic),
            other => Err(Error::Config(format!(
                "unknown density '{other}' (expected horn-weight or quadratic)"
            ))),
        }
    }
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunArgs {
    /// Reads the config file, if any, and lays the command-line values over it.
    pub fn layered(self) -> Result<RunArgs> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let mut base = read_config(&path)?;
        let top = self;
        overlay!(base, top;
            preset, regime, epsilon, eta, rho, zeta, kappa, k, mollifier_eps, r_max,
            seed, out, metric, grid_points, r_min, pairs, radius, exact_pairs,
            density, x0, x1, samples, t_samples, field, ball_radius, k_max, weak_tests,
            s_exponent, sweep_points, global_radii, k0, delta, r_lo_factor, per_octave, m_max,
        );
        base.svg |= top.svg;
        base.global |= top.global;
        base.config = Some(path);
        Ok(base)
    }

    /// Preset values overridden field by field.
    pub fn params(&self) -> GluingParams {
        let regime = self.regime.or(self.preset).unwrap_or(Regime::PositiveK);
        let mut p = GluingParams::preset(self.preset.unwrap_or(regime));
        p.regime = regime;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.epsilon, self.epsilon);
        set(&mut p.eta, self.eta);
        set(&mut p.rho, self.rho);
        set(&mut p.zeta, self.zeta);
        set(&mut p.kappa, self.kappa);
        set(&mut p.curvature_bound, self.k);
        set(&mut p.mollifier_eps, self.mollifier_eps);
        if self.r_max.is_some() {
            p.r_max = self.r_max;
        }
        p
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn k_max(&self) -> usize {
        self.k_max.unwrap_or(DEFAULT_K_MAX)
    }

    pub fn decay_options(&self) -> DecayOptions {
        let d = DecayOptions::default();
        DecayOptions {
            r_lo_factor: self.r_lo_factor.unwrap_or(d.r_lo_factor),
            per_octave: self.per_octave.unwrap_or(d.per_octave),
            ..d
        }
    }

    pub fn field(&self) -> FieldPreset {
        self.field.unwrap_or(FieldPreset::Horn)
    }
}

fn read_config(path: &Path) -> Result<RunArgs> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
