//! Glued warping and weight profiles of the horn.

mod junction;
mod mollifier;
mod params;
mod warping;
mod weight;

pub use junction::{
    junction_report, JunctionEntry, Piecewise, SmoothnessReport, JUNCTION_TOLERANCE,
};
pub use mollifier::{smooth_rise, smooth_step, step_jet, unit_rise, unit_step};
pub use params::{
    derive_gluing_constants, DerivedConstants, GluingParams, Regime, DEFAULT_OPEN_RMAX,
};
pub use warping::{build_warping, l_jet, l_profile, WarpingProfile};
pub use weight::{build_weight, ConvexityCertificate, WeightProfile, CONVEXITY_TOLERANCE};
