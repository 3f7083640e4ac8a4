//! Metric horns: weighted warped products `dr² + φ(r)² g_{S²}` with measure
//! `e^{-χ} dvol`, glued so that the Bakry–Émery 4-Ricci tensor stays bounded
//! below, together with numerical checks of their curvature, geodesics and
//! harmonic functions.

// `!(x > y)` is used deliberately so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cdtools;
pub mod curvature;
pub mod decay;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod jet;
pub mod metric;
pub mod profiles;
pub mod quad;
pub mod roots;
pub mod scalar;
pub mod sphere;

pub use curvature::{certify_lower_bound, Direction, GridSpec, RicciReport, Verdict};
pub use decay::{DecayReport, DecayVerdict, FieldPreset};
pub use error::{Error, Result};
pub use harmonic::{HarmonicField, RadialMode};
pub use jet::Jet;
pub use metric::{HornMetric, RadialFunction};
pub use profiles::{GluingParams, Regime, WarpingProfile, WeightProfile};
