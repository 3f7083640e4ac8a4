use crate::jet::{Jet, ORDER};
use serde::Serialize;

/// A radial function assembled from closed-form pieces.
///
/// Piece `i` is valid on `[b[i-1], b[i]]` where `b = breakpoints()`; the
/// first piece extends down to the left end of the domain and the last one up
/// to the right end.
pub trait Piecewise {
    /// Interior junction radii in increasing order.
    fn breakpoints(&self) -> Vec<f64>;

    /// Evaluate piece `piece` at `r`, including derivatives.
    fn piece_jet(&self, piece: usize, r: f64) -> Jet;
}

/// Derivative agreement across one junction at one order.
#[derive(Clone, Debug, Serialize)]
pub struct JunctionEntry {
    pub r: f64,
    pub order: usize,
    pub left: f64,
    pub right: f64,
    /// `|left - right| / max(1, |left|, |right|)`.
    pub mismatch: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothnessReport {
    pub entries: Vec<JunctionEntry>,
    pub worst_mismatch: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub const JUNCTION_TOLERANCE: f64 = 1e-8;

/// Compares derivatives `0..=max_order` of adjacent pieces at every junction.
///
/// Each piece is differentiated in Taylor arithmetic at the junction itself,
/// so the one-sided derivatives are those of the closed-form expressions
/// rather than difference quotients.
pub fn junction_report(profile: &dyn Piecewise, max_order: usize) -> SmoothnessReport {
    let max_order = max_order.min(ORDER);
    let mut entries = Vec::new();
    for (i, &r) in profile.breakpoints().iter().enumerate() {
        let left = profile.piece_jet(i, r);
        let right = profile.piece_jet(i + 1, r);
        for order in 0..=max_order {
            let (l, rv) = (left.derivative(order), right.derivative(order));
            let scale = 1f64.max(l.abs()).max(rv.abs());
            let mismatch = if l.is_finite() && rv.is_finite() {
                (l - rv).abs() / scale
            } else {
                f64::INFINITY
            };
            entries.push(JunctionEntry {
                r,
                order,
                left: l,
                right: rv,
                mismatch,
            });
        }
    }
    let worst = entries.iter().map(|e| e.mismatch).fold(0.0, f64::max);
    SmoothnessReport {
        entries,
        worst_mismatch: worst,
        tolerance: JUNCTION_TOLERANCE,
        pass: worst <= JUNCTION_TOLERANCE,
    }
}
