//! Distances on the horn and the check that short geodesics avoid the vertex.

use crate::error::{Error, Result};
use crate::metric::{HornMetric, RadialFunction};
use crate::quad::integrate;
use crate::roots::brent;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// A point `(r, θ)` with `θ` a unit vector of `ℝ³`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HornPoint {
    pub r: f64,
    pub theta: [f64; 3],
}

impl HornPoint {
    /// Normalizes `theta`; a zero vector is replaced by the north pole.
    pub fn new(r: f64, theta: [f64; 3]) -> Self {
        let n = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let theta = if n > 0.0 {
            theta.map(|v| v / n)
        } else {
            [0.0, 0.0, 1.0]
        };
        HornPoint { r, theta }
    }

    /// Point at angle `alpha` from the north pole along a fixed meridian.
    pub fn on_meridian(r: f64, alpha: f64) -> Self {
        HornPoint {
            r,
            theta: [alpha.sin(), 0.0, alpha.cos()],
        }
    }

    pub fn is_vertex(&self) -> bool {
        self.r == 0.0
    }
}

/// Great-circle angle between the directions of two points.
pub fn sphere_angle(x: &HornPoint, y: &HornPoint) -> f64 {
    let [a0, a1, a2] = x.theta;
    let [b0, b1, b2] = y.theta;
    let dot = a0 * b0 + a1 * b1 + a2 * b2;
    let cross = [a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0];
    let cn = cross.iter().map(|v| v * v).sum::<f64>().sqrt();
    cn.atan2(dot)
}

/// Length of the path that runs radially to the smaller radius and then
/// along a great circle of that sphere in the horn `φ = r^{1+ε}/2`.
pub fn distance_upper_bound(x: &HornPoint, y: &HornPoint, epsilon: f64) -> f64 {
    let lo = x.r.min(y.r);
    (x.r - y.r).abs() + 0.5 * lo.powf(1.0 + epsilon) * sphere_angle(x, y)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct AvoidanceCheck {
    pub avoids: bool,
    /// `r(x) + r(y) - distance_upper_bound`.
    pub margin: f64,
}

/// A curve through the vertex has length at least `r(x) + r(y)`, so it is not
/// minimizing once the direct bound is shorter.
pub fn vertex_avoidance_check(x: &HornPoint, y: &HornPoint, epsilon: f64) -> AvoidanceCheck {
    let margin = x.r + y.r - distance_upper_bound(x, y, epsilon);
    AvoidanceCheck {
        avoids: margin > 0.0,
        margin,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeodesicProbe {
    pub x: HornPoint,
    pub y: HornPoint,
    pub direct_upper: f64,
    pub through_vertex: f64,
    pub clairaut_estimate: Option<f64>,
}

/// One row of a probe sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeRow {
    pub r1: f64,
    pub r2: f64,
    pub angle: f64,
    pub direct: f64,
    pub through_vertex: f64,
    pub margin: f64,
}

/// `count` random pairs with radii uniform in `(0, radius]` and uniform directions.
pub fn random_pairs(radius: f64, count: usize, seed: u64) -> Vec<(HornPoint, HornPoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| {
        let r = radius * (1.0 - rng.random::<f64>());
        // uniform direction via z and azimuth
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).max(0.0).sqrt();
        HornPoint::new(r, [s * phi.cos(), s * phi.sin(), z])
    };
    (0..count)
        .map(|_| (point(&mut rng), point(&mut rng)))
        .collect()
}

/// Bound-based avoidance rows for random pairs in `B_radius(V)`.
pub fn avoidance_sweep(epsilon: f64, radius: f64, count: usize, seed: u64) -> Vec<ProbeRow> {
    random_pairs(radius, count, seed)
        .par_iter()
        .map(|(x, y)| {
            let direct = distance_upper_bound(x, y, epsilon);
            let through = x.r + y.r;
            ProbeRow {
                r1: x.r,
                r2: y.r,
                angle: sphere_angle(x, y),
                direct,
                through_vertex: through,
                margin: through - direct,
            }
        })
        .collect()
}

/// Largest candidate radius whose sweep has every pair avoiding the vertex.
pub fn largest_avoiding_radius(
    epsilon: f64,
    candidates: &[f64],
    count: usize,
    seed: u64,
) -> Option<f64> {
    candidates
        .iter()
        .copied()
        .filter(|&r| {
            avoidance_sweep(epsilon, r, count, seed)
                .iter()
                .all(|row| row.margin > 0.0)
        })
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.max(r)))
        })
}

const GEO_TOL: f64 = 1e-11;
const SCAN_A: usize = 48;
const SCAN_B: usize = 160;
// Type-B turning radii are scanned down to exp(-DEPTH) times the inner radius.
const DEPTH: f64 = 18.0;

/// Clairaut reduction on the surface `dr² + φ(r)² dα²`.
struct Slice<'a> {
    phi: &'a dyn RadialFunction,
    breaks: Vec<f64>,
    r_lo: f64,
    r_hi: f64,
    phi_lo: f64,
}

/// Integrals of one geodesic family member: swept angle and length.
#[derive(Clone, Copy, Debug)]
struct Sweep {
    alpha: f64,
    length: f64,
}

impl Slice<'_> {
    /// `φ(base + h) - φ(base)`, from the Taylor jet at `base` when `h` is small.
    ///
    /// Takes the offset rather than `base + h`, whose rounding would swamp tiny `h`.
    fn phi_minus(&self, base: f64, h: f64) -> f64 {
        if h.abs() < 1e-3 * base {
            let t = self.phi.jet(base);
            let c = t.taylor();
            h * (c[1] + h * (c[2] + h * (c[3] + h * c[4])))
        } else {
            self.phi.value(base + h) - self.phi.value(base)
        }
    }

    /// Integrates from `a` (where `φ - c = offset + (φ - φ(a))`) to `b`,
    /// substituting `r = a + (b-a)w²` to absorb the square-root endpoint.
    fn leg(&self, a: f64, b: f64, c: f64, offset: f64) -> Result<Sweep> {
        if b <= a {
            return Ok(Sweep {
                alpha: 0.0,
                length: 0.0,
            });
        }
        let span = b - a;
        let mut wbreaks: Vec<f64> = self
            .breaks
            .iter()
            .filter(|&&x| x > a && x < b)
            .map(|&x| ((x - a) / span).sqrt())
            .collect();
        wbreaks.push(1.0);
        let integrand = |w: f64, want_len: bool| {
            let h = span * w * w;
            let r = a + h;
            let phi = self.phi.value(r);
            let gap = offset + self.phi_minus(a, h);
            let root = (gap.max(0.0) * (phi + c)).sqrt();
            if root == 0.0 {
                // w = 0 at a turning point: the limit of w/√gap
                let d = self.phi.jet(a).derivative(1);
                let lim = 2.0 * span / (span * d * (phi + c)).sqrt();
                return if want_len { phi * lim } else { c / phi * lim };
            }
            let jac = 2.0 * span * w;
            if want_len {
                phi * jac / root
            } else {
                c * jac / (phi * root)
            }
        };
        let mut alpha = 0.0;
        let mut length = 0.0;
        let mut lo = 0.0;
        for &hi in &wbreaks {
            alpha += integrate(&|w| integrand(w, false), lo, hi, 1e-15, GEO_TOL)?;
            length += integrate(&|w| integrand(w, true), lo, hi, 1e-15, GEO_TOL)?;
            lo = hi;
        }
        Ok(Sweep { alpha, length })
    }

    /// `s ∈ [0, 1]`: no turning point, `c = s φ(r_lo)`.
    /// `s ∈ (1, 2]`: turning point `r* = r_lo e^{-DEPTH (s-1)}`, `c = φ(r*)`.
    fn sweep(&self, s: f64) -> Result<Sweep> {
        if s <= 1.0 {
            let c = s * self.phi_lo;
            self.leg(self.r_lo, self.r_hi, c, (1.0 - s) * self.phi_lo)
        } else {
            let r_star = self.r_lo * (-DEPTH * (s - 1.0)).exp();
            let c = self.phi.value(r_star);
            let inner = self.leg(r_star, self.r_lo, c, 0.0)?;
            let outer = self.leg(r_star, self.r_hi, c, 0.0)?;
            Ok(Sweep {
                alpha: inner.alpha + outer.alpha,
                length: inner.length + outer.length,
            })
        }
    }
}

fn require_increasing(phi: &dyn RadialFunction, r_hi: f64) -> Result<()> {
    let n = 256;
    let mut prev = 0.0;
    for i in 1..=n {
        let r = r_hi * (i as f64 / n as f64).powi(3);
        let v = phi.value(r);
        let d = phi.jet(r).derivative(1);
        if !(v > prev) || !(d > 0.0) {
            return Err(Error::Domain(format!(
                "warping function must increase on (0, {r_hi}] for the slice reduction; fails near r = {r}"
            )));
        }
        prev = v;
    }
    Ok(())
}

/// Exact distance between two points of the horn.
///
/// Both points and the vertex lie on a totally geodesic surface
/// `dr² + φ² dα²` through the great circle joining their directions. The
/// minimizing curve is either the broken path through the vertex
/// (length `r(x) + r(y)`) or a Clairaut geodesic `φ² α' = c`, found by
/// shooting on `c` (with or without an inner turning point).
pub fn geodesic_distance(metric: &HornMetric, x: &HornPoint, y: &HornPoint) -> Result<f64> {
    let alpha = sphere_angle(x, y);
    let (r_lo, r_hi) = (x.r.min(y.r), x.r.max(y.r));
    if r_lo < 0.0 || r_hi > metric.r_max() {
        return Err(Error::Domain(format!(
            "radii must lie in [0, {}]",
            metric.r_max()
        )));
    }
    if r_lo == 0.0 || alpha == 0.0 {
        return Ok(r_hi - r_lo);
    }
    let phi = metric.phi();
    require_increasing(phi, r_hi)?;
    let slice = Slice {
        phi,
        breaks: metric.breakpoints(),
        r_lo,
        r_hi,
        phi_lo: phi.value(r_lo),
    };
    let through = r_lo + r_hi;

    let mut params: Vec<f64> = (0..=SCAN_A).map(|i| i as f64 / SCAN_A as f64).collect();
    params.extend((1..=SCAN_B).map(|i| 1.0 + i as f64 / SCAN_B as f64));
    let sweeps = params
        .par_iter()
        .map(|&s| slice.sweep(s))
        .collect::<Result<Vec<_>>>()?;

    let mut best = through;
    for k in 0..params.len() - 1 {
        let (f0, f1) = (sweeps[k].alpha - alpha, sweeps[k + 1].alpha - alpha);
        if f0 == 0.0 {
            best = best.min(sweeps[k].length);
            continue;
        }
        if f0.signum() == f1.signum() {
            continue;
        }
        let s = brent(
            &mut |s| Ok(slice.sweep(s)?.alpha - alpha),
            params[k],
            params[k + 1],
            1e-15,
            200,
        )?;
        best = best.min(slice.sweep(s)?.length);
    }
    Ok(best)
}

/// Bound, vertex path and exact distance for one pair.
pub fn probe(metric: &HornMetric, epsilon: f64, x: &HornPoint, y: &HornPoint) -> GeodesicProbe {
    GeodesicProbe {
        x: *x,
        y: *y,
        direct_upper: distance_upper_bound(x, y, epsilon),
        through_vertex: x.r + y.r,
        clairaut_estimate: geodesic_distance(metric, x, y).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn bound_reference_values() {
        let x = HornPoint::on_meridian(0.1, 0.0);
        assert_eq!(distance_upper_bound(&x, &x, 1.0), 0.0);
        let y = HornPoint::on_meridian(0.1, PI);
        assert_relative_eq!(
            distance_upper_bound(&x, &y, 1.0),
            0.005 * PI,
            max_relative = 1e-12
        );
        let z = HornPoint::on_meridian(0.2, 0.0);
        assert_relative_eq!(distance_upper_bound(&z, &x, 1.0), 0.1, max_relative = 1e-14);
        let chk = vertex_avoidance_check(&x, &y, 1.0);
        assert!(chk.avoids);
        assert_relative_eq!(chk.margin, 0.2 - 0.005 * PI, max_relative = 1e-12);
        let (p, q) = (
            HornPoint::on_meridian(1.0, 0.0),
            HornPoint::on_meridian(1.0, PI),
        );
        assert_relative_eq!(
            distance_upper_bound(&p, &q, 0.01),
            PI / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn flat_cone_unrolling() {
        let m = HornMetric::flat(10.0);
        for &(r1, r2, a) in &[
            (1.0, 2.0, 0.3),
            (0.5, 0.7, 2.0),
            (1.0, 1.0, 3.0),
            (0.2, 3.0, 1.2),
        ] {
            let x = HornPoint::on_meridian(r1, 0.0);
            let y = HornPoint::on_meridian(r2, a);
            let exact = (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * f64::cos(a)).sqrt();
            let d = geodesic_distance(&m, &x, &y).unwrap();
            assert_relative_eq!(d, exact, max_relative = 1e-8);
        }
    }

    #[test]
    fn wide_cone_goes_through_vertex() {
        // slope 2: antipodal directions unroll to an angle of 2π > π
        let m = HornMetric::cone(2.0, 10.0);
        let x = HornPoint::on_meridian(1.0, 0.0);
        let y = HornPoint::on_meridian(2.0, PI);
        assert_relative_eq!(
            geodesic_distance(&m, &x, &y).unwrap(),
            3.0,
            max_relative = 1e-12
        );
        let y = HornPoint::on_meridian(2.0, 0.8);
        let exact = (1.0 + 4.0 - 4.0 * f64::cos(1.6)).sqrt();
        assert_relative_eq!(
            geodesic_distance(&m, &x, &y).unwrap(),
            exact,
            max_relative = 1e-8
        );
        // slope 1/4: the chord in the unrolled sector
        let m = HornMetric::cone(0.25, 10.0);
        let y = HornPoint::on_meridian(2.0, PI);
        let exact = (1.0 + 4.0 - 4.0 * f64::cos(PI / 4.0)).sqrt();
        assert_relative_eq!(
            geodesic_distance(&m, &x, &y).unwrap(),
            exact,
            max_relative = 1e-8
        );
    }

    #[test]
    fn horn_distance_between_bounds() {
        let m = HornMetric::pure_horn(1.0, 0.5, 1.0);
        let x = HornPoint::on_meridian(0.1, 0.0);
        let y = HornPoint::on_meridian(0.1, PI);
        let d = geodesic_distance(&m, &x, &y).unwrap();
        assert!(d <= distance_upper_bound(&x, &y, 1.0) + 1e-15);
        assert!(d > 0.0);
    }

    #[test]
    fn nearly_equal_radii_on_a_narrow_cone() {
        // short inner legs once lost the offset to rounding and stalled the quadrature
        let a = 0.3;
        let m = HornMetric::cone(a, 2.0);
        let x = HornPoint::new(0.293_324_674_202_787_24, [0.0, 0.0, 1.0]);
        let y = HornPoint::new(
            0.316_986_837_261_15,
            [0.994_754_380_622_062_2, 0.0, 0.102_292_337_118_756_32],
        );
        let angle = a * sphere_angle(&x, &y);
        let unrolled = (x.r * x.r + y.r * y.r - 2.0 * x.r * y.r * angle.cos()).sqrt();
        assert_relative_eq!(
            geodesic_distance(&m, &x, &y).unwrap(),
            unrolled,
            max_relative = 1e-10
        );
    }
}
