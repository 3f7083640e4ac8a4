//! Adaptive 3-stage Radau IIA integration of the scalar Riccati equation
//! `y' = -y² - B(x) y - C(x)`, carrying `L' = y` alongside.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};

const S6: f64 = 2.449_489_742_783_178;

const C: [f64; 3] = [(4.0 - S6) / 10.0, (4.0 + S6) / 10.0, 1.0];

#[rustfmt::skip]
const A: [[f64; 3]; 3] = [
    [(88.0 - 7.0 * S6) / 360.0, (296.0 - 169.0 * S6) / 1800.0, (-2.0 + 3.0 * S6) / 225.0],
    [(296.0 + 169.0 * S6) / 1800.0, (88.0 + 7.0 * S6) / 360.0, (-2.0 - 3.0 * S6) / 225.0],
    [(16.0 - S6) / 36.0, (16.0 + S6) / 36.0, 1.0 / 9.0],
];

/// Accepted solution point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub x: f64,
    /// `L = ∫ y dx`.
    pub l: f64,
    pub y: f64,
    pub dy: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Clone, Debug)]
pub struct RiccatiOptions {
    pub h_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Lower bound on the number of steps inside each segment between breaks.
    pub min_segment_steps: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions {
            h_max: 0.02,
            rtol: 1e-11,
            atol: 1e-12,
            max_steps: 200_000,
            min_segment_steps: 16,
        }
    }
}

fn rhs(y: f64, b: f64, c: f64) -> f64 {
    -y * y - b * y - c
}

struct Step {
    y: f64,
    dl: f64,
    coeffs: (f64, f64),
}

/// One Radau IIA step. `None` if the Newton iteration fails.
fn radau_step(coeffs: &dyn Fn(f64) -> (f64, f64), x: f64, y: f64, h: f64) -> Option<Step> {
    let bc: [(f64, f64); 3] = [
        coeffs(x + C[0] * h),
        coeffs(x + C[1] * h),
        coeffs(x + C[2] * h),
    ];
    let a = Matrix3::from_fn(|i, j| A[i][j]);
    let mut stages = Vector3::repeat(y);
    for _ in 0..40 {
        let f = Vector3::from_fn(|j, _| rhs(stages[j], bc[j].0, bc[j].1));
        let fy = Vector3::from_fn(|j, _| -2.0 * stages[j] - bc[j].0);
        let resid = stages - Vector3::repeat(y) - a * f * h;
        let jac = Matrix3::identity() - a * Matrix3::from_diagonal(&fy) * h;
        let delta = jac.lu().solve(&resid)?;
        stages -= delta;
        if !stages.iter().all(|v| v.is_finite()) {
            return None;
        }
        let scale = 1.0 + stages.amax();
        if delta.amax() <= 1e-14 * scale {
            // stiffly accurate: the last stage is the step result
            let dl = h * (A[2][0] * stages[0] + A[2][1] * stages[1] + A[2][2] * stages[2]);
            return Some(Step {
                y: stages[2],
                dl,
                coeffs: bc[2],
            });
        }
    }
    None
}

/// Integrates from `x0` to `x1 > x0` with initial value `y0` and `L(x0) = 0`.
///
/// Steps never cross an entry of `breaks`, and each segment gets at least
/// `opts.min_segment_steps` steps.
pub fn integrate_riccati(
    coeffs: &dyn Fn(f64) -> (f64, f64),
    x0: f64,
    y0: f64,
    x1: f64,
    breaks: &[f64],
    opts: &RiccatiOptions,
) -> Result<Vec<Node>> {
    let mut stops: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > x0 && b < x1)
        .collect();
    stops.push(x1);
    stops.sort_by(f64::total_cmp);

    let (b0, c0) = coeffs(x0);
    let mut nodes = vec![Node {
        x: x0,
        l: 0.0,
        y: y0,
        dy: rhs(y0, b0, c0),
        b: b0,
        c: c0,
    }];
    let (mut x, mut y, mut l) = (x0, y0, 0.0);
    let per_segment = opts.min_segment_steps.max(1) as f64;
    let mut h = opts.h_max.min((stops[0] - x0) / per_segment);
    let mut seg_start = x0;
    let mut steps = 0;
    for &stop in &stops {
        let h_seg = opts.h_max.min((stop - seg_start) / per_segment);
        h = h.min(h_seg);
        while x < stop {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Stiffness { x, h });
            }
            let last = x + h >= stop - 1e-14 * (1.0 + stop.abs());
            let hh = if last { stop - x } else { h };
            if hh <= 1e-14 * (1.0 + x.abs()) {
                return Err(Error::Stiffness { x, h: hh });
            }
            let big = radau_step(coeffs, x, y, hh);
            let half1 = radau_step(coeffs, x, y, 0.5 * hh);
            let half2 = half1
                .as_ref()
                .and_then(|s| radau_step(coeffs, x + 0.5 * hh, s.y, 0.5 * hh));
            let (Some(big), Some(h1), Some(h2)) = (big, half1, half2) else {
                h = 0.25 * hh;
                continue;
            };
            let y_scale = opts.atol + opts.rtol * y.abs().max(h2.y.abs());
            let l_scale = opts.atol + opts.rtol * (h1.dl + h2.dl).abs().max(1.0);
            let err_y = (big.y - h2.y).abs() / 31.0 / y_scale;
            let err_l = (big.dl - h1.dl - h2.dl).abs() / 31.0 / l_scale;
            let err = err_y.max(err_l);
            let factor = if err == 0.0 {
                4.0
            } else {
                (0.9 * err.powf(-1.0 / 6.0)).clamp(0.2, 4.0)
            };
            if err <= 1.0 {
                let xm = x + 0.5 * hh;
                let (bm, cm) = h1.coeffs;
                nodes.push(Node {
                    x: xm,
                    l: l + h1.dl,
                    y: h1.y,
                    dy: rhs(h1.y, bm, cm),
                    b: bm,
                    c: cm,
                });
                x = if last { stop } else { x + hh };
                y = h2.y;
                l += h1.dl + h2.dl;
                let (be, ce) = h2.coeffs;
                nodes.push(Node {
                    x,
                    l,
                    y,
                    dy: rhs(y, be, ce),
                    b: be,
                    c: ce,
                });
                if !last {
                    h = (hh * factor).min(h_seg);
                }
            } else {
                h = hh * factor;
            }
        }
        seg_start = stop;
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn radau_coefficients_are_consistent() {
        for i in 0..3 {
            let row: f64 = A[i].iter().sum();
            assert_relative_eq!(row, C[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn fixed_point_is_preserved() {
        // y² + y - 2 = 0 at y = 1
        let nodes = integrate_riccati(
            &|_| (1.0, -2.0),
            -5.0,
            1.0,
            0.0,
            &[],
            &RiccatiOptions::default(),
        )
        .unwrap();
        let last = nodes.last().unwrap();
        assert_eq!(last.x, 0.0);
        assert!((last.y - 1.0).abs() < 1e-14);
        assert_relative_eq!(last.l, 5.0, max_relative = 1e-13);
    }

    #[test]
    fn logistic_decay_to_stable_root() {
        // y' = -y² + 1 from 0: y = tanh x
        let nodes = integrate_riccati(
            &|_| (0.0, -1.0),
            0.0,
            0.0,
            3.0,
            &[1.0],
            &RiccatiOptions::default(),
        )
        .unwrap();
        for n in &nodes {
            assert_relative_eq!(n.y, n.x.tanh(), epsilon = 1e-10);
            assert_relative_eq!(n.l, n.x.cosh().ln(), epsilon = 1e-10);
        }
    }

    #[test]
    fn stiff_relaxation() {
        // strongly attracting root at y = 1e6: y' = -(y² - 1e12)
        let opts = RiccatiOptions::default();
        let nodes = integrate_riccati(&|_| (0.0, -1e12), 0.0, 0.9e6, 1.0, &[], &opts).unwrap();
        assert!(nodes.len() < 2000);
        assert_relative_eq!(nodes.last().unwrap().y, 1e6, max_relative = 1e-10);
    }
}
