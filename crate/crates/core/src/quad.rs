//! Quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod, and cached
//! cumulative integrals for the profile constructions.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const PANEL_ORDER: usize = 20;

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Fixed-order Gauss–Legendre integral of `f` over `[a, b]`.
pub fn gauss_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = panel_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration to `max(abs_tol, rel_tol·|I|)`.
///
/// Global strategy: the sub-interval with the largest error estimate is
/// bisected until the summed estimate meets the tolerance.
pub fn integrate(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let first = kronrod15(f, a, b);
    let mut live = vec![(a, b, first.0, first.1)];
    let (mut sum, mut err) = first;
    let (mut frozen_sum, mut frozen_err) = (0.0, 0.0);
    for _ in 0..20_000 {
        if err <= abs_tol.max(rel_tol * sum.abs()) {
            return Ok(sum);
        }
        let Some(idx) = live
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
        else {
            return Ok(sum);
        };
        let (lo, hi, val, e) = live.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval at machine resolution: freeze it
            frozen_sum += val;
            frozen_err += e;
            continue;
        }
        let left = kronrod15(f, lo, mid);
        let right = kronrod15(f, mid, hi);
        live.push((lo, mid, left.0, left.1));
        live.push((mid, hi, right.0, right.1));
        sum = frozen_sum + live.iter().map(|s| s.2).sum::<f64>();
        err = frozen_err + live.iter().map(|s| s.3).sum::<f64>();
    }
    Err(Error::Quadrature { a, b, error: err })
}

/// Integral of `f` over consecutive sub-intervals split at `breaks`.
pub fn integrate_piecewise(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut edges = vec![a];
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += integrate(f, w[0], w[1], abs_tol, rel_tol)?;
    }
    Ok(total)
}

/// Cached running integrals of a smooth function over panels.
///
/// Stores `I0(x) = ∫_lo^x f` and `I1(x) = ∫_lo^x (t - lo) f(t) dt` at panel
/// boundaries. The integrand itself is not stored: callers pass it back on
/// every evaluation, so the cache stays plain data.
#[derive(Clone, Debug)]
pub struct Cumulative {
    edges: Vec<f64>,
    i0: Vec<f64>,
    i1: Vec<f64>,
}

impl Cumulative {
    /// `segments` is a list of `(end, panels)` pairs partitioning `[lo, end_last]`.
    pub fn new(f: &dyn Fn(f64) -> f64, lo: f64, segments: &[(f64, usize)]) -> Self {
        let mut edges = vec![lo];
        let mut start = lo;
        for &(end, panels) in segments {
            assert!(end >= start && panels >= 1);
            for j in 1..panels {
                edges.push(start + (end - start) * j as f64 / panels as f64);
            }
            edges.push(end);
            start = end;
        }
        let mut i0 = vec![0.0];
        let mut i1 = vec![0.0];
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            i0.push(i0.last().unwrap() + gauss_panel(f, a, b));
            i1.push(i1.last().unwrap() + gauss_panel(&|t| (t - lo) * f(t), a, b));
        }
        Cumulative { edges, i0, i1 }
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    fn moments(&self, f: &dyn Fn(f64) -> f64, x: f64) -> (f64, f64) {
        let lo = self.lo();
        if x <= lo {
            return (0.0, 0.0);
        }
        let x = x.min(self.hi());
        let k = match self.edges.binary_search_by(|e| e.total_cmp(&x)) {
            Ok(k) => return (self.i0[k], self.i1[k]),
            Err(k) => k - 1,
        };
        let a = self.edges[k];
        let (nodes, weights) = panel_rule();
        let half = 0.5 * (x - a);
        let mid = 0.5 * (x + a);
        let (mut m0, mut m1) = (0.0, 0.0);
        for (xi, wi) in nodes.iter().zip(weights) {
            let t = mid + half * xi;
            let v = wi * f(t);
            m0 += v;
            m1 += (t - lo) * v;
        }
        (self.i0[k] + m0 * half, self.i1[k] + m1 * half)
    }

    /// `∫_from^x f(t) dt`.
    pub fn first(&self, f: &dyn Fn(f64) -> f64, from: f64, x: f64) -> f64 {
        self.moments(f, x).0 - self.moments(f, from).0
    }

    /// `∫_from^x ∫_from^s f(t) dt ds = ∫_from^x (x - t) f(t) dt`.
    pub fn repeated(&self, f: &dyn Fn(f64) -> f64, from: f64, x: f64) -> f64 {
        let lo = self.lo();
        let (a0, a1) = self.moments(f, from);
        let (b0, b1) = self.moments(f, x);
        (x - lo) * (b0 - a0) - (b1 - a1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // degree 12 is exact for n = 7
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_relative_eq!(i, 2.0 / 13.0, epsilon = 1e-14);
    }

    #[test]
    fn kronrod_rule_is_exact_to_degree_22() {
        let wsum = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        assert_relative_eq!(wsum, 2.0, epsilon = 1e-14);
        for deg in [2, 10, 22] {
            let (v, _) = kronrod15(&|x: f64| x.powi(deg), -1.0, 1.0);
            assert_relative_eq!(v, 2.0 / (deg as f64 + 1.0), epsilon = 1e-14);
        }
        let gsum = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert_relative_eq!(gsum, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = integrate(&|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn cumulative_repeated_integral() {
        let f = |t: f64| t.cos();
        let c = Cumulative::new(&f, 0.0, &[(1.0, 8), (2.0, 4)]);
        for &x in &[0.3, 1.0, 1.7, 2.0] {
            assert_relative_eq!(c.first(&f, 0.0, x), x.sin(), epsilon = 1e-14);
            // ∫_0^x (x - t) cos t dt = 1 - cos x
            assert_relative_eq!(c.repeated(&f, 0.0, x), 1.0 - x.cos(), epsilon = 1e-14);
        }
        // from an interior point
        let (a, x) = (0.4_f64, 1.9_f64);
        let exact = -(x.cos()) + a.cos() - (x - a) * a.sin();
        assert_relative_eq!(c.repeated(&f, a, x), exact, epsilon = 1e-14);
    }
}
