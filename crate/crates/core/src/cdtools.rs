//! Distortion coefficients of the curvature-dimension condition and the
//! one-dimensional density inequality.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistortionQuery {
    pub t: f64,
    pub theta: f64,
    pub k: f64,
    /// Dimension slot: `𝒩` for [`sigma`], `N` for [`tau`]. May be infinite.
    pub dim: f64,
}

impl DistortionQuery {
    pub fn new(t: f64, theta: f64, k: f64, dim: f64) -> Self {
        DistortionQuery { t, theta, k, dim }
    }
}

// Below this argument the ratios are evaluated by their Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// `D_{K,𝒩} = π/√(K/𝒩)` for `K > 0`, `+∞` otherwise.
pub fn diameter_bound(k: f64, dim: f64) -> f64 {
    if k > 0.0 && dim.is_finite() {
        std::f64::consts::PI / (k / dim).sqrt()
    } else {
        f64::INFINITY
    }
}

fn sin_ratio(t: f64, x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let u = 1.0 - t * t;
        t * (1.0 + u * x * x / 6.0 + u * (7.0 - 3.0 * t * t) * x.powi(4) / 360.0)
    } else {
        (t * x).sin() / x.sin()
    }
}

fn sinh_ratio(t: f64, x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let u = 1.0 - t * t;
        t * (1.0 - u * x * x / 6.0 + u * (7.0 - 3.0 * t * t) * x.powi(4) / 360.0)
    } else if x > 20.0 {
        // sinh(tx)/sinh(x) without overflow
        ((t - 1.0) * x).exp() * (-(-2.0 * t * x).exp_m1()) / (-(-2.0 * x).exp_m1())
    } else {
        (t * x).sinh() / x.sinh()
    }
}

/// `σ^{(t)}_{K,𝒩}(θ)`.
///
/// `t` when `θ = 0`, `K = 0` or `𝒩 = ∞`; `+∞` for `θ ≥ D_{K,𝒩}`;
/// `sin(tθ√(K/𝒩))/sin(θ√(K/𝒩))` for `K > 0`; `t` for `K < 0, 𝒩 = 1`;
/// `sinh(tθ√(-K/𝒩))/sinh(θ√(-K/𝒩))` for `K < 0` otherwise.
pub fn sigma(q: &DistortionQuery) -> f64 {
    let DistortionQuery { t, theta, k, dim } = *q;
    if k > 0.0 && dim.is_finite() && theta >= diameter_bound(k, dim) {
        return f64::INFINITY;
    }
    if theta == 0.0 || k == 0.0 || dim.is_infinite() {
        return t;
    }
    if k > 0.0 {
        sin_ratio(t, theta * (k / dim).sqrt())
    } else if dim == 1.0 {
        t
    } else {
        sinh_ratio(t, theta * (-k / dim).sqrt())
    }
}

/// `τ^{(t)}_{K,N}(θ) = t^{1/N} σ^{(t)}_{K,N-1}(θ)^{1-1/N}`; for `N = 1`, `t` if
/// `K ≤ 0` and `+∞` if `K > 0`.
pub fn tau(q: &DistortionQuery) -> f64 {
    let DistortionQuery { t, k, dim, .. } = *q;
    if dim == 1.0 {
        return if k <= 0.0 { t } else { f64::INFINITY };
    }
    let s = sigma(&DistortionQuery {
        dim: dim - 1.0,
        ..*q
    });
    if s.is_infinite() {
        return f64::INFINITY;
    }
    if dim.is_infinite() {
        return s;
    }
    t.powf(1.0 / dim) * s.powf(1.0 - 1.0 / dim)
}

/// Samples of a density `h` at `n` equally spaced nodes of `[x0, x1]`.
#[derive(Clone, Debug, Serialize)]
pub struct DensitySamplePath {
    pub x0: f64,
    pub x1: f64,
    pub h: Vec<f64>,
    /// Curvature parameter of `σ_{k,1}`.
    pub k: f64,
}

impl DensitySamplePath {
    pub fn new(x0: f64, x1: f64, h: Vec<f64>, k: f64) -> Result<Self> {
        if !(x1 > x0) || h.len() < 3 {
            return Err(Error::Config("need x0 < x1 and at least 3 samples".into()));
        }
        if h.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(
                "density samples must be finite and nonnegative".into(),
            ));
        }
        Ok(DensitySamplePath { x0, x1, h, k })
    }

    pub fn from_fn(f: impl Fn(f64) -> f64, x0: f64, x1: f64, n: usize, k: f64) -> Result<Self> {
        let h = (0..n)
            .map(|i| f(x0 + (x1 - x0) * i as f64 / (n - 1) as f64))
            .collect();
        Self::new(x0, x1, h, k)
    }

    fn step(&self) -> f64 {
        (self.x1 - self.x0) / (self.h.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + self.step() * i as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub pass: bool,
    /// Most negative value of `h(x_t) - σ^{(1-t)} h(x0) - σ^{(t)} h(x1)` (0 if none negative).
    pub worst_violation: f64,
    /// `(x0, x1, t)` at the worst residual.
    pub worst_at: (f64, f64, f64),
    pub checks: usize,
    /// Extreme one-sided difference quotients of `h` over the grid.
    pub min_slope: f64,
    pub max_slope: f64,
}

const RANDOM_SUBPAIRS: usize = 256;

/// Checks `h((1-t)a + tb) ≥ σ^{(1-t)}_{k,1}(|b-a|) h(a) + σ^{(t)}_{k,1}(|b-a|) h(b)`
/// at grid nodes: `t_samples` interior points of the full pair plus random sub-pairs.
pub fn density_convexity_check(
    path: &DensitySamplePath,
    t_samples: usize,
    seed: u64,
) -> DensityReport {
    let n = path.h.len();
    let mut worst = (f64::INFINITY, (path.x0, path.x1, 0.5));
    let mut checks = 0;
    let mut check_pair = |i: usize, j: usize, samples: usize| {
        let span = j - i;
        if span < 2 {
            return;
        }
        let theta = path.node(j) - path.node(i);
        let interior = span - 1;
        let count = samples.min(interior);
        for s in 1..=count {
            let m = i + ((s as f64) * span as f64 / (count + 1) as f64).round() as usize;
            let m = m.clamp(i + 1, j - 1);
            let t = (m - i) as f64 / span as f64;
            let lo = sigma(&DistortionQuery::new(1.0 - t, theta, path.k, 1.0));
            let hi = sigma(&DistortionQuery::new(t, theta, path.k, 1.0));
            let rhs = lo * path.h[i] + hi * path.h[j];
            let res = if rhs.is_finite() {
                path.h[m] - rhs
            } else {
                f64::NEG_INFINITY
            };
            checks += 1;
            if res < worst.0 {
                worst = (res, (path.node(i), path.node(j), t));
            }
        }
    };
    check_pair(0, n - 1, t_samples.max(3));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_SUBPAIRS {
        let i = rng.random_range(0..n - 2);
        let j = rng.random_range(i + 2..n);
        check_pair(i, j, t_samples.max(3));
    }
    let hmax = path.h.iter().copied().fold(0.0, f64::max);
    let dx = path.step();
    let slopes = path.h.windows(2).map(|w| (w[1] - w[0]) / dx);
    let (min_slope, max_slope) = slopes.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
        (a.min(s), b.max(s))
    });
    DensityReport {
        pass: worst.0 >= -1e-10 * hmax,
        worst_violation: worst.0.min(0.0),
        worst_at: worst.1,
        checks,
        min_slope,
        max_slope,
    }
}
