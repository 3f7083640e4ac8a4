//! Real spherical harmonics on `S²` and quasi-uniform point sets.

use std::f64::consts::PI;

/// `(λ_k, multiplicity) = (k(k+1), 2k+1)` for the Laplacian on the round `S²`.
pub fn sphere_eigendata(k: usize) -> (f64, usize) {
    ((k * (k + 1)) as f64, 2 * k + 1)
}

/// Position of `Y_{k,m}` in the flat layout used by [`real_sh_all`].
pub fn sh_index(k: usize, m: i64) -> usize {
    k * k + (k as i64 + m) as usize
}

/// All real orthonormal harmonics `Y_{k,m}`, `k ≤ k_max`, at the unit vector `p`.
///
/// `Y_{k,0} = N_{k0}(cos θ)`, `Y_{k,m} = √2 N_{km} cos(mφ)` and
/// `Y_{k,-m} = √2 N_{km} sin(mφ)` for `m > 0`, with fully normalized
/// associated Legendre functions (no Condon–Shortley phase), so
/// `Y_{1,1} = √(3/4π)·x`, `Y_{1,-1} = √(3/4π)·y`, `Y_{1,0} = √(3/4π)·z`.
pub fn real_sh_all(k_max: usize, p: [f64; 3]) -> Vec<f64> {
    let z = p[2].clamp(-1.0, 1.0);
    let s = (p[0] * p[0] + p[1] * p[1]).sqrt();
    let phi = p[1].atan2(p[0]);
    let n = k_max + 1;
    // leg[l][m]
    let mut leg = vec![vec![0.0; n]; n];
    leg[0][0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..n {
        let mf = m as f64;
        leg[m][m] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * leg[m - 1][m - 1];
    }
    for m in 0..n {
        if m + 1 < n {
            leg[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * z * leg[m][m];
        }
        for l in m + 2..n {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            leg[l][m] = a * (z * leg[l - 1][m] - b * leg[l - 2][m]);
        }
    }
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        out[sh_index(k, 0)] = leg[k][0];
        for m in 1..=k {
            let (sm, cm) = (m as f64 * phi).sin_cos();
            out[sh_index(k, m as i64)] = 2f64.sqrt() * leg[k][m] * cm;
            out[sh_index(k, -(m as i64))] = 2f64.sqrt() * leg[k][m] * sm;
        }
    }
    out
}

/// A single real harmonic.
pub fn real_sh(k: usize, m: i64, p: [f64; 3]) -> f64 {
    real_sh_all(k, p)[sh_index(k, m)]
}

/// `sup |Y_{1,m}| = √(3/4π)`.
pub fn y1_sup() -> f64 {
    (3.0 / (4.0 * PI)).sqrt()
}

/// Fibonacci lattice of `n` nearly equal-area points.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = golden * i as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Orthonormal basis `(e1, e2)` of the tangent plane at `p`.
pub fn tangent_frame(p: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if p[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let dot = helper[0] * p[0] + helper[1] * p[1] + helper[2] * p[2];
    let mut e1 = [
        helper[0] - dot * p[0],
        helper[1] - dot * p[1],
        helper[2] - dot * p[2],
    ];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = e1.map(|v| v / n1);
    let e2 = [
        p[1] * e1[2] - p[2] * e1[1],
        p[2] * e1[0] - p[0] * e1[2],
        p[0] * e1[1] - p[1] * e1[0],
    ];
    (e1, e2)
}

/// Moves `p` by angle `t` along the great circle with initial direction `e`.
pub fn geodesic_step(p: [f64; 3], e: [f64; 3], t: f64) -> [f64; 3] {
    let (s, c) = t.sin_cos();
    [
        c * p[0] + s * e[0],
        c * p[1] + s * e[1],
        c * p[2] + s * e[2],
    ]
}

/// `|∇_{S²} f|` at `p` by central differences along two great circles.
pub fn tangential_gradient_norm(f: &dyn Fn([f64; 3]) -> f64, p: [f64; 3]) -> f64 {
    let h = 1e-5;
    let (e1, e2) = tangent_frame(p);
    let d1 = (f(geodesic_step(p, e1, h)) - f(geodesic_step(p, e1, -h))) / (2.0 * h);
    let d2 = (f(geodesic_step(p, e2, h)) - f(geodesic_step(p, e2, -h))) / (2.0 * h);
    (d1 * d1 + d2 * d2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigendata() {
        assert_eq!(sphere_eigendata(0), (0.0, 1));
        assert_eq!(sphere_eigendata(1), (2.0, 3));
        assert_eq!(sphere_eigendata(2), (6.0, 5));
    }

    #[test]
    fn degree_one_is_linear() {
        let p = [0.36, 0.48, 0.8];
        let c = y1_sup();
        assert_relative_eq!(real_sh(1, 1, p), c * 0.36, max_relative = 1e-14);
        assert_relative_eq!(real_sh(1, -1, p), c * 0.48, max_relative = 1e-14);
        assert_relative_eq!(real_sh(1, 0, p), c * 0.8, max_relative = 1e-14);
        // Y_20 = √(5/16π)(3z² - 1)
        assert_relative_eq!(
            real_sh(2, 0, p),
            (5.0 / (16.0 * PI)).sqrt() * (3.0 * 0.64 - 1.0),
            max_relative = 1e-13
        );
    }

    #[test]
    fn lattice_quadrature_orthonormality() {
        let n = 20000;
        let pts = fibonacci_sphere(n);
        let k_max = 4;
        let size = (k_max + 1) * (k_max + 1);
        let mut gram = vec![0.0; size * size];
        for p in &pts {
            let y = real_sh_all(k_max, *p);
            for i in 0..size {
                for j in 0..size {
                    gram[i * size + j] += y[i] * y[j];
                }
            }
        }
        let w = 4.0 * PI / n as f64;
        for i in 0..size {
            for j in 0..size {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (gram[i * size + j] * w - expected).abs() < 2e-3,
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn gradient_of_coordinate_function() {
        // |∇ z| on S² is sin θ
        let p = [0.6, 0.0, 0.8];
        let g = tangential_gradient_norm(&|q| q[2], p);
        assert_relative_eq!(g, 0.6, max_relative = 1e-8);
    }
}
