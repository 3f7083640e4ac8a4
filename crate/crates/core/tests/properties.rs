use approx::assert_relative_eq;
use hornlab::cdtools::{
    density_convexity_check, diameter_bound, sigma, tau, DensitySamplePath, DistortionQuery,
};
use hornlab::curvature::{hopf_ricci, ric4_horn_closed_form, ric_n_weighted};
use hornlab::decay::{quasipoly_fit, DecayVerdict};
use hornlab::geometry::{
    distance_upper_bound, geodesic_distance, sphere_angle, vertex_avoidance_check, HornPoint,
};
use hornlab::harmonic::{
    cone_exponents, default_span, frozen_root, indicial_exponents, solve_radial,
};
use hornlab::metric::HornMetric;
use hornlab::profiles::{
    derive_gluing_constants, junction_report, smooth_rise, smooth_step, GluingParams, Regime,
    WarpingProfile, WeightProfile,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn positive_params() -> impl Strategy<Value = GluingParams> {
    (
        0.05..2.0f64,
        0.05..0.95f64,
        0.01..0.5f64,
        1e-3..0.01f64,
        0.01..1.0f64,
        0.05..1.0f64,
    )
        .prop_filter_map("profiles must build", |(epsilon, eta, rho, kappa, z, m)| {
            let p = GluingParams {
                regime: Regime::PositiveK,
                epsilon,
                eta,
                rho,
                zeta: z * kappa * kappa / 100.0,
                kappa,
                curvature_bound: 0.01,
                mollifier_eps: m * kappa / 100.0,
                r_max: None,
            };
            (WarpingProfile::new(&p).is_ok() && WeightProfile::new(&p).is_ok()).then_some(p)
        })
}

fn unit_vector() -> impl Strategy<Value = [f64; 3]> {
    (-1.0..1.0f64, 0.0..2.0 * PI).prop_map(|(z, lon)| {
        let s = (1.0 - z * z).sqrt();
        [s * lon.cos(), s * lon.sin(), z]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn capped_constants_match_the_horn(p in positive_params()) {
        let c = derive_gluing_constants(&p).unwrap();
        let (s, co) = (c.a * c.xi).sin_cos();
        assert_relative_eq!(s / c.a, p.rho.powf(1.0 + p.epsilon) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(co, (1.0 + p.epsilon) * p.rho.powf(p.epsilon) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn open_constants_match_the_horn(epsilon in 0.05..2.0f64, rho in 0.01..0.5f64) {
        let p = GluingParams { epsilon, rho, ..GluingParams::preset(Regime::NonpositiveK) };
        let c = derive_gluing_constants(&p).unwrap();
        assert_relative_eq!(c.a, (1.0 + epsilon) * rho.powf(epsilon) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(c.a * c.xi, rho.powf(1.0 + epsilon) / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn junctions_are_smooth(p in positive_params()) {
        let warping = WarpingProfile::new(&p).unwrap();
        let weight = WeightProfile::new(&p).unwrap();
        prop_assert!(junction_report(&warping, 4).worst_mismatch < 1e-8);
        prop_assert!(junction_report(&weight, 4).worst_mismatch < 1e-8);
    }

    #[test]
    fn smooth_step_is_a_monotone_partition(a in -5.0..5.0f64, w in 0.01..3.0f64, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let b = a + w;
        let (x, y) = (a + u.min(v) * w, a + u.max(v) * w);
        let (sx, sy) = (smooth_step(x, a, b), smooth_step(y, a, b));
        prop_assert!((0.0..=1.0).contains(&sx));
        prop_assert!(sy <= sx);
        prop_assert!((sx + smooth_rise(x, a, b) - 1.0).abs() < 1e-15);
        prop_assert_eq!(smooth_step(a - w, a, b), 1.0);
        prop_assert_eq!(smooth_step(b + w, a, b), 0.0);
    }

    #[test]
    fn weighted_ricci_matches_closed_form(eps in 0.01..2.0f64, eta in 0.01..0.99f64, log_r in -3.0..1.0f64) {
        let r = 10f64.powf(log_r);
        let (rr, sphere) = ric_n_weighted(&HornMetric::pure_horn(eps, eta, 10.0), r).unwrap();
        let (crr, csphere) = ric4_horn_closed_form(eps, eta, r);
        prop_assert!((rr - crr).abs() <= 1e-8 * crr.abs().max(1.0));
        prop_assert!((sphere - csphere).abs() <= 1e-8 * csphere.abs().max(1.0));
    }

    #[test]
    fn fibre_curvature_scales_like_inverse_square(eps in 0.0..3.0f64, eta in 0.01..0.99f64, r in 1e-4..1e2f64, c in 0.1..10.0f64) {
        let h = hopf_ricci(eps, eta, c, r);
        let reference = hopf_ricci(eps, eta, 1.0, 1.0);
        prop_assert!(h.fiber_negative);
        assert_relative_eq!(h.e_fiber * r * r, reference.e_fiber, max_relative = 1e-12);
    }

    #[test]
    fn sigma_basic_identities(t in 0.0..=1.0f64, theta in 0.0..10.0f64, k in -5.0..5.0f64, dim in 1.0..10.0f64, dk in 0.0..2.0f64) {
        let q = DistortionQuery::new(t, theta, k, dim);
        let at_zero = sigma(&DistortionQuery { theta: 0.0, ..q });
        let flat_tau = tau(&DistortionQuery { k: 0.0, ..q });
        prop_assert_eq!(at_zero, t);
        prop_assert!((flat_tau - t).abs() <= 1e-14);
        let s = sigma(&q);
        let s2 = sigma(&DistortionQuery { k: k + dk, ..q });
        prop_assert!(s2.is_infinite() || s2 >= s * (1.0 - 1e-12));
    }

    #[test]
    fn sigma_at_the_endpoints(theta in 0.0..3.0f64, k in -5.0..5.0f64, dim in 1.0..10.0f64) {
        let q = |t| sigma(&DistortionQuery::new(t, theta, k, dim));
        if theta >= diameter_bound(k, dim) {
            prop_assert!(q(0.0).is_infinite() && q(1.0).is_infinite());
        } else {
            prop_assert_eq!(q(0.0), 0.0);
            prop_assert!((q(1.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn positive_affine_densities_pass(slope in -1.0..1.0f64, x0 in -2.0..0.0f64, w in 0.1..2.0f64) {
        let x1 = x0 + w;
        let offset = 1.0 + slope.abs() * (x0.abs() + x1.abs());
        let path = DensitySamplePath::from_fn(|x| offset + slope * x, x0, x1, 41, 0.0).unwrap();
        prop_assert!(density_convexity_check(&path, 7, 3).pass);
    }

    #[test]
    fn avoidance_margin_is_positive_near_the_tip(
        eps in 0.1..2.0f64, r1 in 1e-6..0.1f64, r2 in 1e-6..0.1f64, a in unit_vector(), b in unit_vector()
    ) {
        let (x, y) = (HornPoint::new(r1, a), HornPoint::new(r2, b));
        let check = vertex_avoidance_check(&x, &y, eps);
        prop_assert!(check.avoids);
        prop_assert!(check.margin > 0.0);
        prop_assert_eq!(distance_upper_bound(&x, &y, eps), distance_upper_bound(&y, &x, eps));
        prop_assert!((sphere_angle(&x, &y) - sphere_angle(&y, &x)).abs() < 1e-15);
    }

    #[test]
    fn indicial_roots_solve_their_quadratic(c in -3.0..5.0f64, d in -10.0..0.0f64) {
        let (hi, lo) = indicial_exponents(c, d).unwrap();
        prop_assert!(hi >= lo);
        for x in [hi, lo] {
            prop_assert!((x * (x - 1.0) + c * x + d).abs() <= 1e-10 * (1.0 + x * x));
        }
    }

    #[test]
    fn cone_exponents_are_the_flat_ones_rescaled(a in 0.1..1.0f64, k in 1usize..6) {
        let lambda = (k * (k + 1)) as f64;
        let (hi, lo) = cone_exponents(a, lambda).unwrap();
        assert_relative_eq!(hi * lo, -lambda / (a * a), max_relative = 1e-12);
        assert_relative_eq!(hi + lo, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn frozen_root_is_the_positive_root(b in -10.0..10.0f64, c in -10.0..0.0f64) {
        let y = frozen_root(b, c);
        prop_assert!(y >= 0.0);
        prop_assert!((y * y + b * y + c).abs() <= 1e-10 * (1.0 + y * y + b.abs() * y));
    }

    #[test]
    fn power_laws_have_finite_order(a in -5.0..5.0f64, b in 0.5..10.0f64) {
        let grid: Vec<f64> = (0..=48).map(|i| 10f64.powf(-6.0 + i as f64 / 12.0)).collect();
        let log_q: Vec<f64> = grid.iter().map(|r| a + b * r.ln()).collect();
        let (fit, verdict) = quasipoly_fit(&grid, &log_q).unwrap();
        prop_assert!((fit.b - b).abs() < 1e-8);
        prop_assert!(matches!(verdict, DecayVerdict::FiniteOrder(o) if (o - b).abs() < 1e-8));
    }

    #[test]
    fn log_quadratic_decay_has_infinite_order(a in -5.0..5.0f64, b in -2.0..2.0f64, c in 0.05..1.0f64) {
        let grid: Vec<f64> = (0..=48).map(|i| 10f64.powf(-6.0 + i as f64 / 12.0)).collect();
        let log_q: Vec<f64> = grid.iter().map(|r| a + b * r.ln() - c * r.ln().powi(2)).collect();
        let (fit, verdict) = quasipoly_fit(&grid, &log_q).unwrap();
        prop_assert!((fit.c + c).abs() < 1e-8);
        prop_assert_eq!(verdict, DecayVerdict::InfiniteOrder);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cone_distance_is_the_unrolled_one(a in 0.2..1.0f64, r1 in 0.05..1.0f64, r2 in 0.05..1.0f64, alpha in 0.0..PI) {
        let (x, y) = (HornPoint::on_meridian(r1, 0.0), HornPoint::on_meridian(r2, alpha));
        let d = geodesic_distance(&HornMetric::cone(a, 2.0), &x, &y).unwrap();
        let angle = a * alpha;
        let unrolled = if angle >= PI { r1 + r2 } else { (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * angle.cos()).max(0.0).sqrt() };
        prop_assert!((d - unrolled).abs() < 1e-8, "{d} vs {unrolled}");
    }

    #[test]
    fn horn_distance_is_bracketed(eps in 0.3..1.5f64, r1 in 0.05..0.5f64, r2 in 0.05..0.5f64, alpha in 0.0..PI) {
        let (x, y) = (HornPoint::on_meridian(r1, 0.0), HornPoint::on_meridian(r2, alpha));
        let d = geodesic_distance(&HornMetric::pure_horn(eps, 0.5, 2.0), &x, &y).unwrap();
        prop_assert!(d >= (r1 - r2).abs() * (1.0 - 1e-12));
        prop_assert!(d <= distance_upper_bound(&x, &y, eps).min(r1 + r2) * (1.0 + 1e-9));
    }

    #[test]
    fn flat_modes_are_powers(k in 1usize..5, log_r in -8.0..0.0f64) {
        let mode = solve_radial(&HornMetric::flat(10.0), k, default_span(1.0)).unwrap();
        let r = 10f64.powf(log_r);
        assert_relative_eq!(mode.value(r), r.powi(k as i32), max_relative = 1e-7);
    }
}
