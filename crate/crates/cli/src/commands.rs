//! One function per subcommand. Each returns a JSON summary and whether its checks passed.

use crate::config::{DensityKind, MetricKind, RunArgs};
use crate::output::Sink;
use crate::svg::{Plot, Series};
use hornlab::cdtools::{density_convexity_check, DensitySamplePath};
use hornlab::curvature::{certify_lower_bound, GridSpec, RicciReport};
use hornlab::decay::{
    decay_report, default_vio_grid, quasipoly_certificate, recursion_check, vio_table, DecayReport,
    DecayVerdict, FieldPreset, RowTrend, MAX_VIO_ROW,
};
use hornlab::geometry::{avoidance_sweep, geodesic_distance, random_pairs, ProbeRow};
use hornlab::harmonic::radial::RESIDUAL_TOLERANCE;
use hornlab::harmonic::{
    admissible_exponent, cone_exponents, dirichlet_solve, global_harmonic_construct,
    three_circle_sweep, weak_residual, y10, HarmonicField, WEAK_TOLERANCE,
};
use hornlab::metric::HornMetric;
use hornlab::profiles::{junction_report, WarpingProfile, WeightProfile};
use hornlab::{Error, GluingParams, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Result of one subcommand.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub summary: Value,
    /// Human-readable lines printed instead of the JSON summary.
    pub text: Option<String>,
}

impl Outcome {
    fn new(pass: bool, summary: Value) -> Self {
        Outcome {
            pass,
            summary,
            text: None,
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Serialize)]
struct ProfileRow {
    r: f64,
    phi: f64,
    phi_r: f64,
    phi_rr: f64,
    chi: f64,
    chi_r: f64,
    chi_rr: f64,
}

pub fn build(args: &RunArgs, sink: &mut Sink) -> Result<Outcome> {
    let params = args.params();
    let warping = WarpingProfile::new(&params)?;
    let weight = WeightProfile::new(&params)?;
    let phi_junctions = junction_report(&warping, 4);
    let chi_junctions = junction_report(&weight, 4);
    let convexity = weight.convexity_certificate();
    let constants = warping.constants();

    let mut radii = log_space(
        1e-3 * params.rho,
        warping.r_max() * (1.0 - 1e-9),
        args.grid_points.unwrap_or(400),
    );
    radii.extend(warping.knots()[1..4].iter().copied());
    radii.sort_by(f64::total_cmp);
    let rows = radii.iter().map(|&r| {
        let (p, c) = (warping.jet(r), weight.jet(r));
        ProfileRow {
            r,
            phi: p.value(),
            phi_r: p.derivative(1),
            phi_rr: p.derivative(2),
            chi: c.value(),
            chi_r: c.derivative(1),
            chi_rr: c.derivative(2),
        }
    });
    sink.csv("profile.csv", rows)?;

    let pass = phi_junctions.pass && chi_junctions.pass && convexity.pass;
    let summary = json!({
        "command": "build",
        "verdict": verdict(pass),
        "params": params,
        "constants": constants,
        "r_max": warping.r_max(),
        "knots": warping.knots(),
        "warping_junctions": { "worst_mismatch": phi_junctions.worst_mismatch, "pass": phi_junctions.pass },
        "weight_junctions": { "worst_mismatch": chi_junctions.worst_mismatch, "pass": chi_junctions.pass },
        "weight_convexity": convexity,
    });
    sink.json("build.json", &json!({ "summary": summary, "warping_junctions": phi_junctions, "weight_junctions": chi_junctions }))?;
    Ok(Outcome::new(pass, summary))
}

fn curvature_report(args: &RunArgs, params: &GluingParams) -> Result<RicciReport> {
    let metric = match args.metric.unwrap_or(MetricKind::Glued) {
        MetricKind::Glued => HornMetric::glued(params)?,
        MetricKind::Horn => {
            params.validate()?;
            HornMetric::pure_horn(params.epsilon, params.eta, params.r_max.unwrap_or(1.0))
        }
    };
    let spec = GridSpec {
        points: args.grid_points.unwrap_or(GridSpec::default().points),
        r_min: args.r_min,
    };
    certify_lower_bound(&metric, params.curvature_bound, &spec)
}

fn write_curvature(report: &RicciReport, sink: &mut Sink) -> Result<()> {
    sink.csv("curvature.csv", report.grid.iter())?;
    sink.plot(
        "curvature.svg",
        &Plot {
            title: format!("Ric_N - K (K = {})", report.curvature_bound),
            x_label: "log10 r".into(),
            y_label: "asinh(gap)".into(),
            series: vec![
                Series::line(
                    "radial",
                    report
                        .grid
                        .iter()
                        .map(|e| {
                            (
                                e.r.log10(),
                                (e.rr_component - report.curvature_bound).asinh(),
                            )
                        })
                        .collect(),
                ),
                Series::line(
                    "sphere",
                    report
                        .grid
                        .iter()
                        .map(|e| {
                            (
                                e.r.log10(),
                                (e.sphere_component - report.curvature_bound).asinh(),
                            )
                        })
                        .collect(),
                ),
            ],
        },
    )
}

pub fn certify_curvature(args: &RunArgs, sink: &mut Sink) -> Result<Outcome> {
    let params = args.params();
    let report = curvature_report(args, &params)?;
    write_curvature(&report, sink)?;
    let summary = json!({
        "command": "certify-curvature",
        "metric": args.metric.unwrap_or(MetricKind::Glued),
        "params": params,
        "grid_points": report.grid.len(),
        "report": report,
    });
    sink.json("curvature.json", &summary)?;
    Ok(Outcome::new(report.verdict.is_pass(), summary))
}

#[derive(Serialize)]
struct GeodesicRow {
    r1: f64,
    r2: f64,
    angle: f64,
    direct: f64,
    through_vertex: f64,
    margin: f64,
    exact: Option<f64>,
}

impl GeodesicRow {
    fn new(p: ProbeRow, exact: Option<f64>) -> Self {
        GeodesicRow {
            r1: p.r1,
            r2: p.r2,
            angle: p.angle,
            direct: p.direct,
            through_vertex: p.through_vertex,
            margin: p.margin,
            exact,
        }
    }
}

struct Avoidance {
    rows: Vec<GeodesicRow>,
    min_margin: f64,
    all_avoid: bool,
    exact_consistent: bool,
}

/// Bound-based sweep on `B_radius(V)`, with exact distances on the pure horn for the first pairs.
fn avoidance(
    epsilon: f64,
    eta: f64,
    radius: f64,
    pairs: usize,
    exact_pairs: usize,
    seed: u64,
) -> Result<Avoidance> {
    let sweep = avoidance_sweep(epsilon, radius, pairs, seed);
    let points = random_pairs(radius, exact_pairs.min(pairs), seed);
    let horn = HornMetric::pure_horn(epsilon, eta, 4.0 * radius);
    let exact: Vec<f64> = {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|(x, y)| geodesic_distance(&horn, x, y))
            .collect::<Result<_>>()?
    };
    let min_margin = sweep.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let exact_consistent = exact
        .iter()
        .zip(&sweep)
        .all(|(&d, row)| d <= row.direct.min(row.through_vertex) * (1.0 + 1e-9) + 1e-14);
    let rows = sweep
        .into_iter()
        .enumerate()
        .map(|(i, probe)| GeodesicRow::new(probe, exact.get(i).copied()))
        .collect();
    Ok(Avoidance {
        rows,
        min_margin,
        all_avoid: min_margin > 0.0,
        exact_consistent,
    })
}

pub fn check_geodesics(args: &RunArgs, sink: &mut Sink) -> Result<Outcome> {
    let params = args.params();
    let radius = args.radius.unwrap_or(0.1);
    let pairs = args.pairs.unwrap_or(10_000);
    if radius.is_nan() || radius <= 0.0 || pairs == 0 {
        return Err(Error::Config(
            "need a positive radius and at least one pair".into(),
        ));
    }
    let a = avoidance(
        params.epsilon,
        params.eta,
        radius,
        pairs,
        args.exact_pairs.unwrap_or(16),
        args.seed(),
    )?;
    sink.csv("geodesics.csv", a.rows.iter())?;
    let pass = a.all_avoid && a.exact_consistent;
    let summary = json!({
        "command": "check-geodesics",
        "verdict": verdict(pass),
        "epsilon": params.epsilon,
        "radius": radius,
        "pairs": pairs,
        "seed": args.seed(),
        "min_margin": a.min_margin,
        "all_avoid": a.all_avoid,
        "exact_pairs": a.rows.iter().filter(|r| r.exact.is_some()).count(),
        "exact_consistent": a.exact_consistent,
    });
    sink.json("geodesics.json", &summary)?;
    Ok(Outcome::new(pass, summary))
}

pub fn check_density(args: &RunArgs, sink: &mut Sink) -> Result<Outcome> {
    let params = args.params();
    let kind = args.density.unwrap_or(DensityKind::HornWeight);
    let samples = args.samples.unwrap_or(201);
    let (x0, x1, k, path) = match kind {
        DensityKind::HornWeight => {
            let horn = HornMetric::pure_horn(params.epsilon, params.eta, 10.0);
            let (x0, x1) = (args.x0.unwrap_or(1.0), args.x1.unwrap_or(2.0));
            if !(x0 > 0.0 && x1 <= horn.r_max()) {
                return Err(Error::Config("horn-weight needs 0 < x0 < x1 <= 10".into()));
            }
            let k = params.curvature_bound / (horn.big_n() - 1.0);
            let power = 1.0 / (horn.big_n() - 1.0);
            let path = DensitySamplePath::from_fn(
                |r| horn.radial_density(r).powf(power),
                x0,
                x1,
                samples,
                k,
            )?;
            (x0, x1, k, path)
        }
        DensityKind::Quadratic => {
            let (x0, x1) = (args.x0.unwrap_or(-1.0), args.x1.unwrap_or(1.0));
            (
                x0,
                x1,
                0.0,
                DensitySamplePath::from_fn(|x| x * x, x0, x1, samples, 0.0)?,
            )
        }
    };
    let report = density_convexity_check(&path, args.t_samples.unwrap_or(9), args.seed());
    sink.csv(
        "density.csv",
        path.h.iter().enumerate().map(|(i, &h)| (path.node(i), h)),
    )?;
    let summary = json!({
        "command": "check-density",
        "verdict": verdict(report.pass),
        "density": kind,
        "interval": [x0, x1],
        "k": k,
        "report": report,
    });
    sink.json("density.json", &summary)?;
    Ok(Outcome::new(report.pass, summary))
}

/// Metric and ball radius for a field preset, with an optional radius override.
fn field_setup(args: &RunArgs, params: &GluingParams) -> Result<(HornMetric, f64)> {
    match args.field() {
        FieldPreset::FlatLinear => Ok((HornMetric::flat(10.0), args.ball_radius.unwrap_or(1.0))),
        FieldPreset::Horn => Ok((
            HornMetric::glued(params)?,
            args.ball_radius.unwrap_or(params.rho),
        )),
    }
}

#[derive(Serialize)]
struct ModeRow {
    k: usize,
    m: i64,
    r: f64,
    log_value: f64,
    derivative: f64,
}

pub fn solve(args: &RunArgs, sink: &mut Sink) -> Result<Outcome> {
    let params = args.params();
    let (metric, s) = field_setup(args, &params)?;
    let field = dirichlet_solve(&metric, s, &y10(1.0), args.k_max())?;
    let max_residual = field
        .modes()
        .iter()
        .map(|m| m.radial.max_residual())
        .fold(0.0, f64::max);
    let weak = weak_residual(&field, args.weak_tests.unwrap_or(20), args.seed())?;
    let rows: Vec<ModeRow> = field
        .modes()
        .iter()
        .flat_map(|t| {
            let (k, m) = (t.k, t.m);
            t.radial
                .samples(8)
                .into_iter()
                .filter(|x| x.r <= s)
                .map(move |x| ModeRow {
                    k,
                    m,
                    r: x.r,
                    log_value: x.log_value,
                    derivative: x.derivative,
                })
        })
        .collect();
    sink.csv("modes.csv", rows.iter())?;
    sink.json("field.json", &field.to_json(8))?;
    let pass = max_residual <= RESIDUAL_TOLERANCE && weak.max_residual <= WEAK_TOLERANCE;
    let summary = json!({
        "command": "solve",
        "verdict": verdict(pass),
        "field": args.field(),
        "ball_radius": s,
        "k_max": field.k_max(),
        "modes": field.modes().len(),
        "max_ode_residual": max_residual,
        "weak_residual": weak,
        "boundary_sup": field.boundary_sup(s),
        "vertex_value": field.vertex_value(),
    });
    Ok(Outcome::new(pass, summary))
}

pub fn three_circle(args: &RunArgs, sink: &mut Sink) -> Result<Outcome> {
    let params = args.params();
    let metric = HornMetric::glued(&params)?;
    let a = metric
        .cone_slope()
        .ok_or_else(|| Error::Config("three-circle needs the nonpositive-k regime".into()))?;
    let alpha = cone_exponents(a, 2.0)?.0;
    let s_exp = args.s_exponent.unwrap_or(alpha + 0.25);
    let admissible = admissible_exponent(s_exp, params.eta);
    let big_s = args.ball_radius.unwrap_or(40.0);
    if big_s > metric.r_max() {
        return Err(Error::Config(format!(
            "ball radius {big_s} exceeds r_max {}",
            metric.r_max()
        )));
    }
    let delta = args.delta.unwrap_or(0.5);
    let mut data = y10(1.0);
    data.insert(2, [(0, delta)].into_iter().collect());
    let field = dirichlet_solve(&metric, big_s, &data, args.k_max())?;
    let conical_from = 4.0 * params.weight_end();
    let radii = log_space(params.rho, big_s, args.sweep_points.unwrap_or(24));
    let sweep = three_circle_sweep(&field, &radii, s_exp)?;
    sink.csv("three_circle.csv", sweep.rows.iter())?;
    let conical_hold = sweep
        .rows
        .iter()
        .filter(|r| r.r >= conical_from)
        .all(|r| r.implication_holds);
    let mut pass = admissible && conical_hold;
    let mut summary = json!({
        "command": "three-circle",
        "cone_slope": a,
        "alpha": alpha,
        "s": s_exp,
        "admissible": admissible,
        "ball_radius": big_s,
        "conical_from": conical_from,
        "k0": sweep.k0,
        "all_hold": sweep.all_hold,
        "conical_hold": conical_hold,
    });
    if args.global {
        let radii = args
            .global_radii
            .clone()
            .unwrap_or_else(|| vec![10.0, 20.0, 40.0, 80.0]);
        let g = global_harmonic_construct(&metric, &radii, args.k0.unwrap_or(2.0), delta)?;
        pass &= g.monotone;
        summary["global"] = serde_json::to_value(&g).map_err(|e| Error::Io(e.to_string()))?;
        sink.csv(
            "global.csv",
            g.differences
                .iter()
                .enumerate()
                .map(|(i, d)| (g.radii[i], g.radii[i + 1], d)),
        )?;
    }
    summary["verdict"] = json!(verdict(pass));
    sink.json("three_circle.json", &summary)?;
    Ok(Outcome::new(pass, summary))
}

#[derive(Serialize)]
struct DecayRow {
    r: f64,
    log_q: f64,
    log_m: f64,
    effective_order: f64,
}

#[derive(Serialize)]
struct VioRow {
    m: usize,
    inner_slope: f64,
    trend: RowTrend,
}

struct DecayRun {
    report: DecayReport,
    summary: Value,
    pass: bool,
}

fn run_decay(
    args: &RunArgs,
    params: &GluingParams,
    field: &HarmonicField,
    epsilon: Option<f64>,
    sink: &mut Sink,
) -> Result<DecayRun> {
    let report = decay_report(field, &args.decay_options())?;
    let m_max = args.m_max.unwrap_or(MAX_VIO_ROW);
    let vio = vio_table(field, &default_vio_grid(field.ball_radius()), m_max)?;
    let certificate = epsilon.map(|e| quasipoly_certificate(&report, e));
    let recursion = epsilon.map(|e| recursion_check(&report, e)).transpose()?;
    let consistent = match report.verdict {
        DecayVerdict::InfiniteOrder => vio.all_vanish,
        DecayVerdict::FiniteOrder(_) => !vio.all_vanish,
        DecayVerdict::Inconclusive => false,
    };
    let pass = consistent && certificate.as_ref().is_none_or(|c| c.holds);

    sink.csv(
        "decay.csv",
        (0..report.r_grid.len()).map(|i| DecayRow {
            r: report.r_grid[i],
            log_q: report.log_q[i],
            log_m: report.log_m[i],
            effective_order: report.effective_order[i],
        }),
    )?;
    sink.csv(
        "vio.csv",
        vio.trends.iter().enumerate().map(|(m, &trend)| VioRow {
            m,
            inner_slope: vio.inner_slopes[m],
            trend,
        }),
    )?;
    let x: Vec<f64> = report.r_grid.iter().map(|r| r.ln()).collect();
    let mut series = vec![Series::markers(
        "ln q",
        x.iter()
            .copied()
            .zip(report.log_q.iter().copied())
            .collect(),
    )];
    if let Some(f) = report.fit {
        series.push(Series::line(
            "fit",
            x.iter()
                .map(|&t| (t, f.a + f.b * t + f.c * t * t))
                .collect(),
        ));
    }
    sink.plot(
        "decay.svg",
        &Plot {
            title: format!("boundary sup: {}", report.verdict),
            x_label: "ln r".into(),
            y_label: "ln q".into(),
            series,
        },
    )?;

    let summary = json!({
        "field": args.field(),
        "params": params,
        "ball_radius": report.s,
        "verdict": report.verdict,
        "fit": report.fit,
        "grid_points": report.r_grid.len(),
        "certificate": certificate,
        "recursion": recursion.as_ref().map(|r| json!({
            "c_fit": r.c_fit, "log_c_fit": r.log_c_fit, "worst_r": r.worst_r,
            "uniform": r.uniform, "chain_holds": r.chain_holds,
        })),
        "vio": {
            "m_max": m_max,
            "all_vanish": vio.all_vanish,
            "first_persistent": vio.first_persistent,
        },
        "consistent": consistent,
    });
    Ok(DecayRun {
        report,
        summary,
        pass,
    })
}

pub fn decay(args: &RunArgs, sink: &mut Sink) -> Result<Outcome> {
    let params = args.params();
    let (field, epsilon) = match (args.field(), args.ball_radius) {
        (preset, None) => preset.build(&params)?,
        (preset, Some(_)) => {
            let (metric, s) = field_setup(args, &params)?;
            let eps = (preset == FieldPreset::Horn).then_some(params.epsilon);
            (dirichlet_solve(&metric, s, &y10(1.0), args.k_max())?, eps)
        }
    };
    let mut run = run_decay(args, &params, &field, epsilon, sink)?;
    run.summary["command"] = json!("decay");
    sink.json("decay.json", &run.summary)?;
    Ok(Outcome::new(run.pass, run.summary))
}

/// Build, certify, vertex avoidance and decay of the horn field, with one verdict.
pub fn reproduce(args: &RunArgs, sink: &mut Sink) -> Result<Outcome> {
    let params = args.params();
    let built = build(args, sink)?;
    let curvature = curvature_report(args, &params)?;
    write_curvature(&curvature, sink)?;

    let radius = args.radius.unwrap_or(params.rho);
    let pairs = args.pairs.unwrap_or(10_000);
    let avoid = avoidance(
        params.epsilon,
        params.eta,
        radius,
        pairs,
        args.exact_pairs.unwrap_or(0),
        args.seed(),
    )?;
    sink.csv("geodesics.csv", avoid.rows.iter())?;

    let field = dirichlet_solve(
        &HornMetric::glued(&params)?,
        params.rho,
        &y10(1.0),
        args.k_max(),
    )?;
    let run = run_decay(args, &params, &field, Some(params.epsilon), sink)?;

    let avoid_pass = avoid.all_avoid && avoid.exact_consistent;
    let decay_pass = run.pass && run.report.verdict == DecayVerdict::InfiniteOrder;
    let pass = built.pass && curvature.verdict.is_pass() && avoid_pass && decay_pass;
    let summary = json!({
        "command": "reproduce",
        "verdict": verdict(pass),
        "params": params,
        "build": verdict(built.pass),
        "curvature": {
            "verdict": curvature.verdict,
            "min_eigen_gap": curvature.worst_point.1,
            "worst_r": curvature.worst_point.0,
            "worst_direction": curvature.worst_direction,
        },
        "vertex_avoidance": {
            "verdict": verdict(avoid_pass),
            "radius": radius,
            "pairs": pairs,
            "min_margin": avoid.min_margin,
        },
        "decay": run.summary,
    });
    sink.json("summary.json", &summary)?;
    let text = format!(
        "build: {}\ncurvature: {} (min gap {:.3e} at r = {:.3e}, K = {})\nvertex-avoidance: {} ({} pairs in B_{}, min margin {:.3e})\ndecay: {} (certificate {}, vanishing-order rows {})\ncounterexample: {}\n",
        verdict(built.pass),
        curvature.verdict,
        curvature.worst_point.1,
        curvature.worst_point.0,
        params.curvature_bound,
        verdict(avoid_pass),
        pairs,
        radius,
        avoid.min_margin,
        run.report.verdict,
        verdict(run.summary["certificate"]["holds"].as_bool().unwrap_or(false)),
        if run.summary["vio"]["all_vanish"].as_bool().unwrap_or(false) { "all vanish" } else { "persist" },
        verdict(pass),
    );
    Ok(Outcome {
        pass,
        summary,
        text: Some(text),
    })
}
