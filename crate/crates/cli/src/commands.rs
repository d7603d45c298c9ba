use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use baxter_lab::benzaid_lutz::{interior_grid, write_grid_csv, Budget, LimitVariant};
use baxter_lab::numeric::{fmt_f64, horner};
use baxter_lab::params::{ParamSpec, ParameterSequence};
use baxter_lab::recurrence::{iterate, kappa_sequence, Flavor};
use baxter_lab::tauberian::{
    angle_distance, boundary_sweep, m_series, q21_sup_profile, write_sweep_csv, BoundaryBudget,
    ExampleKind, ExampleParams, ExampleTerm, InterchangeBudgets, SweepConfig, SweepRow, Verdict, FIT_FROM,
};
use baxter_lab::toeplitz::{baxter_params_from_moments, baxter_table, det_polynomials, sylvester_check, toeplitz_det};
use baxter_lab::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{ExperimentConfig, Overrides};
use crate::report::{Check, Report};

const IDENTITY_TOL: f64 = 1e-10;
const RECURRENCE_TOL: f64 = 1e-9;
const INTERCHANGE_TOL: f64 = 2e-6;
const PRODUCT_TOL: f64 = 1e-6;
/// Fine grid for locating M-series divergence.
const LOCATE_GRID: usize = 8192;
/// Distance from the singular angles that defines the good arcs.
const ARC_MARGIN: f64 = 0.3;

fn csv_writer(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// `|a - p(w)|` over the size `sum |c_j| |w|^j` of the evaluation.
fn poly_residual(a: C64, coeffs: &[C64], w: C64) -> f64 {
    let scale: f64 = coeffs.iter().enumerate().map(|(j, c)| c.norm() * w.norm().powi(j as i32)).sum();
    (a - horner(coeffs, w)).norm() / scale.max(f64::MIN_POSITIVE)
}

fn rel(a: C64, b: C64) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        0.0
    } else {
        d / b.norm()
    }
}

pub fn oracle_check(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = cfg.measure()?;
    spec.validate()?;
    let order = cfg.budgets.order;
    // D_{n+1} and the shifted D_n only reach moments up to +-n
    let table = spec.moment_table(order)?;
    let rows = baxter_table(&table, order)?;
    let params = baxter_params_from_moments(&table, order)?;
    let kappa = kappa_sequence(&params, order)?;
    let norm = table.normalized()?;
    let d = (0..=order + 1).map(|n| toeplitz_det(&norm, n, 0)).collect::<baxter_lab::Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<C64> = (0..cfg.budgets.points)
        .map(|_| C64::from_polar(rng.gen_range(0.1..=2.0), rng.gen_range(0.0..TAU)))
        .collect();
    let trajectories = points
        .iter()
        .map(|&z| Ok((iterate(z, &params, order, Flavor::MonicPhi)?, iterate(z, &params, order, Flavor::MonicPsi)?)))
        .collect::<baxter_lab::Result<Vec<_>>>()?;

    fs::create_dir_all(&cfg.out)?;
    let mut w = csv::Writer::from_writer(csv_writer(&cfg.out, "identities.csv")?);
    w.write_record([
        "n", "alpha_re", "alpha_im", "beta_re", "beta_im", "kappa_re", "kappa_im", "det_re", "det_im",
        "sylvester", "baxterpar_step", "baxterpar_product", "recurrence",
    ])?;
    let (mut syl, mut bp, mut rec) = (0.0f64, 0.0f64, 0.0f64);
    let mut prod = C64::new(1.0, 0.0);
    for n in 1..=order {
        let row = &rows[n - 1];
        let factor = C64::new(1.0, 0.0) - row.alpha * row.beta;
        prod *= factor;
        let step = rel(factor, d[n + 1] * d[n - 1] / (d[n] * d[n]));
        let product = rel(prod, d[n + 1] / d[n]);
        let s = sylvester_check(&table, n)?;
        let p = det_polynomials(&table, n)?;
        let k2 = kappa.values[n] * kappa.values[n];
        let r = max(points.iter().zip(&trajectories).flat_map(|(&z, (phi, psi))| {
            let (f, g) = (phi.value(n), psi.value(n));
            [
                poly_residual(f[0], &p.monic_phi(), z),
                poly_residual(g[0], &p.monic_psi(), z.inv()),
                poly_residual(k2 * f[1], &p.u, z),
                poly_residual(k2 * g[1], &p.v, z.inv()),
            ]
        }));
        syl = syl.max(s);
        bp = bp.max(step).max(product);
        rec = rec.max(r);
        w.write_record([
            n.to_string(),
            fmt_f64(row.alpha.re),
            fmt_f64(row.alpha.im),
            fmt_f64(row.beta.re),
            fmt_f64(row.beta.im),
            fmt_f64(row.kappa.re),
            fmt_f64(row.kappa.im),
            fmt_f64(row.det.re),
            fmt_f64(row.det.im),
            fmt_f64(s),
            fmt_f64(step),
            fmt_f64(product),
            fmt_f64(r),
        ])?;
    }
    w.flush()?;
    let checks = vec![
        Check::at_most("sylvester", syl, IDENTITY_TOL),
        Check::at_most("baxterpar", bp, IDENTITY_TOL),
        Check::at_most("recurrence_vs_determinants", rec, RECURRENCE_TOL),
    ];
    let summary = json!({
        "order": order,
        "points": points.len(),
        "max_sylvester": syl,
        "max_baxterpar": bp,
        "max_recurrence": rec,
    });
    Ok(Report::new("oracle-check", cfg, Vec::new(), checks, summary))
}

fn interior_budget(cfg: &ExperimentConfig) -> Budget {
    Budget {
        n_start: cfg.budgets.n_start,
        n_max: cfg.budgets.n_max,
        cutoff_max: cfg.budgets.cutoff_max,
    }
}

fn example_warnings(spec: &ParamSpec) -> Vec<String> {
    spec.example().map(|e| e.warnings()).unwrap_or_default()
}

pub fn interior(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = cfg.params()?;
    let params = spec.build()?;
    let a = cfg.grids.disk_angles;
    let points: Vec<C64> = cfg
        .grids
        .disk_radii
        .iter()
        .flat_map(|&r| (0..a).map(move |j| C64::from_polar(r, TAU * j as f64 / a as f64)))
        .collect();
    let tol = cfg.budgets.tol;
    let rows = interior_grid(&points, &params, tol, LimitVariant::U, interior_budget(cfg));
    fs::create_dir_all(&cfg.out)?;
    write_grid_csv(&rows, csv_writer(&cfg.out, "u_grid.csv")?)?;

    let converged: Vec<_> = rows.iter().filter(|r| r.converged).collect();
    let flagged: Vec<_> = rows
        .iter()
        .filter(|r| !r.converged)
        .map(|r| json!({"z": [r.z.re, r.z.im], "error": r.error}))
        .collect();
    let y1 = max(rows.iter().filter(|r| r.converged).map(|r| r.y1));
    let checks = vec![Check::at_most("y1_at_final_step", y1, tol)
        .with_detail(format!("over {} of {} converged points", converged.len(), rows.len()))];
    let summary = json!({
        "points": rows.len(),
        "converged": converged.len(),
        "flagged": flagged,
        "max_y1": y1,
        "max_first_component": max(converged.iter().map(|r| r.first_component)),
        "max_cauchy": max(converged.iter().map(|r| r.cauchy)),
    });
    Ok(Report::new("interior", cfg, example_warnings(spec), checks, summary))
}

fn verdict_counts<'a>(vs: impl Iterator<Item = &'a Verdict>) -> serde_json::Value {
    let (mut c, mut d, mut i) = (0, 0, 0);
    for v in vs {
        match v {
            Verdict::Converging => c += 1,
            Verdict::Diverging => d += 1,
            Verdict::Inconclusive => i += 1,
        }
    }
    json!({"converging": c, "diverging": d, "inconclusive": i})
}

fn example1_checks(cfg: &ExperimentConfig, params: &ParameterSequence, rows: &[SweepRow]) -> Result<(Vec<Check>, serde_json::Value)> {
    let b = &cfg.budgets;
    let n_lo = FIT_FROM.min(b.n);
    let (_, slope) = q21_sup_profile(params, cfg.grids.theta, n_lo, b.n, b.cutoff)?;
    let slope = slope.unwrap_or(f64::NAN);
    let conv = rows.iter().filter(|r| r.tauberian.e_series.verdict == Verdict::Converging).count();
    let frac = conv as f64 / rows.len() as f64;
    let checks = vec![
        Check::within("q21_sup_decay_slope", slope, -0.6, -0.1),
        Check::at_least("e_series_converging_fraction", frac, 0.95),
    ];
    let summary = json!({
        "q21_sup_slope": slope,
        "slope_window": [n_lo, b.n],
        "e_series_converging_fraction": frac,
    });
    Ok((checks, summary))
}

fn example2_checks(
    cfg: &ExperimentConfig,
    example: &ExampleParams,
    params: &ParameterSequence,
    rows: &[SweepRow],
) -> Result<(Vec<Check>, serde_json::Value)> {
    let singular = example.singular_angles();
    let n = cfg.budgets.n;
    let coeffs = params.take(n)?;
    let cell = TAU / LOCATE_GRID as f64;
    let mut located = Vec::new();
    for &s in &singular {
        let near: Vec<f64> = (0..LOCATE_GRID)
            .map(|j| cell * j as f64)
            .filter(|&t| angle_distance(t, s) <= cell)
            .collect();
        let hit = near
            .iter()
            .find(|&&t| m_series(t, &coeffs, n, FIT_FROM).verdict == Verdict::Diverging)
            .copied();
        located.push(json!({"singular_angle": s, "diverging_at": hit}));
    }
    let all_located = located.iter().all(|l| !l["diverging_at"].is_null());

    let mut sorted = singular.clone();
    sorted.sort_by(f64::total_cmp);
    let arc_of = |theta: f64| sorted.iter().filter(|&&s| s <= theta).count() % sorted.len().max(1);
    let mut arcs: Vec<serde_json::Value> = Vec::new();
    let (mut monotone, mut product) = (true, 0.0f64);
    let lo = (1usize << 10).min(n / 8).max(1);
    for k in 0..sorted.len() {
        let members: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| arc_of(r.theta) == k && singular.iter().all(|&s| angle_distance(r.theta, s) >= ARC_MARGIN))
            .collect();
        for r in &members {
            let hist: Vec<f64> = r
                .u_star
                .cauchy_history
                .iter()
                .filter(|(m, _)| (lo..=n).contains(m))
                .map(|&(_, d)| d)
                .collect();
            monotone &= hist.windows(2).all(|w| w[1] < w[0]);
            product = product.max(r.u_star.product_identity_residual);
        }
        let start = sorted[(k + sorted.len() - 1) % sorted.len()];
        arcs.push(json!({
            "from": start,
            "to": sorted[k],
            "angles": members.len(),
            "m_verdicts": verdict_counts(members.iter().map(|r| &r.tauberian.m_series.verdict)),
            "u_star_converged": members.iter().filter(|r| r.u_star.converged).count(),
            "max_u_cauchy": max(members.iter().map(|r| r.u_star.cauchy)),
            "max_product_identity_residual": max(members.iter().map(|r| r.u_star.product_identity_residual)),
        }));
    }
    let checks = vec![
        Check::holds("m_series_divergence_localized", all_located),
        Check::holds("u_cauchy_decreasing_on_arcs", monotone).with_detail(format!("checkpoints {lo}..={n}")),
        Check::at_most("product_identity_on_arcs", product, PRODUCT_TOL),
    ];
    Ok((checks, json!({"localization": located, "arcs": arcs})))
}

pub fn boundary(cfg: &ExperimentConfig, command: &str) -> Result<Report> {
    let spec = cfg.params()?;
    let params = spec.build()?;
    let warnings = example_warnings(spec);
    let b = &cfg.budgets;
    let r_grid = cfg.radial_grid();
    let sweep = SweepConfig {
        n: b.n,
        cutoff: b.cutoff,
        tol: b.tol,
        r_grid: r_grid.clone(),
        interchange: b.interchange.then(|| InterchangeBudgets {
            boundary: BoundaryBudget { n: b.n, cutoff: b.cutoff, tol: b.tol },
            interior: interior_budget(cfg),
            interior_tol: b.tol,
            r_grid: r_grid.clone(),
        }),
    };
    let thetas = cfg.thetas();
    let rows = boundary_sweep(&thetas, &params, &sweep)?;

    fs::create_dir_all(&cfg.out)?;
    write_sweep_csv(&rows, csv_writer(&cfg.out, "boundary.csv")?)?;
    let per_theta = cfg.out.join("theta");
    fs::create_dir_all(&per_theta)?;
    for (j, row) in rows.iter().enumerate() {
        fs::write(per_theta.join(format!("theta_{j:05}.json")), serde_json::to_string_pretty(row)? + "\n")?;
    }

    let mut checks = Vec::new();
    if b.interchange {
        let residuals: Vec<f64> = rows.iter().map(|r| r.interchange_residual.unwrap_or(f64::INFINITY)).collect();
        let failures = rows.iter().filter(|r| r.interchange_error.is_some()).count();
        checks.push(
            Check::at_most("interchange_residual", max(residuals), INTERCHANGE_TOL)
                .with_detail(format!("{failures} angles without a limit")),
        );
    }
    let mut summary = json!({
        "angles": rows.len(),
        "m_verdicts": verdict_counts(rows.iter().map(|r| &r.tauberian.m_series.verdict)),
        "e_verdicts": verdict_counts(rows.iter().map(|r| &r.tauberian.e_series.verdict)),
        "e_tilde_verdicts": verdict_counts(rows.iter().map(|r| &r.tauberian.e_tilde_series.verdict)),
        "u_star_converged": rows.iter().filter(|r| r.u_star.converged).count(),
        "v_star_converged": rows.iter().filter(|r| r.v_star.converged).count(),
        "max_product_identity_residual": max(rows.iter().map(|r| r.u_star.product_identity_residual)),
    });
    if let Some(example) = spec.example() {
        let (extra, details) = match example.kind {
            ExampleKind::Example1 { .. } => example1_checks(cfg, &params, &rows)?,
            ExampleKind::Example2 { .. } => example2_checks(cfg, &example, &params, &rows)?,
        };
        checks.extend(extra);
        summary["example"] = details;
    }
    Ok(Report::new(command, cfg, warnings, checks, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    Ex1,
    Ex2,
}

/// Parameters of the canned example runs.
#[derive(Debug, Clone, Default)]
pub struct ExampleOverrides {
    pub epsilon: Option<f64>,
    pub c: Option<f64>,
    pub gamma: Option<f64>,
}

pub fn example_config(which: Which, ex: &ExampleOverrides, overrides: &Overrides) -> ExperimentConfig {
    let params = match which {
        // alpha_1 beta_1 = 1 at start = 1 makes the first step singular
        Which::Ex1 => ParamSpec::Example1 {
            epsilon: ex.epsilon.unwrap_or(0.1),
            c: ex.c.unwrap_or(1.0),
            beta_rule: Default::default(),
            start: 2,
        },
        Which::Ex2 => ParamSpec::Example2 {
            gamma: ex.gamma.unwrap_or(0.75),
            terms: vec![
                ExampleTerm { b: C64::new(1.0, 0.0), lambda: 1.0 },
                ExampleTerm { b: C64::new(0.5, 0.0), lambda: 2.0 },
            ],
            beta_rule: Default::default(),
            start: 1,
        },
    };
    let mut cfg = ExperimentConfig::with_params(params);
    cfg.grids.r = 6;
    cfg.out = match which {
        Which::Ex1 => "out/ex1".into(),
        Which::Ex2 => "out/ex2".into(),
    };
    cfg.apply(overrides);
    cfg
}
