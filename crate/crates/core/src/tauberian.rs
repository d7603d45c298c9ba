//! Boundary behaviour on the unit circle: series diagnostics for the sets
//! M, E and E~, boundary limits of `u_n` and `v_n`, radial limits, the
//! limit-interchange check and the two example families.
//!
//! Every boundary computation for the `v` flavour is reduced to the `u`
//! flavour at `e^{-i theta}` with alpha and beta exchanged.

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benzaid_lutz::{interior_report, Budget, ConvergenceReport, LimitVariant, QTable, QVariant};
use crate::error::{Error, Result};
use crate::numeric::{fmt_f64, ls_slope, C64, ONE, ZERO};
use crate::params::{power_tail, Coefficients, ParameterSequence};

// ---------------------------------------------------------------------------
// Example families

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    /// `beta_n = conj(alpha_n)`.
    #[default]
    Conjugate,
    Zero,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleTerm {
    pub b: C64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExampleKind {
    /// `alpha_n = n^{-3/4 - epsilon} e^{i c n log n}`.
    Example1 { epsilon: f64, c: f64 },
    /// `alpha_n = n^{-gamma} sum_j b_j e^{i lambda_j n}`.
    Example2 { gamma: f64, terms: Vec<ExampleTerm> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleParams {
    pub kind: ExampleKind,
    pub beta_rule: BetaRule,
    /// First index carrying the closed form; earlier parameters are zero.
    pub start: usize,
}

impl ExampleParams {
    pub fn example1(epsilon: f64, c: f64) -> Self {
        ExampleParams {
            kind: ExampleKind::Example1 { epsilon, c },
            beta_rule: BetaRule::Conjugate,
            start: 1,
        }
    }

    pub fn example2(gamma: f64, terms: &[(C64, f64)]) -> Self {
        ExampleParams {
            kind: ExampleKind::Example2 {
                gamma,
                terms: terms.iter().map(|&(b, lambda)| ExampleTerm { b, lambda }).collect(),
            },
            beta_rule: BetaRule::Conjugate,
            start: 1,
        }
    }

    pub fn with_start(mut self, start: usize) -> Self {
        self.start = start;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ExampleKind::Example1 { epsilon, c } => {
                if !(*epsilon > 0.0) || !(*c > 0.0) {
                    return Err(Error::InvalidSpec("example1 needs epsilon > 0 and c > 0".into()));
                }
            }
            ExampleKind::Example2 { gamma, terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidSpec("example2 needs at least one term".into()));
                }
                if !gamma.is_finite() {
                    return Err(Error::InvalidSpec("example2 gamma must be finite".into()));
                }
                for (i, a) in terms.iter().enumerate() {
                    if terms[..i].iter().any(|b| b.lambda == a.lambda) {
                        return Err(Error::InvalidSpec(format!(
                            "example2 frequencies must be distinct (lambda = {} repeated)",
                            a.lambda
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Hypotheses of the examples that fail but do not prevent a run.
    pub fn warnings(&self) -> Vec<String> {
        match &self.kind {
            ExampleKind::Example2 { gamma, .. } if *gamma <= 0.5 => vec![format!(
                "gamma = {gamma} <= 1/2: parameters are not square summable, the convergence hypothesis fails"
            )],
            _ => Vec::new(),
        }
    }

    pub fn alpha(&self, n: usize) -> C64 {
        if n < self.start.max(1) {
            return ZERO;
        }
        let x = n as f64;
        match &self.kind {
            ExampleKind::Example1 { epsilon, c } => {
                C64::from_polar(x.powf(-0.75 - epsilon), c * x * x.ln())
            }
            ExampleKind::Example2 { gamma, terms } => {
                let s: C64 = terms
                    .iter()
                    .map(|t| t.b * C64::from_polar(1.0, (t.lambda * x) % TAU))
                    .sum();
                s * x.powf(-gamma)
            }
        }
    }

    pub fn pair(&self, n: usize) -> (C64, C64) {
        let a = self.alpha(n);
        let b = match self.beta_rule {
            BetaRule::Conjugate => a.conj(),
            BetaRule::Zero => ZERO,
            BetaRule::Equal => a,
        };
        (a, b)
    }

    pub fn tail_l2(&self, cutoff: usize) -> (f64, f64) {
        let a = match &self.kind {
            ExampleKind::Example1 { epsilon, .. } => power_tail(0.75 + epsilon, cutoff),
            ExampleKind::Example2 { gamma, terms } => {
                terms.iter().map(|t| t.b.norm()).sum::<f64>() * power_tail(*gamma, cutoff)
            }
        };
        let b = match self.beta_rule {
            BetaRule::Zero => 0.0,
            _ => a,
        };
        (a, b)
    }

    /// Points `-lambda_j (mod 2 pi)` where Example 2 degenerates.
    pub fn singular_angles(&self) -> Vec<f64> {
        match &self.kind {
            ExampleKind::Example2 { terms, .. } => {
                terms.iter().map(|t| (-t.lambda).rem_euclid(TAU)).collect()
            }
            _ => Vec::new(),
        }
    }
}

pub fn example_params(spec: &ExampleParams, n: usize) -> (C64, C64) {
    spec.pair(n)
}

/// Distance on the circle between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

// ---------------------------------------------------------------------------
// Series diagnostics

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

/// Dead-band for the growth and increment slopes.
pub const DEAD_BAND: f64 = 0.05;

/// Partial sums at the dyadic checkpoints with their fitted slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    pub partial_sums: Vec<f64>,
    /// Cauchy increments between consecutive checkpoints.
    pub increments: Vec<f64>,
    /// Slope of `log S(n)` against `log n` over the fit window.
    pub growth_slope: Option<f64>,
    /// Slope of `log (increment)` against `log n` over the fit window.
    pub increment_slope: Option<f64>,
    pub verdict: Verdict,
}

/// `1, 2, 4, ...` up to `n`.
pub fn checkpoints(n: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |&c| c.checked_mul(2))
        .take_while(|&c| c <= n)
        .collect()
}

fn fit_start(points: &[usize], fit_from: usize) -> usize {
    let first = points.iter().position(|&c| c >= fit_from).unwrap_or(points.len());
    first.min(points.len().saturating_sub(3))
}

/// Verdict rule: growth slope above the dead-band means diverging; a flat
/// growth slope together with shrinking increments (slope below minus the
/// dead-band, or increments that vanish) means converging; anything else is
/// inconclusive.
pub fn diagnose(points: &[usize], partial_sums: Vec<f64>, increments: Vec<f64>, fit_from: usize) -> SeriesDiagnostics {
    let start = fit_start(points, fit_from);
    let tiny = f64::MIN_POSITIVE;
    let (mut gx, mut gy) = (Vec::new(), Vec::new());
    for j in start..points.len() {
        if partial_sums[j] > tiny {
            gx.push((points[j] as f64).ln());
            gy.push(partial_sums[j].ln());
        }
    }
    let (mut ix, mut iy) = (Vec::new(), Vec::new());
    for j in start..increments.len() {
        if increments[j] > tiny {
            ix.push((points[j] as f64).ln());
            iy.push(increments[j].ln());
        }
    }
    let window_increments = &increments[start.min(increments.len())..];
    let vanishing = window_increments.iter().all(|&x| x <= tiny);
    let growth_slope = ls_slope(&gx, &gy);
    let increment_slope = if vanishing { None } else { ls_slope(&ix, &iy) };
    let verdict = if vanishing {
        Verdict::Converging
    } else {
        match (growth_slope, increment_slope) {
            (Some(g), _) if g > DEAD_BAND => Verdict::Diverging,
            (Some(g), Some(s)) if g.abs() <= DEAD_BAND && s <= -DEAD_BAND => Verdict::Converging,
            _ => Verdict::Inconclusive,
        }
    };
    SeriesDiagnostics {
        partial_sums,
        increments,
        growth_slope,
        increment_slope,
        verdict,
    }
}

/// The M-series surrogate: moduli of the partial sums of
/// `sum beta_k z^{-k}` and `sum alpha_k z^k` at `z = e^{i theta}`.
pub fn m_series(theta: f64, coeffs: &Coefficients, n: usize, fit_from: usize) -> SeriesDiagnostics {
    let points = checkpoints(n);
    let (mut a, mut b) = (ZERO, ZERO);
    let mut at_points = Vec::with_capacity(points.len());
    let mut next = 0;
    for k in 1..=n {
        let phase = C64::from_polar(1.0, (k as f64 * theta) % TAU);
        a += coeffs.beta(k) * phase.conj();
        b += coeffs.alpha(k) * phase;
        if next < points.len() && points[next] == k {
            at_points.push((a, b));
            next += 1;
        }
    }
    let partial = at_points.iter().map(|(a, b)| a.norm() + b.norm()).collect();
    let increments = at_points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).norm() + (w[1].1 - w[0].1).norm())
        .collect();
    diagnose(&points, partial, increments, fit_from)
}

/// `sum_{k<n} |c_{k+1} q21(k)|` at the checkpoints, with `c` the coefficient
/// multiplying `q21` (beta for E, alpha for E~).
fn absolute_series(points: &[usize], table: &QTable, c: &[C64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut s = 0.0;
    let mut next = 0;
    let last = *points.last().unwrap_or(&0);
    for k in 0..last {
        s += (c.get(k).copied().unwrap_or(ZERO) * table.q21(k)).norm();
        if points[next] == k + 1 {
            out.push(s);
            next += 1;
        }
    }
    out
}

fn absolute_diagnostics(points: &[usize], partial: Vec<f64>, fit_from: usize) -> SeriesDiagnostics {
    let increments = partial.windows(2).map(|w| w[1] - w[0]).collect();
    diagnose(points, partial, increments, fit_from)
}

fn sup_abs(v: impl Iterator<Item = C64>) -> f64 {
    v.map(|x| x.norm()).fold(0.0, f64::max)
}

/// Series data at one point of the circle (or at `r e^{i theta}`).
#[derive(Debug, Clone, PartialEq)]
struct CircleSums {
    e_partial: Vec<f64>,
    e_tilde_partial: Vec<f64>,
    q12_sup: f64,
    q12_tilde_sup: f64,
}

/// E-type sums and q12 suprema: standard quantities at `z_std`, tilde
/// quantities at `z_tilde`.
fn circle_sums(points: &[usize], coeffs: &Coefficients, z_std: C64, z_tilde: C64, n: usize, cutoff: usize) -> CircleSums {
    let std = QTable::new(z_std, coeffs, cutoff, QVariant::Standard);
    let tilde = QTable::new(z_tilde, coeffs, cutoff, QVariant::Tilde);
    CircleSums {
        e_partial: absolute_series(points, &std, coeffs.betas()),
        e_tilde_partial: absolute_series(points, &tilde, coeffs.alphas()),
        q12_sup: sup_abs((0..=n).map(|k| std.q12(k))),
        q12_tilde_sup: sup_abs((0..=n).map(|k| tilde.q12(k))),
    }
}

/// `r_j = 1 - 2^{-j}` for `j = 1..count-1`, followed by `r = 1`.
pub fn default_r_grid(count: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (1..count).map(|j| 1.0 - 0.5f64.powi(j as i32)).collect();
    g.push(1.0);
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauberianReport {
    pub theta: f64,
    pub n: usize,
    pub cutoff: usize,
    pub checkpoints: Vec<usize>,
    pub m_series: SeriesDiagnostics,
    pub e_series: SeriesDiagnostics,
    pub e_tilde_series: SeriesDiagnostics,
    /// `sup_{r, n <= N} |q12(r e^{i theta}, n)|` over the r-grid.
    pub n_theta: f64,
    /// Same for `q~12` at `e^{i theta} / r`.
    pub n_tilde_theta: f64,
    /// `sup_r` of the E-series partial sum at `N` over the r-grid.
    pub e_theta: f64,
    pub e_tilde_theta: f64,
    /// `sup_{n <= N} |q12(e^{i theta}, n)|`.
    pub q12_sup_circle: f64,
    /// Radii in `(0, 1]`; tilde quantities use their reciprocals.
    pub r_grid: Vec<f64>,
}

/// Default start of the slope-fit window.
pub const FIT_FROM: usize = 64;

pub fn tauberian_report(
    theta: f64,
    params: &ParameterSequence,
    n: usize,
    cutoff: usize,
    r_grid: &[f64],
) -> Result<TauberianReport> {
    let coeffs = params.take(cutoff)?;
    tauberian_report_with(theta, &coeffs, n, cutoff, r_grid, FIT_FROM)
}

pub fn tauberian_report_with(
    theta: f64,
    coeffs: &Coefficients,
    n: usize,
    cutoff: usize,
    r_grid: &[f64],
    fit_from: usize,
) -> Result<TauberianReport> {
    if n + 2 > cutoff {
        return Err(Error::CutoffTooSmall { cutoff, required: n + 2 });
    }
    if let Some(r) = r_grid.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidSpec(format!("r-grid value {r} outside (0, 1]")));
    }
    let points = checkpoints(n);
    let z = C64::from_polar(1.0, theta);
    let circle = circle_sums(&points, coeffs, z, z, n, cutoff);
    let mut n_theta = circle.q12_sup;
    let mut n_tilde = circle.q12_tilde_sup;
    let mut e_theta = circle.e_partial.last().copied().unwrap_or(0.0);
    let mut e_tilde = circle.e_tilde_partial.last().copied().unwrap_or(0.0);
    let off_circle: Vec<CircleSums> = r_grid
        .iter()
        .filter(|&&r| r < 1.0)
        .map(|&r| circle_sums(&points, coeffs, z * r, z / r, n, cutoff))
        .collect();
    for s in &off_circle {
        n_theta = n_theta.max(s.q12_sup);
        n_tilde = n_tilde.max(s.q12_tilde_sup);
        e_theta = e_theta.max(s.e_partial.last().copied().unwrap_or(0.0));
        e_tilde = e_tilde.max(s.e_tilde_partial.last().copied().unwrap_or(0.0));
    }
    Ok(TauberianReport {
        theta,
        n,
        cutoff,
        m_series: m_series(theta, coeffs, n, fit_from),
        e_series: absolute_diagnostics(&points, circle.e_partial, fit_from),
        e_tilde_series: absolute_diagnostics(&points, circle.e_tilde_partial, fit_from),
        checkpoints: points,
        n_theta,
        n_tilde_theta: n_tilde,
        e_theta,
        e_tilde_theta: e_tilde,
        q12_sup_circle: circle.q12_sup,
        r_grid: r_grid.to_vec(),
    })
}

/// `sup_theta |q21(e^{i theta}, n)|` for `n_lo <= n <= n_hi` over a uniform
/// angle grid, and the least-squares slope of its logarithm against `log n`.
pub fn q21_sup_profile(
    params: &ParameterSequence,
    angles: usize,
    n_lo: usize,
    n_hi: usize,
    cutoff: usize,
) -> Result<(Vec<f64>, Option<f64>)> {
    if n_hi > cutoff || n_lo > n_hi || n_lo == 0 {
        return Err(Error::CutoffTooSmall { cutoff, required: n_hi });
    }
    let coeffs = params.take(cutoff)?;
    let sups = (0..angles)
        .into_par_iter()
        .map(|j| {
            let z = C64::from_polar(1.0, TAU * j as f64 / angles as f64);
            let t = QTable::new(z, &coeffs, cutoff, QVariant::Standard);
            (n_lo..=n_hi).map(|n| t.q21(n).norm()).collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; n_hi - n_lo + 1],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        );
    let x: Vec<f64> = (n_lo..=n_hi).map(|n| (n as f64).ln()).collect();
    let y: Vec<f64> = sups.iter().map(|s| s.max(f64::MIN_POSITIVE).ln()).collect();
    Ok((sups, ls_slope(&x, &y)))
}

// ---------------------------------------------------------------------------
// Boundary limits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFlavor {
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBudget {
    /// The limit is read at `2N` and compared with `N`.
    pub n: usize,
    pub cutoff: usize,
    pub tol: f64,
}

impl BoundaryBudget {
    /// Cutoff defaults to `16 N`.
    pub fn new(n: usize, tol: f64) -> Self {
        BoundaryBudget { n, cutoff: 16 * n, tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheckpoint {
    pub n: usize,
    /// `u_n = kappa_n^2 u_hat_n` from the direct recurrence.
    pub u_n: C64,
    /// `kappa_n^2 y2(n)`.
    pub kappa_sq_y2: C64,
    pub y1: C64,
    pub q21: C64,
    /// `|u_hat_n - ((1 + rho) y2 + q21 y1)|`, relative.
    pub reconstruction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub theta: f64,
    pub flavor: BoundaryFlavor,
    pub n: usize,
    pub cutoff: usize,
    pub tol: f64,
    /// `u_{2N}` (or `v_{2N}`).
    pub value: C64,
    /// `|u_{2N} - u_N|`.
    pub cauchy: f64,
    /// `(m, |u_{2m} - u_m|)` for dyadic `m <= N`.
    pub cauchy_history: Vec<(usize, f64)>,
    /// `prod_{j<=K} (1 - alpha_j beta_j)^{-1}`.
    pub product: C64,
    pub y2_limit: C64,
    /// `|u_{2N} - product * y2(2N)|`.
    pub product_identity_residual: f64,
    pub y1_sup: f64,
    pub q12_sup: f64,
    /// Steps where some `|v_ij|` exceeds its circle bound with `C` the running
    /// sup of `|q12|`.
    pub vcircle_violations: usize,
    /// Largest ratio `|v_ij| / bound`.
    pub vcircle_max_ratio: f64,
    /// Violations of the bound for `v11` as printed, with `q21(n)` in the
    /// factor `1 + C |q21|`.
    pub vcircle_literal_v11_violations: usize,
    pub telescoping_violations: usize,
    pub checkpoints: Vec<BoundaryCheckpoint>,
    pub m_verdict: Verdict,
    /// E for the u flavour, E~ for the v flavour.
    pub e_verdict: Verdict,
    pub reliable: bool,
    pub converged: bool,
}

const BOUND_SLACK: f64 = 1e-12;

fn exceeds(value: f64, bound: f64) -> bool {
    value > bound * (1.0 + BOUND_SLACK) + 1e-300
}

/// Runs the circle iteration at `e^{i theta}`; never fails on slow
/// convergence, see `converged`.
pub fn boundary_report(
    theta: f64,
    params: &ParameterSequence,
    budget: BoundaryBudget,
    flavor: BoundaryFlavor,
) -> Result<BoundaryReport> {
    let steps = 2 * budget.n;
    if steps + 2 > budget.cutoff {
        return Err(Error::CutoffTooSmall { cutoff: budget.cutoff, required: steps + 2 });
    }
    let (angle, seq) = match flavor {
        BoundaryFlavor::U => (theta, params.clone()),
        BoundaryFlavor::V => (-theta, params.swapped()),
    };
    let coeffs = seq.take(budget.cutoff)?;
    if let Some(n) = coeffs.degenerate_index() {
        return Err(Error::DegenerateStep(n - 1));
    }
    let z = C64::from_polar(1.0, angle);
    let q = QTable::new(z, &coeffs, budget.cutoff, QVariant::Standard);

    let mut y = [ONE, ONE - q.q21(0)];
    let mut phi = [ONE, ONE];
    let mut kappa_sq = ONE;
    let mut c_sup = 0.0f64;
    let mut y1_sup = 0.0f64;
    let (mut vio, mut lit_vio, mut tele_vio) = (0usize, 0usize, 0usize);
    let mut max_ratio = 0.0f64;
    let mut history: Vec<(usize, C64)> = Vec::new();
    let mut checkpoints = Vec::new();
    let mut u_values = Vec::new();
    let mut next_cp = 1usize;
    for n in 0..steps {
        let (a, b) = (coeffs.alpha(n + 1), coeffs.beta(n + 1));
        c_sup = c_sup.max(q.q12(n).norm()).max(q.q12(n + 1).norm());
        let (q0, q1) = (q.q21(n), q.q21(n + 1));
        let (r0, r1) = (q.rho(n), q.rho(n + 1));
        let v = [
            [b * q0 * (ONE + r1), b * (r1 + r0 + r0 * r1)],
            [-b * q0 * q1, -b * q1 * (ONE + r0)],
        ];
        let (bn, q0n, q1n) = (b.norm(), q0.norm(), q1.norm());
        let bounds = [
            (1.0 + c_sup * q1n) * bn * q0n,
            c_sup * bn * (q0n + q1n + c_sup * q0n * q1n),
            bn * q0n * q1n,
            (1.0 + c_sup * q0n) * bn * q1n,
        ];
        let values = [v[0][0].norm(), v[0][1].norm(), v[1][0].norm(), v[1][1].norm()];
        if values.iter().zip(&bounds).any(|(v, b)| exceeds(*v, *b)) {
            vio += 1;
        }
        for (v, b) in values.iter().zip(&bounds) {
            if *b > 0.0 {
                max_ratio = max_ratio.max(v / b);
            }
        }
        if exceeds(values[0], (1.0 + c_sup * q0n) * bn * q0n) {
            lit_vio += 1;
        }
        if exceeds((z * b * q1).norm(), bn * q0n + (b * a).norm()) {
            tele_vio += 1;
        }
        y = [(z + v[0][0]) * y[0] + v[0][1] * y[1], v[1][0] * y[0] + (ONE + v[1][1]) * y[1]];
        phi = [z * phi[0] + b * phi[1], a * z * phi[0] + phi[1]];
        kappa_sq /= ONE - a * b;
        if !(y[0].is_finite() && y[1].is_finite() && phi[0].is_finite() && phi[1].is_finite()) {
            return Err(Error::NonFiniteValue(n + 1));
        }
        y1_sup = y1_sup.max(y[0].norm());
        let m = n + 1;
        if m == next_cp {
            let u_n = kappa_sq * phi[1];
            let rec = (ONE + q.rho(m)) * y[1] + q.q21(m) * y[0];
            checkpoints.push(BoundaryCheckpoint {
                n: m,
                u_n,
                kappa_sq_y2: kappa_sq * y[1],
                y1: y[0],
                q21: q.q21(m),
                reconstruction: (phi[1] - rec).norm() / (1.0 + phi[1].norm()),
            });
            history.push((m, u_n));
            next_cp *= 2;
        }
        if m == budget.n || m == steps {
            u_values.push(kappa_sq * phi[1]);
        }
    }
    let mut product = kappa_sq;
    for k in steps + 1..=budget.cutoff {
        product /= ONE - coeffs.alpha(k) * coeffs.beta(k);
    }
    let value = *u_values.last().unwrap_or(&ONE);
    let cauchy = if u_values.len() == 2 { (u_values[1] - u_values[0]).norm() } else { 0.0 };
    let cauchy_history = history
        .windows(2)
        .map(|w| (w[0].0, (w[1].1 - w[0].1).norm()))
        .collect();

    let points = checkpoints_for(budget.n);
    let m = m_series(angle, &coeffs, budget.n, FIT_FROM).verdict;
    let e = absolute_diagnostics(&points, absolute_series(&points, &q, coeffs.betas()), FIT_FROM).verdict;

    Ok(BoundaryReport {
        theta,
        flavor,
        n: budget.n,
        cutoff: budget.cutoff,
        tol: budget.tol,
        value,
        cauchy,
        cauchy_history,
        product,
        y2_limit: y[1],
        product_identity_residual: (value - product * y[1]).norm(),
        y1_sup,
        q12_sup: c_sup,
        vcircle_violations: vio,
        vcircle_max_ratio: max_ratio,
        vcircle_literal_v11_violations: lit_vio,
        telescoping_violations: tele_vio,
        checkpoints,
        m_verdict: m,
        e_verdict: e,
        reliable: m == Verdict::Converging && e == Verdict::Converging,
        converged: cauchy < budget.tol,
    })
}

fn checkpoints_for(n: usize) -> Vec<usize> {
    checkpoints(n)
}

/// `u*(e^{i theta}) = lim u_n` (or `v*`), failing with `NoConvergence` when
/// `|u_{2N} - u_N|` is not below the tolerance.
pub fn boundary_limit_un(
    theta: f64,
    params: &ParameterSequence,
    budget: BoundaryBudget,
    flavor: BoundaryFlavor,
) -> Result<(C64, BoundaryReport)> {
    let report = boundary_report(theta, params, budget, flavor)?;
    if !report.converged {
        return Err(Error::NoConvergence {
            budget: 2 * budget.n,
            cauchy: report.cauchy,
            tail_bound: f64::NAN,
        });
    }
    Ok((report.value, report))
}

// ---------------------------------------------------------------------------
// Radial limits and the interchange of limits

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPoint {
    pub r: f64,
    /// `lim_n u_n(r e^{i theta})`, i.e. the product times `u`.
    pub value: C64,
    pub converged: bool,
    pub report: ConvergenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialReport {
    pub theta: f64,
    pub flavor: BoundaryFlavor,
    pub product: C64,
    pub points: Vec<RadialPoint>,
    /// Value at the radius closest to the circle.
    pub nearest: C64,
    /// Polynomial extrapolation to `r = 1` in `h = 1 - r` through the last
    /// [`EXTRAPOLATION_POINTS`] radii.
    pub extrapolated: C64,
    /// `max |value(r_j) - extrapolated|` over the second half of the grid.
    pub tail_variation: f64,
    pub converged: bool,
}

pub const EXTRAPOLATION_POINTS: usize = 3;

/// Neville evaluation at `h = 0` of the interpolant through `(h_i, f_i)`.
fn extrapolate_to_zero(h: &[f64], f: &[C64]) -> C64 {
    let mut p = f.to_vec();
    for level in 1..p.len() {
        for i in 0..p.len() - level {
            let (hi, hj) = (h[i], h[i + level]);
            p[i] = (p[i + 1] * hi - p[i] * hj) / (hi - hj);
        }
    }
    p[0]
}

/// Infinite-product estimate `prod_{j<=K} (1 - alpha_j beta_j)^{-1}`.
pub fn product_estimate(params: &ParameterSequence, cutoff: usize) -> Result<C64> {
    let mut p = ONE;
    for k in 1..=cutoff {
        let (a, b) = params.pair(k)?;
        p /= ONE - a * b;
    }
    Ok(p)
}

/// Interior limits along `r e^{i theta}` (`u`, radii in `(0,1)` increasing)
/// or along `e^{i theta} / r` (`v`).
pub fn radial_report(
    theta: f64,
    params: &ParameterSequence,
    r_grid: &[f64],
    tol: f64,
    budget: Budget,
    flavor: BoundaryFlavor,
    product_cutoff: usize,
) -> Result<RadialReport> {
    if r_grid.is_empty() || r_grid.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidSpec("radial grid must be nonempty and inside (0, 1)".into()));
    }
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSpec("radial grid must be increasing".into()));
    }
    let product = product_estimate(params, product_cutoff)?;
    let dir = C64::from_polar(1.0, theta);
    let points = r_grid
        .par_iter()
        .map(|&r| {
            let report = match flavor {
                BoundaryFlavor::U => interior_report(dir * r, params, tol, LimitVariant::U, budget)?,
                BoundaryFlavor::V => interior_report(dir / r, params, tol, LimitVariant::V, budget)?,
            };
            Ok(RadialPoint {
                r,
                value: product * report.u,
                converged: report.converged,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nearest = points.last().unwrap().value;
    let used = &points[points.len().saturating_sub(EXTRAPOLATION_POINTS)..];
    let h: Vec<f64> = used.iter().map(|p| 1.0 - p.r).collect();
    let f: Vec<C64> = used.iter().map(|p| p.value).collect();
    let extrapolated = extrapolate_to_zero(&h, &f);
    let half = points.len() / 2;
    let tail_variation = points[half..]
        .iter()
        .map(|p| (p.value - nearest).norm())
        .fold(0.0, f64::max);
    let converged = points.iter().all(|p| p.converged);
    Ok(RadialReport {
        theta,
        flavor,
        product,
        points,
        nearest,
        extrapolated,
        tail_variation,
        converged,
    })
}

pub fn radial_limit(
    theta: f64,
    params: &ParameterSequence,
    r_grid: &[f64],
    tol: f64,
    budget: Budget,
    flavor: BoundaryFlavor,
    product_cutoff: usize,
) -> Result<(C64, RadialReport)> {
    let report = radial_report(theta, params, r_grid, tol, budget, flavor, product_cutoff)?;
    if let Some(p) = report.points.iter().find(|p| !p.converged) {
        return Err(Error::NoConvergence {
            budget: budget.n_max,
            cauchy: p.report.cauchy,
            tail_bound: p.report.tail_bound,
        });
    }
    Ok((report.extrapolated, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterchangeBudgets {
    pub boundary: BoundaryBudget,
    pub interior: Budget,
    pub interior_tol: f64,
    pub r_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterchangeReport {
    pub theta: f64,
    pub flavor: BoundaryFlavor,
    /// `lim_n lim_r`: the boundary limit on the circle.
    pub boundary_value: C64,
    /// `lim_r lim_n`: the radial limit of interior limits.
    pub radial_value: C64,
    pub residual: f64,
    /// Sum of the two pipeline tolerances.
    pub tolerance: f64,
}

/// `|lim_r lim_n u_n(r e^{i theta}) - lim_n lim_r u_n(r e^{i theta})|`.
pub fn interchange_check(
    theta: f64,
    params: &ParameterSequence,
    budgets: &InterchangeBudgets,
    flavor: BoundaryFlavor,
) -> Result<InterchangeReport> {
    let (boundary_value, _) = boundary_limit_un(theta, params, budgets.boundary, flavor)?;
    let (radial_value, _) = radial_limit(
        theta,
        params,
        &budgets.r_grid,
        budgets.interior_tol,
        budgets.interior,
        flavor,
        budgets.boundary.cutoff,
    )?;
    Ok(InterchangeReport {
        theta,
        flavor,
        boundary_value,
        radial_value,
        residual: (boundary_value - radial_value).norm(),
        tolerance: budgets.boundary.tol + budgets.interior_tol,
    })
}

// ---------------------------------------------------------------------------
// Positive measures

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpucPoint {
    pub theta: f64,
    /// Partial sums of `sum_k |conj(alpha_{k+1}) sum_{j>k} alpha_j z^{j-k}|`.
    pub series: SeriesDiagnostics,
    /// `max |E - E~|` over the checkpoints, relative to `max(1, E)`.
    pub e_symmetry_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpucReport {
    pub n: usize,
    pub cutoff: usize,
    /// `|alpha_k| < 1` for all `k <= K`.
    pub inside_disk: bool,
    pub points: Vec<OpucPoint>,
    pub max_symmetry_residual: f64,
    pub symmetric: bool,
}

pub const OPUC_SYMMETRY_TOL: f64 = 1e-12;

pub fn opuc_condition(thetas: &[f64], params: &ParameterSequence, n: usize, cutoff: usize) -> Result<OpucReport> {
    if n + 2 > cutoff {
        return Err(Error::CutoffTooSmall { cutoff, required: n + 2 });
    }
    let coeffs = params.take(cutoff)?;
    for k in 1..=cutoff {
        let (a, b) = (coeffs.alpha(k), coeffs.beta(k));
        if (b - a.conj()).norm() > 1e-10 * a.norm().max(1.0) {
            return Err(Error::NotOpuc(k));
        }
    }
    let inside_disk = (1..=cutoff).all(|k| coeffs.alpha(k).norm() < 1.0);
    let points_n = checkpoints(n);
    let points: Vec<OpucPoint> = thetas
        .par_iter()
        .map(|&theta| {
            let z = C64::from_polar(1.0, theta);
            let s = circle_sums(&points_n, &coeffs, z, z, n, cutoff);
            let residual = s
                .e_partial
                .iter()
                .zip(&s.e_tilde_partial)
                .map(|(e, t)| (e - t).abs() / e.max(1.0))
                .fold(0.0, f64::max);
            OpucPoint {
                theta,
                series: absolute_diagnostics(&points_n, s.e_partial, FIT_FROM),
                e_symmetry_residual: residual,
            }
        })
        .collect();
    let max_symmetry_residual = points.iter().map(|p| p.e_symmetry_residual).fold(0.0, f64::max);
    Ok(OpucReport {
        n,
        cutoff,
        inside_disk,
        points,
        max_symmetry_residual,
        symmetric: max_symmetry_residual <= OPUC_SYMMETRY_TOL,
    })
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub cutoff: usize,
    pub tol: f64,
    pub r_grid: Vec<f64>,
    /// Run the radial pipeline and report interchange residuals.
    pub interchange: Option<InterchangeBudgets>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub tauberian: TauberianReport,
    pub u_star: BoundaryReport,
    pub v_star: BoundaryReport,
    pub interchange_residual: Option<f64>,
    pub interchange_error: Option<String>,
}

pub fn boundary_sweep(thetas: &[f64], params: &ParameterSequence, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let coeffs = params.take(config.cutoff)?;
    let budget = BoundaryBudget { n: config.n, cutoff: config.cutoff, tol: config.tol };
    thetas
        .par_iter()
        .map(|&theta| {
            let tauberian = tauberian_report_with(theta, &coeffs, config.n, config.cutoff, &config.r_grid, FIT_FROM)?;
            let u_star = boundary_report(theta, params, budget, BoundaryFlavor::U)?;
            let v_star = boundary_report(theta, params, budget, BoundaryFlavor::V)?;
            let (interchange_residual, interchange_error) = match &config.interchange {
                None => (None, None),
                Some(b) => match interchange_check(theta, params, b, BoundaryFlavor::U) {
                    Ok(r) => (Some(r.residual), None),
                    Err(e) => (None, Some(e.to_string())),
                },
            };
            Ok(SweepRow {
                theta,
                tauberian,
                u_star,
                v_star,
                interchange_residual,
                interchange_error,
            })
        })
        .collect()
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Converging => "converging",
        Verdict::Diverging => "diverging",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "theta",
        "m_verdict",
        "e_verdict",
        "e_tilde_verdict",
        "n_theta",
        "e_partial",
        "u_star_re",
        "u_star_im",
        "u_cauchy",
        "v_star_re",
        "v_star_im",
        "v_cauchy",
        "product_identity_residual",
        "interchange_residual",
    ])?;
    for r in rows {
        let t = &r.tauberian;
        w.write_record([
            r.theta.to_string(),
            verdict_str(t.m_series.verdict).to_string(),
            verdict_str(t.e_series.verdict).to_string(),
            verdict_str(t.e_tilde_series.verdict).to_string(),
            fmt_f64(t.n_theta),
            fmt_f64(t.e_series.partial_sums.last().copied().unwrap_or(0.0)),
            fmt_f64(r.u_star.value.re),
            fmt_f64(r.u_star.value.im),
            fmt_f64(r.u_star.cauchy),
            fmt_f64(r.v_star.value.re),
            fmt_f64(r.v_star.value.im),
            fmt_f64(r.v_star.cauchy),
            fmt_f64(r.u_star.product_identity_residual),
            r.interchange_residual.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
