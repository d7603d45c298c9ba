//! Two-step nilpotent diagonalization of the monic Baxter system and the
//! interior limit functions.
//!
//! All tail sums use one absolute cutoff `K`: `alpha_k` is treated as zero for
//! `k > K`, so `q21(z, K) = 0` and the commutation identities hold exactly
//! for `n < K`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fmt_f64, l1, mat_vec, C64, ONE, ZERO};
use crate::params::{Coefficients, ParameterSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QVariant {
    Standard,
    /// `q~12(z,n) = sum_{k<=n} alpha_k z^{k-n}`, `q~21(z,n) = -sum_{k>n} beta_k z^{n-k}`.
    Tilde,
}

/// `1/z` computed as `conj(z) / |z|^2`, which is exactly `conj(z)` on the
/// circle whenever `|z|^2` rounds to one.
pub(crate) fn reciprocal(z: C64) -> C64 {
    z.conj() / z.norm_sqr()
}

#[inline]
fn at(v: &[C64], k: usize) -> C64 {
    if k >= 1 && k <= v.len() {
        v[k - 1]
    } else {
        ZERO
    }
}

/// `q12(n)` for `0 <= n <= K + 1` and `q21(n)` for `0 <= n <= K` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    /// The point the table was requested at.
    pub z: C64,
    pub variant: QVariant,
    pub cutoff: usize,
    /// Point used in the recursions (`z`, or `1/z` for the tilde variant).
    w: C64,
    q12: Vec<C64>,
    q21: Vec<C64>,
}

impl QTable {
    /// Standard recursions at `w` with coefficient slices `a` (in the role of
    /// alpha) and `b` (beta), 1-based, zero beyond their length.
    fn build(z: C64, w: C64, variant: QVariant, a: &[C64], b: &[C64], cutoff: usize) -> Self {
        // one entry past the cutoff so the step n = K can be inspected
        let mut q12 = vec![ZERO; cutoff + 2];
        for n in 0..=cutoff {
            q12[n + 1] = w * q12[n] + at(b, n + 1);
        }
        let mut q21 = vec![ZERO; cutoff + 1];
        for n in (0..cutoff).rev() {
            q21[n] = w * (q21[n + 1] - at(a, n + 1));
        }
        QTable { z, variant, cutoff, w, q12, q21 }
    }

    pub fn new(z: C64, coeffs: &Coefficients, cutoff: usize, variant: QVariant) -> Self {
        match variant {
            QVariant::Standard => {
                Self::build(z, z, variant, coeffs.alphas(), coeffs.betas(), cutoff)
            }
            QVariant::Tilde => Self::build(
                z,
                reciprocal(z),
                variant,
                coeffs.betas(),
                coeffs.alphas(),
                cutoff,
            ),
        }
    }

    /// Point used by the recursions.
    pub fn recursion_point(&self) -> C64 {
        self.w
    }

    /// Available for `n <= K + 1`.
    pub fn q12(&self, n: usize) -> C64 {
        self.q12[n]
    }

    /// Zero beyond the cutoff, consistent with the recursions.
    pub fn q21(&self, n: usize) -> C64 {
        if n <= self.cutoff {
            self.q21[n]
        } else {
            ZERO
        }
    }

    pub fn rho(&self, n: usize) -> C64 {
        self.q12(n) * self.q21(n)
    }

    /// `q21(n) / w`, finite also at `w = 0`.
    fn q21_over_w(&self, n: usize, a: &[C64]) -> C64 {
        if n < self.cutoff {
            self.q21[n + 1] - at(a, n + 1)
        } else {
            ZERO
        }
    }
}

/// Snapshot of the q-quantities at one index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QState {
    pub z: C64,
    pub n: usize,
    pub q12: C64,
    pub q21: C64,
    pub rho: C64,
    pub cutoff: usize,
    pub variant: QVariant,
}

impl QTable {
    pub fn state(&self, n: usize) -> QState {
        QState {
            z: self.z,
            n,
            q12: self.q12(n),
            q21: self.q21(n),
            rho: self.rho(n),
            cutoff: self.cutoff,
            variant: self.variant,
        }
    }
}

pub fn q_state(
    z: C64,
    n: usize,
    params: &ParameterSequence,
    cutoff: usize,
    variant: QVariant,
) -> Result<QState> {
    if cutoff < n {
        return Err(Error::CutoffTooSmall { cutoff, required: n });
    }
    let coeffs = params.take(cutoff)?;
    Ok(QTable::new(z, &coeffs, cutoff, variant).state(n))
}

/// Normalized residual of `U_j(n) + Lambda Q_j(n) - Q_j(n+1) Lambda`,
/// summed over both nilpotent factors; `Q_1` carries `q12` and pairs with
/// the upper entry `beta_{n+1}`, `Q_2` carries `q21` and pairs with
/// `alpha_{n+1} z`.
pub fn commutation_residual(
    z: C64,
    n: usize,
    params: &ParameterSequence,
    cutoff: usize,
) -> Result<f64> {
    if n > cutoff {
        return Err(Error::CutoffTooSmall { cutoff, required: n + 1 });
    }
    let coeffs = params.take(cutoff + 1)?;
    let table = QTable::new(z, &coeffs, cutoff, QVariant::Standard);
    let residual = table_commutation_residual(&table, &coeffs, n);
    if n == cutoff {
        return Err(Error::OutOfValidity { n, cutoff, residual });
    }
    Ok(residual)
}

fn table_commutation_residual(t: &QTable, coeffs: &Coefficients, n: usize) -> f64 {
    let z = t.z;
    let (a, b) = (coeffs.alpha(n + 1), coeffs.beta(n + 1));
    let upper = [b, z * t.q12(n), -t.q12(n + 1)];
    let lower = [a * z, t.q21(n), -t.q21(n + 1) * z];
    let raw = upper.iter().sum::<C64>().norm() + lower.iter().sum::<C64>().norm();
    let scale: f64 = upper.iter().chain(lower.iter()).map(|x| x.norm()).sum();
    if scale == 0.0 {
        0.0
    } else {
        raw / scale
    }
}

/// `V(z, n)` together with both sides of the telescoping bound
/// `|z beta_{n+1} q21(n+1)| <= |beta_{n+1} q21(n)| + |beta_{n+1} alpha_{n+1}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VMatrix {
    pub entries: [[C64; 2]; 2],
    pub telescoping_lhs: f64,
    pub telescoping_rhs: f64,
}

fn v_entries(t: &QTable, beta: C64, n: usize) -> [[C64; 2]; 2] {
    let (q0, q1) = (t.q21(n), t.q21(n + 1));
    let (r0, r1) = (t.rho(n), t.rho(n + 1));
    [
        [beta * q0 * (ONE + r1), beta * (r1 + r0 + r0 * r1)],
        [-beta * q0 * q1, -beta * q1 * (ONE + r0)],
    ]
}

fn v_of_table(t: &QTable, coeffs: &Coefficients, n: usize) -> VMatrix {
    let beta = coeffs.beta(n + 1);
    VMatrix {
        entries: v_entries(t, beta, n),
        telescoping_lhs: (t.z * beta * t.q21(n + 1)).norm(),
        telescoping_rhs: (beta * t.q21(n)).norm() + (beta * coeffs.alpha(n + 1)).norm(),
    }
}

pub fn v_matrix(z: C64, n: usize, params: &ParameterSequence, cutoff: usize) -> Result<VMatrix> {
    if n + 2 > cutoff {
        return Err(Error::CutoffTooSmall { cutoff, required: n + 2 });
    }
    let coeffs = params.take(cutoff)?;
    let t = QTable::new(z, &coeffs, cutoff, QVariant::Standard);
    Ok(v_of_table(&t, &coeffs, n))
}

/// `||W(n)||` for `W = Lambda^{-1} V` in the entrywise-sum norm, computed
/// without dividing by `z`.
fn w_norm(t: &QTable, coeffs: &Coefficients, n: usize) -> f64 {
    let a = coeffs.alphas();
    let beta = coeffs.beta(n + 1);
    if beta == ZERO {
        return 0.0;
    }
    let v = v_entries(t, beta, n);
    let r1 = t.rho(n + 1);
    let r0w = t.q12(n) * t.q21_over_w(n, a);
    let r1w = t.q12(n + 1) * t.q21_over_w(n + 1, a);
    let w11 = beta * t.q21_over_w(n, a) * (ONE + r1);
    let w12 = beta * (r1w + r0w + r0w * r1);
    w11.norm() + w12.norm() + v[1][0].norm() + v[1][1].norm()
}

/// Bound on `sum_{k>=K} ||W(z,k)||` for the untruncated system, from the l2
/// tails of the parameters beyond `K` (Young and Cauchy-Schwarz).
pub fn tail_remainder(modulus: f64, alpha_tail: f64, beta_tail: f64, beta_l2: f64) -> f64 {
    if alpha_tail == 0.0 || beta_tail == 0.0 {
        return 0.0;
    }
    if modulus >= 1.0 {
        return f64::INFINITY;
    }
    let root = (1.0 - modulus * modulus).sqrt();
    let bq = beta_l2 / root;
    let t = alpha_tail * modulus / root;
    let s = beta_tail * alpha_tail / (1.0 - modulus);
    s * (2.0 * (1.0 + bq * t) + bq * (2.0 + bq * t) + t)
}

/// Solution of `Y(n+1) = (Lambda + V(n)) Y(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct YTrajectory {
    pub z: C64,
    pub cutoff: usize,
    /// `Y(n)` for `n = 0..=N`.
    pub y: Vec<[C64; 2]>,
    /// `||W(k)||` for `k = 0..K` (zero beyond on the truncated system).
    pub w_norm: Vec<f64>,
    w_prefix: Vec<f64>,
    /// Bound on the untruncated tail `sum_{k>=K} ||W(k)||`.
    pub remainder: f64,
    /// `||Y(0)|| exp(sum ||W|| + remainder)`.
    pub c1: f64,
    /// `||alpha_{>K}||_2`, used to bound the truncation error of `q21`.
    pub alpha_tail: f64,
    pub q: QTable,
}

impl YTrajectory {
    pub fn steps(&self) -> usize {
        self.y.len() - 1
    }

    /// `sum_{k=m}^{n} ||W(k)||` over the computed range.
    pub fn w_sum(&self, m: usize, n: usize) -> f64 {
        let hi = (n + 1).min(self.w_norm.len());
        let lo = m.min(hi);
        self.w_prefix[hi] - self.w_prefix[lo]
    }

    /// `(I + Q2(n))(I + Q1(n)) Y(n)`, the monic `Phi_hat_n`.
    pub fn reconstruct(&self, n: usize) -> [C64; 2] {
        let m = [
            [ONE, self.q.q12(n)],
            [self.q.q21(n), ONE + self.q.rho(n)],
        ];
        mat_vec(&m, &self.y[n])
    }

    /// Both sides of `||Y(n)|| <= ||Y(0)|| exp(sum_{k<n} ||W(k)||)`.
    pub fn growth_bound(&self, n: usize) -> (f64, f64) {
        let rhs = l1(&self.y[0]) * self.w_sum(0, n.saturating_sub(1)).exp();
        let rhs = if n == 0 { l1(&self.y[0]) } else { rhs };
        (l1(&self.y[n]), rhs)
    }

    /// Both sides of
    /// `|y1(n) - z^{n-m} y1(m)| + |y2(n) - y2(m)| <= c1 sum_{k=m}^n ||W(k)||`.
    pub fn coordinate_bound(&self, m: usize, n: usize) -> (f64, f64) {
        let (ym, yn) = (self.y[m], self.y[n]);
        let lhs = (yn[0] - self.z.powu((n - m) as u32) * ym[0]).norm() + (yn[1] - ym[1]).norm();
        (lhs, self.c1 * self.w_sum(m, n))
    }

    /// Bound on `|y2(n) - lim y2|` for the untruncated system: the computed
    /// tail of `||W||`, the analytic remainder and the effect of truncating
    /// `q21` at `K` on `y2(n)`.
    pub fn tail_bound(&self, n: usize) -> f64 {
        let r = self.z.norm();
        let tail = self.c1 * (self.w_sum(n, self.cutoff) + self.remainder);
        let discrepancy = if self.alpha_tail == 0.0 || n > self.cutoff {
            0.0
        } else {
            let phi1 = self.reconstruct(n)[0].norm();
            self.alpha_tail * r.powi((self.cutoff - n + 1) as i32) / (1.0 - r * r).sqrt() * phi1
        };
        tail + discrepancy
    }
}

fn y_run(z: C64, coeffs: &Coefficients, steps: usize, cutoff: usize, alpha_tail: f64, beta_tail: f64) -> YTrajectory {
    let q = QTable::new(z, coeffs, cutoff, QVariant::Standard);
    let mut y = Vec::with_capacity(steps + 1);
    y.push([ONE, ONE - q.q21(0)]);
    for n in 0..steps {
        let v = v_entries(&q, coeffs.beta(n + 1), n);
        let cur = y[n];
        let m = [[z + v[0][0], v[0][1]], [v[1][0], ONE + v[1][1]]];
        y.push(mat_vec(&m, &cur));
    }
    let w_norm: Vec<f64> = (0..cutoff).map(|k| w_norm(&q, coeffs, k)).collect();
    let mut w_prefix = Vec::with_capacity(cutoff + 1);
    w_prefix.push(0.0);
    for w in &w_norm {
        w_prefix.push(w_prefix.last().unwrap() + w);
    }
    let (_, beta_head) = coeffs.l2_norms();
    let beta_l2 = (beta_head * beta_head + beta_tail * beta_tail).sqrt();
    let remainder = tail_remainder(z.norm(), alpha_tail, beta_tail, beta_l2);
    let c1 = l1(&y[0]) * (w_prefix[cutoff] + remainder).exp();
    YTrajectory {
        z,
        cutoff,
        y,
        w_norm,
        w_prefix,
        remainder,
        c1,
        alpha_tail,
        q,
    }
}

/// Iterates `Y` for `n = 0..=N` with cutoff `K`; requires `|z| < 1` and
/// `N + 2 <= K`.
pub fn y_iterate(z: C64, params: &ParameterSequence, steps: usize, cutoff: usize) -> Result<YTrajectory> {
    if z.norm() >= 1.0 {
        return Err(Error::OutsideDomain { modulus: z.norm() });
    }
    if steps + 2 > cutoff {
        return Err(Error::CutoffTooSmall { cutoff, required: steps + 2 });
    }
    let coeffs = params.take(cutoff)?;
    let (a_tail, b_tail) = params.tail_l2(cutoff);
    let traj = y_run(z, &coeffs, steps, cutoff, a_tail, b_tail);
    if let Some(n) = traj.y.iter().position(|v| !(v[0].is_finite() && v[1].is_finite())) {
        return Err(Error::NonFiniteValue(n));
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitVariant {
    /// `u(z; alpha, beta)` for `|z| < 1`.
    U,
    /// `v(z) = u(1/z; beta, alpha)` for `|z| > 1`.
    V,
}

/// Step budget for the adaptive interior iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// First `N`; doubled until convergence.
    pub n_start: usize,
    /// Largest `N` tried (the iteration runs to `2N`).
    pub n_max: usize,
    /// Largest cutoff `K`.
    pub cutoff_max: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { n_start: 64, n_max: 1 << 16, cutoff_max: 1 << 20 }
    }
}

/// One attempt of the adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub n: usize,
    pub cutoff: usize,
    pub cauchy: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Requested point (for the v variant, outside the disk).
    pub z: C64,
    pub variant: LimitVariant,
    pub tol: f64,
    /// Final `N`; the limit is read at `2N`.
    pub n: usize,
    pub cutoff: usize,
    pub u: C64,
    pub y1: C64,
    /// Monic `Phi_hat_{2N}` at the evaluation point, whose limit is `(0, u)`.
    pub phi_hat: [C64; 2],
    pub cauchy: f64,
    pub c1: f64,
    pub w_sum: f64,
    pub remainder: f64,
    pub tail_bound: f64,
    pub converged: bool,
    pub attempts: Vec<Attempt>,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `steps + 2` plus enough room for `|z|^{K - steps}` to fall below
/// `tol (1 - |z|)`.
fn cutoff_floor(modulus: f64, tol: f64, steps: usize) -> usize {
    let level = tol * (1.0 - modulus);
    let room = if modulus <= 0.0 {
        1
    } else {
        (level.ln() / modulus.ln()).ceil().max(1.0) as usize
    };
    steps + 2 + room
}

/// Smallest cutoff whose analytic alpha tail is below `tol (1 - |z|)`, at
/// least [`cutoff_floor`]. `None` when no cutoff up to `cutoff_max` works.
pub fn choose_cutoff(
    params: &ParameterSequence,
    modulus: f64,
    tol: f64,
    steps: usize,
    cutoff_max: usize,
) -> Option<usize> {
    let level = tol * (1.0 - modulus);
    let floor = cutoff_floor(modulus, tol, steps);
    let ok = |k: usize| params.tail_l2(k).0 < level;
    if ok(floor) {
        return Some(floor);
    }
    if floor >= cutoff_max || !ok(cutoff_max) {
        return None;
    }
    let (mut lo, mut hi) = (floor, cutoff_max);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Adaptive interior limit; always returns a report, `converged` tells
/// whether both the Cauchy test and the tail bound passed.
pub fn interior_report(
    z: C64,
    params: &ParameterSequence,
    tol: f64,
    variant: LimitVariant,
    budget: Budget,
) -> Result<ConvergenceReport> {
    let (point, seq) = match variant {
        LimitVariant::U => {
            if z.norm() >= 1.0 {
                return Err(Error::OutsideDomain { modulus: z.norm() });
            }
            (z, params.clone())
        }
        LimitVariant::V => {
            if z.norm() <= 1.0 {
                return Err(Error::OutsideDomain { modulus: z.norm() });
            }
            (reciprocal(z), params.swapped())
        }
    };
    let r = point.norm();
    let mut n = budget.n_start.max(1);
    let mut attempts = Vec::new();
    loop {
        let steps = 2 * n;
        let floor = cutoff_floor(r, tol, steps);
        if floor > budget.cutoff_max {
            return Err(Error::CutoffTooSmall { cutoff: budget.cutoff_max, required: floor });
        }
        // when the analytic tail cannot be met within the budget the cutoff
        // only has to keep the truncation effect on y2(2N) small
        let cutoff = choose_cutoff(&seq, r, tol, steps, budget.cutoff_max)
            .unwrap_or_else(|| (2 * floor).min(budget.cutoff_max));
        let traj = y_iterate(point, &seq, steps, cutoff)?;
        let cauchy = (traj.y[n][1] - traj.y[steps][1]).norm();
        let tail_bound = traj.tail_bound(n);
        attempts.push(Attempt { n, cutoff, cauchy, tail_bound });
        // y1 -> 0 geometrically, so also wait for it so that Phi_hat is near (0, u)
        let converged = cauchy < tol && tail_bound < tol && traj.y[steps][0].norm() < tol;
        let exhausted = 2 * n > budget.n_max || cutoff_floor(r, tol, 4 * n) > budget.cutoff_max;
        if converged || exhausted {
            return Ok(ConvergenceReport {
                z,
                variant,
                tol,
                n,
                cutoff,
                u: traj.y[steps][1],
                y1: traj.y[steps][0],
                phi_hat: traj.reconstruct(steps),
                cauchy,
                c1: traj.c1,
                w_sum: traj.w_sum(0, cutoff),
                remainder: traj.remainder,
                tail_bound,
                converged,
                attempts,
            });
        }
        n *= 2;
    }
}

/// Like [`interior_report`], failing with `NoConvergence` when the budget is
/// exhausted.
pub fn interior_limit(
    z: C64,
    params: &ParameterSequence,
    tol: f64,
    variant: LimitVariant,
    budget: Budget,
) -> Result<(C64, ConvergenceReport)> {
    let report = interior_report(z, params, tol, variant, budget)?;
    if !report.converged {
        return Err(Error::NoConvergence {
            budget: budget.n_max,
            cauchy: report.cauchy,
            tail_bound: report.tail_bound,
        });
    }
    Ok((report.u, report))
}

/// One row of an interior grid sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub z: C64,
    pub u: Option<C64>,
    pub n_used: usize,
    pub converged: bool,
    /// `|first component of Phi_hat|` at the last step.
    pub first_component: f64,
    /// `|y1(2N)|`.
    pub y1: f64,
    pub cauchy: f64,
    pub tail_bound: f64,
    pub error: Option<String>,
}

pub fn interior_grid(
    points: &[C64],
    params: &ParameterSequence,
    tol: f64,
    variant: LimitVariant,
    budget: Budget,
) -> Vec<GridRow> {
    points
        .par_iter()
        .map(|&z| match interior_report(z, params, tol, variant, budget) {
            Ok(r) => GridRow {
                z,
                u: Some(r.u),
                n_used: 2 * r.n,
                converged: r.converged,
                first_component: r.phi_hat[0].norm(),
                y1: r.y1.norm(),
                cauchy: r.cauchy,
                tail_bound: r.tail_bound,
                error: if r.converged {
                    None
                } else {
                    Some("no convergence within budget".into())
                },
            },
            Err(e) => GridRow {
                z,
                u: None,
                n_used: 0,
                converged: false,
                first_component: f64::NAN,
                y1: f64::NAN,
                cauchy: f64::NAN,
                tail_bound: f64::NAN,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

pub fn write_grid_csv<W: Write>(rows: &[GridRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "re_z", "im_z", "re_u", "im_u", "n_used", "converged", "first_component", "y1", "cauchy",
        "tail_bound", "error",
    ])?;
    for r in rows {
        let u = r.u.unwrap_or(C64::new(f64::NAN, f64::NAN));
        w.write_record([
            fmt_f64(r.z.re),
            fmt_f64(r.z.im),
            fmt_f64(u.re),
            fmt_f64(u.im),
            r.n_used.to_string(),
            r.converged.to_string(),
            fmt_f64(r.first_component),
            fmt_f64(r.y1),
            fmt_f64(r.cauchy),
            fmt_f64(r.tail_bound),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Family;
    use crate::recurrence::monic_phi_at;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn seq(alpha: Vec<C64>, beta: Vec<C64>) -> ParameterSequence {
        ParameterSequence::explicit(alpha, beta).unwrap()
    }

    #[test]
    fn single_beta_gives_powers() {
        let p = seq(vec![], vec![c(1.0)]);
        let z = C64::new(0.3, 0.5);
        for n in 1..6 {
            let s = q_state(z, n, &p, 10, QVariant::Standard).unwrap();
            assert!((s.q12 - z.powu(n as u32 - 1)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_alpha_tail() {
        let p = seq(vec![ZERO, c(0.7)], vec![]);
        let z = C64::new(0.3, 0.5);
        let s = |n| q_state(z, n, &p, 10, QVariant::Standard).unwrap().q21;
        assert!((s(0) + 0.7 * z * z).norm() < 1e-15);
        assert!((s(1) + 0.7 * z).norm() < 1e-15);
        assert_eq!(s(2), ZERO);
        assert_eq!(
            q_state(z, 11, &p, 10, QVariant::Standard),
            Err(Error::CutoffTooSmall { cutoff: 10, required: 11 })
        );
    }

    #[test]
    fn geometric_tail_closed_form() {
        let (a, r) = (C64::new(0.4, 0.2), C64::new(0.6, 0.3));
        let p = ParameterSequence::family(Family::Geometric {
            alpha: a,
            alpha_ratio: r,
            beta: ZERO,
            beta_ratio: ZERO,
        });
        let z = C64::new(-0.5, 0.4);
        let cutoff = 40;
        for n in [0usize, 3, 10, 25] {
            let got = q_state(z, n, &p, cutoff, QVariant::Standard).unwrap().q21;
            let limit = -a * r.powu(n as u32 + 1) * z / (ONE - r * z);
            let bound = (a * (r * z).powu((cutoff - n + 1) as u32)).norm() / (1.0 - (r * z).norm());
            assert!((got - limit).norm() <= bound * (1.0 + 1e-12) + 1e-16, "n = {n}");
        }
    }

    #[test]
    fn tilde_is_standard_at_reciprocal_swapped() {
        let alpha: Vec<C64> = (1..=12).map(|k| C64::new(0.3, 0.1 * k as f64).scale(1.0 / k as f64)).collect();
        let beta: Vec<C64> = (1..=12).map(|k| C64::new(-0.2, 0.05).scale(1.0 / (k as f64).sqrt())).collect();
        let coeffs = Coefficients::new(alpha.clone(), beta.clone());
        let z = C64::new(1.1, 0.6);
        let t = QTable::new(z, &coeffs, 12, QVariant::Tilde);
        for n in 0..=12 {
            let q12: C64 = (1..=n).map(|k| alpha[k - 1] * z.powi(k as i32 - n as i32)).sum();
            let q21: C64 = -((n + 1)..=12).map(|k| beta[k - 1] * z.powi(n as i32 - k as i32)).sum::<C64>();
            assert!((t.q12(n) - q12).norm() < 1e-13, "n = {n}");
            assert!((t.q21(n) - q21).norm() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn commutation_exact_and_boundary() {
        let p = ParameterSequence::family(Family::PowerLaw {
            alpha: C64::new(0.3, 0.2),
            beta: C64::new(-0.1, 0.4),
            exponent: 0.7,
        });
        let z = C64::new(0.5, -0.6);
        for n in 0..30 {
            assert!(commutation_residual(z, n, &p, 30).unwrap() < 1e-15);
        }
        match commutation_residual(z, 30, &p, 30) {
            Err(Error::OutOfValidity { n: 30, cutoff: 30, residual }) => {
                // unnormalized defect is |alpha_{K+1} z|
                assert!(residual > 0.1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            commutation_residual(z, 31, &p, 30),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn v_vanishes_without_alpha_or_beta() {
        let z = C64::new(0.2, 0.3);
        let only_beta = seq(vec![], vec![c(0.5), c(0.25)]);
        let only_alpha = seq(vec![c(0.5), c(0.25)], vec![]);
        for p in [only_beta, only_alpha] {
            let v = v_matrix(z, 0, &p, 10).unwrap();
            assert!(v.entries.iter().flatten().all(|x| *x == ZERO));
        }
    }

    #[test]
    fn v11_hand_value() {
        let (a2, b1) = (C64::new(0.6, 0.1), C64::new(-0.3, 0.2));
        let p = seq(vec![ZERO, a2], vec![b1]);
        let z = c(0.5);
        let v = v_matrix(z, 0, &p, 5).unwrap();
        // q21(0) = -alpha_2 z^2, q12(1) = beta_1, q21(1) = -alpha_2 z
        let rho1 = b1 * (-a2 * z);
        let expected = b1 * (-a2 / 4.0) * (ONE + rho1);
        assert!((v.entries[0][0] - expected).norm() < 1e-16);
        assert!(rho1.norm() > 0.1);
        assert!(v.telescoping_lhs <= v.telescoping_rhs + 1e-16);
        assert!(matches!(v_matrix(z, 4, &p, 5), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn zero_parameters_trivial_trajectory() {
        let t = y_iterate(c(0.5), &ParameterSequence::zero(), 20, 30).unwrap();
        for (n, y) in t.y.iter().enumerate() {
            assert!((y[0] - c(0.5f64.powi(n as i32))).norm() < 1e-15);
            assert_eq!(y[1], ONE);
        }
        assert_eq!(t.c1, 2.0);
        let (u, _) = interior_limit(c(0.5), &ParameterSequence::zero(), 1e-10, LimitVariant::U, Budget::default()).unwrap();
        assert_eq!(u, ONE);
    }

    #[test]
    fn alpha_zero_gives_unit_limit() {
        let p = ParameterSequence::family(Family::PowerLaw { alpha: ZERO, beta: c(0.5), exponent: 0.8 });
        let t = y_iterate(C64::new(0.1, 0.6), &p, 50, 60).unwrap();
        assert!(t.y.iter().all(|y| y[1] == ONE));
        let (u, r) = interior_limit(C64::new(0.1, 0.6), &p, 1e-8, LimitVariant::U, Budget::default()).unwrap();
        assert_eq!(u, ONE);
        assert!(r.converged);
    }

    #[test]
    fn reconstruction_matches_direct_iteration() {
        let p = ParameterSequence::family(Family::PowerLaw {
            alpha: C64::new(0.4, -0.1),
            beta: C64::new(0.2, 0.3),
            exponent: 0.6,
        });
        let z = C64::new(0.6, 0.6);
        let t = y_iterate(z, &p, 100, 400).unwrap();
        for n in [0usize, 1, 7, 50, 100] {
            let direct = monic_phi_at(z, &p, n).unwrap();
            let rec = t.reconstruct(n);
            for i in 0..2 {
                assert!((rec[i] - direct[i]).norm() <= 1e-11 * (1.0 + direct[i].norm()), "n = {n}");
            }
        }
    }

    #[test]
    fn domain_and_cutoff_errors() {
        let p = ParameterSequence::zero();
        assert_eq!(y_iterate(c(1.0), &p, 2, 10), Err(Error::OutsideDomain { modulus: 1.0 }));
        assert_eq!(y_iterate(c(0.5), &p, 9, 10), Err(Error::CutoffTooSmall { cutoff: 10, required: 11 }));
    }

    #[test]
    fn w_norm_agrees_with_division() {
        let p = ParameterSequence::family(Family::PowerLaw {
            alpha: C64::new(0.4, -0.1),
            beta: C64::new(0.2, 0.3),
            exponent: 0.6,
        });
        let z = C64::new(0.3, -0.2);
        let coeffs = p.take(50).unwrap();
        let q = QTable::new(z, &coeffs, 50, QVariant::Standard);
        for n in 0..48 {
            let v = v_entries(&q, coeffs.beta(n + 1), n);
            let direct = (v[0][0] / z).norm() + (v[0][1] / z).norm() + v[1][0].norm() + v[1][1].norm();
            assert!((w_norm(&q, &coeffs, n) - direct).abs() <= 1e-13 * direct.max(1e-300));
        }
    }

    #[test]
    fn v_variant_uses_reciprocal_and_swap() {
        let p = ParameterSequence::family(Family::PowerLaw {
            alpha: C64::new(0.3, 0.0),
            beta: ZERO,
            exponent: 1.0,
        });
        // v(z; alpha, beta) = u(1/z; beta, alpha) = 1 when beta plays alpha's role and is zero
        let (v, _) = interior_limit(c(2.0), &p, 1e-8, LimitVariant::V, Budget::default()).unwrap();
        assert_eq!(v, ONE);
        assert!(interior_limit(c(0.5), &p, 1e-8, LimitVariant::V, Budget::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let p = ParameterSequence::family(Family::PowerLaw { alpha: c(0.5), beta: c(0.5), exponent: 0.8 });
        let budget = Budget { n_start: 16, n_max: 64, cutoff_max: 1 << 14 };
        let err = interior_limit(c(0.99), &p, 1e-12, LimitVariant::U, budget).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { budget: 64, .. }));
        let report = interior_report(c(0.99), &p, 1e-12, LimitVariant::U, budget).unwrap();
        assert_eq!(report.attempts.len(), 3);
        let tiny = Budget { n_start: 16, n_max: 64, cutoff_max: 1024 };
        assert!(matches!(
            interior_report(c(0.99), &p, 1e-12, LimitVariant::U, tiny),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn tail_remainder_degenerate_cases() {
        assert_eq!(tail_remainder(0.5, 0.0, 1.0, 1.0), 0.0);
        assert_eq!(tail_remainder(1.0, 0.1, 0.1, 1.0), f64::INFINITY);
        assert!(tail_remainder(0.0, 0.1, 0.1, 1.0) > 0.0);
    }
}
