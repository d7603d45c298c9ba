//! Forward iteration of the Baxter transfer recurrences.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{continuous_sqrt, fmt_f64, mat_vec, C64, ONE, ZERO};
use crate::params::ParameterSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// `Phi_n = (phi_n, z^n psi_n)`.
    Phi,
    /// `Psi_n = (psi_n, z^{-n} phi_n)`.
    Psi,
    MonicPhi,
    MonicPsi,
}

impl Flavor {
    pub fn is_monic(self) -> bool {
        matches!(self, Flavor::MonicPhi | Flavor::MonicPsi)
    }

    pub fn is_psi(self) -> bool {
        matches!(self, Flavor::Psi | Flavor::MonicPsi)
    }
}

/// One transfer step, `prefactor * matrix`; the prefactor is absent for the
/// monic flavors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub matrix: [[C64; 2]; 2],
    pub prefactor: Option<C64>,
}

impl TransferMatrix {
    /// The full matrix with the prefactor applied.
    pub fn full(&self) -> [[C64; 2]; 2] {
        let s = self.prefactor.unwrap_or(ONE);
        self.matrix.map(|row| row.map(|x| s * x))
    }

    pub fn det(&self) -> C64 {
        let m = self.full();
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

/// Bare matrix of the step `n -> n+1` from `(alpha_{n+1}, beta_{n+1})`.
fn step_matrix(z: C64, alpha: C64, beta: C64, psi: bool) -> [[C64; 2]; 2] {
    if psi {
        let w = z.inv();
        [[w, alpha], [beta * w, ONE]]
    } else {
        [[z, beta], [alpha * z, ONE]]
    }
}

/// Transfer matrix for the step `n -> n+1`. The prefactor is
/// `kappa_{n+1} / kappa_n` with the branch fixed by [`kappa_sequence`].
pub fn transfer_matrix(
    z: C64,
    n: usize,
    params: &ParameterSequence,
    flavor: Flavor,
) -> Result<TransferMatrix> {
    if flavor.is_psi() && z == ZERO {
        return Err(Error::ZeroPoint);
    }
    let (alpha, beta) = params.pair(n + 1)?;
    if alpha * beta == ONE {
        return Err(Error::DegenerateStep(n));
    }
    let prefactor = if flavor.is_monic() {
        None
    } else {
        let k = kappa_sequence(params, n + 1)?;
        Some(k.values[n + 1] / k.values[n])
    };
    Ok(TransferMatrix {
        matrix: step_matrix(z, alpha, beta, flavor.is_psi()),
        prefactor,
    })
}

/// `kappa_0..=kappa_N` with the per-step branch corrections.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaSequence {
    pub values: Vec<C64>,
    /// `flips[n]` is set when `kappa_n` was negated relative to the principal
    /// root to stay close to `kappa_{n-1}`.
    pub flips: Vec<bool>,
}

pub fn kappa_sequence(params: &ParameterSequence, n_max: usize) -> Result<KappaSequence> {
    let mut values = Vec::with_capacity(n_max + 1);
    let mut flips = Vec::with_capacity(n_max + 1);
    values.push(ONE);
    flips.push(false);
    let mut product = ONE;
    for n in 1..=n_max {
        let (a, b) = params.pair(n)?;
        let factor = ONE - a * b;
        if factor == ZERO {
            return Err(Error::DegenerateStep(n - 1));
        }
        product *= factor;
        let (k, flipped) = continuous_sqrt(product.inv(), values[n - 1]);
        values.push(k);
        flips.push(flipped);
    }
    Ok(KappaSequence { values, flips })
}

/// A 2-vector stored as `mantissa * 2^exponent`, renormalized every step so
/// long trajectories with `|z| > 1` stay representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub mantissa: [C64; 2],
    pub exponent: i32,
}

impl StateVector {
    pub fn initial() -> Self {
        StateVector { n: 0, mantissa: [ONE, ONE], exponent: 0 }
    }

    fn rescaled(n: usize, v: [C64; 2], exponent: i32) -> Self {
        let m = v[0].norm().max(v[1].norm());
        if m == 0.0 || !m.is_finite() {
            return StateVector { n, mantissa: v, exponent };
        }
        let e = m.log2().floor() as i32;
        let s = 2f64.powi(-e);
        StateVector {
            n,
            mantissa: [v[0] * s, v[1] * s],
            exponent: exponent + e,
        }
    }

    /// The unscaled vector; may overflow to infinity.
    pub fn value(&self) -> [C64; 2] {
        let s = 2f64.powi(self.exponent);
        [self.mantissa[0] * s, self.mantissa[1] * s]
    }

    /// `log2` of the larger component modulus.
    pub fn log2_magnitude(&self) -> f64 {
        self.mantissa[0].norm().max(self.mantissa[1].norm()).log2() + self.exponent as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub z: C64,
    pub flavor: Flavor,
    pub states: Vec<StateVector>,
    pub kappa: KappaSequence,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory holds n = 0")
    }

    pub fn value(&self, n: usize) -> [C64; 2] {
        self.states[n].value()
    }

    /// Columns `n, Re/Im of both components, Re/Im kappa_n`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "n", "c0_re", "c0_im", "c1_re", "c1_im", "kappa_re", "kappa_im",
        ])?;
        for s in &self.states {
            let v = s.value();
            let k = self.kappa.values[s.n];
            w.write_record([
                s.n.to_string(),
                fmt_f64(v[0].re),
                fmt_f64(v[0].im),
                fmt_f64(v[1].re),
                fmt_f64(v[1].im),
                fmt_f64(k.re),
                fmt_f64(k.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `n = 0..=N` from `(1, 1)`.
pub fn iterate(z: C64, params: &ParameterSequence, n_max: usize, flavor: Flavor) -> Result<Trajectory> {
    if flavor.is_psi() && z == ZERO {
        return Err(Error::ZeroPoint);
    }
    let kappa = kappa_sequence(params, n_max)?;
    let mut states = Vec::with_capacity(n_max + 1);
    let mut state = StateVector::initial();
    states.push(state);
    for n in 0..n_max {
        let (alpha, beta) = params.pair(n + 1)?;
        let m = step_matrix(z, alpha, beta, flavor.is_psi());
        let mut next = mat_vec(&m, &state.mantissa);
        if !flavor.is_monic() {
            let ratio = kappa.values[n + 1] / kappa.values[n];
            next = [next[0] * ratio, next[1] * ratio];
        }
        if !(next[0].is_finite() && next[1].is_finite()) {
            return Err(Error::NonFiniteValue(n + 1));
        }
        state = StateVector::rescaled(n + 1, next, state.exponent);
        states.push(state);
    }
    Ok(Trajectory { z, flavor, states, kappa })
}

/// Monic `(phi_hat_n(z), z^n psi_hat_n(z))` at the final order only, unscaled.
/// Cheaper than [`iterate`] when the trajectory is not needed.
pub fn monic_phi_at(z: C64, params: &ParameterSequence, n: usize) -> Result<[C64; 2]> {
    let mut v = [ONE, ONE];
    for k in 0..n {
        let (alpha, beta) = params.pair(k + 1)?;
        if alpha * beta == ONE {
            return Err(Error::DegenerateStep(k));
        }
        v = mat_vec(&step_matrix(z, alpha, beta, false), &v);
    }
    Ok(v)
}

/// Coefficients of monic `phi_hat_n` (powers `z^0..z^n`) and of
/// `z^n psi_hat_n` (same powers), by running the recurrence on polynomials.
pub fn monic_coefficients(params: &ParameterSequence, n: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    let mut p = vec![ONE];
    let mut q = vec![ONE];
    for k in 0..n {
        let (alpha, beta) = params.pair(k + 1)?;
        // p' = z p + beta q, q' = alpha z p + q
        let mut np = vec![ZERO; k + 2];
        let mut nq = vec![ZERO; k + 2];
        for j in 0..=k {
            np[j + 1] += p[j];
            np[j] += beta * q[j];
            nq[j + 1] += alpha * p[j];
            nq[j] += q[j];
        }
        p = np;
        q = nq;
    }
    Ok((p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Family, ParameterSequence};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    fn tridiagonal() -> ParameterSequence {
        ParameterSequence::explicit(vec![c(-0.5), c(0.3)], vec![c(-1.0 / 3.0), c(2.0 / 15.0)]).unwrap()
    }

    #[test]
    fn zero_parameters_give_diagonal_steps() {
        let p = ParameterSequence::zero();
        let z = C64::new(0.3, 0.4);
        let t = transfer_matrix(z, 4, &p, Flavor::Phi).unwrap();
        assert_eq!(t.matrix, [[z, ZERO], [ZERO, ONE]]);
        assert_eq!(t.prefactor, Some(ONE));
        let traj = iterate(c(0.5), &p, 3, Flavor::MonicPhi).unwrap();
        let v = traj.value(3);
        assert!(close(v[0], c(0.125), 1e-15) && close(v[1], ONE, 1e-15));
    }

    #[test]
    fn first_monic_step_of_tridiagonal_table() {
        let z = C64::new(0.2, -0.7);
        let t = transfer_matrix(z, 0, &tridiagonal(), Flavor::MonicPhi).unwrap();
        assert_eq!(t.prefactor, None);
        assert_eq!(t.matrix, [[z, c(-1.0 / 3.0)], [-0.5 * z, ONE]]);
        // det = z (1 - alpha beta)
        assert!(close(t.det(), z * (ONE - c(1.0 / 6.0)), 1e-15));
    }

    #[test]
    fn psi_is_phi_at_reciprocal_with_swapped_roles() {
        let p = ParameterSequence::family(Family::PowerLaw {
            alpha: C64::new(0.3, 0.1),
            beta: C64::new(-0.2, 0.4),
            exponent: 0.9,
        });
        let z = C64::new(0.4, 0.9);
        for n in 0..5 {
            let a = transfer_matrix(z, n, &p, Flavor::Psi).unwrap();
            let b = transfer_matrix(z.inv(), n, &p.swapped(), Flavor::Phi).unwrap();
            assert_eq!(a.matrix, b.matrix);
        }
        assert_eq!(transfer_matrix(ZERO, 0, &p, Flavor::MonicPsi), Err(Error::ZeroPoint));
    }

    #[test]
    fn degenerate_step_is_reported() {
        let p = ParameterSequence::family(Family::PowerLaw { alpha: c(2.0), beta: c(0.5), exponent: 0.0 });
        assert_eq!(transfer_matrix(ONE, 0, &p, Flavor::MonicPhi), Err(Error::DegenerateStep(0)));
        assert_eq!(kappa_sequence(&p, 3).unwrap_err(), Error::DegenerateStep(0));
    }

    #[test]
    fn kappa_from_product() {
        let k = kappa_sequence(&tridiagonal(), 2).unwrap();
        assert!(close(k.values[1] * k.values[1], c(1.2), 1e-15));
        let expected = 1.0 / ((1.0 - 1.0 / 6.0) * (1.0 - 0.04));
        assert!(close(k.values[2] * k.values[2], c(expected), 1e-15));
        let opuc = ParameterSequence::family(Family::PowerLaw {
            alpha: C64::new(0.3, 0.2),
            beta: C64::new(0.3, -0.2),
            exponent: 0.6,
        });
        let k = kappa_sequence(&opuc, 40).unwrap();
        for w in k.values.windows(2) {
            assert!(w[1].im.abs() < 1e-15 && w[1].re > w[0].re);
        }
    }

    #[test]
    fn alpha_zero_closed_form() {
        let beta: Vec<C64> = (1..=8).map(|k| C64::new(0.1 * k as f64, -0.05)).collect();
        let p = ParameterSequence::explicit(vec![], beta.clone()).unwrap();
        let z = C64::new(0.7, 0.2);
        let traj = iterate(z, &p, 8, Flavor::MonicPhi).unwrap();
        for n in 0..=8 {
            let v = traj.value(n);
            let expected = z.powu(n as u32)
                + (1..=n).map(|k| beta[k - 1] * z.powu((n - k) as u32)).sum::<C64>();
            assert!(close(v[0], expected, 1e-14), "n = {n}");
            assert!(close(v[1], ONE, 1e-15));
        }
    }

    #[test]
    fn scaled_states_survive_growth() {
        let traj = iterate(c(2.0), &ParameterSequence::zero(), 10_000, Flavor::MonicPhi).unwrap();
        let last = traj.last();
        assert!((last.log2_magnitude() - 10_000.0).abs() < 1e-9);
        assert!(close(last.mantissa[0], ONE, 1e-12));
        assert!(last.value()[0].re.is_infinite());
    }

    #[test]
    fn coefficients_match_pointwise_iteration() {
        let p = tridiagonal();
        let (phi, u) = monic_coefficients(&p, 2).unwrap();
        let z = C64::new(-0.3, 1.1);
        let v = monic_phi_at(z, &p, 2).unwrap();
        assert!(close(crate::numeric::horner(&phi, z), v[0], 1e-14));
        assert!(close(crate::numeric::horner(&u, z), v[1], 1e-14));
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let traj = iterate(c(0.5), &ParameterSequence::zero(), 2, Flavor::Phi).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("n,c0_re"));
    }
}
