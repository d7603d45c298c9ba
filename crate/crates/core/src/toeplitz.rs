//! Brute-force ground truth from Toeplitz determinants: `D_n(mu)`, the Baxter
//! parameters as determinant ratios, and the determinant-defined polynomials.
//!
//! Everything that depends on the normalization `phi_0 = psi_0 = 1`
//! (parameters, `kappa_n`, polynomials) is computed for the probability
//! normalized table `mu / mu_0`. Raw determinants and the Sylvester residual
//! use the table as given.

use std::io::Write;

use crate::error::{Error, Result};
use crate::measure::{MeasureSpec, MomentTable};
use crate::numeric::{determinant, fmt_f64, horner, C64, ONE, ZERO};
use crate::params::ParameterSequence;

/// The `n x n` matrix `(i, j) -> mu_{i - j + shift}`.
///
/// Shift `-1` gives the moments of `zeta mu`, shift `+1` those of
/// `zeta^{-1} mu`.
#[derive(Debug, Clone, Copy)]
pub struct ToeplitzSlice<'a> {
    pub table: &'a MomentTable,
    pub order: usize,
    pub shift: i32,
}

impl<'a> ToeplitzSlice<'a> {
    pub fn new(table: &'a MomentTable, order: usize, shift: i32) -> Result<Self> {
        if !(-1..=1).contains(&shift) {
            return Err(Error::InvalidSpec(format!("shift {shift} not in {{-1, 0, 1}}")));
        }
        let needed = order.saturating_sub(1) + shift.unsigned_abs() as usize;
        if order > 0 && needed > table.halfwidth {
            return Err(Error::SingularTable { order, shift });
        }
        Ok(ToeplitzSlice { table, order, shift })
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.table
            .get(i as i64 - j as i64 + self.shift as i64)
            .expect("range checked on construction")
    }

    pub fn matrix(&self) -> Vec<C64> {
        let n = self.order;
        (0..n * n).map(|idx| self.entry(idx / n, idx % n)).collect()
    }

    pub fn det(&self) -> C64 {
        determinant(self.matrix(), self.order)
    }
}

/// `det ||mu_{i-j+shift}||_{i,j<n}`, with `D_0 = 1`.
pub fn toeplitz_det(table: &MomentTable, n: usize, shift: i32) -> Result<C64> {
    Ok(ToeplitzSlice::new(table, n, shift)?.det())
}

/// Per-order oracle quantities for the normalized table.
#[derive(Debug, Clone, PartialEq)]
pub struct BaxterRow {
    pub n: usize,
    pub alpha: C64,
    pub beta: C64,
    pub kappa: C64,
    pub det: C64,
}

/// Baxter parameters `alpha_n = (-1)^n D_n(zeta^{-1} mu) / D_n(mu)` and
/// `beta_n = (-1)^n D_n(zeta mu) / D_n(mu)` for `n = 1..=order`.
pub fn baxter_params_from_moments(table: &MomentTable, order: usize) -> Result<ParameterSequence> {
    let rows = baxter_table(table, order)?;
    let alpha = rows.iter().map(|r| r.alpha).collect();
    let beta = rows.iter().map(|r| r.beta).collect();
    ParameterSequence::from_moments(alpha, beta)
}

/// Rows `(n, alpha_n, beta_n, kappa_n, D_n)` for `n = 1..=order`; `kappa_n`
/// from the product `kappa_n^{-2} = prod_{j<=n} (1 - alpha_j beta_j)`.
pub fn baxter_table(table: &MomentTable, order: usize) -> Result<Vec<BaxterRow>> {
    let t = table.normalized()?;
    let mut rows = Vec::with_capacity(order);
    let mut kappa = ONE;
    let mut inv_kappa_sq = ONE;
    for n in 1..=order {
        let d = toeplitz_det(&t, n, 0)?;
        if d == ZERO {
            return Err(Error::ZeroDeterminant(n));
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let alpha = sign * toeplitz_det(&t, n, 1)? / d;
        let beta = sign * toeplitz_det(&t, n, -1)? / d;
        inv_kappa_sq *= ONE - alpha * beta;
        if inv_kappa_sq == ZERO {
            // 1 - alpha_n beta_n = D_{n+1} D_{n-1} / D_n^2
            return Err(Error::ZeroDeterminant(n + 1));
        }
        kappa = crate::numeric::continuous_sqrt(inv_kappa_sq.inv(), kappa).0;
        rows.push(BaxterRow { n, alpha, beta, kappa, det: d });
    }
    Ok(rows)
}

pub fn write_baxter_csv<W: Write>(rows: &[BaxterRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n", "alpha_re", "alpha_im", "beta_re", "beta_im", "kappa_re", "kappa_im", "det_re",
        "det_im",
    ])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.alpha.re),
            fmt_f64(r.alpha.im),
            fmt_f64(r.beta.re),
            fmt_f64(r.beta.im),
            fmt_f64(r.kappa.re),
            fmt_f64(r.kappa.im),
            fmt_f64(r.det.re),
            fmt_f64(r.det.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Determinant-defined polynomials of order `n` for the normalized table.
///
/// Coefficient conventions: `phi_hat[j]` and `u[j]` multiply `z^j`;
/// `psi_hat[j]` and `v[j]` multiply `z^{-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetPolynomials {
    pub order: usize,
    pub phi_hat: Vec<C64>,
    pub psi_hat: Vec<C64>,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    /// `D_n(mu)`
    pub d_n: C64,
    /// `D_{n+1}(mu)`
    pub d_next: C64,
    /// Principal root of `D_n / D_{n+1}`.
    pub kappa: C64,
    /// `kappa_n / D_n`, so `ell_n^2 = (D_n D_{n+1})^{-1}`.
    pub ell: C64,
}

impl DetPolynomials {
    pub fn phi_hat_at(&self, z: C64) -> C64 {
        horner(&self.phi_hat, z)
    }

    pub fn psi_hat_at(&self, z: C64) -> C64 {
        horner(&self.psi_hat, z.inv())
    }

    /// Monic `phi_hat_n / D_n`.
    pub fn monic_phi(&self) -> Vec<C64> {
        self.phi_hat.iter().map(|c| c / self.d_n).collect()
    }

    /// Monic (in `1/z`) `psi_hat_n / D_n`.
    pub fn monic_psi(&self) -> Vec<C64> {
        self.psi_hat.iter().map(|c| c / self.d_n).collect()
    }

    pub fn u_at(&self, z: C64) -> C64 {
        horner(&self.u, z)
    }

    pub fn v_at(&self, z: C64) -> C64 {
        horner(&self.v, z.inv())
    }

    /// Orthonormal `phi_n = ell_n phi_hat_n`.
    pub fn phi_at(&self, z: C64) -> C64 {
        self.ell * self.phi_hat_at(z)
    }

    pub fn psi_at(&self, z: C64) -> C64 {
        self.ell * self.psi_hat_at(z)
    }
}

/// Cofactor coefficients of the `(n+1) x (n+1)` determinant whose first `n`
/// rows are `rows(i, j)` and whose last row holds the monomials; entry `j`
/// multiplies the monomial in column `j`.
fn last_row_cofactors<F: Fn(usize, usize) -> C64>(n: usize, rows: F) -> Vec<C64> {
    (0..=n)
        .map(|col| {
            let minor: Vec<C64> = (0..n)
                .flat_map(|i| (0..=n).filter(move |&j| j != col).map(move |j| (i, j)))
                .map(|(i, j)| rows(i, j))
                .collect();
            let sign = if (n + col) % 2 == 0 { 1.0 } else { -1.0 };
            sign * determinant(minor, n)
        })
        .collect()
}

pub fn det_polynomials(table: &MomentTable, n: usize) -> Result<DetPolynomials> {
    let t = table.normalized()?;
    if n > t.halfwidth {
        return Err(Error::SingularTable { order: n + 1, shift: 0 });
    }
    let d_n = toeplitz_det(&t, n, 0)?;
    let d_next = toeplitz_det(&t, n + 1, 0)?;
    if d_n == ZERO {
        return Err(Error::ZeroDeterminant(n));
    }
    if d_next == ZERO {
        return Err(Error::ZeroDeterminant(n + 1));
    }
    let mu = |k: i64| t.get(k).expect("range checked");
    let phi_hat = last_row_cofactors(n, |i, j| mu(i as i64 - j as i64));
    let psi_hat = last_row_cofactors(n, |i, j| mu(j as i64 - i as i64));
    let u = (0..=n).map(|m| psi_hat[n - m] / d_next).collect();
    let v = (0..=n).map(|m| phi_hat[n - m] / d_next).collect();
    let kappa = (d_n / d_next).sqrt();
    let ell = kappa / d_n;
    Ok(DetPolynomials {
        order: n,
        phi_hat,
        psi_hat,
        u,
        v,
        d_n,
        d_next,
        kappa,
        ell,
    })
}

/// Relative residual of `D_{n+1} D_{n-1} = D_n^2 - D_n(zeta mu) D_n(zeta^{-1} mu)`.
pub fn sylvester_check(table: &MomentTable, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidSpec("Sylvester identity needs n >= 1".into()));
    }
    let lhs = toeplitz_det(table, n + 1, 0)? * toeplitz_det(table, n - 1, 0)?;
    let square = toeplitz_det(table, n, 0)?.powi(2);
    let cross = toeplitz_det(table, n, -1)? * toeplitz_det(table, n, 1)?;
    let scale = lhs.norm().max(square.norm()).max(cross.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - square + cross).norm() / scale)
}

/// Gram matrix `G[n][m] = int phi_n psi_m dmu / mu_0` by quadrature, which
/// should be the identity.
pub fn biorthogonality_matrix(
    spec: &MeasureSpec,
    table: &MomentTable,
    max_order: usize,
    nodes: usize,
) -> Result<Vec<Vec<C64>>> {
    let polys = (0..=max_order)
        .map(|n| det_polynomials(table, n))
        .collect::<Result<Vec<_>>>()?;
    let mass = table.total_mass();
    let mut gram = vec![vec![ZERO; max_order + 1]; max_order + 1];
    for (n, pn) in polys.iter().enumerate() {
        for (m, pm) in polys.iter().enumerate() {
            gram[n][m] = spec.integrate(|zeta| pn.phi_at(zeta) * pm.psi_at(zeta), nodes)? / mass;
        }
    }
    Ok(gram)
}
