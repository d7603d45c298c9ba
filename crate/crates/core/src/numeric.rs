//! Small dense numerical kernels shared by the oracle and the diagnostics.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Determinant of a square row-major complex matrix by Gaussian elimination
/// with partial pivoting. The input is consumed as scratch space.
pub fn determinant(mut a: Vec<C64>, n: usize) -> C64 {
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return ONE;
    }
    let mut det = ONE;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        let p = a[pivot * n + col];
        if p == ZERO {
            return ZERO;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        det *= p;
        for i in col + 1..n {
            let factor = a[i * n + col] / p;
            if factor == ZERO {
                continue;
            }
            for j in col + 1..n {
                let v = a[col * n + j];
                a[i * n + j] -= factor * v;
            }
        }
    }
    det
}

/// Least-squares slope of `y` against `x`. Returns `None` for fewer than two
/// points or a degenerate abscissa.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for i in 0..n {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Evaluates `sum_j coeffs[j] * w^j` by Horner's rule.
pub fn horner(coeffs: &[C64], w: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * w + c)
}

/// Absolute evaluation scale `sum_j |coeffs[j]| |w|^j`, the natural
/// denominator for relative errors of polynomial values.
pub fn horner_scale(coeffs: &[C64], w: C64) -> f64 {
    let r = w.norm();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

pub fn l1(v: &[C64; 2]) -> f64 {
    v[0].norm() + v[1].norm()
}

/// Entrywise-sum norm of a 2x2 matrix; dominates the induced l1 norm.
pub fn mat_l1(m: &[[C64; 2]; 2]) -> f64 {
    m[0][0].norm() + m[0][1].norm() + m[1][0].norm() + m[1][1].norm()
}

pub fn mat_vec(m: &[[C64; 2]; 2], v: &[C64; 2]) -> [C64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub fn mat_mul(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// `e^{i phi}` for the node angle `2 pi m / n`, reducing `m` exactly first.
pub fn root_of_unity(m: i64, n: usize) -> C64 {
    let r = m.rem_euclid(n as i64) as f64;
    C64::from_polar(1.0, std::f64::consts::TAU * r / n as f64)
}

/// Principal square root with a sign flip when it would jump away from
/// `previous` (negative real part of the ratio). Returns the root and whether
/// a flip was applied.
pub fn continuous_sqrt(value: C64, previous: C64) -> (C64, bool) {
    let root = value.sqrt();
    if (root * previous.conj()).re < 0.0 {
        (-root, true)
    } else {
        (root, false)
    }
}


/// Shortest round-trip text for CSV output, with an exponent for very large
/// or small magnitudes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
