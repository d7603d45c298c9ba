//! Baxter parameter sequences `(alpha_n, beta_n)`, `n >= 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::MeasureSpec;
use crate::numeric::{C64, ONE, ZERO};
use crate::tauberian::{BetaRule, ExampleKind, ExampleParams, ExampleTerm};
use crate::toeplitz::baxter_params_from_moments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FromMoments,
    Explicit,
    Family,
}

/// Closed-form parameter families, evaluated lazily.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Zero,
    /// `alpha_n = a n^{-p}`, `beta_n = b n^{-p}`.
    PowerLaw { alpha: C64, beta: C64, exponent: f64 },
    /// `alpha_n = a r^n`, `beta_n = b s^n`.
    Geometric {
        alpha: C64,
        alpha_ratio: C64,
        beta: C64,
        beta_ratio: C64,
    },
    Example(ExampleParams),
}

impl Family {
    fn pair(&self, n: usize) -> (C64, C64) {
        match self {
            Family::Zero => (ZERO, ZERO),
            Family::PowerLaw { alpha, beta, exponent } => {
                let s = (n as f64).powf(-exponent);
                (alpha * s, beta * s)
            }
            Family::Geometric { alpha, alpha_ratio, beta, beta_ratio } => (
                alpha * alpha_ratio.powu(n as u32),
                beta * beta_ratio.powu(n as u32),
            ),
            Family::Example(e) => e.pair(n),
        }
    }

    /// Upper bounds for `(sum_{k>cutoff} |alpha_k|^2)^{1/2}` and the same for beta.
    fn tail_l2(&self, cutoff: usize) -> (f64, f64) {
        match self {
            Family::Zero => (0.0, 0.0),
            Family::PowerLaw { alpha, beta, exponent } => {
                let t = power_tail(*exponent, cutoff);
                (alpha.norm() * t, beta.norm() * t)
            }
            Family::Geometric { alpha, alpha_ratio, beta, beta_ratio } => (
                geometric_tail(alpha.norm(), alpha_ratio.norm(), cutoff),
                geometric_tail(beta.norm(), beta_ratio.norm(), cutoff),
            ),
            Family::Example(e) => e.tail_l2(cutoff),
        }
    }
}

/// `(sum_{k>cutoff} k^{-2p})^{1/2} <= (cutoff^{1-2p} / (2p - 1))^{1/2}`.
pub(crate) fn power_tail(exponent: f64, cutoff: usize) -> f64 {
    if exponent <= 0.5 {
        return f64::INFINITY;
    }
    if cutoff == 0 {
        // k = 1 term plus the integral from 1
        return (1.0 + 1.0 / (2.0 * exponent - 1.0)).sqrt();
    }
    ((cutoff as f64).powf(1.0 - 2.0 * exponent) / (2.0 * exponent - 1.0)).sqrt()
}

fn geometric_tail(scale: f64, ratio: f64, cutoff: usize) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    scale * ratio.powi(cutoff as i32 + 1) / (1.0 - ratio * ratio).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    /// Finite list; `exhaustible` lists (from moments) cannot be read past
    /// their end, the others are zero beyond it.
    Listed {
        alpha: Vec<C64>,
        beta: Vec<C64>,
        exhaustible: bool,
    },
    Family(Family),
}

/// Generator `n -> (alpha_n, beta_n)` with a provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSequence {
    source: Source,
    provenance: Provenance,
    swapped: bool,
}

impl ParameterSequence {
    pub fn zero() -> Self {
        Self::family(Family::Zero)
    }

    pub fn family(family: Family) -> Self {
        ParameterSequence {
            source: Source::Family(family),
            provenance: Provenance::Family,
            swapped: false,
        }
    }

    /// Finitely supported parameters, zero after the lists end. Validated
    /// eagerly for `alpha_n beta_n = 1`.
    pub fn explicit(alpha: Vec<C64>, beta: Vec<C64>) -> Result<Self> {
        Self::listed(alpha, beta, false, Provenance::Explicit)
    }

    pub fn from_moments(alpha: Vec<C64>, beta: Vec<C64>) -> Result<Self> {
        Self::listed(alpha, beta, true, Provenance::FromMoments)
    }

    fn listed(
        mut alpha: Vec<C64>,
        mut beta: Vec<C64>,
        exhaustible: bool,
        provenance: Provenance,
    ) -> Result<Self> {
        if exhaustible && alpha.len() != beta.len() {
            return Err(Error::InvalidSpec("alpha and beta lists differ in length".into()));
        }
        let len = alpha.len().max(beta.len());
        alpha.resize(len, ZERO);
        beta.resize(len, ZERO);
        if let Some(i) = (0..len).find(|&i| alpha[i] * beta[i] == ONE) {
            return Err(Error::DegenerateStep(i));
        }
        Ok(ParameterSequence {
            source: Source::Listed { alpha, beta, exhaustible },
            provenance,
            swapped: false,
        })
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The sequence with the roles of alpha and beta exchanged.
    pub fn swapped(&self) -> Self {
        ParameterSequence {
            swapped: !self.swapped,
            ..self.clone()
        }
    }

    /// Number of available terms, `None` for unbounded sequences.
    pub fn available(&self) -> Option<usize> {
        match &self.source {
            Source::Listed { alpha, exhaustible: true, .. } => Some(alpha.len()),
            _ => None,
        }
    }

    pub fn pair(&self, n: usize) -> Result<(C64, C64)> {
        if n == 0 {
            return Err(Error::InvalidSpec("Baxter parameters are indexed from 1".into()));
        }
        let (a, b) = match &self.source {
            Source::Listed { alpha, beta, exhaustible } => {
                if n <= alpha.len() {
                    (alpha[n - 1], beta[n - 1])
                } else if *exhaustible {
                    return Err(Error::ParametersExhausted {
                        available: alpha.len(),
                        requested: n,
                    });
                } else {
                    (ZERO, ZERO)
                }
            }
            Source::Family(f) => f.pair(n),
        };
        Ok(if self.swapped { (b, a) } else { (a, b) })
    }

    pub fn alpha(&self, n: usize) -> Result<C64> {
        Ok(self.pair(n)?.0)
    }

    pub fn beta(&self, n: usize) -> Result<C64> {
        Ok(self.pair(n)?.1)
    }

    /// The first `count` terms, i.e. the sequence truncated at `count`.
    pub fn take(&self, count: usize) -> Result<Coefficients> {
        let mut alpha = Vec::with_capacity(count);
        let mut beta = Vec::with_capacity(count);
        for n in 1..=count {
            let (a, b) = self.pair(n)?;
            alpha.push(a);
            beta.push(b);
        }
        Ok(Coefficients { alpha, beta })
    }

    /// Upper bounds on the l2 norms of the alpha and beta tails beyond `cutoff`.
    pub fn tail_l2(&self, cutoff: usize) -> (f64, f64) {
        let (a, b) = match &self.source {
            Source::Listed { alpha, beta, exhaustible } => {
                if cutoff >= alpha.len() {
                    if *exhaustible {
                        (f64::INFINITY, f64::INFINITY)
                    } else {
                        (0.0, 0.0)
                    }
                } else {
                    let tail = |v: &[C64]| v[cutoff..].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                    let exhausted = if *exhaustible { f64::INFINITY } else { 0.0 };
                    (tail(alpha) + exhausted, tail(beta) + exhausted)
                }
            }
            Source::Family(f) => f.tail_l2(cutoff),
        };
        if self.swapped {
            (b, a)
        } else {
            (a, b)
        }
    }
}

/// Materialized, truncated parameters: `alpha_n`, `beta_n` for
/// `1 <= n <= len()`, zero beyond.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coefficients {
    alpha: Vec<C64>,
    beta: Vec<C64>,
}

impl Coefficients {
    pub fn new(alpha: Vec<C64>, beta: Vec<C64>) -> Self {
        let len = alpha.len().max(beta.len());
        let (mut alpha, mut beta) = (alpha, beta);
        alpha.resize(len, ZERO);
        beta.resize(len, ZERO);
        Coefficients { alpha, beta }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    #[inline]
    pub fn alpha(&self, n: usize) -> C64 {
        if n >= 1 && n <= self.alpha.len() {
            self.alpha[n - 1]
        } else {
            ZERO
        }
    }

    #[inline]
    pub fn beta(&self, n: usize) -> C64 {
        if n >= 1 && n <= self.beta.len() {
            self.beta[n - 1]
        } else {
            ZERO
        }
    }

    /// `alpha_1, alpha_2, ...` as a slice.
    pub fn alphas(&self) -> &[C64] {
        &self.alpha
    }

    pub fn betas(&self) -> &[C64] {
        &self.beta
    }

    pub fn swapped(&self) -> Self {
        Coefficients {
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
        }
    }

    pub fn l2_norms(&self) -> (f64, f64) {
        let n = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        (n(&self.alpha), n(&self.beta))
    }

    /// First `n` with `alpha_n beta_n = 1`.
    pub fn degenerate_index(&self) -> Option<usize> {
        (1..=self.len()).find(|&n| self.alpha(n) * self.beta(n) == ONE)
    }
}

/// Serializable description of a parameter sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamSpec {
    Zero,
    Explicit {
        alpha: Vec<C64>,
        #[serde(default)]
        beta: Vec<C64>,
    },
    PowerLaw {
        alpha: C64,
        beta: C64,
        exponent: f64,
    },
    Geometric {
        alpha: C64,
        alpha_ratio: C64,
        beta: C64,
        beta_ratio: C64,
    },
    Example1 {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        beta_rule: BetaRule,
        #[serde(default = "default_start")]
        start: usize,
    },
    Example2 {
        #[serde(default = "default_gamma")]
        gamma: f64,
        terms: Vec<ExampleTerm>,
        #[serde(default)]
        beta_rule: BetaRule,
        #[serde(default = "default_start")]
        start: usize,
    },
    FromMoments {
        measure: MeasureSpec,
        order: usize,
    },
}

fn default_epsilon() -> f64 {
    0.1
}
fn default_c() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    0.75
}
fn default_start() -> usize {
    1
}

impl ParamSpec {
    pub fn build(&self) -> Result<ParameterSequence> {
        match self {
            ParamSpec::Zero => Ok(ParameterSequence::zero()),
            ParamSpec::Explicit { alpha, beta } => {
                ParameterSequence::explicit(alpha.clone(), beta.clone())
            }
            ParamSpec::PowerLaw { alpha, beta, exponent } => {
                Ok(ParameterSequence::family(Family::PowerLaw {
                    alpha: *alpha,
                    beta: *beta,
                    exponent: *exponent,
                }))
            }
            ParamSpec::Geometric { alpha, alpha_ratio, beta, beta_ratio } => {
                Ok(ParameterSequence::family(Family::Geometric {
                    alpha: *alpha,
                    alpha_ratio: *alpha_ratio,
                    beta: *beta,
                    beta_ratio: *beta_ratio,
                }))
            }
            ParamSpec::Example1 { .. } | ParamSpec::Example2 { .. } => {
                let e = self.example().expect("example variant");
                e.validate()?;
                Ok(ParameterSequence::family(Family::Example(e)))
            }
            ParamSpec::FromMoments { measure, order } => {
                measure.validate()?;
                let table = measure.moment_table(order + 1)?;
                baxter_params_from_moments(&table, *order)
            }
        }
    }

    /// The example description for the two example variants.
    pub fn example(&self) -> Option<ExampleParams> {
        match self {
            ParamSpec::Example1 { epsilon, c, beta_rule, start } => Some(ExampleParams {
                kind: ExampleKind::Example1 { epsilon: *epsilon, c: *c },
                beta_rule: *beta_rule,
                start: *start,
            }),
            ParamSpec::Example2 { gamma, terms, beta_rule, start } => Some(ExampleParams {
                kind: ExampleKind::Example2 {
                    gamma: *gamma,
                    terms: terms.clone(),
                },
                beta_rule: *beta_rule,
                start: *start,
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn explicit_lists_pad_with_zeros() {
        let p = ParameterSequence::explicit(vec![c(0.5)], vec![c(0.1), c(0.2)]).unwrap();
        assert_eq!(p.pair(2).unwrap(), (ZERO, c(0.2)));
        assert_eq!(p.pair(7).unwrap(), (ZERO, ZERO));
        assert_eq!(p.provenance(), Provenance::Explicit);
        assert!(p.pair(0).is_err());
    }

    #[test]
    fn explicit_lists_validated_eagerly() {
        let err = ParameterSequence::explicit(vec![c(0.1), c(2.0)], vec![c(0.1), c(0.5)]);
        assert_eq!(err, Err(Error::DegenerateStep(1)));
    }

    #[test]
    fn moment_lists_are_exhaustible() {
        let p = ParameterSequence::from_moments(vec![c(0.1)], vec![c(0.2)]).unwrap();
        assert_eq!(
            p.pair(2),
            Err(Error::ParametersExhausted { available: 1, requested: 2 })
        );
        assert_eq!(p.tail_l2(1).0, f64::INFINITY);
    }

    #[test]
    fn swapping_exchanges_roles() {
        let p = ParameterSequence::family(Family::PowerLaw {
            alpha: c(1.0),
            beta: c(2.0),
            exponent: 1.0,
        });
        let s = p.swapped();
        assert_eq!(s.pair(2).unwrap(), (c(1.0), c(0.5)));
        assert_eq!(s.swapped(), p);
    }

    #[test]
    fn power_tail_dominates_partial_sums() {
        for &p in &[0.6, 0.8, 1.2] {
            for &cut in &[1usize, 10, 100] {
                let direct: f64 = ((cut + 1)..200_000).map(|k| (k as f64).powf(-2.0 * p)).sum();
                assert!(power_tail(p, cut) >= direct.sqrt(), "p {p} cut {cut}");
            }
        }
        assert_eq!(power_tail(0.5, 10), f64::INFINITY);
    }

    #[test]
    fn geometric_tail_is_exact_bound() {
        let p = ParameterSequence::family(Family::Geometric {
            alpha: c(0.5),
            alpha_ratio: c(0.5),
            beta: ZERO,
            beta_ratio: ZERO,
        });
        let direct: f64 = (6..200).map(|k| (0.5 * 0.5f64.powi(k)).powi(2)).sum();
        let (a, b) = p.tail_l2(5);
        assert!((a - direct.sqrt()).abs() < 1e-15);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn spec_json_builds_families() {
        let spec: ParamSpec =
            serde_json::from_str(r#"{"type":"power_law","alpha":[0.5,0],"beta":[0.5,0],"exponent":0.8}"#)
                .unwrap();
        let p = spec.build().unwrap();
        assert!((p.alpha(1).unwrap() - c(0.5)).norm() < 1e-15);
        let spec: ParamSpec = serde_json::from_str(r#"{"type":"example1"}"#).unwrap();
        let p = spec.build().unwrap();
        assert!((p.alpha(1).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn take_truncates() {
        let p = ParameterSequence::family(Family::PowerLaw {
            alpha: c(1.0),
            beta: c(1.0),
            exponent: 1.0,
        });
        let k = p.take(3).unwrap();
        assert_eq!(k.len(), 3);
        assert_eq!(k.alpha(4), ZERO);
        assert_eq!(k.beta(3), c(1.0 / 3.0));
    }
}
