//! Complex measures on the unit circle and their trigonometric moments
//! `mu_k = int zeta^{-k} dmu`, with arc measure normalized to `dtheta / 2pi`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fmt_f64, root_of_unity, C64, ONE, ZERO};

pub const DEFAULT_NODES: usize = 2048;

fn default_nodes() -> usize {
    DEFAULT_NODES
}

/// A point mass `weight * delta(e^{i angle})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub angle: f64,
    pub weight: C64,
}

/// Strictly positive real densities for the OPUC specialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityRule {
    /// `constant + sum_k cos[k-1] cos(k theta) + sin[k-1] sin(k theta)`.
    Trig {
        constant: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Poisson kernel `(1 - r^2) / |1 - r e^{i(theta - angle)}|^2`.
    Poisson { radius: f64, angle: f64 },
    /// `exp(strength * cos(theta - angle))`.
    ExpCos { strength: f64, angle: f64 },
}

impl DensityRule {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            DensityRule::Trig { constant, cos, sin } => {
                let mut w = *constant;
                for (k, a) in cos.iter().enumerate() {
                    w += a * ((k + 1) as f64 * theta).cos();
                }
                for (k, b) in sin.iter().enumerate() {
                    w += b * ((k + 1) as f64 * theta).sin();
                }
                w
            }
            DensityRule::Poisson { radius, angle } => {
                let r = *radius;
                let d = ONE - C64::from_polar(r, theta - angle);
                (1.0 - r * r) / d.norm_sqr()
            }
            DensityRule::ExpCos { strength, angle } => (strength * (theta - angle).cos()).exp(),
        }
    }
}

/// Symbolic description of a complex Borel measure on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureSpec {
    /// Normalized arc measure, `mu_0 = 1`.
    Lebesgue,
    /// Density `w(zeta) = sum_k c_k zeta^{-k}` against normalized arc measure,
    /// so that `mu_k = c_{-k}`. A missing `c_0` defaults to 1.
    TrigDensity {
        #[serde(with = "index_keys")]
        coefficients: BTreeMap<i64, C64>,
    },
    PointMasses { atoms: Vec<Atom> },
    /// Explicit table `(k, mu_k)`, complete on a contiguous range `[-K, K]`.
    RawMoments { moments: Vec<(i64, C64)> },
    /// Strictly positive real density, moments by trapezoid quadrature.
    OpucDensity {
        rule: DensityRule,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    /// Sum of measures.
    Sum { parts: Vec<MeasureSpec> },
}

impl MeasureSpec {
    pub fn lebesgue_plus_atom(angle: f64, weight: C64) -> Self {
        MeasureSpec::Sum {
            parts: vec![
                MeasureSpec::Lebesgue,
                MeasureSpec::PointMasses {
                    atoms: vec![Atom { angle, weight }],
                },
            ],
        }
    }

    /// Raw table from the values `mu_{-K}, ..., mu_K`.
    pub fn raw(values: &[C64]) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(Error::InvalidSpec(
                "raw moment table needs an odd number of entries".into(),
            ));
        }
        let k = (values.len() / 2) as i64;
        Ok(MeasureSpec::RawMoments {
            moments: (-k..=k).zip(values.iter().copied()).collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MeasureSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureSpec::RawMoments { moments } => {
                raw_halfwidth(moments).map(|_| ())
            }
            MeasureSpec::OpucDensity { rule, nodes } => {
                if *nodes == 0 {
                    return Err(Error::InvalidSpec("quadrature needs at least one node".into()));
                }
                if let DensityRule::Poisson { radius, .. } = rule {
                    if !(0.0..1.0).contains(radius) {
                        return Err(Error::InvalidSpec(format!(
                            "Poisson radius {radius} outside [0, 1)"
                        )));
                    }
                }
                for j in 0..*nodes {
                    let w = rule.eval(TAU * j as f64 / *nodes as f64);
                    if !(w > 0.0) || !w.is_finite() {
                        return Err(Error::InvalidSpec(format!(
                            "density is not strictly positive at node {j} (value {w})"
                        )));
                    }
                }
                Ok(())
            }
            MeasureSpec::Sum { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidSpec("empty sum of measures".into()));
                }
                parts.iter().try_for_each(MeasureSpec::validate)
            }
            MeasureSpec::Lebesgue
            | MeasureSpec::TrigDensity { .. }
            | MeasureSpec::PointMasses { .. } => Ok(()),
        }
    }

    /// True when the measure is real and nonnegative by construction, so that
    /// `mu_{-k} = conj(mu_k)`.
    pub fn is_positive(&self) -> bool {
        match self {
            MeasureSpec::Lebesgue | MeasureSpec::OpucDensity { .. } => true,
            MeasureSpec::PointMasses { atoms } => {
                atoms.iter().all(|a| a.weight.im == 0.0 && a.weight.re >= 0.0)
            }
            MeasureSpec::Sum { parts } => parts.iter().all(MeasureSpec::is_positive),
            MeasureSpec::TrigDensity { .. } | MeasureSpec::RawMoments { .. } => false,
        }
    }

    /// Density with respect to normalized arc measure at angle `theta`, or
    /// `None` when the measure is only known through its moments.
    pub fn density(&self, theta: f64) -> Option<C64> {
        match self {
            MeasureSpec::Lebesgue => Some(ONE),
            MeasureSpec::TrigDensity { coefficients } => {
                let mut w = if coefficients.contains_key(&0) { ZERO } else { ONE };
                for (&k, &c) in coefficients {
                    w += c * C64::from_polar(1.0, -(k as f64) * theta);
                }
                Some(w)
            }
            MeasureSpec::PointMasses { .. } => Some(ZERO),
            MeasureSpec::RawMoments { .. } => None,
            MeasureSpec::OpucDensity { rule, .. } => Some(C64::new(rule.eval(theta), 0.0)),
            MeasureSpec::Sum { parts } => parts
                .iter()
                .map(|p| p.density(theta))
                .try_fold(ZERO, |acc, d| d.map(|d| acc + d)),
        }
    }

    fn atoms(&self, out: &mut Vec<Atom>) {
        match self {
            MeasureSpec::PointMasses { atoms } => out.extend(atoms.iter().cloned()),
            MeasureSpec::Sum { parts } => parts.iter().for_each(|p| p.atoms(out)),
            _ => {}
        }
    }

    /// Integral `int f dmu`: the absolutely continuous part by an `nodes`-point
    /// trapezoid rule on the circle, atoms exactly.
    pub fn integrate<F: Fn(C64) -> C64>(&self, f: F, nodes: usize) -> Result<C64> {
        let mut atoms = Vec::new();
        self.atoms(&mut atoms);
        let mut total: C64 = atoms
            .iter()
            .map(|a| a.weight * f(C64::from_polar(1.0, a.angle)))
            .sum();
        let mut smooth = ZERO;
        for j in 0..nodes {
            let theta = TAU * j as f64 / nodes as f64;
            let w = self.density(theta).ok_or_else(|| {
                Error::InvalidSpec("raw moment tables cannot be integrated pointwise".into())
            })?;
            if w != ZERO {
                smooth += w * f(root_of_unity(j as i64, nodes));
            }
        }
        total += smooth / nodes as f64;
        Ok(total)
    }

    /// `mu_k` computed by quadrature of the density (atoms exact), for any
    /// density-bearing spec.
    pub fn quadrature_moment(&self, k: i64, nodes: usize) -> Result<C64> {
        let mut atoms = Vec::new();
        self.atoms(&mut atoms);
        let mut total: C64 = atoms
            .iter()
            .map(|a| a.weight * C64::from_polar(1.0, -(k as f64) * a.angle))
            .sum();
        let mut smooth = ZERO;
        for j in 0..nodes {
            let theta = TAU * j as f64 / nodes as f64;
            let w = self.density(theta).ok_or_else(|| {
                Error::InvalidSpec("raw moment tables have no density".into())
            })?;
            smooth += w * root_of_unity(-k * j as i64, nodes);
        }
        total += smooth / nodes as f64;
        Ok(total)
    }

    /// `mu_k = int zeta^{-k} dmu`.
    pub fn moment(&self, k: i64) -> Result<C64> {
        match self {
            MeasureSpec::Lebesgue => Ok(if k == 0 { ONE } else { ZERO }),
            MeasureSpec::TrigDensity { coefficients } => Ok(match coefficients.get(&-k) {
                Some(&c) => c,
                None if k == 0 => ONE,
                None => ZERO,
            }),
            MeasureSpec::PointMasses { atoms } => Ok(atoms
                .iter()
                .map(|a| a.weight * C64::from_polar(1.0, -(k as f64) * a.angle))
                .sum()),
            MeasureSpec::RawMoments { moments } => {
                let halfwidth = raw_halfwidth(moments)?;
                moments
                    .iter()
                    .find(|(j, _)| *j == k)
                    .map(|&(_, v)| v)
                    .ok_or(Error::IndexOutOfRange { index: k, halfwidth })
            }
            MeasureSpec::OpucDensity { nodes, .. } => self.quadrature_moment(k, *nodes),
            MeasureSpec::Sum { parts } => parts.iter().map(|p| p.moment(k)).sum(),
        }
    }

    pub fn moment_table(&self, halfwidth: usize) -> Result<MomentTable> {
        let k = halfwidth as i64;
        let values = (-k..=k).map(|j| self.moment(j)).collect::<Result<Vec<_>>>()?;
        Ok(MomentTable { halfwidth, values })
    }
}

fn raw_halfwidth(moments: &[(i64, C64)]) -> Result<usize> {
    let mut seen: BTreeMap<i64, C64> = BTreeMap::new();
    for &(k, v) in moments {
        if seen.insert(k, v).is_some() {
            return Err(Error::InvalidSpec(format!("duplicate moment index {k}")));
        }
    }
    let k = seen.keys().map(|k| k.unsigned_abs()).max().unwrap_or(0) as i64;
    if seen.len() as i64 != 2 * k + 1 || !(-k..=k).all(|j| seen.contains_key(&j)) {
        return Err(Error::InvalidSpec(format!(
            "raw moment table is not complete on [-{k}, {k}]"
        )));
    }
    Ok(k as usize)
}

/// Two-sided table `mu_k`, `|k| <= halfwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub halfwidth: usize,
    values: Vec<C64>,
}

impl MomentTable {
    pub fn from_values(values: Vec<C64>) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(Error::InvalidSpec(
                "moment table needs an odd number of entries".into(),
            ));
        }
        Ok(MomentTable {
            halfwidth: values.len() / 2,
            values,
        })
    }

    pub fn get(&self, k: i64) -> Result<C64> {
        if k.unsigned_abs() as usize > self.halfwidth {
            return Err(Error::IndexOutOfRange {
                index: k,
                halfwidth: self.halfwidth,
            });
        }
        Ok(self.values[(k + self.halfwidth as i64) as usize])
    }

    /// Values `mu_{-K}, ..., mu_K`.
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn total_mass(&self) -> C64 {
        self.values[self.halfwidth]
    }

    /// The table of `mu / mu_0`.
    pub fn normalized(&self) -> Result<MomentTable> {
        let m0 = self.total_mass();
        if m0 == ZERO {
            return Err(Error::ZeroDeterminant(1));
        }
        Ok(MomentTable {
            halfwidth: self.halfwidth,
            values: self.values.iter().map(|v| v / m0).collect(),
        })
    }

    /// CSV with columns `k, re, im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "re", "im"])?;
        let k0 = self.halfwidth as i64;
        for (i, v) in self.values.iter().enumerate() {
            let k = i as i64 - k0;
            w.write_record([k.to_string(), fmt_f64(v.re), fmt_f64(v.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// JSON object keys are strings; tagged enums buffer their content, so the
/// integer keys are parsed by hand.
mod index_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::numeric::C64;

    pub fn serialize<S: Serializer>(map: &BTreeMap<i64, C64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<i64, C64>, D::Error> {
        BTreeMap::<String, C64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<i64>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("coefficient index {k:?} is not an integer")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn lebesgue_moments() {
        let m = MeasureSpec::Lebesgue;
        assert_eq!(m.moment(0).unwrap(), ONE);
        assert_eq!(m.moment(3).unwrap(), ZERO);
        let t = m.moment_table(2).unwrap();
        assert_eq!(t.values(), &[ZERO, ZERO, ONE, ZERO, ZERO]);
    }

    #[test]
    fn trig_density_character_orthogonality() {
        let (a, b) = (c(0.2, 0.1), c(-0.3, 0.05));
        let m = MeasureSpec::TrigDensity {
            coefficients: [(1, a), (-1, b)].into_iter().collect(),
        };
        assert_eq!(m.moment(-1).unwrap(), a);
        assert_eq!(m.moment(1).unwrap(), b);
        assert_eq!(m.moment(0).unwrap(), ONE);

        let m = MeasureSpec::TrigDensity {
            coefficients: [(1, c(0.5, 0.0)), (-1, c(1.0 / 3.0, 0.0))].into_iter().collect(),
        };
        let t = m.moment_table(1).unwrap();
        assert_eq!(t.get(-1).unwrap(), c(0.5, 0.0));
        assert_eq!(t.get(0).unwrap(), ONE);
        assert_eq!(t.get(1).unwrap(), c(1.0 / 3.0, 0.0));
    }

    #[test]
    fn point_mass_closed_form() {
        let m = MeasureSpec::PointMasses {
            atoms: vec![Atom { angle: 0.0, weight: c(0.3, 0.0) }],
        };
        assert_eq!(m.moment(5).unwrap(), c(0.3, 0.0));
        let m = MeasureSpec::PointMasses {
            atoms: vec![Atom { angle: 0.5, weight: c(0.0, 2.0) }],
        };
        let expect = c(0.0, 2.0) * C64::from_polar(1.0, -1.5);
        assert!(close(m.moment(3).unwrap(), expect, 1e-15));
    }

    #[test]
    fn lebesgue_plus_atom_table() {
        let m = MeasureSpec::lebesgue_plus_atom(0.0, c(0.3, 0.0));
        let t = m.moment_table(1).unwrap();
        assert!(close(t.get(-1).unwrap(), c(0.3, 0.0), 1e-15));
        assert!(close(t.get(0).unwrap(), c(1.3, 0.0), 1e-15));
        assert!(close(t.get(1).unwrap(), c(0.3, 0.0), 1e-15));
        assert!(m.is_positive());
    }

    #[test]
    fn raw_table_lookup_and_errors() {
        let m = MeasureSpec::raw(&[c(1.0 / 3.0, 0.0), ONE, c(0.5, 0.0)]).unwrap();
        assert_eq!(m.moment(1).unwrap(), c(0.5, 0.0));
        assert_eq!(
            m.moment(2),
            Err(Error::IndexOutOfRange { index: 2, halfwidth: 1 })
        );
        let gap = MeasureSpec::RawMoments {
            moments: vec![(-1, ONE), (0, ONE), (2, ONE)],
        };
        assert!(gap.validate().is_err());
        let dup = MeasureSpec::RawMoments {
            moments: vec![(0, ONE), (0, ONE)],
        };
        assert!(dup.validate().is_err());
        assert!(MeasureSpec::raw(&[ONE, ONE]).is_err());
    }

    #[test]
    fn quadrature_reproduces_trig_density() {
        let m = MeasureSpec::TrigDensity {
            coefficients: [(1, c(0.1, 0.2)), (-2, c(-0.15, 0.0)), (3, c(0.0, 0.05))]
                .into_iter()
                .collect(),
        };
        for k in -6..=6 {
            let q = m.quadrature_moment(k, 16).unwrap();
            assert!(close(q, m.moment(k).unwrap(), 1e-12), "k = {k}");
        }
    }

    #[test]
    fn opuc_density_validation() {
        let ok = MeasureSpec::OpucDensity {
            rule: DensityRule::Trig { constant: 1.0, cos: vec![0.5], sin: vec![] },
            nodes: 64,
        };
        assert!(ok.validate().is_ok());
        // 1 + cos(theta) vanishes at theta = pi, which is a node
        let bad = MeasureSpec::OpucDensity {
            rule: DensityRule::Trig { constant: 1.0, cos: vec![1.0], sin: vec![] },
            nodes: 64,
        };
        assert!(bad.validate().is_err());
        let bad = MeasureSpec::OpucDensity {
            rule: DensityRule::Poisson { radius: 1.0, angle: 0.0 },
            nodes: 64,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn poisson_moments_are_geometric() {
        let (r, phi) = (0.6, 0.4);
        let m = MeasureSpec::OpucDensity {
            rule: DensityRule::Poisson { radius: r, angle: phi },
            nodes: DEFAULT_NODES,
        };
        for k in -5i64..=5 {
            let expect = C64::from_polar(r.powi(k.abs() as i32), -(k as f64) * phi);
            assert!(close(m.moment(k).unwrap(), expect, 1e-12), "k = {k}");
        }
    }

    #[test]
    fn json_round_trip_and_tags() {
        let text = r#"{"type":"trig_density","coefficients":{"1":[0.5,0.0],"-1":[0.25,0.0]}}"#;
        let m = MeasureSpec::from_json(text).unwrap();
        assert_eq!(m.moment(-1).unwrap(), c(0.5, 0.0));
        let back = serde_json::to_string(&m).unwrap();
        assert_eq!(MeasureSpec::from_json(&back).unwrap(), m);

        let text = r#"{"type":"opuc_density","rule":{"kind":"exp_cos","strength":0.5,"angle":0.0}}"#;
        match MeasureSpec::from_json(text).unwrap() {
            MeasureSpec::OpucDensity { nodes, .. } => assert_eq!(nodes, DEFAULT_NODES),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_export() {
        let t = MeasureSpec::lebesgue_plus_atom(0.0, c(0.5, 0.0))
            .moment_table(1)
            .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "k,re,im\n-1,0.5,0.0\n0,1.5,0.0\n1,0.5,0.0\n");
    }
}
