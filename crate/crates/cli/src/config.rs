//! Experiment configuration: one JSON document, with command-line flags as
//! overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use baxter_lab::measure::MeasureSpec;
use baxter_lab::params::ParamSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamSpec>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    /// Radii of the interior polar grid.
    pub disk_radii: Vec<f64>,
    /// Angles per radius of the interior grid.
    pub disk_angles: usize,
    /// Uniform angles `2 pi j / theta` on the circle.
    pub theta: usize,
    /// Radii `1 - 2^{-j}`, `j = 1..=r`, for the radial pipeline.
    pub r: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            disk_radii: vec![0.3, 0.6, 0.9],
            disk_angles: 8,
            theta: 64,
            r: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Highest order for the oracle check.
    pub order: usize,
    /// Random evaluation points for the oracle check.
    pub points: usize,
    /// Boundary `N` (the limit is read at `2N`).
    pub n: usize,
    /// Boundary cutoff `K`.
    pub cutoff: usize,
    pub tol: f64,
    /// Interior adaptive loop.
    pub n_start: usize,
    pub n_max: usize,
    pub cutoff_max: usize,
    /// Run the radial pipeline and the interchange check in `boundary`.
    pub interchange: bool,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            order: 12,
            points: 20,
            n: 4096,
            cutoff: 1 << 16,
            tol: 1e-6,
            n_start: 64,
            n_max: 1 << 16,
            cutoff_max: 1 << 20,
            interchange: false,
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    1
}

/// Flag values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub cutoff: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub grid_theta: Option<usize>,
    pub grid_r: Option<usize>,
}

impl ExperimentConfig {
    pub fn with_params(params: ParamSpec) -> Self {
        ExperimentConfig {
            measure: None,
            params: Some(params),
            grids: Grids::default(),
            budgets: Budgets::default(),
            out: default_out(),
            seed: default_seed(),
        }
    }

    /// Parses a config, naming the offending field and position on failure.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        match serde_path_to_error::deserialize::<_, ExperimentConfig>(de) {
            Ok(c) => Ok(c),
            Err(e) => {
                let path = e.path().to_string();
                let inner = e.into_inner();
                bail!(
                    "config error at line {}, column {} (field `{}`): {}",
                    inner.line(),
                    inner.column(),
                    path,
                    inner
                )
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(n) = o.n {
            self.budgets.n = n;
        }
        if let Some(k) = o.cutoff {
            self.budgets.cutoff = k;
        }
        if let Some(t) = o.tol {
            self.budgets.tol = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.grid_theta {
            self.grids.theta = t;
            self.grids.disk_angles = t;
        }
        if let Some(r) = o.grid_r {
            self.grids.r = r;
            self.grids.disk_radii = (1..=r).map(|j| j as f64 / (r + 1) as f64).collect();
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.measure, &self.params) {
            (Some(_), Some(_)) => bail!("config holds both `measure` and `params`; give exactly one"),
            (None, None) => bail!("config needs exactly one of `measure` and `params`"),
            _ => {}
        }
        let b = &self.budgets;
        for (name, v) in [
            ("budgets.order", b.order),
            ("budgets.points", b.points),
            ("budgets.n", b.n),
            ("budgets.cutoff", b.cutoff),
            ("budgets.n_start", b.n_start),
            ("budgets.n_max", b.n_max),
            ("budgets.cutoff_max", b.cutoff_max),
        ] {
            if v == 0 {
                bail!("{name} must be positive");
            }
        }
        if !(b.tol > 0.0) {
            bail!("budgets.tol must be positive");
        }
        if b.cutoff < 2 * b.n + 2 {
            bail!("budgets.cutoff = {} is below 2 n + 2 = {}", b.cutoff, 2 * b.n + 2);
        }
        let g = &self.grids;
        if g.disk_radii.is_empty() || g.disk_angles == 0 || g.theta == 0 || g.r == 0 {
            bail!("grids must be nonempty");
        }
        if let Some(r) = g.disk_radii.iter().find(|&&r| !(0.0..1.0).contains(&r)) {
            bail!("grids.disk_radii value {r} is outside [0, 1)");
        }
        Ok(())
    }

    pub fn measure(&self) -> Result<&MeasureSpec> {
        self.measure.as_ref().context("this command needs a `measure` spec")
    }

    pub fn params(&self) -> Result<&ParamSpec> {
        self.params.as_ref().context("this command needs a `params` spec")
    }

    pub fn thetas(&self) -> Vec<f64> {
        let n = self.grids.theta;
        (0..n).map(|j| std::f64::consts::TAU * j as f64 / n as f64).collect()
    }

    /// `1 - 2^{-j}` for `j = 1..=r`.
    pub fn radial_grid(&self) -> Vec<f64> {
        (1..=self.grids.r).map(|j| 1.0 - 0.5f64.powi(j as i32)).collect()
    }
}
