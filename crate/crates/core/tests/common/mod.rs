#![allow(dead_code)]

use std::f64::consts::TAU;

use baxter_lab::measure::{DensityRule, MeasureSpec};
use baxter_lab::params::{Family, ParameterSequence};
use baxter_lab::tauberian::ExampleParams;
use baxter_lab::toeplitz::baxter_table;
use baxter_lab::C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Uniform point in the annulus `lo <= |z| <= hi`.
pub fn point_in_annulus(rng: &mut impl Rng, lo: f64, hi: f64) -> C64 {
    C64::from_polar(rng.gen_range(lo..=hi), rng.gen_range(0.0..TAU))
}

pub fn point_in_disk(rng: &mut impl Rng, radius: f64) -> C64 {
    C64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU))
}

/// Complex number with modulus at most `bound`.
pub fn bounded(rng: &mut impl Rng, bound: f64) -> C64 {
    point_in_disk(rng, bound)
}

/// `{mu_0 = 1, mu_1 = 1/2, mu_{-1} = 1/3}`, zero elsewhere on `|k| <= halfwidth`.
pub fn tridiagonal(halfwidth: usize) -> MeasureSpec {
    let mut v = vec![C64::new(0.0, 0.0); 2 * halfwidth + 1];
    v[halfwidth] = c(1.0);
    v[halfwidth + 1] = c(0.5);
    v[halfwidth - 1] = c(1.0 / 3.0);
    MeasureSpec::raw(&v).unwrap()
}

/// Trigonometric density with random coefficients of modulus at most 0.2.
pub fn random_trig(seed: u64) -> MeasureSpec {
    let mut r = rng(seed);
    let coefficients = (1..=4i64)
        .flat_map(|k| [k, -k])
        .map(|k| (k, bounded(&mut r, 0.2)))
        .collect();
    MeasureSpec::TrigDensity { coefficients }
}

pub fn test_measures() -> Vec<(&'static str, MeasureSpec)> {
    vec![
        ("lebesgue", MeasureSpec::Lebesgue),
        ("tridiagonal", tridiagonal(16)),
        ("lebesgue+atom", MeasureSpec::lebesgue_plus_atom(0.0, c(0.3))),
        ("random trig", random_trig(7)),
    ]
}

pub fn positive_measures() -> Vec<(&'static str, MeasureSpec)> {
    vec![
        (
            "poisson",
            MeasureSpec::OpucDensity {
                rule: DensityRule::Poisson { radius: 0.5, angle: 0.3 },
                nodes: 2048,
            },
        ),
        (
            "exp-cos",
            MeasureSpec::OpucDensity {
                rule: DensityRule::ExpCos { strength: 0.7, angle: 1.0 },
                nodes: 2048,
            },
        ),
        (
            "trig",
            MeasureSpec::OpucDensity {
                rule: DensityRule::Trig { constant: 1.0, cos: vec![0.5, 0.1], sin: vec![0.3] },
                nodes: 2048,
            },
        ),
    ]
}

/// Smooth densities (no atoms, no raw tables).
pub fn smooth_measures() -> Vec<(&'static str, MeasureSpec)> {
    let mut v = vec![("random trig", random_trig(7)), ("random trig b", random_trig(11))];
    v.extend(positive_measures());
    v
}

/// Random square-summable parameters of length `len`, `|alpha_k|, |beta_k| <= 0.9 k^{-0.6}`.
pub fn random_explicit(rng: &mut impl Rng, len: usize) -> ParameterSequence {
    let scale = |k: usize| 0.9 * (k as f64).powf(-0.6);
    let alpha = (1..=len).map(|k| bounded(rng, scale(k))).collect();
    let beta = (1..=len).map(|k| bounded(rng, scale(k))).collect();
    ParameterSequence::explicit(alpha, beta).unwrap()
}

/// Oracle parameters of the tridiagonal table, zero beyond `order`.
pub fn tridiagonal_params(order: usize) -> ParameterSequence {
    let table = tridiagonal(order + 2).moment_table(order + 2).unwrap();
    let rows = baxter_table(&table, order).unwrap();
    ParameterSequence::explicit(
        rows.iter().map(|r| r.alpha).collect(),
        rows.iter().map(|r| r.beta).collect(),
    )
    .unwrap()
}

pub fn power_law() -> ParameterSequence {
    ParameterSequence::family(Family::PowerLaw { alpha: c(0.5), beta: c(0.5), exponent: 0.8 })
}

pub fn example1() -> ParameterSequence {
    ParameterSequence::family(Family::Example(ExampleParams::example1(0.1, 1.0)))
}

pub fn example2() -> ParameterSequence {
    ParameterSequence::family(Family::Example(ExampleParams::example2(
        0.75,
        &[(c(1.0), 1.0), (c(0.5), 2.0)],
    )))
}

pub fn families() -> Vec<(&'static str, ParameterSequence)> {
    vec![
        ("tridiagonal oracle", tridiagonal_params(40)),
        ("power law", power_law()),
        (
            "geometric",
            ParameterSequence::family(Family::Geometric {
                alpha: C64::new(0.6, 0.2),
                alpha_ratio: C64::new(0.7, 0.1),
                beta: C64::new(-0.3, 0.5),
                beta_ratio: C64::new(0.2, -0.6),
            }),
        ),
        ("random", random_explicit(&mut rng(3), 300)),
        (
            "example1",
            ParameterSequence::family(Family::Example(ExampleParams::example1(0.1, 1.0).with_start(2))),
        ),
        ("example2", example2()),
    ]
}

pub fn rel(a: C64, b: C64) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        0.0
    } else {
        d / b.norm()
    }
}

pub fn rel_vec(a: [C64; 2], b: [C64; 2]) -> f64 {
    let d = (a[0] - b[0]).norm() + (a[1] - b[1]).norm();
    if d == 0.0 {
        0.0
    } else {
        d / (b[0].norm() + b[1].norm())
    }
}
