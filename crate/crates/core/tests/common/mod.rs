#![allow(dead_code)]

use gsw_core::functions::HermiteGaussian;
use gsw_core::scenario::{JobKind, Scenario, TheoremJob};
use gsw_core::weights::WeightFamily;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const BATTERY: &str = include_str!("../../data/battery.toml");

/// O(N·M) reference: `max_j s·x_j − y_j`, smallest index on ties.
pub fn brute_conjugate(xs: &[f64], ys: &[f64], slopes: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut values = Vec::with_capacity(slopes.len());
    let mut arg = Vec::with_capacity(slopes.len());
    for &s in slopes {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for j in 0..xs.len() {
            let v = s * xs[j] - ys[j];
            if v > best.0 {
                best = (v, j);
            }
        }
        values.push(best.0);
        arg.push(best.1);
    }
    (values, arg)
}

pub struct Battery {
    pub family: WeightFamily,
    pub functions: Vec<(String, HermiteGaussian)>,
    pub jobs: Vec<(String, JobKind)>,
}

pub fn battery() -> Battery {
    let s = Scenario::parse(BATTERY).expect("battery manifest parses");
    let family = WeightFamily::from_spec(&s.families[0].spec).unwrap();
    let functions = s.functions.iter().map(|f| (f.id.clone(), f.build().unwrap())).collect();
    let jobs = s.jobs.iter().map(|j| (j.id.clone(), j.kind.clone())).collect();
    Battery { family, functions, jobs }
}

pub fn theorem_job(kind: &JobKind) -> &TheoremJob {
    match kind {
        JobKind::Theorem1(t) | JobKind::Theorem2(t) | JobKind::Theorem3(t) | JobKind::Theorem4(t) | JobKind::PropH(t) | JobKind::Lemma4(t) => t,
        other => panic!("not a theorem job: {other:?}"),
    }
}

/// Random grid of `n` strictly increasing nonnegative abscissae with one of
/// several value shapes (convex, nonconvex, integer-valued with ties, flat).
pub fn random_grid(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut x: f64 = rng.gen_range(0.0..2.0);
    let integer = rng.gen_bool(0.25);
    for _ in 0..n {
        xs.push(x);
        x += if integer { 1.0 } else { rng.gen_range(1e-3..0.5) };
    }
    let shape = rng.gen_range(0..4);
    let ys = xs
        .iter()
        .map(|&x: &f64| match shape {
            0 => x * x / 2.0 + rng.gen_range(-1e-9..1e-9),
            1 => (x * 0.7).sin() * 5.0 + 0.1 * x * x,
            2 => rng.gen_range(-3i32..=3) as f64,
            _ => 0.0,
        })
        .collect();
    (xs, ys)
}
