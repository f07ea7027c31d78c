//! The six seminorm families, evaluated as log-space sups with truncation
//! certificates.
//!
//! | name | domain | weight |
//! |------|--------|--------|
//! | `p_{ν,k}` | `z ∈ ℂⁿ` | `(1+‖z‖)^k / e^{φ_ν(‖Im z‖)}` |
//! | `𝓡_{m,ν}` | `x`, `α` | `(1+‖x‖)^m e^{ψ_ν*(|α|)} / α!` |
//! | `‖·‖_{m,ψ_ν*}` | `x`, `|α| ≤ m`, `β` | `|x^β| e^{ψ_ν*(|β|)} / |β|!` |
//! | `N_{ν,m}` | `x`, `|α| ≤ m`, `k` | `(1+‖x‖)^k e^{ψ_ν*(k)} / k!` |
//! | `q_{m,ν}` | `x`, `|α| ≤ m` | `e^{φ_ν*(‖x‖)}` |
//! | `𝓝_{ν,k}` | `z ∈ ℂⁿ` | `(1+‖z‖)^k / e^{(ψ_ν*)*(ln(1+‖Im z‖))}` |

use std::cell::RefCell;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conjugate::{biconjugate_adaptive, conjugate_adaptive, fmt_f64, young_conjugate, ADAPTIVE_TOL};
use crate::error::{Error, Result};
use crate::functions::{HermiteGaussian, MultiIndex, SERIES_CAP};
use crate::numeric::{ln_factorial, ln_multi_factorial, multi_indices_of_order, multi_indices_up_to};
use crate::search::{sup_search, RadialCache, SupSearchConfig};
use crate::weights::WeightFamily;

/// Default truncation budget for `|α|`, `|β|` and `k`.
pub const DEFAULT_BUDGET: u32 = 60;
/// A tail certificate holds when the extrapolated tail is below this
/// fraction of the value.
pub const TAIL_FRACTION: f64 = 1e-6;

/// Where a sup was attained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<MultiIndex>,
    /// `|β|` or `k` of the winning term.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
}

/// A computed seminorm with its certificate data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormValue {
    pub name: String,
    pub value: f64,
    /// `ln value`; `None` for the zero function.
    pub log_value: Option<f64>,
    pub witness: Witness,
    /// Truncation order used (`α_max`, `β_max` or `k_max`).
    pub truncation: Option<u32>,
    pub tail_bound: f64,
    /// Geometric shell ratio behind the tail bound.
    pub tail_ratio: Option<f64>,
    pub box_half_width: f64,
    pub stable: bool,
    pub converged: bool,
}

impl SeminormValue {
    fn zero(name: String) -> Self {
        Self {
            name,
            value: 0.0,
            log_value: None,
            witness: Witness::default(),
            truncation: None,
            tail_bound: 0.0,
            tail_ratio: None,
            box_half_width: 0.0,
            stable: true,
            converged: true,
        }
    }

    /// `ln value`, `−∞` for zero.
    pub fn ln(&self) -> f64 {
        self.log_value.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Shell-based tail certificate: the last three shell maxima define a
/// geometric ratio `r`; the tail is `last · r/(1−r)`.
fn tail_certificate(shells: &[f64], log_value: f64) -> (f64, Option<f64>, bool) {
    if shells.len() < 3 {
        return (0.0, None, true);
    }
    let k = shells.len();
    let (a, b, c) = (shells[k - 3], shells[k - 2], shells[k - 1]);
    if c == f64::NEG_INFINITY {
        return (0.0, Some(0.0), true);
    }
    let lr = (b - a).max(c - b);
    if !(lr < 0.0) {
        return (f64::INFINITY, Some(lr.exp()), false);
    }
    let r = lr.exp();
    let log_tail = c + r.ln() - (-r).ln_1p();
    let tail = log_tail.exp();
    (tail, Some(r), log_tail <= log_value + TAIL_FRACTION.ln())
}

fn finish(name: String, out: crate::search::SupOutcome, witness: Witness, truncation: Option<u32>, with_tail: bool) -> SeminormValue {
    let (tail_bound, tail_ratio, tail_ok) = if with_tail {
        tail_certificate(&out.shells, out.log_value)
    } else {
        (0.0, None, true)
    };
    SeminormValue {
        name,
        value: out.log_value.exp(),
        log_value: Some(out.log_value),
        witness,
        truncation,
        tail_bound,
        tail_ratio,
        box_half_width: out.half_width,
        stable: out.stable,
        converged: out.stable && tail_ok,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_budget(budget: u32) -> Result<()> {
    if budget > SERIES_CAP {
        return Err(Error::InvalidParameter(format!("budget {budget} exceeds the cap {SERIES_CAP}")));
    }
    Ok(())
}

/// `ψ_ν*(k)` for `k = 0..=k_max`.
pub fn psi_star_table(family: &WeightFamily, nu: usize, k_max: u32) -> Result<Vec<f64>> {
    let psi = family.psi(nu)?;
    (0..=k_max)
        .map(|k| conjugate_adaptive(&|y| psi.eval(y), psi.is_convex(), k as f64, 1.0, ADAPTIVE_TOL))
        .collect()
}

fn initial_half_width(f: &HermiteGaussian, budget: u32, cfg: &SupSearchConfig) -> f64 {
    let extra = (2.0 * (budget + f.degree()) as f64 / f.min_decay()).sqrt() + 3.0;
    cfg.half_width.max(extra)
}

/// Complex-plane sups `sup_z |f(z)| (1+‖z‖)^k e^{−w(‖Im z‖)}` over `(x, y)`.
fn complex_sup(f: &HermiteGaussian, k: u32, cfg: &SupSearchConfig, name: String, weight: &dyn Fn(f64) -> Result<f64>) -> Result<SeminormValue> {
    if f.is_zero() {
        return Ok(SeminormValue::zero(name));
    }
    let n = f.dim();
    let obj = |p: &[f64], _: &mut [f64]| -> Result<(f64, usize)> {
        let z: Vec<Complex64> = (0..n).map(|j| Complex64::new(p[j], p[n + j])).collect();
        let lf = f.log_abs(&z)?;
        let r = norm(p);
        let ny = norm(&p[n..]);
        Ok((lf + k as f64 * r.ln_1p() - weight(ny)?, 0))
    };
    let x0 = initial_half_width(f, k, cfg);
    let out = sup_search(2 * n, x0, cfg, 0, &obj)?;
    let witness = Witness {
        point: out.argmax.clone(),
        alpha: None,
        k: None,
    };
    Ok(finish(name, out, witness, None, false))
}

/// `p_{ν,k}(f) = sup_z |f(z)| (1+‖z‖)^k / e^{φ_ν(‖Im z‖)}`.
pub fn p_norm(f: &HermiteGaussian, family: &WeightFamily, nu: usize, k: u32, cfg: &SupSearchConfig) -> Result<SeminormValue> {
    let phi = family.phi(nu)?;
    complex_sup(f, k, cfg, format!("p[{nu},{k}]"), &|t| Ok(phi.eval(t)))
}

/// `𝓝_{ν,k}(f)`: as [`p_norm`] with the weight `(ψ_ν*)*(ln(1+‖Im z‖))`.
pub fn cal_n_norm(f: &HermiteGaussian, family: &WeightFamily, nu: usize, k: u32, cfg: &SupSearchConfig) -> Result<SeminormValue> {
    let psi = family.psi(nu)?;
    let cache = RefCell::new(RadialCache::new(|s| biconjugate_adaptive(&psi, s), 4.0)?);
    complex_sup(f, k, cfg, format!("calN[{nu},{k}]"), &|t| cache.borrow_mut().eval(t.ln_1p()))
}

/// `𝓡_{m,ν}(f) = sup_{x, |α| ≤ budget} (1+‖x‖)^m |D^α f(x)| e^{ψ_ν*(|α|)} / α!`.
pub fn r_seminorm(f: &HermiteGaussian, family: &WeightFamily, m: u32, nu: usize, alpha_budget: u32, cfg: &SupSearchConfig) -> Result<SeminormValue> {
    check_budget(alpha_budget)?;
    let name = format!("R[{m},{nu}]");
    if f.is_zero() {
        return Ok(SeminormValue::zero(name));
    }
    let n = f.dim();
    let psi_star = psi_star_table(family, nu, alpha_budget)?;
    let alphas = multi_indices_up_to(n, alpha_budget);
    let weights: Vec<f64> = alphas
        .iter()
        .map(|a| psi_star[a.iter().sum::<u32>() as usize] - ln_multi_factorial(a))
        .collect();
    let obj = |x: &[f64], shells: &mut [f64]| -> Result<(f64, usize)> {
        let table = f.derivative_table(x, alpha_budget)?;
        let base = m as f64 * norm(x).ln_1p();
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, a) in alphas.iter().enumerate() {
            let v = base + table.log_abs(a) + weights[i];
            let s = a.iter().sum::<u32>() as usize;
            if v > shells[s] {
                shells[s] = v;
            }
            if v > best.0 {
                best = (v, i);
            }
        }
        Ok(best)
    };
    let out = sup_search(n, initial_half_width(f, alpha_budget, cfg), cfg, alpha_budget as usize + 1, &obj)?;
    let witness = Witness {
        point: out.argmax.clone(),
        alpha: Some(alphas[out.tag].clone()),
        k: None,
    };
    Ok(finish(name, out, witness, Some(alpha_budget), true))
}

/// `‖f‖_{m,ψ_ν*} = sup_{x, |α| ≤ m, |β| ≤ budget} |x^β D^α f(x)| e^{ψ_ν*(|β|)} / |β|!`.
///
/// For fixed `|β| = k` the largest `|x^β|` is `(max_j |x_j|)^k`, so the
/// β-sweep runs over `k` only.
pub fn g_norm(f: &HermiteGaussian, family: &WeightFamily, m: u32, nu: usize, beta_budget: u32, cfg: &SupSearchConfig) -> Result<SeminormValue> {
    moment_norm(f, family, m, nu, beta_budget, cfg, Moment::Beta)
}

/// `N_{ν,m}(f) = max_{|α| ≤ m} sup_{x, k ≤ budget} (1+‖x‖)^k |D^α f(x)| e^{ψ_ν*(k)} / k!`.
pub fn n_norm(f: &HermiteGaussian, family: &WeightFamily, nu: usize, m: u32, k_budget: u32, cfg: &SupSearchConfig) -> Result<SeminormValue> {
    moment_norm(f, family, m, nu, k_budget, cfg, Moment::OnePlusNorm)
}

#[derive(Clone, Copy, PartialEq)]
enum Moment {
    Beta,
    OnePlusNorm,
}

fn moment_norm(f: &HermiteGaussian, family: &WeightFamily, m: u32, nu: usize, budget: u32, cfg: &SupSearchConfig, kind: Moment) -> Result<SeminormValue> {
    check_budget(budget)?;
    let name = match kind {
        Moment::Beta => format!("G[{m},{nu}]"),
        Moment::OnePlusNorm => format!("N[{nu},{m}]"),
    };
    if f.is_zero() {
        return Ok(SeminormValue::zero(name));
    }
    let n = f.dim();
    let psi_star = psi_star_table(family, nu, budget)?;
    let kw: Vec<f64> = (0..=budget).map(|k| psi_star[k as usize] - ln_factorial(k as u64)).collect();
    let alphas = multi_indices_up_to(n, m);
    let obj = |x: &[f64], shells: &mut [f64]| -> Result<(f64, usize)> {
        let table = f.derivative_table(x, m)?;
        let lm = match kind {
            Moment::Beta => x.iter().fold(0.0f64, |a, v| a.max(v.abs())).ln(),
            Moment::OnePlusNorm => norm(x).ln_1p(),
        };
        let mut best = (f64::NEG_INFINITY, 0);
        for (ai, a) in alphas.iter().enumerate() {
            let ld = table.log_abs(a);
            if ld == f64::NEG_INFINITY {
                continue;
            }
            for k in 0..=budget {
                // 0^0 = 1 for the β = 0 term.
                let moment = if k == 0 { 0.0 } else { k as f64 * lm };
                let v = ld + moment + kw[k as usize];
                if v > shells[k as usize] {
                    shells[k as usize] = v;
                }
                if v > best.0 {
                    best = (v, ai * (budget as usize + 1) + k as usize);
                }
            }
        }
        Ok(best)
    };
    let out = sup_search(n, initial_half_width(f, budget, cfg), cfg, budget as usize + 1, &obj)?;
    let stride = budget as usize + 1;
    let witness = Witness {
        point: out.argmax.clone(),
        alpha: Some(alphas[out.tag / stride].clone()),
        k: Some((out.tag % stride) as u32),
    };
    Ok(finish(name, out, witness, Some(budget), true))
}

/// `q_{m,ν}(f) = sup_{x, |α| ≤ m} |D^α f(x)| e^{φ_ν*(‖x‖)}`.
pub fn q_norm(f: &HermiteGaussian, family: &WeightFamily, m: u32, nu: usize, cfg: &SupSearchConfig) -> Result<SeminormValue> {
    let phi = family.phi(nu)?;
    if !phi.is_convex() {
        return Err(Error::ConvexityRequired(phi.label().to_string()));
    }
    let name = format!("q[{m},{nu}]");
    if f.is_zero() {
        return Ok(SeminormValue::zero(name));
    }
    let n = f.dim();
    let conj = young_conjugate(phi);
    let x0 = initial_half_width(f, m, cfg);
    let cache = RefCell::new(RadialCache::new(
        |r| {
            let v = conj.eval(r);
            if v.is_nan() {
                Err(Error::NonFinite(format!("conjugate of {} at {r}", phi.label())))
            } else {
                Ok(v)
            }
        },
        x0 * (n as f64).sqrt(),
    )?);
    let alphas = multi_indices_up_to(n, m);
    let obj = |x: &[f64], _: &mut [f64]| -> Result<(f64, usize)> {
        let table = f.derivative_table(x, m)?;
        let w = cache.borrow_mut().eval(norm(x))?;
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, a) in alphas.iter().enumerate() {
            let v = table.log_abs(a) + w;
            if v > best.0 {
                best = (v, i);
            }
        }
        Ok(best)
    };
    let out = sup_search(n, x0, cfg, 0, &obj)?;
    let witness = Witness {
        point: out.argmax.clone(),
        alpha: Some(alphas[out.tag].clone()),
        k: None,
    };
    Ok(finish(name, out, witness, Some(m), false))
}

/// Surface area of the unit sphere in ℝⁿ, `2π^{n/2}/Γ(n/2)`.
pub fn sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(2.0 * PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0))
}

/// Per-shell maxima of `(1+‖x‖)^m |D^α f(x)| e^{ψ_ν*(|α|)}/α!` at fixed points,
/// exposed for tail-decay studies.
pub fn r_shell_profile(f: &HermiteGaussian, family: &WeightFamily, nu: usize, x: &[f64], alpha_budget: u32) -> Result<Vec<f64>> {
    check_budget(alpha_budget)?;
    let psi_star = psi_star_table(family, nu, alpha_budget)?;
    let table = f.derivative_table(x, alpha_budget)?;
    Ok((0..=alpha_budget)
        .map(|k| {
            multi_indices_of_order(f.dim(), k)
                .iter()
                .map(|a| table.log_abs(a) + psi_star[k as usize] - ln_multi_factorial(a))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// CSV of `(parameter, value, log_value, converged)` rows.
pub fn write_sweep_csv(path: &Path, rows: &[(String, SeminormValue)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameter", "seminorm", "value", "log_value", "tail_bound", "converged"])?;
    for (p, v) in rows {
        w.write_record([
            p.clone(),
            v.name.clone(),
            fmt_f64(v.value),
            v.log_value.map(fmt_f64).unwrap_or_default(),
            fmt_f64(v.tail_bound),
            v.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{make_power_family, WeightFunction};

    fn fam() -> WeightFamily {
        make_power_family(2.0, 2.0, 16).unwrap()
    }

    fn gauss(a: f64) -> HermiteGaussian {
        HermiteGaussian::gaussian(1, a).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1).unwrap() - 2.0).abs() < 1e-14);
        assert!((sphere_area(2).unwrap() - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3).unwrap() - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn p_norm_examples() {
        let cfg = SupSearchConfig::default();
        let v = p_norm(&gauss(1.0), &fam(), 1, 0, &cfg).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12, "{}", v.value);
        assert!(v.converged);
        let v2 = p_norm(&gauss(1.0), &fam(), 1, 2, &cfg).unwrap();
        assert!(v2.value > 1.0);
        // Oracle: 1-D scan along the real axis, where y = 0 is optimal.
        let scan = (0..200_001)
            .map(|i| {
                let x = i as f64 * 1e-5;
                (1.0 + x).powi(2) * (-x * x).exp()
            })
            .fold(0.0, f64::max);
        assert!((v2.value - scan).abs() < 1e-8 * scan);
    }

    #[test]
    fn p_norm_weight_too_weak() {
        let weak = WeightFamily::from_members(vec![WeightFunction::new("t^2/2", true, true, |t| 0.5 * t * t)]).unwrap();
        let r = p_norm(&gauss(1.0), &weak, 1, 0, &SupSearchConfig::default());
        assert!(matches!(r, Err(Error::WeightTooWeak { .. })));
    }

    #[test]
    fn zero_function() {
        let z = gauss(1.0).scale(Complex64::new(0.0, 0.0));
        let cfg = SupSearchConfig::default();
        for v in [
            p_norm(&z, &fam(), 1, 0, &cfg).unwrap(),
            r_seminorm(&z, &fam(), 0, 3, 40, &cfg).unwrap(),
            q_norm(&z, &fam(), 0, 1, &cfg).unwrap(),
        ] {
            assert_eq!(v.value, 0.0);
            assert!(v.converged);
            assert!(v.witness.point.is_empty());
        }
    }

    #[test]
    fn r_seminorm_alpha_zero_slice() {
        let cfg = SupSearchConfig::default();
        let f = gauss(1.0);
        let v = r_seminorm(&f, &fam(), 0, 3, 0, &cfg).unwrap();
        let psi0 = psi_star_table(&fam(), 3, 0).unwrap()[0];
        assert!((v.value - psi0.exp()).abs() < 1e-10 * psi0.exp());
        let full = r_seminorm(&f, &fam(), 0, 3, 40, &cfg).unwrap();
        assert!(full.converged, "{full:?}");
        assert!(full.value >= v.value);
        let r = full.tail_ratio.unwrap();
        assert!(r < 1.0);
    }

    #[test]
    fn q_norm_closed_form() {
        let cfg = SupSearchConfig::default();
        let f = gauss(1.0);
        let v = q_norm(&f, &fam(), 0, 1, &cfg).unwrap();
        assert!((v.value - 1.0).abs() < 1e-9);
        let v1 = q_norm(&f, &fam(), 1, 1, &cfg).unwrap();
        assert!(v1.value >= v.value);
        let two = q_norm(&f.scale(Complex64::new(2.0, 0.0)), &fam(), 1, 1, &cfg).unwrap();
        assert!((two.value - 2.0 * v1.value).abs() < 1e-12 * two.value);
    }

    #[test]
    fn g_and_n_norms_are_ordered() {
        let cfg = SupSearchConfig::default();
        let f = gauss(1.0);
        let g = g_norm(&f, &fam(), 0, 1, 60, &cfg).unwrap();
        let n = n_norm(&f, &fam(), 1, 0, 60, &cfg).unwrap();
        assert!(g.converged && n.converged, "{g:?} {n:?}");
        assert!(g.value <= n.value * (1.0 + 1e-9));
        let w = &g.witness;
        if w.k != Some(0) {
            assert!(w.point[0] != 0.0);
        }
    }

    #[test]
    fn cal_n_real_slice_weight() {
        let cfg = SupSearchConfig::default();
        let v = cal_n_norm(&gauss(1.0), &fam(), 1, 0, &cfg).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0);
        assert!(v.converged);
    }
}
