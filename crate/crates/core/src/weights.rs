//! Weight functions `φ: [0,∞) → ℝ`, weight families `Φ = {φ_m}` and finite-grid
//! witnesses for the family conditions i1–i5.
//!
//! Witnessed constants are grid maxima: a report always records the grid it
//! was computed on, and a "pass" only says the inequality holds on that grid
//! with the recorded constant.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{default_verification_grid, eps_check};

/// Default ratio `φ_m(x)/x` the superlinearity proxy must exceed at the
/// right end of the grid.
pub const SUPERLINEAR_THRESHOLD: f64 = 10.0;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function on `[0, ∞)` with declared shape flags.
#[derive(Clone)]
pub struct WeightFunction {
    evaluator: Evaluator,
    convex: bool,
    nondecreasing: bool,
    label: String,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("label", &self.label)
            .field("convex", &self.convex)
            .field("nondecreasing", &self.nondecreasing)
            .finish()
    }
}

impl WeightFunction {
    pub fn new<F>(label: impl Into<String>, convex: bool, nondecreasing: bool, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(f),
            convex,
            nondecreasing,
            label: label.into(),
        }
    }

    /// `x ↦ (scale·x)^p`, convex and nondecreasing for `p ≥ 1`.
    pub fn power(scale: f64, p: f64) -> Self {
        Self::new(format!("({scale}x)^{p}"), p >= 1.0, true, move |x| (scale * x).powf(p))
    }

    /// Piecewise-linear interpolant of a table; linear extrapolation past the
    /// last node using the last segment's slope.
    pub fn table(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidParameter(
                "table weight needs at least two (x, y) pairs of equal length".into(),
            ));
        }
        if xs[0] < 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "table grid must be strictly increasing and start at x >= 0".into(),
            ));
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("table weight values".into()));
        }
        let nondecreasing = ys.windows(2).all(|w| w[1] >= w[0]);
        let slopes: Vec<f64> = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let convex = slopes.windows(2).all(|s| s[1] >= s[0]);
        let f = move |x: f64| {
            let k = match xs.binary_search_by(|v| v.total_cmp(&x)) {
                Ok(i) => return ys[i],
                Err(0) => 0,
                Err(i) if i >= xs.len() => xs.len() - 2,
                Err(i) => i - 1,
            };
            ys[k] + slopes[k] * (x - xs[k])
        };
        Ok(Self::new(label, convex, nondecreasing, f))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.nondecreasing
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Same evaluator with an overridden convexity declaration.
    pub fn with_convexity(mut self, convex: bool) -> Self {
        self.convex = convex;
        self
    }

    /// `g[e](x) = g(e^x)`. Monotonicity carries over; convexity is not
    /// propagated.
    pub fn exp_substitute(&self) -> Self {
        let inner = Arc::clone(&self.evaluator);
        Self {
            evaluator: Arc::new(move |x| inner(x.exp())),
            convex: false,
            nondecreasing: self.nondecreasing,
            label: format!("{}[e]", self.label),
        }
    }

    /// `g[e]` carrying convexity when it follows from `g` being convex and
    /// nondecreasing (composition with the convex increasing `exp`).
    pub fn exp_substitute_shaped(&self) -> Self {
        let convex = self.convex && self.nondecreasing;
        self.exp_substitute().with_convexity(convex)
    }

    pub(crate) fn evaluator(&self) -> Evaluator {
        Arc::clone(&self.evaluator)
    }
}

/// Finite-grid proxy for `g(x)/x → ∞`: the ratio at the right end of the
/// default verification grid must exceed [`SUPERLINEAR_THRESHOLD`].
pub fn superlinear_proxy(g: &WeightFunction) -> (f64, bool) {
    let x = *default_verification_grid().last().unwrap();
    let ratio = g.eval(x) / x;
    (ratio, ratio > SUPERLINEAR_THRESHOLD)
}

/// Declarative family description, as read from scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `φ_m(x) = (base^m · x)^p`.
    Power { p: f64, base: f64, m_max: usize },
    /// Tabulated members on a shared grid; `values[m-1]` holds `φ_m`.
    Table { grid: Vec<f64>, values: Vec<Vec<f64>> },
}

/// Condition identifiers i1–i5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionId {
    I1,
    I2,
    I3,
    I4,
    I5,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionId::I1 => "i1",
            ConditionId::I2 => "i2",
            ConditionId::I3 => "i3",
            ConditionId::I4 => "i4",
            ConditionId::I5 => "i5",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ConditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i1" => Ok(ConditionId::I1),
            "i2" => Ok(ConditionId::I2),
            "i3" => Ok(ConditionId::I3),
            "i4" => Ok(ConditionId::I4),
            "i5" => Ok(ConditionId::I5),
            other => Err(Error::InvalidParameter(format!("unknown condition `{other}`"))),
        }
    }
}

/// Extra inputs for [`check_condition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionParams {
    /// Values of `A` for i2.
    pub a_list: Vec<f64>,
    /// Candidate dilation `σ_m` for i4.
    pub sigma: f64,
    /// Candidate dilation `h_m` for i5.
    pub h: f64,
    /// Ratio the i1 proxy must exceed.
    pub superlinear_threshold: f64,
}

impl Default for ConditionParams {
    fn default() -> Self {
        Self {
            a_list: vec![1.0],
            sigma: 2.0,
            h: 2.0,
            superlinear_threshold: SUPERLINEAR_THRESHOLD,
        }
    }
}

/// One witnessed constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessedConstant {
    pub name: String,
    pub value: f64,
    pub argmax_x: f64,
}

/// Outcome of checking one condition for one index on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyConditionReport {
    pub condition: ConditionId,
    pub m: usize,
    pub grid: Vec<f64>,
    pub witnesses: Vec<WitnessedConstant>,
    pub min_margin: f64,
    /// True when the check is a finite-grid proxy rather than a certificate (i1).
    pub proxy: bool,
    pub pass: bool,
}

/// The family `Φ = {φ_m}` with witnessed condition constants.
#[derive(Debug, Clone)]
pub struct WeightFamily {
    spec: FamilySpec,
    members: Vec<WeightFunction>,
    witnessed: BTreeMap<String, f64>,
}

/// `φ_m(x) = (base^m · x)^p` for `m = 1..=m_max`.
pub fn make_power_family(p: f64, base: f64, m_max: usize) -> Result<WeightFamily> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "power family needs p > 1 for superlinear growth, got p = {p}"
        )));
    }
    if !(base > 1.0) {
        return Err(Error::InvalidParameter(format!("power family needs base > 1, got {base}")));
    }
    if m_max < 1 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    let members = (1..=m_max)
        .map(|m| {
            let scale = base.powi(m as i32);
            WeightFunction::new(format!("phi_{m}=({base}^{m}x)^{p}"), true, true, move |x| {
                (scale * x).powf(p)
            })
        })
        .collect();
    Ok(WeightFamily {
        spec: FamilySpec::Power { p, base, m_max },
        members,
        witnessed: BTreeMap::new(),
    })
}

impl WeightFamily {
    pub fn from_spec(spec: &FamilySpec) -> Result<Self> {
        match spec {
            FamilySpec::Power { p, base, m_max } => make_power_family(*p, *base, *m_max),
            FamilySpec::Table { grid, values } => {
                if values.is_empty() {
                    return Err(Error::InvalidParameter("table family has no members".into()));
                }
                let members = values
                    .iter()
                    .enumerate()
                    .map(|(i, ys)| {
                        WeightFunction::table(format!("phi_{}(table)", i + 1), grid.clone(), ys.clone())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self {
                    spec: spec.clone(),
                    members,
                    witnessed: BTreeMap::new(),
                })
            }
        }
    }

    /// Family with arbitrary members, `members[m-1] = φ_m`.
    pub fn from_members(members: Vec<WeightFunction>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter("family has no members".into()));
        }
        Ok(Self {
            spec: FamilySpec::Table {
                grid: vec![],
                values: vec![],
            },
            members,
            witnessed: BTreeMap::new(),
        })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn m_max(&self) -> usize {
        self.members.len()
    }

    /// `φ_m`, one-based.
    pub fn phi(&self, m: usize) -> Result<&WeightFunction> {
        if m == 0 || m > self.members.len() {
            return Err(Error::IndexOutOfRange {
                index: m,
                m_max: self.members.len(),
            });
        }
        Ok(&self.members[m - 1])
    }

    /// `ψ_m = φ_m[e]`. When `φ_m` is convex and nondecreasing the composition
    /// with `exp` is convex, and the flag is set accordingly.
    pub fn psi(&self, m: usize) -> Result<WeightFunction> {
        Ok(self.phi(m)?.exp_substitute_shaped())
    }

    pub fn witnessed_constants(&self) -> &BTreeMap<String, f64> {
        &self.witnessed
    }

    pub fn witness(&self, condition: ConditionId, m: usize) -> Option<f64> {
        self.witnessed.get(&witness_key(condition, m)).copied()
    }

    /// Witness i2 (A = 1), i3, i4 (σ = params.sigma) and i5 (h = params.h)
    /// for every `m < m_max` on `grid`, storing the constants. Fails on the
    /// first condition that does not pass.
    pub fn witness_all(&mut self, grid: &[f64], params: &ConditionParams) -> Result<Vec<FamilyConditionReport>> {
        let mut reports = Vec::new();
        for m in 1..self.m_max() {
            for cond in [ConditionId::I2, ConditionId::I3, ConditionId::I4, ConditionId::I5] {
                let report = check_condition(self, cond, m, grid, params)?;
                if !report.pass {
                    return Err(Error::HypothesisViolated(format!(
                        "condition {cond} fails for m = {m} (min margin {})",
                        report.min_margin
                    )));
                }
                let value = report.witnesses[0].value;
                self.witnessed.insert(witness_key(cond, m), value);
                reports.push(report);
            }
        }
        Ok(reports)
    }

    /// Records a constant (used for candidate dilations `σ_m`, `h_m`).
    pub fn record(&mut self, key: impl Into<String>, value: f64) {
        self.witnessed.insert(key.into(), value);
    }
}

fn witness_key(condition: ConditionId, m: usize) -> String {
    format!("{condition}:{m}")
}

/// Maximum of `diff` over `grid` with the unbounded-growth guard: the
/// witness is rejected when `diff` increases monotonically through the last
/// 10% of the grid and peaks at its right end.
pub(crate) fn grid_max_witness(grid: &[f64], diff: &[f64], what: &str) -> Result<(f64, usize)> {
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
    for (i, &d) in diff.iter().enumerate() {
        if d.is_nan() {
            return Err(Error::NonFinite(format!("{what} at x = {}", grid[i])));
        }
        if d > best {
            best = d;
            arg = i;
        }
    }
    let n = diff.len();
    let tail_start = n - (n / 10).max(2).min(n);
    let tail = &diff[tail_start..];
    let increasing = tail.windows(2).all(|w| w[1] >= w[0]) && tail.windows(2).any(|w| w[1] > w[0]);
    if arg == n - 1 && increasing {
        return Err(Error::UnboundedWitness {
            what: what.to_string(),
            x: grid[n - 1],
        });
    }
    Ok((best, arg))
}

/// Witnesses one condition for index `m` on `grid`.
///
/// i2 reports `C(m, A) = max (φ_m + A ln(1+x) − φ_{m+1})` for every `A` in
/// `params.a_list`; i3 reports `a_m = max (φ_m(2x) − φ_{m+1}(x))`; i4 and i5
/// report `γ_m` and `l_m` for the candidate `σ_m` / `h_m`. i1 is a
/// right-endpoint proxy on `φ_m(x)/x` and is flagged as such.
pub fn check_condition(
    family: &WeightFamily,
    which: ConditionId,
    m: usize,
    grid: &[f64],
    params: &ConditionParams,
) -> Result<FamilyConditionReport> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("condition grid is empty".into()));
    }
    if grid.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter("condition grid must lie in [0, ∞)".into()));
    }
    let phi = family.phi(m)?;

    if which == ConditionId::I1 {
        let x = *grid.last().unwrap();
        let ratio = if x > 0.0 { phi.eval(x) / x } else { f64::NAN };
        let margin = ratio - params.superlinear_threshold;
        return Ok(FamilyConditionReport {
            condition: which,
            m,
            grid: grid.to_vec(),
            witnesses: vec![WitnessedConstant {
                name: "ratio_at_right_end".into(),
                value: ratio,
                argmax_x: x,
            }],
            min_margin: margin,
            proxy: true,
            pass: margin.is_finite() && margin > 0.0,
        });
    }

    let next = family.phi(m + 1)?;
    // Each entry: (name, lhs(x), rhs_without_constant(x)).
    type Side<'a> = Box<dyn Fn(f64) -> f64 + 'a>;
    let mut cases: Vec<(String, Side, Side)> = Vec::new();
    match which {
        ConditionId::I2 => {
            if params.a_list.is_empty() {
                return Err(Error::InvalidParameter("i2 needs at least one A".into()));
            }
            for &a in &params.a_list {
                if !(a > 0.0) {
                    return Err(Error::InvalidParameter(format!("i2 needs A > 0, got {a}")));
                }
                cases.push((
                    format!("C({m},{a})"),
                    Box::new(move |x| phi.eval(x) + a * x.ln_1p()),
                    Box::new(|x| next.eval(x)),
                ));
            }
        }
        ConditionId::I3 => cases.push((
            format!("a_{m}"),
            Box::new(|x| phi.eval(2.0 * x)),
            Box::new(|x| next.eval(x)),
        )),
        ConditionId::I4 => {
            let sigma = params.sigma;
            if !(sigma > 1.0) {
                return Err(Error::InvalidParameter(format!("i4 needs sigma > 1, got {sigma}")));
            }
            cases.push((
                format!("gamma_{m}"),
                Box::new(move |x| phi.eval(sigma * x)),
                Box::new(|x| next.eval(x)),
            ));
        }
        ConditionId::I5 => {
            let h = params.h;
            if !(h > 1.0) {
                return Err(Error::InvalidParameter(format!("i5 needs h > 1, got {h}")));
            }
            cases.push((
                format!("l_{m}"),
                Box::new(|x| 2.0 * phi.eval(x)),
                Box::new(move |x| next.eval(h * x)),
            ));
        }
        ConditionId::I1 => unreachable!(),
    }

    let mut witnesses = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut pass = true;
    for (name, lhs, rhs) in &cases {
        let l: Vec<f64> = grid.iter().map(|&x| lhs(x)).collect();
        let r: Vec<f64> = grid.iter().map(|&x| rhs(x)).collect();
        let diff: Vec<f64> = l.iter().zip(&r).map(|(a, b)| a - b).collect();
        let (c, arg) = grid_max_witness(grid, &diff, &format!("{which} witness {name}"))?;
        for i in 0..grid.len() {
            let margin = r[i] + c - l[i];
            min_margin = min_margin.min(margin);
            if margin < -eps_check(l[i].abs().max(r[i].abs())) {
                pass = false;
            }
        }
        if !c.is_finite() {
            pass = false;
        }
        witnesses.push(WitnessedConstant {
            name: name.clone(),
            value: c,
            argmax_x: grid[arg],
        });
    }

    Ok(FamilyConditionReport {
        condition: which,
        m,
        grid: grid.to_vec(),
        witnesses,
        min_margin,
        proxy: false,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow2() -> WeightFamily {
        make_power_family(2.0, 2.0, 6).unwrap()
    }

    #[test]
    fn power_family_values() {
        let f = pow2();
        assert_eq!(f.phi(1).unwrap().eval(3.0), 36.0);
        // φ_m(2x) = φ_{m+1}(x) exactly for base 2.
        for m in 1..5 {
            for &x in &[0.0, 0.3, 1.0, 7.5] {
                assert_eq!(f.phi(m).unwrap().eval(2.0 * x), f.phi(m + 1).unwrap().eval(x));
            }
        }
    }

    #[test]
    fn rejects_linear_power() {
        assert!(matches!(make_power_family(1.0, 2.0, 5), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_power_family(2.0, 1.0, 5), Err(Error::InvalidParameter(_))));
        assert!(make_power_family(2.0, 2.0, 0).is_err());
    }

    #[test]
    fn exp_substitution_examples() {
        let id = WeightFunction::new("x", true, true, |x| x);
        assert!((id.exp_substitute().eval(2f64.ln()) - 2.0).abs() < 1e-15);
        let sq = WeightFunction::power(1.0, 2.0);
        let sq_e = sq.exp_substitute();
        assert_eq!(sq_e.eval(0.0), 1.0);
        assert!(!sq_e.is_convex());
        assert!(sq_e.is_nondecreasing());
        let lg = WeightFunction::new("ln(1+x)", false, true, |x: f64| x.ln_1p());
        let v = lg.exp_substitute().eval(3.0);
        assert!((v - (1.0 + 3f64.exp()).ln()).abs() < 1e-14);
        assert!((v - 3.0486).abs() < 1e-4);
    }

    #[test]
    fn exp_substitution_inverts_log() {
        let g = WeightFunction::new("x^1.7+x", true, true, |x: f64| x.powf(1.7) + x);
        let ge = g.exp_substitute();
        for &x in &[1.0, 2.5, 10.0, 123.0, 9e4] {
            let a = ge.eval(f64::ln(x));
            let b = g.eval(x);
            assert!((a - b).abs() <= 1e-13 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn i3_exact_for_base_two() {
        let f = pow2();
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
        for m in 1..6 {
            let r = check_condition(&f, ConditionId::I3, m, &grid, &ConditionParams::default()).unwrap();
            assert!(r.pass);
            assert_eq!(r.witnesses[0].value, 0.0);
        }
    }

    #[test]
    fn i2_example_attained_at_zero() {
        let f = pow2();
        let grid: Vec<f64> = (0..=20000).map(|i| i as f64 * 1e-4).collect();
        let r = check_condition(&f, ConditionId::I2, 1, &grid, &ConditionParams::default()).unwrap();
        assert!(r.pass);
        // Oracle: dense scan of ln(1+x) − 12x².
        let oracle = grid
            .iter()
            .map(|&x| x.ln_1p() - 12.0 * x * x)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((r.witnesses[0].value - oracle).abs() < 1e-15);
        // Default geometric grid includes x = 0, where the expression is 0.
        let r = check_condition(&f, ConditionId::I2, 1, &default_verification_grid(), &ConditionParams::default())
            .unwrap();
        assert!(r.witnesses[0].value >= 0.0);
    }

    #[test]
    fn i5_with_h_two() {
        let f = pow2();
        let r = check_condition(&f, ConditionId::I5, 2, &default_verification_grid(), &ConditionParams::default())
            .unwrap();
        assert!(r.pass);
        assert_eq!(r.witnesses[0].value, 0.0);
    }

    #[test]
    fn i1_fails_for_linear_family() {
        let fam = WeightFamily::from_members((0..4).map(|_| WeightFunction::new("x", true, true, |x| x)).collect())
            .unwrap();
        let r = check_condition(&fam, ConditionId::I1, 1, &default_verification_grid(), &ConditionParams::default())
            .unwrap();
        assert!(r.proxy);
        assert!(!r.pass);
        assert_eq!(r.witnesses[0].value, 1.0);
    }

    #[test]
    fn i3_unbounded_for_linear_family() {
        let fam = WeightFamily::from_members((0..4).map(|_| WeightFunction::new("x", true, true, |x| x)).collect())
            .unwrap();
        let err = check_condition(&fam, ConditionId::I3, 1, &default_verification_grid(), &ConditionParams::default());
        assert!(matches!(err, Err(Error::UnboundedWitness { .. })));
    }

    #[test]
    fn out_of_range_index() {
        let f = pow2();
        assert!(matches!(
            check_condition(&f, ConditionId::I3, 6, &[0.0, 1.0], &ConditionParams::default()),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn table_family_interpolates() {
        let spec = FamilySpec::Table {
            grid: vec![0.0, 1.0, 2.0],
            values: vec![vec![0.0, 1.0, 4.0], vec![0.0, 4.0, 16.0]],
        };
        let fam = WeightFamily::from_spec(&spec).unwrap();
        assert_eq!(fam.phi(1).unwrap().eval(1.5), 2.5);
        assert!(fam.phi(1).unwrap().is_convex());
        assert_eq!(fam.m_max(), 2);
    }

    #[test]
    fn witness_all_records_constants() {
        let mut f = pow2();
        f.witness_all(&default_verification_grid(), &ConditionParams::default()).unwrap();
        assert_eq!(f.witness(ConditionId::I3, 1), Some(0.0));
        assert_eq!(f.witness(ConditionId::I4, 2), Some(0.0));
        assert!(f.witness(ConditionId::I2, 1).unwrap() >= 0.0);
    }
}
