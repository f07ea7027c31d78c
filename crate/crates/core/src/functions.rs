//! Polynomial × Gaussian test functions `f(z) = Σ c_α z^α · exp(−Σ a_j z_j²)`.
//!
//! Three routes to derivatives: the coefficient recurrence (exact algebra,
//! used as the oracle), a scaled Hermite-function table (stable at high
//! order, used by the seminorm sweeps and the Taylor extension), and the
//! Cauchy integral over a polycircle (the numerical mechanism under test).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, ln_factorial, ln_multi_factorial, multi_indices_of_order, CompensatedSum};

/// Default cap on `|α|` for the coefficient recurrence and Cauchy quadrature.
pub const ALPHA_CAP: u32 = 60;
/// Cap on truncation orders for table-based series (Taylor, seminorm sweeps).
pub const SERIES_CAP: u32 = 240;
/// Coefficients above this magnitude abort the coefficient recurrence.
pub const COEFFICIENT_LIMIT: f64 = 1e300;

/// Real-valued multi-index.
pub type MultiIndex = Vec<u32>;

/// One coefficient `re + i·im` of `z^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub alpha: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HermiteGaussianSpec {
    n: usize,
    terms: Vec<TermSpec>,
    decay: Vec<f64>,
}

/// `Σ c_α z^α · exp(−Σ a_j z_j²)` with finitely many terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HermiteGaussianSpec", into = "HermiteGaussianSpec")]
pub struct HermiteGaussian {
    n: usize,
    terms: BTreeMap<MultiIndex, Complex64>,
    decay: Vec<f64>,
}

impl TryFrom<HermiteGaussianSpec> for HermiteGaussian {
    type Error = Error;

    fn try_from(s: HermiteGaussianSpec) -> Result<Self> {
        Self::new(
            s.n,
            s.terms.into_iter().map(|t| (t.alpha, Complex64::new(t.re, t.im))),
            s.decay,
        )
    }
}

impl From<HermiteGaussian> for HermiteGaussianSpec {
    fn from(f: HermiteGaussian) -> Self {
        Self {
            n: f.n,
            terms: f
                .terms
                .into_iter()
                .map(|(alpha, c)| TermSpec { alpha, re: c.re, im: c.im })
                .collect(),
            decay: f.decay,
        }
    }
}

impl HermiteGaussian {
    /// Repeated multi-indices are summed.
    pub fn new(n: usize, terms: impl IntoIterator<Item = (MultiIndex, Complex64)>, decay: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if decay.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: decay.len(),
            });
        }
        if let Some(a) = decay.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("decay rates must be positive, got {a}")));
        }
        let mut map = BTreeMap::new();
        for (alpha, c) in terms {
            if alpha.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: alpha.len(),
                });
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFinite(format!("coefficient of {alpha:?}")));
            }
            *map.entry(alpha).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        if map.is_empty() {
            return Err(Error::InvalidParameter("at least one term is required".into()));
        }
        Ok(Self { n, terms: map, decay })
    }

    /// `exp(−a Σ z_j²)`.
    pub fn gaussian(n: usize, a: f64) -> Result<Self> {
        Self::new(n, [(vec![0; n], Complex64::new(1.0, 0.0))], vec![a; n])
    }

    /// `z^alpha · exp(−a Σ z_j²)`.
    pub fn monomial(alpha: MultiIndex, a: f64) -> Result<Self> {
        let n = alpha.len();
        Self::new(n, [(alpha, Complex64::new(1.0, 0.0))], vec![a; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    /// Total degree of the polynomial factor.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.norm() == 0.0)
    }

    pub fn has_real_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0)
    }

    pub fn min_decay(&self) -> f64 {
        self.decay.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ |c_α|`.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    /// Sum of two functions with identical decay vectors.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        if self.decay != other.decay {
            return Err(Error::InvalidParameter(
                "sums are only closed in the family for equal decay rates".into(),
            ));
        }
        let terms = self.terms.iter().chain(&other.terms).map(|(a, c)| (a.clone(), *c));
        Self::new(self.n, terms, self.decay.clone())
    }

    /// `z ↦ f(−z)`.
    pub fn reflect(&self) -> Self {
        let mut out = self.clone();
        for (a, c) in out.terms.iter_mut() {
            if a.iter().sum::<u32>() % 2 == 1 {
                *c = -*c;
            }
        }
        out
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got });
        }
        Ok(())
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        self.check_dim(z.len())?;
        let deg = self.degree() as usize;
        let powers: Vec<Vec<Complex64>> = z
            .iter()
            .map(|&zj| {
                let mut p = Vec::with_capacity(deg + 1);
                let mut acc = Complex64::new(1.0, 0.0);
                for _ in 0..=deg {
                    p.push(acc);
                    acc *= zj;
                }
                p
            })
            .collect();
        let mut poly = Complex64::new(0.0, 0.0);
        for (alpha, c) in &self.terms {
            let mut t = *c;
            for (j, &k) in alpha.iter().enumerate() {
                t *= powers[j][k as usize];
            }
            poly += t;
        }
        let expo: Complex64 = z.iter().zip(&self.decay).map(|(zj, a)| -*a * zj * zj).sum();
        Ok(poly * expo.exp())
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<Complex64> {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.eval(&z)
    }

    /// `ln |f(z)|` without overflow in the Gaussian factor.
    pub fn log_abs(&self, z: &[Complex64]) -> Result<f64> {
        self.check_dim(z.len())?;
        let re_expo: f64 = z.iter().zip(&self.decay).map(|(zj, a)| -a * (zj * zj).re).sum();
        let mut poly = Complex64::new(0.0, 0.0);
        for (alpha, c) in &self.terms {
            let mut t = *c;
            for (j, &k) in alpha.iter().enumerate() {
                t *= z[j].powu(k);
            }
            poly += t;
        }
        Ok(poly.norm().ln() + re_expo)
    }

    /// `D^α f` by the recurrence `D_j(p·G) = (∂_j p − 2 a_j z_j p)·G`.
    pub fn derivative_closed_form(&self, alpha: &[u32]) -> Result<Self> {
        self.check_dim(alpha.len())?;
        let order: u32 = alpha.iter().sum();
        if order > ALPHA_CAP {
            return Err(Error::InvalidParameter(format!(
                "|alpha| = {order} exceeds the cap {ALPHA_CAP}"
            )));
        }
        let mut terms = self.terms.clone();
        for (j, &times) in alpha.iter().enumerate() {
            let a = self.decay[j];
            for _ in 0..times {
                let mut next: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
                for (beta, c) in &terms {
                    if beta[j] > 0 {
                        let mut b = beta.clone();
                        b[j] -= 1;
                        *next.entry(b).or_default() += *c * beta[j] as f64;
                    }
                    let mut b = beta.clone();
                    b[j] += 1;
                    *next.entry(b).or_default() += *c * (-2.0 * a);
                }
                if let Some(big) = next.values().map(|c| c.norm()).find(|v| *v > COEFFICIENT_LIMIT || !v.is_finite()) {
                    return Err(Error::CoefficientOverflow(big));
                }
                terms = next;
            }
        }
        terms.retain(|_, c| c.norm() != 0.0);
        if terms.is_empty() {
            terms.insert(vec![0; self.n], Complex64::new(0.0, 0.0));
        }
        Ok(Self {
            n: self.n,
            terms,
            decay: self.decay.clone(),
        })
    }

    /// `x^beta · f`.
    pub fn mul_monomial(&self, beta: &[u32]) -> Result<Self> {
        self.check_dim(beta.len())?;
        let terms = self
            .terms
            .iter()
            .map(|(a, c)| (a.iter().zip(beta).map(|(x, y)| x + y).collect(), *c));
        Self::new(self.n, terms, self.decay.clone())
    }

    /// Scaled derivative table at a real point for all orders `≤ max_order`
    /// per coordinate.
    pub fn derivative_table(&self, x: &[f64], max_order: u32) -> Result<DerivativeTable> {
        self.check_dim(x.len())?;
        if max_order > SERIES_CAP {
            return Err(Error::InvalidParameter(format!(
                "derivative order {max_order} exceeds the cap {SERIES_CAP}"
            )));
        }
        DerivativeTable::build(self, x, max_order)
    }
}

/// Derivatives `D^α f(x)` at a fixed real point stored as
/// `mantissa · exp(log_scale)`, per coordinate and per polynomial power.
///
/// With `t = √a·x` and the normalized Hermite functions
/// `h_r(t) = H_r(t) e^{−t²/2} / √(2^r r!)` (bounded by about 1.09),
///
/// `D^r e^{−a x²} = (−1)^r h_r(t) · exp(ρ_r − t²/2)`, `ρ_r = (r/2) ln(2a) + ½ ln r!`,
///
/// and Leibniz' rule on `x^b e^{−ax²}` is rescaled to the same exponent.
#[derive(Debug, Clone)]
pub struct DerivativeTable {
    n: usize,
    max_order: u32,
    log_scale: Vec<Vec<f64>>,
    /// `mant[j][p][q]` for power `powers[j][p]`.
    mant: Vec<Vec<Vec<f64>>>,
    /// Per term: coefficient and power slot per coordinate.
    terms: Vec<(Complex64, Vec<usize>)>,
}

impl DerivativeTable {
    fn build(f: &HermiteGaussian, x: &[f64], max_order: u32) -> Result<Self> {
        let k = max_order as usize;
        let mut log_scale = Vec::with_capacity(f.n);
        let mut mant = Vec::with_capacity(f.n);
        let mut slots: Vec<BTreeMap<u32, usize>> = Vec::with_capacity(f.n);
        for j in 0..f.n {
            let a = f.decay[j];
            let t = a.sqrt() * x[j];
            let mut h = vec![0.0; k + 1];
            h[0] = (-0.5 * t * t).exp();
            if k >= 1 {
                h[1] = std::f64::consts::SQRT_2 * t * h[0];
            }
            for r in 1..k {
                let rf = r as f64;
                h[r + 1] = (2.0 / (rf + 1.0)).sqrt() * t * h[r] - (rf / (rf + 1.0)).sqrt() * h[r - 1];
            }
            let ls: Vec<f64> = (0..=k)
                .map(|r| 0.5 * r as f64 * (2.0 * a).ln() + 0.5 * ln_factorial(r as u64))
                .collect();
            let powers: Vec<u32> = {
                let mut p: Vec<u32> = f.terms.keys().map(|al| al[j]).collect();
                p.sort_unstable();
                p.dedup();
                p
            };
            let mut per_power = Vec::with_capacity(powers.len());
            let mut slot = BTreeMap::new();
            for (pi, &b) in powers.iter().enumerate() {
                slot.insert(b, pi);
                let mut m = vec![0.0; k + 1];
                for (q, mq) in m.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for i in 0..=q.min(b as usize) {
                        // C(q,i)·(b)_i·x^{b−i}·D^{q−i}G, rescaled to exp(ρ_q).
                        let log_c = ln_binomial(q as u64, i as u64) + ln_factorial(b as u64)
                            - ln_factorial((b as usize - i) as u64)
                            + ls[q - i]
                            - ls[q];
                        let sign = if (q - i) % 2 == 1 { -1.0 } else { 1.0 };
                        acc += sign * log_c.exp() * x[j].powi((b as usize - i) as i32) * h[q - i];
                    }
                    *mq = acc;
                }
                per_power.push(m);
            }
            log_scale.push(ls.iter().map(|l| l - 0.5 * t * t).collect::<Vec<f64>>());
            mant.push(per_power);
            slots.push(slot);
        }
        let terms = f
            .terms
            .iter()
            .map(|(al, c)| (*c, al.iter().enumerate().map(|(j, b)| slots[j][b]).collect()))
            .collect();
        Ok(Self {
            n: f.n,
            max_order,
            log_scale,
            mant,
            terms,
        })
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    /// `D^α f(x) = mantissa · exp(log_scale)`.
    pub fn value(&self, alpha: &[u32]) -> (Complex64, f64) {
        debug_assert_eq!(alpha.len(), self.n);
        let mut scale = 0.0;
        for (j, &q) in alpha.iter().enumerate() {
            scale += self.log_scale[j][q as usize];
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (c, slot) in &self.terms {
            let mut p = 1.0;
            for (j, &q) in alpha.iter().enumerate() {
                p *= self.mant[j][slot[j]][q as usize];
            }
            sum += c * p;
        }
        (sum, scale)
    }

    /// `ln |D^α f(x)|`, `−∞` at zeros.
    pub fn log_abs(&self, alpha: &[u32]) -> f64 {
        let (m, s) = self.value(alpha);
        m.norm().ln() + s
    }

    pub fn derivative(&self, alpha: &[u32]) -> Complex64 {
        let (m, s) = self.value(alpha);
        m * s.exp()
    }
}

/// Polycircle `{ζ : |ζ_j − x_j| = R}` with `Q` trapezoid nodes per circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub nodes: usize,
}

impl ContourSpec {
    pub fn new(center: Vec<f64>, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        if nodes < 8 || !nodes.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "nodes per circle must be a power of two >= 8, got {nodes}"
            )));
        }
        Ok(Self { center, radius, nodes })
    }
}

/// One Cauchy derivative with its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyDerivative {
    /// Value at `2Q` nodes.
    pub value: Complex64,
    /// `|I_Q − I_2Q|`.
    pub change: f64,
    /// `α! · max_{L_R} |f| / R^{|α|}`: the size of the integrand sum, which
    /// sets the attainable absolute accuracy.
    pub scale: f64,
}

/// Relative accuracy the quadrature is expected to reach.
pub const CAUCHY_TARGET: f64 = 1e-9;
/// Fraction of [`CauchyDerivative::scale`] below which values are compared
/// absolutely.
pub const CAUCHY_FLOOR: f64 = 1e-5;

struct PolycircleSamples {
    q: usize,
    values: Vec<Complex64>,
    max_abs: f64,
    twiddle: Vec<Complex64>,
}

impl PolycircleSamples {
    fn new(f: &HermiteGaussian, spec: &ContourSpec, q: usize) -> Result<Self> {
        let n = f.dim();
        let twiddle: Vec<Complex64> = (0..q)
            .map(|m| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * m as f64 / q as f64))
            .collect();
        let total = q.pow(n as u32);
        let mut values = Vec::with_capacity(total);
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        let mut max_abs: f64 = 0.0;
        for flat in 0..total {
            let mut rest = flat;
            for j in (0..n).rev() {
                let k = rest % q;
                rest /= q;
                // e^{iθ} = conj of the forward twiddle.
                z[j] = spec.center[j] + spec.radius * twiddle[k].conj();
            }
            let v = f.eval(&z)?;
            max_abs = max_abs.max(v.norm());
            values.push(v);
        }
        Ok(Self {
            q,
            values,
            max_abs,
            twiddle,
        })
    }

    /// `(1/Q^n) Σ_k f(ζ_k) e^{−i⟨α, θ_k⟩}` with exact twiddle indices.
    fn coefficient(&self, alpha: &[u32]) -> Complex64 {
        let n = alpha.len();
        let q = self.q;
        let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
        let mut idx = vec![0usize; n];
        for (flat, v) in self.values.iter().enumerate() {
            let mut rest = flat;
            for j in (0..n).rev() {
                idx[j] = rest % q;
                rest /= q;
            }
            let mut m = 0usize;
            for j in 0..n {
                m = (m + (alpha[j] as usize % q) * idx[j]) % q;
            }
            let t = v * self.twiddle[m];
            re.add(t.re);
            im.add(t.im);
        }
        Complex64::new(re.value(), im.value()) / self.values.len() as f64
    }
}

/// Batched Cauchy derivatives: the polycircle is sampled once at `Q` and once
/// at `2Q`, and every requested `α` is read off both samplings.
pub fn cauchy_derivatives(f: &HermiteGaussian, spec: &ContourSpec, alphas: &[MultiIndex]) -> Result<Vec<CauchyDerivative>> {
    f.check_dim(spec.center.len())?;
    let mut top = 0;
    for a in alphas {
        f.check_dim(a.len())?;
        let order: u32 = a.iter().sum();
        if order > ALPHA_CAP {
            return Err(Error::InvalidParameter(format!("|alpha| = {order} exceeds the cap {ALPHA_CAP}")));
        }
        top = top.max(order as usize);
    }
    if spec.nodes < 4 * top.max(8) {
        return Err(Error::InvalidParameter(format!(
            "Q = {} is below 4·max(8, |alpha|) = {}",
            spec.nodes,
            4 * top.max(8)
        )));
    }
    let coarse = PolycircleSamples::new(f, spec, spec.nodes)?;
    let fine = PolycircleSamples::new(f, spec, 2 * spec.nodes)?;
    let mut out = Vec::with_capacity(alphas.len());
    for a in alphas {
        let order: u32 = a.iter().sum();
        let factor = (ln_multi_factorial(a) - order as f64 * spec.radius.ln()).exp();
        let c = coarse.coefficient(a) * factor;
        let v = fine.coefficient(a) * factor;
        let scale = factor * fine.max_abs;
        let change = (c - v).norm();
        let allowed = 10.0 * CAUCHY_TARGET * v.norm().max(CAUCHY_FLOOR * scale);
        if change > allowed {
            return Err(Error::QuadratureUnconverged { change, allowed });
        }
        out.push(CauchyDerivative { value: v, change, scale });
    }
    Ok(out)
}

/// `D^α f(x)` from the Cauchy integral over the polycircle `L_R(x)`.
pub fn cauchy_derivative(f: &HermiteGaussian, spec: &ContourSpec, alpha: &[u32]) -> Result<Complex64> {
    Ok(cauchy_derivatives(f, spec, &[alpha.to_vec()])?[0].value)
}

/// Partial Taylor sum with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorResult {
    pub value: Complex64,
    pub order: u32,
    /// Largest modulus among the last two shell contributions.
    pub last_shells: f64,
    /// Log of the geometric-series majorant for the discarded tail, when
    /// derivative-bound data were supplied.
    pub log_tail_majorant: Option<f64>,
}

/// Derivative-bound data `|D^α f(x)| ≤ R·α!·e^{−ψ*(|α|)}` for tail majorants.
pub struct DerivativeBound<'a> {
    pub log_r: f64,
    pub psi_star: &'a dyn Fn(f64) -> f64,
}

/// `Σ_{|α| ≤ α_max} D^α f(x)/α! · (iy)^α`.
pub fn taylor_extend(f: &HermiteGaussian, x: &[f64], y: &[f64], alpha_max: u32) -> Result<Complex64> {
    taylor_extend_detailed(f, x, y, alpha_max, None).map(|r| r.value)
}

pub fn taylor_extend_detailed(
    f: &HermiteGaussian,
    x: &[f64],
    y: &[f64],
    alpha_max: u32,
    bound: Option<&DerivativeBound<'_>>,
) -> Result<TaylorResult> {
    f.check_dim(x.len())?;
    f.check_dim(y.len())?;
    let table = f.derivative_table(x, alpha_max)?;
    let n = f.dim();
    let ln_y: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
    let mut shells = Vec::with_capacity(alpha_max as usize + 1);
    for k in 0..=alpha_max {
        let mut shell = Complex64::new(0.0, 0.0);
        for alpha in multi_indices_of_order(n, k) {
            let mut log_w = -ln_multi_factorial(&alpha);
            let mut sign = 1.0;
            let mut zero = false;
            for (j, &aj) in alpha.iter().enumerate() {
                if aj == 0 {
                    continue;
                }
                if y[j] == 0.0 {
                    zero = true;
                    break;
                }
                log_w += aj as f64 * ln_y[j];
                if y[j] < 0.0 && aj % 2 == 1 {
                    sign = -sign;
                }
            }
            if zero {
                continue;
            }
            let (m, s) = table.value(&alpha);
            // i^k
            let phase = match k % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            shell += m * phase * (sign * (s + log_w).exp());
        }
        re.add(shell.re);
        im.add(shell.im);
        shells.push(shell.norm());
    }
    let value = Complex64::new(re.value(), im.value());
    let last_shells = if y.iter().all(|v| *v == 0.0) {
        0.0
    } else {
        shells.iter().rev().take(2).copied().fold(0.0, f64::max)
    };
    if last_shells > 1e-8 * value.norm() {
        return Err(Error::NotConverged {
            last: last_shells,
            sum: value.norm(),
        });
    }
    let log_tail_majorant = bound.map(|b| {
        let y1: f64 = y.iter().map(|v| v.abs()).sum();
        let mut acc = f64::NEG_INFINITY;
        for k in alpha_max + 1..=alpha_max + 400 {
            let t = b.log_r + k as f64 * y1.ln() - (b.psi_star)(k as f64);
            acc = crate::numeric::log_add_exp(acc, t);
        }
        acc
    });
    Ok(TaylorResult {
        value,
        order: alpha_max,
        last_shells,
        log_tail_majorant,
    })
}

/// Taylor extension with the order doubled from 40 until the shell criterion
/// holds (at most [`SERIES_CAP`]).
pub fn taylor_extend_auto(f: &HermiteGaussian, x: &[f64], y: &[f64]) -> Result<TaylorResult> {
    let mut order = 40u32.max(f.degree() + 2);
    loop {
        match taylor_extend_detailed(f, x, y, order, None) {
            Err(Error::NotConverged { .. }) if order < SERIES_CAP => order = (order * 2).min(SERIES_CAP),
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::multi_indices_up_to;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let g = HermiteGaussian::gaussian(1, 1.0).unwrap();
        let v = g.eval(&[c(0.0, 1.0)]).unwrap();
        assert!((v - c(std::f64::consts::E, 0.0)).norm() < 1e-15);
        let v = g.eval(&[c(1.0, 1.0)]).unwrap();
        assert!((v - c(0.0, -2.0).exp()).norm() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-15);
        let odd = HermiteGaussian::monomial(vec![1], 1.0).unwrap();
        assert_eq!(odd.eval(&[c(0.0, 0.0)]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn closed_form_derivatives() {
        let g = HermiteGaussian::gaussian(1, 1.0).unwrap();
        let d1 = g.derivative_closed_form(&[1]).unwrap();
        assert_eq!(d1.terms().collect::<Vec<_>>(), vec![(&vec![1], &c(-2.0, 0.0))]);
        let d2 = g.derivative_closed_form(&[2]).unwrap();
        let t: Vec<_> = d2.terms().map(|(a, v)| (a.clone(), *v)).collect();
        assert_eq!(t, vec![(vec![0], c(-2.0, 0.0)), (vec![2], c(4.0, 0.0))]);
        let g2 = HermiteGaussian::gaussian(2, 1.0).unwrap();
        let d = g2.derivative_closed_form(&[1, 1]).unwrap();
        let t: Vec<_> = d.terms().map(|(a, v)| (a.clone(), *v)).collect();
        assert_eq!(t, vec![(vec![1, 1], c(4.0, 0.0))]);
        assert!(g.derivative_closed_form(&[61]).is_err());
    }

    #[test]
    fn table_matches_closed_form() {
        let f = HermiteGaussian::new(
            2,
            [(vec![0, 0], c(1.0, 0.0)), (vec![2, 1], c(0.5, -0.25)), (vec![1, 0], c(-1.0, 0.0))],
            vec![0.5, 2.0],
        )
        .unwrap();
        for x in [[0.0, 0.0], [0.7, -1.3], [2.5, 0.4]] {
            let table = f.derivative_table(&x, 14).unwrap();
            for alpha in multi_indices_up_to(2, 14) {
                let exact = f.derivative_closed_form(&alpha).unwrap().eval_real(&x).unwrap();
                let got = table.derivative(&alpha);
                let scale = exact.norm().max(1e-300);
                assert!(
                    (got - exact).norm() <= 1e-10 * scale + 1e-12 * (table.log_scale[0][alpha[0] as usize] + table.log_scale[1][alpha[1] as usize]).exp(),
                    "alpha {alpha:?} x {x:?}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn cauchy_examples() {
        let g = HermiteGaussian::gaussian(1, 1.0).unwrap();
        let spec = ContourSpec::new(vec![0.0], 1.0, 64).unwrap();
        assert!((cauchy_derivative(&g, &spec, &[2]).unwrap() - c(-2.0, 0.0)).norm() < 1e-12);
        assert!(cauchy_derivative(&g, &spec, &[1]).unwrap().norm() < 1e-12);
        let g2 = HermiteGaussian::gaussian(2, 1.0).unwrap();
        let spec2 = ContourSpec::new(vec![0.0, 0.0], 1.0, 64).unwrap();
        assert!(cauchy_derivative(&g2, &spec2, &[1, 1]).unwrap().norm() < 1e-12);
    }

    #[test]
    fn cauchy_rejects_bad_specs() {
        assert!(ContourSpec::new(vec![0.0], 0.0, 64).is_err());
        assert!(ContourSpec::new(vec![0.0], 1.0, 48).is_err());
        let g = HermiteGaussian::gaussian(1, 1.0).unwrap();
        let spec = ContourSpec::new(vec![0.0], 1.0, 32).unwrap();
        assert!(cauchy_derivative(&g, &spec, &[12]).is_err());
    }

    #[test]
    fn taylor_examples() {
        let g = HermiteGaussian::gaussian(1, 1.0).unwrap();
        let v = taylor_extend(&g, &[0.0], &[0.5], 40).unwrap();
        assert!((v - c(0.25f64.exp(), 0.0)).norm() < 1e-10);
        let v = taylor_extend(&g, &[1.0], &[1.0], 50).unwrap();
        let e = g.eval(&[c(1.0, 1.0)]).unwrap();
        assert!((v - e).norm() < 1e-8 * e.norm());
        let v = taylor_extend(&g, &[0.3], &[0.0], 0).unwrap();
        assert!((v - g.eval_real(&[0.3]).unwrap()).norm() < 1e-15);
        assert!(matches!(taylor_extend(&g, &[0.0], &[2.0], 10), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn taylor_auto_reaches_far_points() {
        let f = HermiteGaussian::gaussian(1, 2.0).unwrap();
        let r = taylor_extend_auto(&f, &[0.8], &[2.0]).unwrap();
        let e = f.eval(&[c(0.8, 2.0)]).unwrap();
        assert!((r.value - e).norm() < 1e-8 * e.norm());
    }

    #[test]
    fn serde_round_trip() {
        let f = HermiteGaussian::new(1, [(vec![2], c(0.5, 0.0)), (vec![0], c(1.0, 0.0))], vec![1.0]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"decay\""));
        let back: HermiteGaussian = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let missing = r#"{"n":1,"terms":[{"alpha":[0],"re":1.0}]}"#;
        assert!(serde_json::from_str::<HermiteGaussian>(missing).is_err());
    }

    #[test]
    fn algebra() {
        let g = HermiteGaussian::gaussian(1, 1.0).unwrap();
        let odd = HermiteGaussian::monomial(vec![1], 1.0).unwrap();
        let s = g.add(&odd).unwrap();
        let r = s.reflect();
        let x = [0.4];
        let a = r.eval_real(&x).unwrap();
        let b = s.eval_real(&[-0.4]).unwrap();
        assert!((a - b).norm() < 1e-15);
        assert!(g.add(&HermiteGaussian::gaussian(1, 2.0).unwrap()).is_err());
        assert_eq!(g.scale(c(0.0, 0.0)).is_zero(), true);
    }
}
