//! Young conjugates `g*(x) = sup_{y≥0} (xy − g(y))`.
//!
//! Two engines: a discrete Legendre transform over sampled functions (lower
//! hull plus a monotone sweep over sorted slopes), and an adaptive 1-D
//! maximizer for callable weights. On top of them sit the conjugate
//! inequality checkers (margin profiles on finite grids).

use std::cell::Cell;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{default_verification_grid, eps_check, ln_binomial, ln_factorial, log_add_exp, xlogx};
use crate::weights::{
    check_condition, grid_max_witness, superlinear_proxy, ConditionId, ConditionParams, WeightFamily, WeightFunction,
};

/// Absolute argument tolerance for the adaptive maximizer.
pub const ADAPTIVE_TOL: f64 = 1e-10;
/// Maximum number of bracket doublings.
pub const MAX_DOUBLINGS: u32 = 60;
const SCAN_POINTS: usize = 1025;

/// A real function sampled on a strictly increasing grid in `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl GridFunction {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidParameter("grid function needs at least two samples".into()));
        }
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        if !(xs[0] >= 0.0) || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "grid must be strictly increasing and start at x >= 0".into(),
            ));
        }
        if let Some(i) = xs.iter().chain(&ys).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid function sample {i}")));
        }
        Ok(Self { xs, ys })
    }

    pub fn sample(f: impl Fn(f64) -> f64, xs: Vec<f64>) -> Result<Self> {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Two-column CSV with header `x,y`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y"])?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            w.write_record([fmt_f64(*x), fmt_f64(*y)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::InvalidParameter(format!("expected 2 columns, got {}", rec.len())));
            }
            xs.push(parse_f64(&rec[0])?);
            ys.push(parse_f64(&rec[1])?);
        }
        Self::new(xs, ys)
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    // Shortest round-trip representation.
    format!("{v:?}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("not a number: `{s}`")))
}

/// Discrete conjugate values with the winning sample per slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateResult {
    pub slopes: Vec<f64>,
    pub values: Vec<f64>,
    pub argmax_index: Vec<usize>,
    pub argmax_x: Vec<f64>,
}

impl ConjugateResult {
    /// Three-column CSV with header `slope,value,argmax_x`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["slope", "value", "argmax_x"])?;
        for i in 0..self.slopes.len() {
            w.write_record([fmt_f64(self.slopes[i]), fmt_f64(self.values[i]), fmt_f64(self.argmax_x[i])])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Indices of the lower convex hull of `(xs[i], ys[i])` (monotone chain).
/// Collinear interior points are dropped.
pub fn lower_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// `max_j (s·xs[j] − ys[j])` for every slope, first index winning ties.
///
/// The sweep walks the lower hull with a pointer that only moves forward as
/// the slopes increase. Rounding can make the exact float maximizer differ
/// from the hull vertex (ties, collinear runs), so every sample whose value
/// can come within a few ulps of the hull maximum is re-evaluated with the
/// same expression the direct scan uses.
pub fn conjugate_grid(g: &GridFunction, slopes: &[f64]) -> Result<ConjugateResult> {
    if slopes.is_empty() {
        return Err(Error::InvalidParameter("no slopes given".into()));
    }
    if let Some(s) = slopes.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("slope {s}")));
    }
    let (values, argmax_index) = legendre(&g.xs, &g.ys, slopes);
    let argmax_x = argmax_index.iter().map(|&j| g.xs[j]).collect();
    Ok(ConjugateResult {
        slopes: slopes.to_vec(),
        values,
        argmax_index,
        argmax_x,
    })
}

fn legendre(xs: &[f64], ys: &[f64], slopes: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = xs.len();
    let hull = lower_hull(xs, ys);
    let h = hull.len();
    let edge: Vec<f64> = hull
        .windows(2)
        .map(|w| (ys[w[1]] - ys[w[0]]) / (xs[w[1]] - xs[w[0]]))
        .collect();

    let x_abs = xs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let y_abs = ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let s_abs = slopes.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let e_abs = edge.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tau = 64.0 * f64::EPSILON * ((s_abs + e_abs) * x_abs + y_abs);

    // Samples lying within `tau` of their hull edge, grouped by edge.
    let mut near: Vec<Vec<usize>> = vec![Vec::new(); h.saturating_sub(1)];
    for e in 0..h.saturating_sub(1) {
        let (u, w) = (hull[e], hull[e + 1]);
        for j in u + 1..w {
            let gap = ys[j] - (ys[u] + edge[e] * (xs[j] - xs[u]));
            if gap <= tau {
                near[e].push(j);
            }
        }
    }

    let mut order: Vec<usize> = (0..slopes.len()).collect();
    order.sort_by(|&a, &b| slopes[a].total_cmp(&slopes[b]));

    let mut values = vec![0.0; slopes.len()];
    let mut argmax = vec![0usize; slopes.len()];
    let mut p = 0usize;
    for &k in &order {
        let s = slopes[k];
        let val = |j: usize| s * xs[j] - ys[j];
        while p + 1 < h && edge[p] < s {
            p += 1;
        }
        let mut best = val(hull[p]);
        let (mut l, mut r) = (p, p);
        while l > 0 {
            let v = val(hull[l - 1]);
            if v < best - tau {
                break;
            }
            best = best.max(v);
            l -= 1;
        }
        while r + 1 < h {
            let v = val(hull[r + 1]);
            if v < best - tau {
                break;
            }
            best = best.max(v);
            r += 1;
        }

        let mut win = (f64::NEG_INFINITY, usize::MAX);
        let mut consider = |j: usize| {
            let v = val(j);
            if v > win.0 || (v == win.0 && j < win.1) {
                win = (v, j);
            }
        };
        for &j in &hull[l..=r] {
            consider(j);
        }
        if h > 1 {
            let e_lo = l.saturating_sub(1);
            let e_hi = r.min(h - 2);
            for e in e_lo..=e_hi {
                let pts = &near[e];
                if pts.is_empty() {
                    continue;
                }
                let (u, w) = (hull[e], hull[e + 1]);
                let d = edge[e] - s;
                // Along the edge the value is affine in x; keep the part that
                // can still reach `best − 3τ`.
                let (lo, hi) = if d > 0.0 {
                    let reach = (val(u) - best + 3.0 * tau) / d;
                    let cut = xs[u] + reach;
                    (0, pts.partition_point(|&j| xs[j] <= cut))
                } else if d < 0.0 {
                    let reach = (val(w) - best + 3.0 * tau) / (-d);
                    let cut = xs[w] - reach;
                    (pts.partition_point(|&j| xs[j] < cut), pts.len())
                } else {
                    (0, pts.len())
                };
                for &j in &pts[lo..hi.max(lo)] {
                    consider(j);
                }
            }
        }
        debug_assert!(win.1 < n);
        values[k] = win.0;
        argmax[k] = win.1;
    }
    (values, argmax)
}

/// `(g*)*` sampled at `xs_out`, using the discrete conjugate at `slopes`.
pub fn biconjugate(g: &GridFunction, slopes: &[f64], xs_out: &[f64]) -> Result<GridFunction> {
    let first = conjugate_grid(g, slopes)?;
    let mut order: Vec<usize> = (0..slopes.len()).collect();
    order.sort_by(|&a, &b| slopes[a].total_cmp(&slopes[b]));
    // Duplicate slopes carry the same value; keep one of each.
    let mut ss: Vec<f64> = Vec::with_capacity(order.len());
    let mut vs: Vec<f64> = Vec::with_capacity(order.len());
    for &i in &order {
        if ss.last() == Some(&slopes[i]) {
            continue;
        }
        ss.push(slopes[i]);
        vs.push(first.values[i]);
    }
    if xs_out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("biconjugate output grid".into()));
    }
    let (out, _) = legendre(&ss, &vs, xs_out);
    GridFunction::new(xs_out.to_vec(), out)
}

/// `g*(x)` by 1-D maximization of `y ↦ xy − g(y)` over `[0, ∞)`.
///
/// The bracket starts at `y_hi` and doubles until the objective decreases
/// over the last octave (at most [`MAX_DOUBLINGS`] times). Convex `g` gets a
/// golden-section search on the concave objective; otherwise a coarse scan
/// picks the bracket for a golden refinement. The boundary `y = 0` is always
/// a candidate.
pub fn conjugate_adaptive(g: &dyn Fn(f64) -> f64, convex: bool, x: f64, y_hi: f64, tol: f64) -> Result<f64> {
    conjugate_adaptive_argmax(g, convex, x, y_hi, tol).map(|(v, _)| v)
}

/// [`conjugate_adaptive`] returning `(g*(x), maximizer)`.
pub fn conjugate_adaptive_argmax(
    g: &dyn Fn(f64) -> f64,
    convex: bool,
    x: f64,
    y_hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("conjugate slope {x}")));
    }
    if !(y_hi > 0.0) || !y_hi.is_finite() || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("need y_hi > 0 and tol > 0, got {y_hi}, {tol}")));
    }
    let nan = Cell::new(None::<f64>);
    let obj = |y: f64| {
        let v = x * y - g(y);
        if v.is_nan() {
            nan.set(Some(y));
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let check = || match nan.get() {
        Some(y) => Err(Error::NonFinite(format!("conjugate objective at y = {y}, slope {x}"))),
        None => Ok(()),
    };

    let mut hi = y_hi;
    let mut doublings = 0;
    loop {
        let top = obj(hi);
        check()?;
        if top == f64::NEG_INFINITY || top < obj(hi / 2.0) {
            break;
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::NoDecay { x, y_hi: hi });
        }
        hi *= 2.0;
        doublings += 1;
    }

    let at_zero = obj(0.0);
    let (mut best_y, mut best) = (0.0, at_zero);
    // An interior point must beat the boundary by more than rounding noise;
    // otherwise `x y − g(y)` near `y = 0` can edge out `−g(0)` by an ulp.
    let mut take = |y: f64, v: f64| {
        let bar = if best_y == 0.0 { best + 4.0 * f64::EPSILON * best.abs().max(v.abs()) } else { best };
        if v > bar {
            best = v;
            best_y = y;
        }
    };
    if convex {
        let (y, v) = golden_max(&obj, 0.0, hi, tol);
        take(y, v);
    } else {
        let step = hi / (SCAN_POINTS - 1) as f64;
        let (mut bi, mut bv) = (0usize, at_zero);
        for i in 1..SCAN_POINTS {
            let v = obj(i as f64 * step);
            if v > bv {
                bi = i;
                bv = v;
            }
        }
        take(bi as f64 * step, bv);
        let lo = bi.saturating_sub(1) as f64 * step;
        let up = ((bi + 1).min(SCAN_POINTS - 1)) as f64 * step;
        let (y, v) = golden_max(&obj, lo, up, tol);
        take(y, v);
    }
    check()?;
    Ok((best, best_y))
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let floor = 4.0 * f64::EPSILON * a.abs().max(b.abs());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..300 {
        if b - a <= tol.max(floor) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        for (y, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (y, v);
            }
        }
    }
    for y in [a, b, 0.5 * (a + b)] {
        let v = f(y);
        if v > best.1 {
            best = (y, v);
        }
    }
    best
}

/// `g*` as a weight function, evaluated adaptively. Evaluation failures map
/// to NaN, which downstream checks report as non-finite.
pub fn young_conjugate(g: &WeightFunction) -> WeightFunction {
    let inner = g.evaluator();
    let convex = g.is_convex();
    WeightFunction::new(format!("({})*", g.label()), true, true, move |x| {
        conjugate_adaptive(&*inner, convex, x, 1.0, ADAPTIVE_TOL).unwrap_or(f64::NAN)
    })
}

/// `(g*)*(x)` for convex `g` by two nested adaptive conjugations. The outer
/// bracket starts at the secant slope `g(x+1) − g(x)`, which bounds the
/// maximizer `g'(x)` from above.
pub fn biconjugate_adaptive(g: &WeightFunction, x: f64) -> Result<f64> {
    let inner = young_conjugate(g);
    let start = (g.eval(x + 1.0) - g.eval(x)).max(1.0);
    if !start.is_finite() {
        return Err(Error::NonFinite(format!("secant slope of {} at {x}", g.label())));
    }
    conjugate_adaptive(&|s| inner.eval(s), true, x, start, ADAPTIVE_TOL)
}

/// Pointwise margins `rhs − lhs` of an inequality on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginProfile {
    pub xs: Vec<f64>,
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub argmin_x: f64,
    pub pass: bool,
}

impl MarginProfile {
    /// `pass` ⇔ every margin ≥ −ε_check at the scale of its two sides.
    pub fn from_sides(xs: Vec<f64>, lhs: &[f64], rhs: &[f64]) -> Result<Self> {
        let mut margins = Vec::with_capacity(xs.len());
        let mut pass = true;
        let (mut min_margin, mut argmin_x) = (f64::INFINITY, f64::NAN);
        for i in 0..xs.len() {
            let m = rhs[i] - lhs[i];
            if m.is_nan() {
                return Err(Error::NonFinite(format!("margin at x = {}", xs[i])));
            }
            if m < -eps_check(lhs[i].abs().max(rhs[i].abs())) {
                pass = false;
            }
            if m < min_margin {
                min_margin = m;
                argmin_x = xs[i];
            }
            margins.push(m);
        }
        Ok(Self {
            xs,
            margins,
            min_margin,
            argmin_x,
            pass,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "margin"])?;
        for (x, m) in self.xs.iter().zip(&self.margins) {
            w.write_record([fmt_f64(*x), fmt_f64(*m)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn conj_of(g: &WeightFunction, x: f64) -> Result<f64> {
    conjugate_adaptive(&|y| g.eval(y), g.is_convex(), x, 1.0, ADAPTIVE_TOL)
}

fn require_superlinear(g: &WeightFunction, what: &str) -> Result<()> {
    let (ratio, ok) = superlinear_proxy(g);
    if ok {
        Ok(())
    } else {
        Err(Error::HypothesisViolated(format!(
            "{what} ({}) fails the superlinearity proxy: g(x)/x = {ratio} at the grid end",
            g.label()
        )))
    }
}

/// Margins of `(g[e])*(x) ≤ x ln(x/a) − x + b` on the positive part of the grid,
/// after checking `g(x) ≥ ax − b` on the default grid.
pub fn lemma1_margin(g: &WeightFunction, a: f64, b: f64, x_grid: &[f64]) -> Result<MarginProfile> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    for x in default_verification_grid() {
        let (l, r) = (g.eval(x), a * x - b);
        if l < r - eps_check(l.abs().max(r.abs())) {
            return Err(Error::HypothesisViolated(format!("g({x}) = {l} < ax - b = {r}")));
        }
    }
    let ge = g.exp_substitute_shaped();
    let xs: Vec<f64> = x_grid.iter().copied().filter(|&x| x > 0.0).collect();
    let mut lhs = Vec::with_capacity(xs.len());
    let mut rhs = Vec::with_capacity(xs.len());
    for &x in &xs {
        lhs.push(conj_of(&ge, x)?);
        rhs.push(xlogx(x) - x * a.ln() - x + b);
    }
    MarginProfile::from_sides(xs, &lhs, &rhs)
}

/// A witnessed grid maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridWitness {
    pub value: f64,
    pub argmax_x: f64,
}

/// `A_M = max_x [(g[e])*(x) − x ln(x/M) + x]` over the positive grid points.
pub fn corollary1_bound(g: &WeightFunction, m_const: f64, x_grid: &[f64]) -> Result<GridWitness> {
    if !(m_const > 0.0) {
        return Err(Error::InvalidParameter(format!("M must be positive, got {m_const}")));
    }
    require_superlinear(g, "corollary 1 weight")?;
    let ge = g.exp_substitute_shaped();
    let xs: Vec<f64> = x_grid.iter().copied().filter(|&x| x > 0.0).collect();
    if xs.is_empty() {
        return Err(Error::InvalidParameter("grid has no positive points".into()));
    }
    let mut diff = Vec::with_capacity(xs.len());
    for &x in &xs {
        diff.push(conj_of(&ge, x)? - (xlogx(x) - x * m_const.ln()) + x);
    }
    let (value, i) = grid_max_witness(&xs, &diff, "corollary 1 constant")?;
    Ok(GridWitness {
        value,
        argmax_x: xs[i],
    })
}

/// Partial sums of `Σ_j mult(j) · exp((g[e])*(j)) / (b^j j!)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub dim: usize,
    pub log_terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub sum: f64,
    pub converged: bool,
}

/// The series of exponentiated conjugates. With `dim = n > 1` the terms are
/// grouped by `|α| = j`, each shell carrying multiplicity `C(j+n−1, n−1)`.
pub fn remark1_series(g: &WeightFunction, b: f64, j_max: u32, dim: usize) -> Result<SeriesReport> {
    if j_max < 10 {
        return Err(Error::InvalidParameter(format!("j_max must be at least 10, got {j_max}")));
    }
    if !(b > 0.0) || dim == 0 {
        return Err(Error::InvalidParameter("need b > 0 and dim >= 1".into()));
    }
    let ge = g.exp_substitute_shaped();
    let mut log_terms = Vec::with_capacity(j_max as usize + 1);
    let mut partial_sums = Vec::with_capacity(j_max as usize + 1);
    let mut log_sum = f64::NEG_INFINITY;
    for j in 0..=j_max {
        let c = conj_of(&ge, j as f64)?;
        if c > 700.0 {
            return Err(Error::OverflowGuard {
                index: j as usize,
                value: c,
                limit: 700.0,
            });
        }
        let mult = ln_binomial(j as u64 + dim as u64 - 1, dim as u64 - 1);
        let t = c + mult - j as f64 * b.ln() - ln_factorial(j as u64);
        log_terms.push(t);
        log_sum = log_add_exp(log_sum, t);
        partial_sums.push(log_sum.exp());
    }
    let last = *log_terms.last().unwrap();
    Ok(SeriesReport {
        dim,
        log_terms,
        sum: log_sum.exp(),
        converged: last < log_sum + (1e-12f64).ln(),
        partial_sums,
    })
}

/// Margins over a product grid of pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMarginProfile {
    pub pairs: Vec<(f64, f64)>,
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub argmin: (f64, f64),
    pub pass: bool,
}

/// Result of the subadditivity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub a_stated: f64,
    pub tau: f64,
    pub profile: PairMarginProfile,
}

/// Checks `v*(x+y) ≤ u*(x) + u*(y) + τ(x+y) + A` on `axis × axis` with
/// `A = max(C, 2 inf u − inf v)`, after verifying `2u(x) ≤ v(x+τ) + C`.
pub fn lemma2_constant(u: &WeightFunction, v: &WeightFunction, tau: f64, c: f64, axis: &[f64]) -> Result<Lemma2Report> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    require_superlinear(u, "u")?;
    require_superlinear(v, "v")?;
    let grid = default_verification_grid();
    let (mut inf_u, mut inf_v) = (f64::INFINITY, f64::INFINITY);
    for &x in &grid {
        let (ux, vx) = (u.eval(x), v.eval(x));
        let (l, r) = (2.0 * ux, v.eval(x + tau) + c);
        if l > r + eps_check(l.abs().max(r.abs())) {
            return Err(Error::HypothesisViolated(format!("2u({x}) = {l} > v(x+tau) + C = {r}")));
        }
        inf_u = inf_u.min(ux);
        inf_v = inf_v.min(vx);
    }
    let a_stated = c.max(2.0 * inf_u - inf_v);

    let us: Vec<f64> = axis.iter().map(|&x| conj_of(u, x)).collect::<Result<_>>()?;
    let mut pairs = Vec::with_capacity(axis.len() * axis.len());
    let mut margins = Vec::with_capacity(pairs.capacity());
    let mut pass = true;
    let (mut min_margin, mut argmin) = (f64::INFINITY, (f64::NAN, f64::NAN));
    for (i, &x) in axis.iter().enumerate() {
        for (j, &y) in axis.iter().enumerate() {
            let lhs = conj_of(v, x + y)?;
            let rhs = us[i] + us[j] + tau * (x + y) + a_stated;
            let m = rhs - lhs;
            if m < -eps_check(lhs.abs().max(rhs.abs())) {
                pass = false;
            }
            if m < min_margin {
                min_margin = m;
                argmin = (x, y);
            }
            pairs.push((x, y));
            margins.push(m);
        }
    }
    Ok(Lemma2Report {
        a_stated,
        tau,
        profile: PairMarginProfile {
            pairs,
            margins,
            min_margin,
            argmin,
            pass,
        },
    })
}

/// Margins of `(v[e])*(x) + x ln σ ≤ (u[e])*(x) + γ`, after verifying
/// `u(σx) ≤ v(x) + γ` on the default grid.
pub fn lemma3_gap(u: &WeightFunction, v: &WeightFunction, sigma: f64, gamma: f64, x_grid: &[f64]) -> Result<MarginProfile> {
    if !(sigma > 1.0) {
        return Err(Error::InvalidParameter(format!("sigma must exceed 1, got {sigma}")));
    }
    for x in default_verification_grid() {
        let (l, r) = (u.eval(sigma * x), v.eval(x) + gamma);
        if l > r + eps_check(l.abs().max(r.abs())) {
            return Err(Error::HypothesisViolated(format!("u(sigma*{x}) = {l} > v(x) + gamma = {r}")));
        }
    }
    let (ue, ve) = (u.exp_substitute_shaped(), v.exp_substitute_shaped());
    let mut lhs = Vec::with_capacity(x_grid.len());
    let mut rhs = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        lhs.push(conj_of(&ve, x)? + x * sigma.ln());
        rhs.push(conj_of(&ue, x)? + gamma);
    }
    MarginProfile::from_sides(x_grid.to_vec(), &lhs, &rhs)
}

/// Ratio profile `[g*((1+δ)x) − g*(x)] / x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub xs: Vec<f64>,
    pub ratios: Vec<f64>,
    pub eventually_increasing: bool,
    pub pass: bool,
}

pub fn lemma5_gap_growth(g: &WeightFunction, delta: f64, x_grid: &[f64]) -> Result<GrowthProfile> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    require_superlinear(g, "lemma 5 weight")?;
    let xs: Vec<f64> = x_grid.iter().copied().filter(|&x| x > 0.0).collect();
    if xs.len() < 4 {
        return Err(Error::InvalidParameter("need at least four positive grid points".into()));
    }
    let mut ratios = Vec::with_capacity(xs.len());
    for &x in &xs {
        ratios.push((conj_of(g, (1.0 + delta) * x)? - conj_of(g, x)?) / x);
    }
    let n = ratios.len();
    let tail = &ratios[n - (n / 10).max(2)..];
    let eventually_increasing = tail
        .windows(2)
        .all(|w| w[1] >= w[0] - eps_check(w[0].abs().max(w[1].abs())));
    let pass = eventually_increasing && ratios[n - 1] > ratios[n / 2];
    Ok(GrowthProfile {
        xs,
        ratios,
        eventually_increasing,
        pass,
    })
}

/// Upper and lower margins of `t ln t − t − K ≤ S(t) ≤ t ln t − t` where
/// `S(t) = (u[e])*(t) + (u*[e])*(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub ts: Vec<f64>,
    pub s_values: Vec<f64>,
    pub upper: MarginProfile,
    pub lower: MarginProfile,
    pub k_witness: f64,
    pub k_argmax_t: f64,
}

pub fn lemma67_sandwich(u: &WeightFunction, t_grid: &[f64]) -> Result<SandwichReport> {
    if !u.is_convex() {
        return Err(Error::ConvexityRequired(u.label().to_string()));
    }
    require_superlinear(u, "sandwich weight")?;
    let ue = u.exp_substitute_shaped();
    let use_ = young_conjugate(u).exp_substitute_shaped();
    let ts: Vec<f64> = t_grid.iter().copied().filter(|&t| t > 0.0).collect();
    if ts.is_empty() {
        return Err(Error::InvalidParameter("grid has no positive points".into()));
    }
    let mut s_values = Vec::with_capacity(ts.len());
    let mut bound = Vec::with_capacity(ts.len());
    for &t in &ts {
        s_values.push(conj_of(&ue, t)? + conj_of(&use_, t)?);
        bound.push(xlogx(t) - t);
    }
    let upper = MarginProfile::from_sides(ts.clone(), &s_values, &bound)?;
    let (k_witness, k_arg) = upper
        .margins
        .iter()
        .enumerate()
        .fold((f64::NEG_INFINITY, 0), |acc, (i, &m)| if m > acc.0 { (m, i) } else { acc });
    let shifted: Vec<f64> = bound.iter().map(|b| b - k_witness).collect();
    let lower = MarginProfile::from_sides(ts.clone(), &shifted, &s_values)?;
    Ok(SandwichReport {
        k_argmax_t: ts[k_arg],
        ts,
        s_values,
        upper,
        lower,
        k_witness,
    })
}

/// Result of the index-shift check for the biconjugates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub k: usize,
    pub a: f64,
    pub c_k_a: f64,
    pub profile: MarginProfile,
}

/// Margins of `(ψ_k*)*(x) + A x ≤ (ψ_{k+1}*)*(x) + C(k, A)` with `C(k, A)`
/// the i2 witness on the default grid.
pub fn ineq7_shift(family: &WeightFamily, k: usize, a: f64, x_grid: &[f64]) -> Result<ShiftReport> {
    if !(a >= 0.0) {
        return Err(Error::InvalidParameter(format!("A must be nonnegative, got {a}")));
    }
    let grid = default_verification_grid();
    let c_k_a = if a > 0.0 {
        let params = ConditionParams {
            a_list: vec![a],
            ..ConditionParams::default()
        };
        let rep = check_condition(family, ConditionId::I2, k, &grid, &params)?;
        if !rep.pass {
            return Err(Error::HypothesisViolated(format!("i2 fails for k = {k}, A = {a}")));
        }
        rep.witnesses[0].value
    } else {
        let (phi, next) = (family.phi(k)?, family.phi(k + 1)?);
        let diff: Vec<f64> = grid.iter().map(|&x| phi.eval(x) - next.eval(x)).collect();
        grid_max_witness(&grid, &diff, "C(k, 0)")?.0
    };
    let (pk, pk1) = (family.psi(k)?, family.psi(k + 1)?);
    let mut lhs = Vec::with_capacity(x_grid.len());
    let mut rhs = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        lhs.push(biconjugate_adaptive(&pk, x)? + a * x);
        rhs.push(biconjugate_adaptive(&pk1, x)? + c_k_a);
    }
    Ok(ShiftReport {
        k,
        a,
        c_k_a,
        profile: MarginProfile::from_sides(x_grid.to_vec(), &lhs, &rhs)?,
    })
}

/// Subadditivity for `ψ_k*`, `ψ_{k+1}*` with `τ = ln h_k` and `C = l_k` from
/// the i5 witness (dilation `h` from `params`).
pub fn ineq16_subadd(family: &WeightFamily, k: usize, axis: &[f64], params: &ConditionParams) -> Result<Lemma2Report> {
    let rep = check_condition(family, ConditionId::I5, k, &default_verification_grid(), params)?;
    if !rep.pass {
        return Err(Error::HypothesisViolated(format!("i5 fails for k = {k}")));
    }
    let l_k = rep.witnesses[0].value;
    lemma2_constant(&family.psi(k)?, &family.psi(k + 1)?, params.h.ln(), l_k, axis)
}
