//! Grid-plus-refinement maximizer for log-space objectives over boxes
//! `[−X, X]^d`, and a radial interpolation cache for conjugate weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid and box-growth settings for sup searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupSearchConfig {
    /// Initial box half-width `X`.
    pub half_width: f64,
    /// Points per axis (odd, ≥ 33); 0 picks a default by dimension.
    pub points_per_axis: usize,
    pub refinement_rounds: usize,
    /// Box growth factor between expansions.
    pub growth: f64,
    pub max_expansions: usize,
}

impl Default for SupSearchConfig {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            points_per_axis: 0,
            refinement_rounds: 12,
            growth: 1.5,
            max_expansions: 12,
        }
    }
}

/// Boundary values must sit this far (in log) below the running sup.
pub const BOUNDARY_LOG_GAP: f64 = -20.723_265_836_946_41; // ln 1e-9
/// Allowed log-change of the sup across the last box growth (0.1%).
pub const STABLE_LOG_CHANGE: f64 = 9.995_003_330_835_33e-4; // ln 1.001

const TOP_SEEDS: usize = 3;

impl SupSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::InvalidParameter(format!("half width must be positive, got {}", self.half_width)));
        }
        if self.points_per_axis != 0 && (self.points_per_axis < 33 || self.points_per_axis % 2 == 0) {
            return Err(Error::InvalidParameter(format!(
                "points per axis must be odd and at least 33, got {}",
                self.points_per_axis
            )));
        }
        if self.refinement_rounds == 0 {
            return Err(Error::InvalidParameter("at least one refinement round is required".into()));
        }
        if !(self.growth > 1.0) {
            return Err(Error::InvalidParameter(format!("growth must exceed 1, got {}", self.growth)));
        }
        Ok(())
    }

    pub fn points_for_dim(&self, d: usize) -> usize {
        if self.points_per_axis != 0 {
            return self.points_per_axis;
        }
        match d {
            1 => 257,
            2 => 65,
            3 => 41,
            _ => 33,
        }
    }

    /// Same config with `factor`-times denser grids (odd point counts kept).
    pub fn densified(&self, factor: usize, d: usize) -> Self {
        let p = self.points_for_dim(d);
        Self {
            points_per_axis: (p - 1) * factor.max(1) + 1,
            ..self.clone()
        }
    }
}

/// Result of a sup search.
#[derive(Debug, Clone, PartialEq)]
pub struct SupOutcome {
    pub log_value: f64,
    pub argmax: Vec<f64>,
    /// Objective-specific label of the winning term.
    pub tag: usize,
    pub half_width: f64,
    pub boundary_log: f64,
    /// The sup changed by less than 0.1% across the last box growth.
    pub stable: bool,
    /// Per-shell maxima collected by the objective over the final box.
    pub shells: Vec<f64>,
}

/// Objective: `(point, shell accumulator) ↦ (log value, tag)`.
pub type Objective<'a> = dyn Fn(&[f64], &mut [f64]) -> Result<(f64, usize)> + 'a;

struct BoxResult {
    log_value: f64,
    argmax: Vec<f64>,
    tag: usize,
    boundary_log: f64,
    on_boundary: bool,
    shells: Vec<f64>,
}

fn search_box(d: usize, half: f64, points: usize, rounds: usize, n_shells: usize, obj: &Objective<'_>) -> Result<BoxResult> {
    let spacing = 2.0 * half / (points - 1) as f64;
    let coord = |i: usize| -half + i as f64 * spacing;
    let total = points.pow(d as u32);
    let mut shells = vec![f64::NEG_INFINITY; n_shells];
    let mut coarse: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
    let mut boundary_log = f64::NEG_INFINITY;
    let mut p = vec![0.0; d];
    let mut idx = vec![0usize; d];
    for flat in 0..total {
        let mut rest = flat;
        let mut edge = false;
        for j in (0..d).rev() {
            idx[j] = rest % points;
            rest /= points;
            p[j] = coord(idx[j]);
            edge |= idx[j] == 0 || idx[j] == points - 1;
        }
        let (v, tag) = obj(&p, &mut shells)?;
        if v.is_nan() {
            return Err(Error::NonFinite(format!("sup objective at {p:?}")));
        }
        if edge {
            boundary_log = boundary_log.max(v);
        }
        coarse.push((v, tag, flat));
    }
    let point_of = |flat: usize| -> Vec<f64> {
        let mut rest = flat;
        let mut q = vec![0.0; d];
        for j in (0..d).rev() {
            q[j] = coord(rest % points);
            rest /= points;
        }
        q
    };
    let mut order: Vec<usize> = (0..coarse.len()).collect();
    order.sort_by(|&a, &b| coarse[b].0.total_cmp(&coarse[a].0).then(a.cmp(&b)));
    let best_coarse = order[0];
    let on_boundary = {
        let mut rest = coarse[best_coarse].2;
        let mut e = false;
        for _ in 0..d {
            let i = rest % points;
            rest /= points;
            e |= i == 0 || i == points - 1;
        }
        e
    };

    let (mut best_v, mut best_tag) = (coarse[best_coarse].0, coarse[best_coarse].1);
    let mut best_p = point_of(coarse[best_coarse].2);
    let local: usize = if d <= 2 { 11 } else { 7 };
    for &seed in order.iter().take(TOP_SEEDS) {
        if coarse[seed].0 == f64::NEG_INFINITY {
            break;
        }
        let mut center = point_of(coarse[seed].2);
        let mut center_v = coarse[seed].0;
        let mut w = 2.0 * spacing;
        for _ in 0..rounds {
            let step = 2.0 * w / (local - 1) as f64;
            let mut round_best = (center_v, center.clone());
            let count = local.pow(d as u32);
            for flat in 0..count {
                let mut rest = flat;
                for j in (0..d).rev() {
                    let k = rest % local;
                    rest /= local;
                    p[j] = (center[j] - w + k as f64 * step).clamp(-half, half);
                }
                let (v, tag) = obj(&p, &mut shells)?;
                if v.is_nan() {
                    return Err(Error::NonFinite(format!("sup objective at {p:?}")));
                }
                if v > round_best.0 {
                    round_best = (v, p.clone());
                }
                if v > best_v {
                    best_v = v;
                    best_tag = tag;
                    best_p = p.clone();
                }
            }
            center_v = round_best.0;
            center = round_best.1;
            w *= 0.4;
        }
    }
    Ok(BoxResult {
        log_value: best_v,
        argmax: best_p,
        tag: best_tag,
        boundary_log,
        on_boundary,
        shells,
    })
}

/// Maximizes `obj` over growing boxes until the boundary is negligible and
/// the sup is stable across the last growth. Fails with `WeightTooWeak` when
/// the coarse argmax sits on the boundary for two consecutive boxes or the
/// boundary never becomes negligible.
pub fn sup_search(d: usize, initial_half_width: f64, cfg: &SupSearchConfig, n_shells: usize, obj: &Objective<'_>) -> Result<SupOutcome> {
    cfg.validate()?;
    if d == 0 {
        return Err(Error::InvalidParameter("search dimension must be at least 1".into()));
    }
    let points = cfg.points_for_dim(d);
    let mut half = initial_half_width.max(cfg.half_width);
    let mut prev = search_box(d, half, points, cfg.refinement_rounds, n_shells, obj)?;
    let mut boundary_streak = usize::from(prev.on_boundary);
    for _ in 0..cfg.max_expansions {
        half *= cfg.growth;
        let cur = search_box(d, half, points, cfg.refinement_rounds, n_shells, obj)?;
        boundary_streak = if cur.on_boundary { boundary_streak + 1 } else { 0 };
        if boundary_streak >= 2 {
            return Err(Error::WeightTooWeak { half_width: half });
        }
        let negligible = cur.boundary_log < cur.log_value + BOUNDARY_LOG_GAP || cur.log_value == f64::NEG_INFINITY;
        let stable = (cur.log_value - prev.log_value).abs() <= STABLE_LOG_CHANGE
            || (cur.log_value == f64::NEG_INFINITY && prev.log_value == f64::NEG_INFINITY);
        if negligible && stable {
            return Ok(SupOutcome {
                log_value: cur.log_value,
                argmax: cur.argmax,
                tag: cur.tag,
                half_width: half,
                boundary_log: cur.boundary_log,
                stable: true,
                shells: cur.shells,
            });
        }
        prev = cur;
    }
    if prev.boundary_log >= prev.log_value + BOUNDARY_LOG_GAP {
        return Err(Error::WeightTooWeak { half_width: half });
    }
    Ok(SupOutcome {
        log_value: prev.log_value,
        argmax: prev.argmax,
        tag: prev.tag,
        half_width: half,
        boundary_log: prev.boundary_log,
        stable: false,
        shells: prev.shells,
    })
}

/// Number of geometric nodes in a [`RadialCache`].
pub const RADIAL_NODES: usize = 512;

/// Interpolation cache for a radial function on `[0, r_max]`: a node at 0
/// plus [`RADIAL_NODES`] geometric nodes on `[1e-4·r_max, r_max]`, local
/// 4-point Lagrange interpolation. Queries beyond `r_max` rebuild the cache
/// on a doubled range.
pub struct RadialCache<'a> {
    f: Box<dyn Fn(f64) -> Result<f64> + 'a>,
    nodes: Vec<f64>,
    values: Vec<f64>,
    r_max: f64,
}

impl<'a> RadialCache<'a> {
    pub fn new(f: impl Fn(f64) -> Result<f64> + 'a, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidParameter(format!("cache range must be positive, got {r_max}")));
        }
        let mut c = Self {
            f: Box::new(f),
            nodes: Vec::new(),
            values: Vec::new(),
            r_max: 0.0,
        };
        c.rebuild(r_max)?;
        Ok(c)
    }

    fn rebuild(&mut self, r_max: f64) -> Result<()> {
        let mut nodes = Vec::with_capacity(RADIAL_NODES + 1);
        nodes.push(0.0);
        nodes.extend(crate::numeric::geometric_grid(1e-4 * r_max, r_max, RADIAL_NODES));
        let mut values = Vec::with_capacity(nodes.len());
        for &r in &nodes {
            let v = (self.f)(r)?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("radial weight at r = {r}")));
            }
            values.push(v);
        }
        self.nodes = nodes;
        self.values = values;
        self.r_max = r_max;
        Ok(())
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn eval(&mut self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::InvalidParameter(format!("radial query must be >= 0, got {r}")));
        }
        if r > self.r_max {
            let mut target = self.r_max;
            while target < r {
                target *= 2.0;
            }
            self.rebuild(target)?;
        }
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&x| x <= r).clamp(1, n - 1) - 1;
        let lo = i.saturating_sub(1).min(n - 4);
        let xs = &self.nodes[lo..lo + 4];
        let ys = &self.values[lo..lo + 4];
        let mut acc = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (r - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += w * ys[a];
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_offset_peak() {
        let cfg = SupSearchConfig::default();
        let obj = |p: &[f64], _: &mut [f64]| Ok((-(p[0] - 0.3137).powi(2) - (p[1] + 1.1).powi(2), 0));
        let r = sup_search(2, 2.0, &cfg, 0, &obj).unwrap();
        assert!(r.log_value.abs() < 1e-10);
        assert!((r.argmax[0] - 0.3137).abs() < 1e-4);
        assert!(r.stable);
    }

    #[test]
    fn growing_objective_is_too_weak() {
        let cfg = SupSearchConfig::default();
        let obj = |p: &[f64], _: &mut [f64]| Ok((0.5 * p[0] * p[0], 0));
        assert!(matches!(sup_search(1, 1.0, &cfg, 0, &obj), Err(Error::WeightTooWeak { .. })));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SupSearchConfig::default();
        cfg.points_per_axis = 32;
        assert!(cfg.validate().is_err());
        cfg.points_per_axis = 33;
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.densified(2, 1).points_per_axis, 65);
    }

    #[test]
    fn radial_cache_is_exact_on_cubics() {
        let mut c = RadialCache::new(|r| Ok(r * r / 16.0 + r * r * r), 10.0).unwrap();
        for &r in &[0.0, 1e-4, 0.37, 3.3, 9.99, 10.0] {
            let v = c.eval(r).unwrap();
            let e = r * r / 16.0 + r * r * r;
            assert!((v - e).abs() <= 1e-9 * (1.0 + e), "{r}: {v} vs {e}");
        }
        let v = c.eval(25.0).unwrap();
        assert!(c.r_max() >= 25.0);
        assert!((v - (625.0 / 16.0 + 15625.0)).abs() < 1e-6);
    }
}
