//! Declarative scenario files and the deterministic job runner behind the CLI.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! schema_version = 1
//! output = "out/default"
//!
//! [settings]          # all optional
//! seed = 0x5EED
//! budget = 60
//! budget_scale = 1.0
//!
//! [[families]]
//! id = "power"
//! kind = "power"      # or "table" with grid = [...], values = [[...], ...]
//! p = 2.0
//! base = 2.0
//! m_max = 16
//!
//! [[functions]]
//! id = "gauss"
//! n = 1
//! decay = [1.0]
//! terms = [{ alpha = [0], re = 1.0 }]
//!
//! [[jobs]]
//! id = "t1_gauss"
//! kind = "theorem1"
//! family = "power"
//! function = "gauss"
//! m = 1
//! nu = 1
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conjugate::{conjugate_grid, ineq7_shift, lemma1_margin, lemma3_gap, lemma67_sandwich, GridFunction};
use crate::error::{Error, Result};
use crate::fourier::{RELATIVE_FLOOR, fourier_numeric, max_relative_error, FourierSpec};
use crate::functions::{HermiteGaussian, TermSpec, SERIES_CAP};
use crate::numeric::{default_verification_grid, uniform_grid};
use crate::search::SupSearchConfig;
use crate::seminorms::{p_norm, write_sweep_csv, SeminormValue};
use crate::theorems::{
    verify_lemma4, verify_prop_h, verify_theorem1, verify_theorem2, verify_theorem3, verify_theorem4, VerificationReport, VerifyConfig,
    DEFAULT_SEED,
};
use crate::weights::{check_condition, ConditionId, ConditionParams, FamilySpec, WeightFamily};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u32,
    #[serde(default = "default_scale")]
    pub budget_scale: f64,
    #[serde(default)]
    pub sup: SupSearchConfig,
    #[serde(default = "default_points")]
    pub extension_points: usize,
    #[serde(default = "default_samples")]
    pub fourier_samples: usize,
    #[serde(default)]
    pub conditions: ConditionParams,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_budget() -> u32 {
    crate::seminorms::DEFAULT_BUDGET
}
fn default_scale() -> f64 {
    1.0
}
fn default_points() -> usize {
    50
}
fn default_samples() -> usize {
    128
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            budget: default_budget(),
            budget_scale: 1.0,
            sup: SupSearchConfig::default(),
            extension_points: default_points(),
            fourier_samples: default_samples(),
            conditions: ConditionParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDecl {
    pub id: String,
    #[serde(flatten)]
    pub spec: FamilySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDecl {
    pub id: String,
    pub n: usize,
    pub decay: Vec<f64>,
    pub terms: Vec<TermSpec>,
}

impl FunctionDecl {
    pub fn build(&self) -> Result<HermiteGaussian> {
        HermiteGaussian::new(
            self.n,
            self.terms.iter().map(|t| (t.alpha.clone(), num_complex::Complex64::new(t.re, t.im))),
            self.decay.clone(),
        )
    }
}

/// Indices shared by the theorem jobs; `m` doubles as `k` for `prop_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremJob {
    pub family: String,
    pub function: String,
    #[serde(alias = "k")]
    pub m: u32,
    pub nu: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JobKind {
    /// One weight condition at one index on the default grid.
    Condition { family: String, condition: ConditionId, m: usize },
    /// Discrete conjugate of `φ_m` (or `ψ_m`) with a Fenchel–Young check.
    Conjugate {
        family: String,
        m: usize,
        #[serde(default)]
        psi: bool,
        #[serde(default = "default_x_max")]
        x_max: f64,
        #[serde(default = "default_conj_points")]
        points: usize,
    },
    Lemma1 { family: String, m: usize, a: f64, b: f64 },
    Lemma3 { family: String, m: usize, sigma: f64, gamma: f64 },
    Sandwich { family: String, m: usize },
    /// Biconjugate index shift on `[0, x_max]`; the biconjugates grow like
    /// `e^{p x}`, so `x_max` must keep them representable.
    Shift {
        family: String,
        k: usize,
        a: f64,
        #[serde(default = "default_shift_x_max")]
        x_max: f64,
    },
    Fourier {
        function: String,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// `p_{ν,k}` for `k = 0..=k_max`.
    Sweep { family: String, function: String, nu: usize, k_max: u32 },
    Theorem1(TheoremJob),
    Theorem2(TheoremJob),
    Theorem3(TheoremJob),
    Theorem4(TheoremJob),
    PropH(TheoremJob),
    Lemma4(TheoremJob),
}

fn default_x_max() -> f64 {
    10.0
}
fn default_conj_points() -> usize {
    401
}
fn default_shift_x_max() -> f64 {
    20.0
}

impl JobKind {
    pub fn name(&self) -> &'static str {
        match self {
            JobKind::Condition { .. } => "condition",
            JobKind::Conjugate { .. } => "conjugate",
            JobKind::Lemma1 { .. } => "lemma1",
            JobKind::Lemma3 { .. } => "lemma3",
            JobKind::Sandwich { .. } => "sandwich",
            JobKind::Shift { .. } => "shift",
            JobKind::Fourier { .. } => "fourier",
            JobKind::Sweep { .. } => "sweep",
            JobKind::Theorem1(_) => "theorem1",
            JobKind::Theorem2(_) => "theorem2",
            JobKind::Theorem3(_) => "theorem3",
            JobKind::Theorem4(_) => "theorem4",
            JobKind::PropH(_) => "prop_h",
            JobKind::Lemma4(_) => "lemma4",
        }
    }

    fn family(&self) -> Option<&str> {
        match self {
            JobKind::Condition { family, .. }
            | JobKind::Conjugate { family, .. }
            | JobKind::Lemma1 { family, .. }
            | JobKind::Lemma3 { family, .. }
            | JobKind::Sandwich { family, .. }
            | JobKind::Shift { family, .. }
            | JobKind::Sweep { family, .. } => Some(family),
            JobKind::Fourier { .. } => None,
            JobKind::Theorem1(t) | JobKind::Theorem2(t) | JobKind::Theorem3(t) | JobKind::Theorem4(t) | JobKind::PropH(t) | JobKind::Lemma4(t) => {
                Some(&t.family)
            }
        }
    }

    fn function(&self) -> Option<&str> {
        match self {
            JobKind::Fourier { function, .. } | JobKind::Sweep { function, .. } => Some(function),
            JobKind::Theorem1(t) | JobKind::Theorem2(t) | JobKind::Theorem3(t) | JobKind::Theorem4(t) | JobKind::PropH(t) | JobKind::Lemma4(t) => {
                Some(&t.function)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobDecl {
    pub id: String,
    #[serde(flatten)]
    pub kind: JobKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub families: Vec<FamilyDecl>,
    #[serde(default)]
    pub functions: Vec<FunctionDecl>,
    pub jobs: Vec<JobDecl>,
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl Scenario {
    /// Parses and validates; every failure is [`Error::Config`] with a field path.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(path, e.into_inner().to_string().trim_end().to_string())
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let st = &self.settings;
        if st.budget == 0 || st.budget > SERIES_CAP {
            return Err(config_err("settings.budget", format!("must lie in 1..={SERIES_CAP}")));
        }
        if !(st.budget_scale > 0.0) || (st.budget as f64 * st.budget_scale).round() > SERIES_CAP as f64 {
            return Err(config_err("settings.budget_scale", format!("scaled budget must stay within {SERIES_CAP}")));
        }
        st.sup.validate().map_err(|e| config_err("settings.sup", e.to_string()))?;

        let mut families = BTreeMap::new();
        for (i, f) in self.families.iter().enumerate() {
            check_id(&f.id, &format!("families[{i}].id"))?;
            let fam = WeightFamily::from_spec(&f.spec).map_err(|e| config_err(format!("families[{i}]"), e.to_string()))?;
            if families.insert(f.id.clone(), fam.m_max()).is_some() {
                return Err(config_err(format!("families[{i}].id"), format!("duplicate id `{}`", f.id)));
            }
        }
        let mut functions = BTreeSet::new();
        for (i, f) in self.functions.iter().enumerate() {
            check_id(&f.id, &format!("functions[{i}].id"))?;
            f.build().map_err(|e| config_err(format!("functions[{i}]"), e.to_string()))?;
            if !functions.insert(f.id.clone()) {
                return Err(config_err(format!("functions[{i}].id"), format!("duplicate id `{}`", f.id)));
            }
        }
        let mut jobs = BTreeSet::new();
        for (i, j) in self.jobs.iter().enumerate() {
            check_id(&j.id, &format!("jobs[{i}].id"))?;
            if !jobs.insert(j.id.clone()) {
                return Err(config_err(format!("jobs[{i}].id"), format!("duplicate id `{}`", j.id)));
            }
            if let Some(fam) = j.kind.family() {
                if !families.contains_key(fam) {
                    return Err(config_err(format!("jobs[{i}].family"), format!("unknown family `{fam}`")));
                }
            }
            if let Some(fun) = j.kind.function() {
                if !functions.contains(fun) {
                    return Err(config_err(format!("jobs[{i}].function"), format!("unknown function `{fun}`")));
                }
            }
            if let JobKind::Sweep { k_max, .. } = &j.kind {
                if *k_max > SERIES_CAP {
                    return Err(config_err(format!("jobs[{i}].k_max"), format!("must not exceed {SERIES_CAP}")));
                }
            }
        }
        Ok(())
    }

    /// `(id, kind)` in execution order.
    pub fn list(&self) -> Vec<(String, String)> {
        self.jobs.iter().map(|j| (j.id.clone(), j.kind.name().to_string())).collect()
    }
}

fn check_id(id: &str, path: &str) -> Result<()> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(config_err(path, format!("id `{id}` must be non-empty [A-Za-z0-9_-]")));
    }
    Ok(())
}

/// Flag overrides for [`run`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
    pub seed: Option<u64>,
    /// Multiplies the scenario's own budget scale.
    pub budget_scale: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Result of one job; serialized as `report_<id>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub id: String,
    pub kind: String,
    pub function: Option<String>,
    pub family: Option<String>,
    pub pass: bool,
    pub constant: Option<f64>,
    pub log_constant: Option<f64>,
    pub message: Option<String>,
    pub report: Value,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub outcomes: Vec<JobOutcome>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Stable per-job seed, independent of thread scheduling.
fn job_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

struct Ctx<'a> {
    families: BTreeMap<&'a str, WeightFamily>,
    functions: BTreeMap<&'a str, HermiteGaussian>,
    verify: VerifyConfig,
    plots: PathBuf,
}

struct Produced {
    pass: bool,
    constant: Option<f64>,
    log_constant: Option<f64>,
    message: Option<String>,
    report: Value,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::NonFinite(e.to_string()))
}

fn theorem_produced(rep: &VerificationReport) -> Result<Produced> {
    let message = rep.first_failure().map(|c| format!("bound violated: {}", c.label));
    Ok(Produced {
        pass: rep.pass,
        constant: Some(rep.primary_constant()),
        log_constant: Some(rep.primary_log_constant()),
        message,
        report: to_value(rep)?,
    })
}

fn write_seminorms(path: &Path, values: &[SeminormValue]) -> Result<()> {
    let rows: Vec<(String, SeminormValue)> = values.iter().map(|v| (v.name.clone(), v.clone())).collect();
    write_sweep_csv(path, &rows)
}

fn execute(job: &JobDecl, ctx: &Ctx<'_>, seed: u64) -> Result<Produced> {
    let fam = |id: &str| ctx.families.get(id).expect("validated");
    let fun = |id: &str| ctx.functions.get(id).expect("validated");
    let plot = |suffix: &str| ctx.plots.join(format!("{}_{suffix}.csv", job.id));
    let cfg = VerifyConfig { seed, ..ctx.verify.clone() };
    let grid = default_verification_grid();
    match &job.kind {
        JobKind::Condition { family, condition, m } => {
            let r = check_condition(fam(family), *condition, *m, &grid, &ctx.verify.condition_params)?;
            let message = (!r.pass).then(|| format!("condition {condition} fails at m = {m} (margin {})", r.min_margin));
            Ok(Produced {
                pass: r.pass,
                constant: r.witnesses.first().map(|w| w.value),
                log_constant: None,
                message,
                report: to_value(&r)?,
            })
        }
        JobKind::Conjugate { family, m, psi, x_max, points } => {
            let f = fam(family);
            let g = if *psi { f.psi(*m)? } else { f.phi(*m)?.clone() };
            if *points < 3 || !(*x_max > 0.0) {
                return Err(Error::InvalidParameter("conjugate job needs points >= 3 and x_max > 0".into()));
            }
            let xs = uniform_grid(0.0, *x_max, *points);
            let gf = GridFunction::sample(|x| g.eval(x), xs.clone())?;
            let h = xs[1] - xs[0];
            let s_max = (gf.ys()[points - 1] - gf.ys()[points - 2]) / h;
            let slopes = uniform_grid(0.0, s_max.max(1.0), *points);
            let r = conjugate_grid(&gf, &slopes)?;
            r.write_csv(&plot("conjugate"))?;
            let mut worst = f64::INFINITY;
            for (s, v) in slopes.iter().zip(&r.values) {
                for (x, y) in xs.iter().zip(gf.ys()) {
                    let margin = y + v - s * x;
                    worst = worst.min(margin / (1.0 + (s * x).abs()));
                }
            }
            let monotone = r.values.windows(2).all(|w| w[1] >= w[0]);
            let pass = worst >= -1e-12 && monotone;
            Ok(Produced {
                pass,
                constant: None,
                log_constant: None,
                message: (!pass).then(|| "Fenchel-Young or monotonicity violated".to_string()),
                report: json!({ "label": g.label(), "fenchel_young_min_margin": worst, "monotone": monotone, "result": r }),
            })
        }
        JobKind::Lemma1 { family, m, a, b } => {
            let r = lemma1_margin(fam(family).phi(*m)?, *a, *b, &grid)?;
            r.write_csv(&plot("margin"))?;
            margin_produced(&r, "lemma1 margin negative")
        }
        JobKind::Lemma3 { family, m, sigma, gamma } => {
            let f = fam(family);
            let r = lemma3_gap(f.phi(*m)?, f.phi(*m + 1)?, *sigma, *gamma, &grid)?;
            r.write_csv(&plot("margin"))?;
            margin_produced(&r, "lemma3 gap negative")
        }
        JobKind::Sandwich { family, m } => {
            let ts: Vec<f64> = grid.iter().copied().filter(|t| *t >= 1e-2 && *t <= 100.0).collect();
            let r = lemma67_sandwich(fam(family).phi(*m)?, &ts)?;
            r.upper.write_csv(&plot("upper"))?;
            let pass = r.upper.pass && r.lower.pass && r.k_witness.is_finite();
            Ok(Produced {
                pass,
                constant: Some(r.k_witness),
                log_constant: None,
                message: (!pass).then(|| "sandwich bounds violated".to_string()),
                report: to_value(&r)?,
            })
        }
        JobKind::Shift { family, k, a, x_max } => {
            let r = ineq7_shift(fam(family), *k, *a, &uniform_grid(0.0, *x_max, 81))?;
            r.profile.write_csv(&plot("margin"))?;
            Ok(Produced {
                pass: r.profile.pass,
                constant: Some(r.c_k_a),
                log_constant: None,
                message: (!r.profile.pass).then(|| "shift inequality violated".to_string()),
                report: to_value(&r)?,
            })
        }
        JobKind::Fourier { function, samples } => {
            let f = fun(function);
            let mut s = *samples;
            for _ in 1..f.dim() {
                s /= 2;
            }
            let spec = FourierSpec::fitted(f, s.max(16))?;
            let num = fourier_numeric(f, &spec)?;
            let exact = crate::fourier::fourier_closed_form(f)?;
            let err = max_relative_error(&num, &exact, &num.nodes_within(spec.half_width / 2.0), RELATIVE_FLOOR)?;
            if f.dim() <= 2 {
                num.write_csv(&plot("transform"))?;
            }
            let pass = err <= 1e-8;
            Ok(Produced {
                pass,
                constant: Some(err),
                log_constant: None,
                message: (!pass).then(|| format!("transform error {err:e} exceeds 1e-8")),
                report: json!({ "spec": spec, "max_relative_error": err }),
            })
        }
        JobKind::Sweep { family, function, nu, k_max } => {
            let sup = cfg.sup_for(2 * fun(function).dim());
            let mut vals = Vec::new();
            for k in 0..=*k_max {
                vals.push(p_norm(fun(function), fam(family), *nu, k, &sup)?);
            }
            write_seminorms(&plot("sweep"), &vals)?;
            let pass = vals.iter().all(|v| v.converged);
            Ok(Produced {
                pass,
                constant: None,
                log_constant: None,
                message: (!pass).then(|| "unconverged seminorm in sweep".to_string()),
                report: to_value(&vals)?,
            })
        }
        JobKind::Theorem1(t) => {
            let r = verify_theorem1(fun(&t.function), fam(&t.family), t.m, t.nu, &cfg)?;
            write_seminorms(&plot("seminorms"), &r.seminorms)?;
            theorem_produced(&r)
        }
        JobKind::Theorem2(t) => {
            let r = verify_theorem2(fun(&t.function), fam(&t.family), t.m, t.nu, &cfg)?;
            write_seminorms(&plot("seminorms"), &r.seminorms)?;
            theorem_produced(&r)
        }
        JobKind::Theorem3(t) => {
            let r = verify_theorem3(fun(&t.function), fam(&t.family), t.m, t.nu, &cfg)?;
            write_seminorms(&plot("seminorms"), &r.seminorms)?;
            theorem_produced(&r)
        }
        JobKind::Theorem4(t) => {
            let (r, sweep) = verify_theorem4(fun(&t.function), fam(&t.family), t.m, t.nu, &cfg)?;
            write_seminorms(&plot("seminorms"), &r.seminorms)?;
            let mut w = csv::Writer::from_path(plot("shift"))?;
            w.write_record(["nu_target", "ratio"])?;
            for (n, q) in sweep.nu_targets.iter().zip(&sweep.ratios) {
                w.write_record([n.to_string(), format!("{q:?}")])?;
            }
            w.flush()?;
            let mut p = theorem_produced(&r)?;
            p.report = json!({ "verification": p.report, "shift_sweep": sweep });
            Ok(p)
        }
        JobKind::PropH(t) => {
            let r = verify_prop_h(fun(&t.function), fam(&t.family), t.m, t.nu, &cfg)?;
            write_seminorms(&plot("seminorms"), &r.seminorms)?;
            theorem_produced(&r)
        }
        JobKind::Lemma4(t) => {
            let r = verify_lemma4(fun(&t.function), fam(&t.family), t.m, t.nu, &cfg)?;
            write_seminorms(&plot("seminorms"), &r.seminorms)?;
            theorem_produced(&r)
        }
    }
}

fn margin_produced(r: &crate::conjugate::MarginProfile, fail: &str) -> Result<Produced> {
    Ok(Produced {
        pass: r.pass,
        constant: Some(r.min_margin),
        log_constant: None,
        message: (!r.pass).then(|| format!("{fail} (min {} at x = {})", r.min_margin, r.argmin_x)),
        report: to_value(r)?,
    })
}

fn run_one(job: &JobDecl, ctx: &Ctx<'_>, seed: u64) -> JobOutcome {
    let mut out = JobOutcome {
        id: job.id.clone(),
        kind: job.kind.name().to_string(),
        function: job.kind.function().map(str::to_string),
        family: job.kind.family().map(str::to_string),
        pass: false,
        constant: None,
        log_constant: None,
        message: None,
        report: Value::Null,
    };
    match execute(job, ctx, job_seed(seed, &job.id)) {
        Ok(p) => {
            out.pass = p.pass;
            out.constant = p.constant;
            out.log_constant = p.log_constant;
            out.message = p.message.map(|m| format!("job {}: {m}", job.id));
            out.report = p.report;
        }
        Err(e) => out.message = Some(format!("job {}: {e}", job.id)),
    }
    out
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::NonFinite(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Runs every job and writes `report_<id>.json`, `summary.csv`,
/// `digest.txt`, `plots/*.csv` and `meta.json` under the output directory.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let out_dir = opts
        .out
        .clone()
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from("gsw-out"));
    let plots = out_dir.join("plots");
    fs::create_dir_all(&plots)?;

    let st = &scenario.settings;
    let budget_scale = st.budget_scale * opts.budget_scale.unwrap_or(1.0);
    if !(budget_scale > 0.0) || (st.budget as f64 * budget_scale).round() > SERIES_CAP as f64 {
        return Err(config_err("--budget-scale", format!("scaled budget must stay within {SERIES_CAP}")));
    }
    let seed = opts.seed.unwrap_or(st.seed);
    let mut families = BTreeMap::new();
    for f in &scenario.families {
        families.insert(f.id.as_str(), WeightFamily::from_spec(&f.spec)?);
    }
    let mut functions = BTreeMap::new();
    for f in &scenario.functions {
        functions.insert(f.id.as_str(), f.build()?);
    }
    let ctx = Ctx {
        families,
        functions,
        verify: VerifyConfig {
            sup: st.sup.clone(),
            budget: st.budget,
            budget_scale,
            seed,
            extension_points: st.extension_points,
            fourier_samples: st.fourier_samples,
            condition_params: st.conditions.clone(),
        },
        plots,
    };

    let n = scenario.jobs.len();
    let threads = opts.jobs.clamp(1, n.max(1));
    let slots: Mutex<Vec<Option<JobOutcome>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let o = run_one(&scenario.jobs[i], &ctx, seed);
                slots.lock().expect("poisoned")[i] = Some(o);
            });
        }
    });
    let outcomes: Vec<JobOutcome> = slots.into_inner().expect("poisoned").into_iter().map(|o| o.expect("every job ran")).collect();

    for o in &outcomes {
        write_json(&out_dir.join(format!("report_{}.json", o.id)), o)?;
    }
    let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    w.write_record(["job", "kind", "function", "family", "constant", "log_constant", "pass", "message"])?;
    for o in &outcomes {
        w.write_record([
            o.id.clone(),
            o.kind.clone(),
            o.function.clone().unwrap_or_default(),
            o.family.clone().unwrap_or_default(),
            opt_f64(o.constant),
            opt_f64(o.log_constant),
            o.pass.to_string(),
            o.message.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let passed = outcomes.iter().filter(|o| o.pass).count();
    let mut digest = format!("{passed}/{n} jobs passed\n\n");
    for o in &outcomes {
        let c = o.constant.map(|c| format!(" constant {c:.6e}")).unwrap_or_default();
        digest.push_str(&format!("[{}] {} ({}){c}\n", if o.pass { "PASS" } else { "FAIL" }, o.id, o.kind));
        if let Some(m) = &o.message {
            digest.push_str(&format!("       {m}\n"));
        }
    }
    fs::write(out_dir.join("digest.txt"), digest)?;

    let unix = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    write_json(
        &out_dir.join("meta.json"),
        &json!({
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix": unix(started),
            "finished_unix": unix(SystemTime::now()),
            "elapsed_seconds": clock.elapsed().as_secs_f64(),
            "threads": threads,
            "seed": seed,
            "budget_scale": budget_scale,
            "jobs": n,
            "passed": passed,
        }),
    )?;
    Ok(RunSummary { out_dir, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"
schema_version = 1

[[families]]
id = "power"
kind = "power"
p = 2.0
base = 2.0
m_max = 16

[[functions]]
id = "g"
n = 1
decay = [1.0]
terms = [{ alpha = [0], re = 1.0 }]

[[jobs]]
id = "c1"
kind = "condition"
family = "power"
condition = "i3"
m = 2

[[jobs]]
id = "t1"
kind = "theorem1"
family = "power"
function = "g"
m = 0
nu = 1
"#;

    #[test]
    fn parses_and_lists() {
        let s = Scenario::parse(MINI).unwrap();
        assert_eq!(s.settings.seed, 0x5EED);
        assert_eq!(s.list(), vec![("c1".into(), "condition".into()), ("t1".into(), "theorem1".into())]);
    }

    #[test]
    fn missing_decay_names_path() {
        let bad = MINI.replace("decay = [1.0]\n", "");
        match Scenario::parse(&bad) {
            Err(Error::Config { path, message }) => {
                assert!(path.contains("functions"), "{path}");
                assert!(message.contains("decay"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_reference_rejected() {
        let bad = MINI.replace("function = \"g\"", "function = \"nope\"");
        assert!(matches!(Scenario::parse(&bad), Err(Error::Config { .. })));
    }

    #[test]
    fn run_is_deterministic_across_threads() {
        let s = Scenario::parse(MINI).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let r1 = run(&s, &RunOptions { jobs: 1, out: Some(d1.path().into()), ..Default::default() }).unwrap();
        let r2 = run(&s, &RunOptions { jobs: 2, out: Some(d2.path().into()), ..Default::default() }).unwrap();
        assert!(r1.all_pass() && r2.all_pass());
        for id in ["c1", "t1"] {
            let name = format!("report_{id}.json");
            assert_eq!(fs::read(d1.path().join(&name)).unwrap(), fs::read(d2.path().join(&name)).unwrap());
        }
        assert_eq!(fs::read(d1.path().join("summary.csv")).unwrap(), fs::read(d2.path().join("summary.csv")).unwrap());
    }
}
