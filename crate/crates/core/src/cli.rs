//! Experiment runner behind the `hallzeta` binary: configuration, dispatch to
//! the numerical modules, and schema-versioned JSON reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ch::{ch_homomorphism_check, ChConfig};
use crate::error::{Error, Result};
use crate::mellin::{
    derivative_rule_check, derivative_sample_points, mellin_closed_form, mellin_forward, mellin_inverse,
    zeta_star_coefficient, LogGaussian, MellinConfig, Strip, VerticalContour,
};
use crate::permutohedron::{cubic_relation_scan, RANK_TOL, ZERO_TOL};
use crate::qforms::{
    bundle_from_tau, constant_term_rank2, eisenstein_hall_product, eisenstein_maass, UpperHalfPoint,
};
use crate::shuffle::{
    f11, f_lambda, lambda_kernel, mult2, phi_kernel, shuffle_product, symmetric_shuffle, untwist, GradedEvaluator,
};
use crate::specfun::{
    find_zeta_zeros, find_zeta_zeros_with_step, gamma, lambda_big, phi, theta, zeta, zeta_star, ZetaZeroCache,
    ZERO_SCAN_STEP,
};

pub const SCHEMA: &str = "report-v1";

/// Residual bound used when a zero cache is computed on the fly.
const CACHE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Zeros {
        range: [f64; 2],
    },
    SpecfunCheck,
    Eisenstein {
        tau: [f64; 2],
        s: [f64; 2],
    },
    HallOracle {
        tau: Vec<[f64; 2]>,
        ch: bool,
    },
    ShuffleCheck {
        trials: usize,
    },
    MellinCheck {
        mellin_tol: f64,
        contour_t: f64,
        contour_nodes: usize,
    },
    WheelScan {
        zero_index: usize,
        grid: Vec<[f64; 2]>,
        offsets: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Zeros { .. } => "zeros",
            Self::SpecfunCheck => "specfun-check",
            Self::Eisenstein { .. } => "eisenstein",
            Self::HallOracle { .. } => "hall-oracle",
            Self::ShuffleCheck { .. } => "shuffle-check",
            Self::MellinCheck { .. } => "mellin-check",
            Self::WheelScan { .. } => "wheel-scan",
        }
    }

    /// Criterion names with their default tolerances.
    pub fn criteria(&self) -> Vec<(&'static str, f64, Bound)> {
        use Bound::*;
        match self {
            Self::Zeros { .. } => vec![("halved-step", 1e-6, Max), ("critical-line-residual", 1e-6, Max)],
            Self::SpecfunCheck => vec![
                ("functional-equation", 1e-9, Max),
                ("phi-reflection", 1e-9, Max),
                ("special-values", 1e-12, Max),
                ("theta-transform", 1e-12, Max),
            ],
            Self::Eisenstein { .. } => vec![
                ("ewald-vs-rows", 1e-8, Max),
                ("modular-invariance", 1e-9, Max),
                ("constant-term", 1e-6, Max),
            ],
            Self::HallOracle { ch, .. } => {
                let mut v = vec![("bridge", 1e-8, Max), ("character-constant-term", 1e-5, Max)];
                if *ch {
                    v.push(("ch-homomorphism", 1e-4, Max));
                }
                v
            }
            Self::ShuffleCheck { .. } => vec![
                ("phi-associativity", 1e-8, Max),
                ("lambda-associativity", 1e-8, Max),
                ("untwist-homomorphism", 1e-8, Max),
                ("diagonal-limit", 1e-7, Max),
                ("quadratic-relations", 1e-8, Max),
            ],
            Self::MellinCheck { .. } => vec![
                ("forward-log-gaussian", 1e-10, Max),
                ("forward-gamma", 1e-10, Max),
                ("forward-theta", 1e-6, Max),
                ("inverse-round-trip", 1e-8, Max),
                ("inverse-strips", 1e-6, Max),
                ("inverse-strips-paper-residues", 1e-6, Max),
                ("derivative-rule", 1e-8, Max),
            ],
            Self::WheelScan { .. } => vec![
                ("wheel-dims", 0.0, Exact),
                ("off-wheel-dims", 0.0, Exact),
                ("euler", 0.0, Exact),
                ("rank-gap", 1e4, Min),
            ],
        }
    }
}

/// How a criterion value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// value < tol
    Max,
    /// value > tol
    Min,
    /// value == tol (mismatch counts)
    Exact,
}

impl Bound {
    fn holds(self, value: f64, tol: f64) -> bool {
        match self {
            Self::Max => value < tol,
            Self::Min => value > tol,
            Self::Exact => value == tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Per-criterion overrides; the key "*" applies to every `max` criterion.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub zero_cache: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self { command, tolerances: BTreeMap::new(), output_path: None, seed: 0, jobs: None, zero_cache: None }
    }

    pub fn tolerance(&self, name: &str, default: f64, bound: Bound) -> f64 {
        if let Some(&t) = self.tolerances.get(name) {
            return t;
        }
        match (bound, self.tolerances.get("*")) {
            (Bound::Max, Some(&t)) => t,
            _ => default,
        }
    }

    /// Checks everything that can be checked without running numerics.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let known = self.command.criteria();
        for (k, &v) in &self.tolerances {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("tolerance {k}={v} must be positive and finite"));
            }
            match known.iter().find(|c| c.0 == k) {
                Some((_, _, Bound::Exact)) => return Err(format!("criterion {k} is an exact count and takes no tolerance")),
                Some(_) => {}
                None if k == "*" => {}
                None => {
                    let names: Vec<&str> = known.iter().map(|c| c.0).collect();
                    return Err(format!("unknown criterion {k} for {}; expected one of {names:?}", self.command.name()));
                }
            }
        }
        if self.jobs == Some(0) {
            return Err("--jobs must be at least 1".into());
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match &self.command {
            Command::Zeros { range } => {
                if !(finite(range) && range[0] >= 0.0 && range[0] < range[1]) {
                    return Err(format!("zero range must satisfy 0 <= a < b, got {range:?}"));
                }
            }
            Command::SpecfunCheck => {}
            Command::Eisenstein { tau, s } => {
                check_tau(tau)?;
                if !(finite(s) && s[0] > 1.0) {
                    return Err(format!("Eisenstein series needs Re s > 1, got {s:?}"));
                }
            }
            Command::HallOracle { tau, .. } => {
                if tau.is_empty() {
                    return Err("hall-oracle needs at least one --tau".into());
                }
                tau.iter().try_for_each(check_tau)?;
            }
            Command::ShuffleCheck { trials } => {
                if *trials == 0 {
                    return Err("shuffle-check needs at least one trial".into());
                }
            }
            Command::MellinCheck { mellin_tol, contour_t, contour_nodes } => {
                if !(*mellin_tol > 0.0 && mellin_tol.is_finite()) {
                    return Err(format!("--mellin-tol must be positive, got {mellin_tol}"));
                }
                VerticalContour::new(vec![2.0], *contour_t, *contour_nodes).map_err(|e| e.to_string())?;
            }
            Command::WheelScan { grid, offsets, .. } => {
                if grid.is_empty() || !grid.iter().all(|c| finite(c)) {
                    return Err("wheel-scan needs a nonempty finite --grid".into());
                }
                if !offsets.iter().all(|o| o.is_finite() && *o != 0.0) {
                    return Err("wheel-scan offsets must be finite and nonzero".into());
                }
            }
        }
        Ok(())
    }
}

fn check_tau(tau: &[f64; 2]) -> std::result::Result<(), String> {
    UpperHalfPoint::new(tau[0], tau[1]).map(|_| ()).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub config: ExperimentConfig,
    pub inputs: Value,
    pub outputs: Value,
    pub criteria: Vec<Criterion>,
    pub pass: bool,
    pub error: Option<String>,
    pub wall_clock_s: f64,
}

impl Report {
    /// Everything except timing; replaying `config` reproduces it exactly.
    pub fn payload(&self) -> Value {
        json!({ "inputs": self.inputs, "outputs": self.outputs, "criteria": self.criteria, "error": self.error })
    }

    pub fn to_json(&self, human: bool) -> String {
        let text = if human { serde_json::to_string_pretty(self) } else { serde_json::to_string(self) };
        text.expect("report serializes")
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass { 0 } else { 1 }
    }
}

/// Pulls the echoed configuration out of a previous report.
pub fn config_from_report(text: &str) -> Result<ExperimentConfig> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("report: {e}")))?;
    if v.get("schema").and_then(Value::as_str) != Some(SCHEMA) {
        return Err(Error::Parse(format!("not a {SCHEMA} report")));
    }
    let cfg = v.get("config").cloned().ok_or_else(|| Error::Parse("report has no config".into()))?;
    serde_json::from_value(cfg).map_err(|e| Error::Parse(format!("config: {e}")))
}

struct Outcome {
    inputs: Value,
    outputs: Value,
    values: Vec<(&'static str, f64)>,
}

/// Runs one experiment. Numeric failures end up in `Report::error`.
pub fn run(cfg: &ExperimentConfig) -> Report {
    let start = Instant::now();
    let result = match &cfg.command {
        Command::Zeros { range } => run_zeros(cfg, *range),
        Command::SpecfunCheck => run_specfun(),
        Command::Eisenstein { tau, s } => run_eisenstein(*tau, *s),
        Command::HallOracle { tau, ch } => run_hall_oracle(tau, *ch),
        Command::ShuffleCheck { trials } => run_shuffle(cfg.seed, *trials),
        Command::MellinCheck { mellin_tol, contour_t, contour_nodes } => {
            run_mellin(*mellin_tol, *contour_t, *contour_nodes)
        }
        Command::WheelScan { zero_index, grid, offsets } => run_wheel_scan(cfg, *zero_index, grid, offsets),
    };
    let (inputs, outputs, criteria, error) = match result {
        Ok(o) => {
            let criteria = cfg
                .command
                .criteria()
                .into_iter()
                .map(|(name, default, bound)| {
                    let tol = cfg.tolerance(name, default, bound);
                    let value = o.values.iter().find(|v| v.0 == name).map_or(f64::NAN, |v| v.1);
                    Criterion { name: name.into(), value, tol, bound, pass: bound.holds(value, tol) }
                })
                .collect();
            (o.inputs, o.outputs, criteria, None)
        }
        Err(e) => (Value::Null, Value::Null, Vec::new(), Some(e.to_string())),
    };
    let pass = error.is_none() && criteria.iter().all(|c| c.pass);
    Report {
        schema: SCHEMA,
        command: cfg.command.name().into(),
        config: cfg.clone(),
        inputs,
        outputs,
        criteria,
        pass,
        error,
        wall_clock_s: start.elapsed().as_secs_f64(),
    }
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

fn run_zeros(cfg: &ExperimentConfig, range: [f64; 2]) -> Result<Outcome> {
    let ordinates = find_zeta_zeros(range[0], range[1])?;
    let halved = find_zeta_zeros_with_step(range[0], range[1], 0.5 * ZERO_SCAN_STEP)?;
    let step_dev = if halved.len() == ordinates.len() {
        ordinates.iter().zip(&halved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let residuals = ordinates.iter().map(|&t| Ok(zeta_star(c(0.5, t))?.norm())).collect::<Result<Vec<f64>>>()?;
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if let Some(path) = &cfg.zero_cache {
        ZetaZeroCache::new(ordinates.clone(), CACHE_TOLERANCE)?.write(path)?;
    }
    Ok(Outcome {
        inputs: json!({ "range": range, "step": ZERO_SCAN_STEP, "halved_step": 0.5 * ZERO_SCAN_STEP }),
        outputs: json!({
            "count": ordinates.len(),
            "ordinates": ordinates,
            "ordinates_halved_step": halved,
            "residuals": residuals,
        }),
        values: vec![("halved-step", step_dev), ("critical-line-residual", worst)],
    })
}

/// 20 points with |Re s| ≤ 4 and |Im s| ≤ 30, away from the poles.
pub fn functional_equation_grid() -> Vec<C> {
    let mut out = Vec::with_capacity(20);
    for &re in &[-3.5, -1.7, 0.25, 2.2, 3.9] {
        for &im in &[-29.0, -7.5, 3.3, 21.0] {
            out.push(c(re, im));
        }
    }
    out
}

fn run_specfun() -> Result<Outcome> {
    let grid = functional_equation_grid();
    let mut fe = Vec::with_capacity(grid.len());
    let mut refl: f64 = 0.0;
    for &s in &grid {
        let z = zeta_star(s)?;
        fe.push((z - zeta_star(1.0 - s)?).norm() / z.norm());
        refl = refl.max((phi(s)? * phi(-s)? - 1.0).norm());
    }
    let specials = [
        ("zeta(2)", zeta(c(2.0, 0.0))?, c(PI * PI / 6.0, 0.0)),
        ("zeta(0)", zeta(c(0.0, 0.0))?, c(-0.5, 0.0)),
        ("zeta(-1)", zeta(c(-1.0, 0.0))?, c(-1.0 / 12.0, 0.0)),
        ("gamma(1/2)", gamma(c(0.5, 0.0))?, c(PI.sqrt(), 0.0)),
        ("Lambda(1)", lambda_big(c(1.0, 0.0))?, c(0.0, 0.0)),
        ("Lambda(-1)", lambda_big(c(-1.0, 0.0))?, c(-2.0, 0.0)),
    ];
    let special_dev = specials.iter().map(|(_, a, b)| (a - b).norm()).fold(0.0, f64::max);
    let mut theta_dev: f64 = 0.0;
    for &b in &[0.05, 0.3, 1.0, 2.7] {
        theta_dev = theta_dev.max((theta(1.0 / b)? - b.sqrt() * theta(b)?).abs());
    }
    Ok(Outcome {
        inputs: json!({ "grid": grid.iter().map(|&s| pair(s)).collect::<Vec<_>>() }),
        outputs: json!({
            "functional_equation_rel_dev": fe,
            "special_values": specials.iter().map(|(n, a, _)| json!({ "name": n, "value": pair(*a) })).collect::<Vec<_>>(),
        }),
        values: vec![
            ("functional-equation", fe.iter().copied().fold(0.0, f64::max)),
            ("phi-reflection", refl),
            ("special-values", special_dev),
            ("theta-transform", theta_dev),
        ],
    })
}

fn run_eisenstein(tau: [f64; 2], s: [f64; 2]) -> Result<Outcome> {
    let t = UpperHalfPoint::new(tau[0], tau[1])?;
    let s = c(s[0], s[1]);
    let rows = eisenstein_maass(t, s, 1e-13)?;
    let ewald = eisenstein_hall_product(2.0 * s - 1.0, c(0.0, 0.0), &bundle_from_tau(t))?;
    let shifted = eisenstein_maass(UpperHalfPoint::new(t.x + 1.0, t.y)?, s, 1e-13)?;
    let inverted = eisenstein_maass(t.inversion(), s, 1e-13)?;
    let modular = rel(shifted, rows).max(rel(inverted, rows));
    let y = t.y;
    let ct = constant_term_rank2(
        |e| {
            let g = e.gram();
            let yy = 1.0 / g[(0, 0)];
            eisenstein_maass(UpperHalfPoint::new(g[(0, 1)] * yy, yy)?, s, 1e-12)
        },
        y.sqrt(),
        1.0 / y.sqrt(),
        48,
    )?;
    let expect = (s * y.ln()).exp() + zeta_star(2.0 * s - 1.0)? / zeta_star(2.0 * s)? * ((1.0 - s) * y.ln()).exp();
    Ok(Outcome {
        inputs: json!({ "tau": tau, "s": pair(s) }),
        outputs: json!({
            "rows": pair(rows),
            "ewald": pair(ewald),
            "constant_term": pair(ct),
            "constant_term_expected": pair(expect),
        }),
        values: vec![
            ("ewald-vs-rows", rel(ewald, rows)),
            ("modular-invariance", modular),
            ("constant-term", (ct - expect).norm()),
        ],
    })
}

pub const CH_SAMPLES: [(f64, f64); 2] = [(2.2, 0.1), (3.0, 0.5)];

pub fn ch_test_functions() -> (LogGaussian, LogGaussian) {
    (
        LogGaussian::new(vec![0.3], vec![0.35], 1.0).expect("valid"),
        LogGaussian::new(vec![-0.2], vec![0.4], 1.0).expect("valid"),
    )
}

fn run_hall_oracle(taus: &[[f64; 2]], with_ch: bool) -> Result<Outcome> {
    let mut bridge = Vec::new();
    let mut bridge_dev: f64 = 0.0;
    for tau in taus {
        let t = UpperHalfPoint::new(tau[0], tau[1])?;
        let e = bundle_from_tau(t);
        for &t12 in &[2.5, 3.0] {
            let direct = eisenstein_maass(t, c((t12 + 1.0) / 2.0, 0.0), 1e-13)?;
            for &t2 in &[0.0, 0.4] {
                let lattice = eisenstein_hall_product(c(t12 + t2, 0.0), c(t2, 0.0), &e)?;
                let d = rel(lattice, direct);
                bridge_dev = bridge_dev.max(d);
                bridge.push(json!({ "tau": tau, "t1": t12 + t2, "t2": t2, "lattice": pair(lattice), "direct": pair(direct), "rel_dev": d }));
            }
        }
    }
    let (t1, t2) = (c(2.2, 0.3), c(0.1, -0.2));
    let mut ct_out = Vec::new();
    let mut ct_dev: f64 = 0.0;
    for &(a1, a2) in &[(0.9, 1.2), (1.3, 0.8)] {
        let ct = constant_term_rank2(|e| eisenstein_hall_product(t1, t2, e), a1, a2, 64)?;
        let twisted = ct * (a2 / a1).sqrt();
        let pw = |a: f64, t: C| (t * a.ln()).exp();
        let expect = pw(a1, t1) * pw(a2, t2) + phi(t1 - t2)? * pw(a1, t2) * pw(a2, t1);
        let d = rel(twisted, expect);
        ct_dev = ct_dev.max(d);
        ct_out.push(json!({ "a1": a1, "a2": a2, "twisted": pair(twisted), "expected": pair(expect), "rel_dev": d }));
    }
    let mut values = vec![("bridge", bridge_dev), ("character-constant-term", ct_dev)];
    let ch = if with_ch {
        let (f1, f2) = ch_test_functions();
        let samples: Vec<(C, C)> = CH_SAMPLES.iter().map(|&(a, b)| (c(a, 0.0), c(b, 0.0))).collect();
        let report = ch_homomorphism_check(&f1, &f2, &samples, &ChConfig::default())?;
        values.push(("ch-homomorphism", report.max_rel_dev));
        serde_json::to_value(&report).expect("serializes")
    } else {
        Value::Null
    };
    Ok(Outcome {
        inputs: json!({ "tau": taus, "t1": pair(t1), "t2": pair(t2), "ch": with_ch }),
        outputs: json!({ "bridge": bridge, "character_constant_term": ct_out, "ch": ch }),
        values,
    })
}

/// Euler constant γ.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn random_c<R: Rng>(rng: &mut R, r: f64) -> C {
    c(rng.random_range(-r..r), rng.random_range(-r..r))
}

/// (α + βs)·exp(as + bs²) with random small coefficients.
fn random_entire<R: Rng>(rng: &mut R) -> GradedEvaluator {
    let (alpha, beta, a, b) = (random_c(rng, 1.0), random_c(rng, 0.5), random_c(rng, 0.5), random_c(rng, 0.05));
    GradedEvaluator::new(1, true, "entire", move |s| Ok((alpha + beta * s[0]) * (a * s[0] + b * s[0] * s[0]).exp()))
}

/// h(s₁)h(s₂)(γ + δs₁s₂ + ε(s₁+s₂)) with h as in [`random_entire`].
fn random_entire_sym2<R: Rng>(rng: &mut R) -> GradedEvaluator {
    let h = random_entire(rng);
    let (g, d, e) = (random_c(rng, 1.0), random_c(rng, 0.5), random_c(rng, 0.5));
    GradedEvaluator::new(2, true, "entire", move |s| {
        Ok(h.eval(&s[..1])? * h.eval(&s[1..])? * (g + d * s[0] * s[1] + e * (s[0] + s[1])))
    })
}

/// n points in [-1.5, 1.5]² whose differences stay 0.15 away from {-1, 0, 1}.
fn random_points<R: Rng>(rng: &mut R, n: usize) -> Vec<C> {
    loop {
        let p: Vec<C> = (0..n).map(|_| random_c(rng, 1.5)).collect();
        let ok = (0..n).all(|i| {
            (i + 1..n).all(|j| {
                let u = p[i] - p[j];
                [-1.0, 0.0, 1.0].iter().all(|&k| (u - k).norm() >= 0.15)
            })
        });
        if ok {
            return p;
        }
    }
}

struct Trial {
    points: Vec<C>,
    phi_assoc: f64,
    lambda_assoc: f64,
    homomorphism: f64,
    diagonal: f64,
}

fn shuffle_trial(seed: u64, k: usize) -> Result<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let (f1, f2, f3) = (random_entire(&mut rng), random_entire(&mut rng), random_entire(&mut rng));
    let g = random_entire_sym2(&mut rng);
    let s = random_points(&mut rng, 3);

    let (pk, lk) = (phi_kernel(), lambda_kernel());
    let left = shuffle_product(&shuffle_product(&f1, &f2, pk.clone()), &f3, pk.clone());
    let right = shuffle_product(&f1, &shuffle_product(&f2, &f3, pk.clone()), pk.clone());
    let phi_assoc = (left.eval(&s)? - right.eval(&s)?).norm();

    let left = symmetric_shuffle(&symmetric_shuffle(&f1, &f2, lk.clone()), &f3, lk.clone());
    let right = symmetric_shuffle(&f1, &symmetric_shuffle(&f2, &f3, lk.clone()), lk.clone());
    let lambda_assoc = (left.eval(&s)? - right.eval(&s)?).norm();

    let star11 = untwist(&symmetric_shuffle(&f1, &f2, lk.clone()), lk.clone());
    let hom11 = (star11.eval(&s[..2])? - shuffle_product(&f1, &f2, pk.clone()).eval(&s[..2])?).norm();
    let star12 = untwist(&symmetric_shuffle(&f1, &g, lk.clone()), lk.clone());
    let circ12 = shuffle_product(&f1, &untwist(&g, lk.clone()), pk);
    let hom12 = (star12.eval(&s)? - circ12.eval(&s)?).norm();

    // (f★g)(s₀, s₀) = (f'g - fg')(s₀) + 2h₀ f(s₀)g(s₀), Λ(u) = 1/u + h₀ + O(u)
    let h0 = 0.5 * (EULER_GAMMA - (4.0 * PI).ln());
    let (a, b, a2, b2) = (random_c(&mut rng, 0.5), random_c(&mut rng, 0.5), random_c(&mut rng, 0.05), random_c(&mut rng, 0.05));
    let f = GradedEvaluator::new(1, true, "entire", move |s| Ok((a * s[0] + a2 * s[0] * s[0]).exp()));
    let gg = GradedEvaluator::new(1, true, "entire", move |s| Ok((b * s[0] + b2 * s[0] * s[0]).exp()));
    let s0 = s[0];
    let (fv, gv) = (f.eval(&[s0])?, gg.eval(&[s0])?);
    let (df, dg) = ((a + 2.0 * a2 * s0) * fv, (b + 2.0 * b2 * s0) * gv);
    let expect = df * gv - fv * dg + 2.0 * h0 * fv * gv;
    let diagonal = (symmetric_shuffle(&f, &gg, lk).eval(&[s0, s0])? - expect).norm();

    Ok(Trial { points: s, phi_assoc, lambda_assoc, homomorphism: hom11.max(hom12), diagonal })
}

/// 25 points (s₁, s₂) with s₂ = 0.2 + 0.25i, Re(s₁ - s₂) ∈ [-1.5, 2.5] and
/// s₁ - s₂ at least 0.1 from {-1, 0, 1}.
pub fn quadratic_relation_grid() -> Vec<[C; 2]> {
    let s2 = c(0.2, 0.25);
    let mut out = Vec::with_capacity(25);
    for &re in &[-1.45, -0.55, 0.5, 1.45, 2.45] {
        for &im in &[-6.0, -2.5, 0.3, 2.5, 6.0] {
            out.push([s2 + c(re, im), s2]);
        }
    }
    out
}

fn run_shuffle(seed: u64, trials: usize) -> Result<Outcome> {
    let results = (0..trials).into_par_iter().map(|k| shuffle_trial(seed, k)).collect::<Result<Vec<_>>>()?;
    let grid: Vec<Vec<[f64; 2]>> = results.iter().map(|t| t.points.iter().map(|&z| pair(z)).collect()).collect();
    let max = |f: fn(&Trial) -> f64| results.iter().map(f).fold(0.0, f64::max);

    let m = mult2(&f11())?;
    let ml = mult2(&f_lambda(2.0, 1.0 / 3.0)?)?;
    let qgrid = quadratic_relation_grid();
    let mut quad: f64 = 0.0;
    for p in &qgrid {
        quad = quad.max(m.eval(p)?.norm()).max(ml.eval(p)?.norm());
    }
    let qgrid_out: Vec<Vec<[f64; 2]>> = qgrid.iter().map(|p| p.iter().map(|&z| pair(z)).collect()).collect();

    let checks = [
        ("phi-associativity", max(|t| t.phi_assoc), 1e-8, &grid),
        ("lambda-associativity", max(|t| t.lambda_assoc), 1e-8, &grid),
        ("untwist-homomorphism", max(|t| t.homomorphism), 1e-8, &grid),
        ("diagonal-limit", max(|t| t.diagonal), 1e-7, &grid),
    ];
    let mut identity = Vec::new();
    let mut values = Vec::new();
    for (name, dev, tol, g) in checks {
        identity.push(json!({ "identity": name, "max_abs_dev": dev, "grid": g, "tolerances": tol }));
        values.push((name, dev));
    }
    identity.push(json!({ "identity": "quadratic-relations", "max_abs_dev": quad, "grid": qgrid_out, "tolerances": 1e-8 }));
    values.push(("quadratic-relations", quad));
    Ok(Outcome {
        inputs: json!({ "seed": seed, "trials": trials, "lambda": [2.0, 1.0 / 3.0] }),
        outputs: json!({ "identities": identity }),
        values,
    })
}

/// Coefficient function of ζ* with the residue corrections ±1/√π.
fn paper_strip_coefficient(a: f64, strip: Strip) -> Result<f64> {
    let th = theta(a * a)?;
    let r = 1.0 / PI.sqrt();
    Ok(match strip {
        Strip::RightOfOne => th - 1.0,
        Strip::ZeroToOne => th - 1.0 - r / a,
        Strip::LeftOfZero => th + r - 1.0 - r / a,
    })
}

pub const STRIP_ABSCISSAE: [f64; 3] = [2.0, 0.5, -1.0];
pub const STRIP_POINTS: [f64; 2] = [0.8, 1.5];

fn run_mellin(mellin_tol: f64, contour_t: f64, contour_nodes: usize) -> Result<Outcome> {
    let cfg = MellinConfig { tol: mellin_tol, ..MellinConfig::default() };
    let inverse_tol = 1e-11;

    let g1 = LogGaussian::new(vec![0.0], vec![1.0], 1.0)?;
    let g2 = LogGaussian::new(vec![0.2, -0.1], vec![0.8, 1.1], 1.5)?;
    let mut lg_dev: f64 = 0.0;
    for s in [vec![c(0.5, 0.0)], vec![c(1.5, 2.0)], vec![c(-2.0, 1.0)], vec![c(0.3, 0.5), c(-0.4, 0.0)]] {
        let g = if s.len() == 1 { &g1 } else { &g2 };
        let v = mellin_forward(|a| Ok(g.eval(a)), &s, &cfg)?;
        lg_dev = lg_dev.max(rel(v, g.mellin(&s)));
    }

    let mut gamma_dev: f64 = 0.0;
    for s in [c(1.0, 0.0), c(2.5, 3.0), c(0.4, -1.0)] {
        let v = mellin_forward(|a| Ok(2.0 * (-a[0] * a[0]).exp()), &[s], &cfg)?;
        gamma_dev = gamma_dev.max((v - gamma(0.5 * s)?).norm());
    }

    let mut theta_out = Vec::new();
    let mut theta_dev: f64 = 0.0;
    for s in [c(2.0, 0.0), c(3.0, 0.0), c(2.0, 5.0)] {
        let v = mellin_forward(|a| Ok(theta(a[0] * a[0])? - 1.0), &[s], &cfg)?;
        let d = (v - zeta_star(s)?).norm();
        theta_dev = theta_dev.max(d);
        theta_out.push(json!({ "s": pair(s), "forward": pair(v), "abs_dev": d }));
    }

    let closed = mellin_closed_form(&g1);
    let mut rt_dev: f64 = 0.0;
    for &sigma in &[-2.0, 0.0, 2.0] {
        let contour = VerticalContour::new(vec![sigma], contour_t, contour_nodes)?;
        for &a in &[0.25, 1.0, 4.0] {
            let v = mellin_inverse(&closed, &[a], &contour, inverse_tol)?;
            rt_dev = rt_dev.max((v - g1.eval(&[a])).norm());
        }
    }

    let zs = GradedEvaluator::new(1, false, "poles at 0 and 1", |s| zeta_star(s[0]));
    let mut strips = Vec::new();
    let (mut strip_dev, mut paper_dev): (f64, f64) = (0.0, 0.0);
    for &sigma in &STRIP_ABSCISSAE {
        let contour = VerticalContour::new(vec![sigma], contour_t, contour_nodes)?;
        let strip = Strip::of(sigma)?;
        for &a in &STRIP_POINTS {
            let v = mellin_inverse(&zs, &[a], &contour, inverse_tol)?.re;
            let (ours, paper) = (zeta_star_coefficient(a, strip)?, paper_strip_coefficient(a, strip)?);
            strip_dev = strip_dev.max((v - ours).abs());
            paper_dev = paper_dev.max((v - paper).abs());
            strips.push(json!({ "sigma0": sigma, "a": a, "inverse": v, "coefficient": ours, "paper_coefficient": paper }));
        }
    }

    let gd = LogGaussian::new(vec![0.3], vec![0.7], 1.0)?;
    let contour = VerticalContour::new(vec![0.5], contour_t, contour_nodes)?;
    let deriv = derivative_rule_check(&gd, 0, &derivative_sample_points(&gd, 0), &contour, inverse_tol)?;

    Ok(Outcome {
        inputs: json!({ "mellin_tol": mellin_tol, "contour_t": contour_t, "contour_nodes": contour_nodes, "inverse_tol": inverse_tol }),
        outputs: json!({ "theta": theta_out, "strips": strips, "derivative": deriv }),
        values: vec![
            ("forward-log-gaussian", lg_dev),
            ("forward-gamma", gamma_dev),
            ("forward-theta", theta_dev),
            ("inverse-round-trip", rt_dev),
            ("inverse-strips", strip_dev),
            ("inverse-strips-paper-residues", paper_dev),
            ("derivative-rule", deriv.max_discrepancy),
        ],
    })
}

/// Reads the cache at `path` if present, otherwise computes enough zeros for
/// `needed` ordinates and stores them at `path`.
pub fn load_or_compute_zeros(path: Option<&std::path::Path>, needed: usize) -> Result<ZetaZeroCache> {
    if let Some(p) = path.filter(|p| p.exists()) {
        let cache = ZetaZeroCache::read(p)?;
        if cache.ordinates.len() >= needed {
            return Ok(cache);
        }
    }
    let mut t_max = 30.0;
    let cache = loop {
        let cache = ZetaZeroCache::compute(0.0, t_max, CACHE_TOLERANCE)?;
        if cache.ordinates.len() >= needed {
            break cache;
        }
        t_max += 30.0;
    };
    if let Some(p) = path {
        cache.write(p)?;
    }
    Ok(cache)
}

fn run_wheel_scan(cfg: &ExperimentConfig, zero_index: usize, grid: &[[f64; 2]], offsets: &[f64]) -> Result<Outcome> {
    let cache = load_or_compute_zeros(cfg.zero_cache.as_deref(), zero_index + 1)?;
    let cs: Vec<C> = grid.iter().map(|p| c(p[0], p[1])).collect();
    let scan = cubic_relation_scan(&cache, zero_index, &cs, offsets, ZERO_TOL, RANK_TOL)?;
    let count = |pred: &dyn Fn(&crate::permutohedron::ScanEntry) -> bool| scan.entries.iter().filter(|e| pred(e)).count() as f64;
    let wheel = count(&|e| e.perturbation.is_none() && e.dims != [3, 3, 1]);
    let off = count(&|e| e.perturbation.is_some() && e.dims != [1, 0, 0]);
    let euler = count(&|e| !e.euler_ok);
    let gap = scan.entries.iter().flat_map(|e| e.singular_value_gaps.iter().flatten()).copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        inputs: json!({
            "zero_index": zero_index,
            "ordinate": cache.ordinates[zero_index],
            "c": grid,
            "offsets": offsets,
            "zero_tol": ZERO_TOL,
            "rank_tol": RANK_TOL,
        }),
        outputs: serde_json::to_value(&scan).expect("serializes"),
        values: vec![("wheel-dims", wheel), ("off-wheel-dims", off), ("euler", euler), ("rank-gap", gap)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let mut cfg = ExperimentConfig::new(Command::WheelScan { zero_index: 0, grid: vec![[0.0, 0.0]], offsets: vec![0.1] });
        cfg.tolerances.insert("rank-gap".into(), 1e3);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"name\":\"wheel-scan\""));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        let unit: ExperimentConfig = serde_json::from_str(r#"{"command":{"name":"specfun-check"}}"#).unwrap();
        assert_eq!(unit, ExperimentConfig::new(Command::SpecfunCheck));
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::new(Command::SpecfunCheck);
        assert!(cfg.validate().is_ok());
        cfg.tolerances.insert("bogus".into(), 1.0);
        assert!(cfg.validate().is_err());
        cfg.tolerances.clear();
        cfg.tolerances.insert("*".into(), -1.0);
        assert!(cfg.validate().is_err());
        let bad = ExperimentConfig::new(Command::Zeros { range: [5.0, 1.0] });
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig::new(Command::Eisenstein { tau: [0.0, -1.0], s: [2.0, 0.0] });
        assert!(bad.validate().is_err());
        let mut w = ExperimentConfig::new(Command::WheelScan { zero_index: 0, grid: vec![[0.0, 0.0]], offsets: vec![0.1] });
        w.tolerances.insert("euler".into(), 1.0);
        assert!(w.validate().is_err());
    }

    #[test]
    fn tolerance_resolution() {
        let mut cfg = ExperimentConfig::new(Command::SpecfunCheck);
        cfg.tolerances.insert("*".into(), 1e-3);
        cfg.tolerances.insert("phi-reflection".into(), 1e-4);
        assert_eq!(cfg.tolerance("functional-equation", 1e-9, Bound::Max), 1e-3);
        assert_eq!(cfg.tolerance("phi-reflection", 1e-9, Bound::Max), 1e-4);
        assert_eq!(cfg.tolerance("rank-gap", 1e4, Bound::Min), 1e4);
    }

    #[test]
    fn specfun_check_passes() {
        let r = run(&ExperimentConfig::new(Command::SpecfunCheck));
        assert!(r.pass, "{}", r.to_json(true));
        assert_eq!(r.criteria.len(), 4);
    }

    #[test]
    fn shuffle_check_is_deterministic() {
        let mut cfg = ExperimentConfig::new(Command::ShuffleCheck { trials: 4 });
        cfg.seed = 7;
        let a = run(&cfg);
        let b = run(&cfg);
        assert!(a.pass, "{}", a.to_json(true));
        assert_eq!(a.payload().to_string(), b.payload().to_string());
        cfg.seed = 8;
        assert_ne!(run(&cfg).payload().to_string(), a.payload().to_string());
    }

    #[test]
    fn numeric_errors_land_in_report() {
        let r = run(&ExperimentConfig::new(Command::WheelScan { zero_index: 0, grid: vec![[0.0, 0.0]], offsets: vec![] }));
        assert!(r.error.is_none());
        let bad = run(&ExperimentConfig::new(Command::Eisenstein { tau: [0.0, 1.0], s: [0.5, 0.0] }));
        assert!(!bad.pass && bad.error.is_some());
        assert_eq!(bad.exit_code(), 1);
    }
}
