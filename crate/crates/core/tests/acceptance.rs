//! Acceptance criteria, one line each. Tolerances and runtime limits are
//! pinned here; a criterion listed in `EXPECTED_FAILURES` still prints FAIL
//! but does not fail the run.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hallzeta::ch::{ch_homomorphism_check, ChConfig};
use hallzeta::cli::{self, ch_test_functions, functional_equation_grid, quadratic_relation_grid, CH_SAMPLES};
use hallzeta::mellin::{mellin_forward, mellin_inverse, MellinConfig, VerticalContour};
use hallzeta::permutohedron::{
    build_complex, cohomology_dims, cubic_relation_scan, random_wheel_free, random_wheel_free_exact, RANK_TOL,
    ZERO_TOL,
};
use hallzeta::qforms::{bundle_from_tau, eisenstein_hall_product, eisenstein_maass, UpperHalfPoint};
use hallzeta::quad::gauss_legendre_on;
use hallzeta::shuffle::{f11, f_lambda, mult2, GradedEvaluator};
use hallzeta::specfun::{theta, zeta_star, ZetaZeroCache};
use hallzeta::{Complex64 as C, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The residue corrections ±1/√π in the inverse formula for ζ* do not match
/// Res_{s=1} ζ* = 1; the shifted-strip coefficients are off by (1 - 1/√π)/a
/// and (1 - 1/√π)(1 - 1/a).
const EXPECTED_FAILURES: &[usize] = &[2];

struct Measured {
    value: f64,
    detail: String,
}

struct Criterion {
    id: usize,
    name: &'static str,
    tol: f64,
    limit: Option<Duration>,
    check: fn() -> Result<Measured>,
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn functional_equation() -> Result<Measured> {
    let mut worst: f64 = 0.0;
    for s in functional_equation_grid() {
        let z = zeta_star(s)?;
        worst = worst.max((z - zeta_star(1.0 - s)?).norm() / z.norm());
    }
    Ok(Measured { value: worst, detail: "20 points, |Re s| <= 4, |Im s| <= 30".into() })
}

/// θ(a²) - 1 - 1/(a√π) for 0 < Re s < 1, θ(a²) + 1/√π - 1 - 1/(a√π) for Re s < 0.
fn literal_coefficient(a: f64, sigma: f64) -> Result<f64> {
    let th = theta(a * a)?;
    let r = 1.0 / PI.sqrt();
    Ok(if sigma > 1.0 {
        th - 1.0
    } else if sigma > 0.0 {
        th - 1.0 - r / a
    } else {
        th + r - 1.0 - r / a
    })
}

fn riemann_formula() -> Result<Measured> {
    let cfg = MellinConfig::default();
    let mut forward: f64 = 0.0;
    for s in [c(2.0, 0.0), c(3.0, 0.0), c(2.0, 5.0)] {
        let v = mellin_forward(|a| Ok(theta(a[0] * a[0])? - 1.0), &[s], &cfg)?;
        forward = forward.max((v - zeta_star(s)?).norm());
    }
    let zs = GradedEvaluator::new(1, false, "poles at 0 and 1", |s| zeta_star(s[0]));
    let mut strips = Vec::new();
    for sigma in [2.0, 0.5, -1.0] {
        let contour = VerticalContour::standard(vec![sigma]);
        let mut worst: f64 = 0.0;
        for a in [0.8, 1.5] {
            let v = mellin_inverse(&zs, &[a], &contour, 1e-11)?.re;
            worst = worst.max((v - literal_coefficient(a, sigma)?).abs());
        }
        strips.push(worst);
    }
    let value = strips.iter().copied().fold(forward, f64::max);
    Ok(Measured {
        value,
        detail: format!("forward {forward:.1e}; inverse by strip (Re>1, 0<Re<1, Re<0) {:.1e} {:.1e} {:.1e}", strips[0], strips[1], strips[2]),
    })
}

fn zeta_zeros() -> Result<Measured> {
    let out = Command::new(env!("CARGO_BIN_EXE_hallzeta"))
        .args(["zeros", "--range", "0", "30"])
        .output()
        .map_err(|e| hallzeta::Error::Io(e.to_string()))?;
    let r: serde_json::Value =
        serde_json::from_slice(&out.stdout).map_err(|e| hallzeta::Error::Parse(e.to_string()))?;
    let ords: Vec<f64> = r["outputs"]["ordinates"].as_array().into_iter().flatten().filter_map(|v| v.as_f64()).collect();
    let halved: Vec<f64> =
        r["outputs"]["ordinates_halved_step"].as_array().into_iter().flatten().filter_map(|v| v.as_f64()).collect();
    if ords.len() != 3 || halved.len() != 3 {
        return Ok(Measured { value: f64::INFINITY, detail: format!("found {} and {} ordinates", ords.len(), halved.len()) });
    }
    let mut worst: f64 = 0.0;
    for (t, h) in ords.iter().zip(&halved) {
        worst = worst.max((t - h).abs()).max(zeta_star(c(0.5, *t))?.norm());
    }
    Ok(Measured { value: worst, detail: format!("ordinates {:.9} {:.9} {:.9}", ords[0], ords[1], ords[2]) })
}

fn eisenstein_constant_term() -> Result<Measured> {
    let s = c(2.0, 0.0);
    let ratio = zeta_star(c(3.0, 0.0))? / zeta_star(c(4.0, 0.0))?;
    let (xs, ws) = gauss_legendre_on(48, 0.0, 1.0);
    let mut worst: f64 = 0.0;
    for y in [0.7, 1.3, 2.0] {
        let mut acc = c(0.0, 0.0);
        for (x, w) in xs.iter().zip(&ws) {
            acc += eisenstein_maass(UpperHalfPoint::new(*x, y)?, s, 1e-13)? * *w;
        }
        worst = worst.max((acc - (y * y + ratio / y)).norm());
    }
    Ok(Measured { value: worst, detail: "y in {0.7, 1.3, 2.0}, 48 nodes".into() })
}

fn hall_bridge() -> Result<Measured> {
    let mut worst: f64 = 0.0;
    for (x, y) in [(0.0, 1.0), (0.3, 1.1)] {
        let tau = UpperHalfPoint::new(x, y)?;
        for t12 in [2.5, 3.0] {
            let direct = eisenstein_maass(tau, c((t12 + 1.0) / 2.0, 0.0), 1e-13)?;
            for t2 in [0.0, 0.4] {
                let lattice = eisenstein_hall_product(c(t12 + t2, 0.0), c(t2, 0.0), &bundle_from_tau(tau))?;
                worst = worst.max((lattice - direct).norm() / direct.norm());
            }
        }
    }
    Ok(Measured { value: worst, detail: "tau in {i, 0.3+1.1i}, t1-t2 in {2.5, 3}".into() })
}

fn ch_homomorphism() -> Result<Measured> {
    let (f1, f2) = ch_test_functions();
    let samples: Vec<(C, C)> = CH_SAMPLES.iter().map(|&(a, b)| (c(a, 0.0), c(b, 0.0))).collect();
    let r = ch_homomorphism_check(&f1, &f2, &samples, &ChConfig::default())?;
    let devs: Vec<String> = r.samples.iter().map(|s| format!("{:.1e}", s.rel_dev)).collect();
    Ok(Measured { value: r.max_rel_dev, detail: format!("rel dev per sample {}", devs.join(" ")) })
}

fn quadratic_relations() -> Result<Measured> {
    let m = mult2(&f11())?;
    let ml = mult2(&f_lambda(2.0, 1.0 / 3.0)?)?;
    let mut worst: f64 = 0.0;
    for p in quadratic_relation_grid() {
        worst = worst.max(m.eval(&p)?.norm()).max(ml.eval(&p)?.norm());
    }
    Ok(Measured { value: worst, detail: "25 points, F_{1,1} and F_{2,1/3}".into() })
}

fn shuffle_axioms() -> Result<Measured> {
    let report = cli::run(&cli::ExperimentConfig::new(cli::Command::ShuffleCheck { trials: 20 }));
    if let Some(e) = report.error {
        return Err(hallzeta::Error::Convergence(e));
    }
    let pick = |n: &str| report.criteria.iter().find(|c| c.name == n).map_or(f64::NAN, |c| c.value);
    let (a, b, h) = (pick("phi-associativity"), pick("lambda-associativity"), pick("untwist-homomorphism"));
    Ok(Measured { value: a.max(b).max(h), detail: format!("assoc phi {a:.1e}, assoc lambda {b:.1e}, homomorphism {h:.1e}") })
}

fn wheel_free_acyclic() -> Result<Measured> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut bad = 0usize;
    for k in 0..200 {
        let n = 3 + k % 2;
        let zero_prob = [0.0, 0.3, 0.6][k % 3];
        let h = cohomology_dims(&build_complex(&random_wheel_free(n, zero_prob, (0.5, 2.0), &mut rng)?)?, RANK_TOL)?;
        if !h.euler_ok || h.dims[0] != 1 || h.dims[1..].iter().any(|&d| d != 0) {
            bad += 1;
        }
    }
    for k in 0..40 {
        let h = cohomology_dims(&build_complex(&random_wheel_free_exact(3 + k % 2, 0.4, &mut rng)?)?, 0.0)?;
        if !h.euler_ok || h.dims[0] != 1 || h.dims[1..].iter().any(|&d| d != 0) {
            bad += 1;
        }
    }
    Ok(Measured { value: bad as f64, detail: "200 floating + 40 exact instances, n in {3, 4}".into() })
}

fn cubic_localization() -> Result<Measured> {
    let cache = ZetaZeroCache::compute(0.0, 30.0, 1e-6)?;
    let scan = cubic_relation_scan(&cache, 0, &[c(0.0, 0.0), c(1.0, 1.0)], &[0.1, -0.07], ZERO_TOL, RANK_TOL)?;
    let mut mismatches = 0usize;
    let mut gap = f64::INFINITY;
    for e in &scan.entries {
        let expect: &[usize] = if e.perturbation.is_none() { &[3, 3, 1] } else { &[1, 0, 0] };
        if e.dims != expect || !e.euler_ok {
            mismatches += 1;
        }
        gap = e.singular_value_gaps.iter().flatten().copied().fold(gap, f64::min);
    }
    let value = if gap > 1e4 { mismatches as f64 } else { f64::INFINITY };
    Ok(Measured { value, detail: format!("{} configurations, smallest rank gap {gap:.2e}", scan.entries.len()) })
}

fn criteria() -> Vec<Criterion> {
    let secs = |s| Some(Duration::from_secs(s));
    vec![
        Criterion { id: 1, name: "completed-zeta functional equation", tol: 1e-9, limit: secs(5), check: functional_equation },
        Criterion { id: 2, name: "coefficient-function formula", tol: 1e-6, limit: secs(30), check: riemann_formula },
        Criterion { id: 3, name: "zeta zeros", tol: 1e-6, limit: None, check: zeta_zeros },
        Criterion { id: 4, name: "Eisenstein constant term", tol: 1e-6, limit: secs(60), check: eisenstein_constant_term },
        Criterion { id: 5, name: "Hall/Eisenstein bridge", tol: 1e-8, limit: None, check: hall_bridge },
        Criterion { id: 6, name: "constant-term homomorphism", tol: 1e-4, limit: secs(300), check: ch_homomorphism },
        Criterion { id: 7, name: "quadratic relations", tol: 1e-8, limit: None, check: quadratic_relations },
        Criterion { id: 8, name: "shuffle algebra axioms", tol: 1e-8, limit: None, check: shuffle_axioms },
        Criterion { id: 9, name: "wheel-free acyclicity (mismatches)", tol: 0.5, limit: secs(120), check: wheel_free_acyclic },
        Criterion { id: 10, name: "cubic-relation localization (mismatches)", tol: 0.5, limit: None, check: cubic_localization },
    ]
}

fn main() -> ExitCode {
    let mut unexpected = 0;
    for cr in criteria() {
        let start = Instant::now();
        let outcome = (cr.check)();
        let elapsed = start.elapsed();
        let in_time = cr.limit.is_none_or(|l| elapsed <= l);
        let limit = cr.limit.map_or(String::new(), |l| format!("/{}s", l.as_secs()));
        let (pass, body) = match &outcome {
            Ok(m) => (m.value < cr.tol && in_time, format!("value {:.3e} tol {:.0e}; {}", m.value, cr.tol, m.detail)),
            Err(e) => (false, format!("error: {e}")),
        };
        let expected = EXPECTED_FAILURES.contains(&cr.id);
        let tag = match (pass, expected) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (expected)",
            (true, true) => "PASS (unexpected)",
        };
        if pass == expected {
            unexpected += 1;
        }
        println!("{tag} #{} {}: {body}; {:.2}s{limit}", cr.id, cr.name, elapsed.as_secs_f64());
    }
    if unexpected == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
