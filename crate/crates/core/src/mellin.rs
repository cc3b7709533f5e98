//! Mellin transforms on R_+^n, the log-Gaussian test family with closed-form
//! transforms, and the coefficient functions of ζ* in each strip.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::error::{check_finite, Error, Result};
use crate::quad::{sinh_sinh, DeConfig};
use crate::shuffle::GradedEvaluator;
use crate::specfun::theta;

/// a ↦ amplitude · Π exp(-(log a_ν - μ_ν)² / (2σ_ν²)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogGaussian {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub amplitude: f64,
}

impl LogGaussian {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, amplitude: f64) -> Result<Self> {
        if mu.len() != sigma.len() || mu.is_empty() {
            return Err(Error::Domain("mu and sigma must be nonempty and of equal length".into()));
        }
        if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) || mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Domain("log-Gaussian needs finite mu and positive finite sigma".into()));
        }
        if !amplitude.is_finite() {
            return Err(Error::Domain("amplitude must be finite".into()));
        }
        Ok(Self { mu, sigma, amplitude })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn eval(&self, a: &[f64]) -> f64 {
        let e: f64 = a
            .iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(&a, (&m, &s))| {
                let z = (a.ln() - m) / s;
                -0.5 * z * z
            })
            .sum();
        self.amplitude * e.exp()
    }

    /// -a_ν ∂f/∂a_ν.
    pub fn log_derivative(&self, a: &[f64], nu: usize) -> f64 {
        self.eval(a) * (a[nu].ln() - self.mu[nu]) / (self.sigma[nu] * self.sigma[nu])
    }

    /// amplitude · Π √(2πσ_ν²) exp(μ_ν s_ν + σ_ν² s_ν² / 2).
    pub fn mellin(&self, s: &[C]) -> C {
        let mut acc = C::new(0.0, 0.0);
        let mut scale = self.amplitude;
        for (&sv, (&m, &sg)) in s.iter().zip(self.mu.iter().zip(&self.sigma)) {
            acc += sv * m + sv * sv * (0.5 * sg * sg);
            scale *= (2.0 * PI).sqrt() * sg;
        }
        acc.exp() * scale
    }

    /// The multiplicative convolution ∫ f(b) g(a/b) d*b, again a log-Gaussian.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Domain("dimension mismatch in convolution".into()));
        }
        let mut amp = self.amplitude * other.amplitude;
        let mut mu = Vec::with_capacity(self.dim());
        let mut sigma = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let (s1, s2) = (self.sigma[k], other.sigma[k]);
            let s = s1.hypot(s2);
            amp *= (2.0 * PI).sqrt() * s1 * s2 / s;
            mu.push(self.mu[k] + other.mu[k]);
            sigma.push(s);
        }
        Self::new(mu, sigma, amp)
    }
}

/// The closed-form Mellin transform as an entire evaluator.
pub fn mellin_closed_form(f: &LogGaussian) -> GradedEvaluator {
    let g = f.clone();
    GradedEvaluator::new(f.dim(), false, "entire", move |s| Ok(g.mellin(s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MellinConfig {
    pub tol: f64,
    pub max_level: u32,
}

impl Default for MellinConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_level: 9 }
    }
}

/// ∫_{R_+^n} f(a) a^s d*a by nested sinh-sinh quadrature in log coordinates.
pub fn mellin_forward<F>(f: F, s: &[C], cfg: &MellinConfig) -> Result<C>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    for &z in s {
        check_finite(z)?;
    }
    if s.is_empty() {
        return Err(Error::Domain("mellin_forward needs at least one variable".into()));
    }
    let de = DeConfig { tol: cfg.tol, max_level: cfg.max_level, min_level: 3 };
    let mut t = Vec::with_capacity(s.len());
    forward_axis(&f, s, &de, &mut t)
}

fn forward_axis<F>(f: &F, s: &[C], de: &DeConfig, t: &mut Vec<f64>) -> Result<C>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let axis = t.len();
    let cell = std::cell::RefCell::new(std::mem::take(t));
    let result = sinh_sinh(
        |x| {
            let mut prefix = cell.borrow().clone();
            prefix.push(x);
            if axis + 1 == s.len() {
                let a: Vec<f64> = prefix.iter().map(|v| v.exp()).collect();
                let v = f(&a)?;
                if v == 0.0 {
                    return Ok(C::new(0.0, 0.0));
                }
                let phase: C = prefix.iter().zip(s).map(|(&x, &z)| z * x).sum();
                Ok(phase.exp() * v)
            } else {
                forward_axis(f, s, de, &mut prefix)
            }
        },
        0.0,
        1.0,
        de,
    );
    *t = cell.into_inner();
    result
}

/// Truncated vertical contour σ₀ + i[-T, T]^n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerticalContour {
    pub sigma0: Vec<f64>,
    pub t_max: f64,
    pub nodes: usize,
}

impl VerticalContour {
    pub fn new(sigma0: Vec<f64>, t_max: f64, nodes: usize) -> Result<Self> {
        if nodes < 16 {
            return Err(Error::Domain(format!("contour needs at least 16 nodes, got {nodes}")));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::Domain(format!("contour height must be positive, got {t_max}")));
        }
        if sigma0.is_empty() || sigma0.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("contour abscissae must be finite".into()));
        }
        Ok(Self { sigma0, t_max, nodes })
    }

    /// T = 40 with step 0.05 along every axis.
    pub fn standard(sigma0: Vec<f64>) -> Self {
        Self { sigma0, t_max: 40.0, nodes: 1600 }
    }
}

/// Doublings of T or halvings of the step allowed before giving up.
const MAX_CONTOUR_REFINEMENTS: usize = 6;

/// (1/(2πi)^n) ∫ F(s) a^{-s} ds over the vertical contour by the tensor
/// trapezoid rule in Im s. A single pass also yields the sum restricted to
/// |Im s| ≤ T/2 (tail estimate) and the sum on every other node
/// (discretization estimate); T doubles or the step halves until both
/// estimates are below `tol`.
pub fn mellin_inverse(f: &GradedEvaluator, a: &[f64], contour: &VerticalContour, tol: f64) -> Result<C> {
    let n = f.degree();
    if a.len() != n || contour.sigma0.len() != n {
        return Err(Error::Domain(format!(
            "dimension mismatch: evaluator degree {n}, point {}, contour {}",
            a.len(),
            contour.sigma0.len()
        )));
    }
    if a.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::Domain("mellin_inverse needs positive a".into()));
    }
    let mut h = 2.0 * contour.t_max / contour.nodes as f64;
    let mut t_max = contour.t_max;
    for _ in 0..2 * MAX_CONTOUR_REFINEMENTS {
        let sums = contour_sum(f, a, &contour.sigma0, t_max, h)?;
        let tail = (sums.full - sums.half_height).norm();
        let disc = (sums.full - sums.double_step).norm();
        if tail < tol && disc < tol {
            return Ok(sums.full);
        }
        if tail >= tol {
            t_max *= 2.0;
        }
        if disc >= tol {
            h *= 0.5;
        }
    }
    Err(Error::Convergence(format!(
        "contour estimates above {tol:e} after refinement (T = {t_max}, step {h:e})"
    )))
}

struct ContourSums {
    full: C,
    half_height: C,
    double_step: C,
}

/// Tensor trapezoid sums, nodes visited in ascending |Im s| per axis.
fn contour_sum(f: &GradedEvaluator, a: &[f64], sigma0: &[f64], t_max: f64, h: f64) -> Result<ContourSums> {
    let n = a.len();
    let m = (t_max / h).round() as i64;
    let order: Vec<i64> = std::iter::once(0).chain((1..=m).flat_map(|j| [j, -j])).collect();
    let mut s = vec![C::new(0.0, 0.0); n];
    let mut idx = vec![0usize; n];
    let zero = C::new(0.0, 0.0);
    let (mut full, mut half_height, mut double_step) = (zero, zero, zero);
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    'outer: loop {
        let mut log_kernel = C::new(0.0, 0.0);
        let mut inner = true;
        let mut even = true;
        for k in 0..n {
            let j = order[idx[k]];
            s[k] = C::new(sigma0[k], j as f64 * h);
            log_kernel -= s[k] * log_a[k];
            inner &= 2 * j.abs() <= m;
            even &= j % 2 == 0;
        }
        let v = f.eval(&s)? * log_kernel.exp();
        full += v;
        if inner {
            half_height += v;
        }
        if even {
            double_step += v;
        }
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < order.len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    let w = (h / (2.0 * PI)).powi(n as i32);
    Ok(ContourSums { full: full * w, half_height: half_height * w, double_step: double_step * w * 2f64.powi(n as i32) })
}

/// Strips of the s-plane cut out by the poles of ζ* at 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Strip {
    RightOfOne,
    ZeroToOne,
    LeftOfZero,
}

impl Strip {
    pub fn of(sigma: f64) -> Result<Self> {
        if sigma > 1.0 {
            Ok(Self::RightOfOne)
        } else if sigma > 0.0 && sigma < 1.0 {
            Ok(Self::ZeroToOne)
        } else if sigma < 0.0 {
            Ok(Self::LeftOfZero)
        } else {
            Err(Error::Domain(format!("abscissa {sigma} lies on a pole of zeta*")))
        }
    }
}

/// Coefficient function of ζ* in a strip. Crossing the pole at s = 1
/// (residue 1) subtracts a^{-1}; crossing s = 0 (residue -1) adds 1.
pub fn zeta_star_coefficient(a: f64, strip: Strip) -> Result<f64> {
    let th = theta(a * a)?;
    Ok(match strip {
        Strip::RightOfOne => th - 1.0,
        Strip::ZeroToOne => th - 1.0 - 1.0 / a,
        Strip::LeftOfZero => th - 1.0 / a,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeSample {
    pub a: Vec<f64>,
    pub inverse: f64,
    pub analytic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub axis: usize,
    pub max_discrepancy: f64,
    pub samples: Vec<DerivativeSample>,
}

/// Ten points along axis ν at log-offsets -2σ..+2.5σ from the center, other
/// coordinates at their centers.
pub fn derivative_sample_points(f: &LogGaussian, nu: usize) -> Vec<Vec<f64>> {
    (0..10)
        .map(|k| {
            let mut a: Vec<f64> = f.mu.iter().map(|m| m.exp()).collect();
            a[nu] = (f.mu[nu] + f.sigma[nu] * (k as f64 - 4.0) * 0.5).exp();
            a
        })
        .collect()
}

/// Compares the inverse transform of s_ν·F with -a_ν ∂f/∂a_ν.
pub fn derivative_rule_check(
    f: &LogGaussian,
    nu: usize,
    points: &[Vec<f64>],
    contour: &VerticalContour,
    tol: f64,
) -> Result<DerivativeReport> {
    if nu >= f.dim() {
        return Err(Error::Domain(format!("axis {nu} out of range for dimension {}", f.dim())));
    }
    let g = f.clone();
    let sf = GradedEvaluator::new(f.dim(), false, "entire", move |s| Ok(s[nu] * g.mellin(s)));
    let mut samples = Vec::with_capacity(points.len());
    let mut max_discrepancy: f64 = 0.0;
    for a in points {
        let inverse = mellin_inverse(&sf, a, contour, tol)?.re;
        let analytic = f.log_derivative(a, nu);
        max_discrepancy = max_discrepancy.max((inverse - analytic).abs());
        samples.push(DerivativeSample { a: a.clone(), inverse, analytic });
    }
    Ok(DerivativeReport { axis: nu, max_discrepancy, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{gamma, zeta_star};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn forward_log_gaussian() {
        let f = LogGaussian::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let cfg = MellinConfig::default();
        for &s in &[c(0.5, 0.0), c(1.5, 2.0), c(-2.0, 1.0)] {
            let v = mellin_forward(|a| Ok(f.eval(a)), &[s], &cfg).unwrap();
            let exact = (s * s * 0.5).exp() * (2.0 * PI).sqrt();
            assert!((v - exact).norm() < 1e-10, "{s}");
        }
    }

    #[test]
    fn forward_gamma_half() {
        let cfg = MellinConfig::default();
        for &s in &[c(1.0, 0.0), c(2.5, 3.0), c(0.4, -1.0)] {
            let v = mellin_forward(|a| Ok(2.0 * (-a[0] * a[0]).exp()), &[s], &cfg).unwrap();
            assert!((v - gamma(s * 0.5).unwrap()).norm() < 1e-10, "{s}");
        }
    }

    #[test]
    fn forward_riemann_formula() {
        let cfg = MellinConfig::default();
        for &s in &[c(2.0, 0.0), c(3.0, 0.0)] {
            let v = mellin_forward(|a| Ok(theta(a[0] * a[0])? - 1.0), &[s], &cfg).unwrap();
            assert!((v - zeta_star(s).unwrap()).norm() < 1e-8, "{s}");
        }
    }

    #[test]
    fn closed_form_examples() {
        let f = LogGaussian::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let ev = mellin_closed_form(&f);
        assert!((ev.eval(&[c(0.0, 0.0)]).unwrap() - (2.0 * PI).sqrt()).norm() < 1e-15);
        let shifted = LogGaussian::new(vec![0.7], vec![1.0], 1.0).unwrap();
        let s = c(0.3, 1.1);
        let ratio = shifted.mellin(&[s]) / f.mellin(&[s]);
        assert!((ratio - (s * 0.7).exp()).norm() < 1e-14);
    }

    #[test]
    fn inverse_log_gaussian_contour_independence() {
        let f = LogGaussian::new(vec![0.2], vec![0.8], 1.3).unwrap();
        let ev = mellin_closed_form(&f);
        for &a in &[1.0, 2.0, 0.5] {
            for &s0 in &[-2.0, 0.0, 2.0] {
                let v = mellin_inverse(&ev, &[a], &VerticalContour::standard(vec![s0]), 1e-10).unwrap();
                assert!((v.re - f.eval(&[a])).abs() < 1e-8, "a={a} s0={s0}");
                assert!(v.im.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn inverse_zeta_star_strips() {
        let ev = GradedEvaluator::new(1, false, "poles at 0 and 1", |s| zeta_star(s[0]));
        for &a in &[0.8, 1.5] {
            for &s0 in &[2.0, 0.5, -1.0] {
                let v = mellin_inverse(&ev, &[a], &VerticalContour::standard(vec![s0]), 1e-9).unwrap();
                let exact = zeta_star_coefficient(a, Strip::of(s0).unwrap()).unwrap();
                assert!((v.re - exact).abs() < 1e-6, "a={a} s0={s0}: {} vs {exact}", v.re);
            }
        }
    }

    #[test]
    fn residue_shift_is_one_over_a() {
        let ev = GradedEvaluator::new(1, false, "poles at 0 and 1", |s| zeta_star(s[0]));
        let a = 1.5;
        let right = mellin_inverse(&ev, &[a], &VerticalContour::standard(vec![2.0]), 1e-9).unwrap();
        let mid = mellin_inverse(&ev, &[a], &VerticalContour::standard(vec![0.5]), 1e-9).unwrap();
        assert!(((right - mid).re - 1.0 / a).abs() < 1e-6);
    }

    #[test]
    fn derivative_rule() {
        let f = LogGaussian::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let contour = VerticalContour::standard(vec![0.5]);
        let r = derivative_rule_check(&f, 0, &[vec![1.0], vec![std::f64::consts::E]], &contour, 1e-10).unwrap();
        assert!(r.samples[0].inverse.abs() < 1e-8);
        assert!((r.samples[1].analytic - f.eval(&[std::f64::consts::E])).abs() < 1e-14);
        assert!(r.max_discrepancy < 1e-8);
    }

    #[test]
    fn derivative_rule_two_dims() {
        let f = LogGaussian::new(vec![0.1, -0.3], vec![0.7, 0.9], 1.0).unwrap();
        let contour = VerticalContour::new(vec![0.3, -0.4], 30.0, 600).unwrap();
        let pts = derivative_sample_points(&f, 1);
        let r = derivative_rule_check(&f, 1, &pts[..3], &contour, 1e-9).unwrap();
        assert!(r.max_discrepancy < 1e-8);
    }

    #[test]
    fn convolution_rule() {
        let f = LogGaussian::new(vec![0.3], vec![0.5], 1.0).unwrap();
        let g = LogGaussian::new(vec![-0.6], vec![0.8], 2.0).unwrap();
        let (fc, gc) = (f.clone(), g.clone());
        let product = GradedEvaluator::new(1, false, "entire", move |s| Ok(fc.mellin(s) * gc.mellin(s)));
        let conv = f.convolve(&g).unwrap();
        for &a in &[0.3, 1.0, 2.5] {
            let v = mellin_inverse(&product, &[a], &VerticalContour::standard(vec![0.7]), 1e-10).unwrap();
            assert!((v.re - conv.eval(&[a])).abs() < 1e-8);
            // the convolution integral itself, by quadrature
            let direct = crate::quad::sinh_sinh(
                |t| Ok(C::from(f.eval(&[t.exp()]) * g.eval(&[a / t.exp()]))),
                0.0,
                1.0,
                &DeConfig::default(),
            )
            .unwrap();
            assert!((direct.re - conv.eval(&[a])).abs() < 1e-10);
        }
    }
}
