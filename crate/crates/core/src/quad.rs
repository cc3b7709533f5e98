//! Quadrature rules: Gauss–Legendre, and double-exponential (tanh-sinh on
//! finite intervals, sinh-sinh on the real line) with level refinement.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Refinement controls for the double-exponential rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    /// Absolute tolerance on successive refinements.
    pub tol: f64,
    /// Levels beyond the unit step; level k uses step 2^-k.
    pub max_level: u32,
    pub min_level: u32,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_level: 9, min_level: 3 }
    }
}

/// Largest abscissa magnitude visited by the sinh-sinh rule.
const SINH_SINH_XMAX: f64 = 150.0;

/// ∫_R f(x) dx with x = c + scale·sinh(π/2·sinh t).
pub fn sinh_sinh<F>(f: F, center: f64, scale: f64, cfg: &DeConfig) -> Result<C>
where
    F: Fn(f64) -> Result<C>,
{
    let tmax = ((SINH_SINH_XMAX / scale).asinh() / FRAC_PI_2).asinh();
    let node = |t: f64| -> Result<C> {
        let u = FRAC_PI_2 * t.sinh();
        let x = center + scale * u.sinh();
        let w = scale * FRAC_PI_2 * t.cosh() * u.cosh();
        let v = f(x)?;
        Ok(if v == C::new(0.0, 0.0) { v } else { v * w })
    };
    refine(node, tmax, cfg)
}

/// ∫_a^b f(x) dx with the tanh-sinh substitution.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, cfg: &DeConfig) -> Result<C>
where
    F: Fn(f64) -> Result<C>,
{
    let half = 0.5 * (b - a);
    let tmax = 4.5;
    let node = |t: f64| -> Result<C> {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        // distance to the nearer endpoint, computed without cancellation
        let gap = half / (u.abs().exp() * ch);
        let x = if t < 0.0 { a + gap } else { b - gap };
        if !(x > a && x < b) {
            return Ok(C::new(0.0, 0.0));
        }
        let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
        Ok(f(x)? * w)
    };
    refine(node, tmax, cfg)
}

/// Trapezoidal sums over t ∈ [-tmax, tmax] with halving steps until two
/// successive levels agree to `cfg.tol`.
fn refine<G>(node: G, tmax: f64, cfg: &DeConfig) -> Result<C>
where
    G: Fn(f64) -> Result<C>,
{
    let mut h = 1.0;
    let mut sum = node(0.0)?;
    let mut k = 1;
    while k as f64 * h <= tmax {
        let t = k as f64 * h;
        sum += node(t)? + node(-t)?;
        k += 1;
    }
    let mut estimate = sum * h;
    for level in 1..=cfg.max_level {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            let t = k as f64 * h;
            sum += node(t)?;
            sum += node(-t)?;
            k += 2;
        }
        let next = sum * h;
        let diff = (next - estimate).norm();
        estimate = next;
        if level >= cfg.min_level && diff <= cfg.tol {
            return Ok(estimate);
        }
    }
    Err(Error::Convergence(format!(
        "double-exponential rule did not reach tolerance {:e} in {} levels",
        cfg.tol, cfg.max_level
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((q - exact).abs() < 1e-13, "n={n}");
            let even = 2 * n - 2;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(even as i32)).sum();
            assert!((q - 2.0 / (even as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let cfg = DeConfig::default();
        let v = tanh_sinh(|x| Ok(C::new(1.0 / x.sqrt(), 0.0)), 0.0, 1.0, &cfg).unwrap();
        assert!((v.re - 2.0).abs() < 1e-11);
        let v = tanh_sinh(|x| Ok(C::new(x.ln(), 0.0)), 0.0, 1.0, &cfg).unwrap();
        assert!((v.re + 1.0).abs() < 1e-11);
    }

    #[test]
    fn sinh_sinh_gaussian() {
        let cfg = DeConfig::default();
        let v = sinh_sinh(|x| Ok(C::new((-x * x).exp(), 0.0)), 0.0, 1.0, &cfg).unwrap();
        assert!((v.re - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
