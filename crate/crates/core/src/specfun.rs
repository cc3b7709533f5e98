//! Complex special functions: Γ, ζ (Hurwitz and Riemann), the completed zeta
//! ζ*, the scattering kernel Φ, its antisymmetrizer Λ, the theta series, and
//! zeros of ζ* on the critical line.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

/// B_2, B_4, ..., B_22.
const BERNOULLI_2K: [f64; 11] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
];

/// Number of Bernoulli correction terms in the Euler–Maclaurin tail.
const EM_ORDER: usize = 10;

fn is_nonpositive_integer(z: C) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Principal-branch-free log Γ: exp of the result is Γ(z); the imaginary part
/// is only defined modulo 2π.
pub fn ln_gamma(z: C) -> Result<C> {
    check_finite(z)?;
    if is_nonpositive_integer(z) {
        return Err(Error::Pole { what: "gamma", at: z });
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        return Ok(C::from(PI.ln()) - s.ln() - ln_gamma(1.0 - z)?);
    }
    let mut w = z;
    let mut prod = C::new(1.0, 0.0);
    while w.norm() < 15.0 {
        prod *= w;
        w += 1.0;
    }
    let winv = w.inv();
    let winv2 = winv * winv;
    let mut pow = winv;
    let mut series = C::new(0.0, 0.0);
    for (k, b) in BERNOULLI_2K.iter().take(8).enumerate() {
        let k2 = 2.0 * (k as f64 + 1.0);
        series += pow * (b / (k2 * (k2 - 1.0)));
        pow *= winv2;
    }
    Ok((w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - prod.ln())
}

/// Complex Γ(z) with reflection for Re z < 1/2.
pub fn gamma(z: C) -> Result<C> {
    Ok(ln_gamma(z)?.exp())
}

/// Hurwitz zeta ζ(s, a) = Σ_{k≥0} (k+a)^{-s} by Euler–Maclaurin summation,
/// continued to all s ≠ 1 with Re s > -20.
pub fn hurwitz_zeta(s: C, a: f64) -> Result<C> {
    check_finite(s)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("hurwitz_zeta needs a > 0, got {a}")));
    }
    if s == C::new(1.0, 0.0) {
        return Err(Error::Pole { what: "zeta", at: s });
    }
    if s.re <= -((2 * EM_ORDER + 1) as f64) {
        return Err(Error::Domain(format!(
            "Euler-Maclaurin continuation limited to Re s > -{}",
            2 * EM_ORDER + 1
        )));
    }
    let mut n = (s.norm() * 0.5).ceil() as usize + 12;
    loop {
        let (value, bound) = euler_maclaurin(s, a, n);
        if bound <= 1e-15 * value.norm() || n >= 1 << 14 {
            return Ok(value);
        }
        n *= 2;
    }
}

/// Returns the Euler–Maclaurin value with `n` explicit terms and the standard
/// remainder bound for the omitted Bernoulli term.
fn euler_maclaurin(s: C, a: f64, n: usize) -> (C, f64) {
    let mut sum = C::new(0.0, 0.0);
    for k in (0..n).rev() {
        sum += (-s * (k as f64 + a).ln()).exp();
    }
    let x = n as f64 + a;
    let lnx = x.ln();
    let xs = (-s * lnx).exp();
    sum += xs * x / (s - 1.0) + xs * 0.5;
    let mut poch = s;
    let mut xp = xs / x;
    let mut fact = 2.0;
    for (k, b) in BERNOULLI_2K.iter().take(EM_ORDER).enumerate() {
        let k = k as f64 + 1.0;
        sum += poch * xp * (b / fact);
        poch *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
        xp /= x * x;
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    // poch now holds (s)_{2M+1}·(s+2M+1); drop the last factor for the bound.
    let m = EM_ORDER as f64;
    let poch_bound = poch.norm() / (s + 2.0 * m + 1.0).norm().max(1e-300);
    let denom = (s.re + 2.0 * m + 1.0).max(1e-3);
    let bound = poch_bound * BERNOULLI_2K[EM_ORDER].abs() / fact * xp.norm() * x / denom;
    (sum, bound)
}

/// Upper incomplete gamma Γ(a, x) for complex a and real x > 0.
pub fn upper_gamma(a: C, x: f64) -> Result<C> {
    check_finite(a)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("upper_gamma needs x > 0, got {x}")));
    }
    if x >= 2.5 {
        return Ok(upper_gamma_cf(a, x));
    }
    if is_nonpositive_integer(a) {
        // Γ(0, x) = E1(x), then Γ(a, x) = (Γ(a+1, x) - x^a e^{-x}) / a downwards
        let mut value = C::from(exp_integral_e1(x));
        let mut k = 0.0;
        while k > a.re {
            k -= 1.0;
            value = (value - (k * x.ln() - x).exp()) / k;
        }
        return Ok(value);
    }
    let mut term = a.inv();
    let mut sum = term;
    let mut k = 1.0;
    while term.norm() > 1e-17 * sum.norm() {
        term *= x / (a + k);
        sum += term;
        k += 1.0;
    }
    let lower = (a * x.ln() - x).exp() * sum;
    Ok(gamma(a)? - lower)
}

/// Γ(a, x) by the Legendre continued fraction, modified Lentz evaluation.
fn upper_gamma_cf(a: C, x: f64) -> C {
    let tiny = 1e-300;
    let mut b = C::from(x + 1.0) - a;
    let mut c = C::from(1.0 / tiny);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..10_000 {
        let fi = i as f64;
        let an = (a - fi) * fi;
        b += 2.0;
        d = an * d + b;
        if d.norm() < tiny {
            d = C::from(tiny);
        }
        c = b + an / c;
        if c.norm() < tiny {
            c = C::from(tiny);
        }
        d = d.inv();
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x).exp() * h
}

/// E1(x) = ∫_x^∞ e^{-t}/t dt for 0 < x < 2.5 by its power series.
fn exp_integral_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut k = 1.0;
    loop {
        term *= -x / k;
        let add = -term / k;
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        k += 1.0;
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Riemann ζ(s): Euler–Maclaurin for Re s ≥ 0, the reflection formula below,
/// where Euler–Maclaurin loses digits to cancellation.
pub fn zeta(s: C) -> Result<C> {
    check_finite(s)?;
    if s.re < 0.0 {
        let t = 1.0 - s;
        let factor = (s * 2f64.ln() + (s - 1.0) * PI.ln()).exp() * (PI * s * 0.5).sin();
        return Ok(factor * gamma(t)? * zeta(t)?);
    }
    hurwitz_zeta(s, 1.0)
}

/// Completed zeta ζ*(s) = π^{-s/2} Γ(s/2) ζ(s); simple poles at 0 and 1.
pub fn zeta_star(s: C) -> Result<C> {
    check_finite(s)?;
    if s == C::new(0.0, 0.0) || s == C::new(1.0, 0.0) {
        return Err(Error::Pole { what: "zeta_star", at: s });
    }
    let half = s * 0.5;
    if is_nonpositive_integer(half) || s.re < -20.0 {
        // Γ(s/2) has a pole cancelled by a trivial zero of ζ; use ζ*(s) = ζ*(1-s).
        return zeta_star(1.0 - s);
    }
    let prefactor = (-half * PI.ln() + ln_gamma(half)?).exp();
    Ok(prefactor * zeta(s)?)
}

/// Φ(s) = ζ*(s)/ζ*(s+1). The removable points s = 0 and s = -1 take their
/// limiting values -1 and 0.
pub fn phi(s: C) -> Result<C> {
    check_finite(s)?;
    if s == C::new(0.0, 0.0) {
        return Ok(C::new(-1.0, 0.0));
    }
    if s == C::new(-1.0, 0.0) {
        return Ok(C::new(0.0, 0.0));
    }
    let num = zeta_star(s)?;
    let den = zeta_star(s + 1.0)?;
    if den == C::new(0.0, 0.0) {
        return Err(Error::ZeroDivision { what: "zeta_star(s+1)", at: s });
    }
    Ok(num / den)
}

/// Λ(s) = ζ*(-s)(s-1)(-s-1): simple pole at 0 with residue 1, zeros at s = 1
/// and at s = -ρ for every nontrivial zero ρ; Λ(-1) = -2.
pub fn lambda_big(s: C) -> Result<C> {
    check_finite(s)?;
    if s == C::new(0.0, 0.0) {
        return Err(Error::Pole { what: "Lambda", at: s });
    }
    if s == C::new(-1.0, 0.0) {
        return Ok(C::new(-2.0, 0.0));
    }
    if s == C::new(1.0, 0.0) {
        return Ok(C::new(0.0, 0.0));
    }
    Ok(zeta_star(-s)? * (s - 1.0) * (-s - 1.0))
}

/// θ(b) = Σ_{n∈Z} e^{-n²πb} by direct summation, stopping at terms below 1e-18.
pub fn theta_direct(b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("theta needs b > 0, got {b}")));
    }
    let mut tail = 0.0;
    let mut n = 1.0f64;
    loop {
        let term = (-n * n * PI * b).exp();
        if term < 1e-18 {
            break;
        }
        tail += term;
        n += 1.0;
    }
    Ok(1.0 + 2.0 * tail)
}

/// θ(b), switching to the Jacobi transform θ(b) = b^{-1/2} θ(1/b) for small b.
pub fn theta(b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("theta needs b > 0, got {b}")));
    }
    if b >= 0.2 {
        theta_direct(b)
    } else {
        Ok(theta_direct(1.0 / b)? / b.sqrt())
    }
}

/// ζ*(1/2 + it), which is real for real t.
pub fn critical_line_value(t: f64) -> Result<f64> {
    Ok(zeta_star(C::new(0.5, t))?.re)
}

/// Default scan step for [`find_zeta_zeros`].
pub const ZERO_SCAN_STEP: f64 = 0.1;
/// Final bracket width of the bisection.
pub const ZERO_BRACKET: f64 = 1e-9;

/// Ordinates of sign changes of t ↦ ζ*(1/2+it) on [t_min, t_max], each refined
/// by bisection to a bracket narrower than 1e-9.
pub fn find_zeta_zeros(t_min: f64, t_max: f64) -> Result<Vec<f64>> {
    find_zeta_zeros_with_step(t_min, t_max, ZERO_SCAN_STEP)
}

pub fn find_zeta_zeros_with_step(t_min: f64, t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(t_min >= 0.0 && t_max > t_min && t_max.is_finite()) {
        return Err(Error::Domain(format!("bad zero range [{t_min}, {t_max}]")));
    }
    if !(step > 0.0) {
        return Err(Error::Domain(format!("bad scan step {step}")));
    }
    let cells = ((t_max - t_min) / step).ceil().max(1.0) as usize;
    let h = (t_max - t_min) / cells as f64;
    let mut zeros = Vec::new();
    let mut a = t_min;
    let mut fa = critical_line_value(a)?;
    for k in 1..=cells {
        let b = if k == cells { t_max } else { t_min + k as f64 * h };
        let fb = critical_line_value(b)?;
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            zeros.push(bisect(a, b, fa)?);
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        zeros.push(a);
    }
    Ok(zeros)
}

fn bisect(mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    while b - a >= ZERO_BRACKET {
        let m = 0.5 * (a + b);
        let fm = critical_line_value(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Verified zero ordinates of ζ* on the critical line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaZeroCache {
    pub ordinates: Vec<f64>,
    pub tolerance: f64,
}

impl ZetaZeroCache {
    /// Validates ordering and |ζ*(1/2+it)| < tolerance for each ordinate.
    pub fn new(ordinates: Vec<f64>, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::Domain(format!("cache tolerance must be positive, got {tolerance}")));
        }
        if ordinates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("cache ordinates not strictly increasing".into()));
        }
        for &t in &ordinates {
            let v = zeta_star(C::new(0.5, t))?.norm();
            if v >= tolerance {
                return Err(Error::Domain(format!("|zeta*(1/2+{t}i)| = {v:e} exceeds {tolerance:e}")));
            }
        }
        Ok(Self { ordinates, tolerance })
    }

    pub fn compute(t_min: f64, t_max: f64, tolerance: f64) -> Result<Self> {
        Self::new(find_zeta_zeros(t_min, t_max)?, tolerance)
    }

    /// The k-th zero ρ_k = 1/2 + i t_k.
    pub fn rho(&self, k: usize) -> Option<C> {
        self.ordinates.get(k).map(|&t| C::new(0.5, t))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty zero cache".into()))?;
        let tol = header
            .strip_prefix("# zeta-zero-cache v1 tol=")
            .ok_or_else(|| Error::Parse(format!("bad zero cache header {header:?}")))?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad tolerance: {e}")))?;
        let ordinates = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad ordinate {l:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ordinates, tol)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

impl fmt::Display for ZetaZeroCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# zeta-zero-cache v1 tol={:e}", self.tolerance)?;
        for t in &self.ordinates {
            writeln!(f, "{}", format_significant(*t, 12))?;
        }
        Ok(())
    }
}

fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    ZetaStar,
    Phi,
    LambdaBig,
}

/// One of ζ*, Φ, Λ together with its known poles and zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFunction {
    pub kind: KernelKind,
    pub pole_set: Vec<C>,
    pub zero_hints: Vec<C>,
}

impl KernelFunction {
    /// Kernel with pole/zero metadata; nontrivial zeros are taken from `zeros`.
    pub fn new(kind: KernelKind, zeros: Option<&ZetaZeroCache>) -> Self {
        let rhos: Vec<C> = zeros
            .map(|z| z.ordinates.iter().flat_map(|&t| [C::new(0.5, t), C::new(0.5, -t)]).collect())
            .unwrap_or_default();
        let (pole_set, zero_hints) = match kind {
            KernelKind::ZetaStar => (vec![C::new(0.0, 0.0), C::new(1.0, 0.0)], rhos),
            KernelKind::Phi => {
                let mut poles = vec![C::new(1.0, 0.0)];
                poles.extend(rhos.iter().map(|r| r - 1.0));
                let mut zeros = vec![C::new(-1.0, 0.0)];
                zeros.extend(rhos);
                (poles, zeros)
            }
            KernelKind::LambdaBig => {
                let mut zeros = vec![C::new(1.0, 0.0)];
                zeros.extend(rhos.iter().map(|r| -r));
                (vec![C::new(0.0, 0.0)], zeros)
            }
        };
        Self { kind, pole_set, zero_hints }
    }

    pub fn eval(&self, s: C) -> Result<C> {
        match self.kind {
            KernelKind::ZetaStar => zeta_star(s),
            KernelKind::Phi => phi(s),
            KernelKind::LambdaBig => lambda_big(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn rel(a: C, b: C) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn gamma_values() {
        assert!(rel(gamma(c(1.0, 0.0)).unwrap(), c(1.0, 0.0)) < 1e-14);
        assert!(rel(gamma(c(0.5, 0.0)).unwrap(), c(PI.sqrt(), 0.0)) < 1e-14);
        assert!(rel(gamma(c(5.0, 0.0)).unwrap(), c(24.0, 0.0)) < 1e-14);
        assert!(rel(gamma(c(-0.5, 0.0)).unwrap(), c(-2.0 * PI.sqrt(), 0.0)) < 1e-14);
        // 30! = 2.6525285981219107e32
        assert!(rel(gamma(c(31.0, 0.0)).unwrap(), c(2.652_528_598_121_910_6e32, 0.0)) < 1e-13);
        assert!(matches!(gamma(c(-3.0, 0.0)), Err(Error::Pole { .. })));
        assert!(matches!(gamma(c(0.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn gamma_recurrence_complex() {
        for &z in &[c(0.3, 7.0), c(-4.2, 1.5), c(12.0, -30.0), c(2.5, 45.0)] {
            let lhs = gamma(z + 1.0).unwrap();
            let rhs = z * gamma(z).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "{z}");
        }
    }

    #[test]
    fn upper_gamma_values() {
        // Γ(1, x) = e^{-x}; Γ(1/2, x) = √π erfc(√x); Γ(a, x) recurrence across the branch switch
        for &x in &[0.3, 1.0, 2.4, 2.6, 7.0] {
            assert!((upper_gamma(c(1.0, 0.0), x).unwrap() - (-x).exp()).norm() < 1e-13 * (-x).exp());
            let a = c(-0.75, 0.4);
            let lhs = upper_gamma(a + 1.0, x).unwrap();
            let rhs = a * upper_gamma(a, x).unwrap() + (a * x.ln() - x).exp();
            assert!((lhs - rhs).norm() < 1e-13 * lhs.norm(), "x={x}");
            let lhs = upper_gamma(c(0.0, 0.0), x).unwrap();
            let rhs = upper_gamma(c(-1.0, 0.0), x).unwrap() * -1.0 + (-x).exp() / x;
            assert!((lhs - rhs).norm() < 1e-13 * lhs.norm(), "x={x}");
        }
        // erfc(1) = 0.157299207050285130658...
        let v = upper_gamma(c(0.5, 0.0), 1.0).unwrap();
        assert!((v.re - PI.sqrt() * 0.157_299_207_050_285_13).abs() < 1e-14);
        // E1(1) = 0.219383934395520273677...
        let v = upper_gamma(c(0.0, 0.0), 1.0).unwrap();
        assert!((v.re - 0.219_383_934_395_520_27).abs() < 1e-15);
        let v = upper_gamma(c(0.0, 0.0), 3.0).unwrap();
        assert!((v.re - 0.013_048_381_094_197_04).abs() < 1e-16);
    }

    #[test]
    fn zeta_values() {
        assert!(rel(zeta(c(2.0, 0.0)).unwrap(), c(PI * PI / 6.0, 0.0)) < 1e-14);
        assert!(rel(zeta(c(0.0, 0.0)).unwrap(), c(-0.5, 0.0)) < 1e-14);
        assert!(rel(zeta(c(-1.0, 0.0)).unwrap(), c(-1.0 / 12.0, 0.0)) < 1e-12);
        assert!(rel(zeta(c(4.0, 0.0)).unwrap(), c(PI.powi(4) / 90.0, 0.0)) < 1e-14);
        assert!(zeta(c(-2.0, 0.0)).unwrap().norm() < 1e-11);
        assert!(matches!(zeta(c(1.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn zeta_large_imaginary_against_reflection() {
        // ζ(s) from Euler–Maclaurin vs ζ(1-s) through the functional equation.
        for &s in &[c(0.3, 80.0), c(0.7, -95.0), c(-3.0, 60.0)] {
            let t = 1.0 - s;
            let fe = (s * 2f64.ln() + (s - 1.0) * PI.ln()).exp()
                * (PI * s * 0.5).sin()
                * gamma(t).unwrap()
                * zeta(t).unwrap();
            assert!(rel(zeta(s).unwrap(), fe) < 1e-11, "{s}");
        }
    }

    #[test]
    fn zeta_series_oracle() {
        // Direct series plus integral tail and half-term correction at s = 3 + 2i.
        let s = c(3.0, 2.0);
        let n = 200_000usize;
        let mut sum = C::new(0.0, 0.0);
        for k in (1..n).rev() {
            sum += (-s * (k as f64).ln()).exp();
        }
        let x = n as f64;
        let xs = (-s * x.ln()).exp();
        sum += xs * x / (s - 1.0) + xs * 0.5;
        assert!(rel(zeta(s).unwrap(), sum) < 1e-12);
    }

    #[test]
    fn zeta_star_values() {
        assert!(rel(zeta_star(c(2.0, 0.0)).unwrap(), c(PI / 6.0, 0.0)) < 1e-14);
        let s = c(3.0, 2.0);
        assert!((zeta_star(s).unwrap() - zeta_star(1.0 - s).unwrap()).norm() < 1e-10);
        assert!(zeta_star(c(0.5, 14.134725)).unwrap().norm() < 1e-6);
        // Trivial-zero points are regular.
        assert!(rel(zeta_star(c(-2.0, 0.0)).unwrap(), zeta_star(c(3.0, 0.0)).unwrap()) < 1e-14);
        assert!(matches!(zeta_star(c(0.0, 0.0)), Err(Error::Pole { .. })));
        assert!(matches!(zeta_star(c(1.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn zeta_star_functional_equation_grid() {
        for k in 0..20 {
            let s = c(-4.0 + 0.41 * k as f64, -30.0 + 3.07 * k as f64);
            let a = zeta_star(s).unwrap();
            let b = zeta_star(1.0 - s).unwrap();
            assert!((a - b).norm() / a.norm() < 1e-9, "{s}");
        }
    }

    #[test]
    fn residues_of_zeta_star() {
        for &e in &[1e-4, 1e-5] {
            let r1 = zeta_star(c(1.0 + e, 0.0)).unwrap() * e;
            let r0 = zeta_star(c(e, 0.0)).unwrap() * e;
            assert!((r1 - 1.0).norm() < 2.0 * e);
            assert!((r0 + 1.0).norm() < 2.0 * e);
        }
    }

    #[test]
    fn phi_identities() {
        let s = c(3.0, 0.0);
        let direct = zeta_star(s).unwrap() / zeta_star(s + 1.0).unwrap();
        assert!(rel(phi(s).unwrap(), direct) < 1e-15);
        assert!((phi(c(2.5, 0.0)).unwrap() * phi(c(-2.5, 0.0)).unwrap() - 1.0).norm() < 1e-10);
        let s = c(2.0, 1.0);
        let via_lambda = lambda_big(-s).unwrap() / lambda_big(s).unwrap();
        assert!((phi(s).unwrap() - via_lambda).norm() < 1e-10);
        assert_eq!(phi(c(0.0, 0.0)).unwrap(), c(-1.0, 0.0));
        assert!((phi(c(1e-6, 0.0)).unwrap() + 1.0).norm() < 1e-5);
        assert!(matches!(phi(c(1.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn lambda_zeros_and_residue() {
        assert_eq!(lambda_big(c(1.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((lambda_big(c(-1.0 + 1e-7, 0.0)).unwrap() + 2.0).norm() < 1e-6);
        assert_eq!(lambda_big(c(-1.0, 0.0)).unwrap(), c(-2.0, 0.0));
        let mut prev = f64::INFINITY;
        for &e in &[1e-3, 1e-4, 1e-5] {
            let d = (lambda_big(c(e, 0.0)).unwrap() * e - 1.0).norm();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-4);
        let rho = c(0.5, find_zeta_zeros(14.0, 14.3).unwrap()[0]);
        assert!(lambda_big(-rho).unwrap().norm() < 1e-8);
        assert!(matches!(lambda_big(c(0.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn theta_values() {
        assert!(theta(100.0).unwrap() - 1.0 < 1e-15);
        assert!((theta(1.0).unwrap() - 1.086_434_811_213_308).abs() < 1e-15);
        let lhs = theta_direct(0.25).unwrap();
        let rhs = 2.0 * theta_direct(4.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-13);
        assert!((theta(0.01).unwrap() - theta_direct(0.01).unwrap()).abs() < 1e-13);
        assert!(theta(0.0).is_err());
    }

    #[test]
    fn zeros_examples() {
        let z = find_zeta_zeros(10.0, 15.0).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0] - 14.134_725_141_734_693).abs() < 1e-6);
        assert!(find_zeta_zeros(1.0, 10.0).unwrap().is_empty());
        let z = find_zeta_zeros(20.0, 26.0).unwrap();
        assert_eq!(z.len(), 2);
        assert!((z[0] - 21.022_039_638_771_55).abs() < 1e-6);
        assert!((z[1] - 25.010_857_580_145_69).abs() < 1e-6);
    }

    #[test]
    fn zero_cache_roundtrip() {
        let cache = ZetaZeroCache::compute(0.0, 30.0, 1e-6).unwrap();
        assert_eq!(cache.ordinates.len(), 3);
        let text = cache.to_string();
        assert!(text.starts_with("# zeta-zero-cache v1 tol=1e-6\n"));
        assert_eq!(text.lines().nth(1).unwrap().len(), 13);
        let back = ZetaZeroCache::parse(&text).unwrap();
        for (a, b) in back.ordinates.iter().zip(&cache.ordinates) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(ZetaZeroCache::new(vec![14.0], 1e-6).is_err());
        assert!(ZetaZeroCache::new(vec![21.02204, 14.134725], 1.0).is_err());
    }

    #[test]
    fn kernel_metadata() {
        let cache = ZetaZeroCache::new(vec![14.134_725_141_7], 1e-6).unwrap();
        let k = KernelFunction::new(KernelKind::LambdaBig, Some(&cache));
        assert_eq!(k.pole_set, vec![c(0.0, 0.0)]);
        for z in &k.zero_hints {
            assert!(k.eval(*z).unwrap().norm() < 1e-8);
        }
        let k = KernelFunction::new(KernelKind::ZetaStar, None);
        assert_eq!(k.pole_set.len(), 2);
    }
}
