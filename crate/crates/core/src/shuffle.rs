//! Shuffle algebras over C: the Feigin–Odesskii product ⊛ with kernel φ, the
//! symmetric product ★ with kernel λ, quadratic relations, and the map
//! between the two.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::error::{check_finite, Error, Result};
use crate::specfun::{lambda_big, phi, zeta_star, KernelFunction};

pub type EvalFn = dyn Fn(&[C]) -> Result<C> + Send + Sync;

/// A degree-n element of a shuffle algebra as a black-box map C^n → C.
#[derive(Clone)]
pub struct GradedEvaluator {
    degree: usize,
    symmetric: bool,
    singular_set_hint: String,
    f: Arc<EvalFn>,
}

impl fmt::Debug for GradedEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradedEvaluator")
            .field("degree", &self.degree)
            .field("symmetric", &self.symmetric)
            .field("singular_set_hint", &self.singular_set_hint)
            .finish_non_exhaustive()
    }
}

impl GradedEvaluator {
    pub fn new<F>(degree: usize, symmetric: bool, hint: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[C]) -> Result<C> + Send + Sync + 'static,
    {
        Self { degree, symmetric, singular_set_hint: hint.into(), f: Arc::new(f) }
    }

    /// The degree-0 unit.
    pub fn unit() -> Self {
        Self::new(0, true, "entire", |_| Ok(C::new(1.0, 0.0)))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn singular_set_hint(&self) -> &str {
        &self.singular_set_hint
    }

    pub fn eval(&self, s: &[C]) -> Result<C> {
        if s.len() != self.degree {
            return Err(Error::Domain(format!(
                "evaluator of degree {} called with {} arguments",
                self.degree,
                s.len()
            )));
        }
        for &z in s {
            check_finite(z)?;
        }
        (self.f)(s)
    }

    /// Largest |F(σs) - F(s)| over all coordinate permutations σ.
    pub fn symmetry_defect(&self, s: &[C]) -> Result<f64> {
        let base = self.eval(s)?;
        let mut worst: f64 = 0.0;
        for p in permutations(s.len()) {
            let t: Vec<C> = p.iter().map(|&i| s[i]).collect();
            worst = worst.max((self.eval(&t)? - base).norm());
        }
        Ok(worst)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// A scalar kernel φ or λ.
pub trait Kernel: Send + Sync {
    fn eval(&self, s: C) -> Result<C>;
}

impl Kernel for KernelFunction {
    fn eval(&self, s: C) -> Result<C> {
        KernelFunction::eval(self, s)
    }
}

/// Adapter turning a closure into a [`Kernel`].
pub struct FnKernel<F>(pub F);

impl<F> Kernel for FnKernel<F>
where
    F: Fn(C) -> Result<C> + Send + Sync,
{
    fn eval(&self, s: C) -> Result<C> {
        (self.0)(s)
    }
}

pub fn phi_kernel() -> Arc<dyn Kernel> {
    Arc::new(FnKernel(phi))
}

pub fn lambda_kernel() -> Arc<dyn Kernel> {
    Arc::new(FnKernel(lambda_big))
}

/// Evaluates the kernel at s_i - s_j, reporting poles with 1-based indices.
fn kernel_at(kernel: &dyn Kernel, s: &[C], i: usize, j: usize) -> Result<C> {
    let d = s[i] - s[j];
    kernel.eval(d).map_err(|e| match e {
        Error::Pole { .. } | Error::ZeroDivision { .. } => Error::KernelPole { i: i + 1, j: j + 1, at: d },
        other => other,
    })
}

/// An (m, n)-shuffle; `w[i]` is the 0-based image of position i.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shuffle {
    pub m: usize,
    pub n: usize,
    pub w: Vec<usize>,
}

impl Shuffle {
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.w.len()];
        for (i, &wi) in self.w.iter().enumerate() {
            inv[wi] = i;
        }
        inv
    }
}

/// All C(m+n, m) shuffles in lexicographic order of w.
pub fn enumerate_shuffles(m: usize, n: usize) -> Vec<Shuffle> {
    let total = m + n;
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(m);
    fn rec(start: usize, total: usize, m: usize, n: usize, chosen: &mut Vec<usize>, out: &mut Vec<Shuffle>) {
        if chosen.len() == m {
            let mut w = chosen.clone();
            w.extend((0..total).filter(|p| !chosen.contains(p)));
            out.push(Shuffle { m, n, w });
            return;
        }
        for p in start..total {
            chosen.push(p);
            rec(p + 1, total, m, n, chosen, out);
            chosen.pop();
        }
    }
    rec(0, total, m, n, &mut chosen, &mut out);
    out
}

/// Π over pairs i < j with w(i) > w(j) of φ(s_i - s_j), w a permutation.
pub fn phi_w(s: &[C], w: &[usize], kernel: &dyn Kernel) -> Result<C> {
    let mut acc = C::new(1.0, 0.0);
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            if w[i] > w[j] {
                acc *= kernel_at(kernel, s, i, j)?;
            }
        }
    }
    Ok(acc)
}

/// F ⊛ G: the sum over shuffles w of F(s_{w(1..m)}) G(s_{w(m+1..)}) times
/// φ_{w⁻¹}(s), i.e. one factor φ(s_p - s_q) for each p < q whose slot in the
/// G block precedes the slot of q in the F block.
pub fn shuffle_product(f: &GradedEvaluator, g: &GradedEvaluator, kernel: Arc<dyn Kernel>) -> GradedEvaluator {
    let (m, n) = (f.degree(), g.degree());
    let shuffles = enumerate_shuffles(m, n);
    let (f, g) = (f.clone(), g.clone());
    GradedEvaluator::new(m + n, false, "kernel poles at s_i - s_j", move |s| {
        let mut total = C::new(0.0, 0.0);
        for sh in &shuffles {
            let left: Vec<C> = sh.w[..m].iter().map(|&k| s[k]).collect();
            let right: Vec<C> = sh.w[m..].iter().map(|&k| s[k]).collect();
            let weight = phi_w(s, &sh.inverse(), kernel.as_ref())?;
            if weight == C::new(0.0, 0.0) {
                continue;
            }
            total += f.eval(&left)? * g.eval(&right)? * weight;
        }
        Ok(total)
    })
}

/// Offset for the diagonal regularization of ★.
pub const DIAGONAL_EPS: f64 = 1e-3;

/// F ★ G = Σ_w H(s_{w(1)}, ..., s_{w(m+n)}) with
/// H(s) = F(s_1..s_m) G(s_{m+1}..) Π_{i≤m<j} λ(s_i - s_j).
/// Points with a coincidence s_i = s_j (|s_i - s_j| < ε) are evaluated by
/// symmetric offsets ±ε, ±ε/10 along a generic direction and Richardson
/// extrapolation.
pub fn symmetric_shuffle(f: &GradedEvaluator, g: &GradedEvaluator, kernel: Arc<dyn Kernel>) -> GradedEvaluator {
    let (m, n) = (f.degree(), g.degree());
    let shuffles = enumerate_shuffles(m, n);
    let (f, g) = (f.clone(), g.clone());
    let raw = move |s: &[C]| -> Result<C> {
        let mut total = C::new(0.0, 0.0);
        for sh in &shuffles {
            let t: Vec<C> = sh.w.iter().map(|&k| s[k]).collect();
            let mut weight = C::new(1.0, 0.0);
            for i in 0..m {
                for j in m..m + n {
                    weight *= kernel_at(kernel.as_ref(), &t, i, j)?;
                }
            }
            if weight == C::new(0.0, 0.0) {
                continue;
            }
            total += f.eval(&t[..m])? * g.eval(&t[m..])? * weight;
        }
        Ok(total)
    };
    GradedEvaluator::new(m + n, true, "regular along diagonals for entire inputs", move |s| {
        if min_gap(s) >= DIAGONAL_EPS {
            raw(s)
        } else {
            richardson_diagonal(&raw, s)
        }
    })
}

fn min_gap(s: &[C]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            gap = gap.min((s[i] - s[j]).norm());
        }
    }
    gap
}

fn richardson_diagonal<F>(raw: &F, s: &[C]) -> Result<C>
where
    F: Fn(&[C]) -> Result<C>,
{
    // pick the direction keeping all offset points farthest from coincidences
    let mut best: Option<(f64, Vec<C>)> = None;
    for &angle in &[0.7f64, 2.1, -1.3, 1.9] {
        let dir: Vec<C> = (0..s.len()).map(|k| C::from_polar(k as f64 + 1.0, angle)).collect();
        let mut worst = f64::INFINITY;
        for &e in &[DIAGONAL_EPS, -DIAGONAL_EPS, 0.1 * DIAGONAL_EPS, -0.1 * DIAGONAL_EPS] {
            let p: Vec<C> = s.iter().zip(&dir).map(|(x, d)| x + d * e).collect();
            worst = worst.min(min_gap(&p) / e.abs());
        }
        if best.as_ref().is_none_or(|(b, _)| worst > *b) {
            best = Some((worst, dir));
        }
    }
    let dir = best.expect("nonempty candidate list").1;
    let sym = |e: f64| -> Result<C> {
        let plus: Vec<C> = s.iter().zip(&dir).map(|(x, d)| x + d * e).collect();
        let minus: Vec<C> = s.iter().zip(&dir).map(|(x, d)| x - d * e).collect();
        Ok((raw(&plus)? + raw(&minus)?) * 0.5)
    };
    let coarse = sym(DIAGONAL_EPS)?;
    let fine = sym(0.1 * DIAGONAL_EPS)?;
    Ok((fine * 100.0 - coarse) / 99.0)
}

/// F ↦ F · Π_{i<j} λ(s_i - s_j)^{-1}, the algebra map from (★, λ) to (⊛, φ)
/// for φ(s) = λ(-s)/λ(s).
pub fn untwist(f: &GradedEvaluator, kernel: Arc<dyn Kernel>) -> GradedEvaluator {
    let f = f.clone();
    GradedEvaluator::new(f.degree(), false, "zeros of the kernel at s_i - s_j", move |s| {
        let mut denom = C::new(1.0, 0.0);
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                denom *= kernel_at(kernel.as_ref(), s, i, j)?;
            }
        }
        if denom == C::new(0.0, 0.0) {
            return Err(Error::ZeroDivision { what: "product of kernel values", at: s[0] });
        }
        Ok(f.eval(s)? / denom)
    })
}

/// (s₁, s₂) ↦ F(s₁, s₂) + Φ(s₁ - s₂) F(s₂, s₁); its kernel is the space of
/// quadratic relations.
pub fn mult2(f: &GradedEvaluator) -> Result<GradedEvaluator> {
    if f.degree() != 2 {
        return Err(Error::Domain(format!("mult2 needs degree 2, got {}", f.degree())));
    }
    let f = f.clone();
    Ok(GradedEvaluator::new(2, false, "poles of Phi at s1 - s2", move |s| {
        let twist = phi(s[0] - s[1]).map_err(|_| Error::KernelPole { i: 1, j: 2, at: s[0] - s[1] })?;
        Ok(f.eval(s)? + twist * f.eval(&[s[1], s[0]])?)
    }))
}

/// P(s) = s(s-1)(s+1).
fn cubic_p(u: C) -> C {
    u * (u - 1.0) * (u + 1.0)
}

/// F_{1,1}(s₁, s₂) = P(s₁ - s₂) ζ*(s₁ - s₂).
pub fn f11() -> GradedEvaluator {
    GradedEvaluator::new(2, false, "s1 - s2 in {0, 1}", |s| {
        let u = s[0] - s[1];
        Ok(cubic_p(u) * zeta_star(u)?)
    })
}

/// F_{λ₁,λ₂} = (λ₁^{s₁}λ₂^{s₂} + λ₁^{s₂}λ₂^{s₁}) F_{1,1}.
pub fn f_lambda(l1: f64, l2: f64) -> Result<GradedEvaluator> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::Domain("F_{l1,l2} needs positive l1, l2".into()));
    }
    let base = f11();
    let (a, b) = (l1.ln(), l2.ln());
    Ok(GradedEvaluator::new(2, false, "s1 - s2 in {0, 1}", move |s| {
        let sym = (s[0] * a + s[1] * b).exp() + (s[1] * a + s[0] * b).exp();
        Ok(sym * base.eval(s)?)
    }))
}
