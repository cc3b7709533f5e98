//! Vector bundles on compactified Spec(Z) as Gram matrices: degrees,
//! sub/quotient forms, rank-one subbundle enumeration, the Hall product on
//! rank two, Eisenstein–Maass series and constant terms.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::lattice::{gcd, hermite_columns, smith_invariants, IntMatrix};
use crate::quad::gauss_legendre_on;
use crate::specfun::{gamma, hurwitz_zeta, upper_gamma, zeta};

/// Relative tolerance for symmetry of a Gram matrix and for boundary vectors
/// in enumeration.
const GRAM_TOL: f64 = 1e-12;

/// Default cap on enumeration candidates.
pub const ENUMERATION_CAP: usize = 1_000_000;

/// A lattice Z^n with a positive-definite quadratic form, given by its Gram
/// matrix in the standard basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GramBundle {
    g: DMatrix<f64>,
}

impl GramBundle {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        if n == 0 || g.ncols() != n {
            return Err(Error::Domain("Gram matrix must be square and nonempty".into()));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("Gram matrix has non-finite entries".into()));
        }
        let scale = g.amax();
        for i in 0..n {
            for j in 0..i {
                if (g[(i, j)] - g[(j, i)]).abs() > GRAM_TOL * scale {
                    return Err(Error::Domain(format!("Gram matrix not symmetric at ({i},{j})")));
                }
            }
        }
        let sym = (&g + g.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(Error::Domain("Gram matrix not positive definite".into()));
        }
        Ok(Self { g: sym })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("Gram matrix must be square".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self { g: DMatrix::identity(n, n) }
    }

    pub fn rank(&self) -> usize {
        self.g.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.rank()).map(|i| self.g.row(i).iter().copied().collect()).collect()
    }

    /// q(v) = vᵀ G v.
    pub fn q(&self, v: &[i64]) -> f64 {
        let n = self.rank();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.g[(i, j)] * v[j] as f64;
            }
            acc += v[i] as f64 * row;
        }
        acc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.rows()).expect("finite floats serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_rows(&rows)
    }
}

/// det(G)^{-1/2}.
pub fn degree(e: &GramBundle) -> f64 {
    e.g.determinant().powf(-0.5)
}

/// τ = x + iy in the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    pub x: f64,
    pub y: f64,
}

impl UpperHalfPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite() && x.is_finite()) {
            return Err(Error::Domain(format!("tau = {x} + {y}i is not in the upper half plane")));
        }
        Ok(Self { x, y })
    }

    /// -1/τ.
    pub fn inversion(&self) -> Self {
        let r2 = self.x * self.x + self.y * self.y;
        Self { x: -self.x / r2, y: self.y / r2 }
    }
}

impl FromStr for UpperHalfPoint {
    type Err = Error;

    /// Parses "x,y".
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split(',').map(|p| p.trim().parse::<f64>());
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => Self::new(x, y),
            _ => Err(Error::Parse(format!("expected tau as x,y, got {s:?}"))),
        }
    }
}

/// E_τ: the lattice Z + Zτ ⊂ C with |z|²/y, Gram (1/y)[[1, x], [x, x²+y²]].
pub fn bundle_from_tau(tau: UpperHalfPoint) -> GramBundle {
    let UpperHalfPoint { x, y } = tau;
    GramBundle { g: DMatrix::from_row_slice(2, 2, &[1.0 / y, x / y, x / y, (x * x + y * y) / y]) }
}

/// The bundle with Iwasawa data u(x)·diag(a1, a2), u(x) = [[1, x], [0, 1]]:
/// the form |g⁻¹v|² with g = u(x)·diag(a1, a2), so that span(e1) is a
/// subbundle of degree a1, the quotient has degree a2, and the total degree
/// is a1·a2.
pub fn bundle_from_iwasawa(a1: f64, a2: f64, x: f64) -> Result<GramBundle> {
    if !(a1 > 0.0 && a2 > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("bad Iwasawa data ({a1}, {a2}, {x})")));
    }
    let i1 = 1.0 / (a1 * a1);
    let i2 = 1.0 / (a2 * a2);
    Ok(GramBundle { g: DMatrix::from_row_slice(2, 2, &[i1, -x * i1, -x * i1, x * x * i1 + i2]) })
}

/// Integer vector with gcd 1, normalized so the first nonzero entry is
/// positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimitiveVector {
    pub coords: Vec<i64>,
}

impl PrimitiveVector {
    pub fn new(mut coords: Vec<i64>) -> Result<Self> {
        let g = coords.iter().fold(0, |g, &c| gcd(g, c));
        if g != 1 {
            return Err(Error::NonPrimitive(vec![g]));
        }
        if coords.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
            coords.iter_mut().for_each(|c| *c = -*c);
        }
        Ok(Self { coords })
    }
}

fn to_float(m: &IntMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows, m.cols, |i, j| m.get(i, j) as f64)
}

/// Gram of the restricted form BᵀGB on the sublattice spanned by the
/// columns of B; the sublattice must be primitive.
pub fn restrict_form(e: &GramBundle, basis: &IntMatrix) -> Result<GramBundle> {
    if basis.rows != e.rank() || basis.cols == 0 || basis.cols > e.rank() {
        return Err(Error::Domain(format!(
            "sublattice basis is {}x{} for a rank {} bundle",
            basis.rows,
            basis.cols,
            e.rank()
        )));
    }
    let inv = smith_invariants(basis);
    if inv.len() != basis.cols || inv.iter().any(|&d| d != 1) {
        return Err(Error::NonPrimitive(inv));
    }
    let b = to_float(basis);
    GramBundle::new(b.transpose() * &e.g * b)
}

/// The integer kernel basis (columns) and an integer section S with J·S = I
/// of a surjective map J: Z^n → Z^r.
pub fn split_quotient(quotient: &IntMatrix) -> Result<(IntMatrix, IntMatrix)> {
    let (r, n) = (quotient.rows, quotient.cols);
    if r == 0 || r > n {
        return Err(Error::NonSurjective(smith_invariants(quotient)));
    }
    let (l, v) = hermite_columns(quotient)?;
    if (0..r).any(|i| l.get(i, i) != 1) {
        return Err(Error::NonSurjective(smith_invariants(quotient)));
    }
    // L = [T | 0] with T lower unitriangular; S = V[:, :r]·T⁻¹ by forward substitution
    let mut tinv = IntMatrix::identity(r);
    for j in 0..r {
        for i in j + 1..r {
            let mut acc: i128 = 0;
            for k in j..i {
                acc += l.get(i, k) as i128 * tinv.get(k, j) as i128;
            }
            tinv.data[i * r + j] = i64::try_from(-acc).map_err(|_| Error::Domain("overflow".into()))?;
        }
    }
    let mut section = IntMatrix::new(n, r, vec![0; n * r])?;
    for i in 0..n {
        for j in 0..r {
            let acc: i128 = (0..r).map(|k| v.get(i, k) as i128 * tinv.get(k, j) as i128).sum();
            section.data[i * r + j] = i64::try_from(acc).map_err(|_| Error::Domain("overflow".into()))?;
        }
    }
    let kernel_cols: Vec<Vec<i64>> = (r..n).map(|j| v.column(j)).collect();
    let kernel = if kernel_cols.is_empty() {
        IntMatrix::new(n, 0, vec![])?
    } else {
        IntMatrix::from_columns(&kernel_cols)?
    };
    Ok((kernel, section))
}

/// Gram of the quotient form v'' ↦ min_{Jv = v''} q(v): the Schur complement
/// of the kernel block.
pub fn pushforward_form(e: &GramBundle, quotient: &IntMatrix) -> Result<GramBundle> {
    if quotient.cols != e.rank() {
        return Err(Error::Domain(format!(
            "quotient map has {} columns for a rank {} bundle",
            quotient.cols,
            e.rank()
        )));
    }
    let (kernel, section) = split_quotient(quotient)?;
    let s = to_float(&section);
    let gs = &e.g * &s;
    let mut out = s.transpose() * &gs;
    if kernel.cols > 0 {
        let k = to_float(&kernel);
        let gk = &e.g * &k;
        let kgk = k.transpose() * &gk;
        let chol = kgk.cholesky().ok_or_else(|| Error::Domain("kernel block not positive definite".into()))?;
        let cross = k.transpose() * &gs;
        out -= cross.transpose() * chol.solve(&cross);
    }
    GramBundle::new(out)
}

/// Gram-based LLL (δ = 0.99). Returns the unimodular transform U (columns
/// are the reduced basis in original coordinates) and UᵀGU.
fn lll(g: &DMatrix<f64>) -> (Vec<Vec<i64>>, DMatrix<f64>) {
    let n = g.nrows();
    let mut u: Vec<Vec<i64>> = (0..n).map(|j| (0..n).map(|i| i64::from(i == j)).collect()).collect();
    let gram_of = |u: &Vec<Vec<i64>>| {
        DMatrix::from_fn(n, n, |i, j| {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += u[i][a] as f64 * g[(a, b)] * u[j][b] as f64;
                }
            }
            acc
        })
    };
    let gso = |gg: &DMatrix<f64>| {
        let mut mu = vec![vec![0.0; n]; n];
        let mut bstar = vec![0.0; n];
        for i in 0..n {
            for j in 0..i {
                let mut v = gg[(i, j)];
                for l in 0..j {
                    v -= mu[j][l] * mu[i][l] * bstar[l];
                }
                mu[i][j] = v / bstar[j];
            }
            let mut b = gg[(i, i)];
            for l in 0..i {
                b -= mu[i][l] * mu[i][l] * bstar[l];
            }
            bstar[i] = b;
        }
        (mu, bstar)
    };
    let mut gg = gram_of(&u);
    let mut k = 1;
    let mut guard = 0;
    while k < n && guard < 10_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (mu, _) = gso(&gg);
            let r = mu[k][j].round();
            if r != 0.0 && r.abs() < 1e15 {
                let r = r as i64;
                let uj = u[j].clone();
                for (a, b) in u[k].iter_mut().zip(&uj) {
                    *a -= r * b;
                }
                gg = gram_of(&u);
            }
        }
        let (mu, bstar) = gso(&gg);
        if bstar[k] >= (0.99 - mu[k][k - 1] * mu[k][k - 1]) * bstar[k - 1] {
            k += 1;
        } else {
            u.swap(k, k - 1);
            gg = gram_of(&u);
            k = (k - 1).max(1);
        }
    }
    (u, gg)
}

/// All nonzero v ∈ Z^n (one of ±v, first nonzero entry positive) with
/// vᵀGv ≤ bound, sorted by (q(v), v). Fincke–Pohst enumeration after LLL.
pub fn short_vectors(g: &DMatrix<f64>, bound: f64, cap: usize) -> Result<Vec<(Vec<i64>, f64)>> {
    let n = g.nrows();
    let (u, gg) = lll(g);
    let chol = gg
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("Gram matrix not positive definite".into()))?;
    let r = chol.l().transpose(); // gg = Rᵀ R, R upper triangular
    let slack = bound * (1.0 + GRAM_TOL);
    let mut visited = 0usize;
    let mut x = vec![0i64; n];
    let mut found: Vec<Vec<i64>> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        n: usize,
        r: &DMatrix<f64>,
        remaining: f64,
        x: &mut Vec<i64>,
        visited: &mut usize,
        cap: usize,
        found: &mut Vec<Vec<i64>>,
    ) -> Result<()> {
        let rii = r[(i, i)];
        let mut shift = 0.0;
        for j in i + 1..n {
            shift += r[(i, j)] * x[j] as f64;
        }
        let center = -shift / rii;
        let radius = (remaining.max(0.0)).sqrt() / rii;
        let lo = (center - radius).ceil() as i64;
        let hi = (center + radius).floor() as i64;
        for xi in lo..=hi {
            *visited += 1;
            if *visited > cap {
                return Err(Error::Budget { cap });
            }
            x[i] = xi;
            let t = rii * xi as f64 + shift;
            let rem = remaining - t * t;
            if rem < -1e-300 && rem < -remaining.abs() * GRAM_TOL {
                continue;
            }
            if i == 0 {
                if x.iter().any(|&c| c != 0) {
                    found.push(x.clone());
                }
            } else {
                rec(i - 1, n, r, rem, x, visited, cap, found)?;
            }
        }
        x[i] = 0;
        Ok(())
    }
    rec(n - 1, n, &r, slack, &mut x, &mut visited, cap, &mut found)?;
    let mut out: Vec<(Vec<i64>, f64)> = Vec::with_capacity(found.len() / 2);
    for y in found {
        let v: Vec<i64> = (0..n).map(|a| (0..n).map(|k| u[k][a] * y[k]).sum()).collect();
        if v.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
            continue;
        }
        let mut q = 0.0;
        for a in 0..n {
            for b in 0..n {
                q += v[a] as f64 * g[(a, b)] * v[b] as f64;
            }
        }
        if q <= slack {
            out.push((v, q));
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Rank-one subbundles of degree ≥ degree_min: primitive v (up to sign) with
/// q(v) ≤ 1/degree_min², sorted by q.
pub fn enumerate_rank1_subbundles(e: &GramBundle, degree_min: f64) -> Result<Vec<PrimitiveVector>> {
    enumerate_rank1_subbundles_capped(e, degree_min, ENUMERATION_CAP)
}

pub fn enumerate_rank1_subbundles_capped(e: &GramBundle, degree_min: f64, cap: usize) -> Result<Vec<PrimitiveVector>> {
    Ok(primitive_with_norms(e, degree_min, cap)?.into_iter().map(|(v, _)| v).collect())
}

fn primitive_with_norms(e: &GramBundle, degree_min: f64, cap: usize) -> Result<Vec<(PrimitiveVector, f64)>> {
    if !(degree_min > 0.0 && degree_min.is_finite()) {
        return Err(Error::Domain(format!("degree_min must be positive, got {degree_min}")));
    }
    let bound = 1.0 / (degree_min * degree_min);
    Ok(short_vectors(&e.g, bound, cap)?
        .into_iter()
        .filter(|(v, _)| v.iter().fold(0, |g, &c| gcd(g, c)) == 1)
        .map(|(v, q)| (PrimitiveVector { coords: v }, q))
        .collect())
}

/// (f1 ∗ f2)(E) for rank-two E: the sum over rank-one subbundles E' with
/// deg E' ≥ degree_floor of deg(E')^{1/2} deg(E/E')^{-1/2} f1(deg E')
/// f2(deg E/E'), summed in ascending q.
pub fn hall_product_11<F1, F2>(f1: F1, f2: F2, e: &GramBundle, degree_floor: f64) -> Result<C>
where
    F1: Fn(f64) -> C,
    F2: Fn(f64) -> C,
{
    hall_product_11_capped(f1, f2, e, degree_floor, ENUMERATION_CAP)
}

pub fn hall_product_11_capped<F1, F2>(f1: F1, f2: F2, e: &GramBundle, degree_floor: f64, cap: usize) -> Result<C>
where
    F1: Fn(f64) -> C,
    F2: Fn(f64) -> C,
{
    if e.rank() != 2 {
        return Err(Error::Domain(format!("hall_product_11 needs rank 2, got {}", e.rank())));
    }
    let total = degree(e);
    let mut acc = C::new(0.0, 0.0);
    for (_, q) in primitive_with_norms(e, degree_floor, cap)? {
        let d1 = q.powf(-0.5);
        let d2 = total / d1;
        acc += f1(d1) * f2(d2) * (d1 / d2).sqrt();
    }
    Ok(acc)
}

/// Truncation of the Ewald sums: terms with π·q above this are below 1e-17.
const EWALD_CUTOFF: f64 = 45.0;

/// Epstein zeta Σ'_{v ∈ Z^n} q(v)^{-s}, continued to all s ∉ {0, n/2} by the
/// Ewald (theta-splitting) formula.
pub fn epstein_zeta(e: &GramBundle, s: C) -> Result<C> {
    check_finite(s)?;
    let n = e.rank() as f64;
    let half = C::from(n / 2.0);
    if s == C::new(0.0, 0.0) || s == half {
        return Err(Error::Pole { what: "epstein_zeta", at: s });
    }
    if s.im == 0.0 && s.re < 0.0 && s.re == s.re.round() {
        return Err(Error::Domain("epstein_zeta at negative integers is not supported".into()));
    }
    let det = e.g.determinant();
    let lambda = det.powf(1.0 / n);
    let g1 = &e.g / lambda;
    let dual = g1
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular Gram matrix".into()))?;
    let bound = EWALD_CUTOFF / PI;
    let mut direct = C::new(0.0, 0.0);
    for (_, q) in short_vectors(&g1, bound, ENUMERATION_CAP)? {
        let x = PI * q;
        direct += (-s * x.ln()).exp() * upper_gamma(s, x)?;
    }
    let mut reciprocal = C::new(0.0, 0.0);
    for (_, q) in short_vectors(&dual, bound, ENUMERATION_CAP)? {
        let x = PI * q;
        reciprocal += ((s - half) * x.ln()).exp() * upper_gamma(half - s, x)?;
    }
    let completed = (direct + reciprocal) * 2.0 + (s - half).inv() - s.inv();
    let z1 = completed * (s * PI.ln()).exp() / gamma(s)?;
    Ok(z1 * (-s * lambda.ln()).exp())
}

/// (𝔈(t1) ∗ 𝔈(t2))(E) for the degree characters 𝔈(t)(L) = deg(L)^t on
/// rank-two E: deg(E)^{t2-1/2} Σ_{v primitive, ±} q(v)^{-s} with
/// s = (1 + t1 - t2)/2, evaluated as ½·Z_E(s)/ζ(2s).
pub fn eisenstein_hall_product(t1: C, t2: C, e: &GramBundle) -> Result<C> {
    if e.rank() != 2 {
        return Err(Error::Domain(format!("eisenstein_hall_product needs rank 2, got {}", e.rank())));
    }
    let s = (t1 - t2 + 1.0) * 0.5;
    if s.re <= 1.0 {
        return Err(Error::Convergence(format!("the Hall sum diverges for Re(t1 - t2) = {} <= 1", (t1 - t2).re)));
    }
    let coprime = epstein_zeta(e, s)? / zeta(s * 2.0)? * 0.5;
    Ok(((t2 - 0.5) * degree(e).ln()).exp() * coprime)
}

/// E(τ, s) = ½ Σ_{(m,n)=1} y^s / |m + nτ|^{2s} for Re s > 1, by exact row
/// sums R(nτ) = Σ_k |k + nτ|^{-2s} for small n and the Poisson main term for
/// the remaining rows: E = y^s (1 + Σ_{n≥1} R(nτ) / ζ(2s)).
pub fn eisenstein_maass(tau: UpperHalfPoint, s: C, tol: f64) -> Result<C> {
    check_finite(s)?;
    if s.re <= 1.0 {
        return Err(Error::Convergence(format!("Eisenstein series diverges for Re s = {} <= 1", s.re)));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let UpperHalfPoint { x, y } = tau;
    // rows beyond N differ from the main term by O(e^{-2π n y})
    let rows = (((1.0 / tol).ln() + 12.0) / (2.0 * PI * y)).ceil().max(2.0) as usize;
    let mut sum = C::new(0.0, 0.0);
    for n in 1..=rows {
        sum += row_sum(n as f64 * x, n as f64 * y, s)?;
    }
    let main = PI.sqrt() * (ln_gamma_ratio(s)?).exp();
    let tail = main * ((1.0 - 2.0 * s) * y.ln()).exp() * hurwitz_zeta(2.0 * s - 1.0, rows as f64 + 1.0)?;
    Ok((s * y.ln()).exp() * (1.0 + (sum + tail) / zeta(2.0 * s)?))
}

/// ln(Γ(s - 1/2)/Γ(s)).
fn ln_gamma_ratio(s: C) -> Result<C> {
    Ok(crate::specfun::ln_gamma(s - 0.5)? - crate::specfun::ln_gamma(s)?)
}

/// Σ_{k∈Z} ((k+u)² + v²)^{-s}: direct terms for |k+u| ≤ K, binomial series in
/// v²/(k+u)² with Hurwitz zeta tails beyond.
fn row_sum(u: f64, v: f64, s: C) -> Result<C> {
    let u = u - u.floor();
    let cut = (2.0 * v).max(8.0);
    let v2 = v * v;
    let mut direct = C::new(0.0, 0.0);
    let kmax = cut.ceil() as i64 + 1;
    for k in -kmax..=kmax {
        let w = k as f64 + u;
        if w.abs() <= cut {
            direct += (-s * (w * w + v2).ln()).exp();
        }
    }
    let a_pos = (cut - u).floor() + 1.0 + u;
    let a_neg = (cut + u).floor() + 1.0 - u;
    let mut tail = C::new(0.0, 0.0);
    let mut binom = C::new(1.0, 0.0);
    let mut vpow = 1.0;
    for j in 0..200 {
        let expo = 2.0 * s + 2.0 * j as f64;
        let term = binom * vpow * (hurwitz_zeta(expo, a_pos)? + hurwitz_zeta(expo, a_neg)?);
        tail += term;
        if term.norm() < 1e-17 * (direct + tail).norm() {
            return Ok(direct + tail);
        }
        binom *= (-s - j as f64) / (j as f64 + 1.0);
        vpow *= v2;
    }
    Err(Error::Convergence("row-sum binomial series did not converge".into()))
}

/// ∫₀¹ f(E(a1, a2, x)) dx by Gauss–Legendre with `quad_points` nodes, the
/// bundle built by [`bundle_from_iwasawa`].
pub fn constant_term_rank2<F>(f: F, a1: f64, a2: f64, quad_points: usize) -> Result<C>
where
    F: Fn(&GramBundle) -> Result<C>,
{
    if quad_points == 0 {
        return Err(Error::Domain("constant term needs at least one node".into()));
    }
    let (xs, ws) = gauss_legendre_on(quad_points, 0.0, 1.0);
    let mut acc = C::new(0.0, 0.0);
    for (x, w) in xs.iter().zip(&ws) {
        acc += f(&bundle_from_iwasawa(a1, a2, *x)?)? * *w;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{phi, zeta_star};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn tau(x: f64, y: f64) -> UpperHalfPoint {
        UpperHalfPoint::new(x, y).unwrap()
    }

    #[test]
    fn degrees() {
        for n in 1..5 {
            assert!((degree(&GramBundle::identity(n)) - 1.0).abs() < 1e-15);
        }
        let o = GramBundle::from_rows(&[vec![1.0 / (3.0 * 3.0)]]).unwrap();
        assert!((degree(&o) - 3.0).abs() < 1e-14);
        assert!((degree(&bundle_from_tau(tau(0.3, 1.7))) - 1.0).abs() < 1e-14);
        let e = bundle_from_iwasawa(0.7, 2.3, 0.41).unwrap();
        assert!((degree(&e) - 0.7 * 2.3).abs() < 1e-14);
    }

    #[test]
    fn tau_bundles() {
        assert_eq!(bundle_from_tau(tau(0.0, 1.0)), GramBundle::identity(2));
        let t = tau(0.0, 1.0);
        assert_eq!(bundle_from_tau(t.inversion()), bundle_from_tau(t));
        let a = bundle_from_tau(tau(0.2, 0.9));
        let b = bundle_from_tau(tau(1.2, 0.9));
        let min = |e: &GramBundle| short_vectors(e.gram(), 10.0, 1000).unwrap()[0].1;
        assert!((min(&a) - min(&b)).abs() < 1e-12);
        assert!((degree(&a) - degree(&b)).abs() < 1e-14);
        assert!("0.3,1.1".parse::<UpperHalfPoint>().is_ok());
        assert!("0.3,-1".parse::<UpperHalfPoint>().is_err());
        assert!("0.3".parse::<UpperHalfPoint>().is_err());
    }

    #[test]
    fn gram_validation_and_json() {
        assert!(GramBundle::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(GramBundle::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        let e = bundle_from_tau(tau(0.25, 1.5));
        assert_eq!(GramBundle::from_json(&e.to_json()).unwrap(), e);
    }

    #[test]
    fn restrictions() {
        let e = GramBundle::identity(2);
        let full = IntMatrix::identity(2);
        assert_eq!(restrict_form(&e, &full).unwrap(), e);
        let r = restrict_form(&e, &IntMatrix::from_columns(&[vec![1, 0]]).unwrap()).unwrap();
        assert_eq!(r.rows(), vec![vec![1.0]]);
        let r = restrict_form(&e, &IntMatrix::from_columns(&[vec![1, 1]]).unwrap()).unwrap();
        assert!((degree(&r) - 0.5f64.sqrt()).abs() < 1e-15);
        let err = restrict_form(&e, &IntMatrix::from_columns(&[vec![2, 2]]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonPrimitive(_)));
        let e3 = GramBundle::identity(3);
        let err = restrict_form(&e3, &IntMatrix::from_columns(&[vec![1, 1, 0], vec![1, -1, 0]]).unwrap());
        assert!(matches!(err, Err(Error::NonPrimitive(ref d)) if d == &vec![1, 2]));
    }

    #[test]
    fn pushforwards() {
        let e = GramBundle::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]]).unwrap();
        let proj = IntMatrix::from_rows(&[vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let p = pushforward_form(&e, &proj).unwrap();
        assert_eq!(p.rows(), vec![vec![3.0, 1.0], vec![1.0, 4.0]]);
        let (x, y) = (0.37, 1.6);
        let e = bundle_from_tau(tau(x, y));
        let q = pushforward_form(&e, &IntMatrix::from_rows(&[vec![0, 1]]).unwrap()).unwrap();
        assert!((q.gram()[(0, 0)] - y).abs() < 1e-14);
        assert!((degree(&q) - 1.0 / y.sqrt()).abs() < 1e-14);
        // sampled minimization of q(t e1 + e2) over real t
        let best = (0..20001)
            .map(|k| {
                let t = -2.0 + 4.0 * k as f64 / 20000.0;
                (e.gram()[(0, 0)] * t * t + 2.0 * e.gram()[(0, 1)] * t + e.gram()[(1, 1)]).abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((best - y).abs() < 1e-6);
        let err = pushforward_form(&e, &IntMatrix::from_rows(&[vec![0, 2]]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonSurjective(_)));
    }

    #[test]
    fn enumeration_examples() {
        let e = GramBundle::identity(2);
        let v = enumerate_rank1_subbundles(&e, 1.0).unwrap();
        let coords: Vec<Vec<i64>> = v.iter().map(|p| p.coords.clone()).collect();
        assert_eq!(coords, vec![vec![0, 1], vec![1, 0]]);
        let v = enumerate_rank1_subbundles(&e, 0.5f64.sqrt()).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.contains(&PrimitiveVector::new(vec![1, -1]).unwrap()));
        let e = bundle_from_tau(tau(0.31, 0.8));
        let first = short_vectors(e.gram(), 100.0, 10_000).unwrap()[0].1;
        assert!(enumerate_rank1_subbundles(&e, 1.0 / first.sqrt() * 1.0001).unwrap().is_empty());
        let err = enumerate_rank1_subbundles_capped(&GramBundle::identity(2), 0.01, 50).unwrap_err();
        assert_eq!(err, Error::Budget { cap: 50 });
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let e = GramBundle::from_rows(&[vec![2.0, 0.7, -0.3], vec![0.7, 1.5, 0.2], vec![-0.3, 0.2, 0.9]]).unwrap();
        let dmin = 0.35;
        let got = enumerate_rank1_subbundles(&e, dmin).unwrap();
        let mut brute = Vec::new();
        for a in -12i64..=12 {
            for b in -12i64..=12 {
                for cc in -12i64..=12 {
                    if let Ok(p) = PrimitiveVector::new(vec![a, b, cc]) {
                        if e.q(&p.coords) <= 1.0 / (dmin * dmin) && !brute.contains(&p) {
                            brute.push(p);
                        }
                    }
                }
            }
        }
        assert_eq!(got.len(), brute.len());
        for p in &brute {
            assert!(got.contains(p));
        }
    }

    #[test]
    fn hall_product_examples() {
        let e = GramBundle::identity(2);
        let far = |d: f64| C::from((-(d.ln() - 8.0).powi(2) / 0.02).exp());
        assert!(hall_product_11(far, far, &e, 0.05).unwrap().norm() < 1e-12);
        let narrow = |d: f64| C::from((-(d.ln()).powi(2) / (2.0 * 0.05 * 0.05)).exp());
        let v = hall_product_11(narrow, narrow, &e, 0.3).unwrap();
        assert!((v.re - 2.0).abs() < 1e-12);
        // twisted recomputation with f1, f2 swapped
        let f1 = |d: f64| C::from((-(d.ln() - 0.2).powi(2) / 0.5).exp());
        let f2 = |d: f64| C::from((-(d.ln() + 0.1).powi(2) / 0.3).exp());
        let e = bundle_from_tau(tau(0.2, 1.3));
        let got = hall_product_11(f2, f1, &e, 0.05).unwrap();
        let mut manual = C::new(0.0, 0.0);
        for p in enumerate_rank1_subbundles(&e, 0.05).unwrap() {
            let d1 = e.q(&p.coords).powf(-0.5);
            manual += f2(d1) * f1(1.0 / d1) * d1.sqrt() * (1.0 / d1).powf(-0.5);
        }
        assert!((got - manual).norm() < 1e-13);
    }

    #[test]
    fn modular_invariance_of_hall_product() {
        let f1 = |d: f64| C::from((-(d.ln() - 0.2).powi(2) / 0.5).exp());
        let f2 = |d: f64| C::from((-(d.ln() + 0.1).powi(2) / 0.3).exp());
        let t = tau(0.3, 0.9);
        let a = hall_product_11(f1, f2, &bundle_from_tau(t), 0.02).unwrap();
        let b = hall_product_11(f1, f2, &bundle_from_tau(t.inversion()), 0.02).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn eisenstein_values() {
        let catalan = 0.915_965_594_177_219_015;
        let v = eisenstein_maass(tau(0.0, 1.0), c(2.0, 0.0), 1e-12).unwrap();
        assert!((v.re - 30.0 * catalan / (PI * PI)).abs() < 1e-11);
        let s = c(1.7, 0.4);
        let a = eisenstein_maass(tau(0.3, 0.8), s, 1e-12).unwrap();
        let b = eisenstein_maass(tau(1.3, 0.8), s, 1e-12).unwrap();
        assert!((a - b).norm() < 1e-11);
        let inv = eisenstein_maass(tau(0.3, 0.8).inversion(), s, 1e-12).unwrap();
        assert!((a - inv).norm() < 1e-10 * a.norm());
        assert!(matches!(eisenstein_maass(tau(0.0, 1.0), c(1.0, 0.0), 1e-9), Err(Error::Convergence(_))));
    }

    #[test]
    fn eisenstein_against_brute_force_coprime_sum() {
        // coprime sum over a box plus the integral tail of the omitted region
        let (x, y) = (0.3, 1.1);
        let s = 3.0;
        let r = 300i64;
        let mut acc = 0.0;
        for m in -r..=r {
            for n in -r..=r {
                if (m, n) != (0, 0) && gcd(m, n) == 1 {
                    let a = m as f64 + n as f64 * x;
                    let b = n as f64 * y;
                    acc += y.powf(s) / (a * a + b * b).powf(s);
                }
            }
        }
        let v = eisenstein_maass(tau(x, y), c(s, 0.0), 1e-12).unwrap();
        assert!((acc / 2.0 - v.re).abs() < 1e-8);
    }

    #[test]
    fn ewald_matches_rows() {
        for &(x, y, t12) in &[(0.0, 1.0, 2.5), (0.3, 1.1, 3.0), (0.0, 2.0, 3.0), (-0.45, 0.95, 2.2)] {
            let e = bundle_from_tau(tau(x, y));
            let lhs = eisenstein_hall_product(c(t12, 0.0), c(0.0, 0.0), &e).unwrap();
            let rhs = eisenstein_maass(tau(x, y), c((t12 + 1.0) / 2.0, 0.0), 1e-13).unwrap();
            assert!((lhs - rhs).norm() < 1e-11 * rhs.norm(), "{x} {y} {t12}: {lhs} {rhs}");
        }
    }

    #[test]
    fn epstein_square_lattice() {
        // Σ' (m²+n²)^{-s} = 4 ζ(s) β(s); β(2) = Catalan
        let z = epstein_zeta(&GramBundle::identity(2), c(2.0, 0.0)).unwrap();
        let expect = 4.0 * PI * PI / 6.0 * 0.915_965_594_177_219_015;
        assert!((z.re - expect).abs() < 1e-12);
    }

    #[test]
    fn eisenstein_constant_term() {
        let (s, y) = (c(2.0, 0.0), 1.3f64);
        let ct = constant_term_rank2(
            |e| {
                let g = e.gram();
                let yy = 1.0 / g[(0, 0)];
                let xx = g[(0, 1)] * yy;
                eisenstein_maass(tau(xx, yy), s, 1e-12)
            },
            y.sqrt(),
            1.0 / y.sqrt(),
            48,
        )
        .unwrap();
        let expect = (s * y.ln()).exp()
            + zeta_star(2.0 * s - 1.0).unwrap() / zeta_star(2.0 * s).unwrap() * ((1.0 - s) * y.ln()).exp();
        assert!((ct - expect).norm() < 1e-10);
    }

    #[test]
    fn character_constant_term() {
        let (t1, t2) = (c(2.2, 0.3), c(0.1, -0.2));
        for &(a1, a2) in &[(0.9, 1.2), (1.3, 0.8)] {
            let ct = constant_term_rank2(|e| eisenstein_hall_product(t1, t2, e), a1, a2, 64).unwrap();
            let twisted = ct * (a2 / a1).sqrt();
            let pw = |a: f64, t: C| (t * a.ln()).exp();
            let expect = pw(a1, t1) * pw(a2, t2) + phi(t1 - t2).unwrap() * pw(a1, t2) * pw(a2, t1);
            assert!((twisted - expect).norm() < 1e-5 * expect.norm(), "{twisted} vs {expect}");
        }
    }

    #[test]
    fn constant_term_of_constant() {
        let v = constant_term_rank2(|_| Ok(c(2.5, -1.0)), 0.7, 1.9, 8).unwrap();
        assert!((v - c(2.5, -1.0)).norm() < 1e-14);
    }
}
