//! The permutohedron P_n as ordered set partitions, its cochain complex with
//! the perturbed differential d_L, wheels, cohomology ranks, the depth
//! filtration and the cubic-relation scan at zeta zeros.

use std::fmt;
use std::ops::{Add, Mul, Neg};

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{lambda_big, ZetaZeroCache};

pub const MAX_N: usize = 6;

/// Default relative singular-value threshold for numerical ranks.
pub const RANK_TOL: f64 = 1e-8;

/// Default threshold below which |λ_ij| is declared an exact zero.
pub const ZERO_TOL: f64 = 1e-8;

/// Distance within which a point difference is identified with a zero of Λ.
pub const ZERO_MATCH: f64 = 1e-6;

/// (I_1, ..., I_p) with blocks stored as bitmasks (bit i-1 for element i).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderedSetPartition {
    n: usize,
    blocks: Vec<u8>,
}

impl OrderedSetPartition {
    /// Builds from 1-based blocks.
    pub fn new(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::Domain(format!("n must be in 1..={MAX_N}, got {n}")));
        }
        let mut seen = 0u8;
        let mut masks = Vec::with_capacity(blocks.len());
        for b in blocks {
            let mut m = 0u8;
            for &i in b {
                if i == 0 || i > n {
                    return Err(Error::Domain(format!("element {i} outside 1..={n}")));
                }
                m |= 1 << (i - 1);
            }
            if m == 0 || m & seen != 0 {
                return Err(Error::Domain("blocks must be nonempty and disjoint".into()));
            }
            seen |= m;
            masks.push(m);
        }
        if seen != full(n) {
            return Err(Error::Domain("blocks must cover 1..=n".into()));
        }
        Ok(Self { n, blocks: masks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n - self.blocks.len()
    }

    pub fn masks(&self) -> &[u8] {
        &self.blocks
    }

    /// The blocks as sorted 1-based index lists.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|&m| members(m).map(|i| i + 1).collect()).collect()
    }

    /// The face obtained by merging blocks ν and ν+1 (0-based ν).
    pub fn merge(&self, nu: usize) -> Self {
        let mut blocks = self.blocks.clone();
        let b = blocks.remove(nu + 1);
        blocks[nu] |= b;
        Self { n: self.n, blocks }
    }

    /// Whether every block of `coarser` is a union of consecutive blocks of self.
    pub fn refines(&self, coarser: &Self) -> bool {
        if self.n != coarser.n {
            return false;
        }
        let mut k = 0;
        for &target in &coarser.blocks {
            let mut acc = 0u8;
            while acc != target {
                match self.blocks.get(k) {
                    Some(&b) if b & !target == 0 => acc |= b,
                    _ => return false,
                }
                k += 1;
            }
        }
        true
    }
}

impl fmt::Display for OrderedSetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl Serialize for OrderedSetPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.blocks().serialize(s)
    }
}

fn full(n: usize) -> u8 {
    ((1u16 << n) - 1) as u8
}

fn members(m: u8) -> impl Iterator<Item = usize> {
    (0..8).filter(move |i| m & (1 << i) != 0)
}

/// All faces of P_n graded by dimension 0..n-1, each grade sorted.
pub fn faces(n: usize) -> Result<Vec<Vec<OrderedSetPartition>>> {
    if n == 0 || n > MAX_N {
        return Err(Error::Domain(format!("n must be in 1..={MAX_N}, got {n}")));
    }
    fn rec(rest: u8, cur: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<OrderedSetPartition>>) {
        if rest == 0 {
            let f = OrderedSetPartition { n, blocks: cur.clone() };
            out[f.dim()].push(f);
            return;
        }
        // nonempty submasks of rest
        let mut sub = rest;
        while sub != 0 {
            cur.push(sub);
            rec(rest & !sub, cur, n, out);
            cur.pop();
            sub = (sub - 1) & rest;
        }
    }
    let mut out = vec![Vec::new(); n];
    rec(full(n), &mut Vec::new(), n, &mut out);
    for grade in &mut out {
        grade.sort_by_key(|f| f.blocks());
    }
    Ok(out)
}

/// Coefficients of the perturbed complex: complex floats or exact rationals.
pub trait Weight:
    Clone + Zero + One + Neg<Output = Self> + Add<Output = Self> + Mul<Output = Self> + fmt::Debug + Send + Sync
{
    fn magnitude(&self) -> f64;

    /// Rank with singular-value diagnostics; exact types ignore `tol`.
    fn rank(m: &Matrix<Self>, tol: f64) -> Result<RankInfo>;
}

impl Weight for C {
    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn rank(m: &Matrix<Self>, tol: f64) -> Result<RankInfo> {
        if m.rows == 0 || m.cols == 0 {
            return Ok(RankInfo { rank: 0, gap: None, singular_values: vec![] });
        }
        let mut a = DMatrix::from_row_slice(m.rows, m.cols, &m.data);
        equilibrate(&mut a);
        let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        let smax = sv[0];
        if smax == 0.0 {
            return Ok(RankInfo { rank: 0, gap: None, singular_values: sv });
        }
        for &s in &sv {
            let ratio = s / smax;
            if ratio > tol / 100.0 && ratio < tol * 100.0 {
                return Err(Error::IllConditioned { ratio, tol });
            }
        }
        let rank = sv.iter().filter(|&&s| s > tol * smax).count();
        let gap = match (rank, sv.get(rank)) {
            (r, Some(&dropped)) if r > 0 => Some(sv[r - 1] / dropped.max(f64::EPSILON * smax)),
            _ => None,
        };
        Ok(RankInfo { rank, gap, singular_values: sv })
    }
}

/// Alternating row and column max-norm scaling; leaves the rank unchanged
/// while removing the spread of magnitudes among kernel values.
fn equilibrate(a: &mut DMatrix<C>) {
    for _ in 0..4 {
        for mut row in a.row_iter_mut() {
            let m = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if m > 0.0 {
                row /= C::new(m, 0.0);
            }
        }
        for mut col in a.column_iter_mut() {
            let m = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if m > 0.0 {
                col /= C::new(m, 0.0);
            }
        }
    }
}

impl Weight for BigRational {
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn rank(m: &Matrix<Self>, _tol: f64) -> Result<RankInfo> {
        let mut a: Vec<Vec<BigRational>> = (0..m.rows).map(|i| m.data[i * m.cols..(i + 1) * m.cols].to_vec()).collect();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(p) = (rank..m.rows).find(|&r| !a[r][col].is_zero()) else { continue };
            a.swap(rank, p);
            let inv = a[rank][col].recip();
            for r in rank + 1..m.rows {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = &a[r][col] * &inv;
                for c in col..m.cols {
                    let t = &factor * &a[rank][c];
                    a[r][c] -= t;
                }
            }
            rank += 1;
        }
        Ok(RankInfo { rank, gap: None, singular_values: vec![] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    /// Smallest kept over largest dropped singular value, the latter floored
    /// at machine epsilon times the largest; None when nothing is dropped.
    pub gap: Option<f64>,
    pub singular_values: Vec<f64>,
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Weight> Matrix<T> {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.data[i * other.cols + j].clone() + a.clone() * other.get(k, j).clone();
                    out.data[i * other.cols + j] = v;
                }
            }
        }
        out
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }
}

/// 𝔏 = ‖λ_ij‖ with a mask of entries declared exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedMatrix<T> {
    n: usize,
    entries: Vec<T>,
    zero_mask: Vec<bool>,
}

impl<T: Weight> PerturbedMatrix<T> {
    /// Entries as an n×n array (diagonal ignored); masked entries are
    /// stored as zeros.
    pub fn new(entries: Vec<Vec<T>>, zero_mask: Vec<Vec<bool>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || n > MAX_N {
            return Err(Error::Domain(format!("n must be in 1..={MAX_N}, got {n}")));
        }
        if entries.iter().any(|r| r.len() != n) || zero_mask.len() != n || zero_mask.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("perturbed matrix must be n×n".into()));
        }
        let mut flat = Vec::with_capacity(n * n);
        let mut mask = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = i != j && zero_mask[i][j];
                mask.push(z);
                flat.push(if i == j || z { T::zero() } else { entries[i][j].clone() });
            }
        }
        Ok(Self { n, entries: flat, zero_mask: mask })
    }

    /// All off-diagonal entries equal to one.
    pub fn ones(n: usize) -> Result<Self> {
        Self::new(vec![vec![T::one(); n]; n], vec![vec![false; n]; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// λ_ij, 1-based.
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[(i - 1) * self.n + (j - 1)]
    }

    /// Whether λ_ij is a declared zero, 1-based.
    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.zero_mask[(i - 1) * self.n + (j - 1)]
    }

    /// Masked pairs (i, j), 1-based, in lexicographic order.
    pub fn zero_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.n {
            for j in 1..=self.n {
                if self.is_masked(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

impl PerturbedMatrix<C> {
    /// Masks every off-diagonal entry with |λ_ij| < zero_tol.
    pub fn from_complex(entries: Vec<Vec<C>>, zero_tol: f64) -> Result<Self> {
        let mask = entries.iter().map(|r| r.iter().map(|v| v.norm() < zero_tol).collect()).collect();
        Self::new(entries, mask)
    }

    /// λ_ij = Λ(s_i - s_j). An entry is masked when |λ_ij| < zero_tol and
    /// s_i - s_j lies within [`ZERO_MATCH`] of a zero of Λ known to the cache:
    /// 1, or -ρ and -ρ̄ for a cached ρ. Magnitude alone would also catch the
    /// e^{-π|t|/4} decay of ζ* high on the critical line.
    pub fn from_points(s: &[C], zeros: &ZetaZeroCache, zero_tol: f64) -> Result<Self> {
        let n = s.len();
        let mut rows = vec![vec![C::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    rows[i][j] = lambda_big(s[i] - s[j]).map_err(|_| Error::KernelPole {
                        i: i + 1,
                        j: j + 1,
                        at: s[i] - s[j],
                    })?;
                }
            }
        }
        let known = |u: C| {
            (u - 1.0).norm() < ZERO_MATCH
                || zeros.ordinates.iter().any(|&t| (u + C::new(0.5, t)).norm() < ZERO_MATCH || (u + C::new(0.5, -t)).norm() < ZERO_MATCH)
        };
        let mask = (0..n)
            .map(|i| (0..n).map(|j| i != j && rows[i][j].norm() < zero_tol && known(s[i] - s[j])).collect())
            .collect();
        Self::new(rows, mask)
    }
}

impl PerturbedMatrix<BigRational> {
    /// Exact entries; zeros are exactly the zero entries.
    pub fn from_rationals(entries: Vec<Vec<BigRational>>) -> Result<Self> {
        let mask = entries
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().enumerate().map(|(j, v)| i != j && v.is_zero()).collect())
            .collect();
        Self::new(entries, mask)
    }
}

/// The index ν (0-based) with coarser = fine.merge(ν), if any.
fn merge_index(fine: &OrderedSetPartition, coarser: &OrderedSetPartition) -> Option<usize> {
    if fine.n != coarser.n || fine.blocks.len() != coarser.blocks.len() + 1 {
        return None;
    }
    (0..coarser.blocks.len()).find(|&nu| fine.merge(nu) == *coarser)
}

fn block_product<T: Weight>(earlier: u8, later: u8, l: &PerturbedMatrix<T>) -> T {
    let mut w = T::one();
    for a in members(earlier) {
        for b in members(later) {
            w = w * l.get(a + 1, b + 1).clone();
        }
    }
    w
}

/// λ_{FF'} = Π_{a ∈ I', b ∈ I''} λ_ab for F' obtained from F by merging
/// adjacent blocks I', I''.
pub fn coface_weight<T: Weight>(f: &OrderedSetPartition, coface: &OrderedSetPartition, l: &PerturbedMatrix<T>) -> Result<T> {
    let nu = merge_index(f, coface).ok_or_else(|| Error::NotCoface(format!("{coface} over {f}")))?;
    Ok(block_product(f.blocks[nu], f.blocks[nu + 1], l))
}

/// λ_{FG} for any coarsening G of F: the product of λ_ab over a, b in a
/// common block of G with the block of a in F before that of b.
pub fn refinement_weight<T: Weight>(f: &OrderedSetPartition, g: &OrderedSetPartition, l: &PerturbedMatrix<T>) -> Result<T> {
    if !f.refines(g) {
        return Err(Error::NotCoface(format!("{g} is not a coarsening of {f}")));
    }
    let mut w = T::one();
    for (i, &bi) in f.blocks.iter().enumerate() {
        for &bj in &f.blocks[i + 1..] {
            if g.blocks.iter().any(|&gb| gb & bi != 0 && gb & bj != 0) {
                w = w * block_product(bi, bj, l);
            }
        }
    }
    Ok(w)
}

/// Cochains C^m on the m-dimensional faces with d_L: C^m → C^{m+1}.
#[derive(Debug, Clone)]
pub struct PerturbedComplex<T> {
    pub n: usize,
    pub faces: Vec<Vec<OrderedSetPartition>>,
    /// differentials[m] has rows indexed by faces[m+1], columns by faces[m].
    pub differentials: Vec<Matrix<T>>,
}

/// d_L(1_F) = Σ ε λ_{FF'} 1_{F'} with ε = (-1)^{ν-1} for merging blocks ν, ν+1.
pub fn build_complex<T: Weight>(l: &PerturbedMatrix<T>) -> Result<PerturbedComplex<T>> {
    let faces = faces(l.n)?;
    Ok(assemble(l, faces))
}

fn assemble<T: Weight>(l: &PerturbedMatrix<T>, faces: Vec<Vec<OrderedSetPartition>>) -> PerturbedComplex<T> {
    let mut differentials = Vec::with_capacity(faces.len().saturating_sub(1));
    for m in 0..faces.len().saturating_sub(1) {
        let (src, dst) = (&faces[m], &faces[m + 1]);
        let mut d = Matrix::zeros(dst.len(), src.len());
        for (col, f) in src.iter().enumerate() {
            for nu in 0..f.blocks.len() - 1 {
                let g = f.merge(nu);
                if let Ok(row) = dst.binary_search_by(|x| x.blocks().cmp(&g.blocks())) {
                    let w = block_product(f.blocks[nu], f.blocks[nu + 1], l);
                    d.data[row * src.len() + col] = if nu % 2 == 0 { w } else { -w };
                }
            }
        }
        differentials.push(d);
    }
    PerturbedComplex { n: l.n, faces, differentials }
}

impl<T: Weight> PerturbedComplex<T> {
    /// max |D_{m+1} D_m| over m.
    pub fn d_squared_defect(&self) -> f64 {
        self.differentials
            .windows(2)
            .map(|w| w[1].mul(&w[0]).max_magnitude())
            .fold(0.0, f64::max)
    }

    pub fn face_counts(&self) -> Vec<usize> {
        self.faces.iter().map(|f| f.len()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cohomology {
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub gaps: Vec<Option<f64>>,
    /// Σ(-1)^m dim H^m equals Σ(-1)^m dim C^m.
    pub euler_ok: bool,
}

/// dim H^m = dim C^m - rank D_m - rank D_{m-1}.
pub fn cohomology_dims<T: Weight>(c: &PerturbedComplex<T>, rank_tol: f64) -> Result<Cohomology> {
    let infos = c.differentials.iter().map(|d| T::rank(d, rank_tol)).collect::<Result<Vec<_>>>()?;
    let ranks: Vec<usize> = infos.iter().map(|r| r.rank).collect();
    let counts = c.face_counts();
    let dims: Vec<usize> = (0..counts.len())
        .map(|m| {
            let out = ranks.get(m).copied().unwrap_or(0);
            let inc = if m > 0 { ranks[m - 1] } else { 0 };
            counts[m] - out - inc
        })
        .collect();
    let alt = |v: &[usize]| v.iter().enumerate().map(|(m, &x)| if m % 2 == 0 { x as i64 } else { -(x as i64) }).sum::<i64>();
    Ok(Cohomology {
        euler_ok: alt(&dims) == alt(&counts),
        dims,
        ranks,
        gaps: infos.iter().map(|r| r.gap).collect(),
    })
}

/// All simple directed cycles of the digraph i → j on masked entries, each
/// listed from its smallest vertex (1-based).
pub fn detect_wheels<T: Weight>(l: &PerturbedMatrix<T>) -> Vec<Vec<usize>> {
    let edges: Vec<(usize, usize)> = l.zero_pairs();
    cycles(l.n, &edges)
}

fn cycles(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let adj = |v: usize| edges.iter().filter(move |e| e.0 == v).map(|e| e.1);
    let mut out = Vec::new();
    fn dfs(
        start: usize,
        v: usize,
        path: &mut Vec<usize>,
        adj: &dyn Fn(usize) -> Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        for w in adj(v) {
            if w == start {
                out.push(path.clone());
            } else if w > start && !path.contains(&w) {
                path.push(w);
                dfs(start, w, path, adj, out);
                path.pop();
            }
        }
    }
    let adj_vec = |v: usize| adj(v).collect::<Vec<_>>();
    for s in 1..=n {
        dfs(s, s, &mut vec![s], &adj_vec, &mut out);
    }
    out.sort();
    out
}

/// dpt(F) = #{(i,j) ∈ Z : i ∈ I_μ, j ∈ I_ν for some μ < ν}.
pub fn depth(f: &OrderedSetPartition, z: &[(usize, usize)]) -> usize {
    let pos = |i: usize| f.blocks.iter().position(|&b| b & (1 << (i - 1)) != 0).expect("partition covers 1..=n");
    z.iter().filter(|&&(i, j)| pos(i) < pos(j)).count()
}

#[derive(Debug, Clone, Serialize)]
pub struct DepthLevel {
    pub r: usize,
    pub faces: Vec<OrderedSetPartition>,
    /// Cohomology of the cellular cochain complex of P^(r), if nonempty.
    pub dims: Option<Vec<usize>>,
    pub contractible: Option<bool>,
}

/// The subcomplexes P^(r) = {F : dpt(F) ≥ r} for r = 0..=|Z|+1.
pub fn depth_filtration(z: &[(usize, usize)], n: usize) -> Result<Vec<DepthLevel>> {
    if n == 0 || n > MAX_N {
        return Err(Error::Domain(format!("n must be in 1..={MAX_N}, got {n}")));
    }
    if z.iter().any(|&(i, j)| i == 0 || j == 0 || i > n || j > n || i == j) {
        return Err(Error::Domain("zero set pairs must be distinct indices in 1..=n".into()));
    }
    if let Some(cycle) = cycles(n, z).into_iter().next() {
        return Err(Error::Renumber(cycle));
    }
    let all = faces(n)?;
    let ones = PerturbedMatrix::<BigRational>::ones(n)?;
    let mut levels = Vec::new();
    for r in 0..=z.len() + 1 {
        let kept: Vec<Vec<OrderedSetPartition>> =
            all.iter().map(|g| g.iter().filter(|f| depth(f, z) >= r).cloned().collect()).collect();
        let flat: Vec<OrderedSetPartition> = kept.iter().flatten().cloned().collect();
        let (dims, contractible) = if flat.is_empty() {
            (None, None)
        } else {
            let complex = assemble(&ones, kept);
            let h = cohomology_dims(&complex, 0.0)?;
            let point = h.dims.first() == Some(&1) && h.dims.iter().skip(1).all(|&d| d == 0);
            (Some(h.dims), Some(point))
        };
        levels.push(DepthLevel { r, faces: flat, dims, contractible });
    }
    Ok(levels)
}

/// A random matrix with no wheel: a random acyclic zero pattern (each pair
/// compatible with a random order masked with probability `zero_prob`) and
/// the other entries uniform in the annulus r_min ≤ |λ| ≤ r_max.
pub fn random_wheel_free<R: Rng>(n: usize, zero_prob: f64, annulus: (f64, f64), rng: &mut R) -> Result<PerturbedMatrix<C>> {
    let order = random_order(n, rng);
    let mut rows = vec![vec![C::new(0.0, 0.0); n]; n];
    let mut mask = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if order[i] < order[j] && rng.random::<f64>() < zero_prob {
                mask[i][j] = true;
            } else {
                let r = rng.random_range(annulus.0..=annulus.1);
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                rows[i][j] = C::from_polar(r, t);
            }
        }
    }
    PerturbedMatrix::new(rows, mask)
}

/// Exact analogue of [`random_wheel_free`] with nonzero entries p/q,
/// 1 ≤ |p| ≤ 9, 1 ≤ q ≤ 9.
pub fn random_wheel_free_exact<R: Rng>(n: usize, zero_prob: f64, rng: &mut R) -> Result<PerturbedMatrix<BigRational>> {
    let order = random_order(n, rng);
    let mut rows = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || (order[i] < order[j] && rng.random::<f64>() < zero_prob) {
                continue;
            }
            let mut p: i64 = rng.random_range(1..=9);
            if rng.random::<bool>() {
                p = -p;
            }
            let q: i64 = rng.random_range(1..=9);
            rows[i][j] = BigRational::new(p.into(), q.into());
        }
    }
    PerturbedMatrix::from_rationals(rows)
}

fn random_order<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    order
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanEntry {
    pub c: [f64; 2],
    /// (1-based coordinate, offset) for perturbed configurations.
    pub perturbation: Option<(usize, f64)>,
    pub points: Vec<[f64; 2]>,
    pub zero_pairs: Vec<(usize, usize)>,
    pub wheels: Vec<Vec<usize>>,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub singular_value_gaps: Vec<Option<f64>>,
    pub euler_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub zero_index: usize,
    pub rho: [f64; 2],
    pub entries: Vec<ScanEntry>,
}

/// For each c: T = {c, c+ρ, c+1} on the wheel locus, then T with each
/// coordinate shifted by each offset.
pub fn cubic_relation_scan(
    cache: &ZetaZeroCache,
    rho_index: usize,
    c_samples: &[C],
    offsets: &[f64],
    zero_tol: f64,
    rank_tol: f64,
) -> Result<ScanReport> {
    let rho = cache.rho(rho_index).ok_or_else(|| {
        Error::Domain(format!("zero index {rho_index} outside the cache of {} ordinates", cache.ordinates.len()))
    })?;
    let mut entries = Vec::new();
    for &c in c_samples {
        let base = [c, c + rho, c + 1.0];
        let mut configs = vec![(None, base)];
        for &off in offsets {
            for k in 0..3 {
                let mut t = base;
                t[k] += off;
                configs.push((Some((k + 1, off)), t));
            }
        }
        for (perturbation, t) in configs {
            let l = PerturbedMatrix::from_points(&t, cache, zero_tol)?;
            let h = cohomology_dims(&build_complex(&l)?, rank_tol)?;
            entries.push(ScanEntry {
                c: [c.re, c.im],
                perturbation,
                points: t.iter().map(|s| [s.re, s.im]).collect(),
                zero_pairs: l.zero_pairs(),
                wheels: detect_wheels(&l),
                dims: h.dims,
                ranks: h.ranks,
                singular_value_gaps: h.gaps,
                euler_ok: h.euler_ok,
            });
        }
    }
    Ok(ScanReport { zero_index: rho_index, rho: [rho.re, rho.im], entries })
}
