//! The Ch homomorphism in rank two: the Mellin transform of the twisted
//! constant term of a Hall product f1 ∗ f2 of functions on degree-one
//! bundles, computed from lattice sums, against the shuffle product of the
//! one-variable transforms.
//!
//! The slice u(x)·diag(a1, a2) is parameterized by ℓ = log(a1 a2) and
//! ρ = log(a1/a2), so that d*a1 d*a2 = ½ dℓ dρ and the twisted Mellin kernel
//! is δ^{1/2} a1^{s1} a2^{s2} = exp(ℓ(s1+s2)/2 + ρ(s1-s2-1)/2). For
//! ρ ≥ `rho_literal` the constant term is the literal Gauss–Legendre average
//! of the lattice Hall sum; below it the x-integral is unfolded,
//! CT = W(a1⁻²) + a1 Σ_{n≥1} φ(n)/n · g(n/a2) with g(c) = ∫_{c²}^∞ W(q) dq/√(q-c²).
//! Past `rho_min` the profile is a single exponential e^{αρ},
//! α = (s1-s2-1)/2, since the first pole of Φ left of Re > 1 is at 1 and
//! the next singularities sit at Re = -1/2.

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mellin::{mellin_closed_form, LogGaussian};
use crate::qforms::{constant_term_rank2, hall_product_11};
use crate::quad::{gauss_legendre, gauss_legendre_on};
use crate::shuffle::{phi_kernel, shuffle_product};
use crate::specfun::phi;

/// Log-Gaussian tails are cut where the exponent falls below -50.
const TAIL_SIGMAS: f64 = 10.0;

const G_PANEL_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChConfig {
    /// Start of the analytic exponential tail in ρ.
    pub rho_min: f64,
    /// Literal lattice constant terms are used for ρ ≥ rho_literal.
    pub rho_literal: f64,
    /// Gauss–Legendre nodes in x for the literal constant term.
    pub x_nodes: usize,
    /// Gauss–Legendre nodes per panel in ℓ and ρ.
    pub panel_nodes: usize,
    /// Panel width in units of the combined log-width.
    pub panel_width: f64,
    /// Half-width of the ℓ and upper ρ windows in units of the combined log-width.
    pub window: f64,
    /// Points on the log-c grid of the unfolded kernel g.
    pub g_grid: usize,
}

impl Default for ChConfig {
    fn default() -> Self {
        Self {
            rho_min: -10.0,
            rho_literal: -1.0,
            x_nodes: 32,
            panel_nodes: 8,
            panel_width: 2.0,
            window: 10.0,
            g_grid: 1024,
        }
    }
}

/// The summand of the rank-(1,1) Hall product on a bundle of total degree D
/// as a function of q(v) = deg(E')⁻².
#[derive(Debug, Clone)]
struct HallPair {
    f1: LogGaussian,
    f2: LogGaussian,
}

impl HallPair {
    fn w(&self, d: f64, q: f64) -> f64 {
        let d1 = q.powf(-0.5);
        let d2 = d / d1;
        self.f1.eval(&[d1]) * self.f2.eval(&[d2]) * d1 / d.sqrt()
    }

    fn sigma_tot(&self) -> f64 {
        self.f1.sigma[0].hypot(self.f2.sigma[0])
    }

    /// Log-width of f1(d1) f2(D/d1) as a function of log d1.
    fn d1_width(&self) -> f64 {
        let (s1, s2) = (self.f1.sigma[0], self.f2.sigma[0]);
        s1 * s2 / s1.hypot(s2)
    }

    /// Window in log deg(E') outside which f1(d1) f2(D/d1) is negligible.
    fn log_d1_window(&self, ell: f64) -> (f64, f64) {
        let (m1, s1) = (self.f1.mu[0], self.f1.sigma[0]);
        let (m2, s2) = (self.f2.mu[0], self.f2.sigma[0]);
        let t2 = s1 * s1 + s2 * s2;
        let center = (m1 * s2 * s2 + (ell - m2) * s1 * s1) / t2;
        let width = self.d1_width();
        (center - TAIL_SIGMAS * width, center + TAIL_SIGMAS * width)
    }
}

/// g(c) = ∫_{c²}^∞ W(q) dq/√(q-c²) for one total degree, on a log-c grid.
struct GTable {
    ln_c0: f64,
    step: f64,
    values: Vec<f64>,
    g0: f64,
    c_max: f64,
}

impl GTable {
    fn new(pair: &HallPair, ell: f64, points: usize) -> Result<Self> {
        let d = ell.exp();
        let (lo, hi) = pair.log_d1_window(ell);
        let (q_lo, q_hi) = ((-2.0 * hi).exp(), (-2.0 * lo).exp());
        let (gx, gw) = gauss_legendre(G_PANEL_NODES);
        let panel = 2.0 * pair.d1_width();
        // composite Gauss–Legendre of f over [a, b]
        let integrate = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            let panels = ((b - a) / panel).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            let mut acc = 0.0;
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * h;
                for (x, w) in gx.iter().zip(&gw) {
                    acc += w * f(mid + 0.5 * h * x);
                }
            }
            0.5 * h * acc
        };
        // g(c) = 2∫ W(c² + t²) dt with t = c·sinh v, or t = e^v at c = 0
        let g_at = |c: f64| -> f64 {
            let c2 = c * c;
            if c2 >= q_hi {
                return 0.0;
            }
            let t_lo = (q_lo - c2).max(0.0).sqrt();
            let t_hi = (q_hi - c2).sqrt();
            if c == 0.0 {
                integrate(&|v: f64| 2.0 * pair.w(d, (2.0 * v).exp()) * v.exp(), t_lo.ln(), t_hi.ln())
            } else {
                integrate(
                    &|v: f64| {
                        let ch = v.cosh();
                        2.0 * pair.w(d, c2 * ch * ch) * c * ch
                    },
                    (t_lo / c).asinh(),
                    (t_hi / c).asinh(),
                )
            }
        };
        let ln_c0 = 0.5 * q_lo.ln() + 0.01f64.ln();
        let ln_c1 = 0.5 * q_hi.ln();
        let step = (ln_c1 - ln_c0) / (points - 1) as f64;
        let values = (0..points).map(|k| g_at((ln_c0 + k as f64 * step).exp())).collect();
        Ok(Self { ln_c0, step, values, g0: g_at(0.0), c_max: ln_c1.exp() })
    }

    fn eval(&self, c: f64) -> f64 {
        if c >= self.c_max {
            return 0.0;
        }
        let u = (c.ln() - self.ln_c0) / self.step;
        if u < 0.0 {
            let r = (c / self.ln_c0.exp()).powi(2);
            return self.g0 + (self.values[0] - self.g0) * r;
        }
        // six-point Lagrange interpolation
        let n = self.values.len();
        let base = (u.floor() as usize).saturating_sub(2).min(n - 6);
        let mut acc = 0.0;
        for i in 0..6 {
            let mut l = 1.0;
            for j in 0..6 {
                if i != j {
                    l *= (u - (base + j) as f64) / (i as f64 - j as f64);
                }
            }
            acc += l * self.values[base + i];
        }
        acc
    }
}

fn totients(n: usize) -> Vec<u32> {
    let mut t: Vec<u32> = (0..=n as u32).collect();
    for p in 2..=n {
        if t[p] == p as u32 {
            for k in (p..=n).step_by(p) {
                t[k] -= t[k] / p as u32;
            }
        }
    }
    t
}

/// Constant term of (f1 ∗ f2) at (a1, a2) by Gauss–Legendre over x of the
/// lattice Hall sums.
pub fn literal_constant_term(f1: &LogGaussian, f2: &LogGaussian, a1: f64, a2: f64, x_nodes: usize) -> Result<f64> {
    let pair = HallPair { f1: f1.clone(), f2: f2.clone() };
    let (lo, _) = pair.log_d1_window((a1 * a2).ln());
    let floor = lo.exp();
    let v = constant_term_rank2(
        |e| hall_product_11(|d| C::from(f1.eval(&[d])), |d| C::from(f2.eval(&[d])), e, floor),
        a1,
        a2,
        x_nodes,
    )?;
    Ok(v.re)
}

/// Constant term of (f1 ∗ f2) at (a1, a2) by the unfolded sum over n.
pub fn unfolded_constant_term(f1: &LogGaussian, f2: &LogGaussian, a1: f64, a2: f64, g_grid: usize) -> Result<f64> {
    let pair = HallPair { f1: f1.clone(), f2: f2.clone() };
    let table = GTable::new(&pair, (a1 * a2).ln(), g_grid)?;
    let nmax = (a2 * table.c_max).floor() as usize;
    Ok(unfolded(&pair, &table, &totients(nmax.max(1)), a1, a2))
}

fn unfolded(pair: &HallPair, table: &GTable, phi_n: &[u32], a1: f64, a2: f64) -> f64 {
    let nmax = (a2 * table.c_max).floor() as usize;
    let mut acc = 0.0;
    for n in 1..=nmax {
        acc += phi_n[n] as f64 / n as f64 * table.eval(n as f64 / a2);
    }
    pair.w(a1 * a2, 1.0 / (a1 * a1)) + a1 * acc
}

/// Pipeline B: the two terms of (Mf1 ⊛ Mf2)(s1, s2).
pub fn shuffle_side(f1: &LogGaussian, f2: &LogGaussian, s1: C, s2: C) -> Result<(C, C)> {
    let m1 = mellin_closed_form(f1);
    let m2 = mellin_closed_form(f2);
    let total = shuffle_product(&m1, &m2, phi_kernel()).eval(&[s1, s2])?;
    let identity = m1.eval(&[s1])? * m2.eval(&[s2])?;
    Ok((identity, total - identity))
}

fn composite_nodes(a: f64, b: f64, width: f64, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * per_panel);
    let mut ws = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let (x, w) = gauss_legendre_on(per_panel, a + p as f64 * h, a + (p + 1) as f64 * h);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// The twisted constant term of f1 ∗ f2 tabulated on the (ℓ, ρ) slice.
pub struct ConstantTermGrid {
    ell: Vec<f64>,
    ell_w: Vec<f64>,
    rho: Vec<f64>,
    rho_w: Vec<f64>,
    rho_min: f64,
    /// values[j][i] at (ell[i], rho[j])
    values: Vec<Vec<f64>>,
    /// the column at rho_min
    edge: Vec<f64>,
    pub literal_nodes: usize,
    pub unfolded_nodes: usize,
}

impl ConstantTermGrid {
    /// Builds the grid with windows covering every s in `samples`.
    pub fn new(f1: &LogGaussian, f2: &LogGaussian, samples: &[(C, C)], cfg: &ChConfig) -> Result<Self> {
        if f1.dim() != 1 || f2.dim() != 1 {
            return Err(Error::Domain("Ch check needs one-variable test functions".into()));
        }
        if cfg.rho_literal <= cfg.rho_min {
            return Err(Error::Domain("rho_literal must exceed rho_min".into()));
        }
        let pair = HallPair { f1: f1.clone(), f2: f2.clone() };
        let st = pair.sigma_tot();
        let (m1, v1) = (f1.mu[0], f1.sigma[0].powi(2));
        let (m2, v2) = (f2.mu[0], f2.sigma[0].powi(2));
        let mut ell_shift = vec![0.0];
        let mut rho_shift = vec![0.0];
        for &(s1, s2) in samples {
            for (a, b) in [(s1.re, s2.re), (s2.re, s1.re)] {
                ell_shift.push(v1 * a + v2 * b);
                rho_shift.push((v1 * a - v2 * b).abs());
            }
        }
        let fold = |v: &[f64], pick: fn(f64, f64) -> f64| v.iter().copied().fold(v[0], pick);
        let ell_lo = m1 + m2 + fold(&ell_shift, f64::min) - cfg.window * st;
        let ell_hi = m1 + m2 + fold(&ell_shift, f64::max) + cfg.window * st;
        let rho_hi = (m1 - m2 + fold(&rho_shift, f64::max) + cfg.window * st).max(cfg.rho_literal + st);
        let width = cfg.panel_width * st;
        let (ell, ell_w) = composite_nodes(ell_lo, ell_hi, width, cfg.panel_nodes);
        let (mut rho, mut rho_w) = composite_nodes(cfg.rho_min, cfg.rho_literal, width, cfg.panel_nodes);
        let (r2, w2) = composite_nodes(cfg.rho_literal, rho_hi, width, cfg.panel_nodes);
        rho.extend(r2);
        rho_w.extend(w2);

        let needs_tables = rho.iter().filter(|&&r| r < cfg.rho_literal).count() > 0;
        let tables: Vec<Option<GTable>> = if needs_tables {
            ell.par_iter().map(|&l| GTable::new(&pair, l, cfg.g_grid).map(Some)).collect::<Result<_>>()?
        } else {
            ell.iter().map(|_| None).collect()
        };
        let nmax = ell
            .iter()
            .zip(&tables)
            .filter_map(|(&l, t)| t.as_ref().map(|t| ((0.5 * (l - cfg.rho_min)).exp() * t.c_max) as usize))
            .max()
            .unwrap_or(1);
        let phi_n = totients(nmax.max(1));

        let column = |r: f64| -> Result<Vec<f64>> {
            ell.iter()
                .zip(&tables)
                .map(|(&l, t)| {
                    let a1 = (0.5 * (l + r)).exp();
                    let a2 = (0.5 * (l - r)).exp();
                    if r >= cfg.rho_literal {
                        literal_constant_term(f1, f2, a1, a2, cfg.x_nodes)
                    } else {
                        Ok(unfolded(&pair, t.as_ref().expect("tables built below rho_literal"), &phi_n, a1, a2))
                    }
                })
                .collect()
        };
        let values = rho.par_iter().map(|&r| column(r)).collect::<Result<Vec<_>>>()?;
        let edge = column(cfg.rho_min)?;
        let literal = rho.iter().filter(|&&r| r >= cfg.rho_literal).count() * ell.len();
        Ok(Self {
            unfolded_nodes: rho.len() * ell.len() - literal + ell.len(),
            literal_nodes: literal,
            ell,
            ell_w,
            rho,
            rho_w,
            rho_min: cfg.rho_min,
            values,
            edge,
        })
    }

    fn profile(&self, column: &[f64], rho: f64, s1: C, s2: C) -> C {
        let sum = s1 + s2;
        let twist = ((s1 - s2 - 1.0) * (0.5 * rho)).exp();
        let mut acc = C::new(0.0, 0.0);
        for ((&l, &w), &v) in self.ell.iter().zip(&self.ell_w).zip(column) {
            acc += (sum * (0.5 * l)).exp() * (0.5 * w * v);
        }
        acc * twist
    }

    /// Pipeline A: ∫ δ^{1/2}(a) CT(a) a1^{s1} a2^{s2} d*a.
    pub fn mellin(&self, s1: C, s2: C) -> Result<C> {
        let alpha = (s1 - s2 - 1.0) * 0.5;
        if alpha.re <= 0.0 {
            return Err(Error::Convergence(format!("Ch transform needs Re(s1 - s2) > 1, got {}", (s1 - s2).re)));
        }
        let mut acc = C::new(0.0, 0.0);
        for ((&r, &w), col) in self.rho.iter().zip(&self.rho_w).zip(&self.values) {
            acc += self.profile(col, r, s1, s2) * w;
        }
        Ok(acc + self.profile(&self.edge, self.rho_min, s1, s2) / alpha)
    }
}

fn pair(c: C) -> [f64; 2] {
    [c.re, c.im]
}

#[derive(Debug, Clone, Serialize)]
pub struct ChSample {
    pub s1: [f64; 2],
    pub s2: [f64; 2],
    pub pipeline_a: [f64; 2],
    pub pipeline_b: [f64; 2],
    pub identity_term: [f64; 2],
    pub phi_term: [f64; 2],
    pub rel_dev: f64,
    /// |A(s1,s2) - Φ(s1-s2)·B(s2,s1)| / |A| when f1 = f2.
    pub symmetry_defect: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChReport {
    pub samples: Vec<ChSample>,
    pub max_rel_dev: f64,
    pub max_symmetry_defect: Option<f64>,
    pub literal_nodes: usize,
    pub unfolded_nodes: usize,
}

/// Compares the two pipelines at every (s1, s2) with Re(s1 - s2) > 1.
pub fn ch_homomorphism_check(
    f1: &LogGaussian,
    f2: &LogGaussian,
    samples: &[(C, C)],
    cfg: &ChConfig,
) -> Result<ChReport> {
    if let Some(&(s1, s2)) = samples.iter().find(|(s1, s2)| (s1 - s2).re <= 1.0) {
        return Err(Error::Convergence(format!("Ch transform needs Re(s1 - s2) > 1, got {}", (s1 - s2).re)));
    }
    let grid = ConstantTermGrid::new(f1, f2, samples, cfg)?;
    let same = f1 == f2;
    let mut out = Vec::with_capacity(samples.len());
    for &(s1, s2) in samples {
        let a = grid.mellin(s1, s2)?;
        let (id, tw) = shuffle_side(f1, f2, s1, s2)?;
        let b = id + tw;
        let symmetry_defect = if same {
            let (id2, tw2) = shuffle_side(f1, f2, s2, s1)?;
            Some((a - phi(s1 - s2)? * (id2 + tw2)).norm() / a.norm())
        } else {
            None
        };
        out.push(ChSample {
            s1: pair(s1),
            s2: pair(s2),
            pipeline_a: pair(a),
            pipeline_b: pair(b),
            identity_term: pair(id),
            phi_term: pair(tw),
            rel_dev: (a - b).norm() / b.norm(),
            symmetry_defect,
        });
    }
    let max_rel_dev = out.iter().map(|s| s.rel_dev).fold(0.0, f64::max);
    let max_symmetry_defect = out.iter().filter_map(|s| s.symmetry_defect).reduce(f64::max);
    Ok(ChReport {
        samples: out,
        max_rel_dev,
        max_symmetry_defect,
        literal_nodes: grid.literal_nodes,
        unfolded_nodes: grid.unfolded_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lg(mu: f64, sigma: f64) -> LogGaussian {
        LogGaussian::new(vec![mu], vec![sigma], 1.0).unwrap()
    }

    #[test]
    fn totient_sieve() {
        assert_eq!(&totients(12)[1..], &[1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4]);
    }

    #[test]
    fn literal_and_unfolded_agree() {
        let (f1, f2) = (lg(0.3, 0.35), lg(-0.2, 0.4));
        for &(l, r) in &[(0.1, 0.0), (0.5, -1.0), (-0.4, -2.0), (1.0, 1.5)] {
            let a1 = (0.5 * (l + r) as f64).exp();
            let a2 = (0.5 * (l - r) as f64).exp();
            let lit = literal_constant_term(&f1, &f2, a1, a2, 256).unwrap();
            let unf = unfolded_constant_term(&f1, &f2, a1, a2, 4096).unwrap();
            assert!((lit - unf).abs() < 1e-10 * unf.abs().max(1e-3), "({l},{r}): {lit} vs {unf}");
        }
    }

    fn quick() -> ChConfig {
        ChConfig { panel_nodes: 6, x_nodes: 24, g_grid: 512, window: 9.0, ..ChConfig::default() }
    }

    #[test]
    fn pipelines_agree() {
        let (f1, f2) = (lg(0.3, 0.35), lg(-0.2, 0.4));
        let rep = ch_homomorphism_check(&f1, &f2, &[(C::new(2.2, 0.0), C::new(0.1, 0.0))], &quick()).unwrap();
        assert!(rep.max_rel_dev < 1e-6, "{}", rep.max_rel_dev);
        assert!(rep.max_symmetry_defect.is_none());
    }

    #[test]
    fn equal_functions_are_phi_symmetric() {
        let f = lg(0.1, 0.3);
        let rep = ch_homomorphism_check(&f, &f, &[(C::new(2.4, 0.3), C::new(0.2, 0.3))], &quick()).unwrap();
        assert!(rep.max_symmetry_defect.unwrap() < 1e-6);
    }

    #[test]
    fn wide_first_factor_favours_identity_shuffle() {
        let (f1, f2) = (lg(0.0, 2.0), lg(0.0, 0.3));
        let (id, tw) = shuffle_side(&f1, &f2, C::new(2.2, 0.0), C::new(0.1, 0.0)).unwrap();
        assert!(tw.norm() < 1e-2 * id.norm());
    }

    #[test]
    fn outside_the_cone_is_rejected() {
        let f = lg(0.0, 0.3);
        let err = ch_homomorphism_check(&f, &f, &[(C::new(1.0, 0.0), C::new(0.5, 0.0))], &quick()).unwrap_err();
        assert!(matches!(err, Error::Convergence(_)));
    }
}
