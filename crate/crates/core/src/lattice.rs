//! Exact integer matrix algebra for sublattices and quotient maps: Smith
//! invariant factors and column-style Hermite reduction.

use crate::error::{Error, Result};

/// Row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Domain(format!("{}x{} matrix needs {} entries", rows, cols, rows * cols)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Domain("ragged integer matrix".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<i64>]) -> Result<Self> {
        Ok(Self::from_rows(cols)?.transpose())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self { rows: n, cols: n, data: vec![0; n * n] };
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self { rows: self.cols, cols: self.rows, data: vec![0; self.data.len()] };
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Replaces columns (p, q) by (a·p + b·q, c·p + d·q).
    fn combine_columns(&mut self, p: usize, q: usize, a: i64, b: i64, c: i64, d: i64) -> Result<()> {
        for i in 0..self.rows {
            let (x, y) = (self.get(i, p) as i128, self.get(i, q) as i128);
            let np = a as i128 * x + b as i128 * y;
            let nq = c as i128 * x + d as i128 * y;
            self.set(i, p, narrow(np)?);
            self.set(i, q, narrow(nq)?);
        }
        Ok(())
    }
}

fn narrow(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Domain("integer overflow in lattice reduction".into()))
}

/// (g, x, y) with a·x + b·y = g = gcd(a, b) ≥ 0.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    ext_gcd(a, b).0
}

/// Column reduction M·V = L with V unimodular and L lower-trapezoidal: for
/// each row i < min(rows, cols), L[i][j] = 0 for j > i and L[i][i] ≥ 0.
pub fn hermite_columns(m: &IntMatrix) -> Result<(IntMatrix, IntMatrix)> {
    let mut l = m.clone();
    let mut v = IntMatrix::identity(m.cols);
    for i in 0..m.rows.min(m.cols) {
        for j in i + 1..m.cols {
            let (a, b) = (l.get(i, i), l.get(i, j));
            if b == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(a, b);
            // [x, -b/g; y, a/g] has determinant 1
            let (p, q) = (a / g, b / g);
            l.combine_columns(i, j, x, y, -q, p)?;
            v.combine_columns(i, j, x, y, -q, p)?;
        }
        if l.get(i, i) < 0 {
            l.combine_columns(i, i, -1, 0, -1, 0)?;
            v.combine_columns(i, i, -1, 0, -1, 0)?;
        }
    }
    Ok((l, v))
}

/// Smith invariant factors d_1 | d_2 | ... (nonzero ones only).
pub fn smith_invariants(m: &IntMatrix) -> Vec<i64> {
    let mut a: Vec<Vec<i128>> = (0..m.rows).map(|i| (0..m.cols).map(|j| m.get(i, j) as i128).collect()).collect();
    let (rows, cols) = (m.rows, m.cols);
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero magnitude in the trailing block
        let mut piv = None;
        for i in t..rows {
            for j in t..cols {
                if a[i][j] != 0 && piv.is_none_or(|(pi, pj): (usize, usize)| a[i][j].abs() < a[pi][pj].abs()) {
                    piv = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = piv else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let p = a[t][t];
            let mut done = true;
            for i in t + 1..rows {
                let q = a[i][t] / p;
                if q != 0 {
                    for j in t..cols {
                        a[i][j] -= q * a[t][j];
                    }
                }
                if a[i][t] != 0 {
                    done = false;
                }
            }
            for j in t + 1..cols {
                let q = a[t][j] / p;
                if q != 0 {
                    for row in a.iter_mut().skip(t) {
                        row[j] -= q * row[t];
                    }
                }
                if a[t][j] != 0 {
                    done = false;
                }
            }
            if done {
                // divisibility of the trailing block
                let bad = (t + 1..rows).flat_map(|i| (t + 1..cols).map(move |j| (i, j))).find(|&(i, j)| a[i][j] % p != 0);
                match bad {
                    None => break,
                    Some((i, _)) => {
                        for j in t..cols {
                            let v = a[i][j];
                            a[t][j] += v;
                        }
                    }
                }
            }
            // move the smallest entry of row/column t into the pivot
            let mut best = (t, t);
            for i in t..rows {
                if a[i][t] != 0 && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if a[t][j] != 0 && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for row in a.iter_mut() {
                row.swap(t, best.1);
            }
        }
        out.push(a[t][t].abs() as i64);
        t += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_examples() {
        let m = IntMatrix::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]).unwrap();
        assert_eq!(smith_invariants(&m), vec![2, 6, 12]);
        let m = IntMatrix::from_rows(&[vec![1, 1], vec![1, -1]]).unwrap();
        assert_eq!(smith_invariants(&m), vec![1, 2]);
        let m = IntMatrix::from_rows(&[vec![2], vec![3]]).unwrap();
        assert_eq!(smith_invariants(&m), vec![1]);
        let m = IntMatrix::from_rows(&[vec![0, 0]]).unwrap();
        assert!(smith_invariants(&m).is_empty());
    }

    #[test]
    fn hermite_is_unimodular_factorization() {
        let m = IntMatrix::from_rows(&[vec![3, 5, 7], vec![2, -4, 9]]).unwrap();
        let (l, v) = hermite_columns(&m).unwrap();
        assert_eq!(l.get(0, 1), 0);
        assert_eq!(l.get(0, 2), 0);
        assert_eq!(l.get(1, 2), 0);
        // M·V = L
        for i in 0..2 {
            for j in 0..3 {
                let s: i64 = (0..3).map(|k| m.get(i, k) * v.get(k, j)).sum();
                assert_eq!(s, l.get(i, j));
            }
        }
        assert_eq!(l.get(0, 0), 1);
    }
}
