//! Complex banded LU with partial pivoting.

use num_complex::Complex64 as C64;

use super::fd::DiffOp;
use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage reserves `kl` extra super-diagonals for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![C64::new(0.0, 0.0); n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            C64::new(0.0, 0.0)
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn clear_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            let k = self.idx(i, j);
            self.data[k] = C64::new(0.0, 0.0);
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Replaces row `i` with `w` placed from column `start`.
    pub fn set_row(&mut self, i: usize, start: usize, w: &[C64]) {
        self.clear_row(i);
        for (j, &v) in w.iter().enumerate() {
            self.set(i, start + j, v);
        }
    }

    /// `Σ_t diag(c_t) D_t` with `None` standing for the identity.
    pub fn from_stencils(n: usize, terms: &[(Option<&DiffOp>, &[C64])]) -> Self {
        let hb = terms.iter().filter_map(|(d, _)| d.map(|d| d.half_bandwidth())).max().unwrap_or(0);
        let mut m = Self::new(n, hb, hb);
        for (d, c) in terms {
            assert_eq!(c.len(), n);
            match d {
                None => (0..n).for_each(|i| m.add(i, i, c[i])),
                Some(op) => {
                    for (i, &ci) in c.iter().enumerate() {
                        let (s, w) = op.row(i);
                        for (j, &wj) in w.iter().enumerate() {
                            m.add(i, s + j, ci * wj);
                        }
                    }
                }
            }
        }
        m
    }

    /// Dense copy, mainly for tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let span = self.kl + self.ku;
        let mut piv = vec![0usize; n];
        let mut max_abs: f64 = 0.0;
        for v in &self.data {
            max_abs = max_abs.max(v.norm());
        }
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for r in k + 1..=last {
                let v = self.get(r, k).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            piv[k] = p;
            min_pivot = min_pivot.min(best);
            if best == 0.0 || best <= max_abs * 1e-300 {
                return Err(Error::Singular { condition_estimate: f64::INFINITY });
            }
            let jmax = (k + span).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for r in k + 1..=last {
                let ir = self.idx(r, k);
                let l = self.data[ir] / pivot;
                self.data[ir] = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..=jmax {
                    let kj = self.data[self.idx(k, j)];
                    let rj = self.idx(r, j);
                    self.data[rj] -= l * kj;
                }
            }
        }
        let condition_estimate = if min_pivot > 0.0 { max_abs / min_pivot } else { f64::INFINITY };
        Ok(BandLu { m: self, piv, condition_estimate })
    }
}

/// Factored band matrix.
#[derive(Clone, Debug)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
    /// Ratio of largest entry to smallest pivot; a cheap conditioning indicator.
    pub condition_estimate: f64,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.m.n;
        let kl = self.m.kl;
        let span = self.m.kl + self.m.ku;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.m.data[self.m.idx(r, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + span).min(n - 1) {
                acc -= self.m.data[self.m.idx(i, j)] * b[j];
            }
            b[i] = acc / self.m.data[self.m.idx(i, i)];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_requiring_pivoting() {
        let n = 6;
        let mut a = BandMatrix::new(n, 1, 1);
        for i in 0..n {
            a.set(i, i, C64::new(if i % 2 == 0 { 0.0 } else { 1.0 }, 0.1 * i as f64));
            if i + 1 < n {
                a.set(i, i + 1, C64::new(2.0, 0.0));
                a.set(i + 1, i, C64::new(-1.5, 0.5));
            }
        }
        let x: Vec<C64> = (0..n).map(|i| C64::new(i as f64 + 1.0, -(i as f64))).collect();
        let b = a.mul_vec(&x);
        let lu = a.factor().unwrap();
        let y = lu.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = BandMatrix::new(3, 1, 1);
        assert!(matches!(a.factor(), Err(Error::Singular { .. })));
    }
}
