//! θ-Fourier × radial-grid fields.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::grid::{CoordKind, RadialGrid, ThetaGrid};
use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Field stored as complex coefficients `c_k(x)`, `k = 0..=K`, with
/// `f(θ, x) = c_0 + Σ Re(c_k e^{ikθ})`.
///
/// For `k ≥ 1` the cosine coefficient is `Re c_k` and the sine coefficient
/// is `-Im c_k`; `c_0` is real.
#[derive(Clone, Debug)]
pub struct FourierRadialField {
    k_max: usize,
    grid: Arc<RadialGrid>,
    data: Vec<C64>,
}

impl PartialEq for FourierRadialField {
    fn eq(&self, other: &Self) -> bool {
        self.k_max == other.k_max && self.same_grid(other) && self.data == other.data
    }
}

impl FourierRadialField {
    pub fn zeros(grid: &Arc<RadialGrid>, k_max: usize) -> Self {
        Self { k_max, grid: grid.clone(), data: vec![ZERO; grid.len() * (k_max + 1)] }
    }

    /// Builds a field from a closure returning `c_k(x_i)`.
    pub fn from_fn(grid: &Arc<RadialGrid>, k_max: usize, f: impl Fn(usize, f64) -> C64) -> Self {
        let mut out = Self::zeros(grid, k_max);
        for (i, &x) in grid.nodes().iter().enumerate() {
            for k in 0..=k_max {
                let mut v = f(k, x);
                if k == 0 {
                    v.im = 0.0;
                }
                out.data[i * (k_max + 1) + k] = v;
            }
        }
        out
    }

    /// Single radial profile in mode `k` with given cos/sin coefficient profiles.
    pub fn from_cos_sin(grid: &Arc<RadialGrid>, k_max: usize, k: usize, a: &[f64], b: &[f64]) -> Self {
        let mut out = Self::zeros(grid, k_max);
        for i in 0..grid.len() {
            let v = if k == 0 { C64::new(a[i], 0.0) } else { C64::new(a[i], -b[i]) };
            out.data[i * (k_max + 1) + k] = v;
        }
        out
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.k_max != other.k_max || !self.same_grid(other) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn c(&self, i: usize, k: usize) -> C64 {
        self.data[i * (self.k_max + 1) + k]
    }

    #[inline]
    pub fn set_c(&mut self, i: usize, k: usize, v: C64) {
        let v = if k == 0 { C64::new(v.re, 0.0) } else { v };
        self.data[i * (self.k_max + 1) + k] = v;
    }

    #[inline]
    pub fn add_c(&mut self, i: usize, k: usize, v: C64) {
        let v = if k == 0 { C64::new(v.re, 0.0) } else { v };
        self.data[i * (self.k_max + 1) + k] += v;
    }

    /// Coefficients at radial node `i`.
    pub fn row(&self, i: usize) -> &[C64] {
        let w = self.k_max + 1;
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        let w = self.k_max + 1;
        &mut self.data[i * w..(i + 1) * w]
    }

    pub fn mode(&self, k: usize) -> Vec<C64> {
        (0..self.n()).map(|i| self.c(i, k)).collect()
    }

    pub fn set_mode(&mut self, k: usize, p: &[C64]) {
        for (i, &v) in p.iter().enumerate() {
            self.set_c(i, k, v);
        }
    }

    /// `(a_k, b_k)` at node `i`.
    pub fn cos_sin(&self, i: usize, k: usize) -> (f64, f64) {
        let c = self.c(i, k);
        if k == 0 {
            (c.re, 0.0)
        } else {
            (c.re, -c.im)
        }
    }

    pub fn eval(&self, i: usize, theta: f64) -> f64 {
        let mut s = self.c(i, 0).re;
        for k in 1..=self.k_max {
            s += (self.c(i, k) * C64::from_polar(1.0, k as f64 * theta)).re;
        }
        s
    }

    /// Nodal values, row-major `[i * M + j]`.
    pub fn to_nodal(&self, tg: &ThetaGrid) -> Vec<f64> {
        assert_eq!(tg.k_max(), self.k_max);
        let m = tg.m();
        let mut out = vec![0.0; self.n() * m];
        out.par_chunks_mut(m).enumerate().for_each(|(i, o)| tg.to_nodes(self.row(i), o));
        out
    }

    pub fn from_nodal(grid: &Arc<RadialGrid>, tg: &ThetaGrid, f: &[f64]) -> Self {
        let m = tg.m();
        let mut out = Self::zeros(grid, tg.k_max());
        let w = tg.k_max() + 1;
        out.data.par_chunks_mut(w).enumerate().for_each(|(i, c)| tg.from_nodes(&f[i * m..(i + 1) * m], c));
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, usize, C64) -> C64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n() {
            for k in 0..=self.k_max {
                out.set_c(i, k, f(i, k, self.c(i, k)));
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert!(self.same_grid(x) && self.k_max == x.k_max);
        for (y, v) in self.data.iter_mut().zip(&x.data) {
            *y += v * a;
        }
    }

    /// Multiplies by a real radial profile.
    pub fn mul_radial(&self, p: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n() {
            out.row_mut(i).iter_mut().for_each(|v| *v *= p[i]);
        }
        out
    }

    /// Exact spectral θ-derivative.
    pub fn dtheta(&self) -> Self {
        self.map_coeffs(|_, k, c| c * C64::new(0.0, k as f64))
    }

    /// Zero-mean θ-antiderivative; the zero mode is discarded.
    pub fn dtheta_inv(&self) -> Self {
        self.map_coeffs(|_, k, c| if k == 0 { ZERO } else { c / C64::new(0.0, k as f64) })
    }

    /// Derivative of given order in the computational coordinate.
    pub fn d_comp(&self, order: usize) -> Self {
        if order == 0 {
            return self.clone();
        }
        let op = self.grid.diff().d(order);
        let mut out = Self::zeros(&self.grid, self.k_max);
        let cols: Vec<Vec<C64>> = (0..=self.k_max).into_par_iter().map(|k| op.apply(&self.mode(k))).collect();
        for (k, col) in cols.iter().enumerate() {
            out.set_mode(k, col);
        }
        out
    }

    /// Derivative of given order in the grid's physical coordinate.
    ///
    /// On r-grids the stencils act in `ln r` and the chain rule is applied.
    pub fn d_coord(&self, order: usize) -> Self {
        if self.grid.kind != CoordKind::R || order == 0 {
            return self.d_comp(order);
        }
        let coef: &[f64] = match order {
            1 => &[1.0],
            2 => &[-1.0, 1.0],
            3 => &[2.0, -3.0, 1.0],
            4 => &[-6.0, 11.0, -6.0, 1.0],
            _ => panic!("derivative order above 4"),
        };
        let mut acc = Self::zeros(&self.grid, self.k_max);
        for (m, &c) in coef.iter().enumerate() {
            acc.axpy(c, &self.d_comp(m + 1));
        }
        let w: Vec<f64> = self.nodes().iter().map(|r| r.powi(-(order as i32))).collect();
        acc.mul_radial(&w)
    }

    fn integrand(&self) -> Self {
        if self.grid.kind == CoordKind::R {
            self.mul_radial(self.grid.nodes())
        } else {
            self.clone()
        }
    }

    /// `∫_{x_0}^{x} f` per mode.
    pub fn integrate_from_start(&self) -> Self {
        let ig = self.grid.integrator();
        let g = self.integrand();
        let mut out = Self::zeros(&self.grid, self.k_max);
        for k in 0..=self.k_max {
            out.set_mode(k, &ig.from_start(&g.mode(k)));
        }
        out
    }

    /// `∫_{x}^{x_end} f` per mode.
    pub fn integrate_to_end(&self) -> Self {
        let ig = self.grid.integrator();
        let g = self.integrand();
        let mut out = Self::zeros(&self.grid, self.k_max);
        for k in 0..=self.k_max {
            out.set_mode(k, &ig.to_end(&g.mode(k)));
        }
        out
    }

    /// Dealiased pointwise product.
    pub fn product(&self, other: &Self, tg: &ThetaGrid) -> Self {
        assert!(self.same_grid(other) && self.k_max == other.k_max);
        let mp = tg.m_prod();
        let w = self.k_max + 1;
        let mut out = Self::zeros(&self.grid, self.k_max);
        out.data.par_chunks_mut(w).enumerate().for_each(|(i, c)| {
            let mut a = vec![0.0; mp];
            let mut b = vec![0.0; mp];
            tg.to_prod_nodes(self.row(i), &mut a);
            tg.to_prod_nodes(other.row(i), &mut b);
            for (x, y) in a.iter_mut().zip(&b) {
                *x *= y;
            }
            tg.from_prod_nodes(&a, c);
        });
        out
    }

    /// Zero mode as a real profile.
    pub fn zero_mode(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.c(i, 0).re).collect()
    }

    /// Parts with only the selected modes kept.
    pub fn keep_modes(&self, keep: impl Fn(usize) -> bool) -> Self {
        self.map_coeffs(|_, k, c| if keep(k) { c } else { ZERO })
    }

    pub fn nonzero_modes(&self) -> Self {
        self.keep_modes(|k| k != 0)
    }

    pub fn mode1_part(&self) -> Self {
        self.keep_modes(|k| k == 1)
    }

    pub fn high_modes(&self) -> Self {
        self.keep_modes(|k| k >= 2)
    }

    /// Bound on `sup |f|` from the coefficient sum, node by node.
    pub fn coeff_bound(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.row(i).iter().map(|c| c.norm()).sum()).collect()
    }

    /// `sup_θ |f|` per radial node, sampled on the product grid.
    pub fn sup_theta(&self, tg: &ThetaGrid) -> Vec<f64> {
        let mp = tg.m_prod();
        (0..self.n())
            .into_par_iter()
            .map(|i| {
                let mut a = vec![0.0; mp];
                tg.to_prod_nodes(self.row(i), &mut a);
                a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .collect()
    }

    pub fn sup_abs(&self, tg: &ThetaGrid) -> f64 {
        self.sup_theta(tg).into_iter().fold(0.0, f64::max)
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Resamples onto another radial grid by cubic interpolation.
    pub fn resample(&self, interp: &super::quad::Interp, target: &Arc<RadialGrid>) -> Self {
        let mut out = Self::zeros(target, self.k_max);
        for k in 0..=self.k_max {
            out.set_mode(k, &interp.apply(&self.mode(k)));
        }
        out
    }

    pub fn with_grid(&self, grid: &Arc<RadialGrid>) -> Result<Self> {
        if grid.len() != self.n() {
            return Err(Error::GridMismatch("node count differs".into()));
        }
        Ok(Self { k_max: self.k_max, grid: grid.clone(), data: self.data.clone() })
    }

    pub fn raw(&self) -> &[C64] {
        &self.data
    }
}

impl Add for &FourierRadialField {
    type Output = FourierRadialField;
    fn add(self, o: &FourierRadialField) -> FourierRadialField {
        assert!(self.same_grid(o) && self.k_max == o.k_max, "grid mismatch");
        let mut out = self.clone();
        out.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for &FourierRadialField {
    type Output = FourierRadialField;
    fn sub(self, o: &FourierRadialField) -> FourierRadialField {
        assert!(self.same_grid(o) && self.k_max == o.k_max, "grid mismatch");
        let mut out = self.clone();
        out.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a -= b);
        out
    }
}

impl Neg for &FourierRadialField {
    type Output = FourierRadialField;
    fn neg(self) -> FourierRadialField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &FourierRadialField {
    type Output = FourierRadialField;
    fn mul(self, a: f64) -> FourierRadialField {
        self.scale(a)
    }
}
