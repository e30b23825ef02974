//! Closed-form outer (Euler) orders, their pressures and the radial corrector.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::{CoordKind, FourierRadialField, RadialGrid, ThetaGrid};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Finite sum `Σ_q r^{-q} Σ_k Re(c_{q,k} e^{ikθ})` evaluated analytically.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OuterField {
    k_max: usize,
    terms: BTreeMap<u32, Vec<C64>>,
}

/// `d^m/dr^m r^{-q}` coefficient: `(-q)(-q-1)…(-q-m+1)`.
fn falling(q: u32, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, j| acc * (-(q as f64) - j as f64))
}

impl OuterField {
    pub fn zero(k_max: usize) -> Self {
        Self { k_max, terms: BTreeMap::new() }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Adds `c r^{-q} e^{ikθ}` (real part taken on evaluation).
    pub fn add_term(&mut self, q: u32, k: usize, c: C64) {
        if k > self.k_max {
            return;
        }
        let v = self.terms.entry(q).or_insert_with(|| vec![ZERO; self.k_max + 1]);
        v[k] += if k == 0 { C64::new(c.re, 0.0) } else { c };
    }

    pub fn terms(&self) -> impl Iterator<Item = (&u32, &Vec<C64>)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|v| v.iter().all(|c| *c == ZERO))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (&q, v) in &o.terms {
            for (k, &c) in v.iter().enumerate() {
                out.add_term(q, k, c);
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| v.iter_mut().for_each(|c| *c *= a));
        out
    }

    pub fn dtheta(&self) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            for (k, c) in v.iter_mut().enumerate() {
                *c *= C64::new(0.0, k as f64);
            }
        }
        out
    }

    pub fn dr(&self) -> Self {
        let mut out = Self::zero(self.k_max);
        for (&q, v) in &self.terms {
            if q == 0 {
                continue;
            }
            for (k, &c) in v.iter().enumerate() {
                out.add_term(q + 1, k, c * -(q as f64));
            }
        }
        out
    }

    /// Multiplies by `r^{-p}`.
    pub fn mul_rpow(&self, p: u32) -> Self {
        Self { k_max: self.k_max, terms: self.terms.iter().map(|(&q, v)| (q + p, v.clone())).collect() }
    }

    /// Dealiased product, truncated to `k_max` modes.
    pub fn product(&self, o: &Self, tg: &ThetaGrid) -> Self {
        let mut out = Self::zero(self.k_max);
        let mp = tg.m_prod();
        let mut a = vec![0.0; mp];
        let mut b = vec![0.0; mp];
        let mut c = vec![ZERO; self.k_max + 1];
        for (&q1, v1) in &self.terms {
            tg.to_prod_nodes(v1, &mut a);
            for (&q2, v2) in &o.terms {
                tg.to_prod_nodes(v2, &mut b);
                let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
                tg.from_prod_nodes(&prod, &mut c);
                for (k, &ck) in c.iter().enumerate() {
                    out.add_term(q1 + q2, k, ck);
                }
            }
        }
        out
    }

    /// Fourier coefficients of `∂_r^m f` at radius `r`.
    pub fn coeffs_at(&self, r: f64, m: usize) -> Vec<C64> {
        let mut out = vec![ZERO; self.k_max + 1];
        for (&q, v) in &self.terms {
            let w = falling(q, m) * r.powi(-(q as i32) - m as i32);
            if w == 0.0 {
                continue;
            }
            for (k, &c) in v.iter().enumerate() {
                out[k] += c * w;
            }
        }
        out
    }

    /// `∂_r^m f` sampled at the nodes of an r-grid, or at `r = 1 + εx` on
    /// any other grid when `eps` is given.
    pub fn sample(&self, grid: &Arc<RadialGrid>, m: usize, eps: Option<f64>) -> FourierRadialField {
        let mut f = FourierRadialField::zeros(grid, self.k_max);
        for (i, &x) in grid.nodes().iter().enumerate() {
            let r = match (grid.kind, eps) {
                (CoordKind::R, _) => x,
                (CoordKind::S, _) => x.exp(),
                (CoordKind::Zeta, Some(e)) => 1.0 + e * x,
                (CoordKind::Zeta, None) => panic!("layer grid sampling needs epsilon"),
            };
            for (k, c) in self.coeffs_at(r, m).into_iter().enumerate() {
                f.set_c(i, k, c);
            }
        }
        f
    }

    /// `sup_θ |f(θ, r)|` on the product grid.
    pub fn sup_at(&self, r: f64, tg: &ThetaGrid) -> f64 {
        let c = self.coeffs_at(r, 0);
        let mut a = vec![0.0; tg.m_prod()];
        tg.to_prod_nodes(&c, &mut a);
        a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// The limiting swirl `ω̃/r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEuler {
    pub tilde_omega: f64,
}

impl LimitEuler {
    pub fn u(&self, k_max: usize) -> OuterField {
        let mut f = OuterField::zero(k_max);
        f.add_term(1, 0, C64::new(self.tilde_omega, 0.0));
        f
    }
}

/// One outer order in closed form.
///
/// Mode `n ≥ 1`: `v = Re(cv_n r^{-n-1} e^{inθ})`, `u = Re(cu_n r^{-n-1} e^{inθ})`,
/// with `cu_n = -i cv_n` for a harmonic, divergence-free order. The zero mode
/// of `u` is `Ã_k / r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerOrder {
    pub k: usize,
    pub cv: Vec<C64>,
    pub cu: Vec<C64>,
    pub a_k: f64,
    pub tilde_a_k: f64,
}

impl EulerOrder {
    pub fn zero(k: usize, k_max: usize) -> Self {
        Self { k, cv: vec![ZERO; k_max + 1], cu: vec![ZERO; k_max + 1], a_k: 0.0, tilde_a_k: 0.0 }
    }

    pub fn k_max(&self) -> usize {
        self.cv.len() - 1
    }

    pub fn u(&self) -> OuterField {
        let mut f = OuterField::zero(self.k_max());
        if self.tilde_a_k != 0.0 {
            f.add_term(1, 0, C64::new(self.tilde_a_k, 0.0));
        }
        for (n, &c) in self.cu.iter().enumerate().skip(1) {
            if c != ZERO {
                f.add_term(n as u32 + 1, n, c);
            }
        }
        f
    }

    pub fn v(&self) -> OuterField {
        let mut f = OuterField::zero(self.k_max());
        for (n, &c) in self.cv.iter().enumerate().skip(1) {
            if c != ZERO {
                f.add_term(n as u32 + 1, n, c);
            }
        }
        f
    }

    /// Coefficients of `r v` on `r^{-n}`.
    pub fn rv_coeffs(&self) -> &[C64] {
        &self.cv
    }

    /// Absorbs a layer limit constant through the corrector with zero forcing.
    pub fn absorb_limit(&mut self, a_k: f64) {
        self.a_k = a_k;
        self.tilde_a_k = a_k;
    }
}

/// Outer order `k` from the trace of the layer's vertical velocity at the wall.
///
/// `trace[n]` are the coefficients of `v_p^{(k)}(θ, 0)`; no penetration
/// requires `r v_e^{(k)} = -v_p^{(k)}` at `r = 1`.
pub fn solve_euler_order(k: usize, trace: &[C64], tol: f64) -> Result<EulerOrder> {
    let mean = trace.first().map(|c| c.norm()).unwrap_or(0.0);
    if mean > tol {
        return Err(Error::Compatibility { mean });
    }
    let k_max = trace.len() - 1;
    let mut o = EulerOrder::zero(k, k_max);
    for n in 1..=k_max {
        o.cv[n] = -trace[n];
        o.cu[n] = -C64::i() * o.cv[n];
    }
    Ok(o)
}

/// Outer velocity components of all orders `0..`; index 0 is the limiting swirl.
pub struct OuterStack<'a> {
    pub limit: LimitEuler,
    pub orders: &'a [EulerOrder],
    pub k_max: usize,
}

impl OuterStack<'_> {
    pub fn u(&self, m: usize) -> OuterField {
        if m == 0 {
            self.limit.u(self.k_max)
        } else {
            self.orders.iter().find(|o| o.k == m).map(|o| o.u()).unwrap_or_else(|| OuterField::zero(self.k_max))
        }
    }

    pub fn v(&self, m: usize) -> OuterField {
        if m == 0 {
            OuterField::zero(self.k_max)
        } else {
            self.orders.iter().find(|o| o.k == m).map(|o| o.v()).unwrap_or_else(|| OuterField::zero(self.k_max))
        }
    }

    /// Nonlinear θ-momentum forcing of order `k` from orders `1..k-1`:
    /// `-Σ (u^i ∂_θu^j / r + v^i ∂_r u^j + u^i v^j / r)`.
    pub fn forcing_theta(&self, k: usize, tg: &ThetaGrid) -> OuterField {
        let mut f = OuterField::zero(self.k_max);
        for i in 1..k {
            let j = k - i;
            let (ui, vi, uj, vj) = (self.u(i), self.v(i), self.u(j), self.v(j));
            f = f.add(&ui.product(&uj.dtheta(), tg).mul_rpow(1));
            f = f.add(&vi.product(&uj.dr(), tg));
            f = f.add(&ui.product(&vj, tg).mul_rpow(1));
        }
        f.scale(-1.0)
    }

    /// Bernoulli pressure of order `k`: `-½ Σ_{i+j=k} (u^i u^j + v^i v^j)`.
    pub fn pressure(&self, k: usize, tg: &ThetaGrid) -> OuterField {
        let mut p = OuterField::zero(self.k_max);
        for i in 0..=k {
            let j = k - i;
            p = p.add(&self.u(i).product(&self.u(j), tg));
            p = p.add(&self.v(i).product(&self.v(j), tg));
        }
        p.scale(-0.5)
    }

    /// Order-`k` momentum residuals (θ, r), non-r-multiplied, including the
    /// linear terms about the limiting swirl and the order-`k` pressure.
    pub fn momentum_residual(&self, k: usize, tg: &ThetaGrid) -> (OuterField, OuterField) {
        let p = self.pressure(k, tg);
        let mut rt = p.dtheta().mul_rpow(1);
        let mut rr = p.dr();
        for i in 0..=k {
            let j = k - i;
            let (ui, vi, uj, vj) = (self.u(i), self.v(i), self.u(j), self.v(j));
            rt = rt.add(&ui.product(&uj.dtheta(), tg).mul_rpow(1));
            rt = rt.add(&vi.product(&uj.dr(), tg));
            rt = rt.add(&ui.product(&vj, tg).mul_rpow(1));
            rr = rr.add(&ui.product(&vj.dtheta(), tg).mul_rpow(1));
            rr = rr.add(&vi.product(&vj.dr(), tg));
            rr = rr.add(&ui.product(&uj, tg).mul_rpow(1).scale(-1.0));
        }
        (rt, rr)
    }
}

/// Compatibility diagnostic for order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub k: usize,
    /// `max_r |∫_0^{2π} f_e^{(k)} dθ|` over the sampled radii.
    pub max_mean: f64,
    pub passed: bool,
}

pub fn check_compatibility(stack: &OuterStack, k: usize, radii: &[f64], tg: &ThetaGrid) -> CompatibilityReport {
    let f = stack.forcing_theta(k, tg);
    let max_mean = radii.iter().map(|&r| 2.0 * PI * f.coeffs_at(r, 0)[0].re.abs()).fold(0.0, f64::max);
    CompatibilityReport { k, max_mean, passed: max_mean < 1e-9 }
}

/// Radial corrector for the zero mode.
///
/// Returns `h(r) = Ã/r + (1/2r)∫_r^∞ f s² ds − (r/2)∫_r^∞ f ds` and
/// `Ã = A + ½∫_1^∞ f (1 − s²) ds`. Tails beyond the grid use a power law
/// fitted over the last decade of nodes.
pub fn corrector_hk(a: f64, f: &[f64], grid: &RadialGrid) -> Result<(Vec<f64>, f64)> {
    if grid.kind != CoordKind::R {
        return Err(Error::GridMismatch("corrector expects an r-grid".into()));
    }
    let r = grid.nodes();
    let n = r.len();
    if f.len() != n {
        return Err(Error::GridMismatch("profile length differs from grid".into()));
    }
    let r_end = r[n - 1];
    let (tail0, tail2) = if f.iter().all(|&v| v == 0.0) {
        (0.0, 0.0)
    } else {
        let lo = r.iter().position(|&x| x >= r_end / 10.0).unwrap_or(0);
        let pts: Vec<(f64, f64)> = (lo..n).filter(|&i| f[i] != 0.0).map(|i| (r[i].ln(), f[i].abs().ln())).collect();
        if pts.len() < 2 {
            return Err(Error::Tail("not enough nonzero samples to fit decay".into()));
        }
        let (q, _) = fit_line(&pts);
        let q = -q;
        if q < 3.5 {
            return Err(Error::Tail(format!("profile decays like r^-{q:.2}, need faster than r^-3.5")));
        }
        let fe = f[n - 1];
        (fe * r_end / (q - 1.0), fe * r_end.powi(3) / (q - 3.0))
    };
    let integ = grid.integrator();
    // integrals in ln r: ∫ g dr = ∫ g r d(ln r)
    let g0: Vec<f64> = (0..n).map(|i| f[i] * r[i]).collect();
    let g2: Vec<f64> = (0..n).map(|i| f[i] * r[i].powi(3)).collect();
    let i0: Vec<f64> = integ.to_end(&g0).into_iter().map(|v| v + tail0).collect();
    let i2: Vec<f64> = integ.to_end(&g2).into_iter().map(|v| v + tail2).collect();
    let tilde_a = a + 0.5 * (i0[0] - i2[0]);
    let mut h: Vec<f64> = (0..n).map(|i| tilde_a / r[i] + i2[i] / (2.0 * r[i]) - r[i] * i0[i] / 2.0).collect();
    // h(1) = Ã + (I₂ − I₀)/2 = A identically
    h[0] = a;
    Ok((h, tilde_a))
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

/// Fitted exponent of `sup_θ |f|` against r on the given radii.
pub fn decay_exponent(f: &OuterField, radii: &[f64], tg: &ThetaGrid) -> f64 {
    let pts: Vec<(f64, f64)> = radii.iter().map(|&r| (r.ln(), f.sup_at(r, tg).ln())).collect();
    fit_line(&pts).0
}
