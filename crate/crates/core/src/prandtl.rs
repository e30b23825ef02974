//! Boundary-layer orders on the half-line `ζ = (r − 1)/ε ≥ 0`.
//!
//! Higher-order forcings come from an ε-power collector applied to the polar
//! momentum operators with `r = 1 + εζ` and `ν = ε²`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batchelor_wood::{compute_tilde_omega, BWResult, Params};
use crate::error::{Error, Result};
use crate::euler_hierarchy::{check_compatibility, solve_euler_order, CompatibilityReport, EulerOrder, LimitEuler, OuterStack};
use crate::field_core::banded::{BandLu, BandMatrix};
use crate::field_core::smooth::{smooth_step, Jet};
use crate::field_core::{CoordKind, FourierRadialField as Field, RadialGrid, ThetaGrid};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayerConfig {
    pub z_max: f64,
    pub n_zeta: usize,
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub delta_max: f64,
}

impl Default for LayerConfig {
    fn default() -> Self {
        Self { z_max: 40.0, n_zeta: 600, beta: 3.0, tol: 1e-10, max_iter: 200, delta_max: 0.3 }
    }
}

/// Sinh-stretched ζ-grid on `[0, Z]`, dense near the wall.
pub fn zeta_grid(cfg: &LayerConfig) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(RadialGrid::zeta(cfg.z_max, cfg.n_zeta, cfg.beta)?))
}

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Composite 8-point Gauss-Legendre on `[a, b]`.
fn gauss(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for &(x, w) in &GL8 {
            s += w * (f(c - 0.5 * h * x) + f(c + 0.5 * h * x));
        }
    }
    0.5 * h * s
}

/// Lifting profile `κ = (1 + cζ) B(ζ)` with `B = 1 − S(ζ/2)`:
/// `κ(0) = 1`, support `[0, 2]`, `∫κ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub c: f64,
}

impl Default for Kappa {
    fn default() -> Self {
        Self::new()
    }
}

impl Kappa {
    pub const SUPPORT: f64 = 2.0;

    pub fn new() -> Self {
        let b = |z: f64| 1.0 - smooth_step(Jet::constant(z / 2.0)).value();
        let i0 = gauss(0.0, Self::SUPPORT, 64, b);
        let i1 = gauss(0.0, Self::SUPPORT, 64, |z| z * b(z));
        Self { c: -i0 / i1 }
    }

    pub fn jet(&self, z: Jet) -> Jet {
        let b = Jet::constant(1.0) - smooth_step(z.scale(0.5));
        (Jet::constant(1.0) + z.scale(self.c)) * b
    }

    pub fn value(&self, z: f64) -> f64 {
        self.jet(Jet::constant(z)).value()
    }

    /// `K(ζ) = ∫_0^ζ κ`, zero beyond the support.
    pub fn integral(&self, z: f64) -> f64 {
        if z <= 0.0 || z >= Self::SUPPORT {
            return 0.0;
        }
        gauss(0.0, z, 16, |t| self.value(t))
    }
}

/// One boundary-layer order.
#[derive(Clone, Debug)]
pub struct BoundaryLayerOrder {
    pub k: usize,
    /// Decaying profile `ũ_p^{(k)} = u_p^{(k)} − A_k`.
    pub u_p: Field,
    /// `v_p^{(k+1)}`, decaying, zero θ-mean.
    pub v_p_next: Field,
    /// `p_p^{(k+1)}`, vanishing at infinity.
    pub p_p_next: Field,
    /// r-momentum forcing `g` with `−∂_ζ p_p^{(k+1)} = g`.
    pub g_pk: Field,
    pub a_k: f64,
    pub diag: LayerDiagnostics,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerDiagnostics {
    pub k: usize,
    pub a_k: f64,
    /// Limit constant from the zero-mode integral identity.
    pub a_k_check: f64,
    /// Set when the two limit estimates differ by more than 1e−6.
    pub a_k_unresolved: bool,
    pub iterations: usize,
    pub last_update: f64,
    /// Sup of the collected θ-momentum residual of this order.
    pub momentum_residual: f64,
    /// `max_ζ |∫ v_p^{(k+1)} dθ|`.
    pub v_mean_max: f64,
    /// Sup of the per-order divergence relation.
    pub divergence: f64,
    /// Zero-mode slope at ζ = Z.
    pub far_slope: f64,
}

/// Forcing of the linearized θ-momentum equation of order `k`.
#[derive(Clone, Debug)]
pub struct LayerForcing {
    pub k: usize,
    pub f_pk: Field,
}

/// Truncated power series in ε with field coefficients.
#[derive(Clone, Debug)]
pub struct Series(pub Vec<Field>);

impl Series {
    pub fn zeros(grid: &Arc<RadialGrid>, k_max: usize, len: usize) -> Self {
        Series(vec![Field::zeros(grid, k_max); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn zip(&self, o: &Self, f: impl Fn(&Field, &Field) -> Field) -> Self {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| f(a, b)).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|a| a.scale(c))
    }

    pub fn map(&self, f: impl Fn(&Field) -> Field + Sync + Send) -> Self {
        Series(self.0.par_iter().map(f).collect())
    }

    /// Cauchy product truncated to the common length.
    pub fn mul(&self, o: &Self, tg: &ThetaGrid) -> Self {
        let n = self.len().min(o.len());
        let live_a: Vec<bool> = self.0.iter().map(|f| f.max_coeff_abs() > 0.0).collect();
        let live_b: Vec<bool> = o.0.iter().map(|f| f.max_coeff_abs() > 0.0).collect();
        Series(
            (0..n)
                .into_par_iter()
                .map(|j| {
                    let mut acc = Field::zeros(self.0[0].grid(), self.0[0].k_max());
                    for a in 0..=j {
                        if live_a[a] && live_b[j - a] {
                            acc = &acc + &self.0[a].product(&o.0[j - a], tg);
                        }
                    }
                    acc
                })
                .collect(),
        )
    }

    /// Multiplication by ε.
    pub fn up(&self) -> Self {
        let z = self.0[0].scale(0.0);
        Series(std::iter::once(z).chain(self.0[..self.len() - 1].iter().cloned()).collect())
    }

    /// Division by ε; the top coefficient becomes unknown and is set to zero.
    pub fn down(&self) -> Self {
        let z = self.0[0].scale(0.0);
        Series(self.0[1..].iter().cloned().chain(std::iter::once(z)).collect())
    }

    pub fn mul_zeta(&self) -> Self {
        let z = self.0[0].nodes().to_vec();
        self.map(|f| f.mul_radial(&z))
    }

    /// Product with `1/(1 + εζ) = Σ_m ε^m (−ζ)^m`.
    pub fn over_r(&self) -> Self {
        let z = self.0[0].nodes().to_vec();
        let n = self.len();
        Series(
            (0..n)
                .map(|j| {
                    let mut acc = self.0[j].clone();
                    for m in 1..=j {
                        let w: Vec<f64> = z.iter().map(|x| (-x).powi(m as i32)).collect();
                        acc = &acc + &self.0[j - m].mul_radial(&w);
                    }
                    acc
                })
                .collect(),
        )
    }
}

/// Series with its first two ζ-derivatives.
#[derive(Clone, Debug)]
pub struct SeriesJet {
    pub f: Series,
    pub z: Series,
    pub zz: Series,
}

impl SeriesJet {
    /// Derivatives by finite differences on the ζ-grid.
    pub fn from_fd(f: Series) -> Self {
        let z = f.map(|x| x.d_coord(1));
        let zz = f.map(|x| x.d_coord(2));
        Self { f, z, zz }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { f: self.f.add(&o.f), z: self.z.add(&o.z), zz: self.zz.add(&o.zz) }
    }
}

/// Collected θ- and r-momentum residuals of the r-multiplied polar equations.
pub fn momentum_series(u: &SeriesJet, v: &SeriesJet, p: &Series, tg: &ThetaGrid) -> (Series, Series) {
    let th = |f: &Field| f.dtheta();
    let (uz, uzz, ut) = (&u.z, &u.zz, u.f.map(th));
    let (vz, vzz, vt) = (&v.z, &v.zz, v.f.map(th));
    let (u, v) = (&u.f, &v.f);
    let utt = ut.map(th);
    let vtt = vt.map(th);
    let pz = p.map(|f| f.d_coord(1));
    let vuz = v.mul(uz, tg);
    let vvz = v.mul(vz, tg);
    let nu2 = |s: &Series| s.over_r().up().up();

    let visc_t = nu2(&utt).add(uzz).add(&uzz.mul_zeta().up()).add(&uz.up()).add(&nu2(&vt).scale(2.0)).sub(&nu2(u));
    let t = u.mul(&ut, tg).add(&vuz.down()).add(&vuz.mul_zeta()).add(&u.mul(v, tg)).add(&p.map(th)).sub(&visc_t);

    let visc_r = nu2(&vtt).add(vzz).add(&vzz.mul_zeta().up()).add(&vz.up()).sub(&nu2(&ut).scale(2.0)).sub(&nu2(v));
    let r = u
        .mul(&vt, tg)
        .add(&vvz.down())
        .add(&vvz.mul_zeta())
        .sub(&u.mul(u, tg))
        .add(&pz.down())
        .add(&pz.mul_zeta())
        .sub(&visc_r);
    (t, r)
}

/// Taylor pieces of the outer velocity at `r = 1 + εζ` with exact ζ-derivatives:
/// `E_j = Σ_{m+l=j} ζ^l/l! ∂_r^l u_E^{(m)}(θ, 1)`.
pub fn outer_taylor(stack: &OuterStack, grid: &Arc<RadialGrid>, len: usize) -> (SeriesJet, SeriesJet) {
    let k_max = stack.k_max;
    let zero = Series::zeros(grid, k_max, len);
    let mut eu = SeriesJet { f: zero.clone(), z: zero.clone(), zz: zero.clone() };
    let mut ev = eu.clone();
    let mono = |l: usize, d: usize, x: f64| -> f64 {
        if d > l {
            return 0.0;
        }
        let fact: f64 = (1..=l - d).map(|i| i as f64).product();
        x.powi((l - d) as i32) / fact
    };
    for j in 0..len {
        for m in 0..=j {
            let l = j - m;
            for (jet, c) in [(&mut eu, stack.u(m).coeffs_at(1.0, l)), (&mut ev, stack.v(m).coeffs_at(1.0, l))] {
                if c.iter().all(|c| *c == ZERO) {
                    continue;
                }
                for (d, s) in [(0, &mut jet.f), (1, &mut jet.z), (2, &mut jet.zz)] {
                    if d <= l {
                        s.0[j] = &s.0[j] + &Field::from_fn(grid, k_max, |k, x| c[k] * mono(l, d, x));
                    }
                }
            }
        }
    }
    (eu, ev)
}

/// Everything a layer stage needs from earlier stages.
pub struct LayerContext<'a> {
    pub tilde_omega: f64,
    pub tg: &'a ThetaGrid,
    pub grid: &'a Arc<RadialGrid>,
    /// Solved orders `0..k`.
    pub lower: &'a [BoundaryLayerOrder],
    /// Outer orders `1..=k` (order `k` without its limit constant yet).
    pub euler: &'a [EulerOrder],
    pub cfg: &'a LayerConfig,
}

impl LayerContext<'_> {
    fn k_max(&self) -> usize {
        self.tg.k_max()
    }

    fn stack<'b>(&self, euler: &'b [EulerOrder]) -> OuterStack<'b> {
        OuterStack { limit: LimitEuler { tilde_omega: self.tilde_omega }, orders: euler, k_max: self.k_max() }
    }

    fn check(&self, k: usize) -> Result<()> {
        if self.lower.len() < k {
            return Err(Error::Dependency(format!("layer order {k} needs orders 0..{k}, have {}", self.lower.len())));
        }
        for m in 1..=k {
            if !self.euler.iter().any(|o| o.k == m) {
                return Err(Error::Dependency(format!("layer order {k} needs outer order {m}")));
            }
        }
        Ok(())
    }

    /// Layer series of length `k + 2` with `u_p^{(k)} = u_k` and the given top
    /// vertical velocity.
    fn layer_series(&self, k: usize, u_k: Option<&Field>, v_top: &Field) -> (Series, Series, Series) {
        let len = k + 2;
        let mut u = Series::zeros(self.grid, self.k_max(), len);
        let mut v = u.clone();
        let mut p = u.clone();
        for j in 0..k {
            u.0[j] = self.lower[j].u_p.clone();
            v.0[j + 1] = self.lower[j].v_p_next.clone();
            p.0[j + 1] = self.lower[j].p_p_next.clone();
        }
        if let Some(f) = u_k {
            u.0[k] = f.clone();
        }
        v.0[k + 1] = v_top.clone();
        (u, v, p)
    }

    /// Order-`k` coefficients of `T(E + L) − T(E)` and `R(E + L) − R(E)`.
    fn collect(&self, k: usize, euler: &[EulerOrder], u_k: Option<&Field>, v_top: &Field) -> (Field, Field) {
        let stack = self.stack(euler);
        let (eu, ev) = outer_taylor(&stack, self.grid, k + 2);
        let (lu, lv, lp) = self.layer_series(k, u_k, v_top);
        let zero_p = Series::zeros(self.grid, self.k_max(), k + 2);
        let (lu, lv) = (SeriesJet::from_fd(lu), SeriesJet::from_fd(lv));
        let (t1, r1) = momentum_series(&eu.add(&lu), &ev.add(&lv), &lp, self.tg);
        let (t0, r0) = momentum_series(&eu, &ev, &zero_p, self.tg);
        (&t1.0[k] - &t0.0[k], &r1.0[k] - &r0.0[k])
    }

    fn v_top_known(&self, k: usize) -> Field {
        let vk = &self.lower[k - 1].v_p_next;
        vk.mul_radial(vk.nodes()).scale(-1.0)
    }
}

/// Forcing `f_{p,k}` such that the order-`k` layer equation reads `L[u_p^{(k)}] = f_{p,k}`.
pub fn assemble_forcing(ctx: &LayerContext, k: usize) -> Result<LayerForcing> {
    if k == 0 {
        return Err(Error::InvalidParam("forcing is defined for k ≥ 1".into()));
    }
    ctx.check(k)?;
    let (t, _) = ctx.collect(k, ctx.euler, None, &ctx.v_top_known(k));
    Ok(LayerForcing { k, f_pk: t.scale(-1.0) })
}

/// Linearization about the leading layer.
///
/// `L[u] = (ω̃ + u0)∂_θu + u ∂_θu0 + v̄ ∂_ζu − (∫_0^ζ ∂_θu) ∂_ζu0 − ∂_ζ²u`.
pub struct Linearized<'a> {
    pub tilde_omega: f64,
    pub u0: Field,
    pub vbar: Field,
    pub tg: &'a ThetaGrid,
    pub cfg: &'a LayerConfig,
    u0_t: Field,
    u0_z: Field,
}

impl<'a> Linearized<'a> {
    pub fn new(tilde_omega: f64, u0: Field, vbar: Field, tg: &'a ThetaGrid, cfg: &'a LayerConfig) -> Self {
        let u0_t = u0.dtheta();
        let u0_z = u0.d_coord(1);
        Self { tilde_omega, u0, vbar, tg, cfg, u0_t, u0_z }
    }

    /// Terms left explicit in the iteration.
    pub fn explicit(&self, u: &Field) -> Field {
        let ut = u.dtheta();
        let w = ut.integrate_from_start();
        let a = self.u0.product(&ut, self.tg);
        let b = u.product(&self.u0_t, self.tg);
        let c = self.vbar.product(&u.d_coord(1), self.tg);
        let d = w.product(&self.u0_z, self.tg);
        &(&(&a + &b) + &c) - &d
    }

    pub fn apply(&self, u: &Field) -> Field {
        &(&u.dtheta().scale(self.tilde_omega) - &u.d_coord(2)) + &self.explicit(u)
    }
}

/// Per-mode factorizations of `ikω̃ − ∂_ζ²` with wall and far rows.
fn mode_operators(grid: &RadialGrid, k_max: usize, tilde_omega: f64, neumann_zero_mode: bool) -> Result<Vec<BandLu>> {
    let n = grid.len();
    let d1 = grid.diff().d(1);
    let d2 = grid.diff().d(2);
    (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let diag = vec![C64::new(0.0, k as f64 * tilde_omega); n];
            let m1 = vec![C64::new(-1.0, 0.0); n];
            let mut m = BandMatrix::from_stencils(n, &[(None, &diag), (Some(d2), &m1)]);
            m.set_row(0, 0, &[C64::new(1.0, 0.0)]);
            if k == 0 && neumann_zero_mode {
                let (s, w) = d1.row(n - 1);
                let w: Vec<C64> = w.iter().map(|&x| C64::new(x, 0.0)).collect();
                m.set_row(n - 1, s, &w);
            } else {
                m.set_row(n - 1, n - 1, &[C64::new(1.0, 0.0)]);
            }
            m.factor()
        })
        .collect()
}

fn solve_modes(lus: &[BandLu], rhs: &Field) -> Field {
    let cols: Vec<Vec<C64>> = lus.par_iter().enumerate().map(|(k, lu)| lu.solve(&rhs.mode(k))).collect();
    let mut out = Field::zeros(rhs.grid(), rhs.k_max());
    for (k, c) in cols.iter().enumerate() {
        out.set_mode(k, c);
    }
    out
}

fn rel_update(new: &Field, old: &Field) -> f64 {
    let d = (new - old).max_coeff_abs();
    let s = new.max_coeff_abs();
    if d == 0.0 {
        0.0
    } else {
        d / s.max(f64::MIN_POSITIVE)
    }
}

struct Picard {
    stage: String,
    tol: f64,
    max_iter: usize,
    prev: f64,
    growth: usize,
    iterations: usize,
    last: f64,
}

impl Picard {
    fn new(stage: &str, cfg: &LayerConfig) -> Self {
        Self { stage: stage.into(), tol: cfg.tol, max_iter: cfg.max_iter, prev: f64::INFINITY, growth: 0, iterations: 0, last: 0.0 }
    }

    /// Records an update; `Ok(true)` once converged.
    fn step(&mut self, upd: f64) -> Result<bool> {
        self.iterations += 1;
        self.last = upd;
        if upd < self.tol {
            return Ok(true);
        }
        self.growth = if upd > self.prev { self.growth + 1 } else { 0 };
        self.prev = upd;
        if self.growth >= 3 || self.iterations >= self.max_iter || !upd.is_finite() {
            return Err(Error::NonConvergence { stage: self.stage.clone(), iterations: self.iterations, last_update: upd });
        }
        Ok(false)
    }
}

/// Converged solution of the order-`k` linear problem with wall data `b`.
pub struct LinearSolve {
    pub u: Field,
    pub iterations: usize,
    pub last_update: f64,
}

/// Solves `L[u] = f`, `u(0) = b`, through `u = w + bκ` with `w(0) = 0`.
/// The zero mode is Neumann at ζ = Z; other modes vanish there.
pub fn solve_linearized(lin: &Linearized, grid: &Arc<RadialGrid>, f: &Field, b: &[C64]) -> Result<LinearSolve> {
    let k_max = lin.tg.k_max();
    let kappa = Kappa::new();
    let lift = Field::from_fn(grid, k_max, |k, z| b[k] * kappa.value(z));
    let base = f - &lin.apply(&lift);
    let lus = mode_operators(grid, k_max, lin.tilde_omega, true)?;
    let n = grid.len();
    let mut w = Field::zeros(grid, k_max);
    let mut pic = Picard::new("higher layer", lin.cfg);
    loop {
        let mut rhs = &base - &lin.explicit(&w);
        for k in 0..=k_max {
            rhs.set_c(0, k, ZERO);
            rhs.set_c(n - 1, k, ZERO);
        }
        let next = solve_modes(&lus, &rhs);
        let upd = rel_update(&next, &w);
        w = next;
        if pic.step(upd)? {
            break;
        }
    }
    Ok(LinearSolve { u: &w + &lift, iterations: pic.iterations, last_update: pic.last })
}

/// `p(ζ) = ∫_ζ^∞ g`, with an exponential tail fitted past the last node.
pub fn layer_pressure(g: &Field) -> Field {
    let mut p = g.integrate_to_end();
    let z = g.nodes();
    let n = z.len();
    let h = z[n - 1] - z[n - 2];
    for k in 0..=g.k_max() {
        let (a, b) = (g.c(n - 2, k), g.c(n - 1, k));
        if b.norm() > 0.0 && a.norm() > b.norm() {
            let rate = (a.norm() / b.norm()).ln() / h;
            let tail = b / rate;
            for i in 0..n {
                p.add_c(i, k, tail);
            }
        }
    }
    p
}

fn broadcast(grid: &Arc<RadialGrid>, c: &[C64]) -> Field {
    Field::from_fn(grid, c.len() - 1, |k, _| c[k])
}

fn v_next(u_t: &Field, v_k: Option<&Field>) -> Field {
    let q = u_t.integrate_to_end();
    match v_k {
        Some(v) => &q - &v.mul_radial(v.nodes()),
        None => q,
    }
}

/// `max_ζ |∫_0^{2π} v dθ|`.
pub fn theta_mean_max(v: &Field) -> f64 {
    v.zero_mode().iter().fold(0.0, |m, x| m.max(2.0 * std::f64::consts::PI * x.abs()))
}

/// Leading nonlinear layer with wall data `g = ω + δf − ω̃`.
pub fn solve_leading_layer(tilde_omega: f64, g: &[C64], grid: &Arc<RadialGrid>, tg: &ThetaGrid, cfg: &LayerConfig) -> Result<BoundaryLayerOrder> {
    if grid.kind != CoordKind::Zeta {
        return Err(Error::GridMismatch("layer solve needs a zeta grid".into()));
    }
    let k_max = tg.k_max();
    if g.len() != k_max + 1 {
        return Err(Error::GridMismatch("wall data has wrong mode count".into()));
    }
    let n = grid.len();
    let lus = mode_operators(grid, k_max, tilde_omega, false)?;
    let mut u = Field::zeros(grid, k_max);
    let mut pic = Picard::new("leading layer", cfg);
    loop {
        let ut = u.dtheta();
        let w = ut.integrate_from_start().scale(-1.0);
        let nl = &u.product(&ut, tg) + &w.product(&u.d_coord(1), tg);
        let mut rhs = nl.scale(-1.0);
        for k in 0..=k_max {
            rhs.set_c(0, k, g[k]);
            rhs.set_c(n - 1, k, ZERO);
        }
        let next = solve_modes(&lus, &rhs);
        let upd = rel_update(&next, &u);
        u = next;
        if pic.step(upd)? {
            break;
        }
    }
    let v1 = v_next(&u.dtheta(), None);
    let ctx = LayerContext { tilde_omega, tg, grid, lower: &[], euler: &[], cfg };
    let v_top = &v1 - &broadcast(grid, v1.row(0));
    let (t, r) = ctx.collect(0, &[], Some(&u), &v_top);
    let p1 = layer_pressure(&r);
    let divergence = (&u.dtheta() + &v1.d_coord(1)).max_coeff_abs();
    let far_slope = u.d_coord(1).c(n - 1, 0).re;
    let diag = LayerDiagnostics {
        k: 0,
        iterations: pic.iterations,
        last_update: pic.last,
        momentum_residual: interior_sup(&t),
        v_mean_max: theta_mean_max(&v1),
        divergence,
        far_slope,
        ..Default::default()
    };
    Ok(BoundaryLayerOrder { k: 0, u_p: u, v_p_next: v1, p_p_next: p1, g_pk: r, a_k: 0.0, diag })
}

/// Sup of coefficients away from the two boundary rows, where the discrete
/// equations are replaced by boundary conditions.
fn interior_sup(f: &Field) -> f64 {
    let n = f.n();
    (1..n - 1).flat_map(|i| f.row(i).iter().map(|c| c.norm())).fold(0.0, f64::max)
}

/// Order `k ≥ 1`: solves the lifted linear problem, extracts `A_k`, and
/// builds `v_p^{(k+1)}` and `p_p^{(k+1)}`.
pub fn solve_higher_layer(ctx: &LayerContext, forcing: &LayerForcing) -> Result<BoundaryLayerOrder> {
    let k = forcing.k;
    ctx.check(k)?;
    let grid = ctx.grid;
    let k_max = ctx.k_max();
    let order_k = ctx.euler.iter().find(|o| o.k == k).unwrap();
    if order_k.a_k != 0.0 {
        return Err(Error::Precondition(format!("outer order {k} already carries its limit constant")));
    }
    let b: Vec<C64> = order_k.u().coeffs_at(1.0, 0).iter().map(|c| -c).collect();
    let lin = leading_linearization(ctx)?;
    let sol = solve_linearized(&lin, grid, &forcing.f_pk, &b)?;
    let u = sol.u;

    let z = grid.nodes();
    let n = z.len();
    let z_tail = 0.9 * ctx.cfg.z_max.min(grid.last());
    let u0 = u.zero_mode();
    let tail: Vec<f64> = (0..n).filter(|&i| z[i] >= z_tail).map(|i| u0[i]).collect();
    let a_k = tail.iter().sum::<f64>() / tail.len() as f64;
    let f0: Vec<f64> = (&forcing.f_pk - &lin.explicit(&u)).zero_mode();
    let zf: Vec<f64> = (0..n).map(|i| z[i] * f0[i]).collect();
    let a_k_check = b[0].re + grid.integrator().total(&zf);

    let mut shifted = u.clone();
    for i in 0..n {
        shifted.add_c(i, 0, C64::new(-a_k, 0.0));
    }
    let vk = &ctx.lower[k - 1].v_p_next;
    let v_next_f = v_next(&shifted.dtheta(), Some(vk));

    let mut euler = ctx.euler.to_vec();
    euler.iter_mut().find(|o| o.k == k).unwrap().absorb_limit(a_k);
    let v_top = &v_next_f - &broadcast(grid, v_next_f.row(0));
    let (t, r) = ctx.collect(k, &euler, Some(&shifted), &v_top);
    let p_next = layer_pressure(&r);
    let div = &(&shifted.dtheta() + &v_next_f.d_coord(1)) + &vk.mul_radial(z).d_coord(1);
    let diag = LayerDiagnostics {
        k,
        a_k,
        a_k_check,
        a_k_unresolved: (a_k - a_k_check).abs() > 1e-6,
        iterations: sol.iterations,
        last_update: sol.last_update,
        momentum_residual: interior_sup(&t),
        v_mean_max: theta_mean_max(&v_next_f),
        divergence: div.max_coeff_abs(),
        far_slope: u.d_coord(1).c(n - 1, 0).re,
    };
    let _ = k_max;
    Ok(BoundaryLayerOrder { k, u_p: shifted, v_p_next: v_next_f, p_p_next: p_next, g_pk: r, a_k, diag })
}

/// Linearization about the stored leading layer and first outer order.
pub fn leading_linearization<'a>(ctx: &LayerContext<'a>) -> Result<Linearized<'a>> {
    let l0 = ctx.lower.first().ok_or_else(|| Error::Dependency("leading layer missing".into()))?;
    let e1 = ctx.euler.iter().find(|o| o.k == 1).ok_or_else(|| Error::Dependency("outer order 1 missing".into()))?;
    let vbar = &broadcast(ctx.grid, &e1.v().coeffs_at(1.0, 0)) + &l0.v_p_next;
    Ok(Linearized::new(ctx.tilde_omega, l0.u_p.clone(), vbar, ctx.tg, ctx.cfg))
}

/// Fitted exponential decay rate of mode `k` over `[lo, hi]`.
pub fn decay_rate(f: &Field, k: usize, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = f
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, &z)| z >= lo && z <= hi)
        .map(|(i, &z)| (z, f.c(i, k).norm().ln()))
        .collect();
    -crate::euler_hierarchy::fit_line(&pts).0
}

/// `sup_ζ ⟨ζ⟩^l |∂_θ^j ∂_ζ^m f|` over θ-nodes of the product grid.
pub fn weighted_sup(f: &Field, j: usize, m: usize, l: i32, tg: &ThetaGrid) -> f64 {
    let mut g = f.d_coord(m);
    for _ in 0..j {
        g = g.dtheta();
    }
    let s = g.sup_theta(tg);
    f.nodes().iter().zip(s).map(|(z, v)| (1.0 + z * z).sqrt().powi(l) * v).fold(0.0, f64::max)
}

/// Wall data `ω + δf − ω̃` as Fourier coefficients.
pub fn wall_data(p: &Params, tilde_omega: f64, k_max: usize) -> Result<Vec<C64>> {
    if p.f_modes() > k_max {
        return Err(Error::InvalidParam(format!("f has modes up to {} but K_θ = {k_max}", p.f_modes())));
    }
    let mut g = vec![ZERO; k_max + 1];
    g[0] = C64::new(p.omega + p.delta * p.f_coeff(0).0 - tilde_omega, 0.0);
    for (k, gk) in g.iter_mut().enumerate().skip(1) {
        let (a, b) = p.f_coeff(k);
        *gk = C64::new(p.delta * a, -p.delta * b);
    }
    Ok(g)
}

/// Layer orders `0..=N` and outer orders `1..=N+1`.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub params: Params,
    pub bw: BWResult,
    pub grid: Arc<RadialGrid>,
    pub layers: Vec<BoundaryLayerOrder>,
    pub euler: Vec<EulerOrder>,
    pub compatibility: Vec<CompatibilityReport>,
}

impl Hierarchy {
    pub fn tilde_omega(&self) -> f64 {
        self.bw.tilde_omega
    }

    pub fn stack(&self) -> OuterStack<'_> {
        let k_max = self.layers[0].u_p.k_max();
        OuterStack { limit: LimitEuler { tilde_omega: self.bw.tilde_omega }, orders: &self.euler, k_max }
    }
}

pub fn solve_hierarchy(params: &Params, tg: &ThetaGrid, cfg: &LayerConfig) -> Result<Hierarchy> {
    params.validate()?;
    if params.delta > cfg.delta_max {
        return Err(Error::InvalidRegime(format!("delta {} exceeds {}", params.delta, cfg.delta_max)));
    }
    let bw = compute_tilde_omega(params)?;
    let grid = zeta_grid(cfg)?;
    let g = wall_data(params, bw.tilde_omega, tg.k_max())?;
    let mut layers = vec![solve_leading_layer(bw.tilde_omega, &g, &grid, tg, cfg)?];
    let mut euler = vec![solve_euler_order(1, layers[0].v_p_next.row(0), 1e-10)?];
    for k in 1..=params.order {
        let ctx = LayerContext { tilde_omega: bw.tilde_omega, tg, grid: &grid, lower: &layers, euler: &euler, cfg };
        let forcing = assemble_forcing(&ctx, k)?;
        let order = solve_higher_layer(&ctx, &forcing)?;
        euler[k - 1].absorb_limit(order.a_k);
        euler.push(solve_euler_order(k + 1, order.v_p_next.row(0), 1e-10)?);
        layers.push(order);
    }
    let radii: Vec<f64> = (0..=60).map(|i| 64f64.powf(i as f64 / 60.0)).collect();
    let stack = OuterStack { limit: LimitEuler { tilde_omega: bw.tilde_omega }, orders: &euler, k_max: tg.k_max() };
    let compatibility = (2..=params.order + 1).map(|k| check_compatibility(&stack, k, &radii, tg)).collect();
    Ok(Hierarchy { params: params.clone(), bw, grid, layers, euler, compatibility })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tg() -> ThetaGrid {
        ThetaGrid::new(8, 18).unwrap()
    }

    fn params(delta: f64, fc: Vec<f64>, order: usize) -> Params {
        Params::new(1.0, delta, 0.1, fc, vec![], order).unwrap()
    }

    #[test]
    fn kappa_properties() {
        let k = Kappa::new();
        assert_eq!(k.value(0.0), 1.0);
        assert_eq!(k.value(2.5), 0.0);
        assert!(gauss(0.0, 2.0, 64, |z| k.value(z)).abs() < 1e-13);
        assert!(k.integral(1.999_999).abs() < 1e-10);
        let d = k.jet(Jet::variable(0.0));
        assert!((d.d(1) - k.c).abs() < 1e-14);
    }

    #[test]
    fn zero_wall_data_gives_zero_layer() {
        let cfg = LayerConfig::default();
        let grid = zeta_grid(&cfg).unwrap();
        let l = solve_leading_layer(1.0, &vec![ZERO; 9], &grid, &tg(), &cfg).unwrap();
        assert_eq!(l.u_p.max_coeff_abs(), 0.0);
        assert_eq!(l.v_p_next.max_coeff_abs(), 0.0);
        assert_eq!(l.p_p_next.max_coeff_abs(), 0.0);
    }

    #[test]
    fn small_amplitude_mode_one_matches_linear_oracle() {
        let p = params(1e-3, vec![0.0, 1.0], 0);
        let h = solve_hierarchy(&p, &tg(), &LayerConfig::default()).unwrap();
        let u = &h.layers[0].u_p;
        let wt = h.tilde_omega();
        let lam = C64::new(0.0, wt).sqrt();
        for (i, &z) in u.nodes().iter().enumerate() {
            if z > 12.0 {
                break;
            }
            let exact = C64::new(1e-3, 0.0) * (-lam * z).exp();
            assert!((u.c(i, 1) - exact).norm() <= 1e-2 * exact.norm(), "z={z}");
        }
        assert!(h.layers[0].diag.v_mean_max < 1e-10);
        let rate = decay_rate(u, 1, 2.0, 15.0);
        assert!((rate / (wt / 2.0).sqrt() - 1.0).abs() < 0.1);
    }

    #[test]
    fn leading_pressure_closed_form() {
        let p = params(0.05, vec![0.0, 1.0, 0.3], 0);
        let h = solve_hierarchy(&p, &tg(), &LayerConfig::default()).unwrap();
        let u = &h.layers[0].u_p;
        let integrand = &u.scale(2.0 * h.tilde_omega()) + &u.product(u, &tg());
        let expect = integrand.integrate_to_end().scale(-1.0);
        assert!((&expect - &h.layers[0].p_p_next).max_coeff_abs() < 1e-12);
    }

    #[test]
    fn layer_pressure_of_exponential() {
        let g = Arc::new(RadialGrid::zeta(40.0, 800, 3.0).unwrap());
        let f = Field::from_fn(&g, 2, |k, z| if k == 0 { C64::new((-z).exp(), 0.0) } else { ZERO });
        let p = layer_pressure(&f);
        let err = (0..g.len()).map(|i| (p.c(i, 0).re - f.c(i, 0).re).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err:e}");
        assert_eq!(layer_pressure(&f.scale(0.0)).max_coeff_abs(), 0.0);
    }

    #[test]
    fn manufactured_linear_layer() {
        let cfg = LayerConfig { n_zeta: 800, ..Default::default() };
        let grid = zeta_grid(&cfg).unwrap();
        let tg = tg();
        let wt = 1.3;
        let a = 0.02;
        let b1 = C64::new(0.01, -0.004);
        // u* = A(1 − e^{−ζ}) + b₁ e^{−ζ}(1 + ζ) e^{iθ}
        let ustar = Field::from_fn(&grid, 8, |k, z| match k {
            0 => C64::new(a * (1.0 - (-z).exp()), 0.0),
            1 => b1 * (-z).exp() * (1.0 + z),
            _ => ZERO,
        });
        // ω̃∂_θu* − u*'' in closed form
        let f = Field::from_fn(&grid, 8, |k, z| match k {
            0 => C64::new(a * (-z).exp(), 0.0),
            1 => b1 * C64::new(0.0, wt) * (-z).exp() * (1.0 + z) - b1 * (-z).exp() * (z - 1.0),
            _ => ZERO,
        });
        let zero = Field::zeros(&grid, 8);
        let lin = Linearized::new(wt, zero.clone(), zero, &tg, &cfg);
        let mut b = vec![ZERO; 9];
        b[1] = b1;
        let sol = solve_linearized(&lin, &grid, &f, &b).unwrap();
        assert!((&sol.u - &ustar).max_coeff_abs() < 1e-8);
    }

    #[test]
    fn golden_first_order_forcing() {
        let p = Params::new(1.0, 0.05, 0.1, vec![0.0, 1.0], vec![0.0, 0.0, 0.5], 1).unwrap();
        let tg = tg();
        let cfg = LayerConfig::default();
        let bw = compute_tilde_omega(&p).unwrap();
        let wt = bw.tilde_omega;
        let grid = zeta_grid(&cfg).unwrap();
        let g = wall_data(&p, wt, 8).unwrap();
        let l0 = solve_leading_layer(wt, &g, &grid, &tg, &cfg).unwrap();
        let e1 = solve_euler_order(1, l0.v_p_next.row(0), 1e-10).unwrap();
        let lower = [l0];
        let euler = [e1];
        let ctx = LayerContext { tilde_omega: wt, tg: &tg, grid: &grid, lower: &lower, euler: &euler, cfg: &cfg };
        let f = assemble_forcing(&ctx, 1).unwrap().f_pk;

        // term-by-term
        let u0 = &lower[0].u_p;
        let ue = broadcast(&grid, &euler[0].u().coeffs_at(1.0, 0));
        let ve = broadcast(&grid, &euler[0].v().coeffs_at(1.0, 0));
        let z: Vec<f64> = grid.nodes().to_vec();
        let zeta = Field::from_fn(&grid, 8, |k, x| if k == 0 { C64::new(x, 0.0) } else { ZERO });
        let u0z = u0.d_coord(1);
        let mut oracle = u0.product(&ue.dtheta(), &tg).scale(-1.0);
        oracle = &oracle - &(&ue - &zeta.scale(wt)).product(&u0.dtheta(), &tg);
        oracle = &oracle + &ue.dtheta().mul_radial(&z).product(&u0z, &tg);
        oracle = &oracle - &u0.product(&(&ve + &lower[0].v_p_next), &tg);
        oracle = &oracle - &lower[0].p_p_next.dtheta();
        oracle = &oracle + &u0.d_coord(2).mul_radial(&z);
        oracle = &oracle + &u0z;
        assert!((&f - &oracle).max_coeff_abs() < 1e-12, "{}", (&f - &oracle).max_coeff_abs());
    }

    #[test]
    fn zero_data_gives_zero_forcing_and_order() {
        let p = params(0.0, vec![], 2);
        let h = solve_hierarchy(&p, &tg(), &LayerConfig::default()).unwrap();
        for l in &h.layers {
            assert_eq!(l.u_p.max_coeff_abs(), 0.0);
            assert_eq!(l.a_k, 0.0);
        }
    }

    #[test]
    fn hierarchy_invariants() {
        let p = Params::new(1.0, 0.05, 0.1, vec![0.0, 1.0], vec![0.0, 0.0, 0.3], 2).unwrap();
        let tg = tg();
        let h = solve_hierarchy(&p, &tg, &LayerConfig::default()).unwrap();
        for l in &h.layers {
            let d = &l.diag;
            assert!(d.v_mean_max < 1e-10, "{d:?}");
            assert!(d.momentum_residual < 1e-8, "{d:?}");
            assert!(!d.a_k_unresolved, "{d:?}");
            for (j, m, e) in [(0, 0, 4), (2, 2, 4), (1, 1, 2)] {
                assert!(weighted_sup(&l.u_p, j, m, e, &tg).is_finite());
            }
            assert!(l.u_p.row(l.u_p.n() - 1).iter().all(|c| c.norm() < 1e-8));
            assert!(d.divergence < 1e-9, "{d:?}");
        }
        for c in &h.compatibility {
            assert!(c.passed, "{c:?}");
        }
    }
}
