//! Error system about the approximate solution, solved by Picard iteration
//! in the log-radial stream-function form.
//!
//! With `s = ln r`, `Φ_s = e^s û`, `Φ_θ = −e^s v̂` and `W = Δ_sΦ`, the error
//! obeys
//! `ε²e^{−s}(Δ_s²Φ − 4Δ_sΦ_s + 4Δ_sΦ) − [(û^a∂_θ + v̂^a∂_s)W − 2v̂^aW]
//!  − [(û∂_θ + v̂∂_s)W^a − 2v̂W^a] = −e^{2s}R^a_ω + (û∂_θ + v̂∂_s)W − 2v̂W`
//! for the nonzero modes, and the θ-averaged momentum balance
//! `ε²(û_0'' − û_0) = e^s ⟨S + N + R^a_u⟩` for the zero mode.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{radii_of, ApproxSolution};
use crate::error::{Error, Result};
use crate::euler_hierarchy::fit_line;
use crate::field_core::banded::BandMatrix;
use crate::field_core::quad::{simpson, Integrator, Interp};
use crate::field_core::{CoordKind, FourierRadialField as Field, RadialGrid, ThetaGrid};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorConfig {
    pub n_s: usize,
    pub s_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub eps_max: f64,
    pub delta_max: f64,
}

impl Default for ErrorConfig {
    fn default() -> Self {
        Self { n_s: 400, s_max: 64f64.ln(), tol: 1e-10, max_iter: 50, eps_max: 0.3, delta_max: 0.2 }
    }
}

impl ErrorConfig {
    pub fn grid(&self) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(RadialGrid::uniform_s(self.s_max, self.n_s)?))
    }
}

/// Coefficients of the linearized operator and the residual forcing on an s-grid.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub grid: Arc<RadialGrid>,
    pub epsilon: f64,
    /// Far-field circulation `lim r u^a_0`, used by the far closure.
    pub gamma: f64,
    pub u_a: Field,
    pub u_a_s: Field,
    pub v_a: Field,
    pub v_a_s: Field,
    /// `Δ_sΦ^a = e^s(u^a + u^a_s − v^a_θ)`.
    pub w_a: Field,
    pub w_a_s: Field,
    /// `e^{2s} R^a_ω`.
    pub forcing_omega: Field,
    /// r-multiplied θ-momentum residual `R^a_u`.
    pub forcing_u: Field,
}

fn exp_s(grid: &RadialGrid, p: f64) -> Vec<f64> {
    grid.nodes().iter().map(|s| (p * s).exp()).collect()
}

impl Coefficients {
    /// Coefficients of the pure swirl `ω̃/r` with zero forcing.
    pub fn rotation(grid: &Arc<RadialGrid>, epsilon: f64, tilde_omega: f64, k_max: usize) -> Self {
        let z = Field::zeros(grid, k_max);
        let u = Field::from_fn(grid, k_max, |k, s| if k == 0 { C64::new(tilde_omega * (-s).exp(), 0.0) } else { ZERO });
        Self {
            grid: grid.clone(),
            epsilon,
            gamma: tilde_omega,
            u_a_s: u.scale(-1.0),
            u_a: u,
            v_a: z.clone(),
            v_a_s: z.clone(),
            w_a: z.clone(),
            w_a_s: z.clone(),
            forcing_omega: z.clone(),
            forcing_u: z,
        }
    }

    pub fn k_max(&self) -> usize {
        self.u_a.k_max()
    }
}

/// Samples `û^a`, `v̂^a`, `Δ_sΦ^a` and the residuals on the s-grid.
pub fn transport_coefficients(apx: &ApproxSolution, grid: &Arc<RadialGrid>) -> Result<Coefficients> {
    if grid.kind != CoordKind::S {
        return Err(Error::GridMismatch("error solve runs on an s-grid".into()));
    }
    let j = apx.jets_on(grid)?;
    let r = radii_of(grid);
    let r2: Vec<f64> = r.iter().map(|x| x * x).collect();
    let es = &r;
    let u_s = j.u[1].mul_radial(&r);
    let u_ss = &u_s + &j.u[2].mul_radial(&r2);
    let v_s = j.v[1].mul_radial(&r);
    let v_t = j.v[0].dtheta();
    let w_a = (&(&j.u[0] + &u_s) - &v_t).mul_radial(es);
    let w_a_s = (&(&(&(&j.u[0] + &u_s.scale(2.0)) + &u_ss) - &v_t) - &v_s.dtheta()).mul_radial(es);
    let res = apx.residual_on(grid)?;
    let n = grid.len();
    let gamma = j.u[0].c(n - 1, 0).re * r[n - 1];
    Ok(Coefficients {
        grid: grid.clone(),
        epsilon: apx.epsilon,
        gamma,
        u_a: j.u[0].clone(),
        u_a_s: u_s,
        v_a: j.v[0].clone(),
        v_a_s: v_s,
        w_a,
        w_a_s,
        forcing_omega: res.romega.mul_radial(&r2),
        forcing_u: res.ru,
    })
}

/// Error iterate: stream function, velocities, `W = Δ_sΦ` and their
/// s-derivatives, with the `e^{±s}` weights differentiated analytically.
#[derive(Clone, Debug)]
pub struct ErrorState {
    pub phi: Field,
    pub u: Field,
    pub v: Field,
    pub w: Field,
    pub u_s: Field,
    pub v_s: Field,
    pub w_s: Field,
}

impl ErrorState {
    pub fn zero(grid: &Arc<RadialGrid>, k_max: usize) -> Self {
        let z = Field::zeros(grid, k_max);
        Self { phi: z.clone(), u: z.clone(), v: z.clone(), w: z.clone(), u_s: z.clone(), v_s: z.clone(), w_s: z }
    }

    /// Builds the state from nonzero modes of `Φ` and the zero mode `û_0`.
    pub fn from_parts(phi_nz: &Field, u0: &[f64]) -> Self {
        let grid = phi_nz.grid().clone();
        let n = grid.len();
        let k_max = phi_nz.k_max();
        let em = exp_s(&grid, -1.0);
        let ep = exp_s(&grid, 1.0);
        let d: Vec<Field> = (0..=3).map(|m| phi_nz.d_comp(m)).collect();
        let u = d[1].mul_radial(&em);
        let u_s = (&d[2] - &d[1]).mul_radial(&em);
        let v = d[0].dtheta().mul_radial(&em).scale(-1.0);
        let v_s = (&d[1] - &d[0]).dtheta().mul_radial(&em).scale(-1.0);
        let lap = |f: &Field, g: &Field| {
            f.map_coeffs(|i, k, z| z - g.c(i, k) * (k * k) as f64)
        };
        let w = lap(&d[2], &d[0]);
        let w_s = lap(&d[3], &d[1]);
        let mut st = Self { phi: phi_nz.clone(), u, v, w, u_s, v_s, w_s };
        let du = grid.diff().d(1).apply(u0);
        let ddu = grid.diff().d(2).apply(u0);
        let mut u0f = Field::zeros(&grid, k_max);
        for i in 0..n {
            u0f.set_c(i, 0, C64::new(u0[i] * ep[i], 0.0));
        }
        let phi0 = u0f.integrate_from_start();
        let re = |x: f64| C64::new(x, 0.0);
        for i in 0..n {
            st.phi.set_c(i, 0, phi0.c(i, 0));
            st.u.set_c(i, 0, re(u0[i]));
            st.u_s.set_c(i, 0, re(du[i]));
            st.w.set_c(i, 0, re(ep[i] * (u0[i] + du[i])));
            st.w_s.set_c(i, 0, re(ep[i] * (u0[i] + 2.0 * du[i] + ddu[i])));
        }
        st
    }

    /// `v̂_ss` from the stream function.
    pub fn v_ss(&self) -> Field {
        let em = exp_s(self.grid(), -1.0);
        let nz = self.phi.nonzero_modes();
        let a = &(&nz.d_comp(2) - &nz.d_comp(1).scale(2.0)) + &nz;
        a.dtheta().mul_radial(&em).scale(-1.0)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.phi.grid()
    }
}

/// Banded matrix of the mode-`k` operator (`k ≥ 1`) with clamped wall rows
/// and decaying far closures `Φ' + kΦ = 0`, `W' − (2 − σ)W = 0`.
pub fn mode_matrix(c: &Coefficients, k: usize) -> BandMatrix {
    let grid = &c.grid;
    let n = grid.len();
    let d = grid.diff();
    let eps2 = c.epsilon * c.epsilon;
    let kf = k as f64;
    let kk = kf * kf;
    let ik = C64::new(0.0, kf);
    let e: Vec<f64> = exp_s(grid, -1.0).iter().map(|x| eps2 * x).collect();
    let u0 = c.u_a.zero_mode();
    let w0 = c.w_a.zero_mode();
    let w0s = c.w_a_s.zero_mode();
    let em = exp_s(grid, -1.0);
    let c4: Vec<C64> = e.iter().map(|&x| C64::new(x, 0.0)).collect();
    let c3: Vec<C64> = e.iter().map(|&x| C64::new(-4.0 * x, 0.0)).collect();
    let c2: Vec<C64> = (0..n).map(|i| C64::new(e[i] * (4.0 - 2.0 * kk), 0.0) - ik * u0[i]).collect();
    let c1: Vec<C64> = e.iter().map(|&x| C64::new(4.0 * kk * x, 0.0)).collect();
    let c0: Vec<C64> = (0..n)
        .map(|i| C64::new(e[i] * (kk * kk - 4.0 * kk), 0.0) + ik * (u0[i] * kk + em[i] * (w0s[i] - 2.0 * w0[i])))
        .collect();
    let mut m = BandMatrix::from_stencils(
        n,
        &[(Some(d.d(4)), &c4), (Some(d.d(3)), &c3), (Some(d.d(2)), &c2), (Some(d.d(1)), &c1), (None, &c0)],
    );
    let one = C64::new(1.0, 0.0);
    m.set_row(0, 0, &[one]);
    let (s1, w1) = d.d(1).row(0);
    m.set_row(1, s1, &w1.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
    // Φ' + kΦ = 0
    let (s1, w1) = d.d(1).row(n - 2);
    let mut row: Vec<C64> = w1.iter().map(|&x| C64::new(x, 0.0)).collect();
    row[n - 2 - s1] += kf;
    m.set_row(n - 2, s1, &row);
    // W' − (2 − σ)W with W = Φ'' − k²Φ
    let sigma = (C64::new(kk, 0.0) + ik * c.gamma / eps2).sqrt();
    let lam = C64::new(2.0, 0.0) - sigma;
    let start = d.d(3).row(n - 1).0.min(d.d(2).row(n - 1).0).min(d.d(1).row(n - 1).0);
    let mut row = vec![ZERO; n - start];
    for (op, coef) in [(d.d(3), one), (d.d(1), C64::new(-kk, 0.0)), (d.d(2), -lam)] {
        let (s, w) = op.row(n - 1);
        for (j, &x) in w.iter().enumerate() {
            row[s + j - start] += coef * x;
        }
    }
    row[n - 1 - start] += lam * kk;
    m.set_row(n - 1, start, &row);
    m
}

/// Matrix of `ε²(D² − 1)` with `û_0(0) = 0` and `û_0' + û_0 = 0` at the far end.
pub fn zero_mode_matrix(c: &Coefficients) -> BandMatrix {
    let grid = &c.grid;
    let n = grid.len();
    let d = grid.diff();
    let eps2 = c.epsilon * c.epsilon;
    let c2 = vec![C64::new(eps2, 0.0); n];
    let c0 = vec![C64::new(-eps2, 0.0); n];
    let mut m = BandMatrix::from_stencils(n, &[(Some(d.d(2)), &c2), (None, &c0)]);
    m.set_row(0, 0, &[C64::new(1.0, 0.0)]);
    let (s, w) = d.d(1).row(n - 1);
    let mut row: Vec<C64> = w.iter().map(|&x| C64::new(x, 0.0)).collect();
    row[n - 1 - s] += 1.0;
    m.set_row(n - 1, s, &row);
    m
}

/// Right-hand sides for the nonzero modes and the zero mode at a given iterate.
pub fn step_rhs(c: &Coefficients, st: &ErrorState, tg: &ThetaGrid) -> (Field, Vec<f64>) {
    let grid = &c.grid;
    let em = exp_s(grid, -1.0);
    let (u, v, w, w_s) = (&st.u, &st.v, &st.w, &st.w_s);
    let p = |a: &Field, b: &Field| a.product(b, tg);
    let u0 = c.u_a.zero_mode();
    let w0 = c.w_a.zero_mode();
    let w0s = c.w_a_s.zero_mode();
    let wt = w.dtheta();

    let t1 = &(&p(&c.u_a, &wt) + &p(&c.v_a, w_s)) - &p(&c.v_a, w).scale(2.0);
    let t1_off = &t1 - &wt.mul_radial(&u0);
    let t2 = &(&p(u, &c.w_a.dtheta()) + &p(v, &c.w_a_s)) - &p(v, &c.w_a).scale(2.0);
    let diag2: Vec<f64> = (0..grid.len()).map(|i| w0s[i] - 2.0 * w0[i]).collect();
    let t2_off = &t2 - &v.mul_radial(&diag2);
    let nl = &(&p(u, &wt) + &p(v, w_s)) - &p(v, w).scale(2.0);
    let rhs = &(&(&nl + &t1_off) + &t2_off) - &c.forcing_omega;

    let (ut, us) = (u.dtheta(), &st.u_s);
    let s_u = &(&(&(&(&p(&c.u_a, &ut) + &p(&c.v_a, us)) + &p(u, &c.u_a.dtheta())) + &p(v, &c.u_a_s)) + &p(u, &c.v_a))
        + &p(v, &c.u_a);
    let n_u = &(&p(u, &ut) + &p(v, us)) + &p(u, v);
    let q = (&(&s_u + &n_u) + &c.forcing_u).zero_mode();
    let q0: Vec<f64> = q.iter().zip(&em).map(|(x, e)| x / e).collect();
    (rhs, q0)
}

/// One Picard step: solves every mode with the previous iterate's couplings.
pub fn linear_step(c: &Coefficients, prev: &ErrorState, tg: &ThetaGrid) -> Result<ErrorState> {
    let (rhs, q0) = step_rhs(c, prev, tg);
    solve_modes(c, &rhs, &q0)
}

/// Solves all modes for given right-hand sides (boundary rows are zeroed).
pub fn solve_modes(c: &Coefficients, rhs: &Field, q0: &[f64]) -> Result<ErrorState> {
    let grid = &c.grid;
    let n = grid.len();
    let k_max = c.k_max();
    let cols: Vec<Result<Vec<C64>>> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut b = rhs.mode(k);
            for i in [0, 1, n - 2, n - 1] {
                b[i] = ZERO;
            }
            let lu = mode_matrix(c, k).factor()?;
            if lu.condition_estimate > 1e14 {
                return Err(Error::Singular { condition_estimate: lu.condition_estimate });
            }
            Ok(lu.solve(&b))
        })
        .collect();
    let mut phi = Field::zeros(grid, k_max);
    for (k, col) in cols.into_iter().enumerate() {
        phi.set_mode(k + 1, &col?);
    }
    let mut b: Vec<C64> = q0.iter().map(|&x| C64::new(x, 0.0)).collect();
    b[0] = ZERO;
    b[n - 1] = ZERO;
    let u0: Vec<f64> = zero_mode_matrix(c).factor()?.solve(&b).iter().map(|z| z.re).collect();
    Ok(ErrorState::from_parts(&phi, &u0))
}

/// Weighted components of the energy `‖Φ‖_E²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `‖(e^sΔ_sΦ_1)_s‖²`.
    pub mode1_w_s: f64,
    /// `‖(e^sΔ_sΦ_1)_θ‖²`.
    pub mode1_w_theta: f64,
    /// Third and fourth normal derivatives.
    pub high_normal: f64,
    /// Weighted second-to-fourth derivatives of all modes.
    pub main: f64,
    /// `ε^20, ε^18, ε^16, ε^6`-weighted sum.
    pub total: f64,
}

impl NormReport {
    pub fn norm(&self) -> f64 {
        self.total.sqrt()
    }
}

/// `‖Φ‖_E²` with Parseval in θ and Simpson in s.
pub fn energy_norm(phi: &Field, epsilon: f64) -> NormReport {
    let grid = phi.grid();
    let s = grid.nodes();
    let d: Vec<Field> = (0..=4).map(|m| phi.d_comp(m)).collect();
    let e1 = exp_s(grid, 1.0);
    let e2 = exp_s(grid, 2.0);
    let quad = |f: &dyn Fn(usize) -> f64| simpson(s, &(0..s.len()).map(f).collect::<Vec<_>>());
    let k_max = phi.k_max();

    let g1: Vec<C64> = (0..s.len()).map(|i| (d[2].c(i, 1) - d[0].c(i, 1)) * e1[i]).collect();
    let g1s = grid.diff().d(1).apply(&g1);
    let mode1_w_s = PI * quad(&|i| g1s[i].norm_sqr());
    let mode1_w_theta = PI * quad(&|i| g1[i].norm_sqr());

    let mut high_normal = 2.0 * PI * quad(&|i| d[3].c(i, 0).re.powi(2) + d[4].c(i, 0).re.powi(2));
    let mut main = 2.0 * PI * quad(&|i| d[2].c(i, 0).re.powi(2) + d[1].c(i, 0).re.powi(2));
    for k in 1..=k_max {
        let kk = (k * k) as f64;
        high_normal += PI * quad(&|i| e1[i] * (kk * d[3].c(i, k).norm_sqr() + d[4].c(i, k).norm_sqr()));
        let (w, a, b, c) = if k == 1 { (&e1, 1.0, 1.0, 1.0) } else { (&e2, kk.powi(4), kk.powi(3), kk.powi(2)) };
        main += PI
            * quad(&|i| w[i] * (a * d[0].c(i, k).norm_sqr() + b * d[1].c(i, k).norm_sqr() + c * d[2].c(i, k).norm_sqr()));
    }
    let total = epsilon.powi(20) * mode1_w_s
        + epsilon.powi(18) * mode1_w_theta
        + epsilon.powi(16) * high_normal
        + epsilon.powi(6) * main;
    NormReport { mode1_w_s, mode1_w_theta, high_normal, main, total }
}

/// One Picard iteration in the convergence history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖Φ_n − Φ_{n−1}‖_E`.
    pub update: f64,
    pub relative_update: f64,
    pub energy: NormReport,
    /// `update_n / update_{n−1}`.
    pub contraction: Option<f64>,
    pub sup_u: f64,
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub state: ErrorState,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

/// Iterates until the relative energy update drops below `cfg.tol`.
pub fn picard_run(c: &Coefficients, tg: &ThetaGrid, cfg: &ErrorConfig) -> Result<PicardOutcome> {
    let mut state = ErrorState::zero(&c.grid, c.k_max());
    let mut history: Vec<IterationRecord> = Vec::new();
    for it in 1..=cfg.max_iter {
        let next = linear_step(c, &state, tg)?;
        let update = energy_norm(&(&next.phi - &state.phi), c.epsilon).norm();
        let energy = energy_norm(&next.phi, c.epsilon);
        let relative_update = if energy.total > 0.0 { update / energy.norm() } else { 0.0 };
        let contraction = history.last().filter(|h| h.update > 0.0).map(|h| update / h.update);
        if !update.is_finite() {
            return Err(Error::NonConvergence { stage: "error solve".into(), iterations: it, last_update: update });
        }
        history.push(IterationRecord { iteration: it, update, relative_update, energy, contraction, sup_u: next.u.sup_abs(tg) });
        state = next;
        if relative_update < cfg.tol {
            return Ok(PicardOutcome { state, history, converged: true });
        }
    }
    Ok(PicardOutcome { state, history, converged: false })
}

/// [`picard_run`] with regime checks; nonconvergence becomes an error.
pub fn picard_solve(apx: &ApproxSolution, cfg: &ErrorConfig) -> Result<(Coefficients, PicardOutcome)> {
    if apx.epsilon > cfg.eps_max || apx.delta > cfg.delta_max {
        return Err(Error::InvalidRegime(format!(
            "error solve needs ε ≤ {} and δ ≤ {}, got {} and {}",
            cfg.eps_max, cfg.delta_max, apx.epsilon, apx.delta
        )));
    }
    let c = transport_coefficients(apx, &cfg.grid()?)?;
    let out = picard_run(&c, &apx.tg, cfg)?;
    if !out.converged {
        let last = out.history.last().map(|h| h.relative_update).unwrap_or(f64::NAN);
        return Err(Error::NonConvergence { stage: "error solve".into(), iterations: out.history.len(), last_update: last });
    }
    Ok((c, out))
}

/// Discrete identities of an iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `sup |û_θ + v̂_s + v̂|`.
    pub incompressibility: f64,
    /// `sup |Φ_s − e^sû| + sup |Φ_θ + e^sv̂|`.
    pub stream_consistency: f64,
    /// `sup |(e^{2s}v̂_{1,s})_s + e^s(Δ_sΦ_1)_θ|` relative to the sup of the right side.
    pub mode1_identity: f64,
    /// `max_s |e^{2s}v̂_1(s)| / ‖(e^{2s}v̂_{1,s})_s‖_{L²(0,S_max)}`.
    pub embedding_constant: f64,
    /// Zero-mode balance substituted back, interior rows.
    pub zero_mode_residual: f64,
}

pub fn identity_checks(c: &Coefficients, st: &ErrorState, tg: &ThetaGrid) -> IdentityReport {
    let grid = st.grid();
    let n = grid.len();
        let e1 = exp_s(grid, 1.0);
    let e2 = exp_s(grid, 2.0);
    let div = &(&st.u.dtheta() + &st.v_s) + &st.v;
    let incompressibility = div.sup_abs(tg);
    let a = &st.phi.d_comp(1) - &st.u.mul_radial(&e1);
    let b = &st.phi.dtheta() + &st.v.mul_radial(&e1);
    let stream_consistency = a.sup_abs(tg) + b.sup_abs(tg);

    let (v1, v1s, v1ss) = (st.v.mode(1), st.v_s.mode(1), st.v_ss().mode(1));
    let lhs: Vec<C64> = (0..n).map(|i| (v1s[i] * 2.0 + v1ss[i]) * e2[i]).collect();
    let rhs: Vec<C64> = (0..n).map(|i| -C64::new(0.0, 1.0) * st.w.c(i, 1) * e1[i]).collect();
    let scale = rhs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let diff = lhs.iter().zip(&rhs).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    let mode1_identity = if scale > 0.0 { diff / scale } else { diff };

    let s = grid.nodes();
    let sq: Vec<f64> = rhs.iter().map(|z| z.norm_sqr()).collect();
    let norm = simpson(s, &sq).sqrt();
    let sup = (0..n).map(|i| e2[i] * v1[i].norm()).fold(0.0, f64::max);
    let embedding_constant = if norm > 0.0 { sup / norm } else { 0.0 };

    let (_, q0) = step_rhs(c, st, tg);
    let u0 = st.u.zero_mode();
    let u0pp = grid.diff().d(2).apply(&u0);
    let eps2 = c.epsilon * c.epsilon;
    let zero_mode_residual = (1..n - 1).map(|i| (eps2 * (u0pp[i] - u0[i]) - q0[i]).abs()).fold(0.0, f64::max);
    IdentityReport { incompressibility, stream_consistency, mode1_identity, embedding_constant, zero_mode_residual }
}

/// Far-field comparison with the limiting swirl.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldReport {
    /// Measured zero-mode correction `c₁` in `(ω̃ + c₁)/r`.
    pub c1: f64,
    pub radii: Vec<f64>,
    pub e_u: Vec<f64>,
    pub e_v: Vec<f64>,
    pub e_u_r2: Vec<f64>,
    pub e_v_r2: Vec<f64>,
    /// Fitted exponents of `e_u`, `e_v` over `r ∈ [2, 16]`.
    pub decay_u: f64,
    pub decay_v: f64,
    /// `4e_v(2) / (εδ)`.
    pub bound_constant_v: f64,
}

/// `e_u = sup_θ |u^ε − (ω̃ + c₁)/r − χu_p^{(0)}|` and `e_v = sup_θ |v^ε|`.
pub fn verify_far_field(apx: &ApproxSolution, c: &Coefficients, st: &ErrorState) -> FarFieldReport {
    let tg = &apx.tg;
    let grid = &c.grid;
    let r = radii_of(grid);
    let n = r.len();
    let u = &c.u_a + &st.u;
    let v = &c.v_a + &st.v;
    let lead = apx.leading_layer_on(grid);
    let u0 = u.zero_mode();
    let l0 = lead.zero_mode();
    let far: Vec<usize> = (0..n).filter(|&i| r[i] >= 16.0).collect();
    let c1 = far.iter().map(|&i| r[i] * (u0[i] - l0[i]) - apx.tilde_omega).sum::<f64>() / far.len().max(1) as f64;
    let mut eu = &u - &lead;
    for i in 0..n {
        eu.add_c(i, 0, C64::new(-(apx.tilde_omega + c1) / r[i], 0.0));
    }
    let su = eu.sup_theta(tg);
    let sv = v.sup_theta(tg);
    let radii = vec![2.0, 4.0, 8.0, 16.0];
    let s: Vec<f64> = radii.iter().map(|x: &f64| x.ln()).collect();
    let it = Interp::new(grid.nodes(), &s);
    let e_u = it.apply(&su);
    let e_v = it.apply(&sv);
    let fit = |f: &[f64]| {
        let pts: Vec<(f64, f64)> =
            (0..n).filter(|&i| r[i] >= 2.0 - 1e-12 && r[i] <= 16.0 + 1e-12 && f[i] > 0.0).map(|i| (r[i].ln(), f[i].ln())).collect();
        if pts.len() < 2 {
            f64::NEG_INFINITY
        } else {
            fit_line(&pts).0
        }
    };
    let e_u_r2: Vec<f64> = e_u.iter().zip(&radii).map(|(e, r)| e * r * r).collect();
    let e_v_r2: Vec<f64> = e_v.iter().zip(&radii).map(|(e, r)| e * r * r).collect();
    let ed = apx.epsilon * apx.delta;
    let bound_constant_v = if ed > 0.0 { e_v_r2[0] / ed } else { 0.0 };
    FarFieldReport { c1, radii, decay_u: fit(&su), decay_v: fit(&sv), e_u, e_v, e_u_r2, e_v_r2, bound_constant_v }
}

/// One-dimensional Hardy inequality check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyCheck {
    /// `None` for the `s^{−2}` form, otherwise the exponential weight.
    pub alpha: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub passed: bool,
}

/// `∫ s^{−2}f² ≤ 4∫ f_s²` (`alpha = None`) or `∫ e^{αs}f² ≤ (4/α²)∫ e^{αs}f_s²`,
/// both over the sampled range starting at `s = 0`.
pub fn hardy_check(s: &[f64], f: &[f64], alpha: Option<f64>) -> Result<HardyCheck> {
    if s.len() != f.len() || s.len() < 11 || s[0] != 0.0 {
        return Err(Error::Precondition("samples must start at s = 0 with at least 11 nodes".into()));
    }
    let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let needs_zero = alpha.is_none_or(|a| a < 0.0);
    if needs_zero && f[0].abs() > 1e-14 * scale.max(1.0) {
        return Err(Error::Precondition(format!("f(0) = {} must vanish", f[0])));
    }
    if alpha == Some(0.0) {
        return Err(Error::Precondition("alpha must be nonzero".into()));
    }
    let fs = crate::field_core::fd::DiffOp::new(s, 1).apply(f);
    let (lw, rw): (Vec<f64>, Vec<f64>) = match alpha {
        None => {
            let l = (0..s.len()).map(|i| if i == 0 { fs[0] * fs[0] } else { (f[i] / s[i]).powi(2) }).collect();
            (l, fs.iter().map(|x| 4.0 * x * x).collect())
        }
        Some(a) => {
            let l = (0..s.len()).map(|i| (a * s[i]).exp() * f[i] * f[i]).collect();
            (l, (0..s.len()).map(|i| 4.0 / (a * a) * (a * s[i]).exp() * fs[i] * fs[i]).collect())
        }
    };
    let quad = Integrator::new(s);
    let lhs = quad.total(&lw);
    let rhs = quad.total(&rw);
    let ratio = if rhs > 0.0 { lhs / rhs } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(HardyCheck { alpha, lhs, rhs, ratio, passed: ratio <= 1.0 + 1e-8 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tg() -> ThetaGrid {
        ThetaGrid::new(4, 12).unwrap()
    }

    #[test]
    fn zero_forcing_converges_to_zero() {
        let cfg = ErrorConfig::default();
        let g = cfg.grid().unwrap();
        let c = Coefficients::rotation(&g, 0.1, 1.0, 4);
        let out = picard_run(&c, &tg(), &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.state.phi.max_coeff_abs(), 0.0);
    }

    #[test]
    fn energy_of_zero_is_zero() {
        let g = ErrorConfig::default().grid().unwrap();
        let r = energy_norm(&Field::zeros(&g, 4), 0.1);
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn hardy_closed_form() {
        let s: Vec<f64> = (0..8001).map(|i| 40.0 * i as f64 / 8000.0).collect();
        let f: Vec<f64> = s.iter().map(|x| x * (-x).exp()).collect();
        let h = hardy_check(&s, &f, None).unwrap();
        assert!((h.lhs - 0.5).abs() < 1e-10 && (h.rhs - 1.0).abs() < 1e-10, "{h:?}");
        assert!((h.ratio - 0.5).abs() < 1e-10);
        let z = vec![0.0; s.len()];
        assert_eq!(hardy_check(&s, &z, None).unwrap().ratio, 0.0);
        let bad: Vec<f64> = s.iter().map(|x| (-x).exp()).collect();
        assert!(matches!(hardy_check(&s, &bad, None), Err(Error::Precondition(_))));
        assert!(hardy_check(&s, &bad, Some(1.0)).unwrap().passed);
    }
}
