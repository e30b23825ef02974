//! Composite approximate solution and its Navier-Stokes residual.
//!
//! `u^a = u_E + χ(u_L + u_fix) + ε^N h`, `v^a = v_E + χ(v_L + v_fix)`,
//! `p^a = p_E + χ² p_L`, with `r v_L = G = ε∫_ζ^∞ ∂_θu_L` and
//! `ε^N ∂_θh = −χ′G`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler_hierarchy::{fit_line, OuterField};
use crate::field_core::quad::Interp;
use crate::field_core::smooth::{smooth_step, Jet};
use crate::field_core::{CoordKind, FourierRadialField as Field, RadialGrid, Stretch, ThetaGrid};
use crate::prandtl::{wall_data, Hierarchy, Kappa};

const BINOM: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];

/// `χ(r) = 1 − S(r − 2)`: one on `[1, 2]`, zero on `[3, ∞)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CutoffChi;

impl CutoffChi {
    pub fn jet(&self, r: Jet) -> Jet {
        Jet::constant(1.0) - smooth_step(r - Jet::constant(2.0))
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(Jet::constant(r)).value()
    }

    /// Transition mirrored about `r = 2.5`.
    pub fn mirrored(&self, r: f64) -> f64 {
        self.value(5.0 - r)
    }
}

pub fn build_chi() -> CutoffChi {
    CutoffChi
}

/// Solves `∂_θh = K` mode by mode with `h_0 = 0`.
pub fn divergence_corrector(k: &Field) -> Result<Field> {
    let mean = k.zero_mode().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if mean > 1e-9 {
        return Err(Error::CorrectorInfeasible { mean });
    }
    Ok(k.dtheta_inv())
}

/// Radial derivatives `[f, f_r, f_rr, f_rrr]` of fields at a set of radii.
pub type RJet = [Field; 4];

/// Composite fields and their radial derivatives at a set of radii.
#[derive(Clone, Debug)]
pub struct PointJets {
    pub grid: Arc<RadialGrid>,
    pub radii: Vec<f64>,
    pub u: RJet,
    pub v: RJet,
    /// `[p, p_r]`.
    pub p: [Field; 2],
    pub u_outer: Field,
    pub v_outer: Field,
    /// `ε^N h`.
    pub h: Field,
    /// `χ′G`, the divergence left without the corrector.
    pub chi_prime_g: Field,
}

/// Approximate solution on an r-grid, with its parts.
#[derive(Clone, Debug)]
pub struct ApproxFields {
    pub u: Field,
    pub v: Field,
    pub p: Field,
    pub u_outer: Field,
    pub v_outer: Field,
    pub h: Field,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssemblyConfig {
    pub r_max: f64,
    pub n_r: usize,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self { r_max: 64.0, n_r: 600 }
    }
}

#[derive(Clone, Debug)]
pub struct ApproxSolution {
    pub epsilon: f64,
    pub delta: f64,
    pub order: usize,
    pub tilde_omega: f64,
    pub tg: ThetaGrid,
    /// `Σ_{k≤N+1} ε^k u_e^{(k)}`.
    pub outer_u: OuterField,
    pub outer_v: OuterField,
    /// Bernoulli pressure of the summed outer flow.
    pub outer_p: OuterField,
    pub zeta: Arc<RadialGrid>,
    /// `u_L = Σ_{k≤N} ε^k ũ_p^{(k)}` and its ζ-derivatives.
    layer_u: RJet,
    /// `G = r v_L` and its ζ-derivatives.
    layer_g: RJet,
    /// `p_L = Σ_{k≤N} ε^{k+1} p_p^{(k+1)}` and `∂_ζ p_L`.
    layer_p: [Field; 2],
    /// `ε^{N+1} u_e^{(N+1)}(θ, 1)`.
    wall_fix: Vec<C64>,
    /// Target wall velocity `ω + δf`.
    pub wall_target: Vec<C64>,
    /// Leading layer `u_p^{(0)}` on the ζ-grid.
    pub leading: Field,
    kappa: Kappa,
    chi: CutoffChi,
    pub grid: Arc<RadialGrid>,
    pub fields: ApproxFields,
}

fn field_rows(grid: &Arc<RadialGrid>, k_max: usize, f: impl Fn(usize, f64) -> Vec<C64>) -> Field {
    let mut out = Field::zeros(grid, k_max);
    for (i, &r) in grid.nodes().iter().enumerate() {
        out.row_mut(i).copy_from_slice(&f(i, r));
    }
    out
}

/// `(s f)^{(m)} = Σ_j C(m, j) s^{(j)} f^{(m−j)}` for `m ≤ mmax`, with `s`
/// given by its derivatives at each node.
fn leibniz(s: &[[f64; 5]], shift: usize, f: &[Field], mmax: usize) -> Vec<Field> {
    (0..=mmax)
        .map(|m| {
            let mut acc = Field::zeros(f[0].grid(), f[0].k_max());
            for j in 0..=m {
                let w: Vec<f64> = s.iter().map(|d| BINOM[m][j] * d[j + shift]).collect();
                acc = &acc + &f[m - j].mul_radial(&w);
            }
            acc
        })
        .collect()
}

fn into4(v: Vec<Field>) -> RJet {
    v.try_into().unwrap_or_else(|_| unreachable!())
}

impl ApproxSolution {
    pub fn assemble(h: &Hierarchy, tg: &ThetaGrid, cfg: &AssemblyConfig) -> Result<Self> {
        let n = h.params.order;
        let eps = h.params.epsilon;
        if h.layers.len() != n + 1 || h.euler.len() != n + 1 {
            return Err(Error::Dependency(format!(
                "order {n} needs layers 0..={n} and outer orders 1..={}, got {} and {}",
                n + 1,
                h.layers.len(),
                h.euler.len()
            )));
        }
        let k_max = tg.k_max();
        let stack = h.stack();
        let mut outer_u = OuterField::zero(k_max);
        let mut outer_v = OuterField::zero(k_max);
        for k in 0..=n + 1 {
            outer_u = outer_u.add(&stack.u(k).scale(eps.powi(k as i32)));
            outer_v = outer_v.add(&stack.v(k).scale(eps.powi(k as i32)));
        }
        let outer_p = outer_u.product(&outer_u, tg).add(&outer_v.product(&outer_v, tg)).scale(-0.5);

        let zeta = h.grid.clone();
        let mut u_l = Field::zeros(&zeta, k_max);
        let mut p_l = Field::zeros(&zeta, k_max);
        for (k, l) in h.layers.iter().enumerate() {
            u_l.axpy(eps.powi(k as i32), &l.u_p);
            p_l.axpy(eps.powi(k as i32 + 1), &l.p_p_next);
        }
        let g = u_l.dtheta().integrate_to_end().scale(eps);
        let layer_u = into4((0..4).map(|m| u_l.d_coord(m)).collect());
        let layer_g = into4((0..4).map(|m| g.d_coord(m)).collect());
        let layer_p = [p_l.clone(), p_l.d_coord(1)];
        let wall_fix: Vec<C64> = stack.u(n + 1).coeffs_at(1.0, 0).iter().map(|c| c * eps.powi(n as i32 + 1)).collect();
        let mut wall_target = wall_data(&h.params, h.tilde_omega(), k_max)?;
        wall_target[0] += h.tilde_omega();

        let grid = Arc::new(RadialGrid::geometric_r(cfg.r_max, cfg.n_r)?);
        let mut out = Self {
            epsilon: eps,
            delta: h.params.delta,
            order: n,
            tilde_omega: h.tilde_omega(),
            tg: tg.clone(),
            outer_u,
            outer_v,
            outer_p,
            zeta,
            layer_u,
            layer_g,
            layer_p,
            wall_fix,
            wall_target,
            leading: h.layers[0].u_p.clone(),
            kappa: Kappa::new(),
            chi: build_chi(),
            grid: grid.clone(),
            fields: ApproxFields {
                u: Field::zeros(&grid, k_max),
                v: Field::zeros(&grid, k_max),
                p: Field::zeros(&grid, k_max),
                u_outer: Field::zeros(&grid, k_max),
                v_outer: Field::zeros(&grid, k_max),
                h: Field::zeros(&grid, k_max),
            },
        };
        let j = out.jets_on(&grid)?;
        out.fields = ApproxFields {
            u: j.u[0].clone(),
            v: j.v[0].clone(),
            p: j.p[0].clone(),
            u_outer: j.u_outer,
            v_outer: j.v_outer,
            h: j.h,
        };
        Ok(out)
    }

    pub fn k_max(&self) -> usize {
        self.tg.k_max()
    }

    /// Radii `1 + εζ_j` of the layer nodes.
    pub fn layer_radii(&self) -> Vec<f64> {
        self.zeta.nodes().iter().map(|z| 1.0 + self.epsilon * z).collect()
    }

    /// Outer edge of the resolved layer, `1 + εZ`.
    pub fn layer_edge(&self) -> f64 {
        1.0 + self.epsilon * self.zeta.last()
    }

    /// Jets at arbitrary increasing radii starting at 1.
    pub fn jets_at(&self, radii: Vec<f64>) -> Result<PointJets> {
        let grid = Arc::new(RadialGrid::from_nodes(CoordKind::R, Stretch::Geometric, radii)?);
        self.jets_on(&grid)
    }

    /// Jets at the radii of an r- or s-grid (`r = e^s`); fields live on `grid`.
    pub fn jets_on(&self, grid: &Arc<RadialGrid>) -> Result<PointJets> {
        let radii: Vec<f64> = match grid.kind {
            CoordKind::R => grid.nodes().to_vec(),
            CoordKind::S => grid.nodes().iter().map(|s| s.exp()).collect(),
            CoordKind::Zeta => return Err(Error::GridMismatch("jets need an r- or s-grid".into())),
        };
        let eps = self.epsilon;
        let k_max = self.k_max();
        let zt: Vec<f64> = radii.iter().map(|r| (r - 1.0) / eps).collect();
        let interp = Interp::new(self.zeta.nodes(), &zt);
        let lift = |f: &Field, m: usize| f.resample(&interp, grid).scale(eps.powi(-(m as i32)));
        let ul: Vec<Field> = (0..4).map(|m| lift(&self.layer_u[m], m)).collect();
        let gl: Vec<Field> = (0..4).map(|m| lift(&self.layer_g[m], m)).collect();
        let pl: Vec<Field> = (0..2).map(|m| lift(&self.layer_p[m], m)).collect();

        let chi: Vec<[f64; 5]> = radii.iter().map(|&r| self.chi.jet(Jet::variable(r)).derivs()).collect();
        let rinv: Vec<Jet> = radii.iter().map(|&r| Jet::variable(r).recip()).collect();
        let chi_over_r: Vec<[f64; 5]> =
            radii.iter().zip(&rinv).map(|(&r, ri)| (self.chi.jet(Jet::variable(r)) * *ri).derivs()).collect();
        let chi_sq: Vec<[f64; 5]> = radii
            .iter()
            .map(|&r| {
                let c = self.chi.jet(Jet::variable(r));
                (c * c).derivs()
            })
            .collect();
        let zeta_jet = |r: f64| (Jet::variable(r) - Jet::constant(1.0)).scale(1.0 / eps);
        let kap: Vec<[f64; 5]> = radii.iter().map(|&r| self.kappa.jet(zeta_jet(r)).derivs()).collect();
        // K(ζ(r)) with K′ = κ, so ∂_r^m K = ε^{-1} ∂_r^{m-1} κ
        let big_k: Vec<[f64; 5]> = radii
            .iter()
            .zip(&kap)
            .map(|(&r, k)| {
                let mut d = [0.0; 5];
                d[0] = self.kappa.integral((r - 1.0) / eps);
                for m in 1..5 {
                    d[m] = k[m - 1] / eps;
                }
                d
            })
            .collect();

        let wall = field_rows(grid, k_max, |_, _| self.wall_fix.clone());
        let wall_t = wall.dtheta();
        let fix_u: Vec<Field> = (0..4).map(|m| wall.mul_radial(&kap.iter().map(|d| -d[m]).collect::<Vec<_>>())).collect();
        let fix_g: Vec<Field> =
            (0..4).map(|m| wall_t.mul_radial(&big_k.iter().map(|d| eps * d[m]).collect::<Vec<_>>())).collect();

        let outer = |f: &OuterField, m: usize| field_rows(grid, k_max, |i, _| f.coeffs_at(radii[i], m));
        let inner_u: Vec<Field> = (0..4).map(|m| &ul[m] + &fix_u[m]).collect();
        let inner_g: Vec<Field> = (0..4).map(|m| &gl[m] + &fix_g[m]).collect();
        let cu = leibniz(&chi, 0, &inner_u, 3);
        let cv = leibniz(&chi_over_r, 0, &inner_g, 3);
        let cp = leibniz(&chi_sq, 0, &pl, 1);
        let cg = leibniz(&chi, 1, &gl, 3);
        let h: Vec<Field> = cg.iter().map(|f| f.dtheta_inv().scale(-1.0)).collect();

        let u = into4((0..4).map(|m| &(&outer(&self.outer_u, m) + &cu[m]) + &h[m]).collect());
        let v = into4((0..4).map(|m| &outer(&self.outer_v, m) + &cv[m]).collect());
        let p = [&outer(&self.outer_p, 0) + &cp[0], &outer(&self.outer_p, 1) + &cp[1]];
        let (u_outer, v_outer) = (outer(&self.outer_u, 0), outer(&self.outer_v, 0));
        Ok(PointJets {
            grid: grid.clone(),
            radii,
            u,
            v,
            p,
            u_outer,
            v_outer,
            h: h[0].clone(),
            chi_prime_g: cg[0].clone(),
        })
    }

    /// `χ u_p^{(0)}((r − 1)/ε)` at the radii of an r- or s-grid.
    pub fn leading_layer_on(&self, grid: &Arc<RadialGrid>) -> Field {
        let radii = radii_of(grid);
        let zt: Vec<f64> = radii.iter().map(|r| (r - 1.0) / self.epsilon).collect();
        let f = self.leading.resample(&Interp::new(self.zeta.nodes(), &zt), grid);
        f.mul_radial(&radii.iter().map(|&r| self.chi.value(r)).collect::<Vec<_>>())
    }

    /// Residual at the layer nodes (no interpolation) and on the bulk grid.
    pub fn residual_report(&self) -> Result<ResidualReport> {
        let tg = &self.tg;
        let edge = self.layer_edge();
        let jl = self.jets_at(self.layer_radii())?;
        let rl = residual(&jl, self.epsilon, tg);
        let jb = self.jets_on(&self.grid)?;
        let rb = residual(&jb, self.epsilon, tg);
        let rr = self.grid.nodes();
        let bulk: Vec<usize> = (0..rr.len()).filter(|&i| rr[i] > edge).collect();

        let weighted = |f: &Field, idx: &mut dyn Iterator<Item = usize>| {
            let s = f.sup_theta(tg);
            let r = f.nodes();
            idx.map(|i| r[i].powi(4) * s[i]).fold(0.0, f64::max)
        };
        let nl = jl.grid.len();
        let sup_r4_ru = weighted(&rl.ru, &mut (0..nl)).max(weighted(&rb.ru, &mut bulk.iter().copied()));
        let sup_r4_rv = weighted(&rl.rv, &mut (0..nl)).max(weighted(&rb.rv, &mut bulk.iter().copied()));

        let far = |f: &Field, grid_r: &[f64]| {
            let s = f.sup_theta(tg);
            (0..grid_r.len()).filter(|&i| grid_r[i] > 3.5).map(|i| s[i]).fold(0.0, f64::max)
        };
        let support_violation = far(&rl.romega, jl.grid.nodes()).max(far(&rb.romega, rr));

        let div = |j: &PointJets| -> (f64, f64) {
            let d = divergence_of(j);
            let pre = &d - &j.h.dtheta();
            (d.sup_abs(tg), pre.sup_abs(tg))
        };
        let (dl, pl) = div(&jl);
        let (db, pb) = div(&jb);

        let bu = jl.u[0].row(0).iter().zip(&self.wall_target).map(|(a, b)| a - b).collect::<Vec<_>>();
        let boundary_u = sup_row(&bu, tg);
        let boundary_v = sup_row(jl.v[0].row(0), tg);

        let env_r: Vec<f64> = (0..13).map(|i| 1.0 + 0.25 * i as f64).collect();
        let je = self.jets_at(env_r.clone())?;
        let dl_e = &je.u[0] - &je.u_outer;
        let s = dl_e.sup_theta(tg);
        let envelope = [1.5, 2.5, 3.5]
            .iter()
            .map(|&r| {
                let i = env_r.iter().position(|&x| (x - r).abs() < 1e-12).unwrap_or(0);
                [r, s[i]]
            })
            .collect();

        Ok(ResidualReport {
            epsilon: self.epsilon,
            delta: self.delta,
            order: self.order,
            sup_r4_ru,
            sup_r4_rv,
            sup_r4: sup_r4_ru.max(sup_r4_rv),
            support_violation,
            divergence: dl.max(db),
            divergence_pre: pl.max(pb),
            boundary_u,
            boundary_v,
            envelope,
            fitted_eps_exponent: None,
        })
    }

    /// Residual on the radii of an r- or s-grid. Inside the layer the
    /// values come from the layer-node evaluation by cubic interpolation.
    pub fn residual_on(&self, grid: &Arc<RadialGrid>) -> Result<Residual> {
        let direct = residual(&self.jets_on(grid)?, self.epsilon, &self.tg);
        let lr = self.layer_radii();
        let rl = residual(&self.jets_at(lr.clone())?, self.epsilon, &self.tg);
        let radii = radii_of(grid);
        let inside: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] <= self.layer_edge()).collect();
        let targets: Vec<f64> = inside.iter().map(|&i| radii[i]).collect();
        let it = Interp::new(&lr, &targets);
        let mut out = direct;
        for (src, dst) in [(&rl.ru, &mut out.ru), (&rl.rv, &mut out.rv), (&rl.romega, &mut out.romega)] {
            for k in 0..=src.k_max() {
                let vals = it.apply(&src.mode(k));
                for (j, &i) in inside.iter().enumerate() {
                    dst.set_c(i, k, vals[j]);
                }
            }
        }
        Ok(out)
    }
}

/// Radii of an r- or s-grid's nodes.
pub fn radii_of(grid: &RadialGrid) -> Vec<f64> {
    match grid.kind {
        CoordKind::S => grid.nodes().iter().map(|s| s.exp()).collect(),
        _ => grid.nodes().to_vec(),
    }
}

fn sup_row(c: &[C64], tg: &ThetaGrid) -> f64 {
    let mut a = vec![0.0; tg.m_prod()];
    tg.to_prod_nodes(c, &mut a);
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `∂_θu + v + r v_r`.
pub fn divergence_of(j: &PointJets) -> Field {
    &(&j.u[0].dtheta() + &j.v[0]) + &j.v[1].mul_radial(&j.radii)
}

/// Momentum residuals multiplied by r, and their curl.
#[derive(Clone, Debug)]
pub struct Residual {
    pub ru: Field,
    pub rv: Field,
    /// `(1/r)∂_θR_v − ∂_rR_u`.
    pub romega: Field,
}

/// Residual of the steady polar Navier-Stokes equations with `ν = ε²`,
/// built from the plain momentum balances and their r-derivative.
pub fn residual(j: &PointJets, epsilon: f64, tg: &ThetaGrid) -> Residual {
    let nu = epsilon * epsilon;
    let r = &j.radii;
    let pw = |p: i32| r.iter().map(|x| x.powi(p)).collect::<Vec<f64>>();
    let (r1, r2, r3) = (pw(-1), pw(-2), pw(-3));
    let [u, ur, urr, urrr] = &j.u;
    let [v, vr, vrr, _] = &j.v;
    let [p, pr] = &j.p;
    let pr_ = |a: &Field, b: &Field| a.product(b, tg);
    let (ut, utt) = (u.dtheta(), u.dtheta().dtheta());
    let (vt, vtt) = (v.dtheta(), v.dtheta().dtheta());
    let (urt, uttr, vrt) = (ur.dtheta(), ur.dtheta().dtheta(), vr.dtheta());
    let pt = p.dtheta();
    let prt = pr.dtheta();

    // θ-momentum
    let a = &(&pr_(u, &ut) + &pr_(u, v)) + &pt;
    let b = &(&utt - u) + &vt.scale(2.0);
    let visc_u = &(&(urr + &ur.mul_radial(&r1)) + &b.mul_radial(&r2)) * nu;
    let ru = &(&a.mul_radial(&r1) + &pr_(v, ur)) - &visc_u;

    // r-momentum
    let c = &pr_(u, &vt) - &pr_(u, u);
    let d = &(&vtt - v) - &ut.scale(2.0);
    let visc_v = &(&(vrr + &vr.mul_radial(&r1)) + &d.mul_radial(&r2)) * nu;
    let rv = &(&(&c.mul_radial(&r1) + &pr_(v, vr)) + pr) - &visc_v;

    // ∂_r of the θ-momentum residual
    let a_r = &(&(&(&pr_(ur, &ut) + &pr_(u, &urt)) + &pr_(ur, v)) + &pr_(u, vr)) + &prt;
    let b_r = &(&uttr - ur) + &vrt.scale(2.0);
    let visc_ur = &(&(&(&(urrr + &urr.mul_radial(&r1)) - &ur.mul_radial(&r2)) + &b_r.mul_radial(&r2))
        - &b.mul_radial(&r3).scale(2.0))
        * nu;
    let ru_r = &(&(&(&a_r.mul_radial(&r1) - &a.mul_radial(&r2)) + &pr_(vr, ur)) + &pr_(v, urr)) - &visc_ur;
    let romega = &(&rv.dtheta() - &ru) - &ru_r.mul_radial(r);
    Residual { ru: ru.mul_radial(r), rv: rv.mul_radial(r), romega }
}

/// Residual diagnostics of an assembled solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub epsilon: f64,
    pub delta: f64,
    pub order: usize,
    #[serde(rename = "sup_r4_Ru")]
    pub sup_r4_ru: f64,
    #[serde(rename = "sup_r4_Rv")]
    pub sup_r4_rv: f64,
    pub sup_r4: f64,
    /// `sup_{r > 3.5} |R_ω|`.
    pub support_violation: f64,
    /// `sup |∂_θu^a + ∂_r(r v^a)|`.
    pub divergence: f64,
    /// Same without the corrector `ε^N h`.
    pub divergence_pre: f64,
    pub boundary_u: f64,
    pub boundary_v: f64,
    /// `(r, sup_θ |u^a − u_E|)` at r = 1.5, 2.5, 3.5.
    pub envelope: Vec<[f64; 2]>,
    pub fitted_eps_exponent: Option<f64>,
}

/// Fitted exponent of `sup r⁴|R|` against ε.
pub fn fit_eps_exponent(reports: &[ResidualReport]) -> Option<f64> {
    if reports.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.epsilon.ln(), r.sup_r4.ln())).collect();
    Some(fit_line(&pts).0)
}
