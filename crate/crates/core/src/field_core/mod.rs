//! Discrete fields on T × radial grids and the polar calculus built on them.

pub mod banded;
pub mod fd;
mod field;
mod grid;
pub mod quad;
pub mod smooth;

use std::io::Write;

pub use field::FourierRadialField;
pub use grid::{CoordKind, RadialGrid, Stretch, ThetaGrid};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deriv {
    Theta,
    R,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coords {
    Polar,
    LogRadial,
}

fn log_weights(f: &FourierRadialField, p: i32) -> Vec<f64> {
    match f.grid().kind {
        CoordKind::R => f.nodes().iter().map(|r| r.powi(p)).collect(),
        _ => f.nodes().iter().map(|s| (p as f64 * s).exp()).collect(),
    }
}

/// `∂_θ`, `∂_r` or `∂_s` of a field on an r- or s-grid.
pub fn differentiate(f: &FourierRadialField, which: Deriv) -> Result<FourierRadialField> {
    match (which, f.grid().kind) {
        (Deriv::Theta, _) => Ok(f.dtheta()),
        (_, CoordKind::Zeta) => Err(Error::GridMismatch("use the layer variable directly on zeta grids".into())),
        (Deriv::R, CoordKind::R) => Ok(f.d_coord(1)),
        (Deriv::S, CoordKind::S) => Ok(f.d_comp(1)),
        (Deriv::S, CoordKind::R) => Ok(f.d_comp(1)),
        (Deriv::R, CoordKind::S) => Ok(f.d_comp(1).mul_radial(&log_weights(f, -1))),
    }
}

/// Polar Laplacian, or `Δ_s = ∂_θ² + ∂_s²` in log-radial coordinates.
pub fn laplacian(f: &FourierRadialField, coords: Coords) -> Result<FourierRadialField> {
    if f.grid().kind == CoordKind::Zeta {
        return Err(Error::GridMismatch("laplacian needs an r- or s-grid".into()));
    }
    let ds = &f.d_comp(2) + &f.dtheta().dtheta();
    Ok(match coords {
        Coords::LogRadial => ds,
        Coords::Polar => ds.mul_radial(&log_weights(f, -2)),
    })
}

/// Stream function, velocity and vorticity of a planar flow.
#[derive(Clone, Debug)]
pub struct StreamState {
    pub phi: FourierRadialField,
    pub u: FourierRadialField,
    pub v: FourierRadialField,
    pub vorticity: FourierRadialField,
}

/// Divergence `∂_θu + ∂_r(rv)` of a velocity on an r- or s-grid.
pub fn divergence(u: &FourierRadialField, v: &FourierRadialField) -> Result<FourierRadialField> {
    u.check_compatible(v)?;
    let rv = v.mul_radial(&log_weights(v, 1));
    Ok(&u.dtheta() + &differentiate(&rv, Deriv::R)?)
}

/// Builds `Φ = ∫_1^r u`, checks `∂_θu + ∂_r(rv) = 0`, and forms the vorticity
/// `(v_θ − (ru)_r)/r`.
pub fn stream_from_velocity(
    u: &FourierRadialField,
    v: &FourierRadialField,
    tg: &ThetaGrid,
    div_tol: f64,
) -> Result<StreamState> {
    if u.grid().kind == CoordKind::Zeta {
        return Err(Error::GridMismatch("stream function needs an r- or s-grid".into()));
    }
    let div = divergence(u, v)?;
    let measured = div.sup_abs(tg);
    if measured > div_tol {
        return Err(Error::Inconsistent { measured, tolerance: div_tol });
    }
    let phi = match u.grid().kind {
        CoordKind::R => u.integrate_from_start(),
        _ => u.mul_radial(&log_weights(u, 1)).integrate_from_start(),
    };
    let r = log_weights(u, 1);
    let ru = u.mul_radial(&r);
    let vort = (&v.dtheta() - &differentiate(&ru, Deriv::R)?).mul_radial(&log_weights(u, -1));
    Ok(StreamState { phi, u: u.clone(), v: v.clone(), vorticity: vort })
}

/// Momentum residuals of steady Navier-Stokes with viscosity `nu`, each
/// multiplied by r:
///
/// `R_u = u u_θ + r v u_r + u v + p_θ − ν(u_θθ/r + r u_rr + u_r + 2v_θ/r − u/r)`,
/// `R_v = u v_θ + r v v_r − u² + r p_r − ν(v_θθ/r + r v_rr + v_r − 2u_θ/r − v/r)`.
pub fn ns_residual(
    u: &FourierRadialField,
    v: &FourierRadialField,
    p: &FourierRadialField,
    nu: f64,
    tg: &ThetaGrid,
) -> Result<(FourierRadialField, FourierRadialField)> {
    u.check_compatible(v)?;
    u.check_compatible(p)?;
    if u.grid().kind != CoordKind::R {
        return Err(Error::GridMismatch("residual evaluation expects an r-grid".into()));
    }
    let r = u.nodes().to_vec();
    let inv_r: Vec<f64> = r.iter().map(|x| 1.0 / x).collect();
    let (ut, vt) = (u.dtheta(), v.dtheta());
    let (ur, vr) = (u.d_coord(1), v.d_coord(1));
    let (urr, vrr) = (u.d_coord(2), v.d_coord(2));
    let rv = v.mul_radial(&r);
    let mut ru = &u.product(&ut, tg) + &rv.product(&ur, tg);
    ru = &ru + &u.product(v, tg);
    ru = &ru + &p.dtheta();
    let mut lu = &(&ut.dtheta() + &vt.scale(2.0)) - u;
    lu = &lu.mul_radial(&inv_r) + &(&urr.mul_radial(&r) + &ur);
    ru.axpy(-nu, &lu);
    let mut rvv = &u.product(&vt, tg) + &rv.product(&vr, tg);
    rvv = &rvv - &u.product(u, tg);
    rvv = &rvv + &p.d_coord(1).mul_radial(&r);
    let mut lv = &(&vt.dtheta() - &ut.scale(2.0)) - v;
    lv = &lv.mul_radial(&inv_r) + &(&vrr.mul_radial(&r) + &vr);
    rvv.axpy(-nu, &lv);
    Ok((ru, rvv))
}

/// Seventeen significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

fn coord_name(kind: CoordKind) -> &'static str {
    match kind {
        CoordKind::R => "r",
        CoordKind::S => "s",
        CoordKind::Zeta => "zeta",
    }
}

/// Nodal dump with header `theta,<coord>,value`.
pub fn write_nodal_csv(f: &FourierRadialField, tg: &ThetaGrid, mut w: impl Write) -> Result<()> {
    writeln!(w, "theta,{},value", coord_name(f.grid().kind))?;
    let nodal = f.to_nodal(tg);
    let th = tg.nodes();
    for (i, &x) in f.nodes().iter().enumerate() {
        for (j, &t) in th.iter().enumerate() {
            writeln!(w, "{},{},{}", fmt_f64(t), fmt_f64(x), fmt_f64(nodal[i * tg.m() + j]))?;
        }
    }
    Ok(())
}

/// Per-mode dump with header `mode,kind,<coord>,value`.
pub fn write_modes_csv(f: &FourierRadialField, mut w: impl Write) -> Result<()> {
    writeln!(w, "mode,kind,{},value", coord_name(f.grid().kind))?;
    for k in 0..=f.k_max() {
        for kind in ["cos", "sin"] {
            if k == 0 && kind == "sin" {
                continue;
            }
            for (i, &x) in f.nodes().iter().enumerate() {
                let (a, b) = f.cos_sin(i, k);
                let val = if kind == "cos" { a } else { b };
                writeln!(w, "{},{},{},{}", k, kind, fmt_f64(x), fmt_f64(val))?;
            }
        }
    }
    Ok(())
}
