//! Limiting circulation constant and the fast-rotation rescaling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::{ns_residual, FourierRadialField, ThetaGrid};

/// Physical and asymptotic inputs.
///
/// Boundary rotation is `ω + δ f(θ)` with
/// `f = f_cos[0] + Σ_{k≥1} (f_cos[k] cos kθ + f_sin[k] sin kθ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub omega: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub f_cos: Vec<f64>,
    pub f_sin: Vec<f64>,
    pub order: usize,
    pub lambda: Option<f64>,
}

impl Params {
    /// Parameters with `ε` given directly.
    pub fn new(omega: f64, delta: f64, epsilon: f64, f_cos: Vec<f64>, f_sin: Vec<f64>, order: usize) -> Result<Self> {
        let p = Self { omega, delta, epsilon, f_cos, f_sin, order, lambda: None };
        p.validate()?;
        Ok(p)
    }

    /// Parameters in rescaling mode: `ε = λ^{-1/2}`.
    pub fn with_lambda(omega: f64, delta: f64, lambda: f64, f_cos: Vec<f64>, f_sin: Vec<f64>, order: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParam("lambda must be positive".into()));
        }
        let p = Self { omega, delta, epsilon: lambda.powf(-0.5), f_cos, f_sin, order, lambda: Some(lambda) };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidParam("omega must be positive".into()));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParam("epsilon must be positive".into()));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParam("delta must be nonnegative".into()));
        }
        if self.f_sin.first().is_some_and(|&b| b != 0.0) {
            return Err(Error::InvalidParam("f_sin[0] must be 0".into()));
        }
        if self.f_cos.iter().chain(&self.f_sin).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("f coefficients must be finite".into()));
        }
        if let Some(l) = self.lambda {
            if (self.epsilon - l.powf(-0.5)).abs() > 1e-15 * self.epsilon {
                return Err(Error::InvalidParam("epsilon must equal lambda^(-1/2)".into()));
            }
        }
        Ok(())
    }

    /// Highest Fourier index present in `f`.
    pub fn f_modes(&self) -> usize {
        self.f_cos.len().max(self.f_sin.len()).saturating_sub(1)
    }

    pub fn f_coeff(&self, k: usize) -> (f64, f64) {
        let a = self.f_cos.get(k).copied().unwrap_or(0.0);
        let b = if k == 0 { 0.0 } else { self.f_sin.get(k).copied().unwrap_or(0.0) };
        (a, b)
    }

    pub fn f_eval(&self, theta: f64) -> f64 {
        (0..=self.f_modes())
            .map(|k| {
                let (a, b) = self.f_coeff(k);
                a * (k as f64 * theta).cos() + b * (k as f64 * theta).sin()
            })
            .sum()
    }

    /// `∫_0^{2π} f`.
    pub fn f_integral(&self) -> f64 {
        2.0 * PI * self.f_coeff(0).0
    }

    /// `∫_0^{2π} f²` by Parseval.
    pub fn f_sq_integral(&self) -> f64 {
        let a0 = self.f_coeff(0).0;
        let tail: f64 = (1..=self.f_modes())
            .map(|k| {
                let (a, b) = self.f_coeff(k);
                a * a + b * b
            })
            .sum();
        2.0 * PI * (a0 * a0 + 0.5 * tail)
    }
}

/// Limiting circulation `ω̃` with the three terms of `ω̃²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BWResult {
    pub tilde_omega: f64,
    pub omega_sq_term: f64,
    pub cross_term: f64,
    pub delta_sq_term: f64,
}

/// `ω̃² = ω² + (ωδ/π)∫f + (δ²/2π)∫f²`, evaluated from the coefficients.
pub fn compute_tilde_omega(p: &Params) -> Result<BWResult> {
    let omega_sq_term = p.omega * p.omega;
    let cross_term = p.omega * p.delta / PI * p.f_integral();
    let delta_sq_term = p.delta * p.delta / (2.0 * PI) * p.f_sq_integral();
    let rad = omega_sq_term + cross_term + delta_sq_term;
    if !(rad > 0.0) {
        return Err(Error::InvalidRegime(format!("mean square rotation {rad:.3e} is not positive")));
    }
    Ok(BWResult { tilde_omega: rad.sqrt(), omega_sq_term, cross_term, delta_sq_term })
}

/// Velocity and pressure on an r-grid.
#[derive(Clone, Debug)]
pub struct FlowFields {
    pub u: FourierRadialField,
    pub v: FourierRadialField,
    pub p: FourierRadialField,
}

/// Maps a unit-rotation solution at `ε = λ^{-1/2}` to the unit-viscosity
/// problem with rotation `λ(ω + δf)`: velocity times λ, pressure times λ².
pub fn rescale_lambda(sol: &FlowFields, lambda: f64) -> FlowFields {
    FlowFields { u: sol.u.scale(lambda), v: sol.v.scale(lambda), p: sol.p.scale(lambda * lambda) }
}

/// Outcome of the residual identity check for a rescaled solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleCheck {
    pub lambda: f64,
    /// `sup |R(λu, λ²p; ν=1) − λ² R(u, p; ν=λ^{-1})| / λ²`.
    pub identity_error: f64,
    pub unit_residual_sup: f64,
    pub rescaled_residual_sup: f64,
}

pub fn check_rescaling(sol: &FlowFields, lambda: f64, tg: &ThetaGrid) -> Result<RescaleCheck> {
    let nu = 1.0 / lambda;
    let (ru, rv) = ns_residual(&sol.u, &sol.v, &sol.p, nu, tg)?;
    let sc = rescale_lambda(sol, lambda);
    let (su, sv) = ns_residual(&sc.u, &sc.v, &sc.p, 1.0, tg)?;
    let l2 = lambda * lambda;
    let du = &su - &ru.scale(l2);
    let dv = &sv - &rv.scale(l2);
    Ok(RescaleCheck {
        lambda,
        identity_error: du.sup_abs(tg).max(dv.sup_abs(tg)) / l2,
        unit_residual_sup: ru.sup_abs(tg).max(rv.sup_abs(tg)),
        rescaled_residual_sup: su.sup_abs(tg).max(sv.sup_abs(tg)),
    })
}
