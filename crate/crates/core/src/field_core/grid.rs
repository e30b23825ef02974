//! Angular and radial grids.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::fd::DiffSet;
use super::quad::Integrator;
use crate::error::{Error, Result};

/// Uniform periodic θ nodes with trigonometric tables for a resolution grid
/// and a dealiased product grid.
#[derive(Clone, Debug)]
pub struct ThetaGrid {
    k_max: usize,
    m: usize,
    m_prod: usize,
    tab: Vec<C64>,
    tab_prod: Vec<C64>,
}

fn table(k_max: usize, m: usize) -> Vec<C64> {
    let mut t = Vec::with_capacity((k_max + 1) * m);
    for k in 0..=k_max {
        for j in 0..m {
            let a = 2.0 * PI * ((k * j) % m) as f64 / m as f64;
            t.push(C64::new(a.cos(), a.sin()));
        }
    }
    t
}

impl ThetaGrid {
    pub fn new(k_max: usize, m: usize) -> Result<Self> {
        if m < 2 * k_max + 2 {
            return Err(Error::InvalidParam(format!("theta nodes {m} < 2K+2 = {}", 2 * k_max + 2)));
        }
        let mut m_prod = (3 * k_max + 1).max(m);
        if m_prod % 2 == 1 {
            m_prod += 1;
        }
        Ok(Self { k_max, m, m_prod, tab: table(k_max, m), tab_prod: table(k_max, m_prod) })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn m_prod(&self) -> usize {
        self.m_prod
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| 2.0 * PI * j as f64 / self.m as f64).collect()
    }

    fn synth(tab: &[C64], m: usize, k_max: usize, c: &[C64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(m) {
            let mut s = c[0].re;
            for k in 1..=k_max {
                let e = tab[k * m + j];
                s += c[k].re * e.re - c[k].im * e.im;
            }
            *o = s;
        }
    }

    fn analyse(tab: &[C64], m: usize, k_max: usize, f: &[f64], c: &mut [C64]) {
        let mut s0 = 0.0;
        for &v in f.iter().take(m) {
            s0 += v;
        }
        c[0] = C64::new(s0 / m as f64, 0.0);
        for k in 1..=k_max {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &v) in f.iter().enumerate().take(m) {
                acc += tab[k * m + j].conj() * v;
            }
            c[k] = acc * (2.0 / m as f64);
        }
    }

    /// Coefficients to nodal values on the resolution grid.
    pub fn to_nodes(&self, c: &[C64], out: &mut [f64]) {
        Self::synth(&self.tab, self.m, self.k_max, c, out);
    }

    /// Nodal values on the resolution grid to coefficients.
    pub fn from_nodes(&self, f: &[f64], c: &mut [C64]) {
        Self::analyse(&self.tab, self.m, self.k_max, f, c);
    }

    pub fn to_prod_nodes(&self, c: &[C64], out: &mut [f64]) {
        Self::synth(&self.tab_prod, self.m_prod, self.k_max, c, out);
    }

    pub fn from_prod_nodes(&self, f: &[f64], c: &mut [C64]) {
        Self::analyse(&self.tab_prod, self.m_prod, self.k_max, f, c);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordKind {
    /// Physical radius on `[1, R_max]`.
    R,
    /// Log radius `s = ln r` on `[0, S_max]`.
    S,
    /// Boundary-layer variable on `[0, Z]`.
    Zeta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stretch {
    Uniform,
    /// Constant node ratio in r (uniform in ln r).
    Geometric,
    /// `x = X sinh(βt)/sinh(β)` for uniform `t`.
    Sinh { beta: f64 },
}

/// Radial grid carrying its derivative and integration operators.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub kind: CoordKind,
    pub stretch: Stretch,
    nodes: Vec<f64>,
    comp: Vec<f64>,
    diff: DiffSet,
    integ: Integrator,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.nodes == other.nodes
    }
}

impl RadialGrid {
    pub fn from_nodes(kind: CoordKind, stretch: Stretch, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 11 {
            return Err(Error::InvalidParam("radial grid needs at least 11 nodes".into()));
        }
        let start = match kind {
            CoordKind::R => 1.0,
            CoordKind::S | CoordKind::Zeta => 0.0,
        };
        if nodes[0] != start {
            return Err(Error::InvalidParam(format!("first node must be {start}")));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParam("radial nodes not strictly increasing".into()));
        }
        let mut comp: Vec<f64> = match kind {
            CoordKind::R => nodes.iter().map(|r| r.ln()).collect(),
            _ => nodes.clone(),
        };
        comp[0] = 0.0;
        let diff = DiffSet::new(&comp, 4);
        let integ = Integrator::with_ops(&comp, diff.d(1).clone(), diff.d(2).clone());
        Ok(Self { kind, stretch, nodes, comp, diff, integ })
    }

    /// r-grid with nodes `e^{s_i}`, `s_i` uniform on `[0, ln r_max]`.
    pub fn geometric_r(r_max: f64, n: usize) -> Result<Self> {
        if r_max <= 1.0 {
            return Err(Error::InvalidParam("R_max must exceed 1".into()));
        }
        let s_max = r_max.ln();
        let mut nodes: Vec<f64> = (0..n).map(|i| (s_max * i as f64 / (n - 1) as f64).exp()).collect();
        nodes[0] = 1.0;
        Self::from_nodes(CoordKind::R, Stretch::Geometric, nodes)
    }

    pub fn uniform_s(s_max: f64, n: usize) -> Result<Self> {
        if s_max <= 0.0 {
            return Err(Error::InvalidParam("S_max must be positive".into()));
        }
        let nodes = (0..n).map(|i| s_max * i as f64 / (n - 1) as f64).collect();
        Self::from_nodes(CoordKind::S, Stretch::Uniform, nodes)
    }

    pub fn zeta(z_max: f64, n: usize, beta: f64) -> Result<Self> {
        if z_max <= 0.0 || beta <= 0.0 {
            return Err(Error::InvalidParam("Z and stretching must be positive".into()));
        }
        let sb = beta.sinh();
        let nodes = (0..n).map(|i| z_max * (beta * i as f64 / (n - 1) as f64).sinh() / sb).collect();
        Self::from_nodes(CoordKind::Zeta, Stretch::Sinh { beta }, nodes)
    }

    /// Same nodes mapped through `r = e^s` (or `s = ln r`).
    pub fn mapped(&self) -> Result<Self> {
        match self.kind {
            CoordKind::R => {
                let mut n: Vec<f64> = self.nodes.iter().map(|r| r.ln()).collect();
                n[0] = 0.0;
                let st = if self.stretch == Stretch::Geometric { Stretch::Uniform } else { self.stretch };
                Self::from_nodes(CoordKind::S, st, n)
            }
            CoordKind::S => {
                let mut n: Vec<f64> = self.nodes.iter().map(|s| s.exp()).collect();
                n[0] = 1.0;
                let st = if self.stretch == Stretch::Uniform { Stretch::Geometric } else { self.stretch };
                Self::from_nodes(CoordKind::R, st, n)
            }
            CoordKind::Zeta => Err(Error::GridMismatch("zeta grid has no log mapping".into())),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Computational coordinate: `ln r` on r-grids, the node values otherwise.
    pub fn comp_nodes(&self) -> &[f64] {
        &self.comp
    }

    /// Derivative operators in the computational coordinate.
    pub fn diff(&self) -> &DiffSet {
        &self.diff
    }

    /// Integration in the computational coordinate.
    pub fn integrator(&self) -> &Integrator {
        &self.integ
    }
}
