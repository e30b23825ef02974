//! Quadrature, cumulative integration and interpolation on monotone grids.

use std::ops::{Add, Mul, Sub};

use super::fd::DiffOp;

/// Composite Simpson rule on a nonuniform grid.
///
/// An odd interval count closes with the quadratic through the last three nodes.
pub fn simpson(x: &[f64], f: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(n, f.len());
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (f[0] + f[1]);
    }
    let intervals = n - 1;
    let pairs = intervals / 2;
    let mut s = 0.0;
    for p in 0..pairs {
        let i = 2 * p;
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        s += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * f[i] + (h0 + h1).powi(2) / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
    }
    if intervals % 2 == 1 {
        let i = n - 3;
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        s += f[i + 2] * (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1))
            + f[i + 1] * (h1 * h1 + 3.0 * h1 * h0) / (6.0 * h0)
            - f[i] * h1.powi(3) / (6.0 * h0 * (h0 + h1));
    }
    s
}

/// Cumulative integration by the doubly end-corrected trapezoid rule.
///
/// Each interval integrates the quintic Hermite interpolant of nodal values,
/// slopes and second derivatives, so the antiderivative's slope at every node
/// is the integrand's nodal value.
#[derive(Clone, Debug)]
pub struct Integrator {
    pub nodes: Vec<f64>,
    d1: DiffOp,
    d2: DiffOp,
}

impl Integrator {
    pub fn new(nodes: &[f64]) -> Self {
        Self { nodes: nodes.to_vec(), d1: DiffOp::new(nodes, 1), d2: DiffOp::new(nodes, 2) }
    }

    pub fn with_ops(nodes: &[f64], d1: DiffOp, d2: DiffOp) -> Self {
        Self { nodes: nodes.to_vec(), d1, d2 }
    }

    fn pieces<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
    {
        let df = self.d1.apply(f);
        let ddf = self.d2.apply(f);
        self.nodes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let h = w[1] - w[0];
                (f[i] + f[i + 1]) * (0.5 * h) + (df[i] - df[i + 1]) * (h * h / 10.0) + (ddf[i] + ddf[i + 1]) * (h * h * h / 120.0)
            })
            .collect()
    }

    /// `F(x_i) = ∫_{x_0}^{x_i} f`.
    pub fn from_start<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
    {
        let p = self.pieces(f);
        let mut out = Vec::with_capacity(f.len());
        let mut acc = T::default();
        out.push(acc);
        for v in p {
            acc = acc + v;
            out.push(acc);
        }
        out
    }

    /// `F(x_i) = ∫_{x_i}^{x_end} f`.
    pub fn to_end<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
    {
        let p = self.pieces(f);
        let n = f.len();
        let mut out = vec![T::default(); n];
        let mut acc = T::default();
        for i in (0..n - 1).rev() {
            acc = acc + p[i];
            out[i] = acc;
        }
        out
    }

    pub fn total<T>(&self, f: &[T]) -> T
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
    {
        self.pieces(f).into_iter().fold(T::default(), |a, b| a + b)
    }
}

/// Precomputed cubic Lagrange interpolation from `src` nodes to target points.
///
/// Targets coinciding with a source node copy it exactly; targets outside the
/// source range evaluate to zero.
#[derive(Clone, Debug)]
pub struct Interp {
    rows: Vec<Option<(usize, [f64; 4])>>,
}

impl Interp {
    pub fn new(src: &[f64], targets: &[f64]) -> Self {
        let n = src.len();
        assert!(n >= 4);
        let lo = src[0];
        let hi = src[n - 1];
        let tol = 1e-13 * (hi - lo).abs().max(1.0);
        let rows = targets
            .iter()
            .map(|&t| {
                if t < lo - tol || t > hi + tol {
                    return None;
                }
                let j = match src.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                    Ok(j) => j,
                    Err(j) => j.saturating_sub(1).min(n - 2),
                };
                let exact = [j, (j + 1).min(n - 1)].into_iter().find(|&m| (src[m] - t).abs() <= tol);
                if let Some(m) = exact {
                    let s = m.saturating_sub(1).min(n - 4);
                    let mut w = [0.0; 4];
                    w[m - s] = 1.0;
                    return Some((s, w));
                }
                let s = j.saturating_sub(1).min(n - 4);
                let x = &src[s..s + 4];
                let mut w = [0.0; 4];
                for a in 0..4 {
                    let mut l = 1.0;
                    for b in 0..4 {
                        if a != b {
                            l *= (t - x[b]) / (x[a] - x[b]);
                        }
                    }
                    w[a] = l;
                }
                Some((s, w))
            })
            .collect();
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn apply<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
    {
        self.rows
            .iter()
            .map(|row| match row {
                None => T::default(),
                Some((s, w)) => {
                    let mut acc = T::default();
                    for (a, &wa) in w.iter().enumerate() {
                        acc = acc + f[s + a] * wa;
                    }
                    acc
                }
            })
            .collect()
    }
}
