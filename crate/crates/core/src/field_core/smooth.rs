//! Truncated Taylor jets and the C^∞ step built from `e^{-1/x}`.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order carried by a [`Jet`].
pub const JET_ORDER: usize = 4;

/// Taylor coefficients `f(x₀ + h) ≈ Σ_m t_m h^m` up to `h^4`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet(pub [f64; JET_ORDER + 1]);

const FACT: [f64; JET_ORDER + 1] = [1.0, 1.0, 2.0, 6.0, 24.0];

impl Jet {
    pub fn constant(c: f64) -> Self {
        let mut t = [0.0; JET_ORDER + 1];
        t[0] = c;
        Jet(t)
    }

    pub fn variable(x: f64) -> Self {
        let mut t = [0.0; JET_ORDER + 1];
        t[0] = x;
        t[1] = 1.0;
        Jet(t)
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// `m`-th derivative.
    pub fn d(&self, m: usize) -> f64 {
        self.0[m] * FACT[m]
    }

    /// Derivatives `[f, f', …, f⁗]`.
    pub fn derivs(&self) -> [f64; JET_ORDER + 1] {
        std::array::from_fn(|m| self.d(m))
    }

    pub fn exp(self) -> Self {
        let a = self.0;
        let mut e = [0.0; JET_ORDER + 1];
        e[0] = a[0].exp();
        for m in 1..=JET_ORDER {
            e[m] = (1..=m).map(|j| j as f64 * a[j] * e[m - j]).sum::<f64>() / m as f64;
        }
        Jet(e)
    }

    pub fn recip(self) -> Self {
        Jet::constant(1.0) / self
    }

    pub fn scale(self, a: f64) -> Self {
        Jet(self.0.map(|v| v * a))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|m| self.0[m] + o.0[m]))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|m| self.0[m] - o.0[m]))
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|m| (0..=m).map(|j| self.0[j] * o.0[m - j]).sum()))
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, b: Jet) -> Jet {
        let mut q = [0.0; JET_ORDER + 1];
        for m in 0..=JET_ORDER {
            let s: f64 = (1..=m).map(|j| b.0[j] * q[m - j]).sum();
            q[m] = (self.0[m] - s) / b.0[0];
        }
        Jet(q)
    }
}

/// `e^{-1/x}` for `x > 0`, zero otherwise.
fn phi(x: Jet) -> Jet {
    if x.value() <= 0.0 {
        Jet::default()
    } else {
        (-x.recip()).exp()
    }
}

/// Smooth step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, C^∞ in between.
pub fn smooth_step(x: Jet) -> Jet {
    let t = x.value();
    if t <= 0.0 {
        return Jet::default();
    }
    if t >= 1.0 {
        return Jet::constant(1.0);
    }
    let a = phi(x);
    let b = phi(Jet::constant(1.0) - x);
    a / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_arithmetic_matches_closed_forms() {
        let x = Jet::variable(0.7);
        let e = (x * x).exp();
        // d⁴/dx⁴ e^{x²} = (16x⁴ + 48x² + 12) e^{x²}
        let v = 0.49f64.exp();
        assert!((e.d(4) - (16.0 * 0.2401 + 48.0 * 0.49 + 12.0) * v).abs() < 1e-12);
        let r = x.recip();
        assert!((r.d(3) + 6.0 / 0.7f64.powi(4)).abs() < 1e-10);
        assert!((r.d(4) - 24.0 / 0.7f64.powi(5)).abs() < 1e-9);
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let f = |x: f64| smooth_step(Jet::variable(x));
        for &x in &[0.2, 0.5, 0.77] {
            let h = 1e-4;
            let j = f(x);
            let d1 = (f(x + h).value() - f(x - h).value()) / (2.0 * h);
            let d2 = (f(x + h).value() - 2.0 * j.value() + f(x - h).value()) / (h * h);
            let d3 = (f(x + h).d(2) - f(x - h).d(2)) / (2.0 * h);
            let d4 = (f(x + h).d(3) - f(x - h).d(3)) / (2.0 * h);
            assert!((j.d(1) - d1).abs() < 1e-6);
            assert!((j.d(2) - d2).abs() < 1e-4);
            assert!((j.d(3) - d3).abs() < 1e-4);
            assert!((j.d(4) - d4).abs() < 1e-3 * j.d(4).abs().max(1.0));
        }
    }

    #[test]
    fn step_is_symmetric() {
        for &x in &[0.1, 0.3, 0.5] {
            let a = smooth_step(Jet::constant(x)).value();
            let b = smooth_step(Jet::constant(1.0 - x)).value();
            assert!((a + b - 1.0).abs() < 1e-15);
        }
    }
}
