//! Finite-difference stencils on arbitrary monotone grids.

/// Fornberg weights for derivatives `0..=m` at `z` using nodes `x`.
///
/// Returns `w[d][j]`, the weight of node `j` for derivative order `d`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Row-stencil representation of a derivative operator.
#[derive(Clone, Debug)]
pub struct DiffOp {
    pub order: usize,
    pub start: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
}

impl DiffOp {
    /// Derivative of order `m` with at least sixth-order accuracy.
    ///
    /// Interior rows use a centred odd stencil; rows where it does not fit use
    /// a one-sided stencil of `m + 6` nodes.
    pub fn new(x: &[f64], m: usize) -> Self {
        let n = x.len();
        let wc = if m <= 2 { 7 } else { 9 };
        let wb = m + 6;
        assert!(n >= wb, "grid too small for derivative stencil");
        let half = wc / 2;
        let mut start = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let (s, w) = if i >= half && i + half < n {
                (i - half, wc)
            } else if i < half {
                (0, wb)
            } else {
                (n - wb, wb)
            };
            let c = fornberg(x[i], &x[s..s + w], m);
            start.push(s);
            weights.push(c[m].clone());
        }
        Self { order: m, start, weights }
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    /// Largest distance between a row index and any column it touches.
    pub fn half_bandwidth(&self) -> usize {
        let mut b = 0;
        for (i, (s, w)) in self.start.iter().zip(&self.weights).enumerate() {
            let lo = i.saturating_sub(*s);
            let hi = (s + w.len() - 1).saturating_sub(i);
            b = b.max(lo).max(hi);
        }
        b
    }

    pub fn apply<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    {
        assert_eq!(f.len(), self.len());
        self.start
            .iter()
            .zip(&self.weights)
            .map(|(&s, w)| {
                let mut acc = T::default();
                for (j, &wj) in w.iter().enumerate() {
                    acc = acc + f[s + j] * wj;
                }
                acc
            })
            .collect()
    }

    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (self.start[i], &self.weights[i])
    }
}

/// Derivative operators of orders 1..=max_order on one grid.
#[derive(Clone, Debug)]
pub struct DiffSet {
    pub nodes: Vec<f64>,
    pub ops: Vec<DiffOp>,
}

impl DiffSet {
    pub fn new(nodes: &[f64], max_order: usize) -> Self {
        let ops = (1..=max_order).map(|m| DiffOp::new(nodes, m)).collect();
        Self { nodes: nodes.to_vec(), ops }
    }

    pub fn d(&self, m: usize) -> &DiffOp {
        &self.ops[m - 1]
    }
}
