//! Chebyshev–Lobatto nodes on `[0, T]` with a Gauss–Legendre rule for
//! assembling weighted inner products.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::SolverError;

pub const MIN_NODES: usize = 16;

#[derive(Clone, Debug)]
pub struct Grid {
    pub t_max: f64,
    /// Nodes in `t`, ascending; `nodes[0] = 0`, `nodes[n-1] = T`.
    pub nodes: Vec<f64>,
    /// Clenshaw–Curtis weights for the nodes.
    pub weights: Vec<f64>,
    /// Differentiation in `t` acting on nodal values.
    pub diff: DMatrix<f64>,
    pub gauss: Vec<f64>,
    pub gauss_weights: Vec<f64>,
    /// Nodal values to values at the Gauss points.
    pub interp: DMatrix<f64>,
    /// Nodal values to derivatives at the Gauss points.
    pub interp_diff: DMatrix<f64>,
}

impl Grid {
    pub fn new(n: usize, t_max: f64) -> Result<Self, SolverError> {
        if n < MIN_NODES {
            return Err(SolverError::GridTooCoarse(n));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(SolverError::BadInterval(t_max));
        }
        let xs = lobatto(n);
        let dx = cheb_diff(&xs);
        let scale = -2.0 / t_max;
        let diff = dx.scale(scale);
        let nodes: Vec<f64> = xs.iter().map(|x| t_max * (1.0 - x) / 2.0).collect();
        let weights = clenshaw_curtis(n).into_iter().map(|w| w * t_max / 2.0).collect();
        let (gx, gw) = gauss_legendre(2 * n + 8);
        let interp = barycentric(&xs, &gx);
        let interp_diff = &interp * &diff;
        let gauss = gx.iter().map(|x| t_max * (1.0 - x) / 2.0).collect();
        let gauss_weights = gw.iter().map(|w| w * t_max / 2.0).collect();
        Ok(Grid { t_max, nodes, weights, diff, gauss, gauss_weights, interp, interp_diff })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn refined(&self) -> Result<Grid, SolverError> {
        Grid::new(2 * self.len(), self.t_max)
    }

    /// Clenshaw–Curtis quadrature of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Interpolates nodal values to an arbitrary point.
    pub fn eval(&self, values: &[f64], t: f64) -> f64 {
        let x = 1.0 - 2.0 * t / self.t_max;
        let xs = lobatto(self.len());
        let row = barycentric(&xs, &[x]);
        (0..self.len()).map(|j| row[(0, j)] * values[j]).sum()
    }
}

/// Chebyshev–Lobatto points `cos(πj/(n−1))`, descending from 1 to −1.
pub fn lobatto(n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n).map(|j| (PI * j as f64 / m).cos()).collect()
}

/// Spectral differentiation matrix on Lobatto points, with the diagonal fixed
/// by the negative row sum so constants are annihilated exactly.
pub fn cheb_diff(xs: &[f64]) -> DMatrix<f64> {
    let n = xs.len();
    let cw = |j: usize| {
        let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        if j == 0 || j == n - 1 {
            2.0 * s
        } else {
            s
        }
    };
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i != j {
                d[(i, j)] = cw(i) / cw(j) / (xs[i] - xs[j]);
                row += d[(i, j)];
            }
        }
        d[(i, i)] = -row;
    }
    d
}

pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let big = n - 1;
    let nf = big as f64;
    let theta: Vec<f64> = (0..n).map(|j| PI * j as f64 / nf).collect();
    let mut w = vec![0.0; n];
    let mut v = vec![1.0; n];
    if big.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[big] = w[0];
        for k in 1..big / 2 {
            let kf = k as f64;
            for (j, vj) in v.iter_mut().enumerate() {
                *vj -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (j, vj) in v.iter_mut().enumerate() {
            *vj -= (nf * theta[j]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[big] = w[0];
        for k in 1..=(big - 1) / 2 {
            let kf = k as f64;
            for (j, vj) in v.iter_mut().enumerate() {
                *vj -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for j in 1..big {
        w[j] = 2.0 * v[j] / nf;
    }
    w
}

/// Gauss–Legendre nodes (descending) and weights on `[−1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(k);
    let mut ws = Vec::with_capacity(k);
    let kf = k as f64;
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(k, x);
        if d.is_finite() {
            dp = d;
        }
        xs.push(x);
        ws.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

/// `P_k(x)` and its derivative by the three-term recurrence.
fn legendre(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let kf = k as f64;
    let d = kf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Barycentric interpolation matrix from Lobatto points `xs` to `targets`.
pub fn barycentric(xs: &[f64], targets: &[f64]) -> DMatrix<f64> {
    let n = xs.len();
    let bw: Vec<f64> = (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let mut m = DMatrix::zeros(targets.len(), n);
    for (i, &x) in targets.iter().enumerate() {
        if let Some(j) = xs.iter().position(|&xj| (x - xj).abs() < 1e-15) {
            m[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..n).map(|j| bw[j] / (x - xs[j])).collect();
        let total: f64 = terms.iter().sum();
        for j in 0..n {
            m[(i, j)] = terms[j] / total;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_grids() {
        assert!(matches!(Grid::new(8, 1.0), Err(SolverError::GridTooCoarse(8))));
    }

    #[test]
    fn diff_annihilates_constants() {
        let g = Grid::new(32, 2.0).unwrap();
        let ones = nalgebra::DVector::from_element(32, 1.0);
        assert!((&g.diff * ones).amax() < 1e-12);
    }

    #[test]
    fn clenshaw_curtis_exact_on_polynomials() {
        for n in [16, 17, 33] {
            let g = Grid::new(n, 1.5).unwrap();
            for d in 0..n {
                let vals: Vec<f64> = g.nodes.iter().map(|t| (t / 1.5).powi(d as i32)).collect();
                let exact = 1.5 / (d as f64 + 1.0);
                assert!((g.integrate(&vals) - exact).abs() < 1e-12, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn gauss_rule_exact_to_degree() {
        let (x, w) = gauss_legendre(20);
        for d in 0..40 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
            let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "degree {d}");
        }
    }

    #[test]
    fn derivative_of_sine_is_spectral() {
        let g = Grid::new(40, 3.0).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|t| t.sin()).collect();
        let df = &g.interp_diff * nalgebra::DVector::from_vec(f);
        for (i, t) in g.gauss.iter().enumerate() {
            assert!((df[i] - t.cos()).abs() < 1e-11);
        }
    }
}
