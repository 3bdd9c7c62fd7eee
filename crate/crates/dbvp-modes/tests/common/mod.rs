#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use dbvp_core::linalg::{c, orth, CMat};
use dbvp_core::{BoundaryCondition, BoundarySpectrum, ConditionTag, EigenLine, SigmaAction};
use dbvp_modes::geometry::Geometry;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fibre with lines `±1.5` (mult 1), `±5` (mult 2) and a kernel of
/// dimension `kd` under the standard `σ`.
pub fn fiber(kd: usize) -> Arc<BoundarySpectrum> {
    fiber_with_kernel_sigma(kd, None)
}

pub fn fiber_with_kernel_sigma(kd: usize, kernel: Option<CMat>) -> Arc<BoundarySpectrum> {
    let mut lines = vec![
        EigenLine { id: 0, lambda: -1.5, mult: 1, component: 0 },
        EigenLine { id: 1, lambda: 1.5, mult: 1, component: 0 },
        EigenLine { id: 2, lambda: -5.0, mult: 2, component: 0 },
        EigenLine { id: 3, lambda: 5.0, mult: 2, component: 0 },
    ];
    if kd > 0 {
        lines.push(EigenLine { id: 4, lambda: 0.0, mult: kd, component: 0 });
    }
    let mut sigma = SigmaAction::standard(&lines).unwrap();
    if let Some(k) = kernel {
        sigma.kernel = k;
        return Arc::new(BoundarySpectrum::new_allowing_odd_kernel(lines, sigma).unwrap());
    }
    Arc::new(BoundarySpectrum::new_allowing_odd_kernel(lines, sigma).unwrap())
}

/// Cylinder long enough that the outermost modes decouple below `1e-12`.
pub fn cylinder(kd: usize) -> Geometry {
    Geometry::cylinder(6.0, fiber(kd), 5.0)
}

/// Trefethen's differentiation matrix on `N + 1` Chebyshev points.
pub fn cheb(n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let cw: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                2.0 * s
            } else {
                s
            }
        })
        .collect();
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = cw[i] / cw[j] / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (d, x)
}

/// Positive eigenvalues of the Dirac operator on the geodesic ball of radius
/// `r` in the round `S²`, computed in the stereographic disk of radius
/// `tan(r/2)` with the Chebyshev polar fold, Fourier pair by Fourier pair
/// (`k ∈ [−kmax, kmax)`), under the spectral condition of the boundary
/// circle. `n` must be odd.
pub fn cap_oracle(r: f64, n: usize, kmax: i32) -> Vec<f64> {
    assert!(n % 2 == 1);
    let big_r = (r / 2.0).tan();
    let (d0, x0) = cheb(n);
    let d = d0 / big_r;
    let x: Vec<f64> = x0.iter().map(|v| v * big_r).collect();
    let m = n.div_ceil(2);
    let rho = &x[..m];
    let fold = |parity: f64| {
        let mut dm = DMatrix::zeros(m, m);
        for i in 0..m {
            for l in 0..=n {
                if l < m {
                    dm[(i, l)] += d[(i, l)];
                } else {
                    dm[(i, n - l)] += parity * d[(i, l)];
                }
            }
        }
        dm
    };
    let h = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m,
        rho.iter().map(|p| (2.0 / (1.0 + p * p)).powf(-0.5)),
    ));
    let mut out = Vec::new();
    for k in -kmax..kmax {
        let pa = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let pb = -pa;
        let kf = k as f64;
        let inv = |s: f64| DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m, rho.iter().map(|p| s / p)));
        let ab = -(&h * (fold(pb) + inv(kf + 1.0)) * &h);
        let ba = &h * (fold(pa) - inv(kf)) * &h;
        // drop the boundary value of one component: H = [[0, X], [Y, 0]]
        let (xm, ym) = if k >= 0 {
            (ab.rows(1, m - 1).into_owned(), ba.columns(1, m - 1).into_owned())
        } else {
            (ab.columns(1, m - 1).into_owned(), ba.rows(1, m - 1).into_owned())
        };
        let sq = if xm.nrows() < ym.nrows() { &xm * &ym } else { &ym * &xm };
        for z in sq.complex_eigenvalues().iter() {
            if z.im.abs() < 1e-8 && z.re > 1e-10 {
                out.push(z.re.sqrt());
            }
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Which component of `y` vanishes at `t = L` in the staggered oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FarEnd {
    Second,
    First,
}

fn staggered(l: f64, n: usize, far: FarEnd) -> Vec<f64> {
    // K y' = E y with K = [[0,−1],[1,0]], y₂(0) = 0; y₂ on integer nodes,
    // y₁ on half nodes.
    let (h, n1, n2) = match far {
        FarEnd::Second => (l / n as f64, n, n - 1),
        FarEnd::First => (l / (n as f64 + 0.5), n, n),
    };
    let size = n1 + n2;
    let mut m = DMatrix::<f64>::zeros(size, size);
    // y1 at i+1/2 is unknown i; y2 at node i (i ≥ 1) is unknown n1 + i − 1
    let y2 = |i: usize| -> Option<usize> {
        if i == 0 || i > n2 {
            None
        } else {
            Some(n1 + i - 1)
        }
    };
    for i in 0..n1 {
        // −(y2_{i+1} − y2_i)/h = E y1_{i+1/2}
        if let Some(j) = y2(i + 1) {
            m[(i, j)] -= 1.0 / h;
        }
        if let Some(j) = y2(i) {
            m[(i, j)] += 1.0 / h;
        }
    }
    for i in 1..=n2 {
        // (y1_{i+1/2} − y1_{i−1/2})/h = E y2_i
        let row = n1 + i - 1;
        if i < n1 {
            m[(row, i)] += 1.0 / h;
        }
        m[(row, i - 1)] -= 1.0 / h;
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenvalues of `K y' = E y` on `[0, L]` with `y₂(0) = 0` and the given
/// component vanishing at `L`, in `[−window, window]`, from a staggered
/// second-order scheme on `n` and `2n` cells with Richardson extrapolation.
pub fn kernel_mode_oracle(l: f64, n: usize, far: FarEnd, window: f64) -> Vec<f64> {
    let coarse = staggered(l, n, far);
    let fine = staggered(l, 2 * n, far);
    let mut out = Vec::new();
    for &e in fine.iter().filter(|e| e.abs() <= window) {
        let near = coarse.iter().cloned().min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs())).unwrap();
        out.push((4.0 * e - near) / 3.0);
    }
    out
}

/// `B ⊆ B'` pair: `B = B(a)` and `B'` adds a random subspace of the lines in
/// `[a, b)` that stays clear of the outermost lines.
pub fn nested_pair(spec: &Arc<BoundarySpectrum>, a: f64, b: f64, rng: &mut ChaCha8Rng) -> (BoundaryCondition, BoundaryCondition) {
    let b1 = BoundaryCondition::gaps(spec.clone(), a);
    let window = spec.span_where(|l| l >= a && l < b);
    let k = window.ncols();
    let take = if k == 0 { 0 } else { rng.random_range(1..=k) };
    let mix = CMat::from_fn(k, take, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let extra = orth(&(&window * mix));
    let big = dbvp_core::linalg::span_sum(b1.subspace(), &extra);
    let b2 = BoundaryCondition::from_subspace(spec.clone(), &big, a, ConditionTag::Custom).unwrap();
    (b1, b2)
}
