#![allow(dead_code)]

use std::sync::Arc;

use dbvp_core::linalg::{c, orth, CMat};
use dbvp_core::{BoundarySpectrum, EigenLine, SigmaAction, SigmaPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `λ_k = k` for `|k| ≤ cutoff`; line id `k + cutoff`.
pub fn disk(cutoff: i32) -> Arc<BoundarySpectrum> {
    let lines = (-cutoff..=cutoff)
        .map(|k| EigenLine { id: (k + cutoff) as u32, lambda: k as f64, mult: 1, component: 0 })
        .collect();
    Arc::new(BoundarySpectrum::with_standard_sigma_allowing_odd_kernel(lines).unwrap())
}

/// Lines `±(j + 1/2)` with multiplicity 2 plus a kernel of dimension `k`.
pub fn with_kernel(k: usize, levels: usize) -> Arc<BoundarySpectrum> {
    let mut lines = vec![];
    if k > 0 {
        lines.push(EigenLine { id: 0, lambda: 0.0, mult: k, component: 0 });
    }
    for j in 0..levels {
        let l = j as f64 + 0.5;
        lines.push(EigenLine { id: 1 + 2 * j as u32, lambda: l, mult: 2, component: 0 });
        lines.push(EigenLine { id: 2 + 2 * j as u32, lambda: -l, mult: 2, component: 0 });
    }
    Arc::new(BoundarySpectrum::with_standard_sigma(lines).unwrap())
}

/// `A₀ ⊕ (−A₀)` with `σ₁ = −σ₀`, second copy ids offset by 100.
pub fn doubled(kernel: usize, levels: usize) -> Arc<BoundarySpectrum> {
    let base = with_kernel(kernel, levels);
    let mut lines: Vec<EigenLine> = base.lines().to_vec();
    for l in base.lines() {
        lines.push(EigenLine { id: l.id + 100, lambda: -l.lambda + 0.0, mult: l.mult, component: 1 });
    }
    let s = base.sigma();
    let mut pairs = s.pairs.clone();
    for p in &s.pairs {
        // −σ on the mirror copy: the old minus line is now the plus line.
        pairs.push(SigmaPair { plus: p.minus + 100, minus: p.plus + 100, matrix: p.matrix.adjoint() });
    }
    let k = &s.kernel;
    let n = k.nrows();
    let mut kernel = CMat::zeros(2 * n, 2 * n);
    kernel.view_mut((0, 0), (n, n)).copy_from(k);
    kernel.view_mut((n, n), (n, n)).copy_from(&(-k));
    Arc::new(BoundarySpectrum::new(lines, SigmaAction { pairs, kernel }).unwrap())
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    loop {
        let m = CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let q = orth(&m);
        if q.ncols() == n {
            return q;
        }
    }
}

/// Random spectrum with random unitary σ blocks and a conjugated standard
/// complex structure on a kernel of even dimension `2 * half_kernel`.
pub fn random_spectrum(seed: u64, levels: usize, half_kernel: usize) -> Arc<BoundarySpectrum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = vec![];
    let mut pairs = vec![];
    let mut lambda = 0.0;
    let mut id = 0u32;
    for _ in 0..levels {
        lambda += 0.2 + rng.random::<f64>();
        let mult = rng.random_range(1..=3usize);
        lines.push(EigenLine { id, lambda, mult, component: 0 });
        lines.push(EigenLine { id: id + 1, lambda: -lambda, mult, component: 0 });
        pairs.push(SigmaPair { plus: id, minus: id + 1, matrix: random_unitary(&mut rng, mult) });
        id += 2;
    }
    let kdim = 2 * half_kernel;
    if kdim > 0 {
        lines.push(EigenLine { id, lambda: 0.0, mult: kdim, component: 0 });
    }
    let mut j = CMat::zeros(kdim, kdim);
    for p in 0..half_kernel {
        j[(2 * p + 1, 2 * p)] = c(1.0, 0.0);
        j[(2 * p, 2 * p + 1)] = c(-1.0, 0.0);
    }
    let w = random_unitary(&mut rng, kdim);
    let kernel = &w * j * w.adjoint();
    Arc::new(BoundarySpectrum::new(lines, SigmaAction { pairs, kernel }).unwrap())
}
