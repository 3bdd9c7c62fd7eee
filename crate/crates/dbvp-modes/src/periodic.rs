//! The uncut operator `σ(∂_t + A₀)` on a circle of length `L` times a closed
//! fibre, split into Fourier blocks `J(iω + Λ)` per fibre mode.

use std::f64::consts::TAU;

use dbvp_core::linalg::{c, singular_values, CMat};
use dbvp_core::BoundarySpectrum;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicIndex {
    pub kernel: usize,
    pub cokernel: usize,
    pub index: i64,
    /// Largest Fourier number used.
    pub harmonics: i64,
}

fn null_dim(m: &CMat, tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().cloned().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x < tol * top).count()
}

/// Kernel and cokernel of the periodic problem on fibre lines with
/// `|λ| ≤ cutoff`, for Fourier numbers `|j| ≤ harmonics`. Each block is
/// square, so only `ω = 0` on `ker A₀` can contribute, and it contributes to
/// both sides equally.
pub fn periodic_index(fiber: &BoundarySpectrum, length: f64, cutoff: f64, harmonics: i64, tol: f64) -> PeriodicIndex {
    let mut blocks: Vec<(CMat, Vec<f64>)> = Vec::new();
    for p in &fiber.sigma().pairs {
        let Some(line) = fiber.line(p.plus) else { continue };
        if line.lambda > cutoff + 1e-12 {
            continue;
        }
        let mult = p.matrix.nrows();
        let mut j = CMat::zeros(2 * mult, 2 * mult);
        j.view_mut((0, mult), (mult, mult)).copy_from(&(-p.matrix.adjoint()));
        j.view_mut((mult, 0), (mult, mult)).copy_from(&p.matrix);
        let lambdas = (0..2 * mult).map(|i| if i < mult { line.lambda } else { -line.lambda }).collect();
        blocks.push((j, lambdas));
    }
    let kd = fiber.kernel_dim();
    if kd > 0 {
        blocks.push((fiber.sigma().kernel.clone(), vec![0.0; kd]));
    }
    let (mut kernel, mut cokernel) = (0, 0);
    for (j, lambdas) in &blocks {
        for h in -harmonics..=harmonics {
            let w = TAU * h as f64 / length;
            let mut m = j.clone();
            for (k, &l) in lambdas.iter().enumerate() {
                let mut col = m.column_mut(k);
                col *= c(l, w);
            }
            kernel += null_dim(&m, tol);
            cokernel += null_dim(&m.adjoint(), tol);
        }
    }
    PeriodicIndex { kernel, cokernel, index: kernel as i64 - cokernel as i64, harmonics }
}
