//! Model geometries: boundary spectra, per-mode reductions and curvature data.

use std::fmt;
use std::sync::Arc;

use dbvp_core::linalg::{c, CMat};
use dbvp_core::{BoundarySpectrum, EigenLine, SigmaAction, SigmaPair};
use serde::Serialize;

use crate::error::GeometryError;
use crate::problem::{Coefficients, End, ModeProblem, Trace};

/// Warping function `f` of `dt² + f(t)² g₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Warp {
    Sin,
    NegExp,
    Flat,
}

impl Warp {
    pub fn f(self, t: f64) -> f64 {
        match self {
            Warp::Sin => t.sin(),
            Warp::NegExp => (-t).exp(),
            Warp::Flat => 1.0,
        }
    }
    pub fn df(self, t: f64) -> f64 {
        match self {
            Warp::Sin => t.cos(),
            Warp::NegExp => -(-t).exp(),
            Warp::Flat => 0.0,
        }
    }
    pub fn ddf(self, t: f64) -> f64 {
        match self {
            Warp::Sin => -t.sin(),
            Warp::NegExp => (-t).exp(),
            Warp::Flat => 0.0,
        }
    }

    /// Scalar curvature of `dt² + f² g_{S^m}` with the unit round fibre.
    pub fn scalar_curvature(self, m: f64, t: f64) -> f64 {
        let (f, df, ddf) = (self.f(t), self.df(t), self.ddf(t));
        -2.0 * m * ddf / f + m * (m - 1.0) * (1.0 - df * df) / (f * f)
    }
}

/// Mode of a warped product over a round sphere `S^m` with fibre Dirac
/// eigenvalue `μ`: `J = [[0,−1],[1,0]]`, `P = [[0, μ/f − w],[μ/f + w, 0]]`
/// with `w = m f'/(2f)` and weight `ρ = f^m`.
#[derive(Clone, Debug)]
pub struct WarpedCoeffs {
    pub mu: f64,
    pub m: f64,
    pub warp: Warp,
}

impl Coefficients for WarpedCoeffs {
    fn comps(&self) -> usize {
        2
    }
    fn j(&self) -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }
    fn p(&self, t: f64) -> CMat {
        let f = self.warp.f(t);
        let q = self.mu / f;
        let w = self.m * self.warp.df(t) / (2.0 * f);
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(q - w, 0.0), c(q + w, 0.0), c(0.0, 0.0)])
    }
    fn rho(&self, t: f64) -> f64 {
        self.warp.f(t).powf(self.m)
    }
    fn log_rho_prime(&self, t: f64) -> f64 {
        self.m * self.warp.df(t) / self.warp.f(t)
    }
    fn rough_potential(&self, t: f64) -> Option<CMat> {
        let (f, df) = (self.warp.f(t), self.warp.df(t));
        let (m, mu) = (self.m, self.mu);
        let base = mu * mu - m * (m - 1.0) / 4.0 + m * df * df / 4.0;
        let v0 = (base + df * mu) / (f * f);
        let v1 = (base - df * mu) / (f * f);
        Some(CMat::from_row_slice(2, 2, &[c(v0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(v1, 0.0)]))
    }
    fn curvature_term(&self, t: f64) -> Option<f64> {
        Some(self.warp.scalar_curvature(self.m, t) / 4.0)
    }
}

/// Mode of a product cylinder: `J` is `σ` on one fibre block, `P = J Λ` with
/// `Λ` the diagonal of fibre eigenvalues.
#[derive(Clone, Debug)]
pub struct FiberCoeffs {
    pub j: CMat,
    pub lambdas: Vec<f64>,
}

impl Coefficients for FiberCoeffs {
    fn comps(&self) -> usize {
        self.lambdas.len()
    }
    fn j(&self) -> CMat {
        self.j.clone()
    }
    fn p(&self, _t: f64) -> CMat {
        let mut p = self.j.clone();
        for (k, &l) in self.lambdas.iter().enumerate() {
            let mut col = p.column_mut(k);
            col *= c(l, 0.0);
        }
        p
    }
    fn rho(&self, _t: f64) -> f64 {
        1.0
    }
    fn log_rho_prime(&self, _t: f64) -> f64 {
        0.0
    }
    fn rough_potential(&self, _t: f64) -> Option<CMat> {
        let n = self.lambdas.len();
        Some(CMat::from_fn(n, n, |i, j| if i == j { c(self.lambdas[i].powi(2), 0.0) } else { c(0.0, 0.0) }))
    }
    fn curvature_term(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Fourier mode `k` of `∂̄` on the unit disk in polar coordinates:
/// `f ↦ f' − (k/r) f` with weight `r`.
#[derive(Clone, Debug)]
pub struct DiskCoeffs {
    pub k: i64,
}

impl Coefficients for DiskCoeffs {
    fn comps(&self) -> usize {
        1
    }
    fn j(&self) -> CMat {
        CMat::from_element(1, 1, c(1.0, 0.0))
    }
    fn p(&self, t: f64) -> CMat {
        CMat::from_element(1, 1, c(-(self.k as f64) / t, 0.0))
    }
    fn rho(&self, t: f64) -> f64 {
        t
    }
    fn log_rho_prime(&self, t: f64) -> f64 {
        1.0 / t
    }
    fn rough_potential(&self, t: f64) -> Option<CMat> {
        Some(CMat::from_element(1, 1, c((self.k * self.k) as f64 / (t * t), 0.0)))
    }
    fn curvature_term(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Multiplicities of the boundary sphere eigenvalues per level `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MultTable {
    /// `2^{⌊n/2⌋} · C(k+n−2, k)` for the boundary of an `n`-ball.
    Default,
    Custom(Vec<usize>),
}

impl MultTable {
    pub fn mult(&self, n: usize, k: usize) -> Option<usize> {
        match self {
            MultTable::Default => Some((1usize << (n / 2)) * binomial(k + n - 2, k)),
            MultTable::Custom(v) => v.get(k).cloned(),
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Debug)]
pub enum Shape {
    /// Unit disk in the plane with `∂̄`.
    Disk,
    /// `[0, L] × N` for a closed fibre with the given spectrum; the boundary
    /// is two copies of `N`, the one at `t = L` carrying `−A₀`.
    ProductCylinder {
        length: f64,
        fiber: Arc<BoundarySpectrum>,
        /// Fibre is a unit round `S^n`; only used for curvature data.
        round_sphere: Option<usize>,
    },
    /// Geodesic ball of radius `r` in the unit `S^n`.
    WarpedCap { n: usize, r: f64, mult: MultTable },
    /// `S^n × [0, ∞)` with warp `e^{−t}`; modes only on `[0, window]`.
    WarpedHorn { n: usize, window: f64 },
}

#[derive(Clone, Debug)]
pub struct Geometry {
    pub shape: Shape,
    /// Cutoff `Λ` on `|λ|` (cap, cylinder) or `|k|` (disk).
    pub cutoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalBoundaryData {
    pub mean_curvature: f64,
    pub kernel_dim: usize,
    /// `|λ|` of the largest negative eigenvalue.
    pub mu1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ScalarProfile {
    Constant(f64),
    /// `R(t) = a·e^{2t} − b`.
    Exponential { a: f64, b: f64 },
}

impl ScalarProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            ScalarProfile::Constant(r) => r,
            ScalarProfile::Exponential { a, b } => a * (2.0 * t).exp() - b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeitzenbockData {
    /// Lower bound `κ` of `𝒦` on the whole manifold, when positive.
    pub kappa_lower: Option<f64>,
    /// Scalar curvature as stated for the model (`𝒦 = R/4`).
    pub scalar_profile: Option<ScalarProfile>,
    /// Scalar curvature of the metric `dt² + f² g_{S^m}` from the warp.
    pub derived_profile: Option<ScalarProfile>,
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CoercivityAtInfinity {
    /// `D` is `√κ`-coercive at infinity with this constant.
    Constant(f64),
    /// Coercive for every `κ > 0`.
    Any,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coercivity {
    pub at_infinity: CoercivityAtInfinity,
    /// `√(nκ/(n−1))`: no spectrum of `D_B` in `(−g, g)` under the gap
    /// hypotheses.
    pub gap_radius: Option<f64>,
}

/// Per-mode reductions of a geometry.
#[derive(Clone, Debug)]
pub struct ModeFamily {
    pub problems: Vec<ModeProblem>,
    pub spec: Option<Arc<BoundarySpectrum>>,
    pub t_max: f64,
}

impl ModeFamily {
    /// Formal adjoint problems with traces through `σ`.
    pub fn adjoint(&self) -> Result<ModeFamily, GeometryError> {
        let spec = self.spec.as_ref().ok_or(GeometryError::NoCompactBoundary)?;
        let sigma = spec.sigma_matrix();
        Ok(ModeFamily {
            problems: self.problems.iter().map(|p| p.adjoint(sigma)).collect(),
            spec: self.spec.clone(),
            t_max: self.t_max,
        })
    }

    pub fn get(&self, id: u32) -> Option<&ModeProblem> {
        self.problems.iter().find(|p| p.id == id)
    }
}

fn disk_id(k: i64) -> u32 {
    if k >= 0 {
        (2 * k) as u32
    } else {
        (-2 * k - 1) as u32
    }
}

impl Geometry {
    pub fn disk(cutoff: f64) -> Self {
        Geometry { shape: Shape::Disk, cutoff }
    }

    pub fn cylinder(length: f64, fiber: Arc<BoundarySpectrum>, cutoff: f64) -> Self {
        Geometry { shape: Shape::ProductCylinder { length, fiber, round_sphere: None }, cutoff }
    }

    pub fn cap(n: usize, r: f64, cutoff: f64) -> Self {
        Geometry { shape: Shape::WarpedCap { n, r, mult: MultTable::Default }, cutoff }
    }

    pub fn horn(n: usize, cutoff: f64) -> Self {
        Geometry { shape: Shape::WarpedHorn { n, window: 2.0 }, cutoff }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: String| Err(GeometryError::InvalidParameter(m));
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return bad(format!("cutoff {} must be positive", self.cutoff));
        }
        match &self.shape {
            Shape::Disk => Ok(()),
            Shape::ProductCylinder { length, .. } => {
                if *length > 0.0 && length.is_finite() {
                    Ok(())
                } else {
                    bad(format!("cylinder length {length} must be positive"))
                }
            }
            Shape::WarpedCap { n, r, mult } => {
                if *n < 2 {
                    return bad(format!("cap dimension {n} must be at least 2"));
                }
                if !(*r > 0.0 && *r < std::f64::consts::PI) {
                    return bad(format!("cap radius {r} must lie in (0, π)"));
                }
                if let MultTable::Custom(v) = mult {
                    if v.iter().any(|&m| m == 0 || m % 2 == 1) {
                        return bad("custom multiplicities must be positive and even".into());
                    }
                }
                Ok(())
            }
            Shape::WarpedHorn { n, window } => {
                if *n < 2 || window.is_nan() || *window <= 0.0 {
                    return bad(format!("horn needs n >= 2 and a positive window, got {n}, {window}"));
                }
                Ok(())
            }
        }
    }

    /// Interval length of the mode problems.
    pub fn t_max(&self) -> f64 {
        match &self.shape {
            Shape::Disk => 1.0,
            Shape::ProductCylinder { length, .. } => *length,
            Shape::WarpedCap { r, .. } => *r,
            Shape::WarpedHorn { window, .. } => *window,
        }
    }

    /// Lowest fibre eigenvalue magnitude `m/2` and the levels of a warped
    /// geometry that fit under the cutoff.
    fn cap_levels(&self, n: usize, r: f64, mult: &MultTable) -> Result<Vec<(f64, usize)>, GeometryError> {
        let m = (n - 1) as f64;
        let mut out = Vec::new();
        for k in 0.. {
            let mu = k as f64 + m / 2.0;
            if mu / r.sin() > self.cutoff + 1e-12 {
                break;
            }
            let mult = mult.mult(n, k).ok_or_else(|| {
                GeometryError::InvalidParameter(format!("multiplicity table has no entry for level {k}"))
            })?;
            out.push((mu, mult));
        }
        if out.is_empty() {
            return Err(GeometryError::InvalidParameter(format!(
                "cutoff {} is below the first boundary eigenvalue",
                self.cutoff
            )));
        }
        Ok(out)
    }

    pub fn boundary_spectrum(&self) -> Result<Arc<BoundarySpectrum>, GeometryError> {
        self.validate()?;
        match &self.shape {
            Shape::Disk => {
                let kmax = self.cutoff.floor() as i64;
                let lines = (-kmax..=kmax)
                    .map(|k| EigenLine { id: disk_id(k), lambda: k as f64, mult: 1, component: 0 })
                    .collect();
                Ok(Arc::new(BoundarySpectrum::with_standard_sigma_allowing_odd_kernel(lines)?))
            }
            Shape::ProductCylinder { fiber, .. } => Ok(Arc::new(self.doubled(fiber)?)),
            Shape::WarpedCap { n, r, mult } => {
                let levels = self.cap_levels(*n, *r, mult)?;
                let mut lines = Vec::new();
                let mut pairs = Vec::new();
                for (k, &(mu, mult)) in levels.iter().enumerate() {
                    let lam = mu / r.sin();
                    let (minus, plus) = (2 * k as u32, 2 * k as u32 + 1);
                    lines.push(EigenLine { id: minus, lambda: -lam, mult, component: 0 });
                    lines.push(EigenLine { id: plus, lambda: lam, mult, component: 0 });
                    let u = CMat::from_fn(mult, mult, |i, j| match (i == j, i < mult / 2) {
                        (true, true) => c(1.0, 0.0),
                        (true, false) => c(-1.0, 0.0),
                        _ => c(0.0, 0.0),
                    });
                    pairs.push(SigmaPair { plus, minus, matrix: u });
                }
                let sigma = SigmaAction { pairs, kernel: CMat::zeros(0, 0) };
                Ok(Arc::new(BoundarySpectrum::new(lines, sigma)?))
            }
            Shape::WarpedHorn { .. } => Err(GeometryError::NoCompactBoundary),
        }
    }

    fn mirror_offset(fiber: &BoundarySpectrum) -> u32 {
        fiber.lines().iter().map(|l| l.id).max().unwrap_or(0) + 1
    }

    fn kept_fiber_lines(&self, fiber: &BoundarySpectrum) -> Vec<EigenLine> {
        fiber.lines().iter().filter(|l| l.lambda.abs() <= self.cutoff + 1e-12).cloned().collect()
    }

    /// `A₀ ⊕ (−A₀)` with `σ₀` on the first copy and `−σ₀` on the second.
    fn doubled(&self, fiber: &BoundarySpectrum) -> Result<BoundarySpectrum, GeometryError> {
        let off = Self::mirror_offset(fiber);
        let kept = self.kept_fiber_lines(fiber);
        let mut lines = Vec::new();
        for l in &kept {
            lines.push(EigenLine { component: 0, ..l.clone() });
            lines.push(EigenLine { id: l.id + off, lambda: -l.lambda + 0.0, mult: l.mult, component: 1 });
        }
        let mut pairs = Vec::new();
        for p in &fiber.sigma().pairs {
            let plus = fiber.line(p.plus).unwrap();
            if plus.lambda > self.cutoff + 1e-12 {
                continue;
            }
            pairs.push(p.clone());
            pairs.push(SigmaPair { plus: p.minus + off, minus: p.plus + off, matrix: p.matrix.adjoint() });
        }
        let k = &fiber.sigma().kernel;
        let kd = k.nrows();
        let mut kernel = CMat::zeros(2 * kd, 2 * kd);
        kernel.view_mut((0, 0), (kd, kd)).copy_from(k);
        kernel.view_mut((kd, kd), (kd, kd)).copy_from(&(-k));
        Ok(BoundarySpectrum::new(lines, SigmaAction { pairs, kernel })?)
    }

    pub fn reduce_to_modes(&self) -> Result<ModeFamily, GeometryError> {
        self.validate()?;
        let t_max = self.t_max();
        match &self.shape {
            Shape::Disk => {
                let spec = self.boundary_spectrum()?;
                let kmax = self.cutoff.floor() as i64;
                let problems = (-kmax..=kmax)
                    .enumerate()
                    .map(|(i, k)| {
                        let x = spec.offset(disk_id(k)).unwrap();
                        let apex = if k == 0 { vec![] } else { vec![0] };
                        let adjoint_apex = if k == -1 { vec![] } else { vec![0] };
                        ModeProblem {
                            id: i as u32,
                            label: format!("k={k}"),
                            mu: k as f64,
                            t_max,
                            coeffs: Arc::new(DiskCoeffs { k }),
                            traces: vec![Trace {
                                end: End::Finish,
                                coords: vec![x],
                                map: CMat::from_element(1, 1, c(1.0, 0.0)),
                            }],
                            apex_zero: apex,
                            adjoint_apex_zero: adjoint_apex,
                            witness: 0.0,
                            line_ids: vec![disk_id(k)],
                        }
                    })
                    .collect();
                Ok(ModeFamily { problems, spec: Some(spec), t_max })
            }
            Shape::ProductCylinder { length, fiber, .. } => {
                let spec = Arc::new(self.doubled(fiber)?);
                let off = Self::mirror_offset(fiber);
                let mut problems = Vec::new();
                let kept: Vec<u32> = self.kept_fiber_lines(fiber).iter().map(|l| l.id).collect();
                for p in &fiber.sigma().pairs {
                    if !kept.contains(&p.plus) {
                        continue;
                    }
                    let lam = fiber.line(p.plus).unwrap().lambda;
                    let mult = p.matrix.nrows();
                    let u = &p.matrix;
                    let mut j = CMat::zeros(2 * mult, 2 * mult);
                    j.view_mut((0, mult), (mult, mult)).copy_from(&(-u.adjoint()));
                    j.view_mut((mult, 0), (mult, mult)).copy_from(u);
                    let lambdas: Vec<f64> =
                        (0..2 * mult).map(|i| if i < mult { lam } else { -lam }).collect();
                    let start: Vec<usize> =
                        spec.coords(p.plus).unwrap().chain(spec.coords(p.minus).unwrap()).collect();
                    let finish: Vec<usize> = spec
                        .coords(p.plus + off)
                        .unwrap()
                        .chain(spec.coords(p.minus + off).unwrap())
                        .collect();
                    problems.push(ModeProblem {
                        id: problems.len() as u32,
                        label: format!("lambda={lam} (lines {}, {})", p.plus, p.minus),
                        mu: lam,
                        t_max,
                        coeffs: Arc::new(FiberCoeffs { j, lambdas }),
                        traces: two_ends(start, finish),
                        apex_zero: vec![],
                        adjoint_apex_zero: vec![],
                        witness: (-lam.abs() * length).exp(),
                        line_ids: vec![p.plus, p.minus, p.plus + off, p.minus + off],
                    });
                }
                let kd = fiber.kernel_dim();
                if kd > 0 {
                    let kc = fiber.kernel_coords();
                    let start: Vec<usize> = spec.kernel_coords()[..kd].to_vec();
                    let finish: Vec<usize> = spec.kernel_coords()[kd..].to_vec();
                    debug_assert_eq!(kc.len(), kd);
                    let ids: Vec<u32> = fiber
                        .lines()
                        .iter()
                        .filter(|l| l.lambda == 0.0)
                        .flat_map(|l| [l.id, l.id + off])
                        .collect();
                    problems.push(ModeProblem {
                        id: problems.len() as u32,
                        label: "kernel".into(),
                        mu: 0.0,
                        t_max,
                        coeffs: Arc::new(FiberCoeffs { j: fiber.sigma().kernel.clone(), lambdas: vec![0.0; kd] }),
                        traces: two_ends(start, finish),
                        apex_zero: vec![],
                        adjoint_apex_zero: vec![],
                        witness: 1.0,
                        line_ids: ids,
                    });
                }
                Ok(ModeFamily { problems, spec: Some(spec), t_max })
            }
            Shape::WarpedCap { n, r, mult } => {
                let spec = self.boundary_spectrum()?;
                let levels = self.cap_levels(*n, *r, mult)?;
                let m = (*n - 1) as f64;
                let mut problems = Vec::new();
                for (k, &(mu_abs, mult)) in levels.iter().enumerate() {
                    let (minus, plus) = (2 * k as u32, 2 * k as u32 + 1);
                    let mo = spec.offset(minus).unwrap();
                    let po = spec.offset(plus).unwrap();
                    for q in 0..mult {
                        let positive = q < mult / 2;
                        let mu = if positive { mu_abs } else { -mu_abs };
                        let coords = if positive { vec![mo + q, po + q] } else { vec![po + q, mo + q] };
                        problems.push(ModeProblem {
                            id: problems.len() as u32,
                            label: format!("mu={mu} level {k} #{q}"),
                            mu,
                            t_max,
                            coeffs: Arc::new(WarpedCoeffs { mu, m, warp: Warp::Sin }),
                            traces: vec![Trace { end: End::Finish, coords, map: CMat::identity(2, 2) }],
                            apex_zero: vec![if positive { 0 } else { 1 }],
                            adjoint_apex_zero: vec![if positive { 0 } else { 1 }],
                            witness: 0.0,
                            line_ids: vec![minus, plus],
                        });
                    }
                }
                Ok(ModeFamily { problems, spec: Some(spec), t_max })
            }
            Shape::WarpedHorn { n, .. } => {
                let m = *n as f64;
                let mut problems = Vec::new();
                for k in 0.. {
                    let mu_abs = k as f64 + m / 2.0;
                    if mu_abs > self.cutoff {
                        break;
                    }
                    for mu in [mu_abs, -mu_abs] {
                        problems.push(ModeProblem {
                            id: problems.len() as u32,
                            label: format!("mu={mu}"),
                            mu,
                            t_max,
                            coeffs: Arc::new(WarpedCoeffs { mu, m, warp: Warp::NegExp }),
                            traces: vec![],
                            apex_zero: vec![],
                            adjoint_apex_zero: vec![],
                            witness: 0.0,
                            line_ids: vec![],
                        });
                    }
                }
                Ok(ModeFamily { problems, spec: None, t_max })
            }
        }
    }

    pub fn canonical_boundary_data(&self) -> Result<CanonicalBoundaryData, GeometryError> {
        self.validate()?;
        match &self.shape {
            Shape::Disk => Ok(CanonicalBoundaryData { mean_curvature: 1.0, kernel_dim: 1, mu1: 1.0 }),
            Shape::ProductCylinder { .. } => {
                let spec = self.boundary_spectrum()?;
                let mu1 = spec
                    .lines()
                    .iter()
                    .filter(|l| l.lambda < 0.0)
                    .map(|l| -l.lambda)
                    .fold(f64::INFINITY, f64::min);
                Ok(CanonicalBoundaryData { mean_curvature: 0.0, kernel_dim: spec.kernel_dim(), mu1 })
            }
            Shape::WarpedCap { n, r, .. } => Ok(CanonicalBoundaryData {
                mean_curvature: 1.0 / r.tan(),
                kernel_dim: 0,
                mu1: (*n - 1) as f64 / (2.0 * r.sin()),
            }),
            Shape::WarpedHorn { .. } => Err(GeometryError::NoCompactBoundary),
        }
    }

    /// Curvature data. Stated constants are kept as given for each model even
    /// where they disagree with the scalar curvature of the warped metric;
    /// `derived_profile` carries the latter.
    pub fn weitzenbock(&self) -> WeitzenbockData {
        match &self.shape {
            Shape::Disk => WeitzenbockData {
                kappa_lower: None,
                scalar_profile: Some(ScalarProfile::Constant(0.0)),
                derived_profile: Some(ScalarProfile::Constant(0.0)),
                note: None,
            },
            Shape::ProductCylinder { round_sphere, .. } => match round_sphere {
                Some(n) => {
                    let nf = *n as f64;
                    let stated = nf * (nf - 1.0) / 2.0;
                    WeitzenbockData {
                        kappa_lower: Some(stated / 4.0),
                        scalar_profile: Some(ScalarProfile::Constant(stated)),
                        derived_profile: Some(ScalarProfile::Constant(nf * (nf - 1.0))),
                        note: Some(format!(
                            "stated R = n(n-1)/2 = {stated}; round S^{n} has R = n(n-1) = {}",
                            nf * (nf - 1.0)
                        )),
                    }
                }
                None => WeitzenbockData {
                    kappa_lower: None,
                    scalar_profile: None,
                    derived_profile: None,
                    note: Some("fibre curvature not modelled; fibre part lumped into A0^2".into()),
                },
            },
            Shape::WarpedCap { n, .. } => {
                let nf = *n as f64;
                let r = nf * (nf - 1.0);
                WeitzenbockData {
                    kappa_lower: Some(r / 4.0),
                    scalar_profile: Some(ScalarProfile::Constant(r)),
                    derived_profile: Some(ScalarProfile::Constant(r)),
                    note: None,
                }
            }
            Shape::WarpedHorn { n, .. } => {
                let nf = *n as f64;
                let stated = ScalarProfile::Exponential { a: nf * (nf + 1.0) / 2.0, b: nf * (nf + 3.0) / 2.0 };
                let derived = ScalarProfile::Exponential { a: nf * (nf - 1.0), b: nf * (nf + 1.0) };
                WeitzenbockData {
                    kappa_lower: None,
                    scalar_profile: Some(stated),
                    derived_profile: Some(derived),
                    note: Some(format!(
                        "stated R(t) = n(n+1)/2 e^(2t) - n(n+3)/2; dt^2 + e^(-2t) g_(S^{n}) has R(t) = n(n-1) e^(2t) - n(n+1)"
                    )),
                }
            }
        }
    }

    pub fn coercivity_bound(&self) -> Option<Coercivity> {
        let gap = |dim: f64, kappa: f64| (dim * kappa / (dim - 1.0)).sqrt();
        match &self.shape {
            Shape::WarpedHorn { .. } => Some(Coercivity { at_infinity: CoercivityAtInfinity::Any, gap_radius: None }),
            Shape::WarpedCap { n, .. } => {
                let kappa = self.weitzenbock().kappa_lower?;
                Some(Coercivity {
                    at_infinity: CoercivityAtInfinity::Constant(kappa.sqrt()),
                    gap_radius: Some(gap(*n as f64, kappa)),
                })
            }
            Shape::ProductCylinder { round_sphere: Some(n), .. } => {
                let kappa = self.weitzenbock().kappa_lower?;
                Some(Coercivity {
                    at_infinity: CoercivityAtInfinity::Constant(kappa.sqrt()),
                    gap_radius: Some(gap(*n as f64 + 1.0, kappa)),
                })
            }
            _ => None,
        }
    }
}

fn two_ends(start: Vec<usize>, finish: Vec<usize>) -> Vec<Trace> {
    let k = start.len();
    vec![
        Trace { end: End::Start, coords: start, map: CMat::identity(k, k) },
        Trace { end: End::Finish, coords: finish, map: CMat::identity(k, k) },
    ]
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Disk => write!(f, "disk(cutoff={})", self.cutoff),
            Shape::ProductCylinder { length, fiber, .. } => {
                write!(f, "cylinder(L={length}, fibre lines={}, cutoff={})", fiber.lines().len(), self.cutoff)
            }
            Shape::WarpedCap { n, r, .. } => write!(f, "cap(n={n}, r={r}, cutoff={})", self.cutoff),
            Shape::WarpedHorn { n, window } => write!(f, "horn(n={n}, window={window}, cutoff={})", self.cutoff),
        }
    }
}
