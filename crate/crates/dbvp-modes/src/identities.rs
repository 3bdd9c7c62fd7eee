//! Discrete residuals of integration by parts, the Weitzenböck formula, the
//! Killing equation and the pointwise Cauchy–Schwarz bound for mode problems.

use dbvp_core::linalg::{c, CMat, CVec};
use dbvp_core::BoundaryCondition;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::SolverError;
use crate::geometry::{Geometry, ModeFamily, Shape, Warp};
use crate::grid::Grid;
use crate::problem::{Coefficients, FormalAdjoint, ModeProblem};

/// A smooth vector-valued profile `Σ a·cos(ωt + θ)` per component.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothProfile {
    /// Per component: `(ω, θ, re a, im a)`.
    pub terms: Vec<Vec<(f64, f64, f64, f64)>>,
}

impl SmoothProfile {
    pub fn random<R: Rng>(comps: usize, rng: &mut R) -> Self {
        let terms = (0..comps)
            .map(|_| {
                (0..4)
                    .map(|_| {
                        (
                            rng.random_range(0.0..3.0),
                            rng.random_range(0.0..std::f64::consts::TAU),
                            rng.random_range(-1.0..1.0),
                            rng.random_range(-1.0..1.0),
                        )
                    })
                    .collect()
            })
            .collect();
        SmoothProfile { terms }
    }

    pub fn constant(values: &[Complex64]) -> Self {
        SmoothProfile { terms: values.iter().map(|z| vec![(0.0, 0.0, z.re, z.im)]).collect() }
    }

    pub fn eval(&self, t: f64) -> CVec {
        CVec::from_iterator(
            self.terms.len(),
            self.terms.iter().map(|ts| ts.iter().map(|&(w, th, re, im)| c(re, im) * (w * t + th).cos()).sum()),
        )
    }

    /// Nodal values on a grid as an `n × comps` matrix.
    pub fn nodal(&self, grid: &Grid) -> CMat {
        nodal_on(self, &grid.nodes)
    }
}

fn nodal_on(p: &SmoothProfile, ts: &[f64]) -> CMat {
    let k = p.terms.len();
    let mut m = CMat::zeros(ts.len(), k);
    for (i, &t) in ts.iter().enumerate() {
        m.set_row(i, &p.eval(t).transpose());
    }
    m
}

fn to_c(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// `J Y' + P Y` at points with values `y` and derivatives `dy` (rows = points).
fn apply_at(coeffs: &dyn Coefficients, ts: &[f64], y: &CMat, dy: &CMat) -> CMat {
    let j = coeffs.j();
    let mut out = CMat::zeros(ts.len(), y.ncols());
    for (i, &t) in ts.iter().enumerate() {
        let v = &j * dy.row(i).transpose() + coeffs.p(t) * y.row(i).transpose();
        out.set_row(i, &v.transpose());
    }
    out
}

fn weighted_inner(coeffs: &dyn Coefficients, grid: &Grid, a: &CMat, b: &CMat) -> Complex64 {
    (0..grid.gauss.len())
        .map(|g| {
            let w = grid.gauss_weights[g] * coeffs.rho(grid.gauss[g]);
            b.row(g).dotc(&a.row(g)) * w
        })
        .sum()
}

/// `|∫⟨Lφ,ψ⟩ρ − ∫⟨φ,L†ψ⟩ρ − [ρ⟨Jφ,ψ⟩]₀ᵀ|` by Gauss quadrature of the nodal
/// interpolants of `phi` and `psi` (`n × comps`).
pub fn greens_residual(mode: &ModeProblem, grid: &Grid, phi: &CMat, psi: &CMat) -> f64 {
    let coeffs = mode.coeffs.as_ref();
    let adj = FormalAdjoint(mode.coeffs.clone());
    let (ip, idp) = (to_c(&grid.interp), to_c(&grid.interp_diff));
    let (yg, dyg) = (&ip * phi, &idp * phi);
    let (zg, dzg) = (&ip * psi, &idp * psi);
    let lphi = apply_at(coeffs, &grid.gauss, &yg, &dyg);
    let ladj = apply_at(&adj, &grid.gauss, &zg, &dzg);
    let lhs = weighted_inner(coeffs, grid, &lphi, &zg);
    let rhs = weighted_inner(coeffs, grid, &yg, &ladj);
    let j = coeffs.j();
    let n = grid.len();
    let edge = |i: usize, t: f64| {
        let jy = &j * phi.row(i).transpose();
        psi.row(i).transpose().dotc(&jy) * coeffs.rho(t)
    };
    let boundary = edge(n - 1, grid.t_max) - edge(0, 0.0);
    (lhs - rhs - boundary).norm()
}

/// Relative residual of `L†L φ = −φ'' − (ρ'/ρ)φ' + Vφ + 𝒦φ` at the nodes of
/// a spectral grid on `[from, T]`, `from > 0` keeping clear of an apex.
pub fn weitzenbock_residual(mode: &ModeProblem, n: usize, from: f64, profile: &SmoothProfile) -> Result<f64, SolverError> {
    let coeffs = mode.coeffs.as_ref();
    let adj = FormalAdjoint(mode.coeffs.clone());
    let local = Grid::new(n, mode.t_max - from)?;
    let ts: Vec<f64> = local.nodes.iter().map(|s| s + from).collect();
    let d = to_c(&local.diff);
    let y = nodal_on(profile, &ts);
    let dy = &d * &y;
    let ly = apply_at(coeffs, &ts, &y, &dy);
    let dly = &d * &ly;
    let lhs = apply_at(&adj, &ts, &ly, &dly);
    let ddy = &d * &dy;
    let mut rhs = CMat::zeros(ts.len(), y.ncols());
    for (i, &t) in ts.iter().enumerate() {
        let v = coeffs.rough_potential(t).ok_or(SolverError::Singular { modes: vec![mode.id] })?;
        let k = coeffs.curvature_term(t).unwrap_or(0.0);
        let yi = y.row(i).transpose();
        let r = -ddy.row(i).transpose() - dy.row(i).transpose() * c(coeffs.log_rho_prime(t), 0.0)
            + v * &yi
            + yi * c(k, 0.0);
        rhs.set_row(i, &r.transpose());
    }
    let scale = lhs.norm().max(rhs.norm()).max(1.0);
    Ok((lhs - rhs).norm() / scale)
}

/// Outcome of integrating the Killing equation on a lowest cap mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KillingReport {
    pub alpha: f64,
    pub mode: u32,
    /// `nα`.
    pub eigenvalue: f64,
    /// `‖Lφ − nαφ‖_ρ / ‖φ‖_ρ`.
    pub eigen_residual: f64,
    /// `max_t | |φ(t)| − |φ(0)| |`.
    pub norm_deviation: f64,
    /// Trace at the boundary as a vector of boundary coordinates.
    pub trace: Vec<(usize, f64, f64)>,
    /// Relative distance of the trace from the condition, when one is given.
    pub membership_residual: Option<f64>,
}

fn cap_params(geometry: &Geometry) -> Result<(usize, f64), SolverError> {
    match geometry.shape {
        Shape::WarpedCap { n, r, .. } => Ok((n, r)),
        _ => Err(SolverError::Geometry(crate::error::GeometryError::InvalidParameter(
            "Killing profiles are only set up for caps".into(),
        ))),
    }
}

/// Lowest mode with the sign of `alpha` in a cap family.
fn lowest_mode(family: &ModeFamily, positive: bool) -> Option<&ModeProblem> {
    family
        .problems
        .iter()
        .filter(|p| (p.mu > 0.0) == positive)
        .min_by(|a, b| a.mu.abs().total_cmp(&b.mu.abs()).then(a.id.cmp(&b.id)))
}

/// Integrates `φ' = αJ*φ` on the lowest cap mode with `sign μ = sign α` by
/// collocation, starting from the regular branch at the apex, and checks it
/// against the mode operator and, optionally, a boundary condition.
pub fn killing_check(
    geometry: &Geometry,
    alpha: f64,
    grid_n: usize,
    b: Option<&BoundaryCondition>,
) -> Result<KillingReport, SolverError> {
    let (dim, _) = cap_params(geometry)?;
    let family = geometry.reduce_to_modes()?;
    let mode = lowest_mode(&family, alpha > 0.0).ok_or(SolverError::Singular { modes: vec![] })?;
    let grid = Grid::new(grid_n, family.t_max)?;
    let n = grid.len();
    let js = mode.coeffs.j().adjoint();
    // unknowns: component-major nodal values
    let mut sys = CMat::zeros(2 * n, 2 * n);
    let mut rhs = CVec::zeros(2 * n);
    for a in 0..2 {
        for i in 0..n {
            for l in 0..n {
                sys[(a * n + i, a * n + l)] += c(grid.diff[(i, l)], 0.0);
            }
            for bb in 0..2 {
                sys[(a * n + i, bb * n + i)] -= js[(a, bb)] * alpha;
            }
        }
    }
    let start = if alpha > 0.0 { [0.0, 1.0] } else { [1.0, 0.0] };
    for a in 0..2 {
        let row = a * n;
        sys.row_mut(row).fill(c(0.0, 0.0));
        sys[(row, a * n)] = c(1.0, 0.0);
        rhs[row] = c(start[a], 0.0);
    }
    let sol = sys.lu().solve(&rhs).ok_or(SolverError::Singular { modes: vec![mode.id] })?;
    let phi = CMat::from_fn(n, 2, |i, a| sol[a * n + i]);

    let (ip, idp) = (to_c(&grid.interp), to_c(&grid.interp_diff));
    let (yg, dyg) = (&ip * &phi, &idp * &phi);
    let lphi = apply_at(mode.coeffs.as_ref(), &grid.gauss, &yg, &dyg);
    let eigenvalue = dim as f64 * alpha;
    let diff = &lphi - &yg * c(eigenvalue, 0.0);
    let coeffs = mode.coeffs.as_ref();
    let num = weighted_inner(coeffs, &grid, &diff, &diff).re.sqrt();
    let den = weighted_inner(coeffs, &grid, &yg, &yg).re.sqrt();
    let n0 = phi.row(0).norm();
    let norm_deviation = (0..n).map(|i| (phi.row(i).norm() - n0).abs()).fold(0.0, f64::max);

    let tr = &mode.traces[0];
    let end = phi.row(n - 1).transpose();
    let vals = &tr.map * end;
    let trace: Vec<(usize, f64, f64)> = tr.coords.iter().zip(vals.iter()).map(|(&x, z)| (x, z.re, z.im)).collect();
    let membership_residual = b.map(|b| {
        let mut x = CVec::zeros(b.spec().dim());
        for &(k, re, im) in &trace {
            x[k] = c(re, im);
        }
        b.membership_residual(&x) / x.norm()
    });
    Ok(KillingReport {
        alpha,
        mode: mode.id,
        eigenvalue,
        eigen_residual: num / den,
        norm_deviation,
        trace,
        membership_residual,
    })
}

/// Pointwise comparison of `|Dφ|²` with `n|∇φ|²` on a lowest cap mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyReport {
    pub mode: u32,
    /// `max_t (|Dφ|² − n|∇φ|²) / n|∇φ|²`; must be `≤ 0` up to rounding.
    pub worst_excess: f64,
    pub points: usize,
}

/// `|∇φ|²` and `|Dφ|²` of a lowest cap mode section at `t > 0`.
///
/// For `|μ| = m/2` the covariant derivative splits into the radial part `φ'`
/// and a tangential part of size `(m/4f²)((1 ± f')²|φ₁|² + (1 ∓ f')²|φ₂|²)`,
/// upper signs for `μ > 0`.
fn cauchy_terms(mode: &ModeProblem, m: f64, warp: Warp, t: f64, y: &CVec, dy: &CVec) -> (f64, f64) {
    let (f, df) = (warp.f(t), warp.df(t));
    let s = mode.mu.signum();
    let tang = m / (4.0 * f * f) * ((1.0 + s * df).powi(2) * y[0].norm_sqr() + (1.0 - s * df).powi(2) * y[1].norm_sqr());
    let grad = dy.norm_squared() + tang;
    let d = mode.apply(t, &CMat::from_column_slice(2, 1, y.as_slice()), &CMat::from_column_slice(2, 1, dy.as_slice()));
    (d.norm_squared(), grad)
}

/// Checks `|Dφ|² ≤ n|∇φ|²` at the interior nodes for a profile on the lowest
/// mode with the sign of `positive`.
pub fn cauchy_check(
    geometry: &Geometry,
    positive: bool,
    grid_n: usize,
    profile: &SmoothProfile,
) -> Result<CauchyReport, SolverError> {
    let (dim, _) = cap_params(geometry)?;
    let family = geometry.reduce_to_modes()?;
    let mode = lowest_mode(&family, positive).ok_or(SolverError::Singular { modes: vec![] })?;
    let grid = Grid::new(grid_n, family.t_max)?;
    let y = profile.nodal(&grid);
    let dy = to_c(&grid.diff) * &y;
    let m = (dim - 1) as f64;
    let mut worst = f64::NEG_INFINITY;
    for i in 1..grid.len() {
        let (d2, g2) = cauchy_terms(mode, m, Warp::Sin, grid.nodes[i], &y.row(i).transpose(), &dy.row(i).transpose());
        let bound = dim as f64 * g2;
        if bound > 0.0 {
            worst = worst.max((d2 - bound) / bound);
        }
    }
    Ok(CauchyReport { mode: mode.id, worst_excess: worst, points: grid.len() - 1 })
}

/// The Killing profile of `killing_check` as a smooth profile, for equality
/// tests of the Cauchy bound.
pub fn killing_profile(alpha: f64) -> SmoothProfile {
    // φ = (sin αt, cos αt) or (cos αt, −sin αt)
    let w = alpha.abs();
    let h = std::f64::consts::FRAC_PI_2;
    if alpha > 0.0 {
        SmoothProfile { terms: vec![vec![(w, -h, 1.0, 0.0)], vec![(w, 0.0, 1.0, 0.0)]] }
    } else {
        SmoothProfile { terms: vec![vec![(w, 0.0, 1.0, 0.0)], vec![(w, h, 1.0, 0.0)]] }
    }
}
