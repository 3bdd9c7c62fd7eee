//! Spectral Galerkin discretisation of mode problems with boundary
//! conditions imposed as exact linear constraints on nodal values.
//!
//! Trial functions are polynomials given by their values at Lobatto nodes.
//! `L` is sampled at Gauss points, so `‖LY‖²_ρ` and `⟨LY, Y⟩_ρ` are
//! quadratic forms in the nodal values. Trace conditions `T Y ∈ B` become
//! rows `U*T` with `U` an orthonormal basis of `B^⊥`, apex regularity
//! becomes `Y_a(0) = 0`, and the constrained space is an orthonormal basis of
//! the null space of all rows.

use std::collections::BTreeMap;

use dbvp_core::linalg::{c, cmul, cmul_adj, complement, max_abs, orth, orth_tol, singular_values_tall, CMat};
use dbvp_core::BoundaryCondition;
use nalgebra::{Cholesky, DMatrix};
use serde::Serialize;

use crate::error::SolverError;
use crate::exec::Exec;
use crate::geometry::ModeFamily;
use crate::grid::Grid;
use crate::problem::{End, ModeProblem};

pub const DEFAULT_NODES: usize = 64;
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
pub const DEFAULT_CONV_TOL: f64 = 1e-6;
/// Required separation (as a ratio) between the rank threshold and the
/// nearest singular values on either side.
pub const GAP_RATIO: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    pub grid_n: usize,
    pub rank_tol: f64,
    pub conv_tol: f64,
    pub exec: Exec,
    /// Run the refinement gate on eigenvalues.
    pub check_convergence: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grid_n: DEFAULT_NODES,
            rank_tol: DEFAULT_RANK_TOL,
            conv_tol: DEFAULT_CONV_TOL,
            exec: Exec::default(),
            check_convergence: true,
        }
    }
}

/// Projectors of a condition and of its adjoint, computed once per family.
#[derive(Clone, Debug)]
pub struct ConditionView {
    pub projector: CMat,
    pub adjoint_projector: CMat,
}

impl ConditionView {
    pub fn new(b: &BoundaryCondition) -> Self {
        ConditionView { projector: b.projector(), adjoint_projector: b.adjoint().projector() }
    }

    /// The adjoint condition's view.
    pub fn swapped(&self) -> Self {
        ConditionView { projector: self.adjoint_projector.clone(), adjoint_projector: self.projector.clone() }
    }
}

/// A cluster of mode problems coupled by a boundary condition, discretised.
///
/// Unknowns are whitened nodal values: per mode and component, `Y = Wᵀ⁻¹ Z`
/// with `W Wᵀ` the `L²_ρ` Gram matrix of the nodal basis, so the Gram matrix
/// in `Z` is the identity. `to_nodal` maps `Z` back to nodal values.
#[derive(Clone, Debug)]
pub struct AssembledMode {
    pub modes: Vec<u32>,
    /// `√(wρ)·L` at Gauss points acting on `Z`.
    pub operator: CMat,
    /// `√(wρ)·Y` at Gauss points acting on `Z`.
    pub mass: CMat,
    /// `⟨LY, Y⟩_ρ` as a matrix on `Z`.
    pub stiffness: CMat,
    /// All constraint rows on `Z`: apex rows first, then trace rows.
    pub constraints: CMat,
    /// Indices of trace rows within `constraints`.
    pub trace_rows: Vec<usize>,
    /// Codimension of the condition on the cluster's boundary coordinates.
    pub codim: usize,
    /// Orthonormal basis of the constrained space in `Z`.
    pub basis: CMat,
    pub constrained_dim: usize,
    pub to_nodal: CMat,
    /// Formally selfadjoint problem with a condition equal to its adjoint on
    /// the cluster's coordinates.
    pub selfadjoint: bool,
    pub grid_n: usize,
}

impl AssembledMode {
    /// Constrained basis as nodal values.
    pub fn nodal_basis(&self) -> CMat {
        cmul(&self.to_nodal, &self.basis)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelResult {
    pub dim: usize,
    pub sigma_max: f64,
    /// Smallest singular value counted as nonzero.
    pub smallest_kept: Option<f64>,
    /// Largest singular value counted as zero.
    pub largest_dropped: Option<f64>,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabeledEigenvalue {
    pub value: f64,
    pub mode: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<LabeledEigenvalue>,
    pub kernel_dims: BTreeMap<u32, usize>,
    pub residuals: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl SpectralResult {
    pub fn min_abs(&self) -> Option<f64> {
        self.eigenvalues.iter().map(|e| e.value.abs()).min_by(|a, b| a.total_cmp(b))
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.eigenvalues.iter().any(|e| (e.value - x).abs() <= tol)
    }
}

fn real_to_c(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c(x, 0.0))
}

struct Blocks {
    op: CMat,
    mass: CMat,
    stiff: CMat,
    /// `Wᵀ⁻¹`, shared by all components.
    unwhiten: DMatrix<f64>,
}

/// Per-mode Galerkin blocks in whitened coordinates.
fn mode_blocks(p: &ModeProblem, grid: &Grid) -> Result<Blocks, SolverError> {
    let n = grid.len();
    let k = grid.gauss.len();
    let nc = p.comps();
    let j = p.coeffs.j();
    let sw: Vec<f64> = grid
        .gauss
        .iter()
        .zip(&grid.gauss_weights)
        .map(|(&t, &w)| (w * p.coeffs.rho(t)).sqrt())
        .collect();
    let vs = DMatrix::<f64>::from_fn(k, n, |g, l| grid.interp[(g, l)] * sw[g]);
    let vds = DMatrix::<f64>::from_fn(k, n, |g, l| grid.interp_diff[(g, l)] * sw[g]);
    let chol = Cholesky::new(vs.tr_mul(&vs)).ok_or(SolverError::Singular { modes: vec![p.id] })?;
    // Y = L⁻ᵀ Z
    let unwhiten = chol
        .l()
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(SolverError::Singular { modes: vec![p.id] })?;
    let w = &vs * &unwhiten;
    let wd = &vds * &unwhiten;
    let ps: Vec<CMat> = grid.gauss.iter().map(|&t| p.coeffs.p(t)).collect();
    let mut op = CMat::zeros(nc * k, nc * n);
    for a in 0..nc {
        for b in 0..nc {
            let jab = j[(a, b)];
            let pab: Vec<_> = ps.iter().map(|m| m[(a, b)]).collect();
            if jab == c(0.0, 0.0) && pab.iter().all(|z| *z == c(0.0, 0.0)) {
                continue;
            }
            for g in 0..k {
                for l in 0..n {
                    op[(a * k + g, b * n + l)] = jab * wd[(g, l)] + pab[g] * w[(g, l)];
                }
            }
        }
    }
    let wc = real_to_c(&w);
    let mut mass = CMat::zeros(nc * k, nc * n);
    for a in 0..nc {
        mass.view_mut((a * k, a * n), (k, n)).copy_from(&wc);
    }
    let mut stiff = CMat::zeros(nc * n, nc * n);
    for a in 0..nc {
        let s = cmul_adj(&wc, &op.rows(a * k, k).into_owned());
        stiff.view_mut((a * n, 0), (n, nc * n)).copy_from(&s);
    }
    Ok(Blocks { op, mass, stiff, unwhiten })
}

fn node_of(end: End, n: usize) -> usize {
    match end {
        End::Start => 0,
        End::Finish => n - 1,
    }
}

/// Assembles a cluster of modes under a condition given by its projector.
/// `adjoint_projector` is only used to decide selfadjointness.
pub fn assemble_cluster(
    problems: &[&ModeProblem],
    grid: &Grid,
    view: &ConditionView,
) -> Result<AssembledMode, SolverError> {
    let n = grid.len();
    let k = grid.gauss.len();
    let total_c: usize = problems.iter().map(|p| p.comps()).sum();
    let size = total_c * n;
    let mut operator = CMat::zeros(total_c * k, size);
    let mut mass = CMat::zeros(total_c * k, size);
    let mut stiffness = CMat::zeros(size, size);
    let mut to_nodal = CMat::zeros(size, size);
    let mut offsets = Vec::new();
    let mut at = 0;
    for p in problems {
        let b = mode_blocks(p, grid)?;
        let s = p.comps() * n;
        operator.view_mut((at / n * k, at), (p.comps() * k, s)).copy_from(&b.op);
        mass.view_mut((at / n * k, at), (p.comps() * k, s)).copy_from(&b.mass);
        stiffness.view_mut((at, at), (s, s)).copy_from(&b.stiff);
        let u = real_to_c(&b.unwhiten);
        for a in 0..p.comps() {
            to_nodal.view_mut((at + a * n, at + a * n), (n, n)).copy_from(&u);
        }
        offsets.push(at);
        at += s;
    }

    // constraints are first written on nodal values
    let mut rows: Vec<CMat> = Vec::new();
    for (p, &off) in problems.iter().zip(&offsets) {
        for &a in &p.apex_zero {
            let mut r = CMat::zeros(1, size);
            r[(0, off + a * n)] = c(1.0, 0.0);
            rows.push(r);
        }
    }
    let apex_count = rows.len();

    let coords: Vec<usize> = problems.iter().flat_map(|p| p.coords()).collect();
    let dim = view.projector.nrows();
    let mut trace = CMat::zeros(coords.len(), size);
    let mut row = 0;
    for (p, &off) in problems.iter().zip(&offsets) {
        for tr in &p.traces {
            let node = node_of(tr.end, n);
            for i in 0..tr.coords.len() {
                for comp in 0..p.comps() {
                    trace[(row + i, off + comp * n + node)] += tr.map[(i, comp)];
                }
            }
            row += tr.coords.len();
        }
    }
    let mut codim = 0;
    let mut selfadjoint = problems.iter().all(|p| p.is_formally_selfadjoint());
    if !coords.is_empty() {
        let outside: Vec<usize> = (0..dim).filter(|x| !coords.contains(x)).collect();
        let leak = coords
            .iter()
            .flat_map(|&x| outside.iter().map(move |&y| (x, y)))
            .map(|(x, y)| view.projector[(x, y)].norm())
            .fold(0.0, f64::max);
        if leak > 1e-10 {
            return Err(SolverError::MissingBlock { mode: problems[0].id });
        }
        let pb = CMat::from_fn(coords.len(), coords.len(), |i, j| view.projector[(coords[i], coords[j])]);
        let pa = CMat::from_fn(coords.len(), coords.len(), |i, j| {
            view.adjoint_projector[(coords[i], coords[j])]
        });
        selfadjoint &= max_abs(&(&pb - &pa)) <= 1e-10;
        let id = CMat::identity(coords.len(), coords.len());
        let u = orth_tol(&(id - pb), 1e-8);
        codim = u.ncols();
        if codim > 0 {
            rows.push(u.adjoint() * &trace);
        }
    }
    let nrows: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut constraints = CMat::zeros(nrows, size);
    let mut r0 = 0;
    for r in &rows {
        constraints.view_mut((r0, 0), (r.nrows(), size)).copy_from(r);
        r0 += r.nrows();
    }
    let constraints = cmul(&constraints, &to_nodal);
    let trace_rows = (apex_count..nrows).collect();
    let basis = if nrows == 0 { CMat::identity(size, size) } else { complement(&orth(&constraints.adjoint())) };
    let constrained_dim = basis.ncols();
    Ok(AssembledMode {
        modes: problems.iter().map(|p| p.id).collect(),
        operator,
        mass,
        stiffness,
        constraints,
        trace_rows,
        codim,
        basis,
        constrained_dim,
        to_nodal,
        selfadjoint,
        grid_n: n,
    })
}

/// Single-mode assembly.
pub fn assemble(mode: &ModeProblem, grid: &Grid, b: &BoundaryCondition) -> Result<AssembledMode, SolverError> {
    assemble_cluster(&[mode], grid, &ConditionView::new(b))
}

/// Number of singular values of `L` on the constrained space (in the `L²_ρ`
/// norm) below `tol · σ_max`.
pub fn kernel_dim(am: &AssembledMode, tol: f64) -> Result<KernelResult, SolverError> {
    if am.constrained_dim == 0 {
        return Ok(KernelResult { dim: 0, sigma_max: 0.0, smallest_kept: None, largest_dropped: None, warning: None });
    }
    let sv = singular_values_tall(&cmul(&am.operator, &am.basis));
    let sigma_max = sv.first().cloned().unwrap_or(0.0);
    let thr = tol * sigma_max;
    let dim = sv.iter().filter(|&&x| x < thr).count();
    let smallest_kept = sv.iter().cloned().filter(|&x| x >= thr).reduce(f64::min);
    let largest_dropped = sv.iter().cloned().filter(|&x| x < thr).reduce(f64::max);
    let mut warning = None;
    if smallest_kept.is_some_and(|x| x < GAP_RATIO * thr) || largest_dropped.is_some_and(|x| x * GAP_RATIO > thr) {
        warning = Some(format!(
            "modes {:?}: singular values near the rank threshold {thr:.3e} (kept {smallest_kept:?}, dropped {largest_dropped:?})",
            am.modes
        ));
    }
    Ok(KernelResult { dim, sigma_max, smallest_kept, largest_dropped, warning })
}

/// Ritz pairs whose relative residual `‖LY − θY‖_ρ / ‖Y‖_ρ` exceeds this are
/// discarded as artefacts of projecting a first-order operator.
pub const RITZ_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RitzValues {
    /// Ascending.
    pub values: Vec<f64>,
    /// Relative size of the antihermitian part of the projected operator.
    pub defect: f64,
    /// Ritz values dropped for a large residual.
    pub spurious: Vec<f64>,
    /// Largest residual among the kept values.
    pub worst_residual: f64,
}

/// Eigenvalues of the constrained, `L²_ρ`-projected operator.
pub fn eigenvalues(am: &AssembledMode) -> Result<RitzValues, SolverError> {
    if !am.selfadjoint {
        return Err(SolverError::NotSelfadjoint { modes: am.modes.clone() });
    }
    if am.constrained_dim == 0 {
        return Ok(RitzValues::default());
    }
    let m = cmul_adj(&am.basis, &cmul(&am.stiffness, &am.basis));
    let defect = max_abs(&(&m - m.adjoint())) / max_abs(&m).max(1.0);
    let herm = (&m + m.adjoint()) * c(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let vecs = cmul(&am.basis, &eig.eigenvectors);
    let (lv, mv) = (cmul(&am.operator, &vecs), cmul(&am.mass, &vecs));
    let mut out = RitzValues { defect, ..RitzValues::default() };
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // degenerate Ritz values can mix converged and spurious vectors, so
    // residuals are taken over each group of equal values
    let mut start = 0;
    while start < order.len() {
        let theta0 = eig.eigenvalues[order[start]];
        let mut end = start + 1;
        while end < order.len() && eig.eigenvalues[order[end]] - theta0 <= 1e-8 * theta0.abs().max(1.0) {
            end += 1;
        }
        let group = &order[start..end];
        let theta = group.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / group.len() as f64;
        let mut r = CMat::zeros(lv.nrows(), group.len());
        for (j, &i) in group.iter().enumerate() {
            r.set_column(j, &(lv.column(i) - mv.column(i) * c(theta, 0.0)));
        }
        let tol = RITZ_TOL * theta.abs().max(1.0);
        for sv in singular_values_tall(&r) {
            if sv <= tol {
                out.values.push(theta);
                out.worst_residual = out.worst_residual.max(sv);
            } else {
                out.spurious.push(theta);
            }
        }
        start = end;
    }
    out.values.sort_by(|a, b| a.total_cmp(b));
    out.spurious.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Groups mode indices coupled by the condition. Coordinates traced by no
/// mode must not be coupled to traced ones.
pub fn clusters(family: &ModeFamily, projector: &CMat) -> Result<Vec<Vec<usize>>, SolverError> {
    let np = family.problems.len();
    let dim = projector.nrows();
    let mut owner: Vec<Option<usize>> = vec![None; dim];
    for (i, p) in family.problems.iter().enumerate() {
        for x in p.coords() {
            owner[x] = Some(i);
        }
    }
    let mut parent: Vec<usize> = (0..np).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for x in 0..dim {
        for y in 0..dim {
            if x == y || projector[(x, y)].norm() <= 1e-10 {
                continue;
            }
            match (owner[x], owner[y]) {
                (Some(a), Some(b)) => {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
                (Some(a), None) | (None, Some(a)) => {
                    return Err(SolverError::MissingBlock { mode: family.problems[a].id });
                }
                (None, None) => {}
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..np {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    Ok(groups.into_values().collect())
}

/// Kernel dimensions of every cluster of a family under a condition.
pub fn family_kernels(
    family: &ModeFamily,
    view: &ConditionView,
    opts: &SolverOptions,
) -> Result<Vec<(Vec<u32>, KernelResult)>, SolverError> {
    let grid = Grid::new(opts.grid_n, family.t_max)?;
    let groups = clusters(family, &view.projector)?;
    let results = opts.exec.map(&groups, |g| {
        let probs: Vec<&ModeProblem> = g.iter().map(|&i| &family.problems[i]).collect();
        let am = assemble_cluster(&probs, &grid, view)?;
        Ok::<_, SolverError>((am.modes.clone(), kernel_dim(&am, opts.rank_tol)?))
    });
    results.into_iter().collect()
}

struct ClusterSpectrum {
    modes: Vec<u32>,
    ritz: RitzValues,
    kernel: Option<KernelResult>,
}

fn family_eigen(
    family: &ModeFamily,
    view: &ConditionView,
    grid: &Grid,
    exec: Exec,
    rank_tol: Option<f64>,
) -> Result<Vec<ClusterSpectrum>, SolverError> {
    let groups = clusters(family, &view.projector)?;
    let results = exec.map(&groups, |g| {
        let probs: Vec<&ModeProblem> = g.iter().map(|&i| &family.problems[i]).collect();
        let am = assemble_cluster(&probs, grid, view)?;
        let ritz = eigenvalues(&am)?;
        let kernel = rank_tol.map(|tol| kernel_dim(&am, tol)).transpose()?;
        Ok::<_, SolverError>(ClusterSpectrum { modes: am.modes.clone(), ritz, kernel })
    });
    results.into_iter().collect()
}

/// Eigenvalues of every mode cluster, with the refinement gate on the window
/// `[−window, window]`.
pub fn spectrum(
    family: &ModeFamily,
    b: &BoundaryCondition,
    window: f64,
    opts: &SolverOptions,
) -> Result<SpectralResult, SolverError> {
    let view = ConditionView::new(b);
    let grid = Grid::new(opts.grid_n, family.t_max)?;
    let coarse = family_eigen(family, &view, &grid, opts.exec, Some(opts.rank_tol))?;
    let mut out = SpectralResult::default();
    let (mut defect, mut ritz, mut spurious) = (0.0f64, 0.0f64, 0usize);
    for cs in &coarse {
        defect = defect.max(cs.ritz.defect);
        ritz = ritz.max(cs.ritz.worst_residual);
        spurious += cs.ritz.spurious.iter().filter(|v| v.abs() <= window).count();
        for &v in cs.ritz.values.iter().filter(|v| v.abs() <= window) {
            out.eigenvalues.push(LabeledEigenvalue { value: v, mode: cs.modes[0] });
        }
        if let Some(k) = &cs.kernel {
            out.kernel_dims.insert(cs.modes[0], k.dim);
            if let Some(w) = &k.warning {
                out.warnings.push(w.clone());
            }
        }
    }
    out.residuals.insert("hermitian_defect".into(), defect);
    out.residuals.insert("ritz_residual".into(), ritz);
    out.residuals.insert("spurious_ritz_in_window".into(), spurious as f64);
    if opts.check_convergence {
        let fine = family_eigen(family, &view, &grid.refined()?, opts.exec, None)?;
        let mut worst: f64 = 0.0;
        for (c0, c1) in coarse.iter().zip(&fine) {
            for &v in c0.ritz.values.iter().filter(|v| v.abs() <= window) {
                let change = c1.ritz.values.iter().map(|w| (w - v).abs()).fold(f64::INFINITY, f64::min);
                worst = worst.max(change);
                if change > opts.conv_tol {
                    return Err(SolverError::Convergence { value: v, change, tol: opts.conv_tol });
                }
            }
        }
        out.residuals.insert("refinement_change".into(), worst);
    }
    out.eigenvalues.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.mode.cmp(&b.mode)));
    Ok(out)
}
