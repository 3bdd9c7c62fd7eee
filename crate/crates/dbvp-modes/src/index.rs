//! Indices as sums of per-mode kernel dimensions, and the integer identities
//! relating them.

use std::sync::Arc;

use dbvp_core::linalg::{c, max_abs, CMat};
use dbvp_core::{BoundaryCondition, BoundarySpectrum, ConditionTag, Interval};
use serde::Serialize;

use crate::error::IndexError;
use crate::geometry::{Geometry, ModeFamily, Shape};
use crate::periodic::periodic_index;
use crate::solver::{clusters, family_kernels, ConditionView, SolverOptions};

/// Values of `s` used when deforming `g` to `s·g`.
pub const HOMOTOPY_STEPS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeIndex {
    /// Modes solved together; dimensions are attributed to the first one.
    pub modes: Vec<u32>,
    pub ker_dim: usize,
    pub coker_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub check: String,
    pub geometry: String,
    pub condition_tags: Vec<String>,
    pub lhs: i64,
    pub rhs: i64,
    pub pass: bool,
    pub resolutions: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckEntry {
    fn new(check: &str, geometry: String, tags: Vec<String>, lhs: i64, rhs: i64, opts: &SolverOptions) -> Self {
        CheckEntry {
            check: check.into(),
            geometry,
            condition_tags: tags,
            lhs,
            rhs,
            pass: lhs == rhs,
            resolutions: vec![opts.grid_n],
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Solver warnings fail a check even when the integers agree.
    fn with_warnings(mut self, warnings: &[String]) -> Self {
        if !warnings.is_empty() {
            self.pass = false;
            let w = warnings.join("; ");
            self.note = Some(match self.note.take() {
                Some(n) => format!("{n}; {w}"),
                None => w,
            });
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub geometry: String,
    pub condition: String,
    pub per_mode: Vec<ModeIndex>,
    pub kernel: usize,
    pub cokernel: usize,
    pub index: i64,
    /// Size of the coupling left out beyond the cutoff on the outermost modes.
    pub tail_bound: f64,
    pub checks: Vec<CheckEntry>,
    pub warnings: Vec<String>,
    pub grid_n: usize,
}

pub fn tag_name(tag: &ConditionTag) -> String {
    match tag {
        ConditionTag::Gaps { a } => format!("gaps:a={a}"),
        ConditionTag::Aps => "aps".into(),
        ConditionTag::Maps => "maps".into(),
        ConditionTag::Chirality { signs, minus } => {
            let s: Vec<String> = signs.iter().map(|s| format!("{s:+}")).collect();
            format!("chirality{}:{}", if *minus { "-" } else { "" }, s.join(","))
        }
        ConditionTag::Transmission => "transmission".into(),
        ConditionTag::ApsLagrangian => "aps+lagrangian".into(),
        ConditionTag::Custom => "custom".into(),
        ConditionTag::Adjoint { of } => format!("adjoint({})", tag_name(of)),
        ConditionTag::Scaled { s, of } => format!("{s}*{}", tag_name(of)),
    }
}

fn same_spectrum(a: &BoundarySpectrum, b: &BoundarySpectrum) -> bool {
    a.dim() == b.dim()
        && a.coord_lambdas().iter().zip(b.coord_lambdas()).all(|(x, y)| (x - y).abs() <= 1e-12)
        && max_abs(&(a.sigma_matrix() - b.sigma_matrix())) <= 1e-12
}

/// Modes beyond the cutoff are not solved. They are left out only when every
/// mode touching an outermost line is decoupled from the others by `b`, so
/// that the pattern of `b` on that mode is what a larger cutoff would see
/// mode by mode. Returns the largest decay witness of those modes.
fn certify_tail(family: &ModeFamily, spec: &BoundarySpectrum, projector: &CMat) -> Result<f64, IndexError> {
    let top = spec.max_abs_lambda();
    let outer: Vec<u32> = spec.lines().iter().filter(|l| (l.lambda.abs() - top).abs() <= 1e-12).map(|l| l.id).collect();
    let groups = clusters(family, projector)?;
    let mut bound: f64 = 0.0;
    for (i, p) in family.problems.iter().enumerate() {
        if !p.line_ids.iter().any(|id| outer.contains(id)) {
            continue;
        }
        let group = groups.iter().find(|g| g.contains(&i)).expect("every mode is clustered");
        if group.len() > 1 {
            let ids: Vec<u32> = group.iter().map(|&k| family.problems[k].id).collect();
            return Err(IndexError::TailPolicy(format!(
                "condition couples outermost mode {} with modes {ids:?}",
                p.id
            )));
        }
        bound = bound.max(p.witness);
    }
    Ok(bound)
}

/// `dim ker D_B − dim ker D†_{B^ad}`, both sides from the mode solver.
pub fn numeric_index(geometry: &Geometry, b: &BoundaryCondition, opts: &SolverOptions) -> Result<IndexReport, IndexError> {
    let family = geometry.reduce_to_modes()?;
    let spec = family.spec.clone().ok_or_else(|| {
        IndexError::Precondition(format!("{geometry} has no compact boundary; only coercivity data is reported"))
    })?;
    if !same_spectrum(&spec, b.spec()) {
        return Err(IndexError::Precondition("condition is built over a different boundary spectrum".into()));
    }
    let report = b.ellipticity_check();
    if !report.passed() {
        return Err(IndexError::Precondition(format!("condition {} is not elliptic", tag_name(b.tag()))));
    }
    let view = ConditionView::new(b);
    let tail_bound = certify_tail(&family, &spec, &view.projector)?;
    let primal = family_kernels(&family, &view, opts)?;
    let adjoint = family_kernels(&family.adjoint()?, &view.swapped(), opts)?;
    let mut per_mode: Vec<ModeIndex> = Vec::new();
    let mut warnings = Vec::new();
    for (modes, k) in &primal {
        per_mode.push(ModeIndex { modes: modes.clone(), ker_dim: k.dim, coker_dim: 0 });
        warnings.extend(k.warning.clone());
    }
    for (modes, k) in &adjoint {
        warnings.extend(k.warning.clone());
        match per_mode.iter_mut().find(|m| m.modes == *modes) {
            Some(m) => m.coker_dim = k.dim,
            None => per_mode.push(ModeIndex { modes: modes.clone(), ker_dim: 0, coker_dim: k.dim }),
        }
    }
    per_mode.sort_by(|a, b| a.modes.cmp(&b.modes));
    let kernel: usize = per_mode.iter().map(|m| m.ker_dim).sum();
    let cokernel: usize = per_mode.iter().map(|m| m.coker_dim).sum();
    Ok(IndexReport {
        geometry: geometry.to_string(),
        condition: tag_name(b.tag()),
        per_mode,
        kernel,
        cokernel,
        index: kernel as i64 - cokernel as i64,
        tail_bound,
        checks: Vec::new(),
        warnings,
        grid_n: opts.grid_n,
    })
}

fn spec_of(geometry: &Geometry) -> Result<Arc<BoundarySpectrum>, IndexError> {
    Ok(geometry.boundary_spectrum()?)
}

fn both_warnings(a: &IndexReport, b: &IndexReport) -> Vec<String> {
    a.warnings.iter().chain(&b.warnings).cloned().collect()
}

/// `ind D_{B(b)} − ind D_{B(a)} = dim L²_{[a,b)}(A)`.
pub fn check_gaps_shift(geometry: &Geometry, a: f64, b: f64, opts: &SolverOptions) -> Result<CheckEntry, IndexError> {
    if a > b {
        return Err(IndexError::Precondition(format!("gaps shift needs a <= b, got {a} > {b}")));
    }
    let spec = spec_of(geometry)?;
    let ba = BoundaryCondition::gaps(spec.clone(), a);
    let bb = BoundaryCondition::gaps(spec.clone(), b);
    let ia = numeric_index(geometry, &ba, opts)?;
    let ib = numeric_index(geometry, &bb, opts)?;
    let count = spec.count_in(Interval::new(a, b)) as i64;
    Ok(CheckEntry::new(
        "gaps_shift",
        geometry.to_string(),
        vec![tag_name(ba.tag()), tag_name(bb.tag())],
        ib.index - ia.index,
        count,
        opts,
    )
    .with_warnings(&both_warnings(&ia, &ib)))
}

/// `ind D_{B₂} − ind D_{B₁} = dim B₂/B₁` for `B₁ ⊆ B₂`.
pub fn check_agranovich_dynin(
    geometry: &Geometry,
    b1: &BoundaryCondition,
    b2: &BoundaryCondition,
    opts: &SolverOptions,
) -> Result<CheckEntry, IndexError> {
    let q = BoundaryCondition::quotient_dim(b1, b2)? as i64;
    let i1 = numeric_index(geometry, b1, opts)?;
    let i2 = numeric_index(geometry, b2, opts)?;
    Ok(CheckEntry::new(
        "agranovich_dynin",
        geometry.to_string(),
        vec![tag_name(b1.tag()), tag_name(b2.tag())],
        i2.index - i1.index,
        q,
        opts,
    )
    .with_warnings(&both_warnings(&i1, &i2)))
}

/// Measured `ind D_B − ind D_{B(a)}` against `dim W₊ − dim W₋`, with `a` the
/// spectral reference cut of `b`.
pub fn check_offset(geometry: &Geometry, b: &BoundaryCondition, opts: &SolverOptions) -> Result<CheckEntry, IndexError> {
    let (delta, a) = b.spectral_offset();
    let reference = BoundaryCondition::gaps(b.spec().clone(), a);
    let ib = numeric_index(geometry, b, opts)?;
    let ir = numeric_index(geometry, &reference, opts)?;
    Ok(CheckEntry::new(
        "offset",
        geometry.to_string(),
        vec![tag_name(b.tag()), tag_name(reference.tag())],
        ib.index - ir.index,
        delta,
        opts,
    )
    .with_note(format!("reference cut a = {a}"))
    .with_warnings(&both_warnings(&ib, &ir)))
}

/// The three indices of the splitting check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplittingReport {
    pub periodic: i64,
    pub transmission: i64,
    pub spectral: i64,
    pub cut: f64,
    pub entries: Vec<CheckEntry>,
}

/// Fibre cut in the largest gap of the fibre spectrum around zero, away from
/// every eigenvalue.
fn fibre_cut(fiber: &BoundarySpectrum) -> f64 {
    let above = fiber.lines().iter().filter(|l| l.lambda > 0.0).map(|l| l.lambda).fold(f64::INFINITY, f64::min);
    if above.is_finite() {
        above / 2.0
    } else {
        1.0
    }
}

/// `B(a)` on the first copy of the fibre and its counterpart on the second:
/// fibre lines `λ < a` on one end, the mirrors of `λ ≥ a` on the other.
pub fn split_condition(spec: Arc<BoundarySpectrum>, a: f64) -> Result<BoundaryCondition, IndexError> {
    let comps = spec.components();
    if comps.len() != 2 {
        return Err(IndexError::Precondition("split condition needs a doubled spectrum".into()));
    }
    let lambdas = spec.coord_lambdas();
    let owner = spec.coord_components();
    let keep: Vec<usize> = (0..spec.dim())
        .filter(|&x| if owner[x] == comps[0] { lambdas[x] < a } else { -lambdas[x] >= a })
        .collect();
    let basis = spec.unit_basis(&keep);
    Ok(BoundaryCondition::from_subspace(spec, &basis, 0.0, ConditionTag::Custom)?)
}

/// Cutting the circle `S¹_L × N` at a fibre gives the cylinder `[0, L] × N`;
/// its indices under the transmission condition and under a spectral split
/// must equal the uncut periodic index.
pub fn check_splitting(geometry: &Geometry, opts: &SolverOptions) -> Result<SplittingReport, IndexError> {
    let Shape::ProductCylinder { length, fiber, .. } = &geometry.shape else {
        return Err(IndexError::Precondition("splitting needs a product cylinder".into()));
    };
    let periodic = periodic_index(fiber, *length, geometry.cutoff, 16, opts.rank_tol);
    let spec = spec_of(geometry)?;
    let trans = BoundaryCondition::transmission(spec.clone())?;
    let it = numeric_index(geometry, &trans, opts)?;
    let a = fibre_cut(fiber);
    let split = split_condition(spec, a)?;
    let is = numeric_index(geometry, &split, opts)?;
    let g = geometry.to_string();
    let entries = vec![
        CheckEntry::new("splitting_transmission", g.clone(), vec!["periodic".into(), "transmission".into()], it.index, periodic.index, opts)
            .with_warnings(&it.warnings)
            .with_note("splitting-only coverage of the relative index theorem"),
        CheckEntry::new("splitting_spectral", g, vec!["periodic".into(), format!("split:a={a}")], is.index, periodic.index, opts)
            .with_warnings(&is.warnings),
    ];
    Ok(SplittingReport { periodic: periodic.index, transmission: it.index, spectral: is.index, cut: a, entries })
}

fn trace_dim(p: &CMat) -> Result<i64, IndexError> {
    let t = p.trace();
    let r = t.re.round();
    if (t.re - r).abs() > 1e-8 || t.im.abs() > 1e-8 {
        return Err(IndexError::Precondition(format!("projector trace {t} is not an integer")));
    }
    Ok(r as i64)
}

/// `dim(ker A ∩ E₊) − dim(ker A ∩ E₋)` for a chirality `χ` anticommuting
/// with `A`.
pub fn chirality_index(spec: &BoundarySpectrum, chi: &CMat) -> Result<i64, IndexError> {
    let res = spec.anticommutator_residual(chi) / spec.max_abs_lambda().max(1.0);
    if res > 1e-10 {
        return Err(IndexError::Precondition(format!("chirality does not anticommute with A ({res:.3e})")));
    }
    let k = spec.kernel_basis();
    let kc = k.adjoint() * chi * &k;
    let id = CMat::identity(kc.nrows(), kc.nrows());
    Ok(trace_dim(&((&id + &kc) * c(0.5, 0.0)))? - trace_dim(&((&id - &kc) * c(0.5, 0.0)))?)
}

/// `dim(ker A ∩ E₊₊) − dim(ker A ∩ E₋₋)` for the joint eigenspaces of `iσ`
/// and a chirality `χ` commuting with `σ`.
pub fn paired_chirality_index(spec: &BoundarySpectrum, chi: &CMat) -> Result<i64, IndexError> {
    let sigma = spec.sigma_matrix();
    let res = max_abs(&(chi * sigma - sigma * chi));
    if res > 1e-10 {
        return Err(IndexError::Precondition(format!("chirality does not commute with sigma ({res:.3e})")));
    }
    chirality_index(spec, chi)?;
    let k = spec.kernel_basis();
    let kc = k.adjoint() * chi * &k;
    let ks = k.adjoint() * spec.sigma_matrix() * &k * c(0.0, 1.0);
    let id = CMat::identity(kc.nrows(), kc.nrows());
    let pp = (&id + &kc) * (&id + &ks) * c(0.25, 0.0);
    let mm = (&id - &kc) * (&id - &ks) * c(0.25, 0.0);
    Ok(trace_dim(&pp)? - trace_dim(&mm)?)
}

/// Cobordism invariance and the two forms of the signed chirality index.
pub fn check_cobordism(geometry: &Geometry, signs: &[i32], opts: &SolverOptions) -> Result<Vec<CheckEntry>, IndexError> {
    let spec = spec_of(geometry)?;
    let g = geometry.to_string();
    let isigma = spec.sigma_matrix() * c(0.0, 1.0);
    let a_plus = chirality_index(&spec, &isigma)?;
    let mut out = vec![CheckEntry::new("cobordism", g.clone(), vec!["chi=i*sigma".into()], a_plus, 0, opts)];
    let b = BoundaryCondition::chirality(spec.clone(), signs, false)?;
    let chi = spec.chirality_split(signs)?.chi;
    let ind = numeric_index(geometry, &b, opts)?;
    let signed = chirality_index(&spec, &chi)?;
    let paired = paired_chirality_index(&spec, &chi)?;
    let tags = vec![tag_name(b.tag())];
    let mut half = CheckEntry::new("freed_half", g.clone(), tags.clone(), 2 * ind.index, signed, opts);
    if signed % 2 != 0 {
        half = half.with_note("odd chirality index");
    }
    out.push(half.with_warnings(&ind.warnings));
    out.push(CheckEntry::new("freed", g, tags, ind.index, paired, opts).with_warnings(&ind.warnings));
    Ok(out)
}

/// Index of `s·g` for each step; one entry per step against `s = 1`.
pub fn homotopy_sweep(geometry: &Geometry, b: &BoundaryCondition, opts: &SolverOptions) -> Result<Vec<CheckEntry>, IndexError> {
    let base = numeric_index(geometry, b, opts)?;
    let mut out = Vec::new();
    for s in HOMOTOPY_STEPS {
        let bs = b.scaled(s);
        let is = numeric_index(geometry, &bs, opts)?;
        out.push(
            CheckEntry::new("homotopy", geometry.to_string(), vec![tag_name(bs.tag())], is.index, base.index, opts)
                .with_note(format!("s = {s}"))
                .with_warnings(&is.warnings),
        );
    }
    Ok(out)
}

/// Selfadjoint conditions have index zero.
pub fn check_selfadjoint_index(geometry: &Geometry, b: &BoundaryCondition, opts: &SolverOptions) -> Result<CheckEntry, IndexError> {
    if !b.is_selfadjoint() {
        return Err(IndexError::Precondition(format!("{} is not selfadjoint", tag_name(b.tag()))));
    }
    let ib = numeric_index(geometry, b, opts)?;
    Ok(CheckEntry::new("selfadjoint_index", geometry.to_string(), vec![tag_name(b.tag())], ib.index, 0, opts)
        .with_warnings(&ib.warnings))
}

/// Machine-readable list of check entries.
pub fn manifest_json(entries: &[CheckEntry]) -> String {
    serde_json::to_string_pretty(entries).expect("check entries serialise")
}
