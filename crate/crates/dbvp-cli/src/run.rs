//! Computations requested by a config, collected into serialisable documents.

use std::sync::Arc;

use dbvp_core::linalg::containment_residual;
use dbvp_core::{BoundaryCondition, BoundarySpectrum};
use dbvp_modes::geometry::{Coercivity, Shape};
use dbvp_modes::grid::Grid;
use dbvp_modes::identities::{greens_residual, killing_check, weitzenbock_residual, SmoothProfile};
use dbvp_modes::index::{
    check_agranovich_dynin, check_cobordism, check_gaps_shift, check_offset, check_selfadjoint_index,
    check_splitting, homotopy_sweep, tag_name,
};
use dbvp_modes::solver::{family_kernels, ConditionView};
use dbvp_modes::{numeric_index, spectrum, CheckEntry, Geometry, IndexReport, ModeFamily, SolverOptions, SpectralResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

const GREEN_TOL: f64 = 1e-8;
const WEITZENBOCK_TOL: f64 = 1e-6;
const KILLING_TOL: f64 = 1e-6;
/// Slack below the gap radius before an eigenvalue counts as inside the gap.
const GAP_SLACK: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct LineDoc {
    pub id: u32,
    pub lambda: f64,
    pub mult: usize,
    pub component: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryDoc {
    pub dim: usize,
    pub kernel_dim: usize,
    pub lines: Vec<LineDoc>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionDoc {
    pub recipe: String,
    pub tag: String,
    pub dim: usize,
    pub elliptic: bool,
    /// `selfadjoint`, `symmetric, not selfadjoint` or `not symmetric`.
    pub classification: String,
    /// `dim V`, `dim W`, `dim L` of the selfadjoint normal form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectralResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Solver failure while computing the spectrum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumDoc {
    pub geometry: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coercivity: Option<Coercivity>,
    pub conditions: Vec<ConditionDoc>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub geometry: String,
    pub solver: SolverOptions,
    pub indices: Vec<IndexReport>,
    pub checks: Vec<CheckEntry>,
    pub errors: Vec<String>,
}

/// Just the check list of a manifest, as read back by `report`.
#[derive(Clone, Debug, Deserialize)]
pub struct ManifestEntries {
    pub checks: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ManifestEntry {
    pub check: String,
    pub geometry: String,
    pub condition_tags: Vec<String>,
    pub lhs: i64,
    pub rhs: i64,
    pub pass: bool,
    #[serde(default)]
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub note: Option<String>,
}

impl From<&CheckEntry> for ManifestEntry {
    fn from(e: &CheckEntry) -> Self {
        ManifestEntry {
            check: e.check.clone(),
            geometry: e.geometry.clone(),
            condition_tags: e.condition_tags.clone(),
            lhs: e.lhs,
            rhs: e.rhs,
            pass: e.pass,
            resolutions: e.resolutions.clone(),
            note: e.note.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub spectrum: SpectrumDoc,
    pub manifest: Manifest,
}

impl Outcome {
    /// Every check passed, no index carries a solver warning and nothing
    /// failed to compute.
    pub fn success(&self) -> bool {
        let m = &self.manifest;
        m.errors.is_empty() && m.checks.iter().all(|e| e.pass) && m.indices.iter().all(|i| i.warnings.is_empty())
    }
}

struct Context {
    cfg: ExperimentConfig,
    geometry: Geometry,
    family: ModeFamily,
    spec: Option<Arc<BoundarySpectrum>>,
    opts: SolverOptions,
}

fn compute_err(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

impl Context {
    fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let geometry = cfg.geometry()?;
        let family = geometry.reduce_to_modes().map_err(|e| CliError::Config(e.to_string()))?;
        let spec = family.spec.clone();
        Ok(Context { cfg: cfg.clone(), geometry, family, spec, opts: cfg.solver_options() })
    }

    fn spec(&self) -> Result<&Arc<BoundarySpectrum>, CliError> {
        self.spec.as_ref().ok_or_else(|| CliError::Config(format!("{} has no compact boundary", self.geometry)))
    }

    fn conditions(&self) -> Result<Vec<(String, BoundaryCondition)>, CliError> {
        if self.cfg.conditions.is_empty() {
            return Ok(vec![]);
        }
        let spec = self.spec()?;
        self.cfg.conditions.iter().map(|r| Ok((r.clone(), self.cfg.condition(spec, r)?))).collect()
    }
}

fn classify(b: &BoundaryCondition) -> &'static str {
    if b.is_selfadjoint() {
        "selfadjoint"
    } else if containment_residual(b.adjoint().subspace(), b.subspace()) <= dbvp_core::condition::SUBSPACE_TOL {
        "symmetric, not selfadjoint"
    } else {
        "not symmetric"
    }
}

fn describe(ctx: &Context, recipe: &str, b: &BoundaryCondition, solve: bool) -> ConditionDoc {
    let class = classify(b);
    let normal_form = if class == "selfadjoint" {
        b.normal_form().ok().map(|nf| [nf.v.ncols(), nf.w.ncols(), nf.l.ncols()])
    } else {
        None
    };
    let mut doc = ConditionDoc {
        recipe: recipe.into(),
        tag: tag_name(b.tag()),
        dim: b.dim(),
        elliptic: b.ellipticity_check().passed(),
        classification: class.into(),
        normal_form,
        spectrum: None,
        min_abs: None,
        note: None,
        error: None,
    };
    if !solve {
        return doc;
    }
    if class != "selfadjoint" {
        doc.note = Some("no eigenvalues: the realisation is not selfadjoint".into());
        return doc;
    }
    match spectrum(&ctx.family, b, ctx.cfg.solver.window, &ctx.opts) {
        Ok(s) => {
            doc.min_abs = s.min_abs();
            doc.spectrum = Some(s);
        }
        Err(e) => doc.error = Some(e.to_string()),
    }
    doc
}

fn spectrum_doc(ctx: &Context, solve: bool) -> Result<SpectrumDoc, CliError> {
    let boundary = ctx.spec.as_ref().map(|s| BoundaryDoc {
        dim: s.dim(),
        kernel_dim: s.kernel_dim(),
        lines: s
            .lines()
            .iter()
            .map(|l| LineDoc { id: l.id, lambda: l.lambda, mult: l.mult, component: l.component })
            .collect(),
    });
    let conditions = ctx.conditions()?.iter().map(|(r, b)| describe(ctx, r, b, solve)).collect();
    Ok(SpectrumDoc {
        geometry: ctx.geometry.to_string(),
        boundary,
        coercivity: ctx.geometry.coercivity_bound(),
        conditions,
    })
}

/// Boundary data and condition classification, with eigenvalues when `solve`.
pub fn spectrum_only(cfg: &ExperimentConfig, solve: bool) -> Result<SpectrumDoc, CliError> {
    spectrum_doc(&Context::new(cfg)?, solve)
}

/// `numeric_index` for every configured condition.
pub fn indices(cfg: &ExperimentConfig) -> Result<(Vec<IndexReport>, Vec<String>), CliError> {
    let ctx = Context::new(cfg)?;
    index_reports(&ctx)
}

fn index_reports(ctx: &Context) -> Result<(Vec<IndexReport>, Vec<String>), CliError> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (r, b) in ctx.conditions()? {
        match numeric_index(&ctx.geometry, &b, &ctx.opts) {
            Ok(rep) => out.push(rep),
            Err(e) => errors.push(format!("index {r}: {e}")),
        }
    }
    Ok((out, errors))
}

fn entry(check: &str, ctx: &Context, tags: Vec<String>, lhs: i64, rhs: i64, note: Option<String>) -> CheckEntry {
    CheckEntry {
        check: check.into(),
        geometry: ctx.geometry.to_string(),
        condition_tags: tags,
        lhs,
        rhs,
        pass: lhs == rhs,
        resolutions: vec![ctx.opts.grid_n],
        note,
    }
}

fn ladder(ctx: &Context) -> Result<Vec<CheckEntry>, CliError> {
    if !matches!(ctx.geometry.shape, Shape::Disk) {
        return Err(CliError::Compute("ladder needs the disk".into()));
    }
    let spec = ctx.spec()?;
    let mut out = Vec::new();
    for k in 0..=ctx.cfg.params.ladder_max {
        let b = BoundaryCondition::gaps(spec.clone(), k as f64);
        let ks = family_kernels(&ctx.family, &ConditionView::new(&b), &ctx.opts).map_err(compute_err)?;
        let total: usize = ks.iter().map(|(_, r)| r.dim).sum();
        let warnings: Vec<String> = ks.iter().filter_map(|(_, r)| r.warning.clone()).collect();
        let mut e = entry("ladder", ctx, vec![tag_name(b.tag())], total as i64, k as i64, None);
        if !warnings.is_empty() {
            e.pass = false;
            e.note = Some(warnings.join("; "));
        }
        out.push(e);
    }
    Ok(out)
}

fn identities(ctx: &Context) -> Result<Vec<CheckEntry>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.params.seed);
    let grid = Grid::new(ctx.opts.grid_n, ctx.family.t_max).map_err(compute_err)?;
    let (mut gf, mut wf) = (0i64, 0i64);
    let (mut gw, mut ww) = (0.0f64, 0.0f64);
    for p in &ctx.family.problems {
        for _ in 0..ctx.cfg.params.profiles {
            let phi = SmoothProfile::random(p.comps(), &mut rng).nodal(&grid);
            let psi = SmoothProfile::random(p.comps(), &mut rng).nodal(&grid);
            let g = greens_residual(p, &grid, &phi, &psi);
            gw = gw.max(g);
            gf += i64::from(g.is_nan() || g > GREEN_TOL);
            let prof = SmoothProfile::random(p.comps(), &mut rng);
            let w = weitzenbock_residual(p, ctx.opts.grid_n, 0.1 * ctx.family.t_max, &prof).map_err(compute_err)?;
            ww = ww.max(w);
            wf += i64::from(w.is_nan() || w > WEITZENBOCK_TOL);
        }
    }
    Ok(vec![
        entry("greens", ctx, vec![], gf, 0, Some(format!("failing pairs; worst residual {}", crate::render::fmt17(gw)))),
        entry("weitzenbock", ctx, vec![], wf, 0, Some(format!("failing profiles; worst residual {}", crate::render::fmt17(ww)))),
    ])
}

fn killing(ctx: &Context, conds: &[(String, BoundaryCondition)]) -> Result<Vec<CheckEntry>, CliError> {
    let mut out = Vec::new();
    for alpha in [0.5, -0.5] {
        let k = killing_check(&ctx.geometry, alpha, ctx.opts.grid_n, None).map_err(compute_err)?;
        let bad = i64::from(!(k.eigen_residual <= KILLING_TOL && k.norm_deviation <= KILLING_TOL));
        let mut notes = vec![format!("alpha = {alpha}, eigen residual {}", crate::render::fmt17(k.eigen_residual))];
        for (r, b) in conds {
            let kb = killing_check(&ctx.geometry, alpha, ctx.opts.grid_n, Some(b)).map_err(compute_err)?;
            if let Some(m) = kb.membership_residual {
                notes.push(format!("{r} membership {}", crate::render::fmt17(m)));
            }
        }
        out.push(entry("killing", ctx, vec![], bad, 0, Some(notes.join("; "))));
    }
    Ok(out)
}

fn gap(ctx: &Context, docs: &[ConditionDoc]) -> Result<Vec<CheckEntry>, CliError> {
    let radius = ctx
        .geometry
        .coercivity_bound()
        .and_then(|c| c.gap_radius)
        .ok_or_else(|| CliError::Compute(format!("{} has no spectral gap bound", ctx.geometry)))?;
    let mut out = Vec::new();
    for d in docs {
        let Some(s) = &d.spectrum else { continue };
        let inside = s.eigenvalues.iter().filter(|e| e.value.abs() < radius - GAP_SLACK).count() as i64;
        let note = format!(
            "eigenvalues inside (-{r}, {r}); min |ev| {m}",
            r = crate::render::fmt17(radius),
            m = d.min_abs.map(crate::render::fmt17).unwrap_or_else(|| "none".into())
        );
        let mut e = entry("gap", ctx, vec![d.tag.clone()], inside, 0, Some(note));
        if !s.warnings.is_empty() {
            e.pass = false;
        }
        out.push(e);
    }
    Ok(out)
}

fn run_check(
    name: &str,
    ctx: &Context,
    conds: &[(String, BoundaryCondition)],
    docs: &[ConditionDoc],
) -> Result<Vec<CheckEntry>, CliError> {
    let g = &ctx.geometry;
    let o = &ctx.opts;
    let params = &ctx.cfg.params;
    let mut out = Vec::new();
    match name {
        "ladder" => out = ladder(ctx)?,
        "gaps_shift" => {
            for [a, b] in &params.shifts {
                out.push(check_gaps_shift(g, *a, *b, o).map_err(compute_err)?);
            }
        }
        "agranovich_dynin" => {
            let spec = ctx.spec()?;
            for [r1, r2] in &params.nested {
                let (b1, b2) = (ctx.cfg.condition(spec, r1)?, ctx.cfg.condition(spec, r2)?);
                out.push(check_agranovich_dynin(g, &b1, &b2, o).map_err(compute_err)?);
            }
        }
        "offset" => {
            for (_, b) in conds {
                out.push(check_offset(g, b, o).map_err(compute_err)?);
            }
        }
        "splitting" => out = check_splitting(g, o).map_err(compute_err)?.entries,
        "cobordism" => {
            let signs =
                if params.signs.is_empty() { vec![1; ctx.spec()?.components().len()] } else { params.signs.clone() };
            out = check_cobordism(g, &signs, o).map_err(compute_err)?;
        }
        "homotopy" => {
            for (_, b) in conds {
                out.extend(homotopy_sweep(g, b, o).map_err(compute_err)?);
            }
        }
        "selfadjoint_index" => {
            for (_, b) in conds.iter().filter(|(_, b)| b.is_selfadjoint()) {
                out.push(check_selfadjoint_index(g, b, o).map_err(compute_err)?);
            }
        }
        "gap" => out = gap(ctx, docs)?,
        "identities" => out = identities(ctx)?,
        "killing" => out = killing(ctx, conds)?,
        other => return Err(CliError::Config(format!("unknown check {other:?}"))),
    }
    Ok(out)
}

/// Runs the named checks; failures to compute are collected, not raised.
fn checks(ctx: &Context, names: &[String], docs: &[ConditionDoc]) -> Result<(Vec<CheckEntry>, Vec<String>), CliError> {
    let conds = ctx.conditions()?;
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for name in names {
        match run_check(name, ctx, &conds, docs) {
            Ok(es) => entries.extend(es),
            Err(CliError::Compute(e)) => errors.push(format!("{name}: {e}")),
            Err(e) => return Err(e),
        }
    }
    Ok((entries, errors))
}

/// Only the checks, for `verify`.
pub fn verify(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    let ctx = Context::new(cfg)?;
    let docs = if cfg.checks.iter().any(|c| c == "gap") { spectrum_doc(&ctx, true)?.conditions } else { vec![] };
    let (checks, errors) = checks(&ctx, &cfg.checks, &docs)?;
    Ok(Manifest { geometry: ctx.geometry.to_string(), solver: ctx.opts, indices: vec![], checks, errors })
}

/// Spectra, indices and checks.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ctx = Context::new(cfg)?;
    let spectrum = spectrum_doc(&ctx, true)?;
    let (indices, mut errors) = index_reports(&ctx)?;
    errors.extend(spectrum.conditions.iter().filter_map(|c| c.error.as_ref().map(|e| format!("spectrum {}: {e}", c.recipe))));
    let (checks, check_errors) = checks(&ctx, &cfg.checks, &spectrum.conditions)?;
    errors.extend(check_errors);
    let manifest = Manifest { geometry: ctx.geometry.to_string(), solver: ctx.opts, indices, checks, errors };
    Ok(Outcome { spectrum, manifest })
}
