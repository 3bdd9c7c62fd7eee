//! Elliptic boundary conditions as subspaces of the truncated eigenbasis.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ConditionError;
use crate::linalg::{
    containment_residual, empty, hcat, intersection, max_abs, norm2, orth, projector,
    relative_complement, span_sum, subspace_distance, CMat, C64,
};
use crate::spectrum::{matrix_from_doc, matrix_to_doc, BoundarySpectrum, MatrixDoc};

/// Projector-distance tolerance for subspace equality and containment.
pub const SUBSPACE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionTag {
    Gaps { a: f64 },
    Aps,
    Maps,
    Chirality { signs: Vec<i32>, minus: bool },
    Transmission,
    ApsLagrangian,
    Custom,
    Adjoint { of: Box<ConditionTag> },
    Scaled { s: f64, of: Box<ConditionTag> },
}

impl fmt::Display for ConditionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionTag::Gaps { a } => write!(f, "gaps(a={a})"),
            ConditionTag::Aps => write!(f, "aps"),
            ConditionTag::Maps => write!(f, "maps"),
            ConditionTag::Chirality { signs, minus } => {
                let s: Vec<String> = signs.iter().map(|s| format!("{s:+}")).collect();
                write!(f, "chirality{}({})", if *minus { "-" } else { "" }, s.join(","))
            }
            ConditionTag::Transmission => write!(f, "transmission"),
            ConditionTag::ApsLagrangian => write!(f, "aps+lagrangian"),
            ConditionTag::Custom => write!(f, "custom"),
            ConditionTag::Adjoint { of } => write!(f, "adjoint({of})"),
            ConditionTag::Scaled { s, of } => write!(f, "{s}*g({of})"),
        }
    }
}

/// What to build. Parsed from strings such as `gaps:a=0.5`, `maps`,
/// `chirality:+1,-1`, `transmission`, `aps+lagrangian`, `custom:file=b.json`.
#[derive(Clone, Debug, PartialEq)]
pub enum BcRecipe {
    Gaps { a: f64 },
    Aps,
    Maps,
    /// `B_{+χ}`, or `B_{−χ}` when `minus` is set.
    Chirality { signs: Vec<i32>, minus: bool },
    Transmission,
    /// APS plus a Lagrangian half of `ker A`.
    ApsLagrangian,
    Custom { file: String },
}

impl FromStr for BcRecipe {
    type Err = ConditionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (s, ""),
        };
        let bad = |msg: &str| ConditionError::Recipe(format!("{s}: {msg}"));
        let kv = |key: &str| -> Option<&str> {
            args.split(',').filter_map(|p| p.split_once('=')).find(|(k, _)| k.trim() == key).map(|(_, v)| v.trim())
        };
        match name {
            "gaps" => {
                let a = kv("a").ok_or_else(|| bad("missing a=<real>"))?;
                let a: f64 = a.parse().map_err(|_| bad("a is not a number"))?;
                if !a.is_finite() {
                    return Err(bad("a must be finite"));
                }
                Ok(BcRecipe::Gaps { a })
            }
            "aps" => Ok(BcRecipe::Aps),
            "maps" => Ok(BcRecipe::Maps),
            "chirality" | "chirality-" => {
                let signs = args
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| p.trim().parse::<i32>().map_err(|_| bad("signs must be +1 or -1")))
                    .collect::<Result<Vec<_>, _>>()?;
                if signs.is_empty() {
                    return Err(bad("need at least one sign"));
                }
                Ok(BcRecipe::Chirality { signs, minus: name.ends_with('-') })
            }
            "transmission" => Ok(BcRecipe::Transmission),
            "aps+lagrangian" => Ok(BcRecipe::ApsLagrangian),
            "custom" => {
                let file = kv("file").ok_or_else(|| bad("missing file=<path>"))?;
                Ok(BcRecipe::Custom { file: file.to_string() })
            }
            _ => Err(bad("unknown recipe")),
        }
    }
}

/// `L² = V₋ ⊕ W₋ ⊕ V₊ ⊕ W₊` together with `g: V₋ → V₊`, stored as an ambient
/// matrix vanishing on the orthocomplement of `V₋`.
#[derive(Clone, Debug)]
pub struct EllipticDecomposition {
    pub v_minus: CMat,
    pub w_minus: CMat,
    pub v_plus: CMat,
    pub w_plus: CMat,
    pub g: CMat,
    pub cut: f64,
}

impl EllipticDecomposition {
    pub fn g_norm(&self) -> f64 {
        norm2(&self.g)
    }

    pub fn g_adjoint_norm(&self) -> f64 {
        norm2(&self.g.adjoint())
    }

    /// `W₊ ⊕ {v + gv : v ∈ V₋}`.
    pub fn subspace(&self) -> CMat {
        let dim = self.g.nrows();
        let graph = (CMat::identity(dim, dim) + &self.g) * &self.v_minus;
        orth(&hcat(&[&self.w_plus, &graph]))
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.v_minus.ncols(), self.w_minus.ncols(), self.v_plus.ncols(), self.w_plus.ncols()]
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryCondition {
    spec: Arc<BoundarySpectrum>,
    decomp: EllipticDecomposition,
    subspace: CMat,
    tag: ConditionTag,
}

#[derive(Clone, Debug)]
pub struct NormalForm {
    pub v: CMat,
    pub w: CMat,
    pub l: CMat,
    /// Selfadjoint on `V ⊕ L`, zero on its orthocomplement.
    pub g: CMat,
    pub reconstruction_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub pass: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    pub clauses: Vec<Clause>,
    pub dims: [usize; 4],
    pub g_norm: f64,
    pub g_adjoint_norm: f64,
    pub note: &'static str,
}

impl EllipticityReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for EllipticityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "  {:<14} {} ({:.3e})", c.name, if c.pass { "ok" } else { "FAIL" }, c.residual)?;
        }
        let [vm, wm, vp, wp] = self.dims;
        writeln!(f, "  dims V- {vm}, W- {wm}, V+ {vp}, W+ {wp}")?;
        writeln!(f, "  |g| = {:.6e}, |g*| = {:.6e}", self.g_norm, self.g_adjoint_norm)?;
        write!(f, "  {}", self.note)
    }
}

fn sigma_of(spec: &BoundarySpectrum) -> &CMat {
    spec.sigma_matrix()
}

impl BoundaryCondition {
    pub fn build(spec: Arc<BoundarySpectrum>, recipe: &BcRecipe) -> Result<Self, ConditionError> {
        match recipe {
            BcRecipe::Gaps { a } => Ok(Self::gaps(spec, *a)),
            BcRecipe::Aps => Ok(Self::aps(spec)),
            BcRecipe::Maps => Ok(Self::maps(spec)),
            BcRecipe::Chirality { signs, minus } => Self::chirality(spec, signs, *minus),
            BcRecipe::Transmission => Self::transmission(spec),
            BcRecipe::ApsLagrangian => Self::aps_lagrangian(spec),
            BcRecipe::Custom { file } => {
                let text = std::fs::read_to_string(file)?;
                Self::from_json(spec, &text)
            }
        }
    }

    fn assemble(spec: Arc<BoundarySpectrum>, decomp: EllipticDecomposition, tag: ConditionTag) -> Self {
        let subspace = decomp.subspace();
        BoundaryCondition { spec, decomp, subspace, tag }
    }

    /// `B(a) = L²_{(−∞,a)}(A)`.
    pub fn gaps(spec: Arc<BoundarySpectrum>, a: f64) -> Self {
        let dim = spec.dim();
        let decomp = EllipticDecomposition {
            v_minus: spec.span_where(|l| l < a),
            w_minus: empty(dim),
            v_plus: spec.span_where(|l| l >= a),
            w_plus: empty(dim),
            g: CMat::zeros(dim, dim),
            cut: a.abs(),
        };
        Self::assemble(spec, decomp, ConditionTag::Gaps { a })
    }

    pub fn aps(spec: Arc<BoundarySpectrum>) -> Self {
        let mut b = Self::gaps(spec, 0.0);
        b.tag = ConditionTag::Aps;
        b
    }

    pub fn maps(spec: Arc<BoundarySpectrum>) -> Self {
        let dim = spec.dim();
        let neg = spec.projection_matrix(crate::Interval::below(0.0));
        let decomp = EllipticDecomposition {
            v_minus: spec.span_where(|l| l < 0.0),
            w_minus: spec.kernel_basis(),
            v_plus: spec.span_where(|l| l > 0.0),
            w_plus: empty(dim),
            g: -(sigma_of(&spec) * neg),
            cut: 0.0,
        };
        Self::assemble(spec, decomp, ConditionTag::Maps)
    }

    /// `B_{±χ}` for the chirality `χ = Σ_j iε_jσ` on component `j`.
    pub fn chirality(spec: Arc<BoundarySpectrum>, signs: &[i32], minus: bool) -> Result<Self, ConditionError> {
        let ch = spec.chirality_split(signs)?;
        let tag = ConditionTag::Chirality { signs: signs.to_vec(), minus };
        Self::chirality_with(spec, &ch.chi, minus, tag)
    }

    /// `B_{±χ} = (ker A ∩ E_±) ⊕ {φ ± χφ : φ ∈ L²_{(−∞,0)}}` for any
    /// selfadjoint involution `χ` anticommuting with `A`.
    pub fn chirality_with(
        spec: Arc<BoundarySpectrum>,
        chi: &CMat,
        minus: bool,
        tag: ConditionTag,
    ) -> Result<Self, ConditionError> {
        let dim = spec.dim();
        if chi.shape() != (dim, dim) {
            return Err(ConditionError::Structural(format!("chirality must be {dim}x{dim}")));
        }
        let id = CMat::identity(dim, dim);
        let res = max_abs(&(chi - chi.adjoint()))
            .max(max_abs(&(chi * chi - &id)))
            .max(spec.anticommutator_residual(chi) / spec.max_abs_lambda().max(1.0));
        if res > 1e-10 {
            return Err(ConditionError::Structural(format!(
                "chirality is not a selfadjoint involution anticommuting with A ({res:.3e})"
            )));
        }
        let sgn = if minus { -1.0 } else { 1.0 };
        let ker = spec.kernel_basis();
        let pp = (&id + chi.scale(sgn)).scale(0.5);
        let pm = (&id - chi.scale(sgn)).scale(0.5);
        let w_plus = orth(&(pp * &ker));
        let w_minus = orth(&(pm * &ker));
        if w_plus.ncols() + w_minus.ncols() != ker.ncols() {
            return Err(ConditionError::KernelSplit(ker.ncols()));
        }
        let neg = spec.projection_matrix(crate::Interval::below(0.0));
        let decomp = EllipticDecomposition {
            v_minus: spec.span_where(|l| l < 0.0),
            w_minus,
            v_plus: spec.span_where(|l| l > 0.0),
            w_plus,
            g: (chi * neg).scale(sgn),
            cut: 0.0,
        };
        Ok(Self::assemble(spec, decomp, tag))
    }

    /// Coordinate swap between the two halves of a doubled spectrum
    /// `A₀ ⊕ (−A₀)`; see [`doubling_swap`].
    pub fn transmission(spec: Arc<BoundarySpectrum>) -> Result<Self, ConditionError> {
        let swap = doubling_swap(&spec)?;
        let comps = spec.components();
        let c0 = spec.component_projector(comps[0]);
        let ker0 = orth(&(&c0 * spec.kernel_basis()));
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let w_plus = orth(&((&ker0 + &swap * &ker0).scale(s2)));
        let w_minus = orth(&((&ker0 - &swap * &ker0).scale(s2)));
        let neg = spec.projection_matrix(crate::Interval::below(0.0));
        let decomp = EllipticDecomposition {
            v_minus: spec.span_where(|l| l < 0.0),
            w_minus,
            v_plus: spec.span_where(|l| l > 0.0),
            w_plus,
            g: &swap * neg,
            cut: 0.0,
        };
        Ok(Self::assemble(spec, decomp, ConditionTag::Transmission))
    }

    /// `L²_{(−∞,0)}(A) ⊕ L` with `ker A = L ⊕ σL` built from the `±i`
    /// eigenvectors of `σ` on the kernel.
    pub fn aps_lagrangian(spec: Arc<BoundarySpectrum>) -> Result<Self, ConditionError> {
        let l = lagrangian(&spec)?;
        let dim = spec.dim();
        let sl = sigma_of(&spec) * &l;
        let decomp = EllipticDecomposition {
            v_minus: spec.span_where(|x| x < 0.0),
            w_minus: orth(&sl),
            v_plus: spec.span_where(|x| x > 0.0),
            w_plus: l,
            g: CMat::zeros(dim, dim),
            cut: 0.0,
        };
        Ok(Self::assemble(spec, decomp, ConditionTag::ApsLagrangian))
    }

    /// Wraps a user-supplied decomposition. Blocks are orthonormalised but not
    /// otherwise checked; see [`BoundaryCondition::ellipticity_check`].
    pub fn from_decomposition(
        spec: Arc<BoundarySpectrum>,
        decomp: EllipticDecomposition,
        tag: ConditionTag,
    ) -> Result<Self, ConditionError> {
        let dim = spec.dim();
        for (name, m) in [
            ("v_minus", &decomp.v_minus),
            ("w_minus", &decomp.w_minus),
            ("v_plus", &decomp.v_plus),
            ("w_plus", &decomp.w_plus),
        ] {
            if m.nrows() != dim {
                return Err(ConditionError::Structural(format!(
                    "{name} has {} rows, spectrum dimension is {dim}",
                    m.nrows()
                )));
            }
        }
        if decomp.g.shape() != (dim, dim) {
            return Err(ConditionError::Structural(format!("g must be {dim}x{dim}")));
        }
        let decomp = EllipticDecomposition {
            v_minus: orth(&decomp.v_minus),
            w_minus: orth(&decomp.w_minus),
            v_plus: orth(&decomp.v_plus),
            w_plus: orth(&decomp.w_plus),
            ..decomp
        };
        Ok(Self::assemble(spec, decomp, tag))
    }

    /// Any subspace, decomposed with respect to the cut `a` as
    /// `W₊ = B ∩ L²_{[a,∞)}`, `V₋ = Q_{(−∞,a)}B`, and `g` read off the graph.
    pub fn from_subspace(
        spec: Arc<BoundarySpectrum>,
        basis: &CMat,
        a: f64,
        tag: ConditionTag,
    ) -> Result<Self, ConditionError> {
        if basis.nrows() != spec.dim() {
            return Err(ConditionError::Structural("basis has wrong ambient dimension".into()));
        }
        let b = orth(basis);
        let decomp = special_decomposition(&spec, &b, a);
        let mut out = Self::assemble(spec, decomp, tag);
        let err = subspace_distance(&out.subspace, &b);
        if err > SUBSPACE_TOL {
            return Err(ConditionError::Decomposition(format!("graph reconstruction off by {err:.3e}")));
        }
        out.subspace = b;
        Ok(out)
    }

    pub fn spec(&self) -> &Arc<BoundarySpectrum> {
        &self.spec
    }

    pub fn decomposition(&self) -> &EllipticDecomposition {
        &self.decomp
    }

    pub fn subspace(&self) -> &CMat {
        &self.subspace
    }

    pub fn tag(&self) -> &ConditionTag {
        &self.tag
    }

    pub fn dim(&self) -> usize {
        self.subspace.ncols()
    }

    pub fn projector(&self) -> CMat {
        projector(&self.subspace)
    }

    /// Orthonormal basis of the annihilator rows: a section `x` lies in `B`
    /// iff `complement()ᴴ x = 0`.
    pub fn complement(&self) -> CMat {
        crate::linalg::complement(&self.subspace)
    }

    /// Distance from `x` to `B`, relative to `‖x‖`.
    pub fn membership_residual(&self, x: &crate::linalg::CVec) -> f64 {
        let n = x.norm();
        if n == 0.0 {
            return 0.0;
        }
        (x - self.projector() * x).norm() / n
    }

    pub fn same_subspace(&self, other: &BoundaryCondition) -> bool {
        self.distance(other) <= SUBSPACE_TOL
    }

    pub fn distance(&self, other: &BoundaryCondition) -> f64 {
        subspace_distance(&self.subspace, &other.subspace)
    }

    /// `B^ad = σ(W₋ ⊕ {v − g*v : v ∈ V₊})`, decomposed with
    /// `V₋^ad = σV₊`, `W₊^ad = σW₋` and `g^ad = σg*σ`.
    pub fn adjoint(&self) -> BoundaryCondition {
        let s = sigma_of(&self.spec);
        let d = &self.decomp;
        let decomp = EllipticDecomposition {
            v_minus: s * &d.v_plus,
            w_minus: s * &d.w_plus,
            v_plus: s * &d.v_minus,
            w_plus: s * &d.w_minus,
            g: s * d.g.adjoint() * s,
            cut: d.cut,
        };
        let tag = match &self.tag {
            ConditionTag::Adjoint { of } => (**of).clone(),
            t => ConditionTag::Adjoint { of: Box::new(t.clone()) },
        };
        Self::assemble(self.spec.clone(), decomp, tag)
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.distance(&self.adjoint()) <= SUBSPACE_TOL
    }

    /// Same decomposition with `g` replaced by `s·g`.
    pub fn scaled(&self, s: f64) -> BoundaryCondition {
        let decomp = EllipticDecomposition { g: self.decomp.g.scale(s), ..self.decomp.clone() };
        let tag = ConditionTag::Scaled { s, of: Box::new(self.tag.clone()) };
        Self::assemble(self.spec.clone(), decomp, tag)
    }

    /// `B ⊕ X` for a subspace `X` orthogonal to `B`; decomposed at cut `a`.
    pub fn extended(&self, extra: &CMat, a: f64) -> Result<BoundaryCondition, ConditionError> {
        let sum = span_sum(&self.subspace, extra);
        Self::from_subspace(self.spec.clone(), &sum, a, ConditionTag::Custom)
    }

    pub fn ellipticity_check(&self) -> EllipticityReport {
        let d = &self.decomp;
        let blocks = [&d.v_minus, &d.w_minus, &d.v_plus, &d.w_plus];
        let mut orth_res: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                if blocks[i].ncols() > 0 && blocks[j].ncols() > 0 {
                    orth_res = orth_res.max(max_abs(&(blocks[i].adjoint() * blocks[j])));
                }
            }
        }
        let total: usize = blocks.iter().map(|b| b.ncols()).sum();
        let all = orth(&hcat(&blocks));
        let complete = (all.ncols() as f64 - self.spec.dim() as f64).abs();
        let low = self.spec.span_where(|l| l <= d.cut);
        let high = self.spec.span_where(|l| l >= -d.cut);
        let interval = containment_residual(&low, &hcat(&[&d.v_minus, &d.w_minus]))
            .max(containment_residual(&high, &hcat(&[&d.v_plus, &d.w_plus])));
        let dim = self.spec.dim();
        let pv = projector(&d.v_minus);
        let qv = CMat::identity(dim, dim) - &pv;
        let g_leak = max_abs(&(&d.g * &qv));
        let g_range = containment_residual(&d.v_plus, &(&d.g * &d.v_minus));
        let recon = subspace_distance(&self.subspace, &d.subspace());
        let clauses = vec![
            Clause { name: "orthogonal", pass: orth_res <= SUBSPACE_TOL, residual: orth_res },
            Clause {
                name: "complete",
                pass: complete == 0.0 && total == dim,
                residual: complete + (total as f64 - dim as f64).abs(),
            },
            Clause { name: "interval", pass: interval <= SUBSPACE_TOL, residual: interval },
            Clause { name: "finite_w", pass: true, residual: 0.0 },
            Clause {
                name: "g_maps_v",
                pass: g_leak <= SUBSPACE_TOL && g_range <= SUBSPACE_TOL,
                residual: g_leak.max(g_range),
            },
            Clause { name: "subspace", pass: recon <= SUBSPACE_TOL, residual: recon },
        ];
        EllipticityReport {
            clauses,
            dims: d.dims(),
            g_norm: d.g_norm(),
            g_adjoint_norm: d.g_adjoint_norm(),
            note: "order-zero clause realised as finite recorded norms; growth in s not testable at truncation",
        }
    }

    /// `dim W₊ − dim W₋` of the recorded decomposition and its cut.
    pub fn index_offset(&self) -> (i64, f64) {
        let [_, wm, _, wp] = self.decomp.dims();
        (wp as i64 - wm as i64, self.decomp.cut)
    }

    /// Offset against a spectral reference: returns `(δ, a)` with
    /// `V₋ ⊕ W₋ = L²_{(−∞,a)}(A)` so that `ind D_B = ind D_{B(a)} + δ`.
    ///
    /// The recorded blocks are used when `V₋ ⊕ W₋` is already spectral; the
    /// reference cut is then the smallest eigenvalue left out, so any `a` in
    /// the gap below it gives the same `B(a)`. Otherwise the special
    /// decomposition at `0` is used.
    pub fn spectral_offset(&self) -> (i64, f64) {
        let d = &self.decomp;
        let low = span_sum(&d.v_minus, &d.w_minus);
        if let Some(a) = spectral_cut(&self.spec, &low) {
            let (delta, _) = self.index_offset();
            return (delta, a);
        }
        let sd = special_decomposition(&self.spec, &self.subspace, 0.0);
        let [_, wm, _, wp] = sd.dims();
        (wp as i64 - wm as i64, 0.0)
    }

    /// `dim B₂ − dim B₁` when `B₁ ⊆ B₂`.
    pub fn quotient_dim(b1: &BoundaryCondition, b2: &BoundaryCondition) -> Result<usize, ConditionError> {
        let res = containment_residual(&b2.subspace, &b1.subspace);
        if res > SUBSPACE_TOL {
            return Err(ConditionError::NotNested(res));
        }
        Ok(b2.dim() - b1.dim())
    }

    pub fn normal_form(&self) -> Result<NormalForm, ConditionError> {
        let adj = self.adjoint();
        let dist = self.distance(&adj);
        if dist > SUBSPACE_TOL {
            return Err(ConditionError::NotSelfadjoint(dist));
        }
        let spec = &self.spec;
        let dim = spec.dim();
        let s = sigma_of(spec);
        let neg = spec.projection_matrix(crate::Interval::below(0.0));
        let n_minus = spec.span_where(|l| l < 0.0);
        let ker = spec.kernel_basis();
        let n_plus = spec.span_where(|l| l > 0.0);
        let b = &self.subspace;

        let v = orth(&(&neg * b));
        let w = relative_complement(&n_minus, &v);
        let sw = s * &w;
        let leak = containment_residual(b, &sw);
        if leak > SUBSPACE_TOL {
            return Err(ConditionError::Structural(format!("sigma W not inside B ({leak:.3e})")));
        }
        let bp = relative_complement(b, &sw);
        let ker_plus = span_sum(&ker, &n_plus);
        let inside = intersection(&bp, &ker_plus);
        let l = orth(&(projector(&ker) * &inside));
        let sl = s * &l;
        let split_res = if ker.ncols() > 0 {
            subspace_distance(&span_sum(&l, &sl), &ker)
                .max(if l.ncols() > 0 { max_abs(&(l.adjoint() * &sl)) } else { 0.0 })
        } else {
            0.0
        };
        if split_res > 1e-8 || 2 * l.ncols() != ker.ncols() {
            return Err(ConditionError::Structural(format!(
                "no Lagrangian L with ker A = L + sigma L ({} of {})",
                l.ncols(),
                ker.ncols()
            )));
        }
        let x = span_sum(&v, &l);
        let sx = s * &x;
        let px = projector(&x);
        let psx = projector(&sx);
        let xc = &px * &bp;
        let hc = &psx * &bp;
        let pinv = pseudo_inverse(&xc);
        let h = hc * pinv;
        let g = -(s * h);
        let herm = max_abs(&(&g - g.adjoint()));
        if herm > 1e-8 {
            return Err(ConditionError::Structural(format!("g is not selfadjoint ({herm:.3e})")));
        }
        let graph = (CMat::identity(dim, dim) + s * &g) * &x;
        let rebuilt = orth(&hcat(&[&sw, &graph]));
        let reconstruction_error = subspace_distance(&rebuilt, b);
        if reconstruction_error > SUBSPACE_TOL {
            return Err(ConditionError::Structural(format!(
                "normal form does not reproduce B ({reconstruction_error:.3e})"
            )));
        }
        Ok(NormalForm { v, w, l, g, reconstruction_error })
    }

    pub fn to_json(&self) -> String {
        let d = &self.decomp;
        let doc = ConditionDoc {
            tag: Some(self.tag.clone()),
            cut: d.cut,
            blocks: BlocksDoc {
                v_minus: matrix_to_doc(&d.v_minus),
                w_minus: matrix_to_doc(&d.w_minus),
                v_plus: matrix_to_doc(&d.v_plus),
                w_plus: matrix_to_doc(&d.w_plus),
            },
            g: matrix_to_doc(&d.g),
        };
        serde_json::to_string_pretty(&doc).expect("condition serializes")
    }

    /// Reads `{tag?, cut, blocks: {v_minus, w_minus, v_plus, w_plus}, g}`;
    /// block matrices are columns-as-basis in row-major `[re, im]` pairs.
    pub fn from_json(spec: Arc<BoundarySpectrum>, text: &str) -> Result<Self, ConditionError> {
        let doc: ConditionDoc = serde_json::from_str(text)?;
        let dim = spec.dim();
        let block = |m: &MatrixDoc| {
            if m.is_empty() {
                empty(dim)
            } else {
                matrix_from_doc(m)
            }
        };
        let decomp = EllipticDecomposition {
            v_minus: block(&doc.blocks.v_minus),
            w_minus: block(&doc.blocks.w_minus),
            v_plus: block(&doc.blocks.v_plus),
            w_plus: block(&doc.blocks.w_plus),
            g: if doc.g.is_empty() { CMat::zeros(dim, dim) } else { matrix_from_doc(&doc.g) },
            cut: doc.cut,
        };
        Self::from_decomposition(spec, decomp, doc.tag.unwrap_or(ConditionTag::Custom))
    }
}

#[derive(Serialize, Deserialize)]
struct BlocksDoc {
    #[serde(default)]
    v_minus: MatrixDoc,
    #[serde(default)]
    w_minus: MatrixDoc,
    #[serde(default)]
    v_plus: MatrixDoc,
    #[serde(default)]
    w_plus: MatrixDoc,
}

#[derive(Serialize, Deserialize)]
struct ConditionDoc {
    #[serde(default)]
    tag: Option<ConditionTag>,
    cut: f64,
    blocks: BlocksDoc,
    #[serde(default)]
    g: MatrixDoc,
}

/// Cut `a` with `span(basis) = L²_{(−∞,a)}(A)`, if there is one.
fn spectral_cut(spec: &BoundarySpectrum, basis: &CMat) -> Option<f64> {
    let lambdas = spec.coord_lambdas();
    let p = projector(basis);
    let mut inside_max = f64::NEG_INFINITY;
    let mut outside_min = f64::INFINITY;
    for (i, &l) in lambdas.iter().enumerate() {
        let col_res = (0..lambdas.len())
            .map(|j| {
                let want = if i == j { 1.0 } else { 0.0 };
                (p[(j, i)] - C64::new(want, 0.0)).norm()
            })
            .fold(0.0, f64::max);
        let diag = p[(i, i)].re;
        if diag > 0.5 {
            if col_res > SUBSPACE_TOL {
                return None;
            }
            inside_max = inside_max.max(l);
        } else {
            if p.column(i).iter().any(|z| z.norm() > SUBSPACE_TOL) {
                return None;
            }
            outside_min = outside_min.min(l);
        }
    }
    if inside_max < outside_min {
        Some(if outside_min.is_finite() { outside_min } else { inside_max.max(0.0) + 1.0 })
    } else {
        None
    }
}

/// Decomposition of `B` relative to `N = L²_{(−∞,a)}` and `P = L²_{[a,∞)}`.
pub fn special_decomposition(spec: &BoundarySpectrum, b: &CMat, a: f64) -> EllipticDecomposition {
    let dim = spec.dim();
    let n = spec.span_where(|l| l < a);
    let p = spec.span_where(|l| l >= a);
    let qn = projector(&n);
    let qp = projector(&p);
    let w_plus = intersection(b, &p);
    let bp = relative_complement(b, &w_plus);
    let v_minus = orth(&(&qn * &bp));
    let w_minus = relative_complement(&n, &v_minus);
    let v_plus = relative_complement(&p, &w_plus);
    let g = if bp.ncols() > 0 {
        let y = &qn * &bp;
        let z = &qp * &bp;
        z * pseudo_inverse(&y)
    } else {
        CMat::zeros(dim, dim)
    };
    EllipticDecomposition { v_minus, w_minus, v_plus, w_plus, g, cut: a.abs() }
}

/// Moore-Penrose inverse of a full-column-rank matrix.
fn pseudo_inverse(m: &CMat) -> CMat {
    let svd = crate::linalg::Svd::new(m);
    let smax = svd.s.first().cloned().unwrap_or(0.0);
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for (k, &sk) in svd.s.iter().enumerate() {
        if sk > 1e-12 * smax.max(1.0) {
            out += svd.v.column(k) * svd.u.column(k).adjoint() / C64::new(sk, 0.0);
        }
    }
    out
}

/// `L = span{(x_j + y_j)/√2}` from orthonormal bases of the `±i` eigenspaces
/// of `σ` on `ker A`; fails unless both eigenspaces have equal dimension.
pub fn lagrangian(spec: &BoundarySpectrum) -> Result<CMat, ConditionError> {
    let ker = spec.kernel_basis();
    let dim = spec.dim();
    if ker.ncols() == 0 {
        return Ok(empty(dim));
    }
    let s = sigma_of(spec);
    let i = C64::new(0.0, 1.0);
    let id = CMat::identity(dim, dim);
    // (1 ∓ iσ)/2 projects onto the ±i eigenspace of σ.
    let plus = orth(&((&id - s * i).scale(0.5) * &ker));
    let minus = orth(&((&id + s * i).scale(0.5) * &ker));
    if plus.ncols() != minus.ncols() {
        return Err(ConditionError::KernelSplit(ker.ncols()));
    }
    let l = (plus + minus).scale(std::f64::consts::FRAC_1_SQRT_2);
    Ok(orth(&l))
}

/// For a spectrum with two components whose lines pair up (in id order) as
/// `λ ↔ −λ` and with `σ₁ = −Π σ₀ Π⁻¹`, returns the coordinate swap `Π`
/// exchanging the two halves.
pub fn doubling_swap(spec: &BoundarySpectrum) -> Result<CMat, ConditionError> {
    let comps = spec.components();
    let bad = |m: String| ConditionError::Doubling(m);
    if comps.len() != 2 {
        return Err(bad(format!("need two components, found {}", comps.len())));
    }
    let mut first: Vec<_> = spec.lines().iter().filter(|l| l.component == comps[0]).collect();
    let mut second: Vec<_> = spec.lines().iter().filter(|l| l.component == comps[1]).collect();
    if first.len() != second.len() {
        return Err(bad("components have different numbers of lines".into()));
    }
    first.sort_by_key(|l| l.id);
    second.sort_by_key(|l| l.id);
    let dim = spec.dim();
    let mut swap = CMat::zeros(dim, dim);
    for (x, y) in first.iter().zip(&second) {
        if x.mult != y.mult || (x.lambda + y.lambda).abs() > 1e-12 * x.lambda.abs().max(1.0) {
            return Err(bad(format!("line {} does not mirror line {}", x.id, y.id)));
        }
        let ox = spec.offset(x.id).unwrap();
        let oy = spec.offset(y.id).unwrap();
        for k in 0..x.mult {
            swap[(oy + k, ox + k)] = C64::new(1.0, 0.0);
            swap[(ox + k, oy + k)] = C64::new(1.0, 0.0);
        }
    }
    let s = sigma_of(spec);
    let p1 = spec.component_projector(comps[1]);
    let p0 = spec.component_projector(comps[0]);
    let res = max_abs(&(&p1 * s * &p1 + &swap * &p0 * s * &p0 * &swap));
    if res > 1e-12 {
        return Err(bad(format!("sigma on the second copy is not minus the first ({res:.3e})")));
    }
    Ok(swap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::EigenLine;

    fn spec_with_kernel(k: usize) -> Arc<BoundarySpectrum> {
        let mut lines = vec![];
        if k > 0 {
            lines.push(EigenLine { id: 0, lambda: 0.0, mult: k, component: 0 });
        }
        for (i, l) in [0.5, 1.5, 2.5].iter().enumerate() {
            lines.push(EigenLine { id: 1 + 2 * i as u32, lambda: *l, mult: 2, component: 0 });
            lines.push(EigenLine { id: 2 + 2 * i as u32, lambda: -*l, mult: 2, component: 0 });
        }
        Arc::new(BoundarySpectrum::with_standard_sigma(lines).unwrap())
    }

    #[test]
    fn recipes_parse() {
        assert_eq!("gaps:a=0.5".parse::<BcRecipe>().unwrap(), BcRecipe::Gaps { a: 0.5 });
        assert_eq!("maps".parse::<BcRecipe>().unwrap(), BcRecipe::Maps);
        assert_eq!(
            "chirality:+1,-1".parse::<BcRecipe>().unwrap(),
            BcRecipe::Chirality { signs: vec![1, -1], minus: false }
        );
        assert_eq!(
            "custom:file=x.json".parse::<BcRecipe>().unwrap(),
            BcRecipe::Custom { file: "x.json".into() }
        );
        assert!("gaps".parse::<BcRecipe>().is_err());
        assert!("nope".parse::<BcRecipe>().is_err());
    }

    #[test]
    fn special_decomposition_round_trip() {
        let s = spec_with_kernel(2);
        let m = BoundaryCondition::maps(s.clone());
        for a in [-1.0, 0.0, 0.7, 2.0] {
            let b = BoundaryCondition::from_subspace(s.clone(), m.subspace(), a, ConditionTag::Custom).unwrap();
            assert!(b.same_subspace(&m));
            assert!(b.ellipticity_check().passed(), "{}", b.ellipticity_check());
        }
    }

    #[test]
    fn normal_form_of_lagrangian_condition() {
        let s = spec_with_kernel(2);
        let b = BoundaryCondition::aps_lagrangian(s).unwrap();
        let nf = b.normal_form().unwrap();
        assert_eq!(nf.w.ncols(), 0);
        assert_eq!(nf.v.ncols(), 6);
        assert_eq!(nf.l.ncols(), 1);
        assert!(max_abs(&nf.g) < 1e-10);
    }
}
