//! Eigendecomposition of the adapted boundary operator `A` together with the
//! action of the principal symbol of the inward normal.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SpectrumError;
use crate::linalg::{c, max_abs, CMat, CVec, C64};

/// Tolerance for the algebraic identities of sigma.
pub const SIGMA_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenLine {
    pub id: u32,
    pub lambda: f64,
    pub mult: usize,
    pub component: u32,
}

/// Unitary block carrying the coefficients of line `plus` (eigenvalue λ > 0)
/// to line `minus` (eigenvalue −λ).
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaPair {
    pub plus: u32,
    pub minus: u32,
    pub matrix: CMat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaAction {
    pub pairs: Vec<SigmaPair>,
    /// Unitary on the concatenated kernel coefficients, in sorted line order.
    pub kernel: CMat,
}

impl SigmaAction {
    /// Identity blocks between ±λ partners (matched per component in id
    /// order) and the standard complex structure on each component's kernel.
    /// A leftover odd kernel coordinate is acted on by `i`.
    pub fn standard(lines: &[EigenLine]) -> Result<Self, SpectrumError> {
        let mut sorted = lines.to_vec();
        sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.id.cmp(&b.id)));
        let mut used = BTreeSet::new();
        let mut pairs = Vec::new();
        for line in sorted.iter().filter(|l| l.lambda > 0.0) {
            let partner = sorted
                .iter()
                .filter(|m| {
                    !used.contains(&m.id)
                        && m.component == line.component
                        && m.mult == line.mult
                        && lambda_eq(m.lambda, -line.lambda)
                })
                .min_by_key(|m| m.id)
                .ok_or(SpectrumError::Unpaired { id: line.id, lambda: line.lambda })?;
            used.insert(partner.id);
            pairs.push(SigmaPair {
                plus: line.id,
                minus: partner.id,
                matrix: CMat::identity(line.mult, line.mult),
            });
        }
        let kernel_lines: Vec<&EigenLine> = sorted.iter().filter(|l| l.lambda == 0.0).collect();
        let kdim: usize = kernel_lines.iter().map(|l| l.mult).sum();
        let mut kernel = CMat::zeros(kdim, kdim);
        let mut by_comp: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        let mut at = 0;
        for l in &kernel_lines {
            for _ in 0..l.mult {
                by_comp.entry(l.component).or_default().push(at);
                at += 1;
            }
        }
        for coords in by_comp.values() {
            let mut k = 0;
            while k + 1 < coords.len() {
                let (a, b) = (coords[k], coords[k + 1]);
                kernel[(b, a)] = c(1.0, 0.0);
                kernel[(a, b)] = c(-1.0, 0.0);
                k += 2;
            }
            if k < coords.len() {
                kernel[(coords[k], coords[k])] = c(0.0, 1.0);
            }
        }
        Ok(SigmaAction { pairs, kernel })
    }
}

fn lambda_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Half-open interval `[lo, hi)`; infinite endpoints are allowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }
    pub fn full() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }
    /// `(−∞, a)`
    pub fn below(a: f64) -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: a }
    }
    /// `[a, ∞)`
    pub fn at_or_above(a: f64) -> Self {
        Interval { lo: a, hi: f64::INFINITY }
    }
    pub fn contains(&self, x: f64) -> bool {
        (self.lo == f64::NEG_INFINITY || x >= self.lo) && x < self.hi
    }
    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HybridKind {
    Check,
    Hat,
}

/// Coefficients of a boundary section, keyed by line id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryCoeffs {
    pub entries: BTreeMap<u32, Vec<C64>>,
}

impl BoundaryCoeffs {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn with(mut self, id: u32, coeffs: Vec<C64>) -> Self {
        self.entries.insert(id, coeffs);
        self
    }
    pub fn scalar(mut self, id: u32, z: C64) -> Self {
        self.entries.insert(id, vec![z]);
        self
    }
    pub fn get(&self, id: u32) -> Option<&[C64]> {
        self.entries.get(&id).map(|v| v.as_slice())
    }
    pub fn l2_norm(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|v| v.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct Chirality {
    pub signs: Vec<i32>,
    pub chi: CMat,
    pub plus: CMat,
    pub minus: CMat,
}

#[derive(Clone, Debug)]
pub struct BoundarySpectrum {
    lines: Vec<EigenLine>,
    offsets: Vec<usize>,
    index: HashMap<u32, usize>,
    dim: usize,
    sigma: SigmaAction,
    sigma_mat: CMat,
}

impl BoundarySpectrum {
    /// Validating constructor; rejects an odd-dimensional kernel.
    pub fn new(lines: Vec<EigenLine>, sigma: SigmaAction) -> Result<Self, SpectrumError> {
        let spec = Self::build(lines, sigma)?;
        if spec.kernel_dim() % 2 == 1 {
            return Err(SpectrumError::OddKernel(spec.kernel_dim()));
        }
        Ok(spec)
    }

    /// Like [`BoundarySpectrum::new`] but accepts an odd-dimensional kernel as
    /// long as the supplied kernel unitary squares to −1.
    pub fn new_allowing_odd_kernel(
        lines: Vec<EigenLine>,
        sigma: SigmaAction,
    ) -> Result<Self, SpectrumError> {
        Self::build(lines, sigma)
    }

    /// Builds a spectrum with [`SigmaAction::standard`].
    pub fn with_standard_sigma(lines: Vec<EigenLine>) -> Result<Self, SpectrumError> {
        let sigma = SigmaAction::standard(&lines)?;
        Self::new(lines, sigma)
    }

    pub fn with_standard_sigma_allowing_odd_kernel(
        lines: Vec<EigenLine>,
    ) -> Result<Self, SpectrumError> {
        let sigma = SigmaAction::standard(&lines)?;
        Self::new_allowing_odd_kernel(lines, sigma)
    }

    fn build(mut lines: Vec<EigenLine>, sigma: SigmaAction) -> Result<Self, SpectrumError> {
        let mut seen = BTreeSet::new();
        for l in &lines {
            if !seen.insert(l.id) {
                return Err(SpectrumError::DuplicateId(l.id));
            }
            if l.mult == 0 {
                return Err(SpectrumError::ZeroMultiplicity(l.id));
            }
            if !l.lambda.is_finite() {
                return Err(SpectrumError::NonFinite { id: l.id });
            }
        }
        lines.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.id.cmp(&b.id)));
        let mut offsets = Vec::with_capacity(lines.len());
        let mut index = HashMap::new();
        let mut dim = 0;
        for (i, l) in lines.iter().enumerate() {
            offsets.push(dim);
            index.insert(l.id, i);
            dim += l.mult;
        }
        let mut spec = BoundarySpectrum {
            lines,
            offsets,
            index,
            dim,
            sigma_mat: CMat::zeros(dim, dim),
            sigma,
        };
        spec.sigma_mat = spec.assemble_sigma()?;
        spec.check_sigma_identities()?;
        Ok(spec)
    }

    fn assemble_sigma(&self) -> Result<CMat, SpectrumError> {
        let mut s = CMat::zeros(self.dim, self.dim);
        let mut covered = BTreeSet::new();
        for pair in &self.sigma.pairs {
            let bad = |reason: &str| SpectrumError::BadPair {
                plus: pair.plus,
                minus: pair.minus,
                reason: reason.to_string(),
            };
            let p = self.line(pair.plus).ok_or(SpectrumError::UnknownId(pair.plus))?;
            let m = self.line(pair.minus).ok_or(SpectrumError::UnknownId(pair.minus))?;
            if p.lambda <= 0.0 {
                return Err(bad("plus line must have positive eigenvalue"));
            }
            if !lambda_eq(p.lambda, -m.lambda) {
                return Err(bad("eigenvalues are not opposite"));
            }
            if p.mult != m.mult {
                return Err(bad("multiplicities differ"));
            }
            if pair.matrix.shape() != (p.mult, p.mult) {
                return Err(bad("block has wrong size"));
            }
            if !crate::linalg::is_unitary(&pair.matrix, SIGMA_TOL) {
                return Err(bad("block is not unitary"));
            }
            if !covered.insert(p.id) || !covered.insert(m.id) {
                return Err(bad("line used in more than one pair"));
            }
            let po = self.offset(p.id).unwrap();
            let mo = self.offset(m.id).unwrap();
            let u = &pair.matrix;
            s.view_mut((mo, po), (p.mult, p.mult)).copy_from(u);
            s.view_mut((po, mo), (p.mult, p.mult)).copy_from(&(-u.adjoint()));
        }
        for l in &self.lines {
            if l.lambda != 0.0 && !covered.contains(&l.id) {
                return Err(SpectrumError::Unpaired { id: l.id, lambda: l.lambda });
            }
        }
        let kcoords = self.kernel_coords();
        let k = &self.sigma.kernel;
        if k.shape() != (kcoords.len(), kcoords.len()) {
            return Err(SpectrumError::BadKernel(format!(
                "kernel block is {}x{}, kernel has dimension {}",
                k.nrows(),
                k.ncols(),
                kcoords.len()
            )));
        }
        if !crate::linalg::is_unitary(k, SIGMA_TOL) {
            return Err(SpectrumError::BadKernel("not unitary".into()));
        }
        let sq = k * k + CMat::identity(k.nrows(), k.ncols());
        if max_abs(&sq) > SIGMA_TOL {
            return Err(SpectrumError::BadKernel("square is not -1".into()));
        }
        for (i, &ci) in kcoords.iter().enumerate() {
            for (j, &cj) in kcoords.iter().enumerate() {
                s[(ci, cj)] = k[(i, j)];
            }
        }
        Ok(s)
    }

    fn check_sigma_identities(&self) -> Result<(), SpectrumError> {
        let s = &self.sigma_mat;
        let id = CMat::identity(self.dim, self.dim);
        let checks = [
            ("sigma^2 = -1", max_abs(&(s * s + &id))),
            ("sigma* = -sigma", max_abs(&(s.adjoint() + s))),
            ("sigma A = -A sigma", self.anticommutator_residual(s)),
        ];
        for (identity, residual) in checks {
            if residual > SIGMA_TOL * self.lambda_scale() {
                return Err(SpectrumError::SigmaIdentity { identity, residual });
            }
        }
        Ok(())
    }

    fn lambda_scale(&self) -> f64 {
        self.lines.iter().map(|l| l.lambda.abs()).fold(1.0, f64::max)
    }

    /// `‖MA + AM‖_max` for a coefficient-space matrix `M`.
    pub fn anticommutator_residual(&self, m: &CMat) -> f64 {
        let a = self.a_matrix();
        max_abs(&(m * &a + &a * m))
    }

    pub fn commutator_residual(&self, m: &CMat) -> f64 {
        let a = self.a_matrix();
        max_abs(&(m * &a - &a * m))
    }

    pub fn lines(&self) -> &[EigenLine] {
        &self.lines
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn line(&self, id: u32) -> Option<&EigenLine> {
        self.index.get(&id).map(|&i| &self.lines[i])
    }

    /// First coefficient coordinate of line `id`.
    pub fn offset(&self, id: u32) -> Option<usize> {
        self.index.get(&id).map(|&i| self.offsets[i])
    }

    pub fn coords(&self, id: u32) -> Option<std::ops::Range<usize>> {
        let i = *self.index.get(&id)?;
        Some(self.offsets[i]..self.offsets[i] + self.lines[i].mult)
    }

    /// Eigenvalue of `A` on each coefficient coordinate.
    pub fn coord_lambdas(&self) -> Vec<f64> {
        self.lines.iter().flat_map(|l| std::iter::repeat_n(l.lambda, l.mult)).collect()
    }

    pub fn coord_components(&self) -> Vec<u32> {
        self.lines.iter().flat_map(|l| std::iter::repeat_n(l.component, l.mult)).collect()
    }

    /// Line id owning each coefficient coordinate.
    pub fn coord_ids(&self) -> Vec<u32> {
        self.lines.iter().flat_map(|l| std::iter::repeat_n(l.id, l.mult)).collect()
    }

    pub fn components(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.lines.iter().map(|l| l.component).collect();
        set.into_iter().collect()
    }

    pub fn kernel_coords(&self) -> Vec<usize> {
        self.coords_where(|l| l == 0.0)
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_coords().len()
    }

    pub fn coords_where(&self, pred: impl Fn(f64) -> bool) -> Vec<usize> {
        self.coord_lambdas()
            .iter()
            .enumerate()
            .filter(|(_, &l)| pred(l))
            .map(|(i, _)| i)
            .collect()
    }

    /// Orthonormal basis (unit coordinate vectors) of the span of lines whose
    /// eigenvalue satisfies `pred`.
    pub fn span_where(&self, pred: impl Fn(f64) -> bool) -> CMat {
        self.unit_basis(&self.coords_where(pred))
    }

    pub fn unit_basis(&self, coords: &[usize]) -> CMat {
        let mut m = CMat::zeros(self.dim, coords.len());
        for (j, &i) in coords.iter().enumerate() {
            m[(i, j)] = c(1.0, 0.0);
        }
        m
    }

    /// `L²_I(A)` as an orthonormal basis.
    pub fn spectral_subspace(&self, interval: Interval) -> CMat {
        self.span_where(|l| interval.contains(l))
    }

    pub fn kernel_basis(&self) -> CMat {
        self.span_where(|l| l == 0.0)
    }

    pub fn a_matrix(&self) -> CMat {
        let d = self.coord_lambdas();
        CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&l| c(l, 0.0))))
    }

    pub fn sigma(&self) -> &SigmaAction {
        &self.sigma
    }

    pub fn sigma_matrix(&self) -> &CMat {
        &self.sigma_mat
    }

    /// Coordinate projector onto one boundary component.
    pub fn component_projector(&self, comp: u32) -> CMat {
        let comps = self.coord_components();
        CMat::from_fn(self.dim, self.dim, |i, j| {
            if i == j && comps[i] == comp {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    pub fn projection_matrix(&self, interval: Interval) -> CMat {
        let d = self.coord_lambdas();
        CMat::from_diagonal(&CVec::from_iterator(
            d.len(),
            d.iter().map(|&l| if interval.contains(l) { c(1.0, 0.0) } else { c(0.0, 0.0) }),
        ))
    }

    pub fn validate(&self, phi: &BoundaryCoeffs) -> Result<(), SpectrumError> {
        for (&id, v) in &phi.entries {
            let line = self.line(id).ok_or(SpectrumError::UnknownId(id))?;
            if v.len() != line.mult {
                return Err(SpectrumError::LengthMismatch { id, expected: line.mult, got: v.len() });
            }
        }
        Ok(())
    }

    pub fn to_vector(&self, phi: &BoundaryCoeffs) -> Result<CVec, SpectrumError> {
        self.validate(phi)?;
        let mut v = CVec::zeros(self.dim);
        for (&id, coeffs) in &phi.entries {
            let off = self.offset(id).unwrap();
            for (k, z) in coeffs.iter().enumerate() {
                v[off + k] = *z;
            }
        }
        Ok(v)
    }

    /// Inverse of [`BoundarySpectrum::to_vector`]; lines with all-zero
    /// coefficients are omitted.
    pub fn from_vector(&self, v: &CVec) -> BoundaryCoeffs {
        let mut out = BoundaryCoeffs::new();
        for (i, l) in self.lines.iter().enumerate() {
            let off = self.offsets[i];
            let coeffs: Vec<C64> = (0..l.mult).map(|k| v[off + k]).collect();
            if coeffs.iter().any(|z| z.norm() > 0.0) {
                out.entries.insert(l.id, coeffs);
            }
        }
        out
    }

    /// Zeroes every line with eigenvalue outside `interval`.
    pub fn spectral_projection(
        &self,
        interval: Interval,
        phi: &BoundaryCoeffs,
    ) -> Result<BoundaryCoeffs, SpectrumError> {
        self.validate(phi)?;
        let mut out = BoundaryCoeffs::new();
        for (&id, v) in &phi.entries {
            if interval.contains(self.line(id).unwrap().lambda) {
                out.entries.insert(id, v.clone());
            }
        }
        Ok(out)
    }

    pub fn hybrid_norm(
        &self,
        phi: &BoundaryCoeffs,
        kind: HybridKind,
        a: f64,
    ) -> Result<f64, SpectrumError> {
        self.validate(phi)?;
        let mut acc = 0.0;
        for (&id, v) in &phi.entries {
            let lambda = self.line(id).unwrap().lambda;
            let base = (1.0 + lambda * lambda).sqrt();
            let below = lambda < a;
            let weight = match (kind, below) {
                (HybridKind::Check, true) | (HybridKind::Hat, false) => base,
                _ => 1.0 / base,
            };
            acc += weight * v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        Ok(acc.sqrt())
    }

    pub fn sigma_apply(&self, phi: &BoundaryCoeffs) -> Result<BoundaryCoeffs, SpectrumError> {
        let v = self.to_vector(phi)?;
        Ok(self.from_vector(&(&self.sigma_mat * v)))
    }

    /// `χ = Σ_j i ε_j σ` restricted to component `j` (components in ascending
    /// label order) and its ±1 eigenprojectors.
    pub fn chirality_split(&self, signs: &[i32]) -> Result<Chirality, SpectrumError> {
        let comps = self.components();
        if signs.len() != comps.len() {
            return Err(SpectrumError::SignCount { expected: comps.len(), got: signs.len() });
        }
        if let Some(&bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(SpectrumError::BadSign(bad));
        }
        let mut chi = CMat::zeros(self.dim, self.dim);
        for (comp, &eps) in comps.iter().zip(signs) {
            let p = self.component_projector(*comp);
            if max_abs(&(&self.sigma_mat * &p - &p * &self.sigma_mat)) > SIGMA_TOL {
                return Err(SpectrumError::SigmaMixesComponents);
            }
            chi += (&self.sigma_mat * &p).scale(eps as f64) * c(0.0, 1.0);
        }
        let id = CMat::identity(self.dim, self.dim);
        let plus = (&id + &chi).scale(0.5);
        let minus = (&id - &chi).scale(0.5);
        Ok(Chirality { signs: signs.to_vec(), chi, plus, minus })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpectrumDoc::from(self)).expect("spectrum serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SpectrumError> {
        let doc: SpectrumDoc = serde_json::from_str(text)?;
        let sigma = doc.sigma.into_action();
        Self::new(doc.lines, sigma)
    }

    pub fn from_json_allowing_odd_kernel(text: &str) -> Result<Self, SpectrumError> {
        let doc: SpectrumDoc = serde_json::from_str(text)?;
        let sigma = doc.sigma.into_action();
        Self::new_allowing_odd_kernel(doc.lines, sigma)
    }

    /// The same data for `−A`; `σ` is unchanged as an operator.
    pub fn negated(&self) -> BoundarySpectrum {
        let lines = self
            .lines
            .iter()
            .map(|l| EigenLine { lambda: -l.lambda + 0.0, ..l.clone() })
            .collect();
        let pairs = self
            .sigma
            .pairs
            .iter()
            .map(|p| SigmaPair { plus: p.minus, minus: p.plus, matrix: -p.matrix.adjoint() })
            .collect();
        let sigma = SigmaAction { pairs, kernel: self.sigma.kernel.clone() };
        Self::build(lines, sigma).expect("negation preserves validity")
    }

    /// Mult-weighted number of lines with eigenvalue in `interval`.
    pub fn count_in(&self, interval: Interval) -> usize {
        self.lines.iter().filter(|l| interval.contains(l.lambda)).map(|l| l.mult).sum()
    }

    pub fn max_abs_lambda(&self) -> f64 {
        self.lines.iter().map(|l| l.lambda.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for BoundarySpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>24} {:>5} {:>5}", "id", "lambda", "mult", "comp")?;
        for l in &self.lines {
            writeln!(f, "{:>6} {:>24.17e} {:>5} {:>5}", l.id, l.lambda, l.mult, l.component)?;
        }
        write!(f, "dim = {}, dim ker A = {}", self.dim, self.kernel_dim())
    }
}

/// Row-major matrix of `[re, im]` pairs.
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_doc(m: &CMat) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Rows of unequal length are padded with zeros.
pub fn matrix_from_doc(doc: &MatrixDoc) -> CMat {
    let rows = doc.len();
    let cols = doc.iter().map(|r| r.len()).max().unwrap_or(0);
    CMat::from_fn(rows, cols, |i, j| {
        doc[i].get(j).map(|p| c(p[0], p[1])).unwrap_or(c(0.0, 0.0))
    })
}

#[derive(Serialize, Deserialize)]
struct PairDoc {
    lambda: f64,
    plus: u32,
    minus: u32,
    matrix: MatrixDoc,
}

#[derive(Serialize, Deserialize)]
struct SigmaDoc {
    pairs: Vec<PairDoc>,
    kernel: MatrixDoc,
}

impl SigmaDoc {
    fn into_action(self) -> SigmaAction {
        SigmaAction {
            pairs: self
                .pairs
                .into_iter()
                .map(|p| SigmaPair { plus: p.plus, minus: p.minus, matrix: matrix_from_doc(&p.matrix) })
                .collect(),
            kernel: matrix_from_doc(&self.kernel),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumDoc {
    lines: Vec<EigenLine>,
    sigma: SigmaDoc,
}

impl From<&BoundarySpectrum> for SpectrumDoc {
    fn from(s: &BoundarySpectrum) -> Self {
        SpectrumDoc {
            lines: s.lines.clone(),
            sigma: SigmaDoc {
                pairs: s
                    .sigma
                    .pairs
                    .iter()
                    .map(|p| PairDoc {
                        lambda: s.line(p.plus).map(|l| l.lambda).unwrap_or(0.0),
                        plus: p.plus,
                        minus: p.minus,
                        matrix: matrix_to_doc(&p.matrix),
                    })
                    .collect(),
                kernel: matrix_to_doc(&s.sigma.kernel),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn disk(cutoff: i32) -> BoundarySpectrum {
        let lines = (-cutoff..=cutoff)
            .map(|k| EigenLine { id: (k + cutoff) as u32, lambda: k as f64, mult: 1, component: 0 })
            .collect();
        BoundarySpectrum::with_standard_sigma_allowing_odd_kernel(lines).unwrap()
    }

    fn id_of(k: i32) -> u32 {
        (k + 3) as u32
    }

    #[test]
    fn full_interval_is_identity() {
        let s = disk(3);
        let phi = BoundaryCoeffs::new().scalar(id_of(-1), c(1.0, 0.0)).scalar(id_of(2), c(0.0, 3.0));
        assert_eq!(s.spectral_projection(Interval::full(), &phi).unwrap(), phi);
    }

    #[test]
    fn masking_keeps_nonnegative_lines() {
        let s = disk(3);
        let phi = BoundaryCoeffs::new()
            .scalar(id_of(-1), c(1.0, 0.0))
            .scalar(id_of(0), c(2.0, 0.0))
            .scalar(id_of(3), c(5.0, 0.0));
        let got = s.spectral_projection(Interval::at_or_above(0.0), &phi).unwrap();
        let want = BoundaryCoeffs::new().scalar(id_of(0), c(2.0, 0.0)).scalar(id_of(3), c(5.0, 0.0));
        assert_eq!(got, want);
    }

    #[test]
    fn composition_is_intersection() {
        let s = disk(3);
        let mut phi = BoundaryCoeffs::new();
        for k in -3..=3 {
            phi = phi.scalar(id_of(k), c(k as f64 + 10.0, 1.0));
        }
        let i = Interval::at_or_above(0.0);
        let j = Interval::below(2.0);
        let twice = s.spectral_projection(i, &s.spectral_projection(j, &phi).unwrap()).unwrap();
        let once = s.spectral_projection(i.intersect(&j), &phi).unwrap();
        assert_eq!(twice, once);
        let kept: Vec<u32> = once.entries.keys().cloned().collect();
        assert_eq!(kept, vec![id_of(0), id_of(1)]);
    }

    #[test]
    fn unknown_id_is_rejected() {
        let s = disk(1);
        let phi = BoundaryCoeffs::new().scalar(99, c(1.0, 0.0));
        assert!(matches!(s.spectral_projection(Interval::full(), &phi), Err(SpectrumError::UnknownId(99))));
    }

    #[test]
    fn hybrid_norm_examples() {
        let one = |lambda: f64| {
            let lines = vec![
                EigenLine { id: 0, lambda, mult: 1, component: 0 },
                EigenLine { id: 1, lambda: -lambda, mult: 1, component: 0 },
            ];
            BoundarySpectrum::with_standard_sigma(lines).unwrap()
        };
        let s = BoundarySpectrum::with_standard_sigma(vec![
            EigenLine { id: 0, lambda: 0.0, mult: 2, component: 0 },
        ])
        .unwrap();
        let phi = BoundaryCoeffs::new().with(0, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((s.hybrid_norm(&phi, HybridKind::Check, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let s3 = one(3f64.sqrt());
        let phi = BoundaryCoeffs::new().scalar(0, c(1.0, 0.0));
        let got = s3.hybrid_norm(&phi, HybridKind::Check, 2.0).unwrap();
        assert!((got - 2f64.sqrt()).abs() < 1e-15);
        let hat = s3.hybrid_norm(&phi, HybridKind::Hat, 2.0).unwrap();
        assert!((hat - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sigma_moves_blocks_and_squares_to_minus_one() {
        let s = disk(3);
        let phi = BoundaryCoeffs::new().scalar(id_of(3), c(1.0, 2.0));
        let once = s.sigma_apply(&phi).unwrap();
        assert_eq!(once.entries.keys().cloned().collect::<Vec<_>>(), vec![id_of(-3)]);
        let twice = s.sigma_apply(&once).unwrap();
        assert_eq!(twice.get(id_of(3)).unwrap()[0], c(-1.0, -2.0));
        assert!((once.l2_norm() - phi.l2_norm()).abs() < 1e-15);
    }

    #[test]
    fn odd_kernel_rejected_by_strict_constructor() {
        let lines = vec![EigenLine { id: 0, lambda: 0.0, mult: 1, component: 0 }];
        assert!(matches!(
            BoundarySpectrum::with_standard_sigma(lines.clone()),
            Err(SpectrumError::OddKernel(1))
        ));
        assert!(BoundarySpectrum::with_standard_sigma_allowing_odd_kernel(lines).is_ok());
    }

    #[test]
    fn unpaired_line_rejected() {
        let lines = vec![
            EigenLine { id: 0, lambda: 1.0, mult: 1, component: 0 },
            EigenLine { id: 1, lambda: -2.0, mult: 1, component: 0 },
        ];
        assert!(matches!(
            BoundarySpectrum::with_standard_sigma(lines),
            Err(SpectrumError::Unpaired { .. })
        ));
    }

    #[test]
    fn bad_kernel_square_rejected() {
        let lines = vec![EigenLine { id: 0, lambda: 0.0, mult: 2, component: 0 }];
        let sigma = SigmaAction { pairs: vec![], kernel: CMat::identity(2, 2) };
        assert!(matches!(BoundarySpectrum::new(lines, sigma), Err(SpectrumError::BadKernel(_))));
    }

    #[test]
    fn chirality_projectors_are_complementary() {
        let s = disk(3);
        let ch = s.chirality_split(&[1]).unwrap();
        let id = CMat::identity(s.dim(), s.dim());
        assert!(max_abs(&(&ch.plus + &ch.minus - &id)) < 1e-12);
        assert!(max_abs(&(&ch.plus * &ch.minus)) < 1e-12);
        assert!(s.anticommutator_residual(&ch.chi) < 1e-12);
        let sg = s.sigma_matrix();
        assert!(max_abs(&(&ch.chi * sg - sg * &ch.chi)) < 1e-12);
        assert!(matches!(s.chirality_split(&[1, -1]), Err(SpectrumError::SignCount { .. })));
    }

    #[test]
    fn json_round_trip() {
        let lines = vec![
            EigenLine { id: 0, lambda: 0.0, mult: 2, component: 0 },
            EigenLine { id: 1, lambda: 1.5, mult: 2, component: 0 },
            EigenLine { id: 2, lambda: -1.5, mult: 2, component: 0 },
        ];
        let s = BoundarySpectrum::with_standard_sigma(lines).unwrap();
        let back = BoundarySpectrum::from_json(&s.to_json()).unwrap();
        assert_eq!(back.lines(), s.lines());
        assert!(max_abs(&(back.sigma_matrix() - s.sigma_matrix())) == 0.0);
    }
}
