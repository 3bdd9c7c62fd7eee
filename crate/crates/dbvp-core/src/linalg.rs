//! Dense complex linear algebra on coefficient spaces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative singular-value cutoff used when extracting subspace bases.
pub const RANK_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn empty(dim: usize) -> CMat {
    CMat::zeros(dim, 0)
}

/// Orthonormal basis of the column span of `m`.
pub fn orth(m: &CMat) -> CMat {
    orth_tol(m, RANK_TOL)
}

pub fn orth_tol(m: &CMat, tol: f64) -> CMat {
    let (rows, cols) = m.shape();
    if cols == 0 || rows == 0 {
        return empty(rows);
    }
    let svd = Svd::new(m);
    let scale = svd.s.first().cloned().unwrap_or(0.0).max(1.0);
    let keep = svd.s.iter().take_while(|&&x| x > tol * scale).count();
    svd.u.columns(0, keep).into_owned()
}

/// Thin singular value decomposition `m = u diag(s) vᴴ`, singular values in
/// descending order.
///
/// One-sided Jacobi; slower than bidiagonalisation but accurate for the small
/// dense matrices used here, including rank-deficient Hermitian ones.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

impl Svd {
    pub fn new(m: &CMat) -> Self {
        if m.nrows() < m.ncols() {
            let t = Svd::new(&m.adjoint());
            return Svd { u: t.v, s: t.s, v: t.u };
        }
        let (rows, cols) = m.shape();
        let mut a = m.clone();
        let mut v = CMat::identity(cols, cols);
        let eps = f64::EPSILON;
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..cols {
                for q in p + 1..cols {
                    let alpha = a.column(p).norm_squared();
                    let beta = a.column(q).norm_squared();
                    let gamma = a.column(p).dotc(&a.column(q));
                    let g = gamma.norm();
                    if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = cs * t;
                    rotate(&mut a, p, q, cs, sn, phase);
                    rotate(&mut v, p, q, cs, sn, phase);
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<(usize, f64)> = (0..cols).map(|j| (j, a.column(j).norm())).collect();
        order.sort_by(|x, y| y.1.total_cmp(&x.1));
        let mut u = CMat::zeros(rows, cols);
        let mut vs = CMat::zeros(cols, cols);
        let mut s = Vec::with_capacity(cols);
        for (k, &(j, sj)) in order.iter().enumerate() {
            if sj > 0.0 {
                u.set_column(k, &(a.column(j) / c(sj, 0.0)));
            }
            vs.set_column(k, &v.column(j));
            s.push(sj);
        }
        Svd { u, s, v: vs }
    }
}

/// Applies the phase-corrected plane rotation to columns `p`, `q`.
fn rotate(m: &mut CMat, p: usize, q: usize, cs: f64, sn: f64, phase: C64) {
    for i in 0..m.nrows() {
        let xp = m[(i, p)];
        let xq = m[(i, q)] * phase.conj();
        m[(i, p)] = xp * cs - xq * sn;
        m[(i, q)] = xp * sn + xq * cs;
    }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    Svd::new(m).s
}

pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// Orthonormal basis of the orthogonal complement of the span of `basis`.
pub fn complement(basis: &CMat) -> CMat {
    let dim = basis.nrows();
    if basis.ncols() == 0 {
        return CMat::identity(dim, dim);
    }
    let q = orth_tol(basis, 1e-8);
    Householder::new(&q).trailing_columns(q.ncols())
}

/// Householder QR factorisation `m = Q R` of a matrix with at least as many
/// rows as columns. `Q` is kept as the list of reflectors.
#[derive(Clone, Debug)]
pub struct Householder {
    reflectors: Vec<CVec>,
    pub r: CMat,
}

impl Householder {
    pub fn new(m: &CMat) -> Self {
        let (rows, cols) = m.shape();
        let mut a = m.clone();
        let mut reflectors = Vec::with_capacity(cols.min(rows));
        for k in 0..cols.min(rows) {
            let x = a.view((k, k), (rows - k, 1)).column(0).into_owned();
            let norm = x.norm();
            let mut v = CVec::zeros(rows);
            if norm == 0.0 {
                reflectors.push(v);
                continue;
            }
            let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { c(1.0, 0.0) };
            let alpha = -phase * norm;
            for i in 0..rows - k {
                v[k + i] = x[i];
            }
            v[k] -= alpha;
            let vn = v.norm();
            v /= c(vn, 0.0);
            let w = v.adjoint() * &a;
            a -= (&v * w) * c(2.0, 0.0);
            reflectors.push(v);
        }
        let keep = cols.min(rows);
        let r = a.rows(0, keep).into_owned();
        Householder { reflectors, r }
    }

    /// Columns `from..` of the full unitary `Q`.
    pub fn trailing_columns(&self, from: usize) -> CMat {
        let n = self.reflectors.first().map(|v| v.len()).unwrap_or(0);
        let mut out = CMat::zeros(n, n - from);
        for (j, col) in (from..n).enumerate() {
            let mut e = CVec::zeros(n);
            e[col] = c(1.0, 0.0);
            for v in self.reflectors.iter().rev() {
                let d = v.dotc(&e);
                e -= v * (d * c(2.0, 0.0));
            }
            out.set_column(j, &e);
        }
        out
    }
}

/// Singular values of a large matrix, descending.
///
/// The complex matrix is embedded as the real `[[Re, −Im], [Im, Re]]`, whose
/// singular values are those of `m`, each twice; the real bidiagonal SVD is
/// much faster than Jacobi at this size.
pub fn singular_values_tall(m: &CMat) -> Vec<f64> {
    let (r, k) = m.shape();
    if r == 0 || k == 0 {
        return Vec::new();
    }
    let re = DMatrix::<f64>::from_fn(2 * r, 2 * k, |i, j| {
        let z = m[(i % r, j % k)];
        match (i < r, j < k) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut s: Vec<f64> = re.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.into_iter().step_by(2).collect()
}

/// `a · b` through four real products, which use the blocked real kernels.
pub fn cmul(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, c)
}

/// `aᴴ · b`.
pub fn cmul_adj(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = ar.tr_mul(&br) + ai.tr_mul(&bi);
    let im = ar.tr_mul(&bi) - ai.tr_mul(&br);
    re.zip_map(&im, c)
}

/// Orthonormal basis of the null space of `m`.
pub fn null_space(m: &CMat) -> CMat {
    let rows_basis = orth(&m.adjoint());
    complement(&rows_basis)
}

pub fn hcat(parts: &[&CMat]) -> CMat {
    let rows = parts.first().map(|p| p.nrows()).unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((0, at), (rows, p.ncols())).copy_from(*p);
        at += p.ncols();
    }
    out
}

pub fn vcat(parts: &[&CMat]) -> CMat {
    let cols = parts.first().map(|p| p.ncols()).unwrap_or(0);
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((at, 0), (p.nrows(), cols)).copy_from(*p);
        at += p.nrows();
    }
    out
}

/// Spectral norm.
pub fn norm2(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_values(m).first().cloned().unwrap_or(0.0)
}

/// Spectral-norm distance between the orthogonal projectors onto two spans.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    norm2(&(projector(a) - projector(b)))
}

/// Largest component of `small` outside the span of orthonormal `big`.
pub fn containment_residual(big: &CMat, small: &CMat) -> f64 {
    if small.ncols() == 0 {
        return 0.0;
    }
    norm2(&(small - projector(big) * small))
}

pub fn span_sum(a: &CMat, b: &CMat) -> CMat {
    orth(&hcat(&[a, b]))
}

pub fn intersection(a: &CMat, b: &CMat) -> CMat {
    complement(&span_sum(&complement(a), &complement(b)))
}

/// Orthonormal basis of `a ⊖ b`: the part of span `a` orthogonal to span `b`.
pub fn relative_complement(a: &CMat, b: &CMat) -> CMat {
    let pa = projector(a);
    let pb = projector(b);
    let dim = a.nrows();
    orth_tol(&(&pa * (CMat::identity(dim, dim) - pb) * &pa), 1e-8)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs(&(m.adjoint() * m - CMat::identity(m.nrows(), m.ncols()))) <= tol
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Selects rows of a matrix.
pub fn select_rows(m: &CMat, rows: &[usize]) -> CMat {
    let mut out = CMat::zeros(rows.len(), m.ncols());
    for (i, &r) in rows.iter().enumerate() {
        out.set_row(i, &m.row(r));
    }
    out
}

pub fn select_cols(m: &CMat, cols: &[usize]) -> CMat {
    let mut out = CMat::zeros(m.nrows(), cols.len());
    for (j, &cidx) in cols.iter().enumerate() {
        out.set_column(j, &m.column(cidx));
    }
    out
}

pub fn submatrix(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        CMat::from_row_slice(
            3,
            2,
            &[c(1.0, 0.0), c(1.0, 1.0), c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)],
        )
    }

    #[test]
    fn orth_spans_and_is_orthonormal() {
        let q = orth(&sample());
        assert_eq!(q.ncols(), 2);
        let g = q.adjoint() * &q;
        assert!(max_abs(&(g - CMat::identity(2, 2))) < 1e-12);
        assert!(containment_residual(&q, &sample()) < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let q = orth(&sample());
        let qc = complement(&q);
        assert_eq!(qc.ncols(), 1);
        assert!(max_abs(&(q.adjoint() * &qc)) < 1e-12);
    }

    #[test]
    fn null_space_is_annihilated() {
        let m = sample().adjoint();
        let n = null_space(&m);
        assert_eq!(n.ncols(), 1);
        assert!(max_abs(&(m * n)) < 1e-12);
    }

    #[test]
    fn intersection_of_coordinate_planes() {
        let e = |i: usize| {
            let mut v = CMat::zeros(3, 1);
            v[(i, 0)] = c(1.0, 0.0);
            v
        };
        let a = hcat(&[&e(0), &e(1)]);
        let b = hcat(&[&e(1), &e(2)]);
        let i = intersection(&a, &b);
        assert_eq!(i.ncols(), 1);
        assert!(subspace_distance(&i, &e(1)) < 1e-12);
        let r = relative_complement(&a, &b);
        assert!(subspace_distance(&r, &e(0)) < 1e-12);
    }

    #[test]
    fn jacobi_svd_reconstructs_projector() {
        let q = orth(&sample());
        let r = CMat::identity(3, 3) - projector(&q);
        let svd = Svd::new(&r);
        assert!((svd.s[0] - 1.0).abs() < 1e-13);
        assert!(svd.s[1] < 1e-13);
        let d = CMat::from_diagonal(&CVec::from_iterator(3, svd.s.iter().map(|&x| c(x, 0.0))));
        assert!(max_abs(&(&svd.u * d * svd.v.adjoint() - r)) < 1e-13);
    }

    #[test]
    fn householder_complement_and_r() {
        let m = sample();
        let h = Householder::new(&m);
        let q = h.trailing_columns(0);
        assert!(is_unitary(&q, 1e-13));
        let r_full = q.adjoint() * &m;
        assert!(max_abs(&(r_full.rows(0, 2) - &h.r)) < 1e-13);
        assert!(max_abs(&r_full.rows(2, 1).into_owned()) < 1e-13);
        let prod = cmul(&m.adjoint(), &m);
        assert!(max_abs(&(prod - m.adjoint() * &m)) < 1e-13);
        assert!(max_abs(&(cmul_adj(&m, &m) - m.adjoint() * &m)) < 1e-13);
        let sv = singular_values_tall(&m);
        let direct = singular_values(&m);
        assert!((sv[0] - direct[0]).abs() < 1e-13 && (sv[1] - direct[1]).abs() < 1e-13);
    }

    #[test]
    fn jacobi_svd_wide_matrix() {
        let m = sample().adjoint();
        let svd = Svd::new(&m);
        assert_eq!(svd.u.shape(), (2, 2));
        assert_eq!(svd.v.shape(), (3, 2));
        let d = CMat::from_diagonal(&CVec::from_iterator(2, svd.s.iter().map(|&x| c(x, 0.0))));
        assert!(max_abs(&(&svd.u * d * svd.v.adjoint() - m)) < 1e-13);
    }
}
