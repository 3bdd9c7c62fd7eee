//! One-dimensional mode problems `L Y = J Y' + P(t) Y` on `[0, T]` with
//! weight `ρ`, and their formal adjoints.

use std::fmt;
use std::sync::Arc;

use dbvp_core::linalg::{c, max_abs, CMat};

/// Coefficients of a first-order system on `[0, T]`.
///
/// `j` is constant and invertible; `p` may be singular at `t = 0` when the
/// interval ends at an apex.
pub trait Coefficients: Send + Sync + fmt::Debug {
    fn comps(&self) -> usize;
    fn j(&self) -> CMat;
    fn p(&self, t: f64) -> CMat;
    fn rho(&self, t: f64) -> f64;
    /// `ρ'/ρ`.
    fn log_rho_prime(&self, t: f64) -> f64;

    /// Zeroth-order term `V(t)` of the rough Laplacian on this mode, which
    /// acts as `−Y'' − (ρ'/ρ)Y' + V Y`. `None` when not known in closed form.
    fn rough_potential(&self, _t: f64) -> Option<CMat> {
        None
    }

    /// Weitzenböck curvature term at `t`.
    fn curvature_term(&self, _t: f64) -> Option<f64> {
        None
    }
}

/// Formal adjoint with respect to `∫⟨·,·⟩ρ dt`:
/// `J† = −J*`, `P† = P* − (ρ'/ρ)J*`.
#[derive(Debug)]
pub struct FormalAdjoint(pub Arc<dyn Coefficients>);

impl Coefficients for FormalAdjoint {
    fn comps(&self) -> usize {
        self.0.comps()
    }
    fn j(&self) -> CMat {
        -self.0.j().adjoint()
    }
    fn p(&self, t: f64) -> CMat {
        let js = self.0.j().adjoint();
        self.0.p(t).adjoint() - js * c(self.0.log_rho_prime(t), 0.0)
    }
    fn rho(&self, t: f64) -> f64 {
        self.0.rho(t)
    }
    fn log_rho_prime(&self, t: f64) -> f64 {
        self.0.log_rho_prime(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum End {
    /// `t = 0`.
    Start,
    /// `t = T`.
    Finish,
}

/// Linear map from the components of `Y(end)` to boundary coordinates.
#[derive(Clone, Debug)]
pub struct Trace {
    pub end: End,
    /// Global coordinates of the truncated boundary space hit by this trace.
    pub coords: Vec<usize>,
    /// `coords.len() × comps`.
    pub map: CMat,
}

#[derive(Clone, Debug)]
pub struct ModeProblem {
    pub id: u32,
    pub label: String,
    /// Fibre eigenvalue (signed).
    pub mu: f64,
    pub t_max: f64,
    pub coeffs: Arc<dyn Coefficients>,
    pub traces: Vec<Trace>,
    /// Components forced to vanish at an apex `t = 0`.
    pub apex_zero: Vec<usize>,
    /// The same for the formal adjoint problem.
    pub adjoint_apex_zero: Vec<usize>,
    /// Size of the cross-boundary coupling of homogeneous solutions; zero when
    /// the mode has a single trace end.
    pub witness: f64,
    /// Boundary eigenlines touched by the traces.
    pub line_ids: Vec<u32>,
}

impl ModeProblem {
    pub fn comps(&self) -> usize {
        self.coeffs.comps()
    }

    /// All traced coordinates, in trace order.
    pub fn coords(&self) -> Vec<usize> {
        self.traces.iter().flat_map(|t| t.coords.iter().cloned()).collect()
    }

    /// Formal adjoint problem. Its traces are `s·σ T J*` with `s = +1` at
    /// `t = T` and `s = −1` at `t = 0`, so that the boundary term of Green's
    /// formula reads `⟨σ T Y, T† Z⟩` summed over both ends.
    pub fn adjoint(&self, sigma: &CMat) -> ModeProblem {
        let js = self.coeffs.j().adjoint();
        let traces = self
            .traces
            .iter()
            .map(|tr| {
                let s = match tr.end {
                    End::Finish => 1.0,
                    End::Start => -1.0,
                };
                let mut cols = CMat::zeros(sigma.nrows(), tr.coords.len());
                for (k, &x) in tr.coords.iter().enumerate() {
                    cols.set_column(k, &sigma.column(x));
                }
                let full = cols * &tr.map * &js * c(s, 0.0);
                let coords: Vec<usize> = (0..full.nrows())
                    .filter(|&i| full.row(i).iter().any(|z| z.norm() > 1e-14))
                    .collect();
                let map = CMat::from_fn(coords.len(), full.ncols(), |i, j| full[(coords[i], j)]);
                Trace { end: tr.end, coords, map }
            })
            .collect();
        ModeProblem {
            id: self.id,
            label: format!("{} (adjoint)", self.label),
            mu: self.mu,
            t_max: self.t_max,
            coeffs: Arc::new(FormalAdjoint(self.coeffs.clone())),
            traces,
            apex_zero: self.adjoint_apex_zero.clone(),
            adjoint_apex_zero: self.apex_zero.clone(),
            witness: self.witness,
            line_ids: self.line_ids.clone(),
        }
    }

    /// True when the formal adjoint has the same coefficients, sampled at a
    /// few interior points.
    pub fn is_formally_selfadjoint(&self) -> bool {
        let adj = FormalAdjoint(self.coeffs.clone());
        if max_abs(&(adj.j() - self.coeffs.j())) > 1e-12 {
            return false;
        }
        [0.17, 0.43, 0.71, 0.93].iter().all(|&s| {
            let t = s * self.t_max;
            let p = self.coeffs.p(t);
            max_abs(&(adj.p(t) - &p)) <= 1e-10 * max_abs(&p).max(1.0)
        })
    }

    /// `(JY' + PY)(t)` from a value and derivative.
    pub fn apply(&self, t: f64, y: &CMat, dy: &CMat) -> CMat {
        self.coeffs.j() * dy + self.coeffs.p(t) * y
    }
}
