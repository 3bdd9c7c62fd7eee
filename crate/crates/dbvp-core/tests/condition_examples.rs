mod common;

use std::sync::Arc;

use dbvp_core::condition::{lagrangian, ConditionTag};
use dbvp_core::linalg::{c, containment_residual, max_abs, orth, span_sum, subspace_distance, CMat};
use dbvp_core::{BcRecipe, BoundaryCondition, BoundarySpectrum, ConditionError, EllipticDecomposition};

const TOL: f64 = 1e-10;

#[test]
fn aps_on_disk_is_negative_half() {
    let s = common::disk(4);
    let b = BoundaryCondition::build(s.clone(), &"gaps:a=0.0".parse().unwrap()).unwrap();
    assert!(subspace_distance(b.subspace(), &s.span_where(|l| l < 0.0)) < TOL);
    assert_eq!(b.dim(), 4);
}

#[test]
fn maps_blocks() {
    let s = common::with_kernel(2, 3);
    let b = BoundaryCondition::maps(s.clone());
    let d = b.decomposition();
    assert!(subspace_distance(&d.w_minus, &s.kernel_basis()) < TOL);
    assert_eq!(d.w_plus.ncols(), 0);
    let neg = s.projection_matrix(dbvp_core::Interval::below(0.0));
    assert!(max_abs(&(&d.g + s.sigma_matrix() * neg)) < 1e-14);
    assert_eq!(b.index_offset(), (-2, 0.0));
}

#[test]
fn transmission_blocks() {
    let s = common::doubled(2, 2);
    let b = BoundaryCondition::transmission(s.clone()).unwrap();
    let d = b.decomposition();
    let ker = s.kernel_basis();
    // Coordinates: first copy kernel ids 0, mirror ids 100.
    let k0 = s.coords(0).unwrap();
    let k1 = s.coords(100).unwrap();
    let mut plus = CMat::zeros(s.dim(), 2);
    let mut minus = CMat::zeros(s.dim(), 2);
    for j in 0..2 {
        plus[(k0.start + j, j)] = c(1.0, 0.0);
        plus[(k1.start + j, j)] = c(1.0, 0.0);
        minus[(k0.start + j, j)] = c(1.0, 0.0);
        minus[(k1.start + j, j)] = c(-1.0, 0.0);
    }
    assert!(subspace_distance(&d.w_plus, &orth(&plus)) < TOL);
    assert!(subspace_distance(&d.w_minus, &orth(&minus)) < TOL);
    assert!(containment_residual(&ker, &d.w_plus) < TOL);
    // g swaps the copies: a negative line of the first copy goes to its mirror.
    let v = s.coords(2).unwrap().start;
    let w = s.coords(102).unwrap().start;
    assert!((d.g[(w, v)] - c(1.0, 0.0)).norm() < 1e-15);
    assert_eq!(b.index_offset().0, 0);
    assert!(b.ellipticity_check().passed());
}

#[test]
fn transmission_rejects_undoubled_spectrum() {
    let s = common::with_kernel(2, 2);
    assert!(matches!(BoundaryCondition::transmission(s), Err(ConditionError::Doubling(_))));
}

#[test]
fn aps_adjoint_adds_kernel() {
    let s = common::with_kernel(2, 3);
    let aps = BoundaryCondition::aps(s.clone());
    let adj = aps.adjoint();
    let expected = span_sum(aps.subspace(), &s.kernel_basis());
    assert!(subspace_distance(adj.subspace(), &expected) < TOL);
    assert!(!aps.is_selfadjoint());
}

#[test]
fn maps_adjoint_adds_kernel() {
    let s = common::with_kernel(4, 3);
    let m = BoundaryCondition::maps(s.clone());
    let expected = span_sum(m.subspace(), &s.kernel_basis());
    assert!(subspace_distance(m.adjoint().subspace(), &expected) < TOL);
}

#[test]
fn adjoint_is_involutive() {
    let s = common::random_spectrum(3, 4, 1);
    for b in [
        BoundaryCondition::maps(s.clone()),
        BoundaryCondition::gaps(s.clone(), 0.7),
        BoundaryCondition::chirality(s.clone(), &[1], false).unwrap(),
    ] {
        assert!(b.adjoint().adjoint().distance(&b) < TOL);
    }
}

#[test]
fn aps_with_lagrangian_is_selfadjoint() {
    for k in [2, 4] {
        let s = common::with_kernel(k, 3);
        let b = BoundaryCondition::build(s, &BcRecipe::ApsLagrangian).unwrap();
        assert!(b.is_selfadjoint());
    }
}

/// χ moving each ±λ pair by σ's own block (so `χσ = −σχ`) and acting by
/// diag(1, −1) on a kernel carrying the standard complex structure.
fn swap_chirality(s: &BoundarySpectrum) -> CMat {
    let mut chi = CMat::zeros(s.dim(), s.dim());
    for p in &s.sigma().pairs {
        let a = s.coords(p.plus).unwrap();
        let b = s.coords(p.minus).unwrap();
        let u = &p.matrix;
        chi.view_mut((b.start, a.start), u.shape()).copy_from(u);
        chi.view_mut((a.start, b.start), u.shape()).copy_from(&u.adjoint());
    }
    let k = s.kernel_coords();
    for (n, &i) in k.iter().enumerate() {
        chi[(i, i)] = c(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    chi
}

#[test]
fn chirality_anticommuting_with_sigma_is_selfadjoint() {
    let s = common::with_kernel(2, 3);
    let chi = swap_chirality(&s);
    let b = BoundaryCondition::chirality_with(s, &chi, false, ConditionTag::Custom).unwrap();
    assert!(b.is_selfadjoint());
}

#[test]
fn sigma_commuting_chirality_is_not_selfadjoint() {
    let s = common::with_kernel(0, 3);
    let b = BoundaryCondition::chirality(s.clone(), &[1], false).unwrap();
    assert!(!b.is_selfadjoint());
    // Its adjoint is the opposite chirality.
    let other = BoundaryCondition::chirality(s, &[1], true).unwrap();
    assert!(b.adjoint().distance(&other) < TOL);
}

#[test]
fn normal_form_of_aps_plus_lagrangian() {
    let s = common::with_kernel(2, 3);
    let b = BoundaryCondition::aps_lagrangian(s.clone()).unwrap();
    let nf = b.normal_form().unwrap();
    assert!(subspace_distance(&nf.v, &s.span_where(|l| l < 0.0)) < TOL);
    assert_eq!(nf.w.ncols(), 0);
    assert!(max_abs(&nf.g) < TOL);
    assert!(subspace_distance(&nf.l, &lagrangian(&s).unwrap()) < TOL);
}

/// For `B = {φ + χφ}` with `ker A = 0`, `σgv = χv` on `λ < 0`, so the
/// normal-form map is `g = −σχ` there.
#[test]
fn normal_form_of_chirality_condition() {
    let s = common::random_spectrum(11, 4, 0);
    let chi = swap_chirality(&s);
    let b = BoundaryCondition::chirality_with(s.clone(), &chi, false, ConditionTag::Custom).unwrap();
    let nf = b.normal_form().unwrap();
    assert_eq!(nf.w.ncols(), 0);
    assert_eq!(nf.l.ncols(), 0);
    let neg = s.projection_matrix(dbvp_core::Interval::below(0.0));
    let oracle = -(s.sigma_matrix() * &chi * &neg);
    assert!(max_abs(&(&nf.g * &neg - &oracle)) < 1e-9);
    assert!(nf.reconstruction_error < TOL);
}

#[test]
fn normal_form_rejects_maps_with_kernel() {
    let s = common::with_kernel(2, 3);
    let m = BoundaryCondition::maps(s);
    assert!(matches!(m.normal_form(), Err(ConditionError::NotSelfadjoint(_))));
}

#[test]
fn ellipticity_report_flags_violations() {
    let s = common::disk(3);
    assert!(BoundaryCondition::gaps(s.clone(), 0.5).ellipticity_check().passed());
    let dim = s.dim();
    // V₋ containing the λ = 3 line with cut 1.
    let bad_interval = EllipticDecomposition {
        v_minus: s.span_where(|l| l < 0.0 || l == 3.0),
        w_minus: CMat::zeros(dim, 0),
        v_plus: s.span_where(|l| (0.0..3.0).contains(&l)),
        w_plus: CMat::zeros(dim, 0),
        g: CMat::zeros(dim, dim),
        cut: 1.0,
    };
    let b = BoundaryCondition::from_decomposition(s.clone(), bad_interval, ConditionTag::Custom).unwrap();
    let r = b.ellipticity_check();
    assert!(!r.clause("interval").unwrap().pass);
    let overlap = EllipticDecomposition {
        v_minus: s.span_where(|l| l < 0.0),
        w_minus: CMat::zeros(dim, 0),
        v_plus: s.span_where(|l| l >= 0.0),
        w_plus: s.span_where(|l| l == 2.0),
        g: CMat::zeros(dim, dim),
        cut: 0.0,
    };
    let b = BoundaryCondition::from_decomposition(s, overlap, ConditionTag::Custom).unwrap();
    assert!(!b.ellipticity_check().clause("orthogonal").unwrap().pass);
}

#[test]
fn quotient_dims() {
    let s = common::disk(6);
    let a = BoundaryCondition::gaps(s.clone(), -1.5);
    let b = BoundaryCondition::gaps(s.clone(), 2.0);
    assert_eq!(BoundaryCondition::quotient_dim(&a, &b).unwrap(), s.count_in(dbvp_core::Interval::new(-1.5, 2.0)));
    assert_eq!(BoundaryCondition::quotient_dim(&a, &a).unwrap(), 0);
    assert!(matches!(BoundaryCondition::quotient_dim(&b, &a), Err(ConditionError::NotNested(_))));
    let s = common::with_kernel(4, 2);
    let aps = BoundaryCondition::aps(s.clone());
    let big = aps.extended(&s.kernel_basis(), 0.0).unwrap();
    assert_eq!(BoundaryCondition::quotient_dim(&aps, &big).unwrap(), 4);
}

#[test]
fn spectral_offset_of_maps_uses_first_positive_line() {
    let s = common::with_kernel(2, 3);
    let m = BoundaryCondition::maps(s);
    assert_eq!(m.spectral_offset(), (-2, 0.5));
}

#[test]
fn condition_json_round_trip() {
    let s = common::with_kernel(2, 2);
    let m = BoundaryCondition::maps(s.clone());
    let back = BoundaryCondition::from_json(s.clone(), &m.to_json()).unwrap();
    assert!(back.distance(&m) < TOL);
    assert_eq!(back.tag(), m.tag());
    let dir = std::env::temp_dir().join("dbvp-core-custom.json");
    std::fs::write(&dir, m.to_json()).unwrap();
    let recipe: BcRecipe = format!("custom:file={}", dir.display()).parse().unwrap();
    let again = BoundaryCondition::build(s, &recipe).unwrap();
    assert!(again.distance(&m) < TOL);
}

#[test]
fn odd_kernel_has_no_lagrangian() {
    let s = common::disk(3);
    assert!(matches!(lagrangian(&s), Err(ConditionError::KernelSplit(1))));
    let _ = Arc::clone(&s);
}
