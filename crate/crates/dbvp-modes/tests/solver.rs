mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::*;
use dbvp_core::linalg::{c, CMat};
use dbvp_core::{BoundaryCondition, BoundarySpectrum, ConditionTag, EigenLine};
use dbvp_modes::geometry::Geometry;
use dbvp_modes::grid::Grid;
use dbvp_modes::solver::{assemble, eigenvalues, family_kernels, kernel_dim, ConditionView};
use dbvp_modes::{spectrum, SolverError, SolverOptions};

fn kernel_only_cylinder(length: f64) -> Geometry {
    let lines = vec![EigenLine { id: 0, lambda: 0.0, mult: 2, component: 0 }];
    let fiber = Arc::new(BoundarySpectrum::with_standard_sigma(lines).unwrap());
    Geometry::cylinder(length, fiber, 1.0)
}

/// `χ` on the doubled kernel: `diag(1, −1)` at `t = 0`, `far` at `t = L`.
fn end_chirality(spec: &BoundarySpectrum, far: [f64; 2]) -> CMat {
    let mut chi = CMat::zeros(4, 4);
    let owner = spec.coord_components();
    let comps = spec.components();
    let mut seen = [0usize; 2];
    for (x, o) in owner.iter().enumerate() {
        let side = if *o == comps[0] { 0 } else { 1 };
        let v = if side == 0 { [1.0, -1.0][seen[0]] } else { far[seen[1]] };
        seen[side] += 1;
        chi[(x, x)] = c(v, 0.0);
    }
    chi
}

fn kernel_mode_case(far: [f64; 2], oracle_far: FarEnd) {
    let l = 2.0;
    let g = kernel_only_cylinder(l);
    let fam = g.reduce_to_modes().unwrap();
    let spec = fam.spec.clone().unwrap();
    let chi = end_chirality(&spec, far);
    let b = BoundaryCondition::chirality_with(spec, &chi, false, ConditionTag::Custom).unwrap();
    let s = spectrum(&fam, &b, 6.0, &SolverOptions::default()).unwrap();
    let ours: Vec<f64> = s.eigenvalues.iter().map(|e| e.value).collect();
    let oracle = kernel_mode_oracle(l, 200, oracle_far, 6.0);
    assert_eq!(ours.len(), oracle.len(), "{ours:?} vs {oracle:?}");
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn kernel_mode_with_matching_ends_matches_staggered_oracle() {
    kernel_mode_case([1.0, -1.0], FarEnd::Second);
}

#[test]
fn kernel_mode_with_opposite_ends_matches_staggered_oracle() {
    kernel_mode_case([-1.0, 1.0], FarEnd::First);
}

#[test]
fn cap_aps_eigenvalues_match_frozen_polar_oracle() {
    // lowest positive eigenvalues from the 2D polar oracle at N = 25, |k| < 4
    let frozen = [(PI / 2.0, 1.59361097), (PI / 3.0, 2.33496370), (PI / 4.0, 3.09005235)];
    for (r, want) in frozen {
        let g = Geometry::cap(2, r, 5.0);
        let fam = g.reduce_to_modes().unwrap();
        let b = BoundaryCondition::aps(fam.spec.clone().unwrap());
        let s = spectrum(&fam, &b, 4.0, &SolverOptions::default()).unwrap();
        let low = s.eigenvalues.iter().map(|e| e.value).filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        assert!((low - want).abs() < 1e-7, "r = {r}: {low}");
        // symmetric under the reflection of the spectrum
        assert!(s.contains(-want, 1e-7));
    }
}

#[test]
fn hemisphere_maps_spectrum_is_integral() {
    let g = Geometry::cap(2, PI / 2.0, 5.0);
    let fam = g.reduce_to_modes().unwrap();
    let b = BoundaryCondition::maps(fam.spec.clone().unwrap());
    let s = spectrum(&fam, &b, 3.5, &SolverOptions::default()).unwrap();
    for v in [1.0, 2.0, 3.0] {
        assert!(s.contains(v, 1e-9), "{v} missing");
    }
    // the other Killing family does not satisfy mAPS
    assert!(!s.contains(-1.0, 1e-3));
    assert!(s.residuals["refinement_change"] < 1e-10);
    assert!(s.residuals["hermitian_defect"] < 1e-10);
}

#[test]
fn disk_aps_has_trivial_kernel() {
    let g = Geometry::disk(6.0);
    let fam = g.reduce_to_modes().unwrap();
    let b = BoundaryCondition::aps(fam.spec.clone().unwrap());
    let ks = family_kernels(&fam, &ConditionView::new(&b), &SolverOptions::default()).unwrap();
    assert!(ks.iter().all(|(_, k)| k.dim == 0 && k.warning.is_none()));
}

#[test]
fn kernel_dims_report_a_clear_rank_gap() {
    let g = Geometry::disk(4.0);
    let fam = g.reduce_to_modes().unwrap();
    let b = BoundaryCondition::gaps(fam.spec.clone().unwrap(), 3.0);
    let grid = Grid::new(64, fam.t_max).unwrap();
    for p in &fam.problems {
        let am = assemble(p, &grid, &b).unwrap();
        let k = kernel_dim(&am, 1e-8).unwrap();
        if k.dim > 0 {
            assert!(k.largest_dropped.unwrap() < 1e-12);
        }
        if let Some(s) = k.smallest_kept {
            assert!(s > 1e-2);
        }
    }
}

#[test]
fn eigenvalues_refuse_non_selfadjoint_conditions() {
    let g = cylinder(2);
    let fam = g.reduce_to_modes().unwrap();
    let b = BoundaryCondition::aps(fam.spec.clone().unwrap());
    match spectrum(&fam, &b, 3.0, &SolverOptions::default()) {
        Err(SolverError::NotSelfadjoint { .. }) => {}
        other => panic!("expected NotSelfadjoint, got {other:?}"),
    }
    let grid = Grid::new(32, fam.t_max).unwrap();
    let kernel_mode = fam.problems.iter().find(|p| p.line_ids.len() == 2 && p.comps() == 4);
    if let Some(p) = kernel_mode {
        let am = assemble(p, &grid, &b).unwrap();
        assert!(matches!(eigenvalues(&am), Err(SolverError::NotSelfadjoint { .. })));
    }
}

#[test]
fn coarse_grids_are_rejected() {
    assert!(Grid::new(4, 1.0).is_err());
}
