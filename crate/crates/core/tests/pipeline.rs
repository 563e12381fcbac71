//! End-to-end use of the public API: solve, audit, archive, verify.

use std::f64::consts::PI;
use std::io::BufReader;

use fheat_core::discretize::{weighted_integral, Field, Grid, GridKind};
use fheat_core::estimates::{
    constants, interior_min, lemma1_residual, lemma2_residual, verify_hamilton, verify_souplet_zhang,
};
use fheat_core::geometry::{comparison_check, CurvatureBounds, ModelSpace};
use fheat_core::logsobolev::{lambda1, log_sobolev_constant, verify_chung_yau, LogSobolevConfig};
use fheat_core::solver::{ode_exact, solve, EvolutionParams};
use fheat_core::LabError;
use proptest::prelude::*;

fn bump(space: &ModelSpace, cells: usize) -> Field {
    let grid = Grid::for_space(space, 6.0, cells).unwrap();
    Field::from_fn(grid, 0.0, |r| 0.6 + 0.9 * (-r * r / 2.0).exp()).unwrap()
}

#[test]
fn every_radial_model_space_runs_through_both_estimates() {
    for (space, k) in [
        (ModelSpace::flat(2).unwrap(), 0.0),
        (ModelSpace::gaussian(3).unwrap(), 0.0),
        (ModelSpace::hyperbolic(2).unwrap(), 1.0),
    ] {
        let params = EvolutionParams::new(0.0, 1.5, None, 0.2, 0.2).unwrap();
        let sol = solve(&space, &bump(&space, 48), &params, 0.02).unwrap();
        let bounds = CurvatureBounds::certify(&space, k, 4.0, 500).unwrap();
        assert!(comparison_check(&space, &bounds, 4.0, 500).unwrap() >= -1e-8);
        let h = verify_hamilton(&sol, &bounds).unwrap();
        let sz = verify_souplet_zhang(&sol, &bounds).unwrap();
        for rep in [&h, &sz] {
            assert!(rep.empirical_cn.is_finite() && rep.empirical_cn > 0.0, "{}", space.describe());
            assert!(rep.argmax.r <= 2.0 + 1e-12);
        }
        let c = constants(space.n, k, 0.0, 1.5, None).unwrap();
        let tol = 10.0 * (sol.grid().spacing + sol.dt);
        for frame in 1..sol.frames.len() - 1 {
            assert!(interior_min(&lemma1_residual(&sol, &c, frame).unwrap()) >= -tol);
            assert!(interior_min(&lemma2_residual(&sol, &c, frame).unwrap()) >= -tol);
        }
    }
}

#[test]
fn archive_round_trips_every_frame() {
    let space = ModelSpace::gaussian(2).unwrap();
    let params = EvolutionParams::new(0.0, 1.5, None, 0.1, 0.1).unwrap();
    let sol = solve(&space, &bump(&space, 32), &params, 0.025).unwrap();
    let dir = tempfile::tempdir().unwrap();
    sol.write_archive(dir.path()).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let frames = manifest["frames"].as_array().unwrap();
    assert_eq!(frames.len(), sol.frames.len());
    assert_eq!(manifest["realized_max"].as_f64().unwrap(), sol.realized_max());
    for (entry, frame) in frames.iter().zip(&sol.frames) {
        let file = std::fs::File::open(dir.path().join(entry["file"].as_str().unwrap())).unwrap();
        let back = Field::from_csv(BufReader::new(file), GridKind::Radial, frame.time).unwrap();
        assert_eq!(back.values, frame.values);
    }
}

#[test]
fn weighted_mass_is_conserved_without_reaction() {
    let space = ModelSpace::gaussian(3).unwrap();
    let grid = Grid::radial(8.0, 96).unwrap();
    let u0 = Field::from_fn(grid, 0.0, |r| 1.0 + 0.5 * (-r * r).exp()).unwrap();
    let params = EvolutionParams::new(0.0, 1.5, None, 0.5, 0.5).unwrap();
    let sol = solve(&space, &u0, &params, 0.01).unwrap();
    let m0 = weighted_integral(&space, &sol.frames[0]).unwrap();
    let m1 = weighted_integral(&space, sol.frames.last().unwrap()).unwrap();
    assert!((m1 - m0).abs() < 1e-3 * m0, "{m0} → {m1}");
}

#[test]
fn flat_circle_spectral_and_log_sobolev_chain() {
    let space = ModelSpace::circle(2.0 * PI).unwrap();
    let spec = lambda1(&space).unwrap();
    assert!((spec.lambda1 - 1.0).abs() < 1e-4);
    let cfg = LogSobolevConfig { cells: 128, starts: 2, iterations: 100, ..Default::default() };
    let lsi = log_sobolev_constant(&space, &cfg).unwrap();
    // the infimum is half the gap, approached from above
    assert!(lsi.s_m >= lsi.spectral.lambda1 / 2.0 - 1e-9);
    assert!(lsi.s_m <= 1.05 * lsi.spectral.lambda1 / 2.0);
    assert!(lsi.min_denominator >= 0.0);
    let cy = verify_chung_yau(&space, &lsi, &lsi.spectral, 1.0).unwrap();
    assert!(cy.all_passed());
}

#[test]
fn negative_reaction_needs_a_lower_bound() {
    assert!(matches!(EvolutionParams::new(-0.5, 1.5, None, 1.0, 1.0), Err(LabError::Parameter(_))));
    let space = ModelSpace::circle(2.0 * PI).unwrap();
    let grid = Grid::for_space(&space, 0.0, 64).unwrap();
    let u0 = Field::from_fn(grid, 0.0, |r| 1.0 + 0.5 * r.sin()).unwrap();
    let params = EvolutionParams::new(-0.5, 1.5, Some(0.5), 0.2, 0.2).unwrap();
    let sol = solve(&space, &u0, &params, 0.02).unwrap();
    assert!(sol.realized_min() >= 0.5 && sol.realized_max() <= 1.5);
    // a too-high δ is caught by the audit
    let tight = EvolutionParams::new(-0.5, 1.5, Some(0.55), 0.2, 0.2).unwrap();
    assert!(matches!(solve(&space, &u0, &tight, 0.02), Err(LabError::BoundAudit(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_data_tracks_the_exact_ode(u0 in 0.05f64..3.0, a in -1.0f64..1.0) {
        let space = ModelSpace::flat(1).unwrap();
        let field = Field::constant(Grid::radial(1.0, 16).unwrap(), u0, 0.0).unwrap();
        let exact = ode_exact(a, u0.ln(), 0.5).unwrap();
        let (lo, hi) = (u0.min(exact), u0.max(exact));
        let params = EvolutionParams::new(a, hi * 1.01, Some(lo * 0.99), 0.5, 0.5).unwrap();
        let sol = solve(&space, &field, &params, 0.005).unwrap();
        for &v in &sol.frames.last().unwrap().values {
            prop_assert!((v - exact).abs() <= 1e-4 * exact);
        }
    }
}
