//! End-to-end acceptance suite for the mode-converter toolkit.
//!
//! Each test checks one observable contract of the design/verify pipeline
//! at its stated tolerance and prints exactly one summary line, so a full
//! run reads as a checklist. Heavy artifacts (auxiliary constants, tuned
//! converter solves) are shared through `OnceLock` caches; with the serial
//! test runner every artifact is computed once.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;

use modeconv::constants::{
    energy_identity_residual, greens_constant, junction_constant, predicted_far_field,
    AsymptoticConstants, ConstantsParams, GreensParams,
};
use modeconv::design::{predicted_half_matrix, DesignSpec};
use modeconv::geometry::{Bend, LigamentSpec, WaveguideGeometry};
use modeconv::mesh::{build_halfplane_strip_mesh, build_source_channel_mesh, MeshParams};
use modeconv::modes::{extract_coefficients, Direction, ModeBasis, Side};
use modeconv::optimize::{
    compare_to_prediction, evaluate_point, refine, sweep, RangeSpec, SweepConfig, Targets,
};
use modeconv::scattering::{
    solve_full, solve_half, solve_half_pair, verify_decomposition, matrix_inf_norm,
    FullScattering, HalfScattering, SymmetryBc,
};

const OMEGA: f64 = 1.5 * std::f64::consts::PI;
const N_TERMS: usize = 15;

/// Converter discretization used by the scattering criteria.
const CONV_H: f64 = 0.05;
const CONV_TRUNCATION: f64 = 1.25;

fn conv_mesh() -> MeshParams {
    MeshParams {
        h: CONV_H,
        junction_levels: 4,
        tube_layers: 4,
        ..MeshParams::default()
    }
}

fn report(id: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[{id}] {verdict}: {detail}");
    assert!(pass, "[{id}] {detail}");
}

/// Auxiliary constants at the designed attachment ordinates, shared by the
/// design-dependent criteria.
fn constants() -> &'static AsymptoticConstants {
    static CELL: OnceLock<AsymptoticConstants> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = ConstantsParams::default();
        let (y_minus, y_plus) = modeconv::design::attachment_ordinates(OMEGA).unwrap();
        AsymptoticConstants {
            junction: junction_constant(params.junction_doublings, params.junction_h).unwrap(),
            gamma_minus: greens_constant(OMEGA, y_minus, &params.greens).unwrap(),
            gamma_plus: greens_constant(OMEGA, y_plus, &params.greens).unwrap(),
        }
    })
}

fn design(epsilon: f64) -> DesignSpec {
    DesignSpec::new(OMEGA, epsilon, 1, 2, constants().design_constants()).unwrap()
}

/// Straight-duct reference solve on the fine mesh, with its wall time.
fn duct_fine() -> &'static (FullScattering, f64) {
    static CELL: OnceLock<(FullScattering, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let geom = WaveguideGeometry::straight_duct(1.0).unwrap();
        let params = MeshParams {
            h: 0.02,
            ..MeshParams::default()
        };
        let start = Instant::now();
        let run = solve_full(&geom, &params, OMEGA, N_TERMS, false).unwrap();
        (run, start.elapsed().as_secs_f64())
    })
}

/// Recipe lengths polished by golden-section descent on the half-problem
/// cost. The corrected lengths are leading-order accurate, which leaves a
/// few-percent residual detuning relative to the razor-thin resonance
/// (halfwidth `2 eps / omega` in length); the polish walks the last
/// fraction of a linewidth onto the peak. Returns the geometry and the
/// polished lengths.
fn polished_geometry(spec: &DesignSpec) -> (WaveguideGeometry, f64, f64) {
    let cfg = SweepConfig {
        omega: OMEGA,
        epsilon: spec.epsilon,
        y_minus: spec.y_minus,
        y_plus: spec.y_plus,
        range_minus: RangeSpec::around(spec.ell_minus_eps, 0.4 * spec.epsilon, 2),
        range_plus: RangeSpec::around(spec.ell_plus_eps, 0.4 * spec.epsilon, 2),
        mesh: conv_mesh(),
        truncation: CONV_TRUNCATION,
        n_terms: N_TERMS,
        targets: Targets::Antidiagonal,
        refine: false,
    };
    let seed = evaluate_point(&cfg, spec.ell_minus_eps, spec.ell_plus_eps).unwrap();
    let polished = refine(&cfg, &seed, 0.4 * spec.epsilon, 0.4 * spec.epsilon).unwrap();
    let (minus, plus) = spec.ligaments_with_lengths(polished.ell_minus, polished.ell_plus);
    let geom = WaveguideGeometry::with_ligaments(minus, plus, CONV_TRUNCATION).unwrap();
    (geom, polished.ell_minus, polished.ell_plus)
}

/// Tuned converter at `eps = 0.01`: full solve plus the half-problem pair
/// on the same discretization, at polished lengths.
fn tuned_001() -> &'static (DesignSpec, FullScattering, HalfScattering, HalfScattering) {
    static CELL: OnceLock<(DesignSpec, FullScattering, HalfScattering, HalfScattering)> =
        OnceLock::new();
    CELL.get_or_init(|| {
        let spec = design(0.01);
        let (geom, _, _) = polished_geometry(&spec);
        let full = solve_full(&geom, &conv_mesh(), OMEGA, N_TERMS, false).unwrap();
        let (rn, rd) = solve_half_pair(&geom, &conv_mesh(), OMEGA, N_TERMS).unwrap();
        (spec, full, rn, rd)
    })
}

/// Tuned converter at `eps = 0.02`, for the amplitude scaling law.
fn tuned_002() -> &'static FullScattering {
    static CELL: OnceLock<FullScattering> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = design(0.02);
        let (geom, _, _) = polished_geometry(&spec);
        solve_full(&geom, &conv_mesh(), OMEGA, N_TERMS, false).unwrap()
    })
}

/// Detuned converter at `eps = 0.01`: ligaments built at the critical
/// lengths plus 0.02, i.e. near-resonant but without the width correction
/// or any tuning, which parks the device far off resonance.
fn detuned_001() -> &'static (FullScattering, f64) {
    static CELL: OnceLock<(FullScattering, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = design(0.01);
        let (minus, plus) =
            spec.ligaments_with_lengths(spec.ell_minus + 0.02, spec.ell_plus + 0.02);
        let geom = WaveguideGeometry::with_ligaments(minus, plus, CONV_TRUNCATION).unwrap();
        let start = Instant::now();
        let run = solve_full(&geom, &conv_mesh(), OMEGA, N_TERMS, false).unwrap();
        (run, start.elapsed().as_secs_f64())
    })
}

/// Tuned converter at `eps = 0.1`, polished and solved, with wall time.
fn tuned_01() -> &'static (FullScattering, f64) {
    static CELL: OnceLock<(FullScattering, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = design(0.1);
        let start = Instant::now();
        let (geom, _, _) = polished_geometry(&spec);
        let run = solve_full(&geom, &conv_mesh(), OMEGA, N_TERMS, false).unwrap();
        (run, start.elapsed().as_secs_f64())
    })
}

#[test]
fn a01_straight_duct_transparency() {
    let (run, seconds) = duct_fine();
    let r_norm = matrix_inf_norm(&run.reflection);
    let t11 = (run.transmission[0][0] - 1.0).norm();
    let t22 = (run.transmission[1][1] - 1.0).norm();
    let pass = r_norm <= 1e-4 && t11 <= 1e-4 && t22 <= 1e-4 && *seconds <= 10.0;
    report(
        "a01 straight-duct transparency",
        pass,
        &format!(
            "||R|| = {r_norm:.2e}, |t11-1| = {t11:.2e}, |t22-1| = {t22:.2e} \
             (tol 1e-4), {seconds:.1}s (limit 10s)"
        ),
    );
}

#[test]
fn a02_energy_conservation() {
    let mut worst: (f64, String) = (0.0, String::from("none"));
    let mut track = |label: &str, defects: &[f64]| {
        for (i, d) in defects.iter().enumerate() {
            if *d > worst.0 {
                worst = (*d, format!("{label}, incident mode {}", i + 1));
            }
        }
    };
    track("duct full", &duct_fine().0.energy_defect);
    let (_, full, rn, rd) = tuned_001();
    track("tuned eps=0.01 full", &full.energy_defect);
    track("tuned eps=0.01 half N", &rn.energy_defect);
    track("tuned eps=0.01 half D", &rd.energy_defect);
    track("detuned eps=0.01 full", &detuned_001().0.energy_defect);
    track("tuned eps=0.02 full", &tuned_002().energy_defect);
    track("tuned eps=0.1 full", &tuned_01().0.energy_defect);
    let pass = worst.0 <= 1e-3;
    report(
        "a02 energy conservation",
        pass,
        &format!(
            "worst row-sum defect {:.2e} ({}) across full and half solves (tol 1e-3)",
            worst.0, worst.1
        ),
    );
}

#[test]
fn a03_mirror_decomposition() {
    let (_, full, rn, rd) = tuned_001();
    let rep = verify_decomposition(full, rn, rd).unwrap();
    let pass = rep.residual_reflection <= 1e-3 && rep.residual_transmission <= 1e-3;
    report(
        "a03 mirror decomposition identity",
        pass,
        &format!(
            "||R - (RN+RD)/2|| = {:.2e}, ||T - (RN-RD)/2|| = {:.2e} (tol 1e-3)",
            rep.residual_reflection, rep.residual_transmission
        ),
    );
}

#[test]
fn a04_detuned_near_total_reflection() {
    let (run, seconds) = detuned_001();
    let r11 = run.reflection[0][0].norm();
    let t_max = matrix_inf_norm(&run.transmission);
    let reference = Complex64::new(0.98, -0.09).norm();
    let pass = (0.93..=1.0).contains(&r11)
        && t_max <= 0.2
        && (r11 - reference).abs() <= 0.05
        && *seconds <= 60.0;
    report(
        "a04 detuned near-total reflection",
        pass,
        &format!(
            "|r11| = {r11:.4} (want [0.93, 1.0], within 0.05 of {reference:.4}), \
             max |t| = {t_max:.3} (tol 0.2), {seconds:.1}s (limit 60s)"
        ),
    );
}

#[test]
fn a05_tuned_conversion_001() {
    let (_, full, _, _) = tuned_001();
    let r_norm = matrix_inf_norm(&full.reflection);
    let t12 = (full.transmission[0][1] - 1.0).norm();
    let t21 = (full.transmission[1][0] - 1.0).norm();
    let t11 = full.transmission[0][0].norm();
    let t22 = full.transmission[1][1].norm();
    let pass = r_norm <= 0.02 && t12 <= 0.02 && t21 <= 0.02 && t11 <= 0.02 && t22 <= 0.02;
    report(
        "a05 tuned conversion eps=0.01",
        pass,
        &format!(
            "||R|| = {r_norm:.2e}, |t12-1| = {t12:.2e}, |t21-1| = {t21:.2e}, \
             |t11| = {t11:.2e}, |t22| = {t22:.2e} (tol 0.02)"
        ),
    );
}

#[test]
fn a06_tuned_conversion_01() {
    let (run, seconds) = tuned_01();
    let t12 = run.transmission[0][1].norm();
    let r_norm = matrix_inf_norm(&run.reflection);
    let pass = t12 >= 0.99 && r_norm <= 0.07 && *seconds <= 120.0;
    report(
        "a06 tuned conversion eps=0.1",
        pass,
        &format!(
            "|t12| = {t12:.4} (want >= 0.99), ||R|| = {r_norm:.3} (tol 0.07), \
             {seconds:.1}s (limit 120s)"
        ),
    );
}

#[test]
fn a07_resonant_amplitude_scaling() {
    let (_, full, _, _) = tuned_001();
    let fine = &full.field_summaries[0];
    let im_001 = fine.minus_max_im;
    let re_001 = fine.minus_max_re;
    let coarse = &tuned_002().field_summaries[0];
    let im_002 = coarse.minus_max_im;
    let ratio = im_002 / im_001;
    let pass = (15.0..=32.0).contains(&im_001)
        && (0.4..=1.2).contains(&re_001)
        && (ratio - 0.5).abs() <= 0.3 * 0.5;
    report(
        "a07 resonant amplitude scaling",
        pass,
        &format!(
            "max |Im u1| = {im_001:.1} (want [15, 32]), max |Re u1| = {re_001:.2} \
             (want [0.4, 1.2]), eps-doubling ratio {ratio:.3} (want 0.5 +- 30%)"
        ),
    );
}

#[test]
fn a08_green_constant_identities() {
    let params = GreensParams::default();
    let mut worst_energy = 0.0f64;
    let mut worst_far = 0.0f64;
    for k in 1..=9 {
        let y = 0.1 * k as f64;
        let gc = greens_constant(OMEGA, y, &params).unwrap();
        worst_energy = worst_energy.max(energy_identity_residual(&gc));
        let predicted = predicted_far_field(OMEGA, y).unwrap();
        for (have, want) in gc.far_field.iter().zip(predicted.iter()) {
            worst_far = worst_far.max((have - want).norm());
        }
    }
    let pass = worst_energy <= 1e-2 && worst_far <= 1e-2;
    report(
        "a08 wall Green's function identities",
        pass,
        &format!(
            "max |Im(omega Gamma) - (1+K)| = {worst_energy:.2e}, \
             max far-field defect = {worst_far:.2e} over 9 ordinates (tol 1e-2)"
        ),
    );
}

#[test]
fn a09_junction_constant_stability() {
    let jc = &constants().junction;
    let pass = jc.estimated_error < 1e-3 && jc.value.is_finite();
    report(
        "a09 junction constant stability",
        pass,
        &format!(
            "C = {:.6} (real by construction), doubling the domain moves the \
             extrapolated value by {:.2e} (tol 1e-3)",
            jc.value, jc.estimated_error
        ),
    );
}

#[test]
fn a10_sweep_matches_length_correction() {
    let spec = design(0.01);
    let eps = 0.01;
    let start = Instant::now();
    let cfg = SweepConfig {
        omega: OMEGA,
        epsilon: eps,
        y_minus: spec.y_minus,
        y_plus: spec.y_plus,
        range_minus: RangeSpec::around(spec.ell_minus_eps, 5.0 * eps, 13),
        range_plus: RangeSpec::around(spec.ell_plus_eps, 5.0 * eps, 13),
        mesh: MeshParams {
            h: 0.07,
            ..MeshParams::default()
        },
        truncation: 1.0,
        n_terms: 12,
        targets: Targets::Antidiagonal,
        refine: true,
    };
    let outcome = sweep(&cfg).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let optimum = outcome.optimum();
    let deficit = compare_to_prediction(optimum, &spec);
    let feasible = optimum.ell_minus < spec.ell_minus && optimum.ell_plus < spec.ell_plus;
    let ratios_ok = (0.75..=1.25).contains(&deficit.ratio_minus)
        && (0.75..=1.25).contains(&deficit.ratio_plus);
    let pass = outcome.failures.is_empty() && feasible && ratios_ok && seconds <= 1800.0;
    report(
        "a10 sweep optimum matches correction",
        pass,
        &format!(
            "argmin ({:.5}, {:.5}) below critical ({}, {:.5}); deficit ratios \
             {:.3} / {:.3} (want [0.75, 1.25]); {} failures; {seconds:.0}s (limit 1800s)",
            optimum.ell_minus,
            optimum.ell_plus,
            spec.ell_minus,
            spec.ell_plus,
            deficit.ratio_minus,
            deficit.ratio_plus,
            outcome.failures.len()
        ),
    );
}

#[test]
fn a11_single_ligament_reflection() {
    let eps = 0.01;
    let k = constants().design_constants();

    // Tuned single ligament at a generic ordinate: the closed-form row
    // (r11, r12) of the resonant half-problem matrix.
    let y = 0.25;
    let gamma = greens_constant(OMEGA, y, &GreensParams::default()).unwrap();
    let ell = modeconv::design::resonance_lengths(OMEGA, 1, 1).unwrap().0;
    let ell_eps = ell - modeconv::design::length_correction(eps, k.c_xi, gamma.gamma.re);
    let spec = LigamentSpec {
        y_attach: y,
        length: ell_eps,
        width: eps,
        bend: Bend::Up,
    };
    let geom = WaveguideGeometry::single_ligament(spec, CONV_TRUNCATION).unwrap();
    let run = solve_half(&geom, &conv_mesh(), OMEGA, N_TERMS, SymmetryBc::Neumann).unwrap();
    let predicted = predicted_half_matrix(OMEGA, y).unwrap();
    let d11 = (run.reflection[0][0] - predicted[0][0]).norm();
    let d12 = (run.reflection[0][1] - predicted[0][1]).norm();

    // Midline attachment: the second mode has a node there, the resonance
    // is not excited, and mode 2 reflects as if from a plain wall.
    let y_mid = 0.5;
    let gamma_mid = greens_constant(OMEGA, y_mid, &GreensParams::default()).unwrap();
    let ell_mid =
        ell - modeconv::design::length_correction(eps, k.c_xi, gamma_mid.gamma.re);
    let spec_mid = LigamentSpec {
        y_attach: y_mid,
        length: ell_mid,
        width: eps,
        bend: Bend::Up,
    };
    let geom_mid = WaveguideGeometry::single_ligament(spec_mid, CONV_TRUNCATION).unwrap();
    let run_mid =
        solve_half(&geom_mid, &conv_mesh(), OMEGA, N_TERMS, SymmetryBc::Neumann).unwrap();
    let r21 = run_mid.reflection[1][0].norm();
    let r22 = (run_mid.reflection[1][1] - 1.0).norm();

    let pass = d11 <= 0.1 && d12 <= 0.1 && r21 <= 0.1 && r22 <= 0.1;
    report(
        "a11 single-ligament closed form",
        pass,
        &format!(
            "y=0.25: |r11 - pred| = {d11:.3}, |r12 - pred| = {d12:.3}; \
             y=0.5: |r21| = {r21:.3}, |r22 - 1| = {r22:.3} (tol 0.1)"
        ),
    );
}

#[test]
fn a12_property_battery() {
    // Mode round-trip extraction.
    let basis = ModeBasis::new(OMEGA, 4).unwrap();
    let r = [Complex64::new(0.3, -0.7), Complex64::new(-0.2, 0.45)];
    let trace = |y: f64| {
        let mut u = basis.mode_trace(1, Direction::Forward, -0.75, y).unwrap();
        for (j, rj) in r.iter().enumerate() {
            u += rj * basis.mode_trace(j + 1, Direction::Backward, -0.75, y).unwrap();
        }
        u
    };
    let coeffs = extract_coefficients(&basis, &trace, -1.25, Side::Left, Some(1), 0.5).unwrap();
    let round_trip = (0..2)
        .map(|j| (coeffs.values[j] - r[j]).norm())
        .fold(0.0, f64::max);

    // Mesh conformity across every generator.
    let spec = design(0.01);
    let geoms = [
        WaveguideGeometry::straight_duct(1.0).unwrap(),
        spec.geometry(CONV_TRUNCATION).unwrap(),
    ];
    let mut min_quality = f64::INFINITY;
    for geom in &geoms {
        let mesh = modeconv::mesh::build_full_mesh(geom, &conv_mesh()).unwrap();
        let audit = mesh.audit().unwrap();
        min_quality = min_quality.min(audit.min_quality);
    }
    let audit = build_halfplane_strip_mesh(6.0, 3.0, 0.08)
        .unwrap()
        .audit()
        .unwrap();
    min_quality = min_quality.min(audit.min_quality);
    let audit = build_source_channel_mesh(1.5, 0.3, 0.05, 0.02)
        .unwrap()
        .audit()
        .unwrap();
    min_quality = min_quality.min(audit.min_quality);

    // Radiation-boundary placement independence on the fine duct.
    let duct = WaveguideGeometry::straight_duct(1.0).unwrap();
    let params = MeshParams {
        h: 0.02,
        ..MeshParams::default()
    };
    let near = solve_full(&duct, &params, OMEGA, N_TERMS, false).unwrap();
    let far_geom = WaveguideGeometry::straight_duct(1.5).unwrap();
    let far = solve_full(&far_geom, &params, OMEGA, N_TERMS, false).unwrap();
    let mut placement = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            placement = placement
                .max((near.transmission[i][j] - far.transmission[i][j]).norm())
                .max((near.reflection[i][j] - far.reflection[i][j]).norm());
        }
    }

    // Reciprocity of the flux-normalized scattering coefficients.
    let (_, full, _, _) = tuned_001();
    let reciprocity = (full.transmission[0][1] - full.transmission[1][0])
        .norm()
        .max((full.reflection[0][1] - full.reflection[1][0]).norm());

    let pass = round_trip <= 1e-12
        && min_quality > 0.2
        && placement <= 1e-6
        && reciprocity <= 1e-3;
    report(
        "a12 property battery",
        pass,
        &format!(
            "mode round-trip {round_trip:.1e} (tol 1e-12); min mesh quality \
             {min_quality:.2} (floor 0.2); radiation-boundary placement shift \
             {placement:.1e} (tol 1e-6); reciprocity defect {reciprocity:.1e} (tol 1e-3)"
        ),
    );
}
