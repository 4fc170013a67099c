use std::f64::consts::PI;

use holowave::fields::{HoloField, PhysParams};
use holowave::nonexistence::*;
use holowave::spectral::{ComplexField, CutoffFamily, SpectralGrid, C64};
use holowave::traveling::{
    linear_guess, newton_solve, residual_capillary, CapillaryConvention, Constraint, Formulation, TravelingProblem,
};
use holowave::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cutoffs() -> CutoffFamily {
    CutoffFamily::default()
}

fn decade(lo: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| lo * 10f64.powf(k as f64 / (points - 1) as f64)).collect()
}

fn mode(g: &SpectralGrid, k: i64) -> HoloField {
    HoloField::project(&ComplexField::mode(g, -k, C64::new(1.0, 0.0)))
}

#[test]
fn zero_field_gives_zero_rows_and_no_ratio() {
    let g = SpectralGrid::new(1024, 200.0).unwrap();
    let w = HoloField::zeros(&g);
    let rows = commutator_decay_scan(&w, &[1.0, 2.0], &cutoffs()).unwrap();
    assert!(rows.iter().all(|r| r.norm == 0.0 && r.scaled == 0.0));
    assert!(coifman_meyer_ratio(&w, 1.0, &cutoffs()).is_err());
    let m = multiplier_identity_check(&w, &PhysParams::new(1.0, 0.0, 1.0).unwrap(), 1.0, &cutoffs()).unwrap();
    assert_eq!((m.lhs, m.rhs, m.correction), (0.0, 0.0, 0.0));
    assert!(commutator_decay_scan(&w, &[2.5], &cutoffs()).is_err());
}

#[test]
fn single_mode_commutator_decays() {
    // κ = 1 sits at mode index 512 when L = 1024π.
    let g = SpectralGrid::new(1 << 14, 1024.0 * PI).unwrap();
    let w = mode(&g, 512);
    let rs: Vec<f64> = (0..16).map(|k| 32f64.powf(k as f64 / 15.0)).collect();
    let rows = commutator_decay_scan(&w, &rs, &cutoffs()).unwrap();
    let peak = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    let top = rows.iter().position(|r| r.scaled == peak).unwrap();
    assert!(scaled_is_nonincreasing(&rows[top..], 0.0, 0.0));
    assert!(rows.last().unwrap().scaled < 1e-3 * peak);
}

#[test]
fn high_frequencies_decay_faster() {
    let g = SpectralGrid::new(8192, 2000.0).unwrap();
    let rs = decade(2.0, 6);
    // κ ≈ 0.1 against κ ≈ 6.4 (64 times larger).
    let low = commutator_decay_scan(&mode(&g, 32), &rs, &cutoffs()).unwrap();
    let high = commutator_decay_scan(&mode(&g, 2048), &rs, &cutoffs()).unwrap();
    for k in 1..rs.len() {
        let lo = low[k].scaled / low[0].scaled;
        let hi = high[k].scaled / high[0].scaled;
        assert!(
            hi < lo || high[k].norm < 1e-9 * high[0].norm.max(1e-300),
            "r = {}: {hi} vs {lo}",
            rs[k]
        );
    }
}

#[test]
fn lorentzian_family_scans_are_monotone_and_localized_at_the_rise() {
    let g = SpectralGrid::new(1 << 18, 20000.0).unwrap();
    let rs = decade(20.0, 11);
    for s in [0.5, 1.0, 2.0] {
        let w = lorentzian(&g, s);
        let rows = commutator_decay_scan(&w, &rs, &cutoffs()).unwrap();
        assert!(scaled_is_nonincreasing(&rows, 0.05, 1e-9), "s = {s}");
        assert!(rows.iter().all(|r| r.fall_sq < 1e-2 * r.rise_sq));
        for r in [20.0, 80.0, 200.0] {
            let full = commutator_decay_scan(&w, &[r], &cutoffs()).unwrap()[0].scaled;
            let hp = commutator_decay_scan(&high_pass(&w, 64.0 / r), &[r], &cutoffs()).unwrap()[0].scaled;
            assert!(hp <= 1e-3 * full, "s = {s}, r = {r}");
        }
    }
    let csv = commutator_csv(&commutator_decay_scan(&lorentzian(&g, 1.0), &rs, &cutoffs()).unwrap());
    assert!(csv.starts_with("r,norm,scaled,rise_sq,fall_sq\n"));
    assert_eq!(csv.lines().count(), 12);
}

/// Ensemble maximum 0.01565 from a pre-scan of the seeded ensemble below, rounded up.
const CM_CONSTANT: f64 = 0.02;

#[test]
fn coifman_meyer_ratio_is_bounded_and_translation_invariant() {
    let g = SpectralGrid::new(4096, 200.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let r = g.period() / 200.0;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let w = HoloField::random(&g, &mut rng, 64, 0.3);
        let ratio = coifman_meyer_ratio(&w, r, &cutoffs()).unwrap();
        assert!(ratio.is_finite());
        worst = worst.max(ratio);
        // The cutoff turns into 1 - χ_r under a half-period shift.
        let shifted = HoloField::project(&w.field().translate(g.period() / 2.0));
        let again = coifman_meyer_ratio(&shifted, r, &cutoffs()).unwrap();
        assert!((again - ratio).abs() < 1e-10 * ratio.max(1.0));
    }
    assert!(worst <= CM_CONSTANT, "{worst}");
}

fn band_limited_random(g: &SpectralGrid, rng: &mut ChaCha8Rng) -> HoloField {
    HoloField::random(g, rng, g.n() / 8, 0.3)
}

#[test]
fn multiplier_identity_holds_with_residual_correction() {
    let g = SpectralGrid::new(512, 50.0).unwrap();
    let p = PhysParams::new(1.0, 0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let w = band_limited_random(&g, &mut rng);
        for r in [g.period() / 50.0, g.period() / 20.0, g.period() / 10.0] {
            let m = multiplier_identity_check(&w, &p, r, &cutoffs()).unwrap();
            assert!(m.defect < 1e-9 * (m.lhs.abs() + m.rhs.abs() + 1.0), "{m:?}");
        }
    }
}

#[test]
fn multiplier_terms_are_quadratic_up_to_the_residual() {
    let g = SpectralGrid::new(512, 50.0).unwrap();
    let p = PhysParams::new(1.0, 0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = band_limited_random(&g, &mut rng).scale(0.01);
    let r = g.period() / 50.0;
    let a = multiplier_identity_check(&w, &p, r, &cutoffs()).unwrap();
    let b = multiplier_identity_check(&w.scale(10.0), &p, r, &cutoffs()).unwrap();
    assert!((b.lhs - 100.0 * a.lhs).abs() < 1e-12 * b.lhs.abs().max(1e-300));
    let (sa, sb) = (a.rhs + a.correction, b.rhs + b.correction);
    assert!((sb - 100.0 * sa).abs() < 1e-9 * sb.abs().max(1e-300));
}

#[test]
fn capillary_log_form_vanishes_at_rest_and_on_the_dispersion_curve() {
    let g = SpectralGrid::new(256, 2.0 * PI).unwrap();
    let zero = HoloField::zeros(&g);
    let p = PhysParams::new(0.0, 1.0, 1.3).unwrap();
    assert_eq!(
        capillary_log_residual(&zero, &p, CapillaryConvention::Canonical)
            .unwrap()
            .sup_norm(),
        0.0
    );
    assert!(capillary_log_residual(
        &zero,
        &PhysParams::new(1.0, 1.0, 1.0).unwrap(),
        CapillaryConvention::Canonical
    )
    .is_err());
    // 1 + 𝐖 = exp(ε e^{-ikα}) gives U = ε cos kα exactly.
    let k = 3i64;
    for eps in [1e-3, 2e-3] {
        let t = ComplexField::mode(&g, -k, C64::new(eps, 0.0));
        let bw = HoloField::project(&ComplexField::new(&g, t.values.iter().map(|z| z.exp() - 1.0).collect()).unwrap());
        let on = PhysParams::new(0.0, 1.0, (k as f64).sqrt()).unwrap();
        let off = PhysParams::new(0.0, 1.0, 1.0).unwrap();
        let r_on = capillary_log_residual(&bw, &on, CapillaryConvention::Canonical)
            .unwrap()
            .sup_norm();
        let r_off = capillary_log_residual(&bw, &off, CapillaryConvention::Canonical)
            .unwrap()
            .sup_norm();
        assert!(r_on < 10.0 * eps * eps * eps, "{r_on}");
        assert!((r_off - 2.0 * eps).abs() < 1e-2 * eps, "{r_off}");
        let half = PhysParams::new(0.0, 1.0, (k as f64 / 2.0).sqrt()).unwrap();
        assert!(
            capillary_log_residual(&bw, &half, CapillaryConvention::Paper)
                .unwrap()
                .sup_norm()
                < 10.0 * eps * eps * eps
        );
    }
}

#[test]
fn capillary_log_form_agrees_with_the_multiplied_equation() {
    let g = SpectralGrid::new(256, 2.0 * PI).unwrap();
    for conv in [CapillaryConvention::Canonical, CapillaryConvention::Paper] {
        let p = PhysParams::new(0.0, 1.0, 0.0).unwrap();
        let prob = TravelingProblem::new(g.clone(), p, Formulation::BabenkoCapillary, Constraint::FixedAmplitude(0.05))
            .unwrap()
            .with_harmonic(2)
            .unwrap()
            .with_convention(conv);
        let rep = newton_solve(&prob, &linear_guess(&prob, 0.05)).unwrap();
        let solved = PhysParams::new(0.0, 1.0, rep.c).unwrap();
        let bw = rep.w.derivative();
        let log = capillary_log_residual(&bw, &solved, conv).unwrap().sup_norm();
        let direct = residual_capillary(&bw, &solved, conv).unwrap().sup_norm();
        assert!(log < 1e-9 && direct < 1e-9, "{log} {direct}");
        // Off the solution both forms are visibly nonzero.
        let off = PhysParams::new(0.0, 1.0, 1.1 * rep.c).unwrap();
        assert!(capillary_log_residual(&bw, &off, conv).unwrap().sup_norm() > 1e-3);
        assert!(residual_capillary(&bw, &off, conv).unwrap().sup_norm() > 1e-3);
    }
}

#[test]
fn static_capillary_problem_has_only_the_flat_solution() {
    let cfg = SweepConfig {
        speeds: vec![0.0],
        ..SweepConfig::default_for(SweepMode::Capillary)
    };
    let recs = solitary_sweep(&cfg);
    assert!(recs.iter().all(|r| r.outcome == Outcome::ConvergedToZero), "{recs:?}");
}

#[test]
fn gravity_and_capillary_sweeps_find_no_localized_waves() {
    for mode in [SweepMode::Gravity, SweepMode::Capillary] {
        let recs = solitary_sweep(&SweepConfig::default_for(mode));
        assert_eq!(recs.len(), 9);
        assert!(recs.iter().all(|r| r.outcome != Outcome::ConvergedNontrivial), "{recs:?}");
    }
}

#[test]
fn gravity_capillary_control_finds_a_wavepacket() {
    let recs = solitary_sweep(&SweepConfig::default_for(SweepMode::GravityCapillary));
    let best = recs
        .iter()
        .filter(|r| r.outcome == Outcome::ConvergedNontrivial)
        .map(|r| r.residual)
        .fold(f64::INFINITY, f64::min);
    assert!(best < 1e-10, "{recs:?}");
}

#[test]
fn sweeps_are_reproducible() {
    let cfg = SweepConfig::default_for(SweepMode::GravityCapillary);
    let a = sweep_jsonl(&solitary_sweep(&cfg));
    let b = sweep_jsonl(&solitary_sweep(&cfg));
    assert_eq!(a, b);
    assert!(!a.contains("wall_time"));
    let first: serde_json::Value = serde_json::from_str(a.lines().next().unwrap()).unwrap();
    for key in ["mode", "c", "guess_id", "L", "n", "outcome", "residual", "iters"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    assert_eq!("gravity-capillary".parse::<SweepMode>().unwrap(), SweepMode::GravityCapillary);
    assert!(matches!("waves".parse::<SweepMode>(), Err(Error::Config(_))));
}
