//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use holowave::conformal::{build_conformal, regularity_transfer_report, ConformalOptions};
use holowave::evolution::{evolve, fit_frequency, max_stable_dt, rk4_step, EvolveSettings, Filter};
use holowave::fields::{HoloField, PhysParams, WaveState};
use holowave::nonexistence::{
    commutator_decay_scan, high_pass, lorentzian, multiplier_identity_check, scaled_is_nonincreasing, solitary_sweep, Outcome,
    SweepConfig, SweepMode,
};
use holowave::spectral::{algebra_defects, ComplexField, CutoffFamily, RealField, SpectralGrid, C64};
use holowave::traveling::{
    continuation_run, linear_guess, newton_solve, residual_bab_g, residual_babenko_gravity, residual_capillary,
    residual_combined, residual_combined_projected, CapillaryConvention, Constraint, ContinuationSettings, Formulation,
    TravelingProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (bool, String);
type Criterion = (&'static str, fn() -> Check);

fn grid(n: usize, l: f64) -> SpectralGrid {
    SpectralGrid::new(n, l).unwrap()
}

fn phys(g: f64, s: f64, c: f64) -> PhysParams {
    PhysParams::new(g, s, c).unwrap()
}

fn sup_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.sub(b).unwrap().sup_norm()
}

/// Grid ℓ² norm, the norm of the Newton tolerance.
fn l2_grid(f: &ComplexField) -> f64 {
    f.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn with_level(w: HoloField, level: f64) -> HoloField {
    let mut f = w.into_field();
    for z in &mut f.values {
        z.im += level;
    }
    HoloField::project(&f)
}

fn spectral_algebra() -> Check {
    let g = grid(1024, 2.0 * PI);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut random = || {
        let c: Vec<C64> = (0..1024)
            .map(|i| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) / (1.0 + g.mode(i).unsigned_abs() as f64))
            .collect();
        ComplexField::from_coefficients(&g, &c)
    };
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (f, h) = (random(), random());
        worst = worst.max(algebra_defects(&f, &h).unwrap().max());
    }
    let t = start.elapsed().as_secs_f64();
    (
        worst < 1e-12 && t < 1.0,
        format!("max relative defect {worst:.2e} over 20 field pairs at n=1024, {t:.3} s"),
    )
}

fn dispersion_recovery() -> Check {
    let g = grid(128, 2.0 * PI);
    let start = Instant::now();
    let (mut worst_c, mut worst_w): (f64, f64) = (0.0, 0.0);
    for (gg, s) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let f = if gg == 0.0 {
            Formulation::BabenkoCapillary
        } else {
            Formulation::Combined
        };
        let p = phys(gg, s, 0.0);
        for k in [1usize, 2, 4, 8] {
            let kf = k as f64;
            let problem = TravelingProblem::new(g.clone(), p, f, Constraint::FixedAmplitude(1e-4))
                .unwrap()
                .with_harmonic(k)
                .unwrap();
            let r = newton_solve(&problem, &linear_guess(&problem, 1e-4)).unwrap();
            let c2 = gg / kf + s * kf;
            worst_c = worst_c.max(if r.converged {
                ((r.c2 - c2) / c2).abs()
            } else {
                f64::INFINITY
            });

            let omega = (gg * kf + s * kf.powi(3)).sqrt();
            let dt = (0.05 / omega).min(0.5 * max_stable_dt(&g, &p));
            let w = HoloField::project(&ComplexField::mode(&g, -(k as i64), C64::new(0.0, 1e-4)));
            let mut st = WaveState::new(w, HoloField::zeros(&g)).unwrap();
            let steps = (4.0 * PI / omega / dt).ceil() as usize;
            let mut signal = Vec::with_capacity(steps);
            for _ in 0..steps {
                signal.push(st.w.field().coefficients()[g.slot(-(k as i64))].im);
                st = rk4_step(&st, &p, dt, Filter::None).unwrap().0;
            }
            let fit = fit_frequency(&signal, dt).unwrap();
            worst_w = worst_w.max(((fit * fit - omega * omega) / (omega * omega)).abs());
        }
    }
    let t = start.elapsed().as_secs_f64();
    (
        worst_c < 1e-6 && worst_w < 1e-5 && t < 60.0,
        format!("max rel err c² {worst_c:.2e}, ω² {worst_w:.2e} over 12 (g, σ, k) cases, {t:.1} s"),
    )
}

fn formulation_equivalence() -> Check {
    let g = grid(256, 2.0 * PI);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut random_defect: f64 = 0.0;
    for i in 0..100 {
        let w = with_level(
            HoloField::random(&g, &mut rng, 1 + i % 40, 0.6),
            0.1 * (i as f64 / 50.0 - 1.0),
        );
        let p = phys(1.0 + i as f64 / 100.0, 0.0, 0.5 + i as f64 / 70.0);
        let d = sup_diff(&residual_babenko_gravity(&w, &p).unwrap(), &residual_bab_g(&w, &p).unwrap());
        random_defect = random_defect.max(d);
    }
    let bg = grid(512, 2.0 * PI);
    let problem = TravelingProblem::new(
        bg,
        phys(1.0, 0.0, 0.0),
        Formulation::Combined,
        Constraint::FixedAmplitude(1e-3),
    )
    .unwrap();
    let branch = continuation_run(&problem, &ContinuationSettings::default()).unwrap();
    let bound = 10.0 * problem.tolerance();
    let mut on_branch: f64 = 0.0;
    for r in &branch.reports {
        let p = phys(1.0, 0.0, r.c);
        for res in [
            residual_babenko_gravity(&r.w, &p).unwrap(),
            residual_bab_g(&r.w, &p).unwrap(),
            residual_combined_projected(&r.w, &p).unwrap(),
        ] {
            on_branch = on_branch.max(l2_grid(&res));
        }
    }
    (
        random_defect < 1e-11 && on_branch < bound && branch.reports.len() > 5,
        format!(
            "random-state defect {random_defect:.2e}; max branch residual {on_branch:.2e} vs 10×tol {bound:.2e} on {} points",
            branch.reports.len()
        ),
    )
}

fn scaling_covariance() -> Check {
    let lam = 2.0;
    let l = 2.0 * PI;
    let (g1, g2) = (grid(256, l), grid(256, l / lam));
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let w = with_level(HoloField::random(&g1, &mut rng, 8, 0.2), 0.03);
    let squeeze =
        |f: &HoloField, s: f64| HoloField::project(&ComplexField::new(&g2, f.values().iter().map(|z| z * s).collect()).unwrap());
    let (gg, c) = (1.7, 0.8);
    let base = residual_combined(&w, &phys(gg, 0.0, c)).unwrap();
    let scaled = residual_combined(&squeeze(&w, 1.0 / lam), &phys(gg, 0.0, c / lam.sqrt())).unwrap();
    let dg = base
        .values
        .iter()
        .zip(&scaled.values)
        .fold(0.0f64, |m, (a, b)| m.max((a / lam - b).abs()));
    let (s, c) = (0.6, 0.9);
    let bw = w.derivative();
    let bw2 = HoloField::project(&ComplexField::new(&g2, bw.values().to_vec()).unwrap());
    let base = residual_capillary(&bw, &phys(0.0, s, c), CapillaryConvention::Canonical).unwrap();
    let scaled = residual_capillary(&bw2, &phys(0.0, s, lam.sqrt() * c), CapillaryConvention::Canonical).unwrap();
    let dc = base
        .values
        .iter()
        .zip(&scaled.values)
        .fold(0.0f64, |m, (a, b)| m.max((a * lam - b).norm()));
    (
        dg < 1e-10 && dc < 1e-10,
        format!("λ=2 defects: gravity {dg:.2e}, capillary {dc:.2e}"),
    )
}

fn conservation() -> Check {
    let g = grid(256, 2.0 * PI);
    let p = phys(1.0, 0.0, 0.0);
    // Small rightward-moving linear mode: Q = cW with c = 1.
    let w = HoloField::project(&ComplexField::mode(&g, -1, C64::new(0.0, 0.01)));
    let s0 = WaveState::new(w.clone(), w).unwrap();
    let t_end = 10.0 * 2.0 * PI;
    let run = |dt: f64| {
        let steps = (t_end / dt).round() as usize;
        let set = EvolveSettings {
            dt: t_end / steps as f64,
            steps,
            sample_every: steps,
            filter: Filter::None,
            ..Default::default()
        };
        let tr = evolve(&s0, &p, &set).unwrap();
        let (a, b) = (&tr.samples[0], &tr.samples[tr.samples.len() - 1]);
        (
            (b.hamiltonian - a.hamiltonian).abs() / a.hamiltonian.abs(),
            (b.momentum - a.momentum).abs() / a.momentum.abs(),
        )
    };
    let (h1, m1) = run(0.02);
    let (h2, m2) = run(0.01);
    let ratio = h1 / h2;
    (
        h1 < 1e-8 && m1 < 1e-8 && h2 < 1e-8 && m2 < 1e-8 && ratio >= 12.0,
        format!("10 periods: |ΔH|/H {h1:.2e} (dt=0.02), {h2:.2e} (dt=0.01), ratio {ratio:.1}; |ΔM|/|M| {m1:.2e}"),
    )
}

fn traveling_propagation() -> Check {
    let g = grid(128, 2.0 * PI);
    let problem = TravelingProblem::new(g, phys(1.0, 0.0, 0.0), Formulation::Combined, Constraint::Steepness(0.05)).unwrap();
    let r = newton_solve(&problem, &linear_guess(&problem, 0.025)).unwrap();
    let s0 = WaveState::new(r.w.clone(), r.q.clone()).unwrap();
    let period = 2.0 * PI / r.c;
    let steps = 400;
    let set = EvolveSettings {
        dt: period / steps as f64,
        steps,
        filter: Filter::None,
        ..Default::default()
    };
    let tr = evolve(&s0, &phys(1.0, 0.0, 0.0), &set).unwrap();
    let e = sup_diff(tr.final_state.w.field(), s0.w.field());
    (
        r.converged && e < 1e-6,
        format!("steepness 0.05, c = {:.6}, sup error after one period {e:.2e}", r.c),
    )
}

fn multiplier_identity() -> Check {
    let g = grid(512, 50.0);
    let p = phys(1.0, 0.0, 1.0);
    let cutoffs = CutoffFamily::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w = HoloField::random(&g, &mut rng, g.n() / 8, 0.3);
        for r in [g.period() / 50.0, g.period() / 20.0, g.period() / 10.0] {
            let m = multiplier_identity_check(&w, &p, r, &cutoffs).unwrap();
            worst = worst.max(m.defect / (m.lhs.abs() + m.rhs.abs() + 1.0));
        }
    }
    (
        worst < 1e-9,
        format!("max relative defect {worst:.2e} over 100 fields × 3 radii (with residual correction)"),
    )
}

fn commutator_decay() -> Check {
    let g = grid(1 << 18, 20000.0);
    let cutoffs = CutoffFamily::default();
    let rs: Vec<f64> = (0..11).map(|k| 20.0 * 10f64.powf(k as f64 / 10.0)).collect();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for s in [0.5, 1.0, 2.0] {
        let w = lorentzian(&g, s);
        let rows = commutator_decay_scan(&w, &rs, &cutoffs).unwrap();
        ok &= scaled_is_nonincreasing(&rows, 0.05, 1e-9);
        for r in [20.0, 80.0, 200.0] {
            let full = commutator_decay_scan(&w, &[r], &cutoffs).unwrap()[0].scaled;
            let hp = commutator_decay_scan(&high_pass(&w, 64.0 / r), &[r], &cutoffs).unwrap()[0].scaled;
            worst_ratio = worst_ratio.max(hp / full);
        }
    }
    (
        ok && worst_ratio <= 1e-3,
        format!("Lorentzian widths 0.5, 1, 2 monotone over r ∈ [20, 200]: {ok}; max high-pass ratio at rλ=64 {worst_ratio:.2e}"),
    )
}

fn crest_bound() -> Check {
    let problem = TravelingProblem::new(
        grid(512, 2.0 * PI),
        phys(1.0, 0.0, 0.0),
        Formulation::Combined,
        Constraint::FixedAmplitude(1e-3),
    )
    .unwrap();
    let branch = continuation_run(&problem, &ContinuationSettings::default()).unwrap();
    let mut margin = f64::INFINITY;
    for r in &branch.reports {
        let h_max = r.w.values().iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
        margin = margin.min(r.c2 / 2.0 + 1e-8 - h_max);
    }
    let fg = grid(64, 2.0 * PI);
    let flat = TravelingProblem::new(fg.clone(), phys(1.0, 0.0, 1.0), Formulation::Combined, Constraint::FixedSpeed).unwrap();
    let h0 = newton_solve(&flat, &HoloField::zeros(&fg)).unwrap().crest.unwrap().h0;
    (
        margin >= 0.0 && h0 == 0.5 && !branch.reports.is_empty(),
        format!(
            "{} branch points, min margin to c²/(2g) {margin:.2e}; h₀ at c=g=1 is {h0}",
            branch.reports.len()
        ),
    )
}

fn nonexistence_sweeps() -> Check {
    let start = Instant::now();
    let count = |mode| {
        let recs = solitary_sweep(&SweepConfig::default_for(mode));
        let found: Vec<f64> = recs
            .iter()
            .filter(|r| r.outcome == Outcome::ConvergedNontrivial && r.localized)
            .map(|r| r.residual)
            .collect();
        (recs.len(), found)
    };
    let (ng, fg) = count(SweepMode::Gravity);
    let (nc, fc) = count(SweepMode::Capillary);
    let (nm, fm) = count(SweepMode::GravityCapillary);
    let best = fm.iter().cloned().fold(f64::INFINITY, f64::min);
    let t = start.elapsed().as_secs_f64();
    (
        fg.is_empty() && fc.is_empty() && best < 1e-10,
        format!(
            "gravity {}/{ng}, capillary {}/{nc} nontrivial localized; gravity–capillary {}/{nm}, best residual {best:.2e}; {t:.1} s",
            fg.len(),
            fc.len(),
            fm.len()
        ),
    )
}

fn conformal_builder() -> Check {
    let g = grid(256, 2.0 * PI);
    let eta = RealField::from_fn(&g, |x| 0.1 * x.cos());
    let b = build_conformal(&|x: f64| 0.1 * x.cos(), &g, &ConformalOptions::default()).unwrap();
    let rep = regularity_transfer_report(&eta, &b.w).unwrap();
    (
        rep.round_trip < 1e-8 && rep.identity_defect < 1e-8,
        format!(
            "round trip {:.2e}; slope identity with factor 1+Re W_α {:.2e} (without the factor: {:.2e})",
            rep.round_trip, rep.identity_defect, rep.literal_identity_defect
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("spectral algebra", spectral_algebra),
        ("dispersion recovery", dispersion_recovery),
        ("formulation equivalence", formulation_equivalence),
        ("scaling covariance", scaling_covariance),
        ("conservation", conservation),
        ("traveling propagation", traveling_propagation),
        ("multiplier identity", multiplier_identity),
        ("commutator decay", commutator_decay),
        ("crest bound", crest_bound),
        ("nonexistence sweeps", nonexistence_sweeps),
        ("conformal builder", conformal_builder),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !ok {
            failures += 1;
        }
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
