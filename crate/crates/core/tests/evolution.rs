use std::f64::consts::PI;

use holowave::evolution::*;
use holowave::fields::{to_diff, HoloField, PhysParams, WaveState};
use holowave::spectral::{ComplexField, SpectralGrid, C64};
use holowave::traveling::{newton_solve, Constraint, Formulation, SolveReport, TravelingProblem};
use holowave::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn phys(g: f64, s: f64) -> PhysParams {
    PhysParams::new(g, s, 0.0).unwrap()
}

fn random_state(g: &SpectralGrid, seed: u64) -> WaveState {
    random_state_with_slope(g, seed, 0.2)
}

fn random_state_with_slope(g: &SpectralGrid, seed: u64, slope: f64) -> WaveState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = HoloField::random(g, &mut rng, 8, slope);
    let q = HoloField::random(g, &mut rng, 8, slope);
    WaveState::new(w, q).unwrap()
}

fn step_state(s: &WaveState, r: &FullRhs, h: f64) -> WaveState {
    let add = |a: &HoloField, b: &HoloField| {
        let v: Vec<C64> = a.values().iter().zip(b.values()).map(|(x, y)| x + h * y).collect();
        HoloField::project(&ComplexField::new(a.grid(), v).unwrap())
    };
    WaveState::new(add(&s.w, &r.w_t), add(&s.q, &r.q_t)).unwrap()
}

fn sup_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.sub(b).unwrap().sup_norm()
}

#[test]
fn differentiated_system_is_the_chain_rule_of_the_full_one() {
    let g = SpectralGrid::new(512, 2.0 * PI).unwrap();
    for (seed, p) in [(1, phys(1.0, 0.0)), (2, phys(1.0, 1.0)), (3, phys(0.0, 1.0))] {
        let s = random_state(&g, seed);
        let full = rhs_full(&s, &p).unwrap();
        assert!(full.leak < 1e-12, "{}", full.leak);
        let d = to_diff(&s, 0.1).unwrap();
        let rhs = rhs_diff(&d, &p).unwrap();
        assert!(rhs.m_defect < 1e-12);
        let h = 1e-5;
        let dp = to_diff(&step_state(&s, &full, h), 0.1).unwrap();
        let dm = to_diff(&step_state(&s, &full, -h), 0.1).unwrap();
        let fd = |a: &HoloField, b: &HoloField| {
            let v = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) / (2.0 * h)).collect();
            ComplexField::new(&g, v).unwrap()
        };
        assert!(sup_diff(&fd(&dp.w, &dm.w), &rhs.w_t) < 1e-8);
        assert!(sup_diff(&fd(&dp.r, &dm.r), &rhs.r_t) < 1e-8);
    }
}

#[test]
fn right_hand_sides_stay_holomorphic() {
    let g = SpectralGrid::new(512, 2.0 * PI).unwrap();
    let s = random_state(&g, 7);
    let d = to_diff(&s, 0.1).unwrap();
    let r = rhs_diff(&d, &phys(1.0, 1.0)).unwrap();
    assert!(r.w_t.positive_leak() < 1e-12 && r.r_t.positive_leak() < 1e-12);
    assert!(r.b.iter().all(|x| x.is_finite()) && r.a.iter().all(|x| *x >= -1e-14));
}

#[test]
fn degenerate_states_are_refused() {
    let g = SpectralGrid::new(64, 2.0 * PI).unwrap();
    // W = i·e^{-iα} gives 1 + W_α = 1 + e^{-iα}, which vanishes at α = π.
    let w = HoloField::project(&ComplexField::mode(&g, -1, C64::new(0.0, 1.0)));
    let s = WaveState::new(w, HoloField::zeros(&g)).unwrap();
    assert!(matches!(
        rhs_full(&s, &phys(1.0, 0.0)),
        Err(Error::ConformalDegenerate { .. })
    ));
}

fn gravity_wave(n: usize, steepness: f64) -> SolveReport {
    let g = SpectralGrid::new(n, 2.0 * PI).unwrap();
    let p = TravelingProblem::new(
        g.clone(),
        phys(1.0, 0.0),
        Formulation::Combined,
        Constraint::Steepness(steepness),
    )
    .unwrap();
    let guess = holowave::traveling::linear_guess(&p, steepness / 2.0);
    let r = newton_solve(&p, &guess).unwrap();
    assert!(r.converged);
    r
}

fn traveling_state(r: &SolveReport) -> WaveState {
    WaveState::new(r.w.clone(), r.q.clone()).unwrap()
}

#[test]
fn steady_wave_translates_rigidly() {
    let r = gravity_wave(128, 0.05);
    let s0 = traveling_state(&r);
    let period = 2.0 * PI / r.c;
    let steps = 400;
    let p = phys(1.0, 0.0);
    let set = EvolveSettings {
        dt: period / steps as f64,
        steps,
        filter: Filter::None,
        ..Default::default()
    };
    let tr = evolve(&s0, &p, &set).unwrap();
    let e = sup_diff(tr.final_state.w.field(), s0.w.field());
    assert!(e < 1e-6, "{e}");
    // Halfway through, the profile has moved by half a wavelength.
    let half = EvolveSettings { steps: steps / 2, ..set };
    let mid = evolve(&s0, &p, &half).unwrap().final_state;
    let shifted = s0.w.field().translate(PI);
    let back = s0.w.field().translate(-PI);
    let e = sup_diff(mid.w.field(), &shifted).min(sup_diff(mid.w.field(), &back));
    assert!(e < 1e-6, "{e}");
}

#[test]
fn steady_wave_right_hand_side_is_a_translation() {
    let r = gravity_wave(256, 0.05);
    let rhs = rhs_full(&traveling_state(&r), &phys(1.0, 0.0)).unwrap();
    let expect = r.w.derivative().scale(-r.c);
    let e = sup_diff(rhs.w_t.field(), expect.field());
    assert!(e < 10.0 * 1e-11 * 16.0, "{e}");
}

#[test]
fn reversing_the_potential_reverses_time() {
    let g = SpectralGrid::new(256, 2.0 * PI).unwrap();
    let p = phys(1.0, 0.5);
    let s0 = random_state_with_slope(&g, 21, 0.1);
    let set = EvolveSettings {
        dt: 0.25 * max_stable_dt(&g, &p),
        steps: 40,
        filter: Filter::None,
        ..Default::default()
    };
    let s1 = evolve(&s0, &p, &set).unwrap().final_state;
    let flipped = WaveState::new(s1.w.clone(), s1.q.scale(-1.0)).unwrap();
    let s2 = evolve(&flipped, &p, &set).unwrap().final_state;
    assert!(sup_diff(s2.w.field(), s0.w.field()) < 1e-8);
    assert!(sup_diff(s2.q.field(), s0.q.scale(-1.0).field()) < 1e-8);
}

fn energy_drift(s0: &WaveState, p: &PhysParams, dt: f64, t_end: f64) -> f64 {
    let steps = (t_end / dt).round() as usize;
    let set = EvolveSettings {
        dt,
        steps,
        sample_every: steps,
        filter: Filter::None,
        ..Default::default()
    };
    let tr = evolve(s0, p, &set).unwrap();
    let h: Vec<f64> = tr.samples.iter().map(|x| x.hamiltonian).collect();
    (h[h.len() - 1] - h[0]).abs()
}

#[test]
fn energy_drift_shrinks_at_fourth_order() {
    let g = SpectralGrid::new(256, 2.0 * PI).unwrap();
    let p = phys(1.0, 0.0);
    let s0 = random_state_with_slope(&g, 11, 0.05);
    let t_end = 2.56;
    let d1 = energy_drift(&s0, &p, 0.02, t_end);
    let d2 = energy_drift(&s0, &p, 0.01, t_end);
    assert!(d1 / d2 >= 12.0, "{d1} {d2}");
    let pc = phys(1.0, 0.1);
    let dt = 0.5 * max_stable_dt(&g, &pc);
    let d1 = energy_drift(&s0, &pc, dt, 256.0 * dt);
    let d2 = energy_drift(&s0, &pc, dt / 2.0, 256.0 * dt);
    assert!(d1 / d2 >= 12.0, "{d1} {d2}");
    let set = EvolveSettings {
        dt: 0.01,
        steps: 256,
        sample_every: 16,
        filter: Filter::None,
        ..Default::default()
    };
    let tr = evolve(&s0, &p, &set).unwrap();
    let m0 = tr.samples[0].momentum;
    assert!(tr.samples.iter().all(|x| (x.momentum - m0).abs() < 1e-8 && x.leak < 1e-10));
}

#[test]
fn backward_steps_undo_forward_steps() {
    let g = SpectralGrid::new(256, 2.0 * PI).unwrap();
    let p = phys(1.0, 1.0);
    let s0 = random_state(&g, 5);
    let dt = 0.2 * max_stable_dt(&g, &p);
    let mut s = s0.clone();
    for _ in 0..50 {
        s = rk4_step(&s, &p, dt, Filter::None).unwrap().0;
    }
    for _ in 0..50 {
        s = rk4_step(&s, &p, -dt, Filter::None).unwrap().0;
    }
    assert!(sup_diff(s.w.field(), s0.w.field()) < 1e-8);
    assert!(sup_diff(s.q.field(), s0.q.field()) < 1e-8);
}

#[test]
fn small_standing_waves_oscillate_at_the_linear_frequency() {
    let g = SpectralGrid::new(64, 2.0 * PI).unwrap();
    for (gg, sigma, k) in [(1.0, 0.0, 2i64), (1.0, 1.0, 3), (0.0, 1.0, 2)] {
        let p = phys(gg, sigma);
        let kf = k as f64;
        let omega = (gg * kf + sigma * kf * kf * kf).sqrt();
        let dt = (0.05 / omega).min(0.5 * max_stable_dt(&g, &p));
        let w = HoloField::project(&ComplexField::mode(&g, -k, C64::new(0.0, 1e-6)));
        let s0 = WaveState::new(w, HoloField::zeros(&g)).unwrap();
        let steps = (4.0 * PI / omega / dt) as usize;
        let mut s = s0;
        let mut signal = Vec::with_capacity(steps);
        for _ in 0..steps {
            signal.push(s.w.field().coefficients()[g.slot(-k)].im);
            s = rk4_step(&s, &p, dt, Filter::None).unwrap().0;
        }
        let fit = fit_frequency(&signal, dt).unwrap();
        assert!((fit - omega).abs() < 1e-6 * omega, "{fit} {omega}");
    }
}

#[test]
fn filters_damp_only_the_top_of_the_spectrum() {
    let g = SpectralGrid::new(128, 2.0 * PI).unwrap();
    let p = phys(1.0, 0.0);
    let s0 = random_state_with_slope(&g, 3, 0.02);
    let a = rk4_step(&s0, &p, 0.01, Filter::None).unwrap().0;
    for f in [Filter::TwoThirds, Filter::HouLi36] {
        let b = rk4_step(&s0, &p, 0.01, f).unwrap().0;
        assert!(sup_diff(a.w.field(), b.w.field()) < 1e-10);
    }
    assert_eq!("houli36".parse::<Filter>().unwrap(), Filter::HouLi36);
}

#[test]
fn trace_csv_has_one_row_per_sample() {
    let g = SpectralGrid::new(64, 2.0 * PI).unwrap();
    let s0 = random_state(&g, 9);
    let set = EvolveSettings {
        dt: 0.01,
        steps: 10,
        sample_every: 3,
        ..Default::default()
    };
    let tr = evolve(&s0, &phys(1.0, 0.0), &set).unwrap();
    let csv = tr.to_csv();
    assert!(csv.starts_with("t,H,M,leak,min_jac,sup_W,sup_Q\n"));
    // t = 0, 3, 6, 9, 10
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn runaway_growth_is_reported() {
    let g = SpectralGrid::new(64, 2.0 * PI).unwrap();
    let s0 = random_state(&g, 9);
    let set = EvolveSettings {
        dt: 0.01,
        steps: 3,
        blowup_bound: 1e-3,
        ..Default::default()
    };
    assert!(matches!(
        evolve(&s0, &phys(1.0, 0.0), &set),
        Err(Error::BlowupDetected { .. })
    ));
}
