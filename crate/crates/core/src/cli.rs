//! Batch front-end: one subcommand per pipeline, files under `--out`, a JSON
//! status record on stdout.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::conformal::{build_conformal, regularity_transfer_report, ConformalOptions, SampledElevation};
use crate::error::{Error, Result};
use crate::evolution::{evolve, fit_frequency, max_stable_dt, rk4_step, EvolveSettings, Filter};
use crate::fields::{eulerian_trace, write_state, HoloField, PhysParams, WaveState};
use crate::nonexistence::{
    commutator_csv, commutator_decay_scan, high_pass, lorentzian, multiplier_identity_check, scaled_is_nonincreasing,
    solitary_sweep, sweep_jsonl, Outcome, SweepMode,
};
use crate::spectral::{algebra_defects, ComplexField, CutoffFamily, RealField, SpectralGrid, C64};
use crate::traveling::{
    branch_csv, continuation_run, linear_guess, newton_solve, CapillaryConvention, Constraint, ContinuationSettings, Formulation,
    StopReason, TravelingProblem,
};

pub const SCHEMA: &str = "holowave/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "holowave", version, about = "Deep-water waves in holomorphic coordinates")]
pub struct Cli {
    /// INI file; missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Capillary normalization, overriding `[solver] convention`.
    #[arg(long, global = true, value_parser = ["canonical", "paper"])]
    pub convention: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Compare small traveling and standing waves with linear theory.
    Dispersion,
    /// Continue a periodic traveling wave in steepness.
    Traveling,
    /// Integrate the holomorphic system in time.
    Evolve,
    /// Build `W` from a graph profile and check the round trip.
    Conformal,
    /// Operator algebra, multiplier identity and commutator scans.
    Verify,
    /// Solitary-wave search over speeds and initial guesses.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Traveling => "traveling",
            Command::Evolve => "evolve",
            Command::Conformal => "conformal",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse(_)
        | Error::Io(_)
        | Error::CflViolation { .. }
        | Error::InvalidGrid(_)
        | Error::InvalidArgument(_)
        | Error::GridMismatch => EXIT_CONFIG,
        Error::BlowupDetected { .. }
        | Error::ConformalDegenerate { .. }
        | Error::NotAGraph { .. }
        | Error::HolomorphyLeak { .. }
        | Error::BranchCut { .. } => EXIT_NUMERICAL,
        _ => EXIT_TOLERANCE,
    }
}

struct Run {
    cfg: RunConfig,
    command: Command,
    seed: u64,
    out: PathBuf,
}

struct Done {
    ok: bool,
    files: Vec<String>,
    summary: Value,
}

fn e16(x: f64) -> String {
    format!("{x:.16e}")
}

impl Run {
    fn header(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "record": "header",
            "command": self.command.name(),
            "seed": self.seed,
            "config": self.cfg,
        })
    }

    fn write(&self, files: &mut Vec<String>, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        files.push(name.to_string());
        Ok(())
    }

    fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.cfg.grid.n, self.cfg.grid.period)
    }

    fn jsonl(&self, rows: &[Value]) -> String {
        let mut out = self.header().to_string();
        out.push('\n');
        for r in rows {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parse `args`, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let command = cli.command;
    match execute(&cli) {
        Ok(done) => {
            let code = if done.ok { EXIT_OK } else { EXIT_TOLERANCE };
            let status = json!({
                "schema": SCHEMA,
                "record": "status",
                "command": command.name(),
                "status": if done.ok { "ok" } else { "tolerance-failure" },
                "exit_code": code,
                "files": done.files,
                "summary": done.summary,
            });
            println!("{status}");
            code
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("holowave {}: {e}", command.name());
            let status = json!({
                "schema": SCHEMA,
                "record": "status",
                "command": command.name(),
                "status": "error",
                "exit_code": code,
                "error": e.to_string(),
            });
            println!("{status}");
            code
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => RunConfig::from_ini_str(""),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_ini_str(&text)
        }
    }
}

fn execute(cli: &Cli) -> Result<Done> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(c) = &cli.convention {
        cfg.solver.convention = c.clone();
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::Io(format!("{}: {e}", cli.out.display())))?;
    let run = Run {
        cfg,
        command: cli.command,
        seed: cli.seed,
        out: cli.out.clone(),
    };
    let mut files = Vec::new();
    run.write(&mut files, "header.json", &format!("{}\n", run.header()))?;
    let dispatch = || match run.command {
        Command::Dispersion => cmd_dispersion(&run),
        Command::Traveling => cmd_traveling(&run),
        Command::Evolve => cmd_evolve(&run),
        Command::Conformal => cmd_conformal(&run),
        Command::Verify => cmd_verify(&run),
        Command::Sweep => cmd_sweep(&run),
    };
    let mut done = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("--threads {n}: {e}")))?
            .install(dispatch)?,
        None => dispatch()?,
    };
    files.append(&mut done.files);
    done.files = files;
    Ok(done)
}

fn standing_mode(grid: &SpectralGrid, k: usize, amplitude: f64) -> WaveState {
    let w = HoloField::project(&ComplexField::mode(grid, -(k as i64), C64::new(0.0, amplitude)));
    WaveState::new(w, HoloField::zeros(grid)).expect("fields share a grid")
}

fn measured_omega(grid: &SpectralGrid, p: &PhysParams, k: usize, amplitude: f64, omega: f64) -> Result<f64> {
    let dt = (0.05 / omega).min(0.5 * max_stable_dt(grid, p));
    let steps = (4.0 * PI / omega / dt).ceil() as usize;
    let slot = grid.slot(-(k as i64));
    let mut s = standing_mode(grid, k, amplitude);
    let mut signal = Vec::with_capacity(steps);
    for _ in 0..steps {
        signal.push(s.w.field().coefficients()[slot].im);
        s = rk4_step(&s, p, dt, Filter::None)?.0;
    }
    fit_frequency(&signal, dt)
}

fn cmd_dispersion(run: &Run) -> Result<Done> {
    let cfg = &run.cfg;
    let grid = run.grid()?;
    let (g, sigma) = (cfg.phys.g, cfg.phys.sigma);
    let p = PhysParams::new(g, sigma, 0.0)?;
    let formulation = if g == 0.0 {
        Formulation::BabenkoCapillary
    } else {
        cfg.formulation()?
    };
    let conv = cfg.convention()?;
    // Capillary speeds come out in the chosen normalization.
    let speed_scale = if formulation == Formulation::BabenkoCapillary {
        conv.factor() / CapillaryConvention::Canonical.factor()
    } else {
        1.0
    };
    let a = cfg.dispersion.amplitude;
    let mut csv = String::from("k,c2_measured,c2_theory,omega2_measured,omega2_theory,rel_err\n");
    let mut worst: f64 = 0.0;
    let mut all_converged = true;
    for &k in &cfg.dispersion.k {
        let kappa = 2.0 * PI * k as f64 / grid.period();
        let c2_theory = g / kappa + sigma * kappa;
        let omega2_theory = g * kappa + sigma * kappa.powi(3);
        let mut problem = TravelingProblem::new(grid.clone(), p, formulation, Constraint::FixedAmplitude(a))?
            .with_harmonic(k)?
            .with_convention(conv);
        problem.newton.max_iter = cfg.solver.max_iter;
        problem.newton.gmres_rtol = cfg.solver.gmres_rtol;
        problem.newton.tol = cfg.solver.tol;
        let rep = newton_solve(&problem, &linear_guess(&problem, a))?;
        all_converged &= rep.converged;
        let c2_measured = rep.c2 * speed_scale;
        let omega2_measured = measured_omega(&grid, &p, k, a, omega2_theory.sqrt())?.powi(2);
        let rel = ((c2_measured - c2_theory) / c2_theory)
            .abs()
            .max(((omega2_measured - omega2_theory) / omega2_theory).abs());
        worst = worst.max(rel);
        let _ = writeln!(
            csv,
            "{k},{},{},{},{},{}",
            e16(c2_measured),
            e16(c2_theory),
            e16(omega2_measured),
            e16(omega2_theory),
            e16(rel)
        );
    }
    let mut files = Vec::new();
    run.write(&mut files, "dispersion.csv", &csv)?;
    Ok(Done {
        ok: all_converged && worst < cfg.dispersion.tol,
        files,
        summary: json!({ "max_rel_err": worst, "tol": cfg.dispersion.tol, "converged": all_converged }),
    })
}

fn stop_name(s: &StopReason) -> String {
    match s {
        StopReason::TargetReached => "target-reached".into(),
        StopReason::MaxSteps => "max-steps".into(),
        StopReason::NonConvergence(e) => format!("non-convergence: {e}"),
        StopReason::ConformalMargin(d) => format!("conformal-margin: {d:.3e}"),
    }
}

fn cmd_traveling(run: &Run) -> Result<Done> {
    let cfg = &run.cfg;
    let p = PhysParams::new(cfg.phys.g, cfg.phys.sigma, cfg.phys.c)?;
    let cs = &cfg.continuation;
    let mut problem = TravelingProblem::new(
        run.grid()?,
        p,
        cfg.formulation()?,
        Constraint::FixedAmplitude(cs.start_amplitude),
    )?
    .with_harmonic(cfg.solver.harmonic)?
    .with_convention(cfg.convention()?);
    problem.newton.max_iter = cfg.solver.max_iter;
    problem.newton.gmres_rtol = cfg.solver.gmres_rtol;
    problem.newton.tol = cfg.solver.tol;
    let settings = ContinuationSettings {
        start_amplitude: cs.start_amplitude,
        step: cs.step,
        target: cs.target,
        max_steps: cs.max_steps,
        delta_min: cs.delta_min,
    };
    let branch = continuation_run(&problem, &settings)?;
    let mut files = Vec::new();
    run.write(&mut files, "branch.csv", &branch_csv(&branch.reports))?;
    let mut crest_ok = true;
    if cfg.phys.sigma == 0.0 {
        for r in &branch.reports {
            let h_max = r.w.values().iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
            crest_ok &= h_max <= r.c2 / (2.0 * cfg.phys.g) + 1e-8;
        }
    }
    let last = branch.reports.last();
    if let Some(r) = last {
        let state = WaveState::new(r.w.clone(), r.q.clone())?;
        let meta = vec![("c".to_string(), e16(r.c)), ("steepness".to_string(), e16(r.steepness))];
        run.write(&mut files, "traveling.wstate", &write_state(&state, &meta))?;
    }
    let converged = !branch.reports.is_empty() && branch.reports.iter().all(|r| r.converged);
    Ok(Done {
        ok: converged && crest_ok,
        files,
        summary: json!({
            "points": branch.reports.len(),
            "stop": stop_name(&branch.stop),
            "final_c": last.map(|r| r.c),
            "final_steepness": last.map(|r| r.steepness),
            "crest_bound_holds": crest_ok,
        }),
    })
}

fn initial_state(run: &Run, grid: &SpectralGrid, p: &PhysParams) -> Result<WaveState> {
    let e = &run.cfg.evolve;
    match e.init.as_str() {
        "mode" => Ok(standing_mode(grid, e.mode, e.amplitude)),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            let w = HoloField::random(grid, &mut rng, e.mode, e.amplitude);
            let q = HoloField::random(grid, &mut rng, e.mode, e.amplitude);
            WaveState::new(w, q)
        }
        _ => {
            let problem = TravelingProblem::new(grid.clone(), *p, Formulation::Combined, Constraint::Steepness(e.steepness))?
                .with_harmonic(e.mode)?;
            let r = newton_solve(&problem, &linear_guess(&problem, e.steepness / 2.0))?;
            if !r.converged {
                return Err(Error::MaxIterations {
                    iterations: r.iterations,
                    residual: r.residual_l2,
                });
            }
            WaveState::new(r.w, r.q)
        }
    }
}

fn cmd_evolve(run: &Run) -> Result<Done> {
    let e = &run.cfg.evolve;
    let grid = run.grid()?;
    let p = PhysParams::new(run.cfg.phys.g, run.cfg.phys.sigma, 0.0)?;
    let max = max_stable_dt(&grid, &p);
    if !(e.dt > 0.0 && e.dt <= max) {
        return Err(Error::CflViolation { dt: e.dt, max });
    }
    let s0 = initial_state(run, &grid, &p)?;
    let settings = EvolveSettings {
        dt: e.dt,
        steps: e.steps,
        sample_every: e.sample_every,
        filter: run.cfg.filter()?,
        blowup_bound: e.blowup_bound,
        ..Default::default()
    };
    let tr = evolve(&s0, &p, &settings)?;
    let mut files = Vec::new();
    run.write(&mut files, "trace.csv", &tr.to_csv())?;
    let t_end = tr.samples.last().map_or(0.0, |s| s.t);
    run.write(
        &mut files,
        "final.wstate",
        &write_state(&tr.final_state, &[("t".to_string(), e16(t_end))]),
    )?;
    let (first, last) = (&tr.samples[0], &tr.samples[tr.samples.len() - 1]);
    let drift = (last.hamiltonian - first.hamiltonian).abs() / first.hamiltonian.abs().max(f64::MIN_POSITIVE);
    let momentum_drift = (last.momentum - first.momentum).abs();
    Ok(Done {
        ok: e.drift_tol.is_none_or(|t| drift <= t),
        files,
        summary: json!({
            "t_end": t_end,
            "energy_rel_drift": drift,
            "momentum_drift": momentum_drift,
            "max_leak": tr.samples.iter().map(|s| s.leak).fold(0.0, f64::max),
        }),
    })
}

fn read_eta_csv(path: &str, grid: &SpectralGrid) -> Result<RealField> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{path}: {e}")))?;
    let mut eta = Vec::with_capacity(grid.n());
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let (Some(x), Some(y)) = (cols.first(), cols.get(1)) else {
            return Err(Error::Config(format!("{path}: expected x,eta in {line:?}")));
        };
        let (Ok(x), Ok(y)) = (x.parse::<f64>(), y.parse::<f64>()) else {
            if eta.is_empty() {
                continue;
            }
            return Err(Error::Config(format!("{path}: cannot parse {line:?}")));
        };
        let m = eta.len();
        if m >= grid.n() || (x - grid.point(m)).abs() > 1e-9 * grid.period() {
            return Err(Error::Config(format!(
                "{path}: row {m} is not on the {}-point grid",
                grid.n()
            )));
        }
        eta.push(y);
    }
    if eta.len() != grid.n() {
        return Err(Error::Config(format!(
            "{path}: {} rows for a {}-point grid",
            eta.len(),
            grid.n()
        )));
    }
    RealField::new(grid, eta)
}

fn cmd_conformal(run: &Run) -> Result<Done> {
    let c = &run.cfg.conformal;
    let grid = run.grid()?;
    let eta = match &c.eta_csv {
        Some(path) => read_eta_csv(path, &grid)?,
        None => {
            let kappa = 2.0 * PI * c.mode as f64 / grid.period();
            RealField::from_fn(&grid, |x| c.amplitude * (kappa * x).cos())
        }
    };
    let opts = ConformalOptions {
        tol: c.tol,
        max_iter: c.max_iter,
        ..Default::default()
    };
    let build = build_conformal(&SampledElevation::new(&eta), &grid, &opts)?;
    let report = regularity_transfer_report(&eta, &build.w)?;
    let trace = eulerian_trace(&build.w)?;
    let mut csv = String::from("alpha,x,eta,re_w,im_w\n");
    for (m, z) in build.w.values().iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            e16(trace.alpha[m]),
            e16(trace.x[m]),
            e16(trace.eta[m]),
            e16(z.re),
            e16(z.im)
        );
    }
    let mut files = Vec::new();
    run.write(&mut files, "conformal.csv", &csv)?;
    let state = WaveState::new(build.w.clone(), HoloField::zeros(&grid))?;
    run.write(&mut files, "conformal.wstate", &write_state(&state, &[]))?;
    let rec = json!({
        "schema": SCHEMA,
        "record": "conformal-report",
        "iterations": build.iterations,
        "defect": build.defect,
        "delta": build.delta,
        "report": report,
    });
    run.write(&mut files, "report.json", &format!("{rec}\n"))?;
    Ok(Done {
        ok: report.round_trip <= c.check_tol && report.identity_defect <= c.check_tol,
        files,
        summary: json!({
            "round_trip": report.round_trip,
            "identity_defect": report.identity_defect,
            "literal_identity_defect": report.literal_identity_defect,
            "check_tol": c.check_tol,
        }),
    })
}

fn random_complex(grid: &SpectralGrid, rng: &mut ChaCha8Rng) -> ComplexField {
    let coeffs: Vec<C64> = (0..grid.n())
        .map(|i| {
            let j = grid.mode(i).unsigned_abs() as f64;
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) / (1.0 + j)
        })
        .collect();
    ComplexField::from_coefficients(grid, &coeffs)
}

/// Relative bound for the multiplier identity defect.
const MULTIPLIER_TOL: f64 = 1e-9;
const RIPPLE: f64 = 0.05;
const HIGH_PASS_RATIO: f64 = 1e-3;

fn cmd_verify(run: &Run) -> Result<Done> {
    let v = &run.cfg.verify;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut rows = Vec::new();
    let mut ok = true;

    let grid = SpectralGrid::new(v.n, run.cfg.grid.period)?;
    let mut worst_algebra: f64 = 0.0;
    for i in 0..v.samples {
        let f = random_complex(&grid, &mut rng);
        let other = random_complex(&grid, &mut rng);
        let d = algebra_defects(&f, &other)?;
        let pass = d.max() < v.tol;
        ok &= pass;
        worst_algebra = worst_algebra.max(d.max());
        rows.push(json!({ "check": "algebra", "sample": i, "defects": d, "max": d.max(), "pass": pass }));
    }

    let cutoffs = CutoffFamily::default();
    let mg = SpectralGrid::new(512, 50.0)?;
    let p = PhysParams::new(1.0, 0.0, 1.0)?;
    let mut worst_multiplier: f64 = 0.0;
    for i in 0..v.samples {
        let w = HoloField::random(&mg, &mut rng, mg.n() / 8, 0.3);
        for r in [mg.period() / 50.0, mg.period() / 20.0, mg.period() / 10.0] {
            let m = multiplier_identity_check(&w, &p, r, &cutoffs)?;
            let rel = m.defect / (m.lhs.abs() + m.rhs.abs() + 1.0);
            let pass = rel < MULTIPLIER_TOL;
            ok &= pass;
            worst_multiplier = worst_multiplier.max(rel);
            rows.push(json!({ "check": "multiplier", "sample": i, "r": r, "identity": m, "pass": pass }));
        }
    }

    let cg = SpectralGrid::new(1 << 18, 20000.0)?;
    let rs: Vec<f64> = (0..11).map(|k| 20.0 * 10f64.powf(k as f64 / 10.0)).collect();
    let mut files = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let w = lorentzian(&cg, s);
        let scan = commutator_decay_scan(&w, &rs, &cutoffs)?;
        let monotone = scaled_is_nonincreasing(&scan, RIPPLE, 1e-9);
        let mut ratios = Vec::new();
        for r in [20.0, 80.0, 200.0] {
            let full = commutator_decay_scan(&w, &[r], &cutoffs)?[0].scaled;
            let hp = commutator_decay_scan(&high_pass(&w, 64.0 / r), &[r], &cutoffs)?[0].scaled;
            ratios.push(hp / full);
        }
        let pass = monotone && ratios.iter().all(|x| *x <= HIGH_PASS_RATIO);
        ok &= pass;
        if s == 1.0 {
            run.write(&mut files, "commutator.csv", &commutator_csv(&scan))?;
        }
        rows.push(json!({
            "check": "commutator",
            "width": s,
            "rows": scan,
            "monotone": monotone,
            "high_pass_ratios": ratios,
            "pass": pass,
        }));
    }
    run.write(&mut files, "verify.jsonl", &run.jsonl(&rows))?;
    Ok(Done {
        ok,
        files,
        summary: json!({
            "algebra_max_defect": worst_algebra,
            "multiplier_max_rel_defect": worst_multiplier,
            "checks": rows.len(),
        }),
    })
}

fn cmd_sweep(run: &Run) -> Result<Done> {
    let sc = run.cfg.sweep_config()?;
    let records = solitary_sweep(&sc);
    let mut text = run.header().to_string();
    text.push('\n');
    text.push_str(&sweep_jsonl(&records));
    let mut files = Vec::new();
    run.write(&mut files, "sweep.jsonl", &text)?;
    let found = records
        .iter()
        .filter(|r| r.outcome == Outcome::ConvergedNontrivial && r.localized)
        .collect::<Vec<_>>();
    let ok = match sc.mode {
        SweepMode::GravityCapillary => found.iter().any(|r| r.residual < 1e-10),
        SweepMode::Gravity | SweepMode::Capillary => found.is_empty(),
    };
    Ok(Done {
        ok,
        files,
        summary: json!({
            "mode": sc.mode.name(),
            "runs": records.len(),
            "nontrivial_localized": found.len(),
            "errors": records.iter().filter(|r| r.error.is_some()).count(),
        }),
    })
}
