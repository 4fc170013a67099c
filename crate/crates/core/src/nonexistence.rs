//! Numerical counterparts of the nonexistence arguments for localized
//! traveling waves: commutator scans, the cutoff multiplier identity, the
//! capillary log equation and solver sweeps over localized guesses.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::conformal::{build_conformal, ConformalOptions};
use crate::error::{Error, Result};
use crate::fields::{HoloField, PhysParams};
use crate::spectral::{commutator_p_cutoff, ComplexField, CutoffFamily, RealField, SpectralGrid, C64, I};
use crate::traveling::{
    newton_solve, residual_bab_g, unwrapped_argument, CapillaryConvention, Constraint, Formulation, TravelingProblem,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorRow {
    pub r: f64,
    pub norm: f64,
    pub scaled: f64,
    /// Part of `norm²` within a quarter period of the rising edge.
    pub rise_sq: f64,
    pub fall_sq: f64,
}

/// `‖[P, χ_r] W_α‖` for each `r`, split between the two edges of the cutoff.
pub fn commutator_decay_scan(w: &HoloField, r_list: &[f64], cutoffs: &CutoffFamily) -> Result<Vec<CommutatorRow>> {
    let grid = w.grid();
    let r_max = grid.period() / 100.0;
    let mut rows = Vec::with_capacity(r_list.len());
    for &r in r_list {
        if r > r_max {
            return Err(Error::InvalidArgument(format!("r = {r} exceeds L/100 = {r_max}")));
        }
        let c = commutator_p_cutoff(w.field(), r, cutoffs)?;
        let mut rise = vec![0.0; grid.n()];
        let mut fall = vec![0.0; grid.n()];
        for (m, z) in c.values.iter().enumerate() {
            if CutoffFamily::near_rise(grid.point(m), grid.period()) {
                rise[m] = z.norm_sqr();
            } else {
                fall[m] = z.norm_sqr();
            }
        }
        let norm = c.l2_norm();
        rows.push(CommutatorRow {
            r,
            norm,
            scaled: r * norm,
            rise_sq: grid.integrate(&rise),
            fall_sq: grid.integrate(&fall),
        });
    }
    Ok(rows)
}

pub fn commutator_csv(rows: &[CommutatorRow]) -> String {
    let mut out = String::from("r,norm,scaled,rise_sq,fall_sq\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            row.r, row.norm, row.scaled, row.rise_sq, row.fall_sq
        );
    }
    out
}

/// Whether the scaled column never rises by more than `ripple` (relative)
/// above its running minimum. Rows below `floor` times the largest norm are
/// treated as numerically zero and skipped.
pub fn scaled_is_nonincreasing(rows: &[CommutatorRow], ripple: f64, floor: f64) -> bool {
    let top = rows.iter().fold(0.0f64, |m, r| m.max(r.norm));
    let mut best = f64::INFINITY;
    for row in rows.iter().filter(|r| r.norm > floor * top) {
        if row.scaled > best * (1.0 + ripple) {
            return false;
        }
        best = best.min(row.scaled);
    }
    true
}

/// Keep only the modes with `|κ| ≥ lambda`.
pub fn high_pass(w: &HoloField, lambda: f64) -> HoloField {
    let grid = w.grid();
    let v = grid.apply_symbol(w.values(), |_, k| {
        if k.abs() >= lambda {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    HoloField::project(&ComplexField {
        grid: grid.clone(),
        values: v,
    })
    .with_tolerance(w.tol())
}

/// Holomorphic Lorentzian with coefficients `e^{κ_j s}` on `j ≤ 0`, normalized to unit `L²` norm.
pub fn lorentzian(grid: &SpectralGrid, s: f64) -> HoloField {
    let coeffs: Vec<C64> = (0..grid.n())
        .map(|idx| {
            let j = grid.mode(idx);
            if j < 0 && !grid.is_nyquist(idx) {
                C64::new((grid.wavenumber_of_mode(j) * s).exp(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let f = ComplexField::from_coefficients(grid, &coeffs);
    let norm = f.l2_norm();
    HoloField::project(&f.scale(C64::new(1.0 / norm, 0.0)))
}

/// `r‖[P, χ_r] W_α‖ / ‖W‖`.
pub fn coifman_meyer_ratio(w: &HoloField, r: f64, cutoffs: &CutoffFamily) -> Result<f64> {
    let norm = w.field().l2_norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("ratio undefined for W = 0".into()));
    }
    Ok(r * commutator_p_cutoff(w.field(), r, cutoffs)?.l2_norm() / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierIdentity {
    /// `g ∫ χ_r' |W|²`.
    pub lhs: f64,
    /// `-2 Re ∫ conj([P, χ_r] W_α) · iVW_α`.
    pub rhs: f64,
    /// `-2 Re ∫ χ_r · conj(W_α) · ρ` with `ρ = gW - P[iVW_α]`.
    pub correction: f64,
    pub defect: f64,
}

/// The cutoff multiplier identity, valid for every holomorphic `W` once the
/// residual term is included. Exact for `W` supported in `|j| < n/4`.
pub fn multiplier_identity_check(w: &HoloField, p: &PhysParams, r: f64, cutoffs: &CutoffFamily) -> Result<MultiplierIdentity> {
    let grid = w.grid();
    let chi = cutoffs.sample(grid, r)?;
    let dchi = chi.derivative();
    let wv = w.values();
    let wa = grid.deriv(wv);
    let rho = residual_bab_g(w, p)?;
    let comm = commutator_p_cutoff(w.field(), r, cutoffs)?;
    let c2 = p.c * p.c;
    let n = grid.n();
    let lhs: Vec<f64> = (0..n).map(|m| p.g * dchi.values[m] * wv[m].norm_sqr()).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|m| {
            let v = c2 - 2.0 * p.g * wv[m].im;
            -2.0 * (comm.values[m].conj() * I * v * wa[m]).re
        })
        .collect();
    let corr: Vec<f64> = (0..n)
        .map(|m| -2.0 * (chi.values[m] * wa[m].conj() * rho.values[m]).re)
        .collect();
    let (lhs, rhs, correction) = (grid.integrate(&lhs), grid.integrate(&rhs), grid.integrate(&corr));
    Ok(MultiplierIdentity {
        lhs,
        rhs,
        correction,
        defect: (lhs - rhs - correction).abs(),
    })
}

/// `σH(U_α) - f c² sinh U` with `U = Re log(1 + 𝐖)`; `f` is 1 for the
/// `canonical` convention and 2 for `paper`.
pub fn capillary_log_residual(bw: &HoloField, p: &PhysParams, conv: CapillaryConvention) -> Result<RealField> {
    if p.g != 0.0 {
        return Err(Error::InvalidArgument("the log form needs g = 0".into()));
    }
    let grid = bw.grid();
    let m = bw.values().iter().map(|z| (1.0 + z).norm()).fold(f64::INFINITY, f64::min);
    if m < crate::traveling::RESIDUAL_DELTA {
        return Err(Error::ConformalDegenerate {
            min_modulus: m,
            delta: crate::traveling::RESIDUAL_DELTA,
        });
    }
    unwrapped_argument(bw.values())?;
    let u = RealField {
        grid: grid.clone(),
        values: bw.values().iter().map(|z| (1.0 + z).norm().ln()).collect(),
    };
    let hu = u.derivative().hilbert();
    let f = 2.0 * conv.factor() * p.c * p.c;
    Ok(RealField {
        grid: grid.clone(),
        values: hu
            .values
            .iter()
            .zip(&u.values)
            .map(|(h, u)| p.sigma * h - f * u.sinh())
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Gravity,
    Capillary,
    GravityCapillary,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Gravity => "gravity",
            SweepMode::Capillary => "capillary",
            SweepMode::GravityCapillary => "gravity-capillary",
        }
    }

    fn params(self, c: f64) -> Result<PhysParams> {
        match self {
            SweepMode::Gravity => PhysParams::for_solver(1.0, 0.0, c),
            SweepMode::Capillary => PhysParams::for_solver(0.0, 1.0, c),
            SweepMode::GravityCapillary => PhysParams::for_solver(1.0, 1.0, c),
        }
    }

    fn formulation(self) -> Formulation {
        match self {
            SweepMode::Capillary => Formulation::BabenkoCapillary,
            _ => Formulation::Combined,
        }
    }
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gravity" => Ok(SweepMode::Gravity),
            "capillary" => Ok(SweepMode::Capillary),
            "gravity-capillary" => Ok(SweepMode::GravityCapillary),
            _ => Err(Error::Config(format!("unknown sweep mode {s:?}"))),
        }
    }
}

/// Localized initial elevation centred at `α = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Guess {
    pub amplitude: f64,
    pub width: f64,
    /// Carrier wavenumber; 0 gives a plain Gaussian bump.
    pub carrier: f64,
}

impl Guess {
    pub fn eta(&self, x: f64, period: f64) -> f64 {
        let x = if x > period / 2.0 { x - period } else { x };
        self.amplitude * (-(x / self.width).powi(2)).exp() * (self.carrier * x).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    ConvergedToZero,
    ConvergedNontrivial,
    /// Converged but not localized: a periodic wave on the torus.
    ConvergedPeriodic,
    Stagnated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub mode: SweepMode,
    pub c: f64,
    pub guess_id: usize,
    #[serde(rename = "L")]
    pub period: f64,
    pub n: usize,
    pub outcome: Outcome,
    pub residual: f64,
    pub iters: usize,
    pub sup_w: f64,
    pub localized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub speeds: Vec<f64>,
    pub guesses: Vec<Guess>,
    pub period: f64,
    pub n: usize,
    pub record_wall_time: bool,
}

impl SweepConfig {
    /// The default grid of speeds and guesses for each mode.
    pub fn default_for(mode: SweepMode) -> Self {
        let bump = |amplitude, width| Guess {
            amplitude,
            width,
            carrier: 0.0,
        };
        let (speeds, guesses, period, n) = match mode {
            SweepMode::Gravity => (
                vec![0.5, 1.0, 2.0],
                vec![bump(0.1, 2.0), bump(0.3, 5.0), bump(0.05, 10.0)],
                400.0,
                8192,
            ),
            SweepMode::Capillary => (
                vec![0.5, 1.0, 2.0],
                vec![bump(0.1, 2.0), bump(0.3, 5.0), bump(0.05, 10.0)],
                400.0,
                8192,
            ),
            SweepMode::GravityCapillary => {
                let packet = |amplitude, width| Guess {
                    amplitude,
                    width,
                    carrier: 1.0,
                };
                (
                    vec![0.99 * 2f64.sqrt()],
                    vec![packet(-0.2, 5.0), packet(-0.3, 3.0), packet(-0.2, 8.0)],
                    200.0,
                    1024,
                )
            }
        };
        Self {
            mode,
            speeds,
            guesses,
            period,
            n,
            record_wall_time: false,
        }
    }
}

/// Below this `sup |W|` a converged solution counts as the flat state.
pub const TRIVIAL_SUP: f64 = 1e-8;
/// A solution is localized when its sup over `|α| > L/4` is at most this fraction of the global sup.
pub const LOCALIZATION_RATIO: f64 = 1e-2;

fn is_localized(w: &HoloField) -> bool {
    let grid = w.grid();
    let l = grid.period();
    let mean = w.field().mean();
    let (mut inner, mut outer) = (0.0f64, 0.0f64);
    for (m, z) in w.values().iter().enumerate() {
        let x = grid.point(m);
        let d = x.min(l - x);
        let a = (z - mean).norm();
        if d > l / 4.0 {
            outer = outer.max(a);
        } else {
            inner = inner.max(a);
        }
    }
    outer <= LOCALIZATION_RATIO * inner.max(outer)
}

fn guess_field(grid: &SpectralGrid, guess: &Guess) -> Result<HoloField> {
    let l = grid.period();
    let eta = move |x: f64| guess.eta(x, l);
    Ok(build_conformal(&eta, grid, &ConformalOptions::default())?.w)
}

fn run_one(cfg: &SweepConfig, c: f64, guess_id: usize) -> SweepRecord {
    let start = Instant::now();
    let mut rec = SweepRecord {
        mode: cfg.mode,
        c,
        guess_id,
        period: cfg.period,
        n: cfg.n,
        outcome: Outcome::Stagnated,
        residual: f64::NAN,
        iters: 0,
        sup_w: f64::NAN,
        localized: false,
        error: None,
        wall_time: None,
    };
    let result = (|| -> Result<_> {
        let grid = SpectralGrid::new(cfg.n, cfg.period)?;
        let params = cfg.mode.params(c)?;
        let problem = TravelingProblem::new(grid.clone(), params, cfg.mode.formulation(), Constraint::FixedSpeed)?;
        let guess = guess_field(&grid, &cfg.guesses[guess_id])?;
        newton_solve(&problem, &guess)
    })();
    match result {
        Ok(report) => {
            let w = &report.w;
            let sup = w.field().sub(&ComplexField {
                grid: w.grid().clone(),
                values: vec![w.field().mean(); w.grid().n()],
            });
            let sup = sup.map(|f| f.sup_norm()).unwrap_or(f64::NAN);
            rec.residual = report.residual_l2;
            rec.iters = report.iterations;
            rec.sup_w = sup;
            rec.localized = sup > TRIVIAL_SUP && is_localized(w);
            rec.outcome = if sup <= TRIVIAL_SUP {
                Outcome::ConvergedToZero
            } else if rec.localized {
                Outcome::ConvergedNontrivial
            } else {
                Outcome::ConvergedPeriodic
            };
        }
        Err(e) => {
            match &e {
                Error::MaxIterations { iterations, residual } => {
                    rec.iters = *iterations;
                    rec.residual = *residual;
                }
                Error::LineSearchFailure { iteration, residual } => {
                    rec.iters = *iteration;
                    rec.residual = *residual;
                }
                _ => {}
            }
            rec.error = Some(e.to_string());
        }
    }
    if cfg.record_wall_time {
        rec.wall_time = Some(start.elapsed().as_secs_f64());
    }
    rec
}

/// Run every `(c, guess)` pair; records come back sorted by `(c, guess_id)`.
pub fn solitary_sweep(cfg: &SweepConfig) -> Vec<SweepRecord> {
    let jobs: Vec<(f64, usize)> = cfg
        .speeds
        .iter()
        .flat_map(|&c| (0..cfg.guesses.len()).map(move |k| (c, k)))
        .collect();
    let mut records: Vec<SweepRecord> = jobs.par_iter().map(|&(c, k)| run_one(cfg, c, k)).collect();
    records.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.guess_id.cmp(&b.guess_id)));
    records
}

pub fn sweep_jsonl(records: &[SweepRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("sweep records serialize"));
        out.push('\n');
    }
    out
}
