use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{check_conformal, hamiltonian, momentum, HoloField, PhysParams, WaveState};
use crate::spectral::{ComplexField, SpectralGrid, C64};

use super::crest::{crest_diagnostics, CrestDiagnostics};
use super::krylov::gmres;
use super::residual::{
    babenko_gravity_samples, capillary_samples, combined_samples, residual_bab_g, soliton_samples, CapillaryConvention,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Combined,
    BabenkoGravity,
    BabenkoCapillary,
    BabGProjected,
    SolitonSystem,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::Combined => "combined-scalar",
            Formulation::BabenkoGravity => "babenko-gravity",
            Formulation::BabenkoCapillary => "babenko-capillary",
            Formulation::BabGProjected => "bab-g-projected",
            Formulation::SolitonSystem => "soliton-system",
        }
    }

    fn gauge(self) -> Gauge {
        match self {
            Formulation::Combined => Gauge::Bernoulli,
            Formulation::BabenkoCapillary => Gauge::None,
            _ => Gauge::Level,
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Formulation::Combined,
            Formulation::BabenkoGravity,
            Formulation::BabenkoCapillary,
            Formulation::BabGProjected,
            Formulation::SolitonSystem,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown formulation {s:?}")))
    }
}

/// Scalar unknown that absorbs the mean of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gauge {
    /// Constant subtracted from the scalar residual.
    Bernoulli,
    /// Imaginary mean of `W`.
    Level,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    /// First-harmonic cosine amplitude of `Im W`; `c` is solved for.
    FixedAmplitude(f64),
    /// `c` is held at the problem's value.
    FixedSpeed,
    /// `(max Im W - min Im W)/L`; `c` is solved for.
    Steepness(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Grid ℓ² tolerance; `None` means `1e-11·√n`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub gmres_rtol: f64,
    pub gmres_restart: usize,
    pub gmres_max: usize,
    pub fd_step: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: None,
            max_iter: 40,
            gmres_rtol: 1e-9,
            gmres_restart: 80,
            gmres_max: 800,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSettings {
    pub start_amplitude: f64,
    /// Steepness increment.
    pub step: f64,
    /// Target steepness.
    pub target: f64,
    pub max_steps: usize,
    /// Stop when `min (1 + Re W_α)` drops below this.
    pub delta_min: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            start_amplitude: 1e-3,
            step: 0.01,
            target: 0.1,
            max_steps: 200,
            delta_min: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravelingProblem {
    pub grid: SpectralGrid,
    pub params: PhysParams,
    pub formulation: Formulation,
    pub constraint: Constraint,
    /// Base harmonic: the wave has `harmonic` crests per period.
    pub harmonic: usize,
    pub convention: CapillaryConvention,
    pub newton: NewtonSettings,
}

impl TravelingProblem {
    pub fn new(grid: SpectralGrid, params: PhysParams, formulation: Formulation, constraint: Constraint) -> Result<Self> {
        let (g, s) = (params.g, params.sigma);
        let ok = match formulation {
            Formulation::Combined => g > 0.0 || s > 0.0,
            Formulation::BabenkoGravity | Formulation::BabGProjected => g > 0.0 && s == 0.0,
            Formulation::BabenkoCapillary => g == 0.0 && s > 0.0,
            Formulation::SolitonSystem => g > 0.0,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "formulation {} is incompatible with g = {g}, sigma = {s}",
                formulation.name()
            )));
        }
        Ok(Self {
            grid,
            params,
            formulation,
            constraint,
            harmonic: 1,
            convention: CapillaryConvention::Canonical,
            newton: NewtonSettings::default(),
        })
    }

    pub fn with_harmonic(mut self, k: usize) -> Result<Self> {
        if k == 0 || k >= self.grid.n() / 4 {
            return Err(Error::InvalidArgument(format!("harmonic {k} out of range")));
        }
        self.harmonic = k;
        Ok(self)
    }

    pub fn with_convention(mut self, c: CapillaryConvention) -> Self {
        self.convention = c;
        self
    }

    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI * self.harmonic as f64 / self.grid.period()
    }

    /// Linear phase speed squared of the base harmonic for this formulation.
    pub fn linear_speed_squared(&self) -> f64 {
        let k = self.base_wavenumber();
        let p = &self.params;
        match self.formulation {
            Formulation::BabenkoCapillary => p.sigma * k / (2.0 * self.convention.factor()),
            _ => p.g / k + p.sigma * k,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.newton.tol.unwrap_or(1e-11 * (self.grid.n() as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub w: HoloField,
    pub q: HoloField,
    pub c: f64,
    pub c2: f64,
    /// Bernoulli constant or level, depending on the formulation.
    pub gauge: f64,
    pub residual_l2: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub steepness: f64,
    pub crest: Option<CrestDiagnostics>,
    pub hamiltonian: f64,
    pub momentum: f64,
    /// Cosine amplitudes of `Im W` at multiples of the base harmonic.
    pub amplitudes: Vec<f64>,
}

/// Unknown layout: `[a_1..a_K, c², gauge?]`.
struct Solver<'a> {
    p: &'a TravelingProblem,
    modes: usize,
    gauge: Gauge,
    c2_fixed: f64,
}

struct Eval {
    eqs: Vec<f64>,
    field: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(p: &'a TravelingProblem) -> Self {
        let modes = (p.grid.n() / 2 - 1) / p.harmonic;
        Self {
            p,
            modes,
            gauge: p.formulation.gauge(),
            c2_fixed: p.params.c * p.params.c,
        }
    }

    fn len(&self) -> usize {
        self.modes + 1 + usize::from(self.gauge != Gauge::None)
    }

    fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * (m * self.p.harmonic) as f64 / self.p.grid.period()
    }

    /// `W = Σ a_m i e^{-iκ_m α}`, plus `i·level`.
    fn surface(&self, a: &[f64], level: f64) -> Vec<C64> {
        let g = &self.p.grid;
        let mut coeffs = vec![C64::new(0.0, 0.0); g.n()];
        for (m, am) in a.iter().enumerate() {
            coeffs[g.slot(-(((m + 1) * self.p.harmonic) as i64))] = C64::new(0.0, *am);
        }
        coeffs[0] = C64::new(0.0, level);
        g.inverse(&coeffs)
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], f64, f64) {
        let a = &x[..self.modes];
        let c2 = x[self.modes];
        let gauge = if self.gauge == Gauge::None { 0.0 } else { x[self.modes + 1] };
        (a, c2, gauge)
    }

    fn real_field(&self, a: &[f64], c2: f64, gauge: f64) -> Result<Vec<f64>> {
        let grid = &self.p.grid;
        if c2 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "negative c² = {c2:.3e} during Newton iteration"
            )));
        }
        let params = PhysParams {
            c: c2.sqrt(),
            ..self.p.params
        };
        match self.p.formulation {
            Formulation::Combined => {
                let w = self.surface(a, 0.0);
                Ok(combined_samples(grid, &w, &params)?.into_iter().map(|r| r - gauge).collect())
            }
            Formulation::BabenkoGravity => {
                let w = self.surface(a, gauge);
                Ok(babenko_gravity_samples(grid, &w, &params).into_iter().map(|z| z.im).collect())
            }
            Formulation::BabGProjected => {
                let w = self.surface(a, gauge);
                let hw = HoloField::project(&ComplexField::new(grid, w)?);
                Ok(residual_bab_g(&hw, &params)?.values.into_iter().map(|z| z.im).collect())
            }
            Formulation::SolitonSystem => {
                let w = self.surface(a, gauge);
                let q: Vec<C64> = w.iter().map(|z| z * params.c).collect();
                let (_, s2) = soliton_samples(grid, &w, &q, &params)?;
                Ok(s2.into_iter().map(|z| z.re).collect())
            }
            Formulation::BabenkoCapillary => {
                let w = self.surface(a, 0.0);
                let bw = grid.deriv(&w);
                let r = capillary_samples(grid, &bw, &params, self.p.convention)?;
                Ok(grid.proj(&r).into_iter().map(|z| z.re).collect())
            }
        }
    }

    fn eval(&self, x: &[f64]) -> Result<Eval> {
        let (a, c2, gauge) = self.split(x);
        let c2 = match self.p.constraint {
            Constraint::FixedSpeed => self.c2_fixed,
            _ => c2,
        };
        let field = self.real_field(a, c2, gauge)?;
        let coeffs = self.p.grid.forward_real(&field);
        let mut eqs = Vec::with_capacity(self.len());
        if self.gauge != Gauge::None {
            eqs.push(coeffs[0].re);
        }
        for m in 1..=self.modes {
            eqs.push(2.0 * coeffs[m * self.p.harmonic].re);
        }
        eqs.push(match self.p.constraint {
            Constraint::FixedAmplitude(amp) => a[0] - amp,
            Constraint::FixedSpeed => x[self.modes] - self.c2_fixed,
            Constraint::Steepness(s) => 2.0 * a.iter().step_by(2).sum::<f64>() - s * self.p.grid.period(),
        });
        Ok(Eval { eqs, field })
    }

    /// Block-diagonal approximation of the Jacobian inverse, bordered by
    /// the `(c², constraint)` pair.
    fn precondition(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (a, c2, _) = self.split(x);
        let p = &self.p.params;
        let off = usize::from(self.gauge != Gauge::None);
        let f = self.p.convention.factor();
        let mut z = vec![0.0; self.len()];
        let mut u = vec![0.0; self.modes];
        let mut v = vec![0.0; self.modes];
        for m in 0..self.modes {
            let k = self.wavenumber(m + 1);
            let (d, db) = match self.p.formulation {
                Formulation::Combined | Formulation::SolitonSystem => (p.g + p.sigma * k * k - c2 * k, -k),
                Formulation::BabenkoGravity | Formulation::BabGProjected => (p.g - c2 * k, -k),
                Formulation::BabenkoCapillary => ((p.sigma * k * k - 2.0 * f * c2 * k) / 2.0, -f * k),
            };
            let scale = p.g + p.sigma * k * k + c2.abs() * k;
            let floor = 1e-8 * scale.max(1e-300);
            let d = if d.abs() < floor {
                floor.copysign(if d == 0.0 { 1.0 } else { d })
            } else {
                d
            };
            u[m] = y[off + m] / d;
            if m == 0 {
                v[m] = db * a[0] / d;
            }
        }
        let h = y[off + self.modes];
        let (ca_u, ca_v, cc) = match self.p.constraint {
            Constraint::FixedAmplitude(_) => (u[0], v[0], 0.0),
            Constraint::FixedSpeed => (0.0, 0.0, 1.0),
            Constraint::Steepness(_) => (
                2.0 * u.iter().step_by(2).sum::<f64>(),
                2.0 * v.iter().step_by(2).sum::<f64>(),
                0.0,
            ),
        };
        let den = ca_v - cc;
        let gamma = if den.abs() < 1e-300 { 0.0 } else { (ca_u - h) / den };
        for m in 0..self.modes {
            z[m] = u[m] - v[m] * gamma;
        }
        z[self.modes] = gamma;
        if self.gauge != Gauge::None {
            let gd = match self.gauge {
                Gauge::Bernoulli => -1.0,
                _ => p.g,
            };
            z[self.modes + 1] = y[0] / gd;
        }
        z
    }

    fn initial(&self, guess: &HoloField) -> Vec<f64> {
        let g = &self.p.grid;
        let im: Vec<f64> = guess.values().iter().map(|z| z.im).collect();
        let coeffs = g.forward_real(&im);
        let mut x = vec![0.0; self.len()];
        for m in 0..self.modes {
            x[m] = 2.0 * coeffs[(m + 1) * self.p.harmonic].re;
        }
        let c2 = if self.p.params.c != 0.0 {
            self.p.params.c * self.p.params.c
        } else {
            self.p.linear_speed_squared()
        };
        x[self.modes] = match self.p.constraint {
            Constraint::FixedSpeed => self.c2_fixed,
            _ => c2,
        };
        if self.gauge == Gauge::Level {
            x[self.modes + 1] = coeffs[0].re;
        }
        x
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn solve(&self, mut x: Vec<f64>) -> Result<(Vec<f64>, Eval, usize)> {
        let s = &self.p.newton;
        let tol = self.p.tolerance();
        let mut cur = self.eval(&x)?;
        for it in 0..=s.max_iter {
            let fnorm = Self::norm(&cur.eqs);
            if Self::norm(&cur.field) < tol && fnorm < tol {
                return Ok((x, cur, it));
            }
            if it == s.max_iter {
                break;
            }
            let xnorm = Self::norm(&x);
            let base = cur.eqs.clone();
            let apply = |v: &[f64]| -> Result<Vec<f64>> {
                let vn = Self::norm(v);
                if vn == 0.0 {
                    return Ok(vec![0.0; v.len()]);
                }
                let h = s.fd_step * xnorm.max(1.0) / vn;
                let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
                let fp = self.eval(&xp)?;
                Ok(fp.eqs.iter().zip(&base).map(|(a, b)| (a - b) / h).collect())
            };
            let rhs: Vec<f64> = base.iter().map(|v| -v).collect();
            let (step, _) = gmres(
                apply,
                |v| self.precondition(&x, v),
                &rhs,
                s.gmres_rtol,
                s.gmres_restart,
                s.gmres_max,
            )?;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..16 {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + lambda * b).collect();
                if let Ok(e) = self.eval(&trial) {
                    let tn = Self::norm(&e.eqs);
                    if tn.is_finite() && (tn < (1.0 - 1e-4 * lambda) * fnorm || Self::norm(&e.field) < tol) {
                        accepted = Some((trial, e));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((t, e)) => {
                    x = t;
                    cur = e;
                }
                None => {
                    return Err(Error::LineSearchFailure {
                        iteration: it,
                        residual: Self::norm(&cur.field),
                    })
                }
            }
        }
        Err(Error::MaxIterations {
            iterations: s.max_iter,
            residual: Self::norm(&cur.field),
        })
    }

    fn report(&self, x: &[f64], e: &Eval, iterations: usize, converged: bool) -> Result<SolveReport> {
        let (a, c2, gauge) = self.split(x);
        let c2 = match self.p.constraint {
            Constraint::FixedSpeed => self.c2_fixed,
            _ => c2,
        };
        let params = &self.p.params;
        let level = match self.gauge {
            Gauge::Bernoulli if params.g > 0.0 => -gauge / params.g,
            Gauge::Level => gauge,
            _ => 0.0,
        };
        let grid = &self.p.grid;
        let w = lift_level(HoloField::project(&ComplexField::new(grid, self.surface(a, 0.0))?), level);
        let c = c2.max(0.0).sqrt();
        let q = w.scale(c);
        let im: Vec<f64> = w.values().iter().map(|z| z.im).collect();
        let hi = im.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = im.iter().cloned().fold(f64::INFINITY, f64::min);
        let state = WaveState::new(w.clone(), q.clone())?;
        let phys = PhysParams { c, ..*params };
        let mut report = SolveReport {
            converged,
            c,
            c2,
            gauge,
            residual_l2: Self::norm(&e.field),
            residual_sup: e.field.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            iterations,
            steepness: (hi - lo) / grid.period(),
            crest: None,
            hamiltonian: hamiltonian(&state, &phys),
            momentum: momentum(&state),
            amplitudes: a.to_vec(),
            w,
            q,
        };
        if converged && params.sigma == 0.0 && params.g > 0.0 {
            report.crest = crest_diagnostics(&report, params).ok();
        }
        Ok(report)
    }
}

/// Add `i·level` to a holomorphic field.
fn lift_level(w: HoloField, level: f64) -> HoloField {
    let tol = w.tol();
    let mut f = w.into_field();
    for z in &mut f.values {
        z.im += level;
    }
    HoloField::project(&f).with_tolerance(tol)
}

/// Newton–Krylov solve of `problem` from `guess`.
pub fn newton_solve(problem: &TravelingProblem, guess: &HoloField) -> Result<SolveReport> {
    problem.grid.check_same(guess.grid())?;
    let s = Solver::new(problem);
    let x0 = s.initial(guess);
    let (x, e, it) = s.solve(x0)?;
    s.report(&x, &e, it, true)
}

/// Linear wave `i·a·e^{-iκα}` at the problem's base harmonic.
pub fn linear_guess(problem: &TravelingProblem, amplitude: f64) -> HoloField {
    HoloField::project(&ComplexField::mode(
        &problem.grid,
        -(problem.harmonic as i64),
        C64::new(0.0, amplitude),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    TargetReached,
    MaxSteps,
    NonConvergence(Error),
    ConformalMargin(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub reports: Vec<SolveReport>,
    pub stop: StopReason,
}

/// Amplitude solve at onset followed by steepness continuation.
pub fn continuation_run(problem: &TravelingProblem, settings: &ContinuationSettings) -> Result<Branch> {
    let mut p = problem.clone();
    p.constraint = Constraint::FixedAmplitude(settings.start_amplitude);
    p.params.c = 0.0;
    let first = {
        let s = Solver::new(&p);
        let x0 = s.initial(&linear_guess(&p, settings.start_amplitude));
        let (x, e, it) = s.solve(x0)?;
        (x.clone(), s.report(&x, &e, it, true)?)
    };
    let mut xs = vec![first.0];
    let mut reports = vec![first.1];
    let mut s_cur = reports[0].steepness;
    let mut stop = StopReason::MaxSteps;
    for _ in 0..settings.max_steps {
        if s_cur >= settings.target - 1e-14 {
            stop = StopReason::TargetReached;
            break;
        }
        let s_next = (s_cur + settings.step).min(settings.target);
        p.constraint = Constraint::Steepness(s_next);
        let solver = Solver::new(&p);
        let n = xs.len();
        let guess: Vec<f64> = if n >= 2 {
            let (s1, s0) = (reports[n - 1].steepness, reports[n - 2].steepness);
            let t = if s1 != s0 { (s_next - s1) / (s1 - s0) } else { 0.0 };
            xs[n - 1].iter().zip(&xs[n - 2]).map(|(a, b)| a + t * (a - b)).collect()
        } else {
            let scale = s_next / s_cur.max(1e-300);
            let mut g = xs[0].clone();
            for v in g.iter_mut().take(solver.modes) {
                *v *= scale;
            }
            g
        };
        match solver
            .solve(guess)
            .and_then(|(x, e, it)| Ok((x.clone(), solver.report(&x, &e, it, true)?)))
        {
            Ok((x, r)) => {
                let margin = check_conformal(&r.w, 0.0).min_real;
                s_cur = r.steepness;
                xs.push(x);
                reports.push(r);
                if margin < settings.delta_min {
                    stop = StopReason::ConformalMargin(margin);
                    break;
                }
            }
            Err(e) => {
                stop = StopReason::NonConvergence(e);
                break;
            }
        }
    }
    if stop == StopReason::MaxSteps && s_cur >= settings.target - 1e-14 {
        stop = StopReason::TargetReached;
    }
    Ok(Branch { reports, stop })
}

/// CSV with one row per branch point.
pub fn branch_csv(reports: &[SolveReport]) -> String {
    let mut out = String::from("step,c,steepness,h_max,h0,residual_l2,newton_iters,theta_fit\n");
    for (i, r) in reports.iter().enumerate() {
        let (h_max, h0, theta) = match &r.crest {
            Some(c) => (
                format!("{:.16e}", c.h_max),
                format!("{:.16e}", c.h0),
                c.theta.map(|t| format!("{t:.16e}")).unwrap_or_else(|| "smooth".into()),
            ),
            None => {
                let hm = r.w.values().iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
                (format!("{hm:.16e}"), "nan".into(), "nan".into())
            }
        };
        out.push_str(&format!(
            "{i},{:.16e},{:.16e},{h_max},{h0},{:.16e},{},{theta}\n",
            r.c, r.steepness, r.residual_l2, r.iterations
        ));
    }
    out
}
