//! Time integration of the holomorphic water-wave system.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::{conserved_energy, momentum, DiffState, HoloField, PhysParams, WaveState};
use crate::spectral::{ComplexField, SpectralGrid, C64, I};

/// Below this `min |1+W_α|` the right-hand sides refuse to evaluate.
pub const RHS_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FullRhs {
    pub w_t: HoloField,
    pub q_t: HoloField,
    /// Positive-mode weight removed from `(W_t, Q_t)` by re-projection.
    pub leak: f64,
}

fn min_modulus(wa: &[C64]) -> f64 {
    wa.iter().map(|z| (1.0 + z).norm()).fold(f64::INFINITY, f64::min)
}

fn field(grid: &SpectralGrid, v: Vec<C64>) -> ComplexField {
    ComplexField {
        grid: grid.clone(),
        values: v,
    }
}

/// `σ`-term argument `W_αα/(J^{1/2}(1+W_α))`.
fn tension_argument(wa: &[C64], waa: &[C64]) -> Vec<C64> {
    wa.iter().zip(waa).map(|(w, d)| d / ((1.0 + w).norm() * (1.0 + w))).collect()
}

/// `W_t = -F(1+W_α)`, `Q_t = -FQ_α + igW - P[|Q_α|²/J] - iσP[X - X̄]`.
pub fn rhs_full(s: &WaveState, p: &PhysParams) -> Result<FullRhs> {
    let grid = s.grid();
    let n = grid.n();
    let w = s.w.values();
    let wa = grid.deriv(w);
    let m = min_modulus(&wa);
    if m < RHS_DELTA {
        return Err(Error::ConformalDegenerate {
            min_modulus: m,
            delta: RHS_DELTA,
        });
    }
    let qa = grid.deriv(s.q.values());
    let jac: Vec<f64> = wa.iter().map(|z| (1.0 + z).norm_sqr()).collect();
    let f = grid.proj(&(0..n).map(|k| (qa[k] - qa[k].conj()) / jac[k]).collect::<Vec<_>>());
    let kin = grid.proj(&(0..n).map(|k| C64::new(qa[k].norm_sqr() / jac[k], 0.0)).collect::<Vec<_>>());
    let ten = if p.sigma != 0.0 {
        let x = tension_argument(&wa, &grid.deriv(&wa));
        grid.proj(&x.iter().map(|z| z - z.conj()).collect::<Vec<_>>())
    } else {
        vec![C64::new(0.0, 0.0); n]
    };
    let w_t: Vec<C64> = (0..n).map(|k| -f[k] * (1.0 + wa[k])).collect();
    let q_t: Vec<C64> = (0..n)
        .map(|k| -f[k] * qa[k] + I * p.g * w[k] - kin[k] - I * p.sigma * ten[k])
        .collect();
    let w_t = field(grid, w_t);
    let q_t = field(grid, q_t);
    let leak = w_t.positive_leak().max(q_t.positive_leak());
    Ok(FullRhs {
        w_t: HoloField::project(&w_t),
        q_t: HoloField::project(&q_t),
        leak,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffRhs {
    pub w_t: ComplexField,
    pub r_t: ComplexField,
    /// Advection velocity `b = 2 Re P[Q_α/J]`.
    pub b: Vec<f64>,
    /// Frequency shift `a = i(P̄[R̄R_α] - P[RR̄_α])`.
    pub a: Vec<f64>,
    pub m: ComplexField,
    /// Sup-difference of the two expressions for `M`.
    pub m_defect: f64,
}

fn sup(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Right-hand sides in the differentiated variables `(𝐖, R)`.
///
/// The `R` equation is written so that it is the exact time derivative of
/// `Q_α/(1+W_α)` under [`rhs_full`]: `R_t = -bR_α - i(g+a)/(1+𝐖) + ig - iσP[X - X̄]_α/(1+𝐖)`
/// with `X = 𝐖_α/(J^{1/2}(1+𝐖))`.
pub fn rhs_diff(d: &DiffState, p: &PhysParams) -> Result<DiffRhs> {
    d.check_nondegenerate(RHS_DELTA)?;
    let grid = d.grid();
    let n = grid.n();
    let bw = d.w.values();
    let r = d.r.values();
    let bwa = grid.deriv(bw);
    let ra = grid.deriv(r);
    let conj = |v: &[C64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();

    // b = P[Q_α/J] + P̄[Q̄_α/J], Q_α/J = R/(1+𝐖̄)
    let qj: Vec<C64> = (0..n).map(|k| r[k] / (1.0 + bw[k].conj())).collect();
    let pb = grid.proj(&qj);
    let pbb = grid.proj_bar(&conj(&qj));
    let bc: Vec<C64> = (0..n).map(|k| pb[k] + pbb[k]).collect();
    let b_scale = sup(&bc).max(1.0);
    let b_im = bc.iter().fold(0.0, |m: f64, z| m.max(z.im.abs()));
    if b_im > 1e-10 * b_scale {
        return Err(Error::RealityViolation { what: "b", value: b_im });
    }
    let b: Vec<f64> = bc.iter().map(|z| z.re).collect();

    let rbar = conj(r);
    let rabar = conj(&ra);
    let t1 = grid.proj_bar(&(0..n).map(|k| rbar[k] * ra[k]).collect::<Vec<_>>());
    let t2 = grid.proj(&(0..n).map(|k| r[k] * rabar[k]).collect::<Vec<_>>());
    let ac: Vec<C64> = (0..n).map(|k| I * (t1[k] - t2[k])).collect();
    let a_im = ac.iter().fold(0.0, |m: f64, z| m.max(z.im.abs()));
    if a_im > 1e-10 * sup(&ac).max(1.0) {
        return Err(Error::RealityViolation { what: "a", value: a_im });
    }
    let a: Vec<f64> = ac.iter().map(|z| z.re).collect();

    let bc_real: Vec<C64> = b.iter().map(|&x| C64::new(x, 0.0)).collect();
    let b_a = grid.deriv(&bc_real);
    let m1: Vec<C64> = (0..n)
        .map(|k| ra[k] / (1.0 + bw[k].conj()) + rabar[k] / (1.0 + bw[k]) - b_a[k])
        .collect();
    let y: Vec<C64> = bw.iter().map(|z| z / (1.0 + z)).collect();
    let ya = grid.deriv(&y);
    let ybar = conj(&y);
    let yabar = conj(&ya);
    let u = grid.proj_bar(&(0..n).map(|k| rbar[k] * ya[k] - ra[k] * ybar[k]).collect::<Vec<_>>());
    let v = grid.proj(&(0..n).map(|k| r[k] * yabar[k] - rabar[k] * y[k]).collect::<Vec<_>>());
    let m2: Vec<C64> = (0..n).map(|k| u[k] + v[k]).collect();
    let m_defect = (0..n).fold(0.0, |m: f64, k| m.max((m1[k] - m2[k]).norm()));
    if m_defect > 1e-10 * sup(&m1).max(1.0) {
        return Err(Error::IdentityDefect {
            what: "M",
            value: m_defect,
        });
    }

    let w_t: Vec<C64> = (0..n)
        .map(|k| -b[k] * bwa[k] - (1.0 + bw[k]) * ra[k] / (1.0 + bw[k].conj()) + (1.0 + bw[k]) * m1[k])
        .collect();
    let ten = if p.sigma != 0.0 {
        let x = tension_argument(bw, &bwa);
        let px = grid.proj(&x.iter().map(|z| z - z.conj()).collect::<Vec<_>>());
        grid.deriv(&px)
    } else {
        vec![C64::new(0.0, 0.0); n]
    };
    let r_t: Vec<C64> = (0..n)
        .map(|k| {
            let z = 1.0 + bw[k];
            -b[k] * ra[k] - I * (p.g + a[k]) / z + I * p.g - I * p.sigma * ten[k] / z
        })
        .collect();
    Ok(DiffRhs {
        w_t: field(grid, w_t),
        r_t: field(grid, r_t),
        b,
        a,
        m: field(grid, m1),
        m_defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    None,
    TwoThirds,
    /// `exp(-36 (|j|/(n/2))^36)`.
    HouLi36,
}

impl std::str::FromStr for Filter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Filter::None),
            "two-thirds" => Ok(Filter::TwoThirds),
            "houli36" => Ok(Filter::HouLi36),
            _ => Err(Error::Config(format!("unknown filter {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveSettings {
    pub dt: f64,
    pub steps: usize,
    /// Record a trace sample every this many steps.
    pub sample_every: usize,
    pub filter: Filter,
    /// Abort when `sup |W|` or `sup |Q|` exceeds this.
    pub blowup_bound: f64,
    /// Abort when `min |1+W_α|` drops below this.
    pub delta: f64,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            steps: 100,
            sample_every: 1,
            filter: Filter::HouLi36,
            blowup_bound: 1e6,
            delta: RHS_DELTA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub hamiltonian: f64,
    pub momentum: f64,
    pub leak: f64,
    pub min_jac: f64,
    pub sup_w: f64,
    pub sup_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub samples: Vec<TraceSample>,
    pub final_state: WaveState,
}

impl EvolutionTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,H,M,leak,min_jac,sup_W,sup_Q\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.hamiltonian, s.momentum, s.leak, s.min_jac, s.sup_w, s.sup_q
            );
        }
        out
    }
}

/// Largest stable RK4 step for the stiffest resolved linear mode.
pub fn max_stable_dt(grid: &SpectralGrid, p: &PhysParams) -> f64 {
    let k = grid.max_wavenumber();
    let omega = (p.g * k + p.sigma * k * k * k).sqrt();
    if omega == 0.0 {
        f64::INFINITY
    } else {
        2.0 / omega
    }
}

fn apply_filter(grid: &SpectralGrid, v: &[C64], f: Filter) -> Vec<C64> {
    match f {
        Filter::None => v.to_vec(),
        Filter::TwoThirds => grid.truncate_two_thirds(v),
        Filter::HouLi36 => grid.exp_filter(v),
    }
}

fn axpy(base: &WaveState, k: &FullRhs, h: f64) -> WaveState {
    let grid = base.grid();
    let w: Vec<C64> = base.w.values().iter().zip(k.w_t.values()).map(|(a, b)| a + h * b).collect();
    let q: Vec<C64> = base.q.values().iter().zip(k.q_t.values()).map(|(a, b)| a + h * b).collect();
    WaveState {
        w: HoloField::project(&field(grid, w)).with_tolerance(base.w.tol()),
        q: HoloField::project(&field(grid, q)).with_tolerance(base.q.tol()),
    }
}

fn sample(t: f64, s: &WaveState, p: &PhysParams, leak: f64) -> TraceSample {
    let wa = s.grid().deriv(s.w.values());
    TraceSample {
        t,
        hamiltonian: conserved_energy(s, p),
        momentum: momentum(s),
        leak,
        min_jac: min_modulus(&wa),
        sup_w: s.w.field().sup_norm(),
        sup_q: s.q.field().sup_norm(),
    }
}

/// One classical RK4 step followed by the filter; returns the largest stage leakage.
pub fn rk4_step(s: &WaveState, p: &PhysParams, dt: f64, filter: Filter) -> Result<(WaveState, f64)> {
    let k1 = rhs_full(s, p)?;
    let k2 = rhs_full(&axpy(s, &k1, dt / 2.0), p)?;
    let k3 = rhs_full(&axpy(s, &k2, dt / 2.0), p)?;
    let k4 = rhs_full(&axpy(s, &k3, dt), p)?;
    let grid = s.grid();
    let combine = |base: &[C64], a: &[C64], b: &[C64], c: &[C64], d: &[C64]| -> Vec<C64> {
        let v: Vec<C64> = (0..base.len())
            .map(|i| base[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect();
        apply_filter(grid, &v, filter)
    };
    let w = combine(
        s.w.values(),
        k1.w_t.values(),
        k2.w_t.values(),
        k3.w_t.values(),
        k4.w_t.values(),
    );
    let q = combine(
        s.q.values(),
        k1.q_t.values(),
        k2.q_t.values(),
        k3.q_t.values(),
        k4.q_t.values(),
    );
    let leak = k1.leak.max(k2.leak).max(k3.leak).max(k4.leak);
    Ok((
        WaveState {
            w: HoloField::project(&field(grid, w)).with_tolerance(s.w.tol()),
            q: HoloField::project(&field(grid, q)).with_tolerance(s.q.tol()),
        },
        leak,
    ))
}

pub fn evolve(s0: &WaveState, p: &PhysParams, settings: &EvolveSettings) -> Result<EvolutionTrace> {
    let max = max_stable_dt(s0.grid(), p);
    if !(settings.dt > 0.0) || settings.dt > max {
        return Err(Error::CflViolation { dt: settings.dt, max });
    }
    let every = settings.sample_every.max(1);
    let mut s = s0.clone();
    let mut samples = vec![sample(0.0, &s, p, s.w.leak().max(s.q.leak()))];
    let mut leak = 0.0f64;
    for step in 1..=settings.steps {
        let (next, l) = rk4_step(&s, p, settings.dt, settings.filter)?;
        s = next;
        leak = leak.max(l);
        let t = step as f64 * settings.dt;
        let sup = s.w.field().sup_norm().max(s.q.field().sup_norm());
        if !sup.is_finite() || sup > settings.blowup_bound {
            return Err(Error::BlowupDetected { time: t, sup });
        }
        if step % every == 0 || step == settings.steps {
            let smp = sample(t, &s, p, leak);
            if smp.min_jac < settings.delta {
                return Err(Error::ConformalDegenerate {
                    min_modulus: smp.min_jac,
                    delta: settings.delta,
                });
            }
            samples.push(smp);
            leak = 0.0;
        }
    }
    Ok(EvolutionTrace { samples, final_state: s })
}

/// Angular frequency of a sampled single-frequency signal from the
/// three-term recurrence `s(t+τ) + s(t-τ) = 2cos(ωτ) s(t)`.
pub fn fit_frequency(signal: &[f64], tau: f64) -> Result<f64> {
    if signal.len() < 3 {
        return Err(Error::FitUnreliable("need at least three samples".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 1..signal.len() - 1 {
        num += signal[t] * (signal[t + 1] + signal[t - 1]);
        den += signal[t] * signal[t];
    }
    if den == 0.0 {
        return Err(Error::FitUnreliable("signal is identically zero".into()));
    }
    let c = num / (2.0 * den);
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::FitUnreliable(format!("recurrence coefficient {c} outside [-1, 1]")));
    }
    Ok(c.acos() / tau)
}
