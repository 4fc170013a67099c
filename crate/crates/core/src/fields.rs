//! Holomorphic state types and the quantities computed directly from them.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::spectral::{ComplexField, RealField, SpectralGrid, C64};

pub const DEFAULT_HOLO_TOL: f64 = 1e-10;
pub const DEFAULT_DELTA: f64 = 0.1;

/// Boundary trace of a bounded holomorphic function in the lower half plane:
/// only non-positive Fourier modes, real part of the mean zero.
///
/// An imaginary mean is allowed; it encodes the still-water level on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloField {
    field: ComplexField,
    tol: f64,
}

impl HoloField {
    /// Wrap `field`, failing if its positive-mode weight exceeds `tol` relative.
    pub fn new(field: ComplexField, tol: f64) -> Result<Self> {
        let leak = field.positive_leak();
        if leak > tol {
            return Err(Error::HolomorphyLeak { leak, tol });
        }
        let scale = field.sup_norm().max(f64::MIN_POSITIVE);
        let mean = field.mean().re.abs() / scale;
        if mean > tol {
            return Err(Error::HolomorphyLeak { leak: mean, tol });
        }
        Ok(Self { field, tol })
    }

    /// Project an arbitrary field: drops positive modes, Nyquist and the real mean.
    pub fn project(field: &ComplexField) -> Self {
        let grid = &field.grid;
        let mut values = grid.holo_part(&field.values);
        let m = values.iter().map(|z| z.re).sum::<f64>() / values.len() as f64;
        for v in &mut values {
            v.re -= m;
        }
        Self {
            field: ComplexField {
                grid: grid.clone(),
                values,
            },
            tol: DEFAULT_HOLO_TOL,
        }
    }

    /// Check leakage, then project the remainder away.
    pub fn checked_projection(field: &ComplexField, tol: f64) -> Result<(Self, f64)> {
        let leak = field.positive_leak();
        if leak > tol {
            return Err(Error::HolomorphyLeak { leak, tol });
        }
        let mut h = Self::project(field);
        h.tol = tol;
        Ok((h, leak))
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            field: ComplexField::zeros(grid),
            tol: DEFAULT_HOLO_TOL,
        }
    }

    /// Field with real part `Hρ` and imaginary part `ρ`.
    pub fn from_imaginary_part(rho: &RealField) -> Self {
        let h = rho.hilbert();
        let values = h.values.iter().zip(&rho.values).map(|(&a, &b)| C64::new(a, b)).collect();
        Self::project(&ComplexField {
            grid: rho.grid.clone(),
            values,
        })
    }

    /// Random band-limited field on modes `-max_mode..=-1`, scaled so that
    /// `sup |W_α| = slope`.
    pub fn random<R: rand::Rng + ?Sized>(grid: &SpectralGrid, rng: &mut R, max_mode: usize, slope: f64) -> Self {
        let n = grid.n();
        let max_mode = max_mode.min(n / 2 - 1);
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for j in 1..=max_mode {
            let r = rng.gen::<f64>().sqrt() / j as f64;
            let phase = rng.gen::<f64>() * std::f64::consts::TAU;
            coeffs[grid.slot(-(j as i64))] = C64::from_polar(r, phase);
        }
        let f = ComplexField::from_coefficients(grid, &coeffs);
        let s = f.derivative().sup_norm();
        let f = if s > 0.0 { f.scale(C64::new(slope / s, 0.0)) } else { f };
        Self::project(&f)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn into_field(self) -> ComplexField {
        self.field
    }

    pub fn values(&self) -> &[C64] {
        &self.field.values
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.field.grid
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn leak(&self) -> f64 {
        self.field.positive_leak()
    }

    pub fn derivative(&self) -> HoloField {
        Self {
            field: self.field.derivative(),
            tol: self.tol,
        }
    }

    pub fn scale(&self, s: f64) -> HoloField {
        Self {
            field: self.field.scale(C64::new(s, 0.0)),
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub g: f64,
    pub sigma: f64,
    pub c: f64,
}

impl PhysParams {
    pub fn new(g: f64, sigma: f64, c: f64) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidArgument(format!("gravity must be >= 0, got {g}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("surface tension must be >= 0, got {sigma}")));
        }
        if !c.is_finite() {
            return Err(Error::InvalidArgument(format!("wave speed must be finite, got {c}")));
        }
        Ok(Self { g, sigma, c })
    }

    /// Solver contexts need at least one restoring force.
    pub fn for_solver(g: f64, sigma: f64, c: f64) -> Result<Self> {
        let p = Self::new(g, sigma, c)?;
        if g == 0.0 && sigma == 0.0 {
            return Err(Error::InvalidArgument("g and sigma cannot both vanish".into()));
        }
        Ok(p)
    }
}

/// Surface `W = Z - α` and potential trace `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub w: HoloField,
    pub q: HoloField,
}

impl WaveState {
    pub fn new(w: HoloField, q: HoloField) -> Result<Self> {
        w.grid().check_same(q.grid())?;
        Ok(Self { w, q })
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            w: HoloField::zeros(grid),
            q: HoloField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.w.grid()
    }
}

/// Differentiated variables `(𝐖, R) = (W_α, Q_α/(1+W_α))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffState {
    pub w: HoloField,
    pub r: HoloField,
    /// Positive-mode weight removed when re-projecting `R`.
    pub projection_defect: f64,
}

impl DiffState {
    pub fn grid(&self) -> &SpectralGrid {
        self.w.grid()
    }

    /// `Y = 𝐖/(1+𝐖)`.
    pub fn y(&self) -> ComplexField {
        let values = self.w.values().iter().map(|w| w / (1.0 + w)).collect();
        ComplexField {
            grid: self.grid().clone(),
            values,
        }
    }

    pub fn check_nondegenerate(&self, delta: f64) -> Result<()> {
        let m = min_modulus(self.w.values());
        if m < delta {
            return Err(Error::ConformalDegenerate { min_modulus: m, delta });
        }
        Ok(())
    }
}

fn min_modulus(wa: &[C64]) -> f64 {
    wa.iter().map(|z| (1.0 + z).norm()).fold(f64::INFINITY, f64::min)
}

pub fn to_diff(s: &WaveState, delta: f64) -> Result<DiffState> {
    let grid = s.grid();
    let wa = grid.deriv(s.w.values());
    let m = min_modulus(&wa);
    if m < delta {
        return Err(Error::ConformalDegenerate { min_modulus: m, delta });
    }
    let qa = grid.deriv(s.q.values());
    let r: Vec<C64> = qa.iter().zip(&wa).map(|(q, w)| q / (1.0 + w)).collect();
    let (r, defect) = HoloField::checked_projection(&ComplexField::new(grid, r)?, s.q.tol().max(s.w.tol()))?;
    Ok(DiffState {
        w: HoloField::project(&ComplexField::new(grid, wa)?).with_tolerance(s.w.tol()),
        r,
        projection_defect: defect,
    })
}

/// Invert [`to_diff`]; the means lost by differentiation are supplied.
pub fn from_diff(d: &DiffState, w_mean: C64, q_mean: C64) -> Result<WaveState> {
    let grid = d.grid();
    let mut w = grid.antideriv(d.w.values());
    let qa: Vec<C64> = d.r.values().iter().zip(d.w.values()).map(|(r, w)| r * (1.0 + w)).collect();
    let mut q = grid.antideriv(&qa);
    for z in &mut w {
        *z += w_mean;
    }
    for z in &mut q {
        *z += q_mean;
    }
    let tol = d.w.tol();
    let (w, _) = HoloField::checked_projection(&ComplexField::new(grid, w)?, tol)?;
    let (q, _) = HoloField::checked_projection(&ComplexField::new(grid, q)?, tol)?;
    WaveState::new(w.with_tolerance(tol), q.with_tolerance(tol))
}

/// `∫ Im(Q Q̄_α) + 2σ(J^{1/2} - 1 - Re W_α) + g(|W|² - Re(W̄² W_α))`.
pub fn hamiltonian(s: &WaveState, p: &PhysParams) -> f64 {
    energy(s, p, 2.0, false)
}

/// The energy conserved by the evolution, `∫ Im(Q Q̄_α) + 4σ(J^{1/2} - 1 - Re W_α) + 2g(Im W)²(1 + Re W_α)`.
///
/// Agrees with [`hamiltonian`] when `σ = 0` and `Im W` has zero mean; the
/// potential term here does not depend on the level, which drifts in time.
pub fn conserved_energy(s: &WaveState, p: &PhysParams) -> f64 {
    energy(s, p, 4.0, true)
}

fn energy(s: &WaveState, p: &PhysParams, tension_factor: f64, physical_potential: bool) -> f64 {
    let grid = s.grid();
    let w = s.w.values();
    let q = s.q.values();
    let wa = grid.deriv(w);
    let qa = grid.deriv(q);
    let integrand: Vec<f64> = (0..grid.n())
        .map(|m| {
            let kinetic = (q[m] * qa[m].conj()).im;
            let j_half = (1.0 + wa[m]).norm();
            let tension = tension_factor * p.sigma * (j_half - 1.0 - wa[m].re);
            let pot = if physical_potential {
                2.0 * w[m].im * w[m].im * (1.0 + wa[m].re)
            } else {
                w[m].norm_sqr() - (w[m].conj() * w[m].conj() * wa[m]).re
            };
            kinetic + tension + p.g * pot
        })
        .collect();
    grid.integrate(&integrand)
}

/// `i ∫ Q̄ W_α - Q W̄_α` before taking the real part.
pub fn momentum_complex(s: &WaveState) -> C64 {
    let grid = s.grid();
    let w = s.w.values();
    let q = s.q.values();
    let wa = grid.deriv(w);
    let integrand: Vec<C64> = (0..grid.n())
        .map(|m| C64::new(0.0, 1.0) * (q[m].conj() * wa[m] - q[m] * wa[m].conj()))
        .collect();
    grid.integrate_complex(&integrand)
}

pub fn momentum(s: &WaveState) -> f64 {
    momentum_complex(s).re
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalReport {
    pub min_modulus: f64,
    pub min_real: f64,
    pub pass: bool,
}

pub fn check_conformal(w: &HoloField, delta: f64) -> ConformalReport {
    let wa = w.grid().deriv(w.values());
    let min_modulus = min_modulus(&wa);
    let min_real = wa.iter().map(|z| 1.0 + z.re).fold(f64::INFINITY, f64::min);
    ConformalReport {
        min_modulus,
        min_real,
        pass: min_modulus >= delta && min_real >= delta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resampling {
    /// Newton inversion of the trigonometric interpolant of `x(α)`.
    Spectral,
    /// Fritsch–Carlson monotone cubic through the collocation samples.
    MonotoneCubic,
}

/// Surface samples `(x(α_m), η(α_m))` with `x` strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianTrace {
    pub alpha: Vec<f64>,
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
    re_coeffs: Vec<C64>,
    im_coeffs: Vec<C64>,
    grid: SpectralGrid,
}

pub fn eulerian_trace(w: &HoloField) -> Result<EulerianTrace> {
    let grid = w.grid();
    let wa = grid.deriv(w.values());
    if let Some(index) = wa.iter().position(|z| 1.0 + z.re <= 0.0) {
        return Err(Error::NotAGraph { index });
    }
    let alpha = grid.points();
    let x: Vec<f64> = alpha.iter().zip(w.values()).map(|(a, z)| a + z.re).collect();
    let n = grid.n();
    for m in 0..n {
        let next = if m + 1 < n { x[m + 1] } else { x[0] + grid.period() };
        if next <= x[m] {
            return Err(Error::NotAGraph { index: m });
        }
    }
    let eta = w.values().iter().map(|z| z.im).collect();
    let re: Vec<f64> = w.values().iter().map(|z| z.re).collect();
    let im: Vec<f64> = w.values().iter().map(|z| z.im).collect();
    Ok(EulerianTrace {
        alpha,
        x,
        eta,
        re_coeffs: grid.forward_real(&re),
        im_coeffs: grid.forward_real(&im),
        grid: grid.clone(),
    })
}

impl EulerianTrace {
    /// `α` with `α + Re W(α) = x`.
    pub fn invert(&self, x: f64) -> f64 {
        let g = &self.grid;
        let wa_coeffs: Vec<C64> = self
            .re_coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                if g.is_nyquist(idx) {
                    C64::new(0.0, 0.0)
                } else {
                    c * C64::new(0.0, g.wavenumber(idx))
                }
            })
            .collect();
        let mut a = x - g.interpolate(&self.re_coeffs, x).re;
        for _ in 0..60 {
            let f = a + g.interpolate(&self.re_coeffs, a).re - x;
            let df = 1.0 + g.interpolate(&wa_coeffs, a).re;
            let step = f / df;
            a -= step;
            if step.abs() <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
        }
        a
    }

    /// `η` at the uniform grid points of `target` (same period).
    pub fn resample(&self, target: &SpectralGrid, method: Resampling) -> Result<RealField> {
        if (target.period() - self.grid.period()).abs() > 1e-12 * self.grid.period() {
            return Err(Error::GridMismatch);
        }
        let values = match method {
            Resampling::Spectral => target
                .points()
                .into_iter()
                .map(|xt| self.grid.interpolate(&self.im_coeffs, self.invert(xt)).re)
                .collect(),
            Resampling::MonotoneCubic => {
                let spline = MonotoneCubic::periodic(&self.x, &self.eta, self.grid.period());
                target.points().into_iter().map(|xt| spline.eval(xt)).collect()
            }
        };
        RealField::new(target, values)
    }
}

/// Fritsch–Carlson monotone piecewise cubic Hermite interpolant, periodic in `x`.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    period: f64,
}

impl MonotoneCubic {
    pub fn periodic(x: &[f64], y: &[f64], period: f64) -> Self {
        let n = x.len();
        let mut xs = x.to_vec();
        let mut ys = y.to_vec();
        xs.push(x[0] + period);
        ys.push(y[0]);
        let d: Vec<f64> = (0..n).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut m = vec![0.0; n + 1];
        for i in 0..n {
            let prev = d[(i + n - 1) % n];
            let cur = d[i];
            m[i] = if prev * cur <= 0.0 {
                0.0
            } else {
                2.0 / (1.0 / prev + 1.0 / cur)
            };
        }
        m[n] = m[0];
        Self { x: xs, y: ys, m, period }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x0 = self.x[0];
        let t = (x - x0).rem_euclid(self.period) + x0;
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k => (k - 1).min(self.x.len() - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }
}

const STATE_MAGIC: &str = "holowave-state 1";

fn hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::Parse(format!("bad hex float {s:?}: {e}")))
}

/// Text container: grid descriptor, metadata lines and the samples of `W` and `Q`
/// as raw IEEE-754 bit patterns.
pub fn write_state(s: &WaveState, meta: &[(String, String)]) -> String {
    let g = s.grid();
    let mut out = String::new();
    let _ = writeln!(out, "{STATE_MAGIC}");
    let _ = writeln!(out, "n {}", g.n());
    let _ = writeln!(out, "period {} {:.16e}", hex(g.period()), g.period());
    let _ = writeln!(out, "tol {}", hex(s.w.tol()));
    for (k, v) in meta {
        let _ = writeln!(out, "meta {k} {v}");
    }
    for (tag, f) in [("w", &s.w), ("q", &s.q)] {
        for z in f.values() {
            let _ = writeln!(out, "{tag} {} {}", hex(z.re), hex(z.im));
        }
    }
    out
}

pub fn read_state(text: &str) -> Result<(WaveState, Vec<(String, String)>)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(STATE_MAGIC) {
        return Err(Error::Parse("missing state header".into()));
    }
    let mut n = None;
    let mut period = None;
    let mut tol = DEFAULT_HOLO_TOL;
    let mut meta = Vec::new();
    let mut w = Vec::new();
    let mut q = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let mut parts = line.split_whitespace();
        let bad = || Error::Parse(format!("malformed state line {}: {line:?}", lineno + 2));
        match parts.next() {
            None => continue,
            Some("n") => n = Some(parts.next().ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())?),
            Some("period") => period = Some(unhex(parts.next().ok_or_else(bad)?)?),
            Some("tol") => tol = unhex(parts.next().ok_or_else(bad)?)?,
            Some("meta") => {
                let k = parts.next().ok_or_else(bad)?.to_string();
                let v = parts.collect::<Vec<_>>().join(" ");
                meta.push((k, v));
            }
            Some(tag @ ("w" | "q")) => {
                let re = unhex(parts.next().ok_or_else(bad)?)?;
                let im = unhex(parts.next().ok_or_else(bad)?)?;
                if tag == "w" { &mut w } else { &mut q }.push(C64::new(re, im));
            }
            Some(_) => return Err(bad()),
        }
    }
    let n = n.ok_or_else(|| Error::Parse("state has no point count".into()))?;
    let period = period.ok_or_else(|| Error::Parse("state has no period".into()))?;
    let grid = SpectralGrid::new(n, period)?;
    if w.len() != n || q.len() != n {
        return Err(Error::Parse(format!(
            "expected {n} samples per field, got {} and {}",
            w.len(),
            q.len()
        )));
    }
    let w = HoloField::new(ComplexField::new(&grid, w)?, tol)?;
    let q = HoloField::new(ComplexField::new(&grid, q)?, tol)?;
    Ok((WaveState::new(w, q)?, meta))
}
