//! Periodic Fourier calculus on an equispaced collocation grid.
//!
//! Coefficients are normalized so that `f(α) = Σ_j f̂_j exp(i κ_j α)` with
//! `κ_j = 2πj/L` and `j ∈ [-n/2, n/2)`. The Nyquist mode `j = -n/2` has no
//! partner of opposite sign, so the odd multipliers (derivative, Hilbert
//! transform) annihilate it and the projector assigns it the same weight as
//! the zero mode. With that choice `P = (I - iH)/2` and `P + P̄ = I` hold
//! exactly on every grid vector.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// Equispaced periodic grid with cached transform plans.
#[derive(Clone)]
pub struct SpectralGrid {
    n: usize,
    period: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.period.to_bits() == other.period.to_bits()
    }
}

impl SpectralGrid {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 16, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        let (forward, inverse) = {
            let mut p = planner().lock().expect("fft planner poisoned");
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        };
        Ok(Self {
            n,
            period,
            forward,
            inverse,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn point(&self, m: usize) -> f64 {
        m as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.point(m)).collect()
    }

    /// Signed mode index of storage slot `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Storage slot of signed mode `j`.
    pub fn slot(&self, j: i64) -> usize {
        j.rem_euclid(self.n as i64) as usize
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.n / 2
    }

    pub fn wavenumber_of_mode(&self, j: i64) -> f64 {
        2.0 * PI * j as f64 / self.period
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.wavenumber_of_mode(self.mode(idx))
    }

    /// Largest resolved wavenumber `πn/L`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.n as f64 / self.period
    }

    pub fn check_same(&self, other: &SpectralGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Forward transform normalized by `1/n`.
    pub fn forward(&self, values: &[C64]) -> Vec<C64> {
        assert_eq!(values.len(), self.n, "sample count does not match grid");
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<C64> {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.forward(&v)
    }

    pub fn inverse(&self, coeffs: &[C64]) -> Vec<C64> {
        assert_eq!(coeffs.len(), self.n, "coefficient count does not match grid");
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf
    }

    /// Multiply coefficient `j` by `symbol(j, κ_j)`.
    pub fn apply_symbol(&self, values: &[C64], symbol: impl Fn(i64, f64) -> C64) -> Vec<C64> {
        let mut c = self.forward(values);
        for (idx, v) in c.iter_mut().enumerate() {
            let j = self.mode(idx);
            *v *= symbol(j, self.wavenumber_of_mode(j));
        }
        self.inverse(&c)
    }

    fn apply_real_symbol(&self, values: &[C64], symbol: impl Fn(i64, f64) -> f64) -> Vec<C64> {
        self.apply_symbol(values, |j, k| C64::new(symbol(j, k), 0.0))
    }

    pub(crate) fn deriv(&self, v: &[C64]) -> Vec<C64> {
        let nyq = -(self.n as i64) / 2;
        self.apply_symbol(v, |j, k| if j == nyq { C64::new(0.0, 0.0) } else { C64::new(0.0, k) })
    }

    pub(crate) fn deriv_real(&self, v: &[f64]) -> Vec<f64> {
        let c: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.deriv(&c).into_iter().map(|z| z.re).collect()
    }

    pub(crate) fn hilbert(&self, v: &[C64]) -> Vec<C64> {
        let nyq = -(self.n as i64) / 2;
        self.apply_symbol(v, |j, _| {
            if j == 0 || j == nyq {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, -(j.signum() as f64))
            }
        })
    }

    pub(crate) fn hilbert_real(&self, v: &[f64]) -> Vec<f64> {
        let c: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.hilbert(&c).into_iter().map(|z| z.re).collect()
    }

    pub(crate) fn proj(&self, v: &[C64]) -> Vec<C64> {
        let nyq = -(self.n as i64) / 2;
        self.apply_real_symbol(v, |j, _| {
            if j == 0 || j == nyq {
                0.5
            } else if j < 0 {
                1.0
            } else {
                0.0
            }
        })
    }

    pub(crate) fn proj_bar(&self, v: &[C64]) -> Vec<C64> {
        let nyq = -(self.n as i64) / 2;
        self.apply_real_symbol(v, |j, _| {
            if j == 0 || j == nyq {
                0.5
            } else if j > 0 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Mean-preserving holomorphic part: keeps `j <= 0`, drops `j > 0` and Nyquist.
    pub(crate) fn holo_part(&self, v: &[C64]) -> Vec<C64> {
        let nyq = -(self.n as i64) / 2;
        self.apply_real_symbol(v, |j, _| if j > 0 || j == nyq { 0.0 } else { 1.0 })
    }

    /// Mean-zero antiderivative; the Nyquist mode is dropped.
    pub(crate) fn antideriv(&self, v: &[C64]) -> Vec<C64> {
        let nyq = -(self.n as i64) / 2;
        self.apply_symbol(v, |j, k| {
            if j == 0 || j == nyq {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, -1.0 / k)
            }
        })
    }

    pub(crate) fn truncate_two_thirds(&self, v: &[C64]) -> Vec<C64> {
        let cut = self.n as f64 / 3.0;
        self.apply_real_symbol(v, |j, _| if (j.abs() as f64) < cut { 1.0 } else { 0.0 })
    }

    /// Order-36 exponential filter `exp(-36 (|j|/(n/2))^36)`.
    pub(crate) fn exp_filter(&self, v: &[C64]) -> Vec<C64> {
        let half = (self.n / 2) as f64;
        self.apply_real_symbol(v, |j, _| (-36.0 * (j.abs() as f64 / half).powi(36)).exp())
    }

    /// Trapezoid quadrature over one period (spectrally exact for band-limited data).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.spacing()
    }

    pub fn integrate_complex(&self, values: &[C64]) -> C64 {
        values.iter().sum::<C64>() * self.spacing()
    }

    /// `∫ conj(a) b dα`.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * self.spacing()
    }

    pub fn l2(&self, values: &[C64]) -> f64 {
        (values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()).sqrt()
    }

    /// Evaluate the trigonometric interpolant of `coeffs` at an arbitrary point.
    pub fn interpolate(&self, coeffs: &[C64], x: f64) -> C64 {
        let base = C64::from_polar(1.0, 2.0 * PI * x / self.period);
        let half = self.n / 2;
        let mut acc = coeffs[0];
        let mut pos = C64::new(1.0, 0.0);
        for j in 1..half {
            pos *= base;
            acc += coeffs[j] * pos + coeffs[self.n - j] * pos.conj();
        }
        // Nyquist: symmetric cosine reconstruction keeps real data real.
        let nyq = C64::from_polar(1.0, PI * self.n as f64 * x / self.period);
        acc + coeffs[half] * C64::new(nyq.re, 0.0)
    }

    /// Dyadic blocks `k` whose range `[2^k, 2^{k+1})` meets the resolved wavenumbers.
    pub fn dyadic_range(&self) -> (i32, i32) {
        let lo = (2.0 * PI / self.period).log2().floor() as i32;
        let hi = self.max_wavenumber().log2().floor() as i32;
        (lo, hi)
    }
}

/// Real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: SpectralGrid,
    pub values: Vec<f64>,
}

/// Complex samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: SpectralGrid,
    pub values: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dealias {
    None,
    TwoThirds,
}

fn in_block(k: f64, block: i32) -> bool {
    let lo = 2f64.powi(block);
    k.abs() >= lo && k.abs() < 2.0 * lo
}

impl RealField {
    pub fn new(grid: &SpectralGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.n()],
        }
    }

    pub fn from_fn(grid: &SpectralGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.points().into_iter().map(f).collect(),
        }
    }

    pub fn coefficients(&self) -> Vec<C64> {
        self.grid.forward_real(&self.values)
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn hilbert(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.grid.hilbert_real(&self.values),
        }
    }

    pub fn derivative(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.grid.deriv_real(&self.values),
        }
    }

    pub fn product(&self, other: &RealField, dealias: Dealias) -> Result<RealField> {
        let p = self.to_complex().product(&other.to_complex(), dealias)?;
        Ok(p.re())
    }

    pub fn dyadic_block(&self, k: i32) -> RealField {
        self.to_complex().dyadic_block(k).re()
    }

    pub fn besov_half_norm(&self) -> f64 {
        self.to_complex().besov_half_norm()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|x| x * x).sum::<f64>() * self.grid.spacing()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl ComplexField {
    pub fn new(grid: &SpectralGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![C64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: &SpectralGrid, f: impl Fn(f64) -> C64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.points().into_iter().map(f).collect(),
        }
    }

    pub fn from_coefficients(grid: &SpectralGrid, coeffs: &[C64]) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.inverse(coeffs),
        }
    }

    /// Single Fourier mode `amp · exp(i κ_j α)`.
    pub fn mode(grid: &SpectralGrid, j: i64, amp: C64) -> Self {
        let k = grid.wavenumber_of_mode(j);
        Self::from_fn(grid, |a| amp * C64::from_polar(1.0, k * a))
    }

    pub fn coefficients(&self) -> Vec<C64> {
        self.grid.forward(&self.values)
    }

    fn with(&self, values: Vec<C64>) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn re(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z.re).collect(),
        }
    }

    pub fn im(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z.im).collect(),
        }
    }

    pub fn conj(&self) -> ComplexField {
        self.with(self.values.iter().map(|z| z.conj()).collect())
    }

    pub fn scale(&self, s: C64) -> ComplexField {
        self.with(self.values.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(&other.grid)?;
        Ok(self.with(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(&other.grid)?;
        Ok(self.with(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect()))
    }

    pub fn hilbert(&self) -> ComplexField {
        self.with(self.grid.hilbert(&self.values))
    }

    pub fn project_p(&self) -> ComplexField {
        self.with(self.grid.proj(&self.values))
    }

    pub fn project_p_bar(&self) -> ComplexField {
        self.with(self.grid.proj_bar(&self.values))
    }

    pub fn derivative(&self) -> ComplexField {
        self.with(self.grid.deriv(&self.values))
    }

    /// Pointwise product, optionally truncated by the 2/3 rule.
    pub fn product(&self, other: &ComplexField, dealias: Dealias) -> Result<ComplexField> {
        self.grid.check_same(&other.grid)?;
        let p: Vec<C64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(match dealias {
            Dealias::None => self.with(p),
            Dealias::TwoThirds => self.with(self.grid.truncate_two_thirds(&p)),
        })
    }

    /// Sharp dyadic block: modes with `2^k <= |κ| < 2^{k+1}`.
    pub fn dyadic_block(&self, k: i32) -> ComplexField {
        self.with(self.grid.apply_symbol(&self.values, |_, kap| {
            if in_block(kap, k) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// `Σ_k 2^{k/2} ||P_k f||_{L²}` over the nonempty sharp blocks.
    pub fn besov_half_norm(&self) -> f64 {
        let c = self.coefficients();
        let (lo, hi) = self.grid.dyadic_range();
        let l = self.grid.period();
        (lo..=hi)
            .map(|k| {
                let e: f64 = c
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| in_block(self.grid.wavenumber(*idx), k))
                    .map(|(_, z)| z.norm_sqr())
                    .sum();
                2f64.powf(k as f64 / 2.0) * (l * e).sqrt()
            })
            .sum()
    }

    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.l2(&self.values)
    }

    /// Same norm computed from coefficients (Parseval).
    pub fn spectral_l2_norm(&self) -> f64 {
        let e: f64 = self.coefficients().iter().map(|z| z.norm_sqr()).sum();
        (self.grid.period() * e).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Relative weight of strictly positive modes and the Nyquist mode.
    pub fn positive_leak(&self) -> f64 {
        let c = self.coefficients();
        let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let bad: f64 = c
            .iter()
            .enumerate()
            .filter(|(idx, _)| self.grid.mode(*idx) > 0 || self.grid.is_nyquist(*idx))
            .map(|(_, z)| z.norm_sqr())
            .sum();
        (bad / total).sqrt()
    }

    /// Translate by `s`: returns `f(α - s)`.
    pub fn translate(&self, s: f64) -> ComplexField {
        let nyq = -(self.grid.n() as i64) / 2;
        self.with(self.grid.apply_symbol(&self.values, |j, k| {
            if j == nyq {
                C64::new((k * s).cos(), 0.0)
            } else {
                C64::from_polar(1.0, -k * s)
            }
        }))
    }
}

/// Base profile of a smooth monotone step from 0 to 1 on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffProfile {
    /// `(1 + erf(s (t - 1/2)))/2`.
    Erf { steepness: f64 },
    /// Compactly supported `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`.
    SmoothStep,
}

impl CutoffProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            CutoffProfile::Erf { steepness } => 0.5 * (1.0 + libm::erf(steepness * (t - 0.5))),
            CutoffProfile::SmoothStep => {
                if t <= 0.0 {
                    0.0
                } else if t >= 1.0 {
                    1.0
                } else {
                    let a = (-1.0 / t).exp();
                    let b = (-1.0 / (1.0 - t)).exp();
                    a / (a + b)
                }
            }
        }
    }

    pub fn slope(&self, t: f64) -> f64 {
        match *self {
            CutoffProfile::Erf { steepness } => {
                let z = steepness * (t - 0.5);
                steepness * (-z * z).exp() / PI.sqrt()
            }
            CutoffProfile::SmoothStep => {
                if t <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    let a = (-1.0 / t).exp();
                    let b = (-1.0 / (1.0 - t)).exp();
                    let da = a / (t * t);
                    let db = -b / ((1.0 - t) * (1.0 - t));
                    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
                }
            }
        }
    }

    /// `sup |χ'|` of the base profile.
    pub fn max_slope(&self) -> f64 {
        match *self {
            CutoffProfile::Erf { steepness } => steepness / PI.sqrt(),
            CutoffProfile::SmoothStep => (0..=2000).map(|i| self.slope(i as f64 / 2000.0)).fold(0.0, f64::max),
        }
    }
}

/// Family `χ_r(α) = χ(α/r)` embedded on the torus: a rise of width `r`
/// centred at `α = 0` and a mirrored fall centred at `α = L/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFamily {
    pub profile: CutoffProfile,
}

impl Default for CutoffFamily {
    fn default() -> Self {
        Self {
            profile: CutoffProfile::Erf { steepness: 4.0 },
        }
    }
}

impl CutoffFamily {
    fn wrap(alpha: f64, period: f64) -> f64 {
        (alpha + period / 4.0).rem_euclid(period) - period / 4.0
    }

    fn check_radius(r: f64, period: f64) -> Result<()> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff scale must be positive, got {r}")));
        }
        if r > period / 8.0 {
            return Err(Error::InvalidArgument(format!(
                "cutoff scale {r} exceeds L/8 = {}; transitions would overlap",
                period / 8.0
            )));
        }
        Ok(())
    }

    pub fn value(&self, alpha: f64, r: f64, period: f64) -> f64 {
        let a = Self::wrap(alpha, period);
        self.profile.value(a / r + 0.5) * self.profile.value((period / 2.0 - a) / r + 0.5)
    }

    pub fn slope(&self, alpha: f64, r: f64, period: f64) -> f64 {
        let a = Self::wrap(alpha, period);
        let rise = a / r + 0.5;
        let fall = (period / 2.0 - a) / r + 0.5;
        (self.profile.slope(rise) * self.profile.value(fall) - self.profile.value(rise) * self.profile.slope(fall)) / r
    }

    pub fn sample(&self, grid: &SpectralGrid, r: f64) -> Result<RealField> {
        Self::check_radius(r, grid.period())?;
        Ok(RealField::from_fn(grid, |a| self.value(a, r, grid.period())))
    }

    /// Whether `α` lies on the rising half of the torus (`|α| < L/4` after wrapping).
    pub fn near_rise(alpha: f64, period: f64) -> bool {
        let a = Self::wrap(alpha, period);
        a < period / 4.0
    }

    /// Bound `C/r` on `sup |∂_α χ_r|`.
    pub fn slope_bound(&self, r: f64) -> f64 {
        self.profile.max_slope() / r
    }
}

/// `[P, χ_r] ∂_α w = P(χ_r w_α) - χ_r P(w_α)`.
pub fn commutator_p_cutoff(w: &ComplexField, r: f64, cutoffs: &CutoffFamily) -> Result<ComplexField> {
    let grid = &w.grid;
    let chi = cutoffs.sample(grid, r)?;
    let wa = grid.deriv(&w.values);
    let chi_wa: Vec<C64> = wa.iter().zip(&chi.values).map(|(z, c)| z * c).collect();
    let p_chi_wa = grid.proj(&chi_wa);
    let p_wa = grid.proj(&wa);
    let values = p_chi_wa
        .iter()
        .zip(p_wa.iter().zip(&chi.values))
        .map(|(a, (b, c))| a - b * c)
        .collect();
    Ok(ComplexField {
        grid: grid.clone(),
        values,
    })
}

/// Relative sup-norm defects of the basic operator identities on one field.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AlgebraDefects {
    /// `H²f + f` on the mean-free, Nyquist-free part of `f`.
    pub hilbert_square: f64,
    /// Same restriction: the zero and Nyquist modes carry weight 1/2.
    pub projector_idempotent: f64,
    /// `|⟨Pf, g⟩ - ⟨f, Pg⟩| / (‖f‖‖g‖)`.
    pub projector_self_adjoint: f64,
    /// `P - (I - iH)/2`.
    pub projector_split: f64,
    /// `Re h - H(Im h)` for the holomorphic part `h = Pf` without its mean.
    pub holomorphy: f64,
    /// Physical against spectral `L²` norm.
    pub parseval: f64,
}

impl AlgebraDefects {
    pub fn max(&self) -> f64 {
        [
            self.hilbert_square,
            self.projector_idempotent,
            self.projector_self_adjoint,
            self.projector_split,
            self.holomorphy,
            self.parseval,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn algebra_defects(f: &ComplexField, other: &ComplexField) -> Result<AlgebraDefects> {
    f.grid.check_same(&other.grid)?;
    let g = &f.grid;
    let nyq = -(g.n as i64) / 2;
    let core = g.apply_symbol(&f.values, |j, _| {
        if j == 0 || j == nyq {
            C64::new(0.0, 0.0)
        } else {
            C64::new(1.0, 0.0)
        }
    });
    let sup = |v: &[C64]| v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let diff = |a: &[C64], b: &[C64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    let scale = sup(&f.values).max(f64::MIN_POSITIVE);

    let hh = g.hilbert(&g.hilbert(&core));
    let neg: Vec<C64> = core.iter().map(|z| -z).collect();
    let pf = g.proj(&f.values);
    let pc = g.proj(&core);
    let ppc = g.proj(&pc);
    let split: Vec<C64> = f
        .values
        .iter()
        .zip(g.hilbert(&f.values))
        .map(|(v, h)| 0.5 * (v - I * h))
        .collect();
    let lhs = g.inner(&pf, &other.values);
    let rhs = g.inner(&f.values, &g.proj(&other.values));
    let norms = (g.l2(&f.values) * g.l2(&other.values)).max(f64::MIN_POSITIVE);
    let h: Vec<C64> = g.holo_part(&core);
    let re: Vec<C64> = h.iter().map(|z| C64::new(z.re, 0.0)).collect();
    let him = g.hilbert(&h.iter().map(|z| C64::new(z.im, 0.0)).collect::<Vec<_>>());
    let l2 = f.l2_norm();
    Ok(AlgebraDefects {
        hilbert_square: diff(&hh, &neg) / scale,
        projector_idempotent: diff(&ppc, &pc) / scale,
        projector_self_adjoint: (lhs - rhs).norm() / norms,
        projector_split: diff(&pf, &split) / scale,
        holomorphy: diff(&re, &him) / scale,
        parseval: (l2 - f.spectral_l2_norm()).abs() / l2.max(f64::MIN_POSITIVE),
    })
}
