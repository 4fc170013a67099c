//! Holomorphic parametrization of a graph surface `y = η(x)`.

use crate::error::{Error, Result};
use crate::fields::{check_conformal, eulerian_trace, HoloField, Resampling};
use crate::spectral::{RealField, SpectralGrid, C64};

/// Periodic surface profile that can be evaluated off-grid.
pub trait Elevation {
    fn eta(&self, x: f64) -> f64;
}

/// Trigonometric interpolant of uniformly sampled elevation data.
#[derive(Debug, Clone)]
pub struct SampledElevation {
    grid: SpectralGrid,
    coeffs: Vec<C64>,
}

impl SampledElevation {
    pub fn new(eta: &RealField) -> Self {
        Self {
            grid: eta.grid.clone(),
            coeffs: eta.coefficients(),
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        let g = &self.grid;
        let d: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if g.is_nyquist(i) {
                    C64::new(0.0, 0.0)
                } else {
                    c * C64::new(0.0, g.wavenumber(i))
                }
            })
            .collect();
        g.interpolate(&d, x).re
    }
}

impl Elevation for SampledElevation {
    fn eta(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.coeffs, x).re
    }
}

impl<F: Fn(f64) -> f64> Elevation for F {
    fn eta(&self, x: f64) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor in `(0, 1]`.
    pub damping: f64,
}

impl Default for ConformalOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 500,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalBuild {
    pub w: HoloField,
    pub iterations: usize,
    pub defect: f64,
    /// `min(1 + Re W_α)` of the result.
    pub delta: f64,
}

fn defect_of(grid: &SpectralGrid, rho: &RealField, eta: &dyn Elevation) -> (Vec<f64>, f64) {
    let h = rho.hilbert();
    let target: Vec<f64> = grid.points().iter().zip(&h.values).map(|(a, hr)| eta.eta(a + hr)).collect();
    let d = target
        .iter()
        .zip(&rho.values)
        .fold(0.0, |m: f64, (t, r)| m.max((t - r).abs()));
    (target, d)
}

/// Solve `ρ(α) = η(α + Hρ(α))` and return `W = Hρ + iρ`.
pub fn build_conformal(eta: &dyn Elevation, grid: &SpectralGrid, opts: &ConformalOptions) -> Result<ConformalBuild> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping must lie in (0, 1], got {}",
            opts.damping
        )));
    }
    let mut rho = RealField::zeros(grid);
    let (mut target, mut defect) = defect_of(grid, &rho, eta);
    let mut best = defect;
    let mut since_best = 0;
    let mut iterations = 0;
    while defect > opts.tol {
        if iterations >= opts.max_iter || since_best > 25 || !defect.is_finite() {
            return Err(Error::NoConvergence { iterations, defect });
        }
        for (r, t) in rho.values.iter_mut().zip(&target) {
            *r += opts.damping * (t - *r);
        }
        iterations += 1;
        (target, defect) = defect_of(grid, &rho, eta);
        if defect < 0.9 * best {
            best = defect;
            since_best = 0;
        } else {
            since_best += 1;
        }
    }
    let w = HoloField::from_imaginary_part(&rho);
    let report = check_conformal(&w, 0.0);
    if report.min_real <= 0.0 {
        let wa = grid.deriv(w.values());
        let index = wa.iter().position(|z| 1.0 + z.re <= 0.0).unwrap_or(0);
        return Err(Error::NotAGraph { index });
    }
    Ok(ConformalBuild {
        w,
        iterations,
        defect,
        delta: report.min_real,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RegularityReport {
    /// `sup |η_x/(1+η_x²) - (1 + Re W_α) Im Y|` over the collocation points.
    pub identity_defect: f64,
    /// Same without the factor `1 + Re W_α`.
    pub literal_identity_defect: f64,
    pub besov_eta_x: f64,
    pub besov_w_alpha: f64,
    /// `‖W_α‖_B / ‖η_x‖_B`, `1` when both vanish.
    pub besov_ratio: f64,
    /// `sup |Re Y - H Im Y|` for `Y = W_α/(1+W_α)`.
    pub hilbert_defect: f64,
    /// Round-trip error of `η` through the Eulerian trace.
    pub round_trip: f64,
}

/// Compare the graph description `η` with the holomorphic one `W`.
pub fn regularity_transfer_report(eta: &RealField, w: &HoloField) -> Result<RegularityReport> {
    let wgrid = w.grid();
    let el = SampledElevation::new(eta);
    let trace = eulerian_trace(w)?;
    let wa = wgrid.deriv(w.values());
    let mut identity_defect: f64 = 0.0;
    let mut literal: f64 = 0.0;
    for (m, &x) in trace.x.iter().enumerate() {
        let s = el.slope(x);
        let lhs = s / (1.0 + s * s);
        let y = wa[m] / (1.0 + wa[m]);
        identity_defect = identity_defect.max((lhs - (1.0 + wa[m].re) * y.im).abs());
        literal = literal.max((lhs - y.im).abs());
    }
    let y: Vec<C64> = wa.iter().map(|z| z / (1.0 + z)).collect();
    let re_y: Vec<f64> = y.iter().map(|z| z.re).collect();
    let im_y: Vec<f64> = y.iter().map(|z| z.im).collect();
    let h_im = wgrid.hilbert_real(&im_y);
    let mean_re = re_y.iter().sum::<f64>() / re_y.len() as f64;
    let hilbert_defect = re_y
        .iter()
        .zip(&h_im)
        .fold(0.0, |m: f64, (a, b)| m.max((a - mean_re - b).abs()));
    let besov_eta_x = eta.derivative().besov_half_norm();
    let besov_w_alpha = w.derivative().field().besov_half_norm();
    let besov_ratio = if besov_eta_x == 0.0 && besov_w_alpha == 0.0 {
        1.0
    } else {
        besov_w_alpha / besov_eta_x
    };
    let back = trace.resample(&eta.grid, Resampling::Spectral)?;
    let round_trip = back
        .values
        .iter()
        .zip(&eta.values)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    Ok(RegularityReport {
        identity_defect,
        literal_identity_defect: literal,
        besov_eta_x,
        besov_w_alpha,
        besov_ratio,
        hilbert_defect,
        round_trip,
    })
}
