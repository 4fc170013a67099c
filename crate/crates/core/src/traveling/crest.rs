use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::PhysParams;

use super::solver::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailDecay {
    /// `|Ŵ_α(m)| ~ e^{-rate·m}`.
    Smooth { rate: f64 },
    /// `|Ŵ_α(m)| ~ m^{-exponent}`.
    PowerLaw { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrestDiagnostics {
    pub h_max: f64,
    /// `c²/(2g)`.
    pub h0: f64,
    pub decay: TailDecay,
    /// Crest angle from the power-law exponent, `θ = π·p`.
    pub theta: Option<f64>,
    /// Whether `θ ∈ (π/2, π)`.
    pub in_l2_window: Option<bool>,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let icpt = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, rms)
}

/// Classify the decay of `spectrum[m-1] = |Ŵ_α(m)|`, `m = 1, 2, …`.
pub fn fit_tail(spectrum: &[f64]) -> Result<TailDecay> {
    let peak = spectrum.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(TailDecay::Smooth { rate: f64::INFINITY });
    }
    // Newton tolerances leave a noise plateau well above machine precision.
    let floor = 1e-10 * peak;
    let last = spectrum.iter().rposition(|&s| s > floor).unwrap_or(0) + 1;
    let pts: Vec<(f64, f64)> = (1..=last)
        .filter(|&m| spectrum[m - 1] > floor)
        .map(|m| (m as f64, spectrum[m - 1].ln()))
        .collect();
    if pts.len() < 8 {
        let rate = if pts.len() >= 2 {
            -(pts[pts.len() - 1].1 - pts[0].1) / (pts[pts.len() - 1].0 - pts[0].0)
        } else {
            f64::INFINITY
        };
        return Ok(TailDecay::Smooth { rate });
    }
    let lo = (last as f64 / 10.0).max(1.0);
    let tail: Vec<&(f64, f64)> = pts.iter().filter(|(m, _)| *m >= lo).collect();
    let m: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let lm: Vec<f64> = m.iter().map(|v| v.ln()).collect();
    let ls: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let (es, _, erms) = linear_fit(&m, &ls);
    let (ps, _, prms) = linear_fit(&lm, &ls);
    if erms <= prms {
        return Ok(TailDecay::Smooth { rate: -es });
    }
    if (last as f64).log10() < 2.0 {
        return Err(Error::FitUnreliable(format!(
            "power-law tail spans only modes 1..{last}, fewer than two decades"
        )));
    }
    Ok(TailDecay::PowerLaw { exponent: -ps })
}

/// Crest height against `h₀ = c²/(2g)` and the crest angle implied by the spectral tail.
pub fn crest_diagnostics(report: &SolveReport, params: &PhysParams) -> Result<CrestDiagnostics> {
    if params.g <= 0.0 {
        return Err(Error::InvalidArgument("crest diagnostics need g > 0".into()));
    }
    let grid = report.w.grid();
    let h_max = report.w.values().iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    let h0 = report.c2 / (2.0 * params.g);
    let coeffs = grid.forward(&grid.deriv(report.w.values()));
    let spectrum: Vec<f64> = (1..grid.n() / 2).map(|j| coeffs[grid.slot(-(j as i64))].norm()).collect();
    let decay = fit_tail(&spectrum)?;
    let theta = match decay {
        TailDecay::PowerLaw { exponent } => Some(PI * exponent),
        TailDecay::Smooth { .. } => None,
    };
    Ok(CrestDiagnostics {
        h_max,
        h0,
        decay,
        theta,
        in_l2_window: theta.map(|t| t > PI / 2.0 && t < PI),
    })
}
