use crate::error::{Error, Result};
use crate::fields::{HoloField, PhysParams};
use crate::spectral::{ComplexField, RealField, SpectralGrid, C64, I};

/// Below this `min |1+W_α|` or `min (1 + Re W_α)` residuals refuse to evaluate.
pub const RESIDUAL_DELTA: f64 = 1e-3;

/// Normalization of the wave-speed term in the multiplied capillary equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapillaryConvention {
    /// `c²/2`, consistent with the linear dispersion `c² = σk`.
    #[default]
    Canonical,
    /// Doubled factor `c²` on the speed term.
    Paper,
}

impl CapillaryConvention {
    pub fn factor(self) -> f64 {
        match self {
            CapillaryConvention::Canonical => 0.5,
            CapillaryConvention::Paper => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CapillaryConvention::Canonical => "canonical",
            CapillaryConvention::Paper => "paper",
        }
    }
}

impl std::str::FromStr for CapillaryConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(Self::Canonical),
            "paper" => Ok(Self::Paper),
            _ => Err(Error::Config(format!("unknown capillary convention {s:?}"))),
        }
    }
}

fn check_map(wa: &[C64]) -> Result<()> {
    let mut min_modulus = f64::INFINITY;
    let mut min_real = f64::INFINITY;
    for z in wa {
        min_modulus = min_modulus.min((1.0 + z).norm());
        min_real = min_real.min(1.0 + z.re);
    }
    if min_modulus < RESIDUAL_DELTA || min_real < RESIDUAL_DELTA {
        return Err(Error::ConformalDegenerate {
            min_modulus: min_modulus.min(min_real),
            delta: RESIDUAL_DELTA,
        });
    }
    Ok(())
}

/// Continuous `arg(1 + W_α)` unwrapped from `α = 0`.
pub fn unwrapped_argument(wa: &[C64]) -> Result<Vec<f64>> {
    let n = wa.len();
    let mut out = Vec::with_capacity(n);
    let mut theta = (1.0 + wa[0]).arg();
    out.push(theta);
    for m in 0..n {
        let next = (m + 1) % n;
        let step = ((1.0 + wa[next]) / (1.0 + wa[m])).arg();
        if step.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::BranchCut { index: m, next });
        }
        theta += step;
        if next != 0 {
            out.push(theta);
        } else if (theta - out[0]).abs() > 1e-6 {
            return Err(Error::BranchCut { index: m, next });
        }
    }
    Ok(out)
}

/// `Im(Z̄ Z_α)/|Z|³ = θ_α/|Z|` with `Z = 1 + W_α`.
fn curvature_term(wa: &[C64], waa: &[C64]) -> Vec<f64> {
    wa.iter()
        .zip(waa)
        .map(|(w, d)| {
            let z = 1.0 + w;
            (z.conj() * d).im / z.norm().powi(3)
        })
        .collect()
}

/// Pointwise `g Im W - σ θ_α/|1+W_α| - (c²/2)(1 - 1/J)` from samples.
pub(crate) fn combined_samples(grid: &SpectralGrid, w: &[C64], p: &PhysParams) -> Result<Vec<f64>> {
    let wa = grid.deriv(w);
    check_map(&wa)?;
    let waa = grid.deriv(&wa);
    let curv = curvature_term(&wa, &waa);
    let c2 = p.c * p.c;
    Ok((0..grid.n())
        .map(|m| {
            let j = (1.0 + wa[m]).norm_sqr();
            p.g * w[m].im - p.sigma * curv[m] - 0.5 * c2 * (1.0 - 1.0 / j)
        })
        .collect())
}

/// Scalar form of the steady equation for general `(g, σ)`.
pub fn residual_combined(w: &HoloField, p: &PhysParams) -> Result<RealField> {
    let grid = w.grid();
    let wv = w.values();
    let wa = grid.deriv(wv);
    check_map(&wa)?;
    unwrapped_argument(&wa)?;
    let waa = grid.deriv(&wa);
    let c2 = p.c * p.c;
    // Assemble the complex display and confirm it is real.
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    let values = (0..grid.n())
        .map(|m| {
            let z = 1.0 + wa[m];
            let modz = z.norm();
            let dunit = z * I * (z.conj() * waa[m]).im / modz.powi(3);
            let j = z.norm_sqr();
            let grav = -I * p.g * (wv[m] - wv[m].conj()) / 2.0;
            let tension = I * p.sigma / z * dunit;
            let speed = 0.5 * c2 * (wa[m] + wa[m].conj() + wa[m] * wa[m].conj()) / j;
            let e = grav + tension - speed;
            worst = worst.max(e.im.abs());
            scale = scale.max(grav.norm()).max(tension.norm()).max(speed.norm());
            e.re
        })
        .collect();
    if worst > 1e-10 * scale {
        return Err(Error::RealityViolation {
            what: "combined residual",
            value: worst,
        });
    }
    RealField::new(grid, values)
}

/// `P[(1 + W_α) r]` for the scalar residual `r`.
pub fn residual_combined_projected(w: &HoloField, p: &PhysParams) -> Result<ComplexField> {
    let grid = w.grid();
    let r = combined_samples(grid, w.values(), p)?;
    let wa = grid.deriv(w.values());
    let f: Vec<C64> = wa.iter().zip(&r).map(|(z, r)| (1.0 + z) * r).collect();
    ComplexField::new(grid, grid.proj(&f))
}

fn require_gravity_only(p: &PhysParams) -> Result<()> {
    if p.sigma != 0.0 {
        return Err(Error::InvalidArgument("gravity formulation requires sigma = 0".into()));
    }
    Ok(())
}

/// `gW - gP[W̄W_α - WW_α] - ic²W_α`.
pub fn residual_babenko_gravity(w: &HoloField, p: &PhysParams) -> Result<ComplexField> {
    require_gravity_only(p)?;
    let grid = w.grid();
    Ok(ComplexField {
        grid: grid.clone(),
        values: babenko_gravity_samples(grid, w.values(), p),
    })
}

pub(crate) fn babenko_gravity_samples(grid: &SpectralGrid, w: &[C64], p: &PhysParams) -> Vec<C64> {
    let wa = grid.deriv(w);
    let prod: Vec<C64> = w.iter().zip(&wa).map(|(z, d)| (z.conj() - z) * d).collect();
    let pp = grid.proj(&prod);
    let c2 = p.c * p.c;
    (0..grid.n()).map(|m| p.g * w[m] - p.g * pp[m] - I * c2 * wa[m]).collect()
}

/// `V = c² + ig(W - W̄)`, real by construction.
pub fn speed_potential(w: &HoloField, p: &PhysParams) -> RealField {
    let c2 = p.c * p.c;
    RealField {
        grid: w.grid().clone(),
        values: w.values().iter().map(|z| (c2 + I * p.g * (z - z.conj())).re).collect(),
    }
}

/// `gW - P[iVW_α]` with `V = c² + ig(W - W̄)`.
pub fn residual_bab_g(w: &HoloField, p: &PhysParams) -> Result<ComplexField> {
    require_gravity_only(p)?;
    let grid = w.grid();
    let wv = w.values();
    let wa = grid.deriv(wv);
    let c2 = p.c * p.c;
    let mut worst: f64 = 0.0;
    let ivwa: Vec<C64> = wv
        .iter()
        .zip(&wa)
        .map(|(z, d)| {
            let v = c2 + I * p.g * (z - z.conj());
            worst = worst.max(v.im.abs());
            I * v.re * d
        })
        .collect();
    if worst > 1e-12 * (c2.abs() + p.g * w.field().sup_norm()).max(1.0) {
        return Err(Error::RealityViolation { what: "V", value: worst });
    }
    let pp = grid.proj(&ivwa);
    ComplexField::new(grid, wv.iter().zip(&pp).map(|(z, q)| p.g * z - q).collect())
}

/// Multiplied capillary equation for `𝐖 = W_α`:
/// `iσ∂_α((1+𝐖)/|1+𝐖|) - f c²[𝐖 + 𝐖̄/(1+𝐖̄)]` with `f` set by the convention.
pub fn residual_capillary(bw: &HoloField, p: &PhysParams, conv: CapillaryConvention) -> Result<ComplexField> {
    let grid = bw.grid();
    Ok(ComplexField {
        grid: grid.clone(),
        values: capillary_samples(grid, bw.values(), p, conv)?,
    })
}

pub(crate) fn capillary_samples(grid: &SpectralGrid, bw: &[C64], p: &PhysParams, conv: CapillaryConvention) -> Result<Vec<C64>> {
    check_map(bw)?;
    let bwa = grid.deriv(bw);
    let curv = curvature_term(bw, &bwa);
    let fc2 = conv.factor() * p.c * p.c;
    Ok((0..grid.n())
        .map(|m| {
            let z = 1.0 + bw[m];
            let tension = -p.sigma * z * curv[m];
            tension - fc2 * (bw[m] + bw[m].conj() / z.conj())
        })
        .collect())
}

/// Projected capillary residual `P[residual_capillary]`.
pub fn residual_babenko_capillary(bw: &HoloField, p: &PhysParams, conv: CapillaryConvention) -> Result<ComplexField> {
    let f = residual_capillary(bw, p, conv)?;
    Ok(f.project_p())
}

/// Both equations of the steady system in the moving frame.
pub fn residual_soliton_system(w: &HoloField, q: &HoloField, p: &PhysParams) -> Result<(ComplexField, ComplexField)> {
    let grid = w.grid();
    grid.check_same(q.grid())?;
    let (s1, s2) = soliton_samples(grid, w.values(), q.values(), p)?;
    Ok((ComplexField::new(grid, s1)?, ComplexField::new(grid, s2)?))
}

pub(crate) fn soliton_samples(grid: &SpectralGrid, w: &[C64], q: &[C64], p: &PhysParams) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = grid.n();
    let wa = grid.deriv(w);
    check_map(&wa)?;
    let qa = grid.deriv(q);
    let waa = grid.deriv(&wa);
    let jac: Vec<f64> = wa.iter().map(|z| (1.0 + z).norm_sqr()).collect();
    let f_in: Vec<C64> = (0..n).map(|m| (qa[m] - qa[m].conj()) / jac[m]).collect();
    let f = grid.proj(&f_in);
    let kin: Vec<C64> = (0..n).map(|m| C64::new(qa[m].norm_sqr() / jac[m], 0.0)).collect();
    let kin = grid.proj(&kin);
    let ten: Vec<C64> = (0..n)
        .map(|m| {
            let t = waa[m] / (jac[m].sqrt() * (1.0 + wa[m]));
            t - t.conj()
        })
        .collect();
    let ten = grid.proj(&ten);
    let c = p.c;
    let s1 = (0..n).map(|m| -c * wa[m] + f[m] * (1.0 + wa[m])).collect();
    let s2 = (0..n)
        .map(|m| -c * qa[m] + f[m] * qa[m] - I * p.g * w[m] + kin[m] + I * p.sigma * ten[m])
        .collect();
    Ok((s1, s2))
}
