//! INI-style run configuration with defaults for every key.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use ini::{Ini, ParseOption};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::Filter;
use crate::nonexistence::{Guess, SweepConfig, SweepMode};
use crate::traveling::{CapillaryConvention, Formulation};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub n: usize,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysSection {
    pub g: f64,
    pub sigma: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSection {
    pub formulation: String,
    pub harmonic: usize,
    pub convention: String,
    pub max_iter: usize,
    pub gmres_rtol: f64,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationSection {
    pub start_amplitude: f64,
    pub step: f64,
    pub target: f64,
    pub max_steps: usize,
    pub delta_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveSection {
    pub dt: f64,
    pub steps: usize,
    pub sample_every: usize,
    pub filter: String,
    pub blowup_bound: f64,
    /// `mode`, `traveling` or `random`.
    pub init: String,
    pub amplitude: f64,
    pub mode: usize,
    pub steepness: f64,
    pub drift_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalSection {
    pub amplitude: f64,
    pub mode: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub check_tol: f64,
    /// Samples `x,eta` on the run grid; replaces the single cosine.
    pub eta_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionSection {
    pub k: Vec<usize>,
    pub amplitude: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSection {
    pub mode: String,
    pub speeds: Vec<f64>,
    pub guesses: Vec<[f64; 3]>,
    pub period: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySection {
    pub n: usize,
    pub samples: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub wall_time: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridSection,
    pub phys: PhysSection,
    pub solver: SolverSection,
    pub continuation: ContinuationSection,
    pub evolve: EvolveSection,
    pub conformal: ConformalSection,
    pub dispersion: DispersionSection,
    pub sweep: SweepSection,
    pub verify: VerifySection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sweep = SweepConfig::default_for(SweepMode::Gravity);
        Self {
            grid: GridSection {
                n: 256,
                period: 2.0 * PI,
            },
            phys: PhysSection {
                g: 1.0,
                sigma: 0.0,
                c: 0.0,
            },
            solver: SolverSection {
                formulation: Formulation::Combined.name().into(),
                harmonic: 1,
                convention: CapillaryConvention::Canonical.name().into(),
                max_iter: 40,
                gmres_rtol: 1e-9,
                tol: None,
            },
            continuation: ContinuationSection {
                start_amplitude: 1e-3,
                step: 0.01,
                target: 0.1,
                max_steps: 200,
                delta_min: 0.1,
            },
            evolve: EvolveSection {
                dt: 0.01,
                steps: 100,
                sample_every: 10,
                filter: "houli36".into(),
                blowup_bound: 1e6,
                init: "mode".into(),
                amplitude: 1e-3,
                mode: 1,
                steepness: 0.05,
                drift_tol: None,
            },
            conformal: ConformalSection {
                amplitude: 0.1,
                mode: 1,
                tol: 1e-13,
                max_iter: 500,
                check_tol: 1e-8,
                eta_csv: None,
            },
            dispersion: DispersionSection {
                k: vec![1, 2, 4, 8],
                amplitude: 1e-4,
                tol: 1e-5,
            },
            sweep: SweepSection {
                mode: SweepMode::Gravity.name().into(),
                speeds: sweep.speeds,
                guesses: sweep.guesses.iter().map(|g| [g.amplitude, g.width, g.carrier]).collect(),
                period: sweep.period,
                n: sweep.n,
            },
            verify: VerifySection {
                n: 1024,
                samples: 10,
                tol: 1e-12,
            },
            output: OutputSection { wall_time: false },
        }
    }
}

fn parse<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(section: &str, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(section, key, s))
        .collect()
}

/// `A:w` or `A:w:carrier`, comma separated.
fn parse_guesses(v: &str) -> Result<Vec<[f64; 3]>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let parts: Vec<f64> = item.split(':').map(|s| parse("sweep", "guesses", s)).collect::<Result<_>>()?;
            match parts.as_slice() {
                [a, w] => Ok([*a, *w, 0.0]),
                [a, w, k] => Ok([*a, *w, *k]),
                _ => Err(Error::Config(format!(
                    "[sweep] guesses: expected A:w[:carrier], got {item:?}"
                ))),
            }
        })
        .collect()
}

fn unknown(section: &str, key: &str) -> Error {
    Error::Config(format!("unknown key {key:?} in [{section}]"))
}

impl RunConfig {
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let opts = ParseOption {
            enabled_escape: false,
            ..Default::default()
        };
        let ini = Ini::load_from_str_opt(text, opts).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let mut cfg = Self::default();
        let mut sweep_keys = BTreeMap::new();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key {k:?} outside any section")));
                }
                continue;
            };
            for (key, v) in props.iter() {
                cfg.set(section, key, v, &mut sweep_keys)?;
            }
        }
        cfg.apply_sweep_defaults(&sweep_keys)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str, sweep_keys: &mut BTreeMap<String, String>) -> Result<()> {
        let s = section;
        match (section, key) {
            ("grid", "n") => self.grid.n = parse(s, key, v)?,
            ("grid", "period") => self.grid.period = parse(s, key, v)?,
            ("phys", "g") => self.phys.g = parse(s, key, v)?,
            ("phys", "sigma") => self.phys.sigma = parse(s, key, v)?,
            ("phys", "c") => self.phys.c = parse(s, key, v)?,
            ("solver", "formulation") => self.solver.formulation = v.trim().into(),
            ("solver", "harmonic") => self.solver.harmonic = parse(s, key, v)?,
            ("solver", "convention") => self.solver.convention = v.trim().into(),
            ("solver", "max_iter") => self.solver.max_iter = parse(s, key, v)?,
            ("solver", "gmres_rtol") => self.solver.gmres_rtol = parse(s, key, v)?,
            ("solver", "tol") => self.solver.tol = Some(parse(s, key, v)?),
            ("continuation", "start_amplitude") => self.continuation.start_amplitude = parse(s, key, v)?,
            ("continuation", "step") => self.continuation.step = parse(s, key, v)?,
            ("continuation", "target") => self.continuation.target = parse(s, key, v)?,
            ("continuation", "max_steps") => self.continuation.max_steps = parse(s, key, v)?,
            ("continuation", "delta_min") => self.continuation.delta_min = parse(s, key, v)?,
            ("evolve", "dt") => self.evolve.dt = parse(s, key, v)?,
            ("evolve", "steps") => self.evolve.steps = parse(s, key, v)?,
            ("evolve", "sample_every") => self.evolve.sample_every = parse(s, key, v)?,
            ("evolve", "filter") => self.evolve.filter = v.trim().into(),
            ("evolve", "blowup_bound") => self.evolve.blowup_bound = parse(s, key, v)?,
            ("evolve", "init") => self.evolve.init = v.trim().into(),
            ("evolve", "amplitude") => self.evolve.amplitude = parse(s, key, v)?,
            ("evolve", "mode") => self.evolve.mode = parse(s, key, v)?,
            ("evolve", "steepness") => self.evolve.steepness = parse(s, key, v)?,
            ("evolve", "drift_tol") => self.evolve.drift_tol = Some(parse(s, key, v)?),
            ("conformal", "amplitude") => self.conformal.amplitude = parse(s, key, v)?,
            ("conformal", "mode") => self.conformal.mode = parse(s, key, v)?,
            ("conformal", "tol") => self.conformal.tol = parse(s, key, v)?,
            ("conformal", "max_iter") => self.conformal.max_iter = parse(s, key, v)?,
            ("conformal", "check_tol") => self.conformal.check_tol = parse(s, key, v)?,
            ("conformal", "eta_csv") => self.conformal.eta_csv = Some(v.trim().into()),
            ("dispersion", "k") => self.dispersion.k = parse_list(s, key, v)?,
            ("dispersion", "amplitude") => self.dispersion.amplitude = parse(s, key, v)?,
            ("dispersion", "tol") => self.dispersion.tol = parse(s, key, v)?,
            ("sweep", "mode" | "speeds" | "guesses" | "period" | "n") => {
                sweep_keys.insert(key.to_string(), v.to_string());
            }
            ("verify", "n") => self.verify.n = parse(s, key, v)?,
            ("verify", "samples") => self.verify.samples = parse(s, key, v)?,
            ("verify", "tol") => self.verify.tol = parse(s, key, v)?,
            ("output", "wall_time") => self.output.wall_time = parse(s, key, v)?,
            (
                "grid" | "phys" | "solver" | "continuation" | "evolve" | "conformal" | "dispersion" | "sweep" | "verify"
                | "output",
                _,
            ) => return Err(unknown(section, key)),
            _ => return Err(Error::Config(format!("unknown section [{section}]"))),
        }
        Ok(())
    }

    /// Unset sweep keys fall back to the defaults of the chosen mode.
    fn apply_sweep_defaults(&mut self, keys: &BTreeMap<String, String>) -> Result<()> {
        let mode: SweepMode = match keys.get("mode") {
            Some(m) => m.trim().parse()?,
            None => SweepMode::Gravity,
        };
        let d = SweepConfig::default_for(mode);
        self.sweep = SweepSection {
            mode: mode.name().into(),
            speeds: match keys.get("speeds") {
                Some(v) => parse_list("sweep", "speeds", v)?,
                None => d.speeds,
            },
            guesses: match keys.get("guesses") {
                Some(v) => parse_guesses(v)?,
                None => d.guesses.iter().map(|g| [g.amplitude, g.width, g.carrier]).collect(),
            },
            period: match keys.get("period") {
                Some(v) => parse("sweep", "period", v)?,
                None => d.period,
            },
            n: match keys.get("n") {
                Some(v) => parse("sweep", "n", v)?,
                None => d.n,
            },
        };
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.formulation()?;
        self.convention()?;
        self.filter()?;
        self.sweep_mode()?;
        if !["mode", "traveling", "random"].contains(&self.evolve.init.as_str()) {
            return Err(Error::Config(format!("[evolve] init: unknown value {:?}", self.evolve.init)));
        }
        if self.dispersion.k.is_empty() || self.dispersion.k.contains(&0) {
            return Err(Error::Config("[dispersion] k: need positive wavenumbers".into()));
        }
        if self.sweep.speeds.is_empty() || self.sweep.guesses.is_empty() {
            return Err(Error::Config("[sweep] speeds and guesses must be non-empty".into()));
        }
        Ok(())
    }

    pub fn formulation(&self) -> Result<Formulation> {
        self.solver
            .formulation
            .parse()
            .map_err(|_| Error::Config(format!("[solver] formulation: unknown value {:?}", self.solver.formulation)))
    }

    pub fn convention(&self) -> Result<CapillaryConvention> {
        self.solver
            .convention
            .parse()
            .map_err(|_| Error::Config(format!("[solver] convention: unknown value {:?}", self.solver.convention)))
    }

    pub fn filter(&self) -> Result<Filter> {
        self.evolve.filter.parse()
    }

    pub fn sweep_mode(&self) -> Result<SweepMode> {
        self.sweep.mode.parse()
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        Ok(SweepConfig {
            mode: self.sweep_mode()?,
            speeds: self.sweep.speeds.clone(),
            guesses: self
                .sweep
                .guesses
                .iter()
                .map(|g| Guess {
                    amplitude: g[0],
                    width: g[1],
                    carrier: g[2],
                })
                .collect(),
            period: self.sweep.period,
            n: self.sweep.n,
            record_wall_time: self.output.wall_time,
        })
    }
}
