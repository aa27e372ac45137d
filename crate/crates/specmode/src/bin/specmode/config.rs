//! Run configuration: TOML schema, built-in defaults, validation, and sweep
//! ranges.
//!
//! Every numeric knob has a built-in default, so the binary runs usefully
//! with no config file at all; a file given via `--config` overrides the
//! defaults section by section, and command-line flags override the file.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use specmode::{Error, Result};

use crate::output::Format;

/// The experiments the front end can dispatch. `[experiment].name` must be
/// one of these (spelled as on the command line).
pub const EXPERIMENTS: [&str; 9] = [
    "hom",
    "hom-entangled",
    "four-photon",
    "filter",
    "homodyne",
    "kitten",
    "cond-fock",
    "normalization",
    "decompose",
];

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub pulse: PulseSpec,
    /// Second mode: the other interferometer arm template, spectral filter,
    /// homodyne probe, or herald detector, depending on the experiment.
    pub reference: ReferenceSpec,
    pub source: SourceSpec,
    pub basis: BasisSpec,
    pub experiment: ExperimentSpec,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
}

impl RunConfig {
    /// Built-in defaults, optionally overridden by a TOML file.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let config = match path {
            None => Self::default(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("malformed config {}: {e}", p.display())))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let numeric = [
            ("grid.omega_min", self.grid.omega_min),
            ("grid.omega_max", self.grid.omega_max),
            ("pulse.center", self.pulse.center),
            ("pulse.width", self.pulse.width),
            ("pulse.delay", self.pulse.delay),
            ("reference.center", self.reference.center),
            ("reference.width", self.reference.width),
            ("reference.delay", self.reference.delay),
            ("source.coupling", self.source.coupling),
            ("source.coupling_phase", self.source.coupling_phase),
            ("source.correlation", self.source.correlation),
            ("basis.width", self.basis.width),
            ("experiment.reflectivity", self.experiment.reflectivity),
        ];
        for (name, value) in numeric {
            if !value.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {value}")));
            }
        }
        if !EXPERIMENTS.contains(&self.experiment.name.as_str()) {
            return Err(Error::Config(format!(
                "unknown experiment {:?}; expected one of {}",
                self.experiment.name,
                EXPERIMENTS.join(", ")
            )));
        }
        if let Some(sweep) = &self.sweep {
            if !sweep.start.is_finite() || !sweep.stop.is_finite() {
                return Err(Error::Config("sweep bounds must be finite".into()));
            }
            if sweep.steps < 1 {
                return Err(Error::Config("sweep needs at least one step".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { omega_min: -8.0, omega_max: 8.0, points: 65 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    /// Gaussian spectral amplitude exp(−((ω−center)/2·width)²), optionally
    /// delayed (a linear spectral phase).
    Gaussian,
    /// Flat window over [center − width/2, center + width/2]; no delay.
    Rect,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub center: f64,
    pub width: f64,
    pub delay: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self { shape: PulseShape::Gaussian, center: 0.0, width: 1.0, delay: 0.0 }
    }
}

/// Same shape vocabulary as [`PulseSpec`]; split into its own type only so
/// the two sections can default differently (a reference mode identical to
/// the pulse makes filtering and heralding trivial).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSpec {
    pub shape: PulseShape,
    pub center: f64,
    pub width: f64,
    pub delay: f64,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self { shape: PulseShape::Gaussian, center: 0.0, width: 0.8, delay: 0.0 }
    }
}

impl ReferenceSpec {
    pub fn as_pulse(&self) -> PulseSpec {
        PulseSpec { shape: self.shape, center: self.center, width: self.width, delay: self.delay }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    /// Pair-creation amplitude magnitude |λ|.
    pub coupling: f64,
    /// Phase of the pair-creation amplitude, radians.
    pub coupling_phase: f64,
    /// Spectral correlation of the two-photon Gaussian amplitude:
    /// 0 = separable, → 1 = fully correlated.
    pub correlation: f64,
    /// Whether both photons of a pair share one spatial mode. Leave unset to
    /// let each experiment pick the topology it is defined for.
    pub degenerate: Option<bool>,
    /// Pair-number cutoff of the source expansion.
    pub n_max: usize,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self { coupling: 0.1, coupling_phase: 0.0, correlation: 0.8, degenerate: None, n_max: 3 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSpec {
    /// Number of eigenmode basis functions.
    pub size: usize,
    /// Hermite–Gauss family scale used to fill the basis.
    pub width: f64,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { size: 8, width: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Experiment run when no subcommand is given.
    pub name: String,
    /// Photon number for `filter`, `homodyne`.
    pub photons: usize,
    /// Herald photon count for `cond-fock`.
    pub m: usize,
    /// Tap reflectivity for `kitten`.
    pub reflectivity: f64,
    /// Copies of the pulse / the reference mode for `normalization`.
    pub n1: usize,
    pub n2: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self { name: "hom".into(), photons: 3, m: 1, reflectivity: 0.05, n1: 1, n2: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Which knob the sweep drives; must name the experiment's sweepable
    /// parameter (`delay`, `gamma`, `correlation` or `reflectivity`).
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Output file; empty writes to standard output. Relative paths are
    /// resolved under `$SPECMODE_OUT_DIR` when that variable is set.
    pub path: String,
    /// Output format; unset picks csv for sweeps and json for reports.
    pub format: Option<Format>,
}

/// An inclusive linear range `start:stop:steps`, the sweep grammar shared by
/// the config file and the `--*-sweep` flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let pitch = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.start + pitch * k as f64).collect()
    }
}

impl From<&SweepSpec> for SweepRange {
    fn from(spec: &SweepSpec) -> Self {
        Self { start: spec.start, stop: spec.stop, steps: spec.steps }
    }
}

/// Parses `start:stop:steps`; used as a clap value parser, hence the String
/// error type.
pub fn parse_sweep(text: &str) -> std::result::Result<SweepRange, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:steps, got {text:?}"));
    }
    let start: f64 = parts[0].parse().map_err(|e| format!("bad sweep start: {e}"))?;
    let stop: f64 = parts[1].parse().map_err(|e| format!("bad sweep stop: {e}"))?;
    let steps: usize = parts[2].parse().map_err(|e| format!("bad sweep step count: {e}"))?;
    if !start.is_finite() || !stop.is_finite() {
        return Err("sweep bounds must be finite".into());
    }
    if steps < 1 {
        return Err("sweep needs at least one step".into());
    }
    Ok(SweepRange { start, stop, steps })
}
