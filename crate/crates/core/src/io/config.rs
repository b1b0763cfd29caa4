//! JSON run configuration.
//!
//! The file is read into a loosely typed [`RawConfig`] mirroring the
//! published schema, then resolved into a [`RunConfig`]: labels become
//! indices, angles are converted to radians and defaults are filled in.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imperfections::{AlignmentError, BeamParams, OpldSpec};
use crate::model::{InterferometerSpec, PhaseConvention, SourceSpec};
use crate::partition::{GedankenOptions, Grouping};
use crate::scan::{PhaseAxis, ScanSpec, DEFAULT_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnits {
    #[default]
    Radians,
    Degrees,
}

impl AngleUnits {
    fn to_radians(self, x: f64) -> f64 {
        match self {
            AngleUnits::Radians => x,
            AngleUnits::Degrees => x.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub units: AngleUnits,
    pub interferometer: Option<RawInterferometer>,
    pub grouping: Option<RawGrouping>,
    pub scan: Option<RawScan>,
    pub block: Option<RawBlock>,
    pub gedanken: Option<RawGedanken>,
    pub imperfections: Option<RawImperfections>,
    pub opld: Option<OpldSpec>,
    pub estimate_v13: Option<RawEstimate>,
    pub output: Option<RawOutput>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInterferometer {
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub phase_convention: PhaseConvention,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBlockSpec {
    pub label: String,
    pub sources: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrouping {
    pub blocks: Vec<RawBlockSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAxis {
    pub source: String,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScan {
    pub axes: Vec<RawAxis>,
    #[serde(default)]
    pub fixed_phases: BTreeMap<String, f64>,
    pub integration_time: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBlock {
    pub sources: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGedanken {
    pub phase_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawImperfections {
    pub beam: Option<BeamParams>,
    pub alignment: Option<AlignmentError>,
    pub tilt_calibration: Option<f64>,
    pub yield_ratios: Option<(f64, f64)>,
    pub phase_fixed: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEstimate {
    pub v12: f64,
    pub v23: f64,
    pub yields: Option<(f64, f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub path: Option<String>,
    pub format: Option<OutputFormat>,
}

/// Imperfection analysis parameters, all angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImperfectionConfig {
    pub beam: BeamParams,
    pub alignment: AlignmentError,
    /// `None` means the reference calibration is used.
    pub tilt_calibration: Option<f64>,
    pub yield_ratios: Option<(f64, f64)>,
    pub phase_fixed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateConfig {
    pub v12: f64,
    pub v23: f64,
    pub yields: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<OutputFormat>,
}

/// Validated configuration with defaults applied. All angles are radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub interferometer: Option<InterferometerSpec>,
    pub grouping: Option<Grouping>,
    pub scan: Option<ScanSpec>,
    pub block: Option<Vec<usize>>,
    pub gedanken: GedankenOptions,
    pub imperfections: Option<ImperfectionConfig>,
    pub opld: Option<OpldSpec>,
    pub estimate_v13: Option<EstimateConfig>,
    pub output: OutputConfig,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn interferometer(&self) -> Result<&InterferometerSpec> {
        self.interferometer.as_ref().ok_or_else(|| {
            Error::validation("interferometer", "section is required for this command")
        })
    }
}

fn lookup(spec: &InterferometerSpec, label: &str, field: &str) -> Result<usize> {
    spec.index_of(label)
        .ok_or_else(|| Error::validation(field, format!("unknown source label `{label}`")))
}

fn require_interferometer<'a>(
    spec: &'a Option<InterferometerSpec>,
    block: &str,
) -> Result<&'a InterferometerSpec> {
    spec.as_ref().ok_or_else(|| {
        Error::validation(
            block,
            "needs an `interferometer` block to resolve source labels",
        )
    })
}

impl RawConfig {
    pub fn resolve(self) -> Result<RunConfig> {
        let units = self.units;
        let angle = |x: f64| units.to_radians(x);

        let interferometer = self
            .interferometer
            .map(|raw| {
                let sources = raw
                    .sources
                    .into_iter()
                    .map(|s| SourceSpec {
                        phase: angle(s.phase),
                        leak_angle: angle(s.leak_angle),
                        ..s
                    })
                    .collect();
                InterferometerSpec::with_convention(sources, raw.phase_convention)
            })
            .transpose()?;

        let grouping = match self.grouping {
            Some(raw) => {
                let spec = require_interferometer(&interferometer, "grouping")?;
                let mut blocks = Vec::new();
                let mut labels = Vec::new();
                for b in raw.blocks {
                    blocks.push(
                        b.sources
                            .iter()
                            .map(|l| lookup(spec, l, "grouping.blocks.sources"))
                            .collect::<Result<Vec<_>>>()?,
                    );
                    labels.push(b.label);
                }
                Some(Grouping::new(spec.len(), blocks, labels)?)
            }
            None => None,
        };

        let scan = match self.scan {
            Some(raw) => {
                let spec = require_interferometer(&interferometer, "scan")?;
                if raw.axes.is_empty() || raw.axes.len() > 2 {
                    return Err(Error::validation(
                        "scan.axes",
                        "one or two varying phases required",
                    ));
                }
                let axes = raw
                    .axes
                    .iter()
                    .map(|a| {
                        Ok(PhaseAxis {
                            source: lookup(spec, &a.source, "scan.axes.source")?,
                            start: a.start.map_or(0.0, angle),
                            stop: a.stop.map_or(TAU, angle),
                            steps: a.steps.unwrap_or(DEFAULT_STEPS),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let fixed_phases = raw
                    .fixed_phases
                    .iter()
                    .map(|(l, &p)| Ok((lookup(spec, l, "scan.fixed_phases")?, angle(p))))
                    .collect::<Result<Vec<_>>>()?;
                let rng_seed = raw.integration_time.map(|_| self.seed.unwrap_or(0));
                let scan = ScanSpec {
                    axes,
                    fixed_phases,
                    integration_time: raw.integration_time,
                    rng_seed,
                };
                scan.validate(spec)?;
                Some(scan)
            }
            None => None,
        };

        let block = match self.block {
            Some(raw) => {
                let spec = require_interferometer(&interferometer, "block")?;
                Some(
                    raw.sources
                        .iter()
                        .map(|l| lookup(spec, l, "block.sources"))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => None,
        };

        let gedanken = match self.gedanken.and_then(|g| g.phase_tolerance) {
            Some(t) if t.is_finite() && t >= 0.0 => GedankenOptions {
                phase_tolerance: angle(t),
            },
            Some(_) => {
                return Err(Error::validation(
                    "gedanken.phase_tolerance",
                    "must be finite and >= 0",
                ))
            }
            None => GedankenOptions::default(),
        };

        let imperfections = match self.imperfections {
            Some(raw) => {
                let beam = raw.beam.unwrap_or_default();
                beam.validate()?;
                let alignment = raw
                    .alignment
                    .map(|a| AlignmentError {
                        tilt: angle(a.tilt),
                        ..a
                    })
                    .unwrap_or_default();
                alignment.validate()?;
                if let Some(k) = raw.tilt_calibration {
                    if !(k.is_finite() && k > 0.0) {
                        return Err(Error::validation(
                            "imperfections.tilt_calibration",
                            "must be > 0",
                        ));
                    }
                }
                Some(ImperfectionConfig {
                    beam,
                    alignment,
                    tilt_calibration: raw.tilt_calibration,
                    yield_ratios: raw.yield_ratios,
                    phase_fixed: raw.phase_fixed.map_or(std::f64::consts::PI, angle),
                })
            }
            None => None,
        };

        if let Some(opld) = &self.opld {
            opld.validate()?;
        }

        Ok(RunConfig {
            interferometer,
            grouping,
            scan,
            block,
            gedanken,
            imperfections,
            opld: self.opld,
            estimate_v13: self.estimate_v13.map(|e| EstimateConfig {
                v12: e.v12,
                v23: e.v23,
                yields: e.yields,
            }),
            output: self
                .output
                .map(|o| OutputConfig {
                    path: o.path,
                    format: o.format,
                })
                .unwrap_or(OutputConfig {
                    path: None,
                    format: None,
                }),
            seed: self.seed,
        })
    }
}

/// Parses and validates a configuration from JSON text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    raw.resolve()
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}
