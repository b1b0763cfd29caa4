//! Subcommand dispatch over the analysis operations.

use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

use super::config::{parse_config, OutputFormat, RunConfig};
use super::output::{json_document, record_csv, scan_csv};
use crate::error::{Error, Result};
use crate::imperfections::{
    alignment_overlap, estimate_unmeasured_visibility, imbalance_visibility, opld_feasible,
    overlap_duality, overlap_longitudinal, overlap_tilt, overlap_transverse,
    reference_tilt_calibration,
};
use crate::model::{fock_state, pair_rate, total_amplitude};
use crate::partition::{block_experiment, effective_sources, gedanken_report, grouping_duality};
use crate::scan::{
    fit_poisson_counts, scan_1d, scan_2d, visibility_minmax, visibility_profile,
    visibility_with_poisson_errors, ScanResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Rate,
    Scan,
    Duality,
    Block,
    Gedanken,
    Imperfect,
    EstimateV13,
    Opld,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rate => "rate",
            Command::Scan => "scan",
            Command::Duality => "duality",
            Command::Block => "block",
            Command::Gedanken => "gedanken",
            Command::Imperfect => "imperfect",
            Command::EstimateV13 => "estimate-v13",
            Command::Opld => "opld",
        }
    }
}

/// Structured result of one command; scans also carry the sampled grid.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub result: Value,
    pub scan: Option<ScanResult>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn missing(block: &str) -> Error {
    Error::validation(block, "section is required for this command")
}

pub fn run_command(command: Command, cfg: &RunConfig) -> Result<CommandOutput> {
    let record = |result: Value| Ok(CommandOutput { result, scan: None });
    match command {
        Command::Rate => {
            let spec = cfg.interferometer()?;
            record(json!({
                "rate_hz": pair_rate(spec),
                "coherent_amplitude": total_amplitude(spec).ok(),
                "absolute_phases": spec.absolute_phases(),
                "fock_state": fock_state(spec).amplitudes,
            }))
        }
        Command::Scan => {
            let spec = cfg.interferometer()?;
            let scan = cfg.scan.as_ref().ok_or_else(|| missing("scan"))?;
            let result = if scan.axes.len() == 1 {
                scan_1d(spec, scan)?
            } else {
                scan_2d(spec, scan)?
            };
            let labels: Vec<&str> = result
                .axis_sources
                .iter()
                .map(|&k| spec.sources[k].label.as_str())
                .collect();
            let mut summary = json!({
                "axes": labels,
                "shape": result.shape(),
                "points": result.len(),
                "visibility_minmax": visibility_minmax(&result).ok(),
            });
            if result.axes.len() == 2 {
                summary["visibility_profile"] = to_value(&visibility_profile(&result).ok());
            } else if let Some(counts) = &result.counts {
                summary["counting_visibility"] =
                    to_value(&visibility_with_poisson_errors(counts).ok());
                summary["fit"] = to_value(&fit_poisson_counts(&result.axes[0], counts).ok());
            }
            summary["grid"] = to_value(&result);
            Ok(CommandOutput {
                result: summary,
                scan: Some(result),
            })
        }
        Command::Duality => {
            let spec = cfg.interferometer()?;
            let grouping = cfg.grouping.as_ref().ok_or_else(|| missing("grouping"))?;
            let record_ = grouping_duality(spec, grouping)?;
            record(json!({
                "effective_sources": effective_sources(spec, grouping)?,
                "duality": record_,
            }))
        }
        Command::Block => {
            let spec = cfg.interferometer()?;
            let blocked = cfg.block.as_ref().ok_or_else(|| missing("block"))?;
            let labels: Vec<&str> = blocked
                .iter()
                .map(|&k| spec.sources[k].label.as_str())
                .collect();
            record(json!({
                "blocked": labels,
                "rate_unblocked_hz": pair_rate(spec),
                "rate_blocked_hz": block_experiment(spec, blocked)?,
            }))
        }
        Command::Gedanken => {
            let spec = cfg.interferometer()?;
            record(to_value(&gedanken_report(spec, cfg.gedanken)?))
        }
        Command::Imperfect => {
            let imp = cfg
                .imperfections
                .as_ref()
                .ok_or_else(|| missing("imperfections"))?;
            let k = imp
                .tilt_calibration
                .unwrap_or_else(reference_tilt_calibration);
            let a = &imp.alignment;
            let combined = alignment_overlap(a, &imp.beam, k)?;
            let ratios = imp.yield_ratios.or_else(|| {
                let spec = cfg.interferometer.as_ref()?;
                (spec.len() == 3 && spec.sources[0].yield_rate > 0.0).then(|| {
                    let y = |i: usize| spec.sources[i].yield_rate / spec.sources[0].yield_rate;
                    (y(1), y(2))
                })
            });
            let imbalance = match ratios {
                Some(r) => Some(json!({
                    "yield_ratios": [r.0, r.1],
                    "phase_fixed": imp.phase_fixed,
                    "visibility": imbalance_visibility(r, imp.phase_fixed)?,
                })),
                None => None,
            };
            record(json!({
                "tilt_calibration": k,
                "overlap": {
                    "longitudinal": overlap_longitudinal(a.longitudinal.abs(), &imp.beam)?,
                    "transverse": overlap_transverse(a.transverse.abs(), &imp.beam)?,
                    "tilt": overlap_tilt(a.tilt, &imp.beam, k)?,
                    "combined": combined,
                },
                "duality": overlap_duality(combined)?,
                "imbalance": imbalance,
            }))
        }
        Command::EstimateV13 => {
            let est = cfg
                .estimate_v13
                .as_ref()
                .ok_or_else(|| missing("estimate_v13"))?;
            let yields = match est.yields {
                Some(y) => y,
                None => {
                    let spec = cfg
                        .interferometer
                        .as_ref()
                        .filter(|s| s.len() == 3)
                        .ok_or_else(|| {
                            Error::validation(
                                "estimate_v13.yields",
                                "give yields or a three-source interferometer",
                            )
                        })?;
                    let y = |i: usize| spec.sources[i].yield_rate;
                    (y(0), y(1), y(2))
                }
            };
            record(to_value(&estimate_unmeasured_visibility(
                est.v12, est.v23, yields,
            )?))
        }
        Command::Opld => {
            let opld = cfg.opld.as_ref().ok_or_else(|| missing("opld"))?;
            record(to_value(&opld_feasible(opld)?))
        }
    }
}

/// Renders a command output. Scans in CSV use the fixed column layout; other
/// records become `field,value` rows.
pub fn render(
    command: Command,
    cfg: &RunConfig,
    output: &CommandOutput,
    format: OutputFormat,
) -> String {
    match format {
        OutputFormat::Json => json_document(command.name(), to_value(cfg), output.result.clone()),
        OutputFormat::Csv => match &output.scan {
            Some(scan) => scan_csv(scan),
            None => record_csv(&super::output::round_json(output.result.clone())),
        },
    }
}

/// Command-line overrides of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
}

/// Loads the config, runs `command` and writes the output. Returns the text
/// written when no output path is configured.
pub fn execute(
    command: Command,
    config_path: &Path,
    overrides: &Overrides,
) -> Result<Option<String>> {
    let mut cfg = parse_config(config_path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = Some(seed);
        if let Some(scan) = cfg.scan.as_mut().filter(|s| s.integration_time.is_some()) {
            scan.rng_seed = Some(seed);
        }
    }
    let format = overrides
        .format
        .or(cfg.output.format)
        .unwrap_or(match command {
            Command::Scan => OutputFormat::Csv,
            _ => OutputFormat::Json,
        });
    cfg.output.format = Some(format);
    if let Some(out) = &overrides.out {
        cfg.output.path = Some(out.clone());
    }

    let output = run_command(command, &cfg)?;
    let text = render(command, &cfg, &output, format);
    match &cfg.output.path {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}
