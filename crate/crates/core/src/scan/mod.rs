//! Phase sweeps over one or two source phases, and fringe-visibility
//! estimation from the sampled rates.

mod counting;
mod fit;

pub use counting::{
    monte_carlo_counts, point_seed, sample_counts, visibility_with_errors,
    visibility_with_poisson_errors, VisibilityEstimate,
};
pub use fit::{fit_poisson_counts, fit_sinusoid, samples_from_counts, FringeFit, FringeSample};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::{pair_rate, InterferometerSpec};

/// Points per full period used when a grid is not given explicitly (5 degree steps).
pub const DEFAULT_STEPS: usize = 73;

/// One swept phase slot, sampled at `steps` points from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAxis {
    pub source: usize,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl PhaseAxis {
    pub fn new(source: usize, start: f64, stop: f64, steps: usize) -> Self {
        PhaseAxis {
            source,
            start,
            stop,
            steps,
        }
    }

    /// `[0, 2pi]` at the default resolution.
    pub fn full_period(source: usize) -> Self {
        Self::new(source, 0.0, TAU, DEFAULT_STEPS)
    }

    pub fn values(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + span * i as f64 / last
                }
            })
            .collect()
    }

    fn validate(&self, n_sources: usize) -> Result<()> {
        if self.source >= n_sources {
            return Err(Error::IndexOutOfRange {
                index: self.source,
                len: n_sources,
            });
        }
        if self.steps < 2 {
            return Err(Error::validation(
                "scan.axes.steps",
                "at least 2 steps required",
            ));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::validation("scan.axes", "grid bounds must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScanSpec {
    pub axes: Vec<PhaseAxis>,
    /// `(source index, phase)` overrides applied before sweeping.
    #[serde(default)]
    pub fixed_phases: Vec<(usize, f64)>,
    /// Seconds per grid point. When set, Poisson counts are drawn.
    #[serde(default)]
    pub integration_time: Option<f64>,
    #[serde(default)]
    pub rng_seed: Option<u64>,
}

impl ScanSpec {
    pub fn one_d(axis: PhaseAxis) -> Self {
        ScanSpec {
            axes: vec![axis],
            ..Default::default()
        }
    }

    pub fn two_d(first: PhaseAxis, second: PhaseAxis) -> Self {
        ScanSpec {
            axes: vec![first, second],
            ..Default::default()
        }
    }

    pub fn with_fixed(mut self, source: usize, phase: f64) -> Self {
        self.fixed_phases.push((source, phase));
        self
    }

    pub fn with_counting(mut self, integration_time: f64, seed: u64) -> Self {
        self.integration_time = Some(integration_time);
        self.rng_seed = Some(seed);
        self
    }

    pub fn validate(&self, spec: &InterferometerSpec) -> Result<()> {
        for axis in &self.axes {
            axis.validate(spec.len())?;
        }
        if self.axes.len() == 2 && self.axes[0].source == self.axes[1].source {
            return Err(Error::validation(
                "scan.axes",
                "the two axes must vary different sources",
            ));
        }
        for &(k, p) in &self.fixed_phases {
            spec.check_index(k)?;
            if !p.is_finite() {
                return Err(Error::validation("scan.fixed_phases", "must be finite"));
            }
        }
        if let Some(t) = self.integration_time {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::validation("scan.integration_time", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Sampled rates on a 1D or 2D grid, stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axis_sources: Vec<usize>,
    pub axes: Vec<Vec<f64>>,
    pub rates: Vec<f64>,
    pub counts: Option<Vec<u64>>,
    pub sigma: Option<Vec<f64>>,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Grid coordinates of flat point `i`.
    pub fn coordinates(&self, i: usize) -> Vec<f64> {
        let mut rest = i;
        let mut out = vec![0.0; self.axes.len()];
        for (d, axis) in self.axes.iter().enumerate().rev() {
            out[d] = axis[rest % axis.len()];
            rest /= axis.len();
        }
        out
    }

    /// Rates along the last axis with the first axis held at index `row` (2D only).
    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.axes[self.axes.len() - 1].len();
        &self.rates[row * n..(row + 1) * n]
    }

    /// Rates along the first axis with the last axis held at index `col` (2D only).
    pub fn column(&self, col: usize) -> Vec<f64> {
        let n = self.axes[self.axes.len() - 1].len();
        self.rates.iter().skip(col).step_by(n).copied().collect()
    }
}

fn run_scan(spec: &InterferometerSpec, scan: &ScanSpec) -> Result<ScanResult> {
    scan.validate(spec)?;
    let mut base = spec.clone();
    for &(k, p) in &scan.fixed_phases {
        base.set_phase(k, p)?;
    }
    let axes: Vec<Vec<f64>> = scan.axes.iter().map(PhaseAxis::values).collect();
    let axis_sources: Vec<usize> = scan.axes.iter().map(|a| a.source).collect();
    let total: usize = axes.iter().map(Vec::len).product();

    let shell = ScanResult {
        axis_sources: axis_sources.clone(),
        axes,
        rates: Vec::new(),
        counts: None,
        sigma: None,
    };
    let rates: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut point = base.clone();
            for (&k, p) in axis_sources.iter().zip(shell.coordinates(i)) {
                point.sources[k].phase = p;
            }
            pair_rate(&point)
        })
        .collect();

    let (counts, sigma) = match scan.integration_time {
        Some(t) => {
            let seed = scan.rng_seed.unwrap_or(0);
            let counts = rates
                .par_iter()
                .enumerate()
                .map(|(i, &r)| sample_counts(r, t, seed, i as u64))
                .collect::<Result<Vec<u64>>>()?;
            let sigma = counts.iter().map(|&c| (c as f64).sqrt()).collect();
            (Some(counts), Some(sigma))
        }
        None => (None, None),
    };

    Ok(ScanResult {
        rates,
        counts,
        sigma,
        ..shell
    })
}

/// Sweeps one source phase.
pub fn scan_1d(spec: &InterferometerSpec, scan: &ScanSpec) -> Result<ScanResult> {
    if scan.axes.len() != 1 {
        return Err(Error::validation(
            "scan.axes",
            "a 1D scan needs exactly one varying phase",
        ));
    }
    run_scan(spec, scan)
}

/// Sweeps two source phases over the full grid.
pub fn scan_2d(spec: &InterferometerSpec, scan: &ScanSpec) -> Result<ScanResult> {
    if scan.axes.len() != 2 {
        return Err(Error::validation(
            "scan.axes",
            "a 2D scan needs exactly two varying phases",
        ));
    }
    run_scan(spec, scan)
}

/// `(max - min) / (max + min)` over sampled points only.
pub fn visibility_of_series(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::validation("series", "at least 2 samples required"));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if max + min <= 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok((max - min) / (max + min))
}

pub fn visibility_minmax(result: &ScanResult) -> Result<f64> {
    visibility_of_series(&result.rates)
}

/// For a 2D scan, the visibility seen when the first axis is held at each of
/// its values and the second axis is swept.
pub fn visibility_profile(result: &ScanResult) -> Result<Vec<(f64, f64)>> {
    if result.axes.len() != 2 {
        return Err(Error::validation(
            "scan.axes",
            "visibility profile needs a 2D scan",
        ));
    }
    result.axes[0]
        .iter()
        .enumerate()
        .map(|(i, &fixed)| Ok((fixed, visibility_of_series(result.row(i))?)))
        .collect()
}

/// Visibility seen when sweeping the third phase of a balanced three-source
/// device with the first phase fixed at `phi_fixed`.
pub fn balanced_three_source_visibility(phi_fixed: f64) -> f64 {
    let alpha = 2.0 * (phi_fixed / 2.0).cos().abs();
    2.0 * alpha / (alpha * alpha + 1.0)
}
