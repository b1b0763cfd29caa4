//! Photon-pair sources, emission amplitudes and pair rates.
//!
//! A source contributes the amplitude `sqrt(yield) * exp(i * phase)`. Partial
//! coherence is modelled with a leak angle `e`: a fraction `cos(e)` of the
//! amplitude goes into the mode shared by all sources, and `sin(e)` into a
//! private mode that is orthogonal to everything else. Rates are normalized
//! so that a single active source yields exactly its `yield_rate`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Probability amplitude (units of sqrt(Hz)).
pub type ComplexValue = Complex64;

/// Argument of a complex value, with `arg(0) == 0`.
pub fn argument(z: ComplexValue) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re)
    }
}

/// One photon-pair source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub label: String,
    /// Coincidence rate in Hz with only this source active.
    pub yield_rate: f64,
    /// Radians. Interpreted according to the owning spec's [`PhaseConvention`].
    #[serde(default)]
    pub phase: f64,
    /// Partial-coherence angle in `[0, pi/2]`; zero means fully coherent.
    #[serde(default)]
    pub leak_angle: f64,
}

impl SourceSpec {
    pub fn new(label: impl Into<String>, yield_rate: f64, phase: f64) -> Self {
        SourceSpec {
            label: label.into(),
            yield_rate,
            phase,
            leak_angle: 0.0,
        }
    }

    pub fn with_leak_angle(mut self, leak_angle: f64) -> Self {
        self.leak_angle = leak_angle;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("sources[{}].{}", self.label, name);
        if !self.yield_rate.is_finite() || self.yield_rate < 0.0 {
            return Err(Error::validation(
                field("yield_rate"),
                "must be finite and >= 0",
            ));
        }
        if !self.phase.is_finite() {
            return Err(Error::validation(field("phase"), "must be finite"));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.leak_angle) {
            return Err(Error::validation(
                field("leak_angle"),
                "must lie in [0, pi/2]",
            ));
        }
        Ok(())
    }

    pub fn is_coherent(&self) -> bool {
        self.leak_angle == 0.0
    }
}

/// How the `phase` field of each source is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// Each phase is the source's own absolute phase.
    #[default]
    AbsolutePerSource,
    /// Each phase is an increment on top of the previous source's phase.
    Cumulative,
}

/// An ordered set of sources emitting into identical modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferometerSpec {
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub phase_convention: PhaseConvention,
}

impl InterferometerSpec {
    /// Builds and validates a spec with absolute per-source phases.
    pub fn new(sources: Vec<SourceSpec>) -> Result<Self> {
        Self::with_convention(sources, PhaseConvention::AbsolutePerSource)
    }

    pub fn with_convention(sources: Vec<SourceSpec>, convention: PhaseConvention) -> Result<Self> {
        let spec = InterferometerSpec {
            sources,
            phase_convention: convention,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Three crystals NL1, NL2, NL3 with phases `(phi_a, 0, phi_c)`.
    pub fn three_crystal(yields: [f64; 3], phi_a: f64, phi_c: f64) -> Result<Self> {
        Self::new(vec![
            SourceSpec::new("NL1", yields[0], phi_a),
            SourceSpec::new("NL2", yields[1], 0.0),
            SourceSpec::new("NL3", yields[2], phi_c),
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::validation(
                "sources",
                "at least one source is required",
            ));
        }
        let mut seen = HashSet::new();
        for s in &self.sources {
            s.validate()?;
            if !seen.insert(s.label.as_str()) {
                return Err(Error::validation(
                    "sources.label",
                    format!("duplicate label `{}`", s.label),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.label == label)
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }

    pub fn is_coherent(&self) -> bool {
        self.sources.iter().all(SourceSpec::is_coherent)
    }

    /// Accumulated (absolute) phase of every source.
    pub fn absolute_phases(&self) -> Vec<f64> {
        match self.phase_convention {
            PhaseConvention::AbsolutePerSource => self.sources.iter().map(|s| s.phase).collect(),
            PhaseConvention::Cumulative => self
                .sources
                .iter()
                .scan(0.0, |acc, s| {
                    *acc += s.phase;
                    Some(*acc)
                })
                .collect(),
        }
    }

    /// Re-expresses the phases under another convention without changing
    /// any physical quantity.
    pub fn to_convention(&self, convention: PhaseConvention) -> Self {
        let absolute = self.absolute_phases();
        let phases: Vec<f64> = match convention {
            PhaseConvention::AbsolutePerSource => absolute,
            PhaseConvention::Cumulative => absolute
                .iter()
                .enumerate()
                .map(|(k, &p)| if k == 0 { p } else { p - absolute[k - 1] })
                .collect(),
        };
        let mut out = self.clone();
        out.phase_convention = convention;
        for (s, p) in out.sources.iter_mut().zip(phases) {
            s.phase = p;
        }
        out
    }

    /// Copy of the spec with the listed sources' yields set to zero.
    pub fn with_blocked(&self, blocked: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        for &k in blocked {
            self.check_index(k)?;
            out.sources[k].yield_rate = 0.0;
        }
        Ok(out)
    }

    /// Sets the raw `phase` field of one source (in this spec's convention).
    pub fn set_phase(&mut self, index: usize, phase: f64) -> Result<()> {
        self.check_index(index)?;
        self.sources[index].phase = phase;
        Ok(())
    }
}

/// Full fully-coherent amplitude of one source, `sqrt(yield) * exp(i phase)`.
///
/// The phase used is the source's raw field; callers working with cumulative
/// specs go through [`fock_state`] or [`total_amplitude`].
pub fn source_amplitude(source: &SourceSpec) -> ComplexValue {
    ComplexValue::from_polar(source.yield_rate.sqrt(), source.phase)
}

fn amplitude_at(source: &SourceSpec, absolute_phase: f64) -> ComplexValue {
    ComplexValue::from_polar(source.yield_rate.sqrt(), absolute_phase)
}

/// Coherent sum of all source amplitudes. Only defined when every source is
/// fully coherent.
pub fn total_amplitude(spec: &InterferometerSpec) -> Result<ComplexValue> {
    if let Some(s) = spec.sources.iter().find(|s| !s.is_coherent()) {
        return Err(Error::IncoherentSource {
            label: s.label.clone(),
        });
    }
    Ok(spec
        .sources
        .iter()
        .zip(spec.absolute_phases())
        .map(|(s, p)| amplitude_at(s, p))
        .sum())
}

/// State vector over `{common, leak_1, ..., leak_N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    pub amplitudes: Vec<ComplexValue>,
}

impl FockVector {
    pub fn common(&self) -> ComplexValue {
        self.amplitudes[0]
    }

    /// Amplitude in the private mode of source `k` (0-based).
    pub fn leak(&self, k: usize) -> ComplexValue {
        self.amplitudes[k + 1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

pub fn fock_state(spec: &InterferometerSpec) -> FockVector {
    let n = spec.len();
    let mut amplitudes = vec![ComplexValue::new(0.0, 0.0); n + 1];
    for (k, (s, phase)) in spec.sources.iter().zip(spec.absolute_phases()).enumerate() {
        let full = amplitude_at(s, phase);
        let (sin_e, cos_e) = s.leak_angle.sin_cos();
        amplitudes[0] += full * cos_e;
        amplitudes[k + 1] = full * sin_e;
    }
    FockVector { amplitudes }
}

/// Detected pair rate in Hz.
///
/// `|sum_k sqrt(y_k) cos(e_k) e^{i phi_k}|^2 + sum_k y_k sin^2(e_k)`.
pub fn pair_rate(spec: &InterferometerSpec) -> f64 {
    let mut common = ComplexValue::new(0.0, 0.0);
    let mut incoherent = 0.0;
    for (s, phase) in spec.sources.iter().zip(spec.absolute_phases()) {
        let (sin_e, cos_e) = s.leak_angle.sin_cos();
        common += amplitude_at(s, phase) * cos_e;
        incoherent += s.yield_rate * sin_e * sin_e;
    }
    common.norm_sqr() + incoherent
}

/// Rate of the two-source subsystem `{i, j}` at relative phase `phi`, all
/// other sources switched off.
pub fn pairwise_rate(spec: &InterferometerSpec, i: usize, j: usize, phi: f64) -> Result<f64> {
    spec.check_index(i)?;
    spec.check_index(j)?;
    if i == j {
        return Err(Error::validation("pairwise_rate", "indices must differ"));
    }
    let (si, sj) = (&spec.sources[i], &spec.sources[j]);
    let cross =
        2.0 * (si.yield_rate * sj.yield_rate).sqrt() * si.leak_angle.cos() * sj.leak_angle.cos();
    Ok(si.yield_rate + sj.yield_rate + cross * phi.cos())
}

/// Fringe visibility of the two-source subsystem `{i, j}`.
pub fn pairwise_visibility(spec: &InterferometerSpec, i: usize, j: usize) -> Result<f64> {
    let max = pairwise_rate(spec, i, j, 0.0)?;
    let min = pairwise_rate(spec, i, j, std::f64::consts::PI)?;
    if max + min == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok((max - min) / (max + min))
}
