//! Visibility loss from misalignment, yield imbalance and path-length
//! mismatch.
//!
//! Misalignment is modelled through the field overlap `O` of two fundamental
//! Gaussian modes. The non-overlapping part is treated as which-source
//! information, so `V = O` and `D = sqrt(1 - O^2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::partition::DualityRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamParams {
    /// 1/e^2 intensity radius at the focus, meters.
    pub waist: f64,
    pub wavelength: f64,
    pub propagation_distance: f64,
}

impl BeamParams {
    /// 50 um waist, 810 nm photons, 400 mm between crystals.
    pub const REFERENCE: BeamParams = BeamParams {
        waist: 50e-6,
        wavelength: 810e-9,
        propagation_distance: 0.4,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beam.waist", self.waist),
            ("beam.wavelength", self.wavelength),
            ("beam.propagation_distance", self.propagation_distance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    /// Far-field half-angle divergence `lambda / (pi w0)`.
    pub fn divergence(&self) -> f64 {
        self.wavelength / (PI * self.waist)
    }
}

impl Default for BeamParams {
    fn default() -> Self {
        Self::REFERENCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentError {
    pub longitudinal: f64,
    pub transverse: f64,
    pub tilt: f64,
}

impl AlignmentError {
    pub fn validate(&self) -> Result<()> {
        if !(self.longitudinal.is_finite() && self.transverse.is_finite()) {
            return Err(Error::validation("alignment", "offsets must be finite"));
        }
        if !(0.0..PI / 2.0).contains(&self.tilt) {
            return Err(Error::validation("alignment.tilt", "must lie in [0, pi/2)"));
        }
        Ok(())
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(name, "must be finite and >= 0"))
    }
}

/// Overlap of two identical modes displaced sideways by `dx`.
pub fn overlap_transverse(dx: f64, beam: &BeamParams) -> Result<f64> {
    check_nonneg("transverse", dx)?;
    beam.validate()?;
    Ok((-dx * dx / (2.0 * beam.waist * beam.waist)).exp())
}

/// Overlap of two modes whose foci are separated by `dz` along the axis.
pub fn overlap_longitudinal(dz: f64, beam: &BeamParams) -> Result<f64> {
    check_nonneg("longitudinal", dz)?;
    beam.validate()?;
    let u = dz / (2.0 * beam.rayleigh_range());
    Ok((1.0 + u * u).powf(-0.25))
}

/// Overlap after a relative tilt `theta`, `exp(-k (theta / theta_div)^2)`.
pub fn overlap_tilt(theta: f64, beam: &BeamParams, calibration: f64) -> Result<f64> {
    check_nonneg("tilt", theta)?;
    beam.validate()?;
    if !(calibration.is_finite() && calibration > 0.0) {
        return Err(Error::validation(
            "tilt_calibration",
            "must be finite and > 0",
        ));
    }
    let x = theta / beam.divergence();
    Ok((-calibration * x * x).exp())
}

/// Tilt constant `k` for which `overlap_tilt(angle) == overlap`.
pub fn calibrate_tilt(beam: &BeamParams, angle: f64, overlap: f64) -> Result<f64> {
    beam.validate()?;
    if !(angle.is_finite() && angle > 0.0) {
        return Err(Error::validation("calibration.angle", "must be > 0"));
    }
    if !(overlap > 0.0 && overlap < 1.0) {
        return Err(Error::validation(
            "calibration.overlap",
            "must lie in (0, 1)",
        ));
    }
    let x = angle / beam.divergence();
    Ok(-overlap.ln() / (x * x))
}

/// Tilt constant for the reference geometry: 0.1 degree leaves 97% visibility.
pub fn reference_tilt_calibration() -> f64 {
    calibrate_tilt(&BeamParams::REFERENCE, 0.1f64.to_radians(), 0.97)
        .expect("reference geometry is valid")
}

/// Combined overlap of all three misalignments.
pub fn alignment_overlap(
    error: &AlignmentError,
    beam: &BeamParams,
    tilt_calibration: f64,
) -> Result<f64> {
    error.validate()?;
    Ok(overlap_longitudinal(error.longitudinal.abs(), beam)?
        * overlap_transverse(error.transverse.abs(), beam)?
        * overlap_tilt(error.tilt, beam, tilt_calibration)?)
}

pub fn visibility_from_overlap(overlap: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::validation("overlap", "must lie in [0, 1]"));
    }
    Ok(overlap)
}

/// Duality record implied by a mode overlap: `V = O`, `D = sqrt(1 - O^2)`.
pub fn overlap_duality(overlap: f64) -> Result<DualityRecord> {
    let v = visibility_from_overlap(overlap)?;
    Ok(DualityRecord::from_parts(v, (1.0 - v * v).max(0.0).sqrt()))
}

/// Visibility seen sweeping the third crystal's phase with the first held at
/// `phi_fixed`, for intensity ratios `(B/A, C/A)`.
pub fn imbalance_visibility(yield_ratios: (f64, f64), phi_fixed: f64) -> Result<f64> {
    let (rb, rc) = yield_ratios;
    if !(rb.is_finite() && rb > 0.0 && rc.is_finite() && rc > 0.0) {
        return Err(Error::validation(
            "yield_ratios",
            "ratios must be finite and > 0",
        ));
    }
    let alpha = Complex64::from_polar(1.0, phi_fixed) + rb.sqrt();
    let c = rc.sqrt();
    let a = alpha.norm();
    Ok(2.0 * a * c / (a * a + c * c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcePaths {
    pub pump: f64,
    pub spdc: f64,
    pub signal: f64,
    pub idler: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpldSpec {
    pub sources: Vec<SourcePaths>,
    pub pump_coherence_length: f64,
    pub spdc_coherence_length: f64,
}

impl OpldSpec {
    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.sources.iter().enumerate() {
            for (name, v) in [
                ("pump", s.pump),
                ("spdc", s.spdc),
                ("signal", s.signal),
                ("idler", s.idler),
            ] {
                check_nonneg(&format!("opld.sources[{k}].{name}"), v)?;
            }
        }
        for (name, v) in [
            ("opld.pump_coherence_length", self.pump_coherence_length),
            ("opld.spdc_coherence_length", self.spdc_coherence_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCoherence {
    pub i: usize,
    pub j: usize,
    pub pump_ok: bool,
    pub spdc_ok: bool,
    /// `L_coh - |difference|`; negative when the condition fails.
    pub pump_margin: f64,
    pub spdc_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpldReport {
    pub pairs: Vec<PairCoherence>,
    pub all_ok: bool,
}

/// Checks both path-length conditions for every unordered pair of sources.
/// Boundaries are inclusive.
pub fn opld_feasible(spec: &OpldSpec) -> Result<OpldReport> {
    spec.validate()?;
    let n = spec.sources.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&spec.sources[i], &spec.sources[j]);
            let pump_diff = ((a.pump + a.spdc) - (b.pump + b.spdc)).abs();
            let spdc_diff = ((b.signal - b.idler) - (a.signal - a.idler)).abs();
            let pump_margin = spec.pump_coherence_length - pump_diff;
            let spdc_margin = spec.spdc_coherence_length - spdc_diff;
            pairs.push(PairCoherence {
                i,
                j,
                pump_ok: pump_margin >= 0.0,
                spdc_ok: spdc_margin >= 0.0,
                pump_margin,
                spdc_margin,
            });
        }
    }
    let all_ok = pairs.iter().all(|p| p.pump_ok && p.spdc_ok);
    Ok(OpldReport { pairs, all_ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V13Estimate {
    pub v13: f64,
    pub cos_e1: f64,
    pub cos_e3: f64,
}

/// Visibility between the outer sources inferred from the two measured
/// neighbour visibilities, with the middle source as the coherent reference.
pub fn estimate_unmeasured_visibility(
    v12: f64,
    v23: f64,
    yields: (f64, f64, f64),
) -> Result<V13Estimate> {
    for (name, v) in [("v12", v12), ("v23", v23)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::validation(name, "must lie in (0, 1]"));
        }
    }
    let (y1, y2, y3) = yields;
    if !([y1, y2, y3].iter().all(|y| y.is_finite() && *y > 0.0)) {
        return Err(Error::validation("yields", "must be finite and > 0"));
    }
    let cos_e1 = v12 * (y1 + y2) / (2.0 * (y1 * y2).sqrt());
    let cos_e3 = v23 * (y2 + y3) / (2.0 * (y2 * y3).sqrt());
    for (name, c) in [("cos e1", cos_e1), ("cos e3", cos_e3)] {
        if c > 1.0 + 1e-12 {
            return Err(Error::InconsistentInputs(format!(
                "{name} = {c} exceeds 1: visibility larger than the yield imbalance allows"
            )));
        }
    }
    let (cos_e1, cos_e3) = (cos_e1.min(1.0), cos_e3.min(1.0));
    let v13 = 2.0 * (y1 * y3).sqrt() * cos_e1 * cos_e3 / (y1 + y3);
    Ok(V13Estimate {
        v13,
        cos_e1,
        cos_e3,
    })
}
