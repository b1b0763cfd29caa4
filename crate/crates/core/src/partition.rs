//! Grouping sources into effective sources, visibility/distinguishability
//! duality, blocking experiments and which-source attribution.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{pair_rate, source_amplitude, ComplexValue, InterferometerSpec};

/// Partition of source indices into labelled blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub blocks: Vec<Vec<usize>>,
    pub block_labels: Vec<String>,
}

impl Grouping {
    /// Validates that `blocks` partition `0..n_sources`.
    pub fn new(
        n_sources: usize,
        blocks: Vec<Vec<usize>>,
        block_labels: Vec<String>,
    ) -> Result<Self> {
        if blocks.len() != block_labels.len() {
            return Err(Error::validation(
                "grouping.block_labels",
                "one label per block required",
            ));
        }
        let mut owner = vec![None; n_sources];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::validation(
                    "grouping.blocks",
                    format!("block {b} is empty"),
                ));
            }
            for &k in block {
                if k >= n_sources {
                    return Err(Error::IndexOutOfRange {
                        index: k,
                        len: n_sources,
                    });
                }
                if owner[k].replace(b).is_some() {
                    return Err(Error::validation(
                        "grouping.blocks",
                        format!("source {k} appears in more than one block"),
                    ));
                }
            }
        }
        if let Some(k) = owner.iter().position(Option::is_none) {
            return Err(Error::validation(
                "grouping.blocks",
                format!("source {k} is not in any block"),
            ));
        }
        Ok(Grouping {
            blocks,
            block_labels,
        })
    }

    /// Two blocks labelled `S1`/`S2`.
    pub fn pair(n_sources: usize, first: Vec<usize>, second: Vec<usize>) -> Result<Self> {
        Self::new(
            n_sources,
            vec![first, second],
            vec!["S1".into(), "S2".into()],
        )
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSource {
    pub label: String,
    pub amplitude: ComplexValue,
}

/// Coherent amplitude sum over a block of sources.
pub fn effective_amplitude(spec: &InterferometerSpec, block: &[usize]) -> Result<ComplexValue> {
    let phases = spec.absolute_phases();
    let mut sum = ComplexValue::new(0.0, 0.0);
    for &k in block {
        spec.check_index(k)?;
        let s = &spec.sources[k];
        if !s.is_coherent() {
            return Err(Error::IncoherentSource {
                label: s.label.clone(),
            });
        }
        let mut absolute = s.clone();
        absolute.phase = phases[k];
        sum += source_amplitude(&absolute);
    }
    Ok(sum)
}

pub fn effective_sources(
    spec: &InterferometerSpec,
    grouping: &Grouping,
) -> Result<Vec<EffectiveSource>> {
    grouping
        .blocks
        .iter()
        .zip(&grouping.block_labels)
        .map(|(block, label)| {
            Ok(EffectiveSource {
                label: label.clone(),
                amplitude: effective_amplitude(spec, block)?,
            })
        })
        .collect()
}

fn intensities(a1: ComplexValue, a2: ComplexValue) -> Result<(f64, f64)> {
    let (i1, i2) = (a1.norm_sqr(), a2.norm_sqr());
    if i1 + i2 == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok((i1, i2))
}

/// `2|a1||a2| / (|a1|^2 + |a2|^2)`.
pub fn two_source_visibility(a1: ComplexValue, a2: ComplexValue) -> Result<f64> {
    let (i1, i2) = intensities(a1, a2)?;
    Ok(2.0 * a1.norm() * a2.norm() / (i1 + i2))
}

/// `||a1|^2 - |a2|^2| / (|a1|^2 + |a2|^2)`, independent of argument order.
pub fn distinguishability(a1: ComplexValue, a2: ComplexValue) -> Result<f64> {
    let (i1, i2) = intensities(a1, a2)?;
    Ok((i1 - i2).abs() / (i1 + i2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityRecord {
    pub v: f64,
    pub d: f64,
    pub v2: f64,
    pub d2: f64,
    pub sum: f64,
}

impl DualityRecord {
    pub fn from_parts(v: f64, d: f64) -> Self {
        let (v2, d2) = (v * v, d * d);
        DualityRecord {
            v,
            d,
            v2,
            d2,
            sum: v2 + d2,
        }
    }
}

pub fn duality_record(a1: ComplexValue, a2: ComplexValue) -> Result<DualityRecord> {
    Ok(DualityRecord::from_parts(
        two_source_visibility(a1, a2)?,
        distinguishability(a1, a2)?,
    ))
}

/// Duality record of a two-block coherent grouping.
pub fn grouping_duality(spec: &InterferometerSpec, grouping: &Grouping) -> Result<DualityRecord> {
    if grouping.len() != 2 {
        return Err(Error::validation(
            "grouping.blocks",
            format!(
                "duality analysis needs exactly 2 blocks, got {}",
                grouping.len()
            ),
        ));
    }
    let a1 = effective_amplitude(spec, &grouping.blocks[0])?;
    let a2 = effective_amplitude(spec, &grouping.blocks[1])?;
    duality_record(a1, a2)
}

/// Pair rate with the listed sources removed.
pub fn block_experiment(spec: &InterferometerSpec, blocked: &[usize]) -> Result<f64> {
    Ok(pair_rate(&spec.with_blocked(blocked)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributionInputs {
    pub cc_tot: f64,
    pub cc_when_last_blocked: f64,
    pub cc_when_first_blocked: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    /// Probability the pairs come from the first source, `1 - CC(first off) / CC_tot`.
    pub p_first: f64,
    /// Probability the pairs come from the last source, `1 - CC(last off) / CC_tot`.
    pub p_last: f64,
    pub p_first_raw: f64,
    pub p_last_raw: f64,
    pub clamped: bool,
    pub contradiction: bool,
    pub inputs: AttributionInputs,
}

/// Which-source probabilities from the total count and the two blocking counts.
pub fn attribution(
    cc_tot: f64,
    cc_when_last_blocked: f64,
    cc_when_first_blocked: f64,
) -> Result<AttributionResult> {
    for (name, v) in [
        ("cc_tot", cc_tot),
        ("cc_when_last_blocked", cc_when_last_blocked),
        ("cc_when_first_blocked", cc_when_first_blocked),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::validation(name, "counts must be finite and >= 0"));
        }
    }
    if cc_tot == 0.0 {
        return Err(Error::UndefinedAttribution);
    }
    let p_first_raw = (cc_tot - cc_when_first_blocked) / cc_tot;
    let p_last_raw = (cc_tot - cc_when_last_blocked) / cc_tot;
    let p_first = p_first_raw.clamp(0.0, 1.0);
    let p_last = p_last_raw.clamp(0.0, 1.0);
    Ok(AttributionResult {
        p_first,
        p_last,
        p_first_raw,
        p_last_raw,
        clamped: p_first != p_first_raw || p_last != p_last_raw,
        contradiction: p_first + p_last > 1.0,
        inputs: AttributionInputs {
            cc_tot,
            cc_when_last_blocked,
            cc_when_first_blocked,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GedankenOptions {
    /// Phase slack (radians) within which a block counts as fully suppressed.
    pub phase_tolerance: f64,
}

impl Default for GedankenOptions {
    fn default() -> Self {
        GedankenOptions {
            phase_tolerance: 1e-9,
        }
    }
}

/// One experimenter's view: two black boxes and what removing each shows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perspective {
    pub grouping: Grouping,
    pub members: Vec<Vec<String>>,
    pub effective: Vec<EffectiveSource>,
    /// Rate with block `b` removed, for each block.
    pub rate_without_block: Vec<f64>,
    /// Index of the block whose amplitude vanishes, if exactly one does.
    pub silent_block: Option<usize>,
    /// Crystals to which detected pairs are attributed, if any.
    pub attributed_to: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GedankenReport {
    pub total_rate: f64,
    pub perspectives: Vec<Perspective>,
    pub attribution: Option<AttributionResult>,
    /// Both perspectives attribute all pairs, to disjoint sets of crystals.
    pub contradiction: bool,
    pub summary: String,
}

fn is_silent(
    spec: &InterferometerSpec,
    block: &[usize],
    amplitude: ComplexValue,
    tol: f64,
) -> bool {
    // A balanced pair detuned by d from exact cancellation leaves |a| ~ sqrt(y) d.
    let scale: f64 = block
        .iter()
        .map(|&k| spec.sources[k].yield_rate)
        .sum::<f64>()
        .sqrt();
    amplitude.norm() <= tol * scale
}

fn perspective(
    spec: &InterferometerSpec,
    grouping: Grouping,
    total: f64,
    tol: f64,
) -> Result<Perspective> {
    let effective = effective_sources(spec, &grouping)?;
    let rate_without_block = grouping
        .blocks
        .iter()
        .map(|b| block_experiment(spec, b))
        .collect::<Result<Vec<_>>>()?;
    let silent: Vec<usize> = grouping
        .blocks
        .iter()
        .zip(&effective)
        .enumerate()
        .filter(|(_, (block, eff))| is_silent(spec, block, eff.amplitude, tol))
        .map(|(b, _)| b)
        .collect();
    let members: Vec<Vec<String>> = grouping
        .blocks
        .iter()
        .map(|b| b.iter().map(|&k| spec.sources[k].label.clone()).collect())
        .collect();
    let silent_block = (silent.len() == 1).then(|| silent[0]);
    let attributed_to = match silent_block {
        Some(b) if total > 0.0 => Some(members[1 - b].clone()),
        _ => None,
    };
    Ok(Perspective {
        grouping,
        members,
        effective,
        rate_without_block,
        silent_block,
        attributed_to,
    })
}

/// Runs the two-experimenter black-box analysis on a three-source device.
///
/// Perspective 1 groups `{1,2},{3}`; perspective 2 groups `{1},{2,3}`.
pub fn gedanken_report(
    spec: &InterferometerSpec,
    options: GedankenOptions,
) -> Result<GedankenReport> {
    if spec.len() != 3 {
        return Err(Error::validation(
            "sources",
            format!(
                "black-box analysis needs exactly 3 sources, got {}",
                spec.len()
            ),
        ));
    }
    let total_rate = pair_rate(spec);
    let first = Grouping::pair(3, vec![0, 1], vec![2])?;
    let second = Grouping::new(
        3,
        vec![vec![0], vec![1, 2]],
        vec!["S1'".into(), "S2'".into()],
    )?;
    let perspectives = vec![
        perspective(spec, first, total_rate, options.phase_tolerance)?,
        perspective(spec, second, total_rate, options.phase_tolerance)?,
    ];

    let attribution = if total_rate > 0.0 {
        Some(attribution(
            total_rate,
            perspectives[0].rate_without_block[1],
            perspectives[1].rate_without_block[0],
        )?)
    } else {
        None
    };

    let contradiction = match (
        &perspectives[0].attributed_to,
        &perspectives[1].attributed_to,
    ) {
        (Some(x), Some(y)) => x.iter().all(|l| !y.contains(l)),
        _ => false,
    };

    let mut summary = String::new();
    for (n, p) in perspectives.iter().enumerate() {
        let boxes: Vec<String> = p
            .grouping
            .block_labels
            .iter()
            .zip(&p.members)
            .map(|(l, m)| format!("{l}={{{}}}", m.join(",")))
            .collect();
        let _ = write!(summary, "perspective {} [{}]: ", n + 1, boxes.join(" "));
        match (&p.silent_block, &p.attributed_to) {
            (Some(b), Some(to)) => {
                let _ = writeln!(
                    summary,
                    "{} emits nothing; pairs attributed to {}",
                    p.grouping.block_labels[*b],
                    to.join("&")
                );
            }
            _ => {
                let _ = writeln!(summary, "no full which-source attribution");
            }
        }
    }
    let _ = write!(
        summary,
        "{}",
        if contradiction {
            "contradiction: the two perspectives attribute the same detections to different crystals"
        } else {
            "no contradiction"
        }
    );

    Ok(GedankenReport {
        total_rate,
        perspectives,
        attribution,
        contradiction,
        summary,
    })
}
