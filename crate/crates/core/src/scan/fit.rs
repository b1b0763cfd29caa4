//! Weighted least-squares fit of `y = offset + amplitude * cos(phi - phase0)`.
//!
//! Levenberg-Marquardt over `(offset, amplitude, phase0)`, started from the
//! series mean, half the peak-to-peak range and the phase of the first DFT
//! component.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const MAX_REWEIGHTS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeSample {
    pub phase: f64,
    pub value: f64,
    /// One-sigma error; `None` for uniform weights.
    pub sigma: Option<f64>,
}

/// Samples with Poisson errors. Zero-count bins get `sigma = 1`.
pub fn samples_from_counts(phases: &[f64], counts: &[u64]) -> Vec<FringeSample> {
    phases
        .iter()
        .zip(counts)
        .map(|(&phase, &c)| FringeSample {
            phase,
            value: c as f64,
            sigma: Some((c as f64).sqrt().max(1.0)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    /// In `[0, 2pi)`. Zero when `degenerate`.
    pub phase0: f64,
    pub visibility: f64,
    /// One-sigma uncertainty of `visibility` from the parameter covariance.
    pub visibility_sigma: f64,
    pub residual_rms: f64,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// No measurable modulation; `phase0` carries no information.
    pub degenerate: bool,
}

struct Normal {
    jtj: [[f64; 3]; 3],
    jtr: [f64; 3],
    chi2: f64,
}

fn model(p: &[f64; 3], phi: f64) -> f64 {
    p[0] + p[1] * (phi - p[2]).cos()
}

fn normal_equations(samples: &[FringeSample], p: &[f64; 3]) -> Normal {
    let mut jtj = [[0.0; 3]; 3];
    let mut jtr = [0.0; 3];
    let mut chi2 = 0.0;
    for s in samples {
        let w = s.sigma.map_or(1.0, |sg| 1.0 / (sg * sg));
        let (sin, cos) = (s.phase - p[2]).sin_cos();
        let grad = [1.0, cos, p[1] * sin];
        let r = s.value - model(p, s.phase);
        chi2 += w * r * r;
        for a in 0..3 {
            jtr[a] += w * grad[a] * r;
            for b in 0..3 {
                jtj[a][b] += w * grad[a] * grad[b];
            }
        }
    }
    Normal { jtj, jtr, chi2 }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inverse3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = det3(m);
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(3) {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *cell = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    Some(inv)
}

fn solve_damped(n: &Normal, lambda: f64) -> Option<[f64; 3]> {
    let mut a = n.jtj;
    for (k, row) in a.iter_mut().enumerate() {
        row[k] += lambda * n.jtj[k][k].max(1e-300);
    }
    let inv = inverse3(&a)?;
    let mut step = [0.0; 3];
    for (k, s) in step.iter_mut().enumerate() {
        *s = (0..3).map(|j| inv[k][j] * n.jtr[j]).sum();
    }
    Some(step)
}

fn initial_guess(samples: &[FringeSample]) -> [f64; 3] {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.value).sum::<f64>() / n;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.value), hi.max(s.value))
        });
    let (c, s) = samples.iter().fold((0.0, 0.0), |(c, s), x| {
        let d = x.value - mean;
        (c + d * x.phase.cos(), s + d * x.phase.sin())
    });
    [mean, (hi - lo) / 2.0, s.atan2(c)]
}

/// Fits the fringe model to at least four samples spanning half a period.
///
/// Returns `converged = false` with the best parameters seen if the
/// iteration budget runs out or the normal matrix becomes singular.
pub fn fit_sinusoid(samples: &[FringeSample]) -> Result<FringeFit> {
    if samples.len() < 4 {
        return Err(Error::validation("samples", "at least 4 points required"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.phase), hi.max(s.phase))
        });
    if (hi - lo).is_nan() || hi - lo < PI {
        return Err(Error::validation(
            "samples",
            "phases must span at least half a period",
        ));
    }
    for s in samples {
        if !s.value.is_finite() || !s.phase.is_finite() {
            return Err(Error::validation("samples", "non-finite sample"));
        }
        if let Some(sg) = s.sigma {
            if !(sg.is_finite() && sg > 0.0) {
                return Err(Error::validation("samples.sigma", "must be finite and > 0"));
            }
        }
    }

    let spread = samples
        .iter()
        .map(|s| (s.value - samples[0].value).abs())
        .fold(0.0, f64::max);
    let scale = samples.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Ok(constant_fit(samples));
    }

    let mut p = initial_guess(samples);
    let mut current = normal_equations(samples, &p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let Some(step) = solve_damped(&current, lambda) else {
            break;
        };
        let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
        let next = normal_equations(samples, &trial);
        if next.chi2 <= current.chi2 {
            let gain = current.chi2 - next.chi2;
            p = trial;
            current = next;
            lambda = (lambda * 0.3).max(1e-12);
            let small_step = step[0].abs() <= 1e-12 * p[0].abs().max(1e-300)
                && step[1].abs() <= 1e-12 * p[1].abs().max(p[0].abs())
                && step[2].abs() <= 1e-10;
            if gain <= 1e-14 * current.chi2.max(1e-300) || small_step {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // No downhill direction left: at a minimum to machine precision.
                converged = true;
                break;
            }
        }
    }

    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] += PI;
    }
    p[2] = p[2].rem_euclid(TAU);
    let degenerate = p[1] <= 1e-12 * p[0].abs();
    if degenerate {
        p[2] = 0.0;
    }

    let n = samples.len();
    let residual_rms = (samples
        .iter()
        .map(|s| (s.value - model(&p, s.phase)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let weighted = samples.iter().all(|s| s.sigma.is_some());
    let final_normal = normal_equations(samples, &p);
    let visibility = if p[0] > 0.0 { p[1] / p[0] } else { f64::NAN };
    let visibility_sigma = inverse3(&final_normal.jtj)
        .map(|cov| {
            // Uniform weights carry no absolute scale: use the residual variance.
            let s2 = if weighted {
                1.0
            } else {
                final_normal.chi2 / (n.saturating_sub(3).max(1)) as f64
            };
            let g = [-p[1] / (p[0] * p[0]), 1.0 / p[0]];
            let var =
                g[0] * g[0] * cov[0][0] + 2.0 * g[0] * g[1] * cov[0][1] + g[1] * g[1] * cov[1][1];
            (var * s2).max(0.0).sqrt()
        })
        .unwrap_or(f64::NAN);

    Ok(FringeFit {
        offset: p[0],
        amplitude: p[1],
        phase0: p[2],
        visibility,
        visibility_sigma,
        residual_rms,
        chi2: final_normal.chi2,
        iterations,
        converged: converged && p[0] > 0.0,
        degenerate,
    })
}

/// Poisson maximum-likelihood fit of a counted fringe.
///
/// Refits with `sigma^2` taken from the previous model until the parameters
/// settle. The fixed point is the likelihood maximum, which avoids the bias
/// of weighting by the observed counts when some bins are small.
pub fn fit_poisson_counts(phases: &[f64], counts: &[u64]) -> Result<FringeFit> {
    if phases.len() != counts.len() {
        return Err(Error::validation("counts", "length must match phases"));
    }
    let mut samples = samples_from_counts(phases, counts);
    let mut fit = fit_sinusoid(&samples)?;
    for _ in 0..MAX_REWEIGHTS {
        if fit.degenerate || fit.offset.is_nan() || fit.offset <= 0.0 {
            break;
        }
        let p = [fit.offset, fit.amplitude, fit.phase0];
        for s in &mut samples {
            s.sigma = Some(model(&p, s.phase).max(1.0).sqrt());
        }
        let next = fit_sinusoid(&samples)?;
        let settled = (next.offset - fit.offset).abs() <= 1e-12 * fit.offset
            && (next.visibility - fit.visibility).abs() <= 1e-12;
        fit = next;
        if settled {
            break;
        }
    }
    Ok(fit)
}

fn constant_fit(samples: &[FringeSample]) -> FringeFit {
    let offset = samples[0].value;
    FringeFit {
        offset,
        amplitude: 0.0,
        phase0: 0.0,
        visibility: if offset > 0.0 { 0.0 } else { f64::NAN },
        visibility_sigma: 0.0,
        residual_rms: 0.0,
        chi2: 0.0,
        iterations: 0,
        converged: offset > 0.0,
        degenerate: true,
    }
}
