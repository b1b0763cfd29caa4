use multicrystal::imperfections::{
    estimate_unmeasured_visibility, imbalance_visibility, opld_feasible, overlap_duality,
    overlap_longitudinal, overlap_tilt, overlap_transverse, reference_tilt_calibration, BeamParams,
    OpldSpec, SourcePaths,
};
use multicrystal::model::{
    fock_state, pair_rate, total_amplitude, InterferometerSpec, PhaseConvention, SourceSpec,
};
use multicrystal::partition::{
    block_experiment, distinguishability, duality_record, effective_amplitude, gedanken_report,
    two_source_visibility, GedankenOptions,
};
use multicrystal::scan::{
    balanced_three_source_visibility, fit_sinusoid, scan_1d, visibility_minmax, FringeSample,
    PhaseAxis, ScanSpec,
};
use multicrystal::ComplexValue;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

fn source() -> impl Strategy<Value = (f64, f64, f64)> {
    (
        0.0..5000.0f64,
        -10.0..10.0f64,
        prop_oneof![Just(0.0), 0.0..FRAC_PI_2],
    )
}

fn spec_strategy() -> impl Strategy<Value = InterferometerSpec> {
    (prop::collection::vec(source(), 1..6), any::<bool>()).prop_map(|(srcs, cumulative)| {
        let sources = srcs
            .into_iter()
            .enumerate()
            .map(|(k, (y, p, e))| SourceSpec::new(format!("S{k}"), y, p).with_leak_angle(e))
            .collect();
        let conv = if cumulative {
            PhaseConvention::Cumulative
        } else {
            PhaseConvention::AbsolutePerSource
        };
        InterferometerSpec::with_convention(sources, conv).unwrap()
    })
}

fn coherent_spec() -> impl Strategy<Value = InterferometerSpec> {
    prop::collection::vec((0.0..5000.0f64, -10.0..10.0f64), 2..7).prop_map(|srcs| {
        InterferometerSpec::new(
            srcs.into_iter()
                .enumerate()
                .map(|(k, (y, p))| SourceSpec::new(format!("S{k}"), y, p))
                .collect(),
        )
        .unwrap()
    })
}

fn lattice_or_any() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-3i32..3).prop_map(|k| (2 * k + 1) as f64 * PI),
        -10.0..10.0f64
    ]
}

fn scale(spec: &InterferometerSpec) -> f64 {
    spec.sources
        .iter()
        .map(|s| s.yield_rate)
        .sum::<f64>()
        .max(1.0)
        * spec.len() as f64
}

proptest! {
    #[test]
    fn rate_is_non_negative(spec in spec_strategy()) {
        prop_assert!(pair_rate(&spec) >= 0.0);
    }

    #[test]
    fn fock_norm_equals_rate(spec in spec_strategy()) {
        let rate = pair_rate(&spec);
        let norm = fock_state(&spec).norm_sqr();
        prop_assert!((rate - norm).abs() <= 1e-12 * scale(&spec));
        prop_assert_eq!(fock_state(&spec).amplitudes.len(), spec.len() + 1);
    }

    #[test]
    fn coherent_limit_matches_amplitude(spec in coherent_spec()) {
        let amp = total_amplitude(&spec).unwrap();
        prop_assert!((pair_rate(&spec) - amp.norm_sqr()).abs() <= 1e-12 * scale(&spec));
    }

    #[test]
    fn phase_periodicity(spec in spec_strategy(), k in 0usize..6, turns in -3i32..4) {
        let k = k % spec.len();
        let mut shifted = spec.clone();
        shifted.sources[k].phase += TAU * turns as f64;
        prop_assert!((pair_rate(&spec) - pair_rate(&shifted)).abs() <= 1e-10 * scale(&spec));
    }

    #[test]
    fn global_phase_symmetry(spec in spec_strategy(), shift in -7.0..7.0f64) {
        let mut shifted = spec.to_convention(PhaseConvention::AbsolutePerSource);
        for s in &mut shifted.sources {
            s.phase += shift;
        }
        prop_assert!((pair_rate(&spec) - pair_rate(&shifted)).abs() <= 1e-10 * scale(&spec));
    }

    #[test]
    fn convention_conversion_preserves_rate(spec in spec_strategy()) {
        let other = match spec.phase_convention {
            PhaseConvention::Cumulative => PhaseConvention::AbsolutePerSource,
            PhaseConvention::AbsolutePerSource => PhaseConvention::Cumulative,
        };
        let converted = spec.to_convention(other);
        prop_assert!((pair_rate(&spec) - pair_rate(&converted)).abs() <= 1e-10 * scale(&spec));
    }

    #[test]
    fn balanced_pi_rate_is_flat(t in -20.0..20.0f64) {
        let spec = InterferometerSpec::three_crystal([1.0; 3], PI, t).unwrap();
        prop_assert!((pair_rate(&spec) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn duality_identity_for_pure_pairs(re1 in -50.0..50.0f64, im1 in -50.0..50.0f64, re2 in -50.0..50.0f64, im2 in -50.0..50.0f64) {
        let (a1, a2) = (ComplexValue::new(re1, im1), ComplexValue::new(re2, im2));
        prop_assume!(a1.norm() + a2.norm() > 1e-9);
        let r = duality_record(a1, a2).unwrap();
        prop_assert!((r.sum - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&r.v) && (0.0..=1.0).contains(&r.d));
    }

    #[test]
    fn visibility_ignores_arguments(m1 in 0.0..10.0f64, m2 in 0.01..10.0f64, p1 in -7.0..7.0f64, p2 in -7.0..7.0f64) {
        let base = two_source_visibility(ComplexValue::new(m1, 0.0), ComplexValue::new(m2, 0.0)).unwrap();
        let rotated = two_source_visibility(ComplexValue::from_polar(m1, p1), ComplexValue::from_polar(m2, p2)).unwrap();
        prop_assert!((base - rotated).abs() <= 1e-12);
        let d = distinguishability(ComplexValue::from_polar(m1, p1), ComplexValue::from_polar(m2, p2)).unwrap();
        prop_assert!((d - distinguishability(ComplexValue::new(m1, 0.0), ComplexValue::new(m2, 0.0)).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn grouping_is_a_reparametrization(spec in coherent_spec(), mask in 1u32..63) {
        let n = spec.len();
        let first: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
        let second: Vec<usize> = (0..n).filter(|k| mask & (1 << k) == 0).collect();
        prop_assume!(!first.is_empty() && !second.is_empty());
        let a1 = effective_amplitude(&spec, &first).unwrap();
        let a2 = effective_amplitude(&spec, &second).unwrap();
        prop_assert!((pair_rate(&spec) - (a1 + a2).norm_sqr()).abs() <= 1e-10 * scale(&spec));
    }

    #[test]
    fn empty_block_is_identity(spec in spec_strategy()) {
        prop_assert_eq!(block_experiment(&spec, &[]).unwrap(), pair_rate(&spec));
    }

    #[test]
    fn contradiction_only_on_pi_lattice(phi_a in lattice_or_any(), phi_c in lattice_or_any()) {
        let spec = InterferometerSpec::three_crystal([1.0; 3], phi_a, phi_c).unwrap();
        let on_lattice = |p: f64| ((p - PI).rem_euclid(TAU)).min(TAU - (p - PI).rem_euclid(TAU)) < 1e-9;
        let rep = gedanken_report(&spec, GedankenOptions::default()).unwrap();
        prop_assert_eq!(rep.contradiction, on_lattice(phi_a) && on_lattice(phi_c));
    }

    #[test]
    fn overlaps_decrease_from_one(x in 1e-9..1e-3f64, factor in 1.01..10.0f64) {
        let beam = BeamParams::REFERENCE;
        let k = reference_tilt_calibration();
        prop_assert!(overlap_transverse(x * factor, &beam).unwrap() < overlap_transverse(x, &beam).unwrap()
            || overlap_transverse(x, &beam).unwrap() == 0.0);
        prop_assert!(overlap_longitudinal(x * factor, &beam).unwrap() < overlap_longitudinal(x, &beam).unwrap());
        let t = x * 10.0;
        prop_assert!(overlap_tilt(t * factor, &beam, k).unwrap() < overlap_tilt(t, &beam, k).unwrap()
            || overlap_tilt(t, &beam, k).unwrap() == 0.0);
    }

    #[test]
    fn overlap_duality_saturates(o in 0.0..=1.0f64) {
        prop_assert!((overlap_duality(o).unwrap().sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn balanced_imbalance_matches_scan_law(phi in -10.0..10.0f64) {
        let v = imbalance_visibility((1.0, 1.0), phi).unwrap();
        prop_assert!((v - balanced_three_source_visibility(phi)).abs() <= 1e-10);
    }

    #[test]
    fn opld_symmetric_and_translation_invariant(
        paths in prop::collection::vec((0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64), 2..5),
        shift in 0.0..5.0f64,
    ) {
        let spec = OpldSpec {
            sources: paths.iter().map(|&(pump, spdc, signal, idler)| SourcePaths { pump, spdc, signal, idler }).collect(),
            pump_coherence_length: 0.5,
            spdc_coherence_length: 0.3,
        };
        let base = opld_feasible(&spec).unwrap();

        let mut reversed = spec.clone();
        reversed.sources.reverse();
        let n = spec.sources.len();
        let rev = opld_feasible(&reversed).unwrap();
        for p in &base.pairs {
            let q = rev.pairs.iter().find(|q| q.i == n - 1 - p.j && q.j == n - 1 - p.i).unwrap();
            prop_assert_eq!((p.pump_ok, p.spdc_ok), (q.pump_ok, q.spdc_ok));
            prop_assert!((p.pump_margin - q.pump_margin).abs() < 1e-12);
        }

        let mut moved = spec.clone();
        for s in &mut moved.sources {
            s.pump += shift;
        }
        let m = opld_feasible(&moved).unwrap();
        for (p, q) in base.pairs.iter().zip(&m.pairs) {
            prop_assert_eq!(p.spdc_ok, q.spdc_ok);
            prop_assert!((p.pump_margin - q.pump_margin).abs() < 1e-9);
        }
    }

    #[test]
    fn v13_monotone(v12 in 0.5..0.95f64, v23 in 0.5..0.95f64, dv in 0.001..0.04f64) {
        let y = (2200.0, 2000.0, 1800.0);
        let base = estimate_unmeasured_visibility(v12, v23, y).unwrap().v13;
        prop_assert!(estimate_unmeasured_visibility(v12 + dv, v23, y).unwrap().v13 > base);
        prop_assert!(estimate_unmeasured_visibility(v12, v23 + dv, y).unwrap().v13 > base);
    }
}

#[test]
fn minmax_never_exceeds_fit_beyond_grid_bound() {
    // Noiseless fringe sampled on a coarse grid: sampled extrema can only
    // under-read the contrast, never exceed the fitted visibility.
    for (v, phase0) in [(0.3, 0.2), (0.8, 1.7), (0.95, 4.4)] {
        let n = 19;
        let samples: Vec<FringeSample> = (0..n)
            .map(|i| {
                let phase = TAU * i as f64 / (n - 1) as f64;
                FringeSample {
                    phase,
                    value: 100.0 * (1.0 + v * (phase - phase0).cos()),
                    sigma: None,
                }
            })
            .collect();
        let fit = fit_sinusoid(&samples).unwrap();
        let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
        let minmax = multicrystal::scan::visibility_of_series(&values).unwrap();
        assert!(minmax <= fit.visibility + 1e-9);
    }
    for phi in [0.0, 1.0, 2.0 * PI / 3.0] {
        let spec = InterferometerSpec::three_crystal([1.0; 3], phi, 0.0).unwrap();
        let r = scan_1d(&spec, &ScanSpec::one_d(PhaseAxis::new(2, 0.0, TAU, 37))).unwrap();
        let samples: Vec<FringeSample> = r.axes[0]
            .iter()
            .zip(&r.rates)
            .map(|(&phase, &value)| FringeSample {
                phase,
                value,
                sigma: None,
            })
            .collect();
        let fit = fit_sinusoid(&samples).unwrap();
        assert!(visibility_minmax(&r).unwrap() <= fit.visibility + 1e-9);
        assert!((fit.visibility - balanced_three_source_visibility(phi)).abs() < 1e-8);
    }
}
