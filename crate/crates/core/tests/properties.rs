use std::f64::consts::{PI, TAU};

use approx::assert_relative_eq;
use hubbard_tracking::observables::{current_from_hop, doublon_occupation, hop_expectation, HopExpectation};
use hubbard_tracking::pulses::{
    breakdown_threshold, correlation_length, correlation_length_with_steps, electric_field, mott_gap,
    mott_gap_with_steps, reference_phase, threshold_rhs, threshold_time,
};
use hubbard_tracking::spectra::{
    boosted_target_current, current_spectrum, dipole_acceleration, hhg_spectrum, BoostSpec, Window,
};
use hubbard_tracking::spline::CubicSpline;
use hubbard_tracking::tracking::{
    build_tracking_hamiltonian, field_from_ratio, scale_target, tracking_coefficients, tracking_step, TargetScaling,
};
use hubbard_tracking::units::FrequencyConvention;
use hubbard_tracking::*;
use num_complex::Complex64;
use proptest::prelude::*;

const T0: f64 = 0.52;
const A: f64 = 4.0;

fn state_from(values: &[(f64, f64)]) -> ManyBodyState {
    ManyBodyState::new(values.iter().map(|&(re, im)| Complex64::new(re, im)).collect()).unwrap()
}

fn small_model(u: f64) -> HubbardModel {
    HubbardModel::new(LatticeSpec::half_filled(4, T0, u, A)).unwrap()
}

fn amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    // L = 4 at half filling has 36 basis states
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 36)
        .prop_filter("non-zero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
}

fn reference_pulse() -> PulseSpec {
    PulseSpec {
        e0: 10.0,
        frequency_thz: 32.9,
        cycles: 10,
        a: A,
        convention: FrequencyConvention::Linear,
    }
}

proptest! {
    #[test]
    fn tracking_coefficients_are_conjugate_with_modulus_t0(x in -0.998..0.998f64, t0 in 0.1..2.0f64) {
        let (p, m) = tracking_coefficients(x, t0, &TrackingConfig::default()).unwrap();
        prop_assert!((p - m.conj()).norm() < 1e-15);
        prop_assert!((p.norm() - t0).abs() < 1e-14 * t0.max(1.0));
        prop_assert!((m.norm() - t0).abs() < 1e-14 * t0.max(1.0));
    }

    #[test]
    fn tracking_field_reproduces_the_target(
        r in 0.01..10.0f64,
        theta in -PI..PI,
        frac in -0.99..0.99f64,
    ) {
        let hop = HopExpectation { r, theta };
        let j = frac * 2.0 * A * T0 * r;
        let step = tracking_step(j, hop, T0, A, &TrackingConfig { epsilon1: 1e-3, ..TrackingConfig::default() });
        prop_assume!(step.is_ok());
        let step = step.unwrap();
        let back = current_from_hop(hop, T0, A, step.phi);
        prop_assert!((back - j).abs() < 1e-12 * (2.0 * A * T0 * r));
        // principal branch: Φ_T − θ ∈ [−π/2, π/2]
        prop_assert!((step.phi - theta).abs() <= PI / 2.0 + 1e-15);
        prop_assert!((field_from_ratio(step.x, theta) - step.phi).abs() < 1e-15);
    }

    #[test]
    fn current_never_exceeds_its_bound(v in amplitudes(), phi in -TAU..TAU) {
        let model = small_model(3.0 * T0);
        let s = state_from(&v);
        let hop = hop_expectation(&s, model.hop_forward());
        let j = current_from_hop(hop, T0, A, phi);
        prop_assert!(j.abs() <= 2.0 * A * T0 * hop.r * (1.0 + 1e-14));
    }

    #[test]
    fn observables_ignore_global_phase(v in amplitudes(), alpha in -PI..PI, phi in -PI..PI) {
        let model = small_model(2.0 * T0);
        let s = state_from(&v);
        let s2 = s.with_global_phase(alpha);
        let (h1, h2) = (hop_expectation(&s, model.hop_forward()), hop_expectation(&s2, model.hop_forward()));
        prop_assert!((h1.r - h2.r).abs() < 1e-12);
        prop_assert!((h1.value() - h2.value()).norm() < 1e-12);
        prop_assert!((current_from_hop(h1, T0, A, phi) - current_from_hop(h2, T0, A, phi)).abs() < 1e-12);
        let d1 = doublon_occupation(&s, model.doublon(), model.spec());
        let d2 = doublon_occupation(&s2, model.doublon(), model.spec());
        prop_assert!((d1 - d2).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&d1));
    }

    #[test]
    fn tracking_hamiltonian_is_hermitian(v in amplitudes(), frac in -0.99..0.99f64, u in 0.0..10.0f64) {
        let model = small_model(u * T0);
        let s = state_from(&v);
        let hop = hop_expectation(&s, model.hop_forward());
        prop_assume!(hop.r > 1e-6);
        let step = tracking_step(frac * 2.0 * A * T0 * hop.r, hop, T0, A, &TrackingConfig::default());
        prop_assume!(step.is_ok());
        let ht = build_tracking_hamiltonian(model.hop_forward(), model.doublon(), model.spec(), &step.unwrap()).unwrap();
        prop_assert!(ht.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_2pi_periodic(phi in -TAU..TAU, u in 0.0..10.0f64) {
        let model = small_model(u * T0);
        let h = model.hamiltonian(phi).unwrap();
        prop_assert!(h.hermiticity_defect() < 1e-14);
        let h2 = model.hamiltonian(phi + TAU).unwrap();
        prop_assert!(h.max_abs_difference(&h2).unwrap() < 1e-12);
    }

    #[test]
    fn scaled_targets_respect_the_bound(
        series in prop::collection::vec(-50.0..50.0f64, 2..200),
        r_floor in 0.1..10.0f64,
        eps in 1e-4..0.1f64,
    ) {
        prop_assume!(series.iter().any(|v| v.abs() > 1e-9));
        let scaling = TargetScaling { two_a_t0: 2.0 * A * T0, r_floor, epsilon1: eps, allow_amplification: false };
        let (k, scaled) = scale_target(&series, &scaling).unwrap();
        prop_assert!(k > 0.0 && k <= 1.0);
        let bound = (1.0 - eps) * 2.0 * A * T0 * r_floor;
        prop_assert!(scaled.iter().all(|v| v.abs() <= bound * (1.0 + 1e-12)));
    }

    #[test]
    fn parseval_holds_for_any_signal(signal in prop::collection::vec(-5.0..5.0f64, 8..300), padding in 1usize..5) {
        for window in [Window::Rectangular, Window::Blackman] {
            let s = hhg_spectrum(&signal, 0.1, 1.0, window, padding).unwrap();
            let w = window.weights(signal.len());
            let energy: f64 = signal.iter().zip(&w).map(|(x, w)| (x * w).powi(2)).sum();
            prop_assert!((s.total_energy() - energy).abs() < 1e-9 * energy.max(1.0));
        }
    }

    #[test]
    fn spline_passes_through_its_knots(values in prop::collection::vec(-10.0..10.0f64, 3..60), step in 0.01..2.0f64) {
        let s = CubicSpline::new(1.5, step, values.clone()).unwrap();
        for (i, v) in values.iter().enumerate() {
            prop_assert!((s.eval(1.5 + i as f64 * step) - v).abs() < 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn threshold_root_solves_the_threshold_equation(u in 0.5..6.0f64) {
        let p = reference_pulse();
        let inputs = BreakdownInputs::for_interaction(u * T0, T0).unwrap();
        if let Some(t) = threshold_time(&p, &inputs) {
            let lhs = breakdown_threshold(&inputs, A) / p.e0;
            prop_assert!((threshold_rhs(t, &p) - lhs).abs() < 1e-8);
            // and it is the first crossing
            let n = 2000;
            for k in 0..n {
                let s = t * k as f64 / n as f64;
                prop_assert!(threshold_rhs(s, &p) < lhs + 1e-12);
            }
        }
    }
}

#[test]
fn gap_and_correlation_length_converge_under_refinement() {
    for u in [2.0, 4.0, 7.0, 10.0] {
        let coarse = mott_gap_with_steps(u * T0, T0, 1024);
        let fine = mott_gap_with_steps(u * T0, T0, 8192);
        assert_relative_eq!(coarse, fine, max_relative = 1e-10);
        let c = correlation_length_with_steps(u * T0, T0, 1024).unwrap();
        let f = correlation_length_with_steps(u * T0, T0, 8192).unwrap();
        assert_relative_eq!(c, f, max_relative = 1e-10);
    }
}

#[test]
fn gap_grows_and_correlation_length_shrinks_with_u() {
    let us: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64 * T0).collect();
    for w in us.windows(2) {
        assert!(mott_gap(w[1], T0) > mott_gap(w[0], T0));
        assert!(correlation_length(w[1], T0).unwrap() < correlation_length(w[0], T0).unwrap());
    }
}

#[test]
fn breakdown_values_at_reference_interactions() {
    // Δ(6t0) = 2.893 t0, ξ(6t0) = 2.043, ξ(7t0) = 1.660 (independent quadrature)
    assert_relative_eq!(mott_gap(6.0 * T0, T0) / T0, 2.893, max_relative = 1e-3);
    assert_relative_eq!(correlation_length(6.0 * T0, T0).unwrap(), 2.043, max_relative = 1e-3);
    assert_relative_eq!(correlation_length(7.0 * T0, T0).unwrap(), 1.660, max_relative = 1e-3);
    let e6 = breakdown_threshold(&BreakdownInputs::for_interaction(6.0 * T0, T0).unwrap(), A);
    assert_relative_eq!(e6, 9.20, max_relative = 2e-3);
}

#[test]
fn threshold_time_is_monotone_in_u() {
    let p = reference_pulse();
    let mut last = 0.0;
    for k in 1..=12 {
        let u = 0.5 * k as f64;
        if let Some(t) = threshold_time(&p, &BreakdownInputs::for_interaction(u * T0, T0).unwrap()) {
            assert!(t >= last, "U={u}: {t} < {last}");
            last = t;
        }
    }
}

#[test]
fn electric_field_matches_numerical_phase_derivative() {
    let p = reference_pulse();
    let mut errs = Vec::new();
    for h in [1e-2, 5e-3] {
        let mut worst = 0.0f64;
        for k in 1..400 {
            let t = p.duration() * k as f64 / 400.0;
            let d = (reference_phase(t + h, &p) - reference_phase(t - h, &p)) / (2.0 * h);
            // a E(t) = −dΦ/dt, with aE in eV and E in MV/cm
            let field = -d / (A * 0.01);
            worst = worst.max((field - electric_field(t, &p)).abs());
        }
        errs.push(worst);
    }
    assert!(errs[1] < 1e-5);
    let ratio = errs[0] / errs[1];
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn dipole_acceleration_converges_at_fourth_order() {
    let w = 1.3;
    let err = |n: usize| {
        let dt = 10.0 / n as f64;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        let j: Vec<f64> = t.iter().map(|t| (w * t).sin()).collect();
        let a = dipole_acceleration(&t, &j).unwrap();
        t.iter()
            .zip(&a)
            .map(|(t, a)| (a - w * (w * t).cos()).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(200) / err(400);
    assert!((13.0..19.0).contains(&ratio), "{ratio}");
}

#[test]
fn odd_signal_has_odd_harmonics() {
    let w = 0.5;
    let dt = 0.02;
    let n = 8000;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    // a half-wave symmetric current: only odd multiples of ω
    let j: Vec<f64> = t
        .iter()
        .map(|t| (w * t).sin() + 0.1 * (3.0 * w * t).sin() + 0.01 * (5.0 * w * t).sin())
        .collect();
    let s = current_spectrum(&t, &j, w).unwrap();
    for h in [1.0, 3.0, 5.0] {
        assert!(s.power_at(h) > 1e2 * s.power_at(h + 1.0), "order {h}");
    }
}

#[test]
fn unit_boost_ratio_reproduces_the_input() {
    let w = 0.4;
    let dt = 0.05;
    let n = 6000;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let env = |t: f64| (PI * t / (n as f64 * dt)).sin().powi(2);
    let j: Vec<f64> = t
        .iter()
        .map(|&t| env(t) * ((w * t).sin() + 0.05 * (9.0 * w * t).sin()))
        .collect();
    let s = current_spectrum(&t, &j, w).unwrap();
    let ratio = s.peak(8.5, 9.5) / s.peak(0.5, 1.5);
    let scaling = TargetScaling {
        two_a_t0: 1.0,
        r_floor: 1e6,
        epsilon1: 1e-3,
        allow_amplification: false,
    };
    let boosted = boosted_target_current(&t, &j, w, &BoostSpec { harmonic: 9.0, ratio }, &scaling).unwrap();
    assert!((boosted.gain - 1.0).abs() < 1e-6, "{}", boosted.gain);
    assert_eq!(boosted.scale, 1.0);
    for (a, b) in boosted.samples.iter().zip(&j) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn boost_reaches_requested_ratio() {
    let w = 0.4;
    let dt = 0.05;
    let n = 6000;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let env = |t: f64| (PI * t / (n as f64 * dt)).sin().powi(2);
    let j: Vec<f64> = t
        .iter()
        .map(|&t| env(t) * ((w * t).sin() + 0.01 * (9.0 * w * t).sin()))
        .collect();
    let scaling = TargetScaling {
        two_a_t0: 1.0,
        r_floor: 0.5,
        epsilon1: 1e-3,
        allow_amplification: false,
    };
    let boosted = boosted_target_current(
        &t,
        &j,
        w,
        &BoostSpec {
            harmonic: 9.0,
            ratio: 1.0,
        },
        &scaling,
    )
    .unwrap();
    let s = current_spectrum(&t, &boosted.samples, w).unwrap();
    let db = 10.0 * (s.peak(8.5, 9.5) / s.peak(0.5, 1.5)).log10();
    assert!(db.abs() < 0.1, "{db} dB");
    assert!(boosted.samples.iter().all(|v| v.abs() <= 0.999 * 0.5 + 1e-12));
    assert!((boosted.eval(t[1234]) - boosted.samples[1234]).abs() < 1e-12);
}
