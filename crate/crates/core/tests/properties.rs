use std::f64::consts::SQRT_2;

use proptest::prelude::*;

use entanglecert::certify::{certify_exact, CertificationTest, Trust};
use entanglecert::linalg::{
    hermitian_eigensystem, tensor_product, BlochVector, Complex, ComplexMatrix2, ComplexMatrix4, DensityMatrix,
    PureState,
};
use entanglecert::measurement::{
    effect, generalized_observable, outcome_distribution, reversal_operator, weak_operator, Outcome, WeakMeasurement,
};
use entanglecert::metrics::{concurrence, entanglement_of_formation, purity};
use entanglecert::monitor::mixed_state;
use entanglecert::protocol::{run_trial, RecoveryStatus, ReversalPolicy};
use entanglecert::rng::RngStream;

fn complex() -> impl Strategy<Value = Complex> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex::new(re, im))
}

fn hermitian2() -> impl Strategy<Value = ComplexMatrix2> {
    proptest::array::uniform4(complex()).prop_map(|[a, b, c, d]| {
        let m = ComplexMatrix2::from_rows([[a, b], [c, d]]);
        (m + m.adjoint()).scale_real(0.5)
    })
}

fn hermitian4() -> impl Strategy<Value = ComplexMatrix4> {
    proptest::array::uniform16(complex()).prop_map(|e| {
        let m = ComplexMatrix4::from_rows(std::array::from_fn(|i| std::array::from_fn(|j| e[4 * i + j])));
        (m + m.adjoint()).scale_real(0.5)
    })
}

fn direction() -> impl Strategy<Value = BlochVector> {
    (-1.0..1.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(cos_polar, azimuth)| BlochVector::from_angles(cos_polar.acos(), azimuth))
}

fn pure_state() -> impl Strategy<Value = PureState> {
    proptest::array::uniform4(complex())
        .prop_filter("non-zero", |a| a.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|a| PureState::normalized(a).unwrap())
}

fn density() -> impl Strategy<Value = DensityMatrix> {
    proptest::array::uniform16(complex()).prop_map(|e| {
        let g = ComplexMatrix4::from_rows(std::array::from_fn(|i| std::array::from_fn(|j| e[4 * i + j])));
        let gg = g * g.adjoint();
        DensityMatrix::new(gg.scale_real(1.0 / gg.trace().re)).unwrap()
    })
}

fn pauli(r: &BlochVector) -> ComplexMatrix2 {
    ComplexMatrix2::pauli_x().scale_real(r.x())
        + ComplexMatrix2::pauli_y().scale_real(r.y())
        + ComplexMatrix2::pauli_z().scale_real(r.z())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kronecker_trace_factorizes(a in hermitian2(), b in hermitian2()) {
        let lhs = tensor_product(&a, &b).trace();
        let rhs = a.trace() * b.trace();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn eigenvalues_sum_to_trace(m in hermitian4()) {
        let eig = hermitian_eigensystem(&m).unwrap();
        prop_assert!((eig.values.iter().sum::<f64>() - m.trace().re).abs() < 1e-9);
        prop_assert!(eig.reconstruct().max_abs_diff(&m) < 1e-9);
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn weak_effects_are_complete(p in 0.0..=1.0f64, r in direction()) {
        let m = WeakMeasurement::new(p, r).unwrap();
        let total = effect(&m, Outcome::Plus) + effect(&m, Outcome::Minus);
        prop_assert!(total.max_abs_diff(&ComplexMatrix2::identity()) < 1e-12);
        let rev = m.matching_reversal();
        let rev_total: ComplexMatrix2 = Outcome::BOTH
            .iter()
            .map(|&l| { let k = reversal_operator(&rev, l); k.adjoint() * k })
            .sum();
        prop_assert!(rev_total.max_abs_diff(&ComplexMatrix2::identity()) < 1e-12);
    }

    #[test]
    fn generalized_observable_is_scaled_pauli(p in 0.0..=1.0f64, r in direction()) {
        let m = WeakMeasurement::new(p, r).unwrap();
        prop_assert!(generalized_observable(&m).max_abs_diff(&pauli(&r).scale_real(p)) < 1e-12);
    }

    #[test]
    fn matched_reversal_composes_to_identity(p in 0.0..=1.0f64, r in direction(), plus in any::<bool>()) {
        let m = WeakMeasurement::new(p, r).unwrap();
        let l = if plus { Outcome::Plus } else { Outcome::Minus };
        let k = reversal_operator(&m.matching_reversal(), l) * weak_operator(&m, l);
        let expected = ComplexMatrix2::identity().scale_real((1.0 - p * p).sqrt() / 2.0);
        prop_assert!(k.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn outcome_distribution_is_normalized(rho in density(), pa in 0.0..=1.0f64, pb in 0.0..=1.0f64, ra in direction(), rb in direction()) {
        let d = outcome_distribution(&rho, &WeakMeasurement::new(pa, ra).unwrap(), &WeakMeasurement::new(pb, rb).unwrap());
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(d.iter().all(|&x| x >= -1e-14));
    }

    #[test]
    fn witness_is_strength_independent(rho in density(), pa in 0.05..=1.0f64, pb in 0.05..=1.0f64) {
        let w = certify_exact(&rho, CertificationTest::Witness, pa, pb).unwrap().statistic;
        let projective = certify_exact(&rho, CertificationTest::Witness, 1.0, 1.0).unwrap().statistic;
        prop_assert!((w - projective).abs() < 1e-10);
    }

    #[test]
    fn steering_depends_on_the_untrusted_strength_only(rho in density(), pa in 0.05..=1.0f64, pb in 0.05..=1.0f64) {
        let s = entanglecert::certify::steering(&rho, pa, pb, Trust::BobTrusted).unwrap().statistic;
        let projective = entanglecert::certify::steering(&rho, 1.0, 1.0, Trust::BobTrusted).unwrap().statistic;
        prop_assert!((s - pa * projective).abs() < 1e-10);
    }

    #[test]
    fn chsh_scales_with_both_strengths(rho in density(), pa in 0.0..=1.0f64, pb in 0.0..=1.0f64) {
        let correlations = |a, b| certify_exact(&rho, CertificationTest::Chsh, a, b).unwrap().correlations;
        let weak = correlations(pa, pb);
        let projective = correlations(1.0, 1.0);
        for (c, c1) in weak.iter().zip(&projective) {
            prop_assert!((c.value - pa * pb * c1.value).abs() < 1e-10);
        }
        let s = certify_exact(&rho, CertificationTest::Chsh, pa, pb).unwrap().statistic;
        prop_assert!(s <= 2.0 * SQRT_2 * pa * pb + 1e-10);
    }

    #[test]
    fn entanglement_measures_stay_in_range(rho in density()) {
        let c = concurrence(&rho);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
        let e = entanglement_of_formation(c).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&e));
        prop_assert!((e == 0.0) == (c == 0.0));
        prop_assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&purity(&rho)));
    }

    #[test]
    fn pure_concurrence_matches_amplitudes(psi in pure_state()) {
        let [a, b, c, d] = *psi.amplitudes();
        prop_assert!((concurrence(&psi.into()) - 2.0 * (a * d - b * c).norm()).abs() < 1e-9);
    }

    #[test]
    fn matched_trials_restore_pure_inputs(psi in pure_state(), pa in 0.0..0.99f64, pb in 0.0..0.99f64, ra in direction(), rb in direction(), seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..20 {
            let t = run_trial(&psi, pa, pb, (ra, rb), ReversalPolicy::AllBranches, &mut rng).unwrap();
            if t.status == RecoveryStatus::Matched {
                prop_assert!((t.final_state.unwrap().overlap(&psi) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mixed_state_concurrence_is_one_minus_gamma(gamma in 0.0..=1.0f64) {
        prop_assert!((concurrence(&mixed_state(gamma).unwrap()) - (1.0 - gamma)).abs() < 1e-9);
        let w = certify_exact(&mixed_state(gamma).unwrap(), CertificationTest::Witness, 0.7, 0.7).unwrap().statistic;
        prop_assert!((w - (gamma - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn child_streams_are_reproducible(seed in any::<u64>(), stream in any::<u64>(), k in any::<u64>()) {
        let mut a = RngStream::new(seed, stream).child(k);
        let mut b = RngStream::new(seed, stream).child(k);
        prop_assert_eq!(a.uniform(), b.uniform());
    }
}
