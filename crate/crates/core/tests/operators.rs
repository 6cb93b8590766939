use std::sync::Arc;

use moller::coefficients::ProfileSpec;
use moller::dyson::SeriesOptions;
use moller::harness::random::random_states;
use moller::par::Exec;
use moller::reference::{strang_lifted, strang_lifted_adjoint};
use moller::scattering::{
    assemble, operator_norm_estimate, scattering_apply, scattering_inverse_apply, wave_operator_apply, wave_operator_apply_at,
    wave_operator_inverse_apply, NormMode, OperatorHandle, Sign, WaveMethod, WaveOptions,
};
use moller::spectral::{GridSpec, StateVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn tiny() -> GridSpec {
    GridSpec::periodic_2pi(1, 16).unwrap()
}

fn gaussian(g: &GridSpec) -> moller::coefficients::DissipationModel {
    "gaussian:mu0=0.8,sigma=0.7".parse::<ProfileSpec>().unwrap().build(g).unwrap()
}

#[test]
fn batch_application_matches_serial_in_both_modes() {
    let g = tiny();
    let m = gaussian(&g);
    let opts = WaveOptions::default();
    let w = OperatorHandle::wave_operator(Sign::Plus, &g, &m, opts.horizon(Sign::Plus, &m, 1.0).unwrap(), &opts).unwrap();
    let vs = random_states(&g, 5, 6);
    let seq = w.apply_batch(&vs, Exec::Sequential).unwrap();
    let par = w.apply_batch(&vs, Exec::default()).unwrap();
    for ((v, a), b) in vs.iter().zip(&seq).zip(&par) {
        assert_eq!(a, b);
        assert_eq!(a, &w.apply(v).unwrap());
    }
}

#[test]
fn power_iteration_agrees_with_dense_singular_values() {
    let g = tiny();
    let m = gaussian(&g);
    let opts = WaveOptions::default();
    let h = opts.horizon(Sign::Plus, &m, 1.0).unwrap();
    for op in [
        OperatorHandle::wave_operator(Sign::Plus, &g, &m, h, &opts).unwrap(),
        OperatorHandle::wave_operator_inverse(Sign::Plus, &g, &m, h, &opts).unwrap(),
    ] {
        let dense = operator_norm_estimate(&op, NormMode::DenseAssembly, Exec::Sequential).unwrap();
        let power = operator_norm_estimate(&op, NormMode::PowerIteration, Exec::Sequential).unwrap();
        assert!((dense - power).abs() <= 1e-6 * dense, "{} {dense} {power}", op.name());
    }
}

#[test]
fn assembled_adjoint_is_the_conjugate_transpose() {
    let g = tiny();
    let m = gaussian(&g);
    let (m1, m2) = (m.clone(), m);
    let dt = 1.0 / 32.0;
    let op = OperatorHandle::new("strang", &g, Arc::new(move |v: &StateVector| strang_lifted(-1.0, 1.0, v, &m1, dt)))
        .with_adjoint(Arc::new(move |v: &StateVector| strang_lifted_adjoint(-1.0, 1.0, v, &m2, dt)));
    let a = assemble(&op, Exec::default()).unwrap();
    let adj = OperatorHandle::new("adjoint", &g, Arc::new({
        let op = op.clone();
        move |v: &StateVector| op.apply_adjoint(v)
    }));
    let b = assemble(&adj, Exec::default()).unwrap();
    assert!((a.adjoint() - b).norm() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn wave_operators_are_linear(seed in any::<u64>(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let g = tiny();
        let m = gaussian(&g);
        // a fixed horizon and term count make the surrogate exactly linear
        let opts = WaveOptions { series: SeriesOptions { tol: 1e-300, max_terms: 40 }, ..WaveOptions::default() };
        let vs = random_states(&g, seed, 2);
        let a = Complex64::new(re, im);
        for sign in [Sign::Plus, Sign::Minus] {
            let h = opts.horizon(sign, &m, 1.0).unwrap();
            let w = |v: &StateVector| wave_operator_apply_at(sign, v, &m, h, &opts, WaveMethod::ViaQ).unwrap();
            let lhs = w(&(&(a * &vs[0]) + &vs[1]));
            let rhs = &(a * &w(&vs[0])) + &w(&vs[1]);
            prop_assert!((&lhs - &rhs).norm() <= 1e-12 * (1.0 + lhs.norm()), "{}", (&lhs - &rhs).norm());
        }
    }

    #[test]
    fn inverses_undo_forward_maps(seed in any::<u64>()) {
        let g = tiny();
        let m = gaussian(&g);
        let opts = WaveOptions::default();
        let v = &random_states(&g, seed, 1)[0];
        for sign in [Sign::Plus, Sign::Minus] {
            let w = wave_operator_apply(sign, v, &m, &opts, WaveMethod::ViaGroup).unwrap();
            let back = wave_operator_inverse_apply(sign, &w, &m, &opts).unwrap();
            prop_assert!((&back - v).norm() <= 1e-8 * v.norm());
        }
        let s = scattering_apply(v, &m, &opts).unwrap();
        prop_assert!((&scattering_inverse_apply(&s, &m, &opts).unwrap() - v).norm() <= 1e-8 * v.norm());
    }
}
