mod common;

use hybridqf::examples::HybridOptoParams;
use hybridqf::instruments::{conditional_probability, multi_time_cf, Box as Region, ConditioningSettings};
use hybridqf::model::modelfile::{model_file_string, parse_model_file, ModelSpec};
use hybridqf::propagation::{capital_psi, evolve_cf, propagator, CumulantField};
use hybridqf::sampler::{sample_ou_paths, InitialLaw};
use hybridqf::states::{twisted_pd_min_eigenvalue, GridAxis, GridCF};
use hybridqf::{GaussianHybridState, HybridModel};
use nalgebra::DVector;
use proptest::prelude::*;

use common::*;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn semigroup_product_formula(seed in any::<u64>(), t in 0.0..3.0f64, s in 0.0..3.0f64) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 6);
        let xi = random_vector(&mut r, m.d(), 2.5);
        let lhs = capital_psi(&m, t + s, &xi).unwrap();
        let rhs = capital_psi(&m, t, &xi).unwrap() + capital_psi(&m, s, &(propagator(&m.z, t) * &xi)).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + lhs.norm()));
    }

    #[test]
    fn noise_function_bounded_and_hermitian(seed in any::<u64>(), t in 0.0..4.0f64) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 6);
        let xi = random_vector(&mut r, m.d(), 3.0);
        let p = capital_psi(&m, t, &xi).unwrap();
        let q = capital_psi(&m, t, &(-&xi)).unwrap();
        prop_assert!(p.re <= 1e-12);
        prop_assert!((p - q.conj()).norm() <= 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn evolved_states_stay_states(seed in any::<u64>(), t in 0.0..3.0f64) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 4);
        let st = GaussianHybridState::vacuum(m.dims, 0.5);
        let chi = |x: &DVector<f64>| evolve_cf(&m, |y: &DVector<f64>| st.cf(y), t, x).unwrap();
        prop_assert_eq!(chi(&DVector::zeros(m.d())), nalgebra::Complex::new(1.0, 0.0));
        let pts: Vec<_> = (0..8).map(|_| random_vector(&mut r, m.d(), 1.5)).collect();
        prop_assert!(twisted_pd_min_eigenvalue(chi, &pts, m.dims) >= -1e-9);
    }

    #[test]
    fn grid_cf_hermitian_on_mirrored_points(seed in any::<u64>(), t in 0.1..2.0f64) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 3);
        let st = GaussianHybridState::vacuum(m.dims, 1.0);
        let axes = vec![GridAxis::spanning(3.0, 8); m.d()];
        let field = CumulantField::new(&m, t, 6.0).unwrap();
        let cf = GridCF::sample(axes, |x| field.f(x) * st.cf(&field.transport(x))).unwrap();
        prop_assert!((cf.at_origin().unwrap() - nalgebra::Complex::new(1.0, 0.0)).norm() <= 1e-12);
        // Index j ↦ N − j mirrors every point except the first slice.
        let d = m.d();
        let n = 8;
        for flat in 0..cf.values.len() {
            let mut idx = vec![0; d];
            let mut rest = flat;
            for a in (0..d).rev() {
                idx[a] = rest % n;
                rest /= n;
            }
            if idx.iter().any(|j| *j == 0) {
                continue;
            }
            let mirror = idx.iter().fold(0, |acc, j| acc * n + (n - j));
            prop_assert!((cf.values[flat] - cf.values[mirror].conj()).norm() <= 1e-10);
        }
    }

    #[test]
    fn model_file_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 6);
        let spec = ModelSpec::from_model(&m);
        let back = parse_model_file(&model_file_string(&spec).unwrap()).unwrap();
        prop_assert_eq!(&back, &spec);
        let m2: HybridModel<f64> = back.to_model().unwrap();
        prop_assert_eq!(m2.z, m.z);
        prop_assert_eq!(m2.triplet.a, m.triplet.a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn empirical_cf_bounded(seed in any::<u64>(), k1 in -3.0..3.0f64, k2 in -3.0..3.0f64) {
        let m: HybridModel<f64> = hybridqf::examples::ClassicalOscillatorParams::default().build().unwrap();
        let ens = sample_ou_paths(&m, &InitialLaw::Point(v(&[0.0, 0.0])), 0.5, 10, 200, seed).unwrap();
        prop_assert_eq!(ens.empirical_cf(10, &DVector::zeros(2)).unwrap(), nalgebra::Complex::new(1.0, 0.0));
        prop_assert!(ens.empirical_cf(10, &v(&[k1, k2])).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn box_probabilities_add_up(cut in -1.0..1.0f64, t in 0.2..2.0f64) {
        let p = HybridOptoParams::default();
        let m: HybridModel<f64> = p.build().unwrap();
        let rho0 = GaussianHybridState::vacuum(m.dims, 1.0).quantum_marginal(m.dims);
        let x = v(&[0.1, -0.2]);
        let set = ConditioningSettings::default();
        let prob = |lo: [f64; 2], hi: [f64; 2]| {
            conditional_probability(&m, &rho0, t, &Region::new(v(&lo), v(&hi)).unwrap(), &x, &set).unwrap().raw
        };
        let whole = prob([-2.0, -3.0], [2.0, 3.0]);
        let left = prob([-2.0, -3.0], [cut, 3.0]);
        let right = prob([cut, -3.0], [2.0, 3.0]);
        prop_assert!((left + right - whole).abs() <= 1e-8);
        prop_assert!(whole > 0.0 && whole < 1.0);
    }

    #[test]
    fn multi_time_cf_bounded(t1 in 0.0..1.0f64, gap in 0.05..2.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let m: HybridModel<f64> = HybridOptoParams::default().build().unwrap();
        let st = GaussianHybridState::vacuum(m.dims, 0.4);
        let c = multi_time_cf(&m, &st, &[t1, t1 + gap], &[v(&[a, b]), v(&[b, a])], &v(&[a, -b])).unwrap();
        prop_assert!(c.norm() <= 1.0 + 1e-12);
    }
}

#[test]
fn single_precision_tracks_double() {
    let m64: HybridModel<f64> = HybridOptoParams::default().build().unwrap();
    let m32: HybridModel<f32> = m64.cast();
    for (t, xi) in [(0.5, [0.3, -0.2, 0.4, 0.1]), (2.0, [1.0, 0.5, -0.5, 0.2])] {
        let a = capital_psi(&m64, t, &v(&xi)).unwrap();
        let b = capital_psi(&m32, t as f32, &DVector::from_iterator(4, xi.iter().map(|x| *x as f32))).unwrap();
        assert!((a.re - b.re as f64).abs() < 1e-4 && (a.im - b.im as f64).abs() < 1e-4, "{a} {b}");
    }
    let st = GaussianHybridState::<f32>::vacuum(m32.dims, 0.5);
    let st64 = GaussianHybridState::<f64>::vacuum(m64.dims, 0.5);
    let c64 = multi_time_cf(&m64, &st64, &[0.3, 1.0], &[v(&[0.2, -0.1]), v(&[0.3, 0.4])], &v(&[0.5, 0.1])).unwrap();
    let f = |x: &[f32]| DVector::from_column_slice(x);
    let c32 = multi_time_cf(&m32, &st, &[0.3, 1.0], &[f(&[0.2, -0.1]), f(&[0.3, 0.4])], &f(&[0.5, 0.1])).unwrap();
    assert!((c64.re - c32.re as f64).abs() < 1e-4 && (c64.im - c32.im as f64).abs() < 1e-4, "{c64} {c32}");
    let axes = vec![GridAxis::spanning(6.0f32, 16); 4];
    let cf = GridCF::sample(axes, |x| st.cf(x)).unwrap();
    let w = hybridqf::states::wigner_from_cf(&cf, &[0.0; 4]).unwrap();
    assert!((w.integral() - 1.0).abs() < 1e-4);
}
