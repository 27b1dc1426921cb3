use cohtrack::bloch::{gks_to_channel, BlochChannel, CoherenceVector, GksMatrix};
use cohtrack::dynamics::propagate_bloch;
use cohtrack::equivalence::*;
use cohtrack::integrate::{IntegratorConfig, TimeGrid};
use cohtrack::random;
use cohtrack::tracking::breakdown_time;
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn homomorphism(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (u1, u2) = (random::unitary(&mut rng), random::unitary(&mut rng));
        let lhs = su2_to_so3(&u1.compose(&u2)).unwrap();
        let rhs = su2_to_so3(&u1).unwrap().matrix() * su2_to_so3(&u2).unwrap().matrix();
        prop_assert!((lhs.matrix() - rhs).abs().max() <= 1e-12);
    }

    #[test]
    fn double_cover(seed in any::<u64>()) {
        let u = random::unitary(&mut random::rng(seed));
        prop_assert_eq!(su2_to_so3(&u).unwrap(), su2_to_so3(&u.neg()).unwrap());
    }

    #[test]
    fn pictures_agree(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let a = random::gks(&mut rng, 2.0);
        let u = random::unitary(&mut rng);
        prop_assert!(picture_mismatch(&a, &u).unwrap() <= 1e-12);
        prop_assert!(transform_channel(&a, &u).is_ok());
    }

    #[test]
    fn spectrum_preserved(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let a = random::gks(&mut rng, 1.0);
        let b = transform_channel(&a, &random::unitary(&mut rng)).unwrap();
        let mut ea: Vec<f64> = a.eigenvalues().iter().copied().collect();
        let mut eb: Vec<f64> = b.eigenvalues().iter().copied().collect();
        ea.sort_by(f64::total_cmp);
        eb.sort_by(f64::total_cmp);
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn state_norm_preserved(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let v = random::state(&mut rng);
        let r = su2_to_so3(&random::unitary(&mut rng)).unwrap();
        let w = transform_state(&v, &r);
        prop_assert!((w.as_vector().norm() - v.as_vector().norm()).abs() <= 1e-12);
        prop_assert!((w.purity() - v.purity()).abs() <= 1e-12);
    }

    #[test]
    fn breakdown_invariant_in_stabilizer(seed in any::<u64>(), theta in 0.0f64..6.3, flip in any::<bool>()) {
        let v = random::state(&mut random::rng(seed));
        prop_assume!(v.coherence() > 1e-3);
        let (c, s) = (theta.cos(), theta.sin());
        let z = if flip { -1.0 } else { 1.0 };
        // In-plane rotation, optionally composed with π about the x-axis.
        let r = Rotation3::new(Matrix3::new(c, -s, 0.0, z * s, z * c, 0.0, 0.0, 0.0, z)).unwrap();
        prop_assert!(r.stabilizes_dephasing());
        let before = breakdown_time(&v, 0.1).unwrap();
        let after = transformed_breakdown_time(&v, 0.1, &r).unwrap();
        prop_assert!((before - after).abs() <= 1e-14 * before.max(1.0));
    }
}

#[test]
fn transform_state_examples() {
    let v = CoherenceVector::new(0.3, -0.2, 0.5).unwrap();
    assert_eq!(transform_state(&v, &Rotation3::identity()), v);
    let r = su2_to_so3(&Unitary2::exp_i_pauli(1, std::f64::consts::FRAC_PI_2).unwrap()).unwrap();
    let w = transform_state(&v, &r);
    assert!((w.as_vector() - Vector3::new(-0.3, -0.2, -0.5)).abs().max() < 1e-12);
    assert!((w.coherence() - v.coherence()).abs() < 1e-15);
    assert!((w.z() * w.z() - v.z() * v.z()).abs() < 1e-15);
}

#[test]
fn identity_transform_is_noop() {
    let a = random::gks(&mut random::rng(3), 1.0);
    let b = transform_channel(&a, &Unitary2::identity()).unwrap();
    assert!(b.matrix().iter().zip(a.matrix().iter()).all(|(x, y)| (x - y).norm() < 1e-15));
    let v = CoherenceVector::new(0.15f64.sqrt(), 0.15f64.sqrt(), 0.5f64.sqrt()).unwrap();
    let same = transform_tracking_fields(&v, 0.1, 4.0, &Rotation3::identity(), 1.0).unwrap();
    let plain = cohtrack::tracking::tracking_fields_dephasing(&v, 0.1, 4.0, 1.0).unwrap();
    assert_eq!(same, plain);
}

#[test]
fn flipped_frame_fields() {
    let a = 0.15f64.sqrt();
    let v = CoherenceVector::new(a, a, 0.5f64.sqrt()).unwrap();
    let r = Rotation3::new(Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, -1.0))).unwrap();
    let (w1, w2) = transform_tracking_fields(&v, 0.1, 4.0, &r, 0.0).unwrap();
    let s = -1.0;
    let root = 0.5f64.sqrt();
    assert!((w2 - s * (0.1 * a - 4.0 * a) / root).abs() < 1e-12);
    assert!((w1 - s * (-0.1 * a - 4.0 * a) / root).abs() < 1e-12);
    assert!(((0.1 * a - 4.0 * a) - -1.510_463_5).abs() < 1e-7);
    assert!(transform_tracking_fields(&v, 0.1, 4.0, &r, 25.0 / 3.0).is_err());
}

#[test]
fn dynamics_equivariance() {
    let mut rng = random::rng(99);
    let grid = TimeGrid::new(5.0, 0.05).unwrap();
    let cfg = IntegratorConfig::default();
    for _ in 0..10 {
        let a = random::gks(&mut rng, 0.8);
        let u = random::unitary(&mut rng);
        let r = su2_to_so3(&u).unwrap();
        let v0 = random::state(&mut rng);
        let w = random::piecewise_fields(&mut rng, 5.0, 4, 2.0);

        let (_, ch) = gks_to_channel(&a);
        let base = propagate_bloch(&ch, &w, &v0, &grid, &cfg).unwrap();
        let (_, ch2) = gks_to_channel(&transform_channel(&a, &u).unwrap());
        let moved =
            propagate_bloch(&ch2, &w.rotated(r.matrix()).unwrap(), &transform_state(&v0, &r), &grid, &cfg)
                .unwrap();
        assert_eq!(base.samples.len(), moved.samples.len());
        for (s, m) in base.samples.iter().zip(&moved.samples) {
            assert!((r.matrix() * s.v - m.v).abs().max() <= 1e-8, "t = {}", s.t);
        }
    }
}

#[test]
fn dephasing_class_of_rotated_dephasing() {
    let mut rng = random::rng(1);
    for _ in 0..20 {
        let u = random::unitary(&mut rng);
        let a = transform_channel(&GksMatrix::dephasing(0.3).unwrap(), &u).unwrap();
        let (_, ch) = gks_to_channel(&a);
        let class = is_dephasing_class(&ch).expect("conjugated dephasing stays in class");
        assert!((class.gamma - 0.3).abs() < 1e-10);
        let r = class.rotation.matrix();
        let d = r.transpose() * ch.m0() * r;
        assert!((d - Matrix3::from_diagonal(&Vector3::new(-0.3, -0.3, 0.0))).abs().max() < 1e-10);
    }
    let anisotropic =
        BlochChannel::new(Matrix3::from_diagonal(&Vector3::new(-0.1, -0.2, 0.0)), Vector3::zeros())
            .unwrap();
    assert!(is_dephasing_class(&anisotropic).is_none());
    let complex = GksMatrix::new(Matrix3::new(
        C64::new(0.1, 0.0), C64::new(0.0, 0.05), C64::new(0.0, 0.0),
        C64::new(0.0, -0.05), C64::new(0.1, 0.0), C64::new(0.0, 0.0),
        C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0),
    ))
    .unwrap();
    assert!(is_dephasing_class(&gks_to_channel(&complex).1).is_none());
}
