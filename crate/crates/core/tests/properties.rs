use approx::assert_abs_diff_eq;
use nalgebra::{DVector, Vector3};
use proptest::prelude::*;
use proptest::strategy::Strategy as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selftouch_core::evaluation::Resolution;
use selftouch_core::explorer::{Environment, Strategy, Trial};
use selftouch_core::observation::Bounds;
use selftouch_core::presets::{self, BodyPart};
use selftouch_core::runner::ExperimentConfig;
use selftouch_core::{
    distance, CmaState, InterestGrid, JointConfig, LwlrParams, ObservationPoint, ProjectionSpec,
    SampleDatabase,
};

fn env(body: BodyPart, res: Resolution) -> Environment {
    ExperimentConfig::new(body, res, Strategy::Rmb).environment().unwrap()
}

fn angles(n: usize) -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, n)
}

fn point() -> impl proptest::strategy::Strategy<Value = ObservationPoint> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(u, v)| ObservationPoint::new(u, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fk_is_lipschitz_in_joint_space(q in angles(7), d in proptest::collection::vec(-1e-3f64..1e-3, 7)) {
        let chain = presets::chain(BodyPart::Head);
        let q2: Vec<f64> = q.iter().zip(&d).map(|(a, b)| a + b).collect();
        let a = chain.forward_kinematics(&JointConfig::new(q)).unwrap();
        let b = chain.forward_kinematics(&JointConfig::new(q2)).unwrap();
        let l1: f64 = d[..5].iter().map(|x| x.abs()).sum();
        prop_assert!((a - b).norm() <= chain.reach() * l1 + 1e-15);
    }

    #[test]
    fn tip_stays_within_reach(q in angles(5)) {
        let chain = presets::chain(BodyPart::Torso);
        let tip = chain.forward_kinematics(&JointConfig::new(q)).unwrap();
        prop_assert!(tip.norm() <= chain.reach() + 1e-12);
    }

    #[test]
    fn torso_frame_ignores_configuration(q in angles(7)) {
        let chain = presets::chain(BodyPart::Head);
        let pose = chain.frame_pose("torso", &JointConfig::new(q)).unwrap();
        prop_assert_eq!(pose.position, Vector3::zeros());
        prop_assert_eq!(*pose.rotation_matrix(), nalgebra::Matrix3::identity());
    }

    #[test]
    fn head_contact_is_equivariant_under_neck_motion(q in angles(7), depth in 0.0f64..0.016, id in 0usize..24) {
        let e = env(BodyPart::Head, Resolution::Low);
        let q = e.chain.clamp(&JointConfig::new(q));
        let pose = e.chain.frame_pose(&e.patch.frame, &q).unwrap();
        let t = &e.patch.taxels[id];
        let local = t.local_position + t.local_normal * depth;
        let moved = e.patch.detect_contact(&pose.transform_point(&local), e.chain.tip_radius(), &pose);
        let fixed = e.patch.detect_contact(&local, e.chain.tip_radius(), &selftouch_core::Pose::identity());
        prop_assert_eq!(moved.activated, fixed.activated);
    }

    #[test]
    fn planar_projection_preserves_distances(a in (-0.1f64..0.1, -0.1f64..0.1), b in (-0.1f64..0.1, -0.1f64..0.1)) {
        let e = env(BodyPart::Torso, Resolution::Low);
        let ProjectionSpec::Planar { origin, u_axis, v_axis } = e.space.spec.clone() else { unreachable!() };
        let pa = origin + u_axis * a.0 + v_axis * a.1;
        let pb = origin + u_axis * b.0 + v_axis * b.1;
        let xa = e.space.project(&pa).unwrap();
        let xb = e.space.project(&pb).unwrap();
        prop_assert!((distance(&xa, &xb) - (pa - pb).norm()).abs() <= 1e-12);
    }

    #[test]
    fn observation_distance_is_a_metric(a in point(), b in point(), c in point()) {
        prop_assert_eq!(distance(&a, &a), 0.0);
        prop_assert_eq!(distance(&a, &b), distance(&b, &a));
        prop_assert!(distance(&a, &b) >= 0.0);
        prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c) + 1e-15);
    }

    #[test]
    fn lwlr_is_translation_equivariant(seed in 0u64..1000, du in -1.0f64..1.0, dv in -1.0f64..1.0) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SampleDatabase::new(3);
        let mut b = SampleDatabase::new(3);
        for _ in 0..40 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = ObservationPoint::new(q[0] * q[1], q[2].sin());
            a.insert(JointConfig::new(q.clone()), x).unwrap();
            b.insert(JointConfig::new(q), ObservationPoint::new(x.u + du, x.v + dv)).unwrap();
        }
        let q = JointConfig::new(vec![0.1, -0.2, 0.3]);
        let p = LwlrParams::default();
        let xa = a.lwlr_forward(&q, &p).unwrap();
        let xb = b.lwlr_forward(&q, &p).unwrap();
        prop_assert!((xb.u - xa.u - du).abs() < 1e-9);
        prop_assert!((xb.v - xa.v - dv).abs() < 1e-9);
    }

    #[test]
    fn sampled_goals_stay_in_their_cell(seed in 0u64..1000, cell in 0usize..225) {
        let g = InterestGrid::new(15, 15, Bounds { u: [-0.05, 0.05], v: [-0.03, 0.04] }, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let goal = g.sample_goal(cell, &mut rng);
        prop_assert!(g.cell_bounds(cell).contains(&goal));
        prop_assert_eq!(g.cell_of(&goal), cell);
    }
}

#[test]
fn covariance_stays_positive_definite() {
    let bounds = vec![[-2.0, 2.0]; 7];
    let mut state = CmaState::new(&[1.5; 7], 0.6, &bounds).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rosen = |x: &DVector<f64>| {
        (0..x.len() - 1)
            .map(|i| 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2))
            .sum::<f64>()
    };
    for _ in 0..1000 {
        let cands = state.ask(&mut rng);
        for c in &cands {
            assert!(c.iter().zip(&bounds).all(|(v, b)| *v >= b[0] && *v <= b[1]));
        }
        let fit: Vec<f64> = cands.iter().map(rosen).collect();
        state.tell(&cands, &fit).unwrap();
        let c = &state.covariance;
        assert_abs_diff_eq!(*c, c.transpose(), epsilon = 1e-12 * c.amax());
        assert!(state.eigenvalues().iter().all(|&l| l > 0.0));
        assert!(c.clone().cholesky().is_some());
        assert!(state.sigma.is_finite() && state.sigma > 0.0);
    }
}

#[test]
fn iteration_accounting_and_determinism() {
    for (body, res) in [(BodyPart::Torso, Resolution::Low), (BodyPart::Head, Resolution::High)] {
        let e = env(body, res);
        for strategy in Strategy::ALL {
            let run = |seed: u64| {
                let mut t = Trial::new(&e, strategy, Default::default(), ChaCha8Rng::seed_from_u64(seed));
                while t.iterations() < 300 {
                    let budget = 100 - t.iterations() % 100;
                    let n = t.step(budget).unwrap();
                    assert!(n >= 1 && n <= budget);
                }
                t
            };
            let a = run(9);
            assert_eq!(a.iterations(), 300);
            assert_eq!(a.db.len(), a.touches(), "{strategy}");
            for (i, o) in a.outcomes.iter().enumerate() {
                assert_eq!(o.iteration, i + 1);
                assert!(e.chain.within_limits(&o.q));
            }
            let b = run(9);
            assert_eq!(a.outcomes, b.outcomes, "{strategy} not deterministic");
            let c = run(10);
            assert_ne!(a.outcomes, c.outcomes);
        }
    }
}
