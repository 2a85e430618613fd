mod common;

use std::f64::consts::PI;

use common::*;
use kinform::kinematics::{AmmrModel, ArmModel, JointConfig, JointLimits, PlanarChain, Pose, RobotModel};
use proptest::prelude::*;

#[test]
fn fk_matches_matrix_product_oracle() {
    let (pos, rot) = fk_oracle_gaps(1000, 11);
    assert!(pos <= 1e-9, "position gap {pos}");
    assert!(rot <= 1e-9, "rotation gap {rot}");
}

#[test]
fn ik_counts_match_grid_oracle() {
    let check = ik_oracle_check(50, 12);
    assert_eq!(check.count_mismatches, 0, "{check:?}");
    assert!(check.max_planar_round_trip <= 1e-9, "{check:?}");
    assert!(check.max_arm_round_trip <= 1e-6, "{check:?}");
}

#[test]
fn grid_oracle_finds_known_planar_solutions() {
    let chain = PlanarChain::default();
    let p = planar_fk(&chain, &[0.4, 1.1]);
    let sols = planar_ik_grid(&chain, p);
    assert_eq!(sols.len(), 2);
    assert!(sols.iter().any(|s| (s[0] - 0.4).abs() < 1e-9 && (s[1] - 1.1).abs() < 1e-9));
}

#[test]
fn restricted_chain_loses_folded_branches() {
    let chain = PlanarChain::restricted();
    let p = planar_fk(&PlanarChain::default(), &[0.3, 2.6]);
    let sols = chain.ik(&Pose::planar(p[0], p[1])).unwrap();
    assert_eq!(sols.len(), planar_ik_grid(&chain, p).len());
    assert!(sols.len() < 2);
}

#[test]
fn unreachable_targets_have_no_solutions() {
    let chain = PlanarChain::default();
    assert!(chain.ik(&Pose::planar(2.5, 0.0)).unwrap().is_empty());
    let arm = ArmModel::default();
    let far = Pose::spatial([3.0, 0.0, 0.3], kinform::kinematics::Quaternion::IDENTITY);
    assert!(arm.ik_solutions(&far).unwrap().is_empty());
}

#[test]
fn arm_branches_are_ordered_and_distinct() {
    let arm = ArmModel::default();
    let q = [0.3, -0.7, 0.9, 0.4, 1.2, -0.5];
    let pose = Pose::from_transform(&arm.forward(&q));
    let branches = arm.ik_branches(&pose).unwrap();
    let keys: Vec<_> = branches.iter().map(|(b, _)| (!b.shoulder, !b.elbow, !b.wrist)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(branches.iter().any(|(_, s)| s.0.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-9)));
}

#[test]
fn configuration_dimension_is_checked() {
    let model = RobotModel::Ammr(AmmrModel::default());
    assert!(model.fk(&JointConfig(vec![0.0; 6])).is_err());
    assert!(RobotModel::Planar(PlanarChain::default()).fk(&JointConfig(vec![0.0; 3])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn planar_reach_is_bounded(t1 in -PI..PI, t2 in -PI..PI) {
        let chain = PlanarChain::default();
        let [x, y] = chain.forward(&[t1, t2]);
        let (lo, hi) = chain.reach();
        let r = x.hypot(y);
        prop_assert!(r <= hi + 1e-12 && r >= lo - 1e-12);
    }

    #[test]
    fn planar_ik_round_trips(t1 in -PI..PI, t2 in -PI..PI) {
        let chain = PlanarChain::default();
        let [x, y] = chain.forward(&[t1, t2]);
        let sols = chain.ik(&Pose::planar(x, y)).unwrap();
        prop_assert!(!sols.is_empty());
        for s in sols {
            prop_assert!(chain.joint_limits.contains(&s));
            let [u, v] = chain.forward(&s.0);
            prop_assert!((u - x).hypot(v - y) <= 1e-9);
        }
    }

    #[test]
    fn arm_ik_round_trips(q in proptest::collection::vec(-2.7f64..2.7, 6)) {
        let arm = ArmModel::default();
        let pose = Pose::from_transform(&arm.forward(&q));
        let want = arm_fk(&arm, &q);
        let sols = arm.ik_solutions(&pose).unwrap();
        prop_assert!(!sols.is_empty());
        for s in sols {
            prop_assert!(arm.joint_limits.contains(&s));
            let got = arm_fk(&arm, &s.0);
            prop_assert!(rotation_gap(&got, &want) <= 1e-6);
            let d: f64 = (0..3).map(|i| (got[i][3] - want[i][3]).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d <= 1e-6);
        }
    }

    #[test]
    fn wrapped_angles_stay_in_limits(q in proptest::collection::vec(-20.0f64..20.0, 2)) {
        let limits = JointLimits::symmetric(2, PI);
        let wrapped = limits.wrap_into(&JointConfig(q.clone())).unwrap();
        prop_assert!(limits.contains(&wrapped));
        for (a, b) in wrapped.0.iter().zip(&q) {
            prop_assert!(kinform::kinematics::wrap_angle(a - b).abs() < 1e-9);
        }
    }
}
