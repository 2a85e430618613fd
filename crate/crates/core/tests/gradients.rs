mod common;

use common::{flat_gradcheck, loss_gradcheck};
use kinform::autodiff::{finite_differences, grad_check, gradient, relative_error, smooth_norm, Objective, PrimitiveOp, Real, Tape};
use kinform::kinematics::{AmmrModel, PlanarChain, RobotModel, DEFAULT_ROTATION_WEIGHT};
use kinform::models::MlpSpec;
use kinform::samplers::{pose_loss, ControlMode, RobKiNetTrainer, TaskDistribution, TrainConfig, Trainer};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn planar() -> RobotModel {
    RobotModel::Planar(PlanarChain::default())
}

fn ammr() -> RobotModel {
    RobotModel::Ammr(AmmrModel::default())
}

#[test]
fn planar_loss_gradient_matches_differences() {
    let err = loss_gradcheck(&planar(), &[16, 16], 10, 4, 1);
    assert!(err <= 1e-5, "relative error {err}");
}

#[test]
fn spatial_loss_gradient_matches_differences() {
    let err = loss_gradcheck(&ammr(), &[12, 12], 5, 2, 2);
    assert!(err <= 1e-5, "relative error {err}");
}

#[test]
fn gradient_stays_correct_after_training() {
    let model = planar();
    let config = TrainConfig { epochs: 10, batches_per_epoch: 4, batch_size: 32, record_gradients: false, ..TrainConfig::default() };
    let spec = MlpSpec::squashed(vec![2, 16, 16, 2], model.joint_limits()).unwrap();
    let mut trainer = RobKiNetTrainer::new(&model, &spec, &config, ControlMode::Planar).unwrap();
    trainer.run().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let targets = TaskDistribution::FkUniform.draw_many(&model, 8, &mut rng);
    let err = flat_gradcheck(&model, trainer.params(), &targets);
    assert!(err <= 1e-5, "relative error {err}");
}

struct PoseLoss {
    model: RobotModel,
    target: kinform::kinematics::Pose,
}

impl Objective for PoseLoss {
    fn eval<T: Real>(&self, x: &[T]) -> T {
        pose_loss(&self.model, x, &self.target, DEFAULT_ROTATION_WEIGHT)
    }
}

#[test]
fn taped_pose_loss_matches_differences_in_configuration_space() {
    let model = ammr();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let target = TaskDistribution::FkUniform.draw(&model, &mut rng);
        let theta = kinform::samplers::uniform_config(&model.joint_limits(), &mut rng);
        let f = PoseLoss { model: model.clone(), target };
        assert!(grad_check(&f, &theta.0, 1e-6).unwrap() <= 1e-6);
    }
}

#[test]
fn dot_node_matches_expanded_expression() {
    let tape = Tape::new();
    let b = tape.lift(0.5).unwrap();
    let w = tape.lift_all(&[1.0, -2.0, 3.0]).unwrap();
    let x = tape.lift_all(&[0.2, 0.7, -0.4]).unwrap();
    let y = tape.dot(b, &w, &x);
    let g = tape.backward(y.tanh()).unwrap();
    let s = 0.5 + 0.2 - 1.4 - 1.2;
    let d = 1.0 - s.tanh().powi(2);
    assert!((y.value() - s).abs() < 1e-15);
    assert!((g.wrt(b) - d).abs() < 1e-15);
    for i in 0..3 {
        assert!((g.wrt(w[i]) - d * x[i].value()).abs() < 1e-15);
        assert!((g.wrt(x[i]) - d * w[i].value()).abs() < 1e-15);
    }
}

#[test]
fn smooth_norm_is_differentiable_at_zero() {
    let tape = Tape::new();
    let v = tape.lift_all(&[0.0, 0.0, 0.0]).unwrap();
    let n = smooth_norm(&v);
    let g = tape.backward(n).unwrap();
    assert!(n.value() < 1e-11);
    assert!(g.wrt_all(&v).iter().all(|d| *d == 0.0));
}

#[test]
fn relative_error_uses_unit_floor() {
    assert_eq!(relative_error(&[1e-3], &[2e-3]), 1e-3);
    assert_eq!(relative_error(&[210.0], &[200.0]), 0.05);
}

fn plain(op: PrimitiveOp, a: f64, b: f64) -> f64 {
    match op {
        PrimitiveOp::Add => a + b,
        PrimitiveOp::Sub => a - b,
        PrimitiveOp::Mul => a * b,
        PrimitiveOp::Div => a / b,
        PrimitiveOp::Neg => -a,
        PrimitiveOp::Sin => a.sin(),
        PrimitiveOp::Cos => a.cos(),
        PrimitiveOp::Atan2 => a.atan2(b),
        PrimitiveOp::Tanh => a.tanh(),
        PrimitiveOp::Exp => a.exp(),
        PrimitiveOp::Square => a * a,
        PrimitiveOp::Sqrt => a.sqrt(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn primitives_match_differences(a in 0.2f64..3.0, b in 0.2f64..3.0) {
        for op in PrimitiveOp::ALL {
            let tape = Tape::new();
            let x = tape.lift_all(&[a, b]).unwrap();
            let args = &x[..op.arity()];
            let y = tape.apply(op, args).unwrap();
            prop_assert!((y.value() - plain(op, a, b)).abs() <= 1e-12 * plain(op, a, b).abs().max(1.0));
            let g = tape.backward(y).unwrap().wrt_all(args);
            let vals = [a, b];
            let numeric = finite_differences(|p| plain(op, p[0], *p.get(1).unwrap_or(&b)), &vals[..op.arity()], 1e-6).unwrap();
            prop_assert!(relative_error(&g, &numeric) <= 1e-7, "{}", op.name());
        }
    }

    #[test]
    fn gradient_of_composite_matches_differences(x in proptest::collection::vec(-2.0f64..2.0, 4)) {
        struct F;
        impl Objective for F {
            fn eval<T: Real>(&self, x: &[T]) -> T {
                (x[0] * x[1]).sin() + x[2].atan2(x[3] + x[3].constant_like(3.0)) + (x[0].square() + x[3].square()).sqrt().exp()
            }
        }
        let (_, g) = gradient(&F, &x).unwrap();
        let n = finite_differences(|p| F.eval(p), &x, 1e-6).unwrap();
        prop_assert!(relative_error(&g, &n) <= 1e-6);
    }
}
