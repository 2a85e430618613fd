//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls the library's kinematics or PCA code.

#![allow(dead_code)]

use kinform::kinematics::{AmmrModel, ArmModel, PlanarChain, Pose, Transform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M4 = [[f64; 4]; 4];

pub fn eye() -> M4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn rot_z(t: f64) -> M4 {
    let mut m = eye();
    m[0][0] = t.cos();
    m[0][1] = -t.sin();
    m[1][0] = t.sin();
    m[1][1] = t.cos();
    m
}

pub fn rot_x(t: f64) -> M4 {
    let mut m = eye();
    m[1][1] = t.cos();
    m[1][2] = -t.sin();
    m[2][1] = t.sin();
    m[2][2] = t.cos();
    m
}

pub fn trans(x: f64, y: f64, z: f64) -> M4 {
    let mut m = eye();
    m[0][3] = x;
    m[1][3] = y;
    m[2][3] = z;
    m
}

/// Rigid inverse.
pub fn inv(m: &M4) -> M4 {
    let mut r = eye();
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = m[j][i];
        }
    }
    for i in 0..3 {
        r[i][3] = -(0..3).map(|k| m[k][i] * m[k][3]).sum::<f64>();
    }
    r
}

pub fn origin(m: &M4) -> [f64; 3] {
    [m[0][3], m[1][3], m[2][3]]
}

/// One link: `Rz(θ)·Tz(d)·Tx(a)·Rx(α)` as a product of elementary matrices.
pub fn link(theta: f64, a: f64, alpha: f64, d: f64) -> M4 {
    mul(&mul(&mul(&rot_z(theta), &trans(0.0, 0.0, d)), &trans(a, 0.0, 0.0)), &rot_x(alpha))
}

pub fn arm_link(arm: &ArmModel, i: usize, q: f64) -> M4 {
    let r = &arm.dh_rows[i];
    link(q + r.theta_offset, r.a, r.alpha, r.d)
}

pub fn arm_fk(arm: &ArmModel, q: &[f64]) -> M4 {
    (0..6).fold(eye(), |acc, i| mul(&acc, &arm_link(arm, i, q[i])))
}

pub fn ammr_fk(model: &AmmrModel, theta: &[f64]) -> M4 {
    let base = mul(&trans(theta[1], theta[2], 0.0), &rot_z(theta[0]));
    let m = &model.base.mount_transform;
    let mut mount = eye();
    for i in 0..3 {
        for j in 0..3 {
            mount[i][j] = m.rotation[i][j];
        }
        mount[i][3] = m.translation[i];
    }
    mul(&mul(&base, &mount), &arm_fk(&model.arm, &theta[3..]))
}

pub fn planar_fk(chain: &PlanarChain, q: &[f64]) -> [f64; 2] {
    let [l1, l2] = chain.link_lengths;
    let m = mul(&mul(&mul(&rot_z(q[0]), &trans(l1, 0.0, 0.0)), &rot_z(q[1])), &trans(l2, 0.0, 0.0));
    [m[0][3], m[1][3]]
}

/// Geodesic angle between the rotation blocks, from the Frobenius norm of
/// their difference (`‖R − R'‖ = 2√2 sin(θ/2)`).
pub fn rotation_gap(a: &M4, b: &M4) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    2.0 * (s.sqrt() / (2.0 * 2f64.sqrt())).min(1.0).asin()
}

pub fn rotation_of(r: &[[f64; 3]; 3], p: [f64; 3]) -> M4 {
    let mut m = eye();
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = r[i][j];
        }
        m[i][3] = p[i];
    }
    m
}

/// Roots of `f` on `[lo, hi]`: sign changes between consecutive grid points
/// `step` apart (the end point included), refined by bisection.
pub fn grid_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|k| (lo + k as f64 * step).min(hi)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for k in 0..n {
        let (mut a, mut b) = (xs[k], xs[k + 1]);
        let (fa, fb) = (ys[k], ys[k + 1]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        if fb == 0.0 {
            if k + 1 == n {
                roots.push(b);
            }
            continue;
        }
        let mut fa = fa;
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

fn cross_z(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn dot2(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

/// Angles in `[lo, hi]` that rotate the plane vector `from(q)` onto the
/// direction of `to`.
fn align_roots(from: impl Fn(f64) -> [f64; 2], to: [f64; 2], lo: f64, hi: f64, step: f64) -> Vec<f64> {
    grid_roots(|q| cross_z(from(q), to), lo, hi, step).into_iter().filter(|&q| dot2(from(q), to) > 0.0).collect()
}

pub const GRID_STEP: f64 = 1e-3;

/// Planar IK solutions found by grid search: roots of the elbow-distance
/// residual over θ₁, then the θ₂ that points the forearm at the target.
pub fn planar_ik_grid(chain: &PlanarChain, p: [f64; 2]) -> Vec<[f64; 2]> {
    let [l1, l2] = chain.link_lengths;
    let (lo, hi) = (&chain.joint_limits.lower, &chain.joint_limits.upper);
    let mut out = Vec::new();
    let elbow = |t: f64| [l1 * t.cos(), l1 * t.sin()];
    for t1 in grid_roots(|t| ((p[0] - elbow(t)[0]).hypot(p[1] - elbow(t)[1])) - l2, lo[0], hi[0], GRID_STEP) {
        let e = elbow(t1);
        let to = [p[0] - e[0], p[1] - e[1]];
        for t2 in align_roots(|t| [(t1 + t).cos(), (t1 + t).sin()], to, lo[1], hi[1], GRID_STEP) {
            out.push([t1, t2]);
        }
    }
    out
}

fn xy(p: [f64; 3]) -> [f64; 2] {
    [p[0], p[1]]
}

fn apply(m: &M4, p: [f64; 3]) -> [f64; 3] {
    let mut r = [0.0; 3];
    for i in 0..3 {
        r[i] = m[i][3] + (0..3).map(|k| m[i][k] * p[k]).sum::<f64>();
    }
    r
}

fn col(m: &M4, j: usize) -> [f64; 3] {
    [m[0][j], m[1][j], m[2][j]]
}

/// Arm IK solutions for the root-frame target `target`, found joint by joint
/// with 1-D grid searches at [`GRID_STEP`]:
///
/// 1. q₁: the wrist centre, seen from frame 1, must sit at the fixed height
///    of the shoulder–elbow plane.
/// 2. q₂: the wrist centre must lie at the forearm's length from the elbow
///    axis.
/// 3. q₃: the forearm must point at the wrist centre.
/// 4. q₅, q₄, q₆: the remaining rotation `M = Rz(q₄)Rx(α₄)Rz(q₅)Rx(α₅)Rz(q₆)`
///    is matched entry by entry (`M₃₃` fixes q₅, `M·e_z` fixes q₄, the
///    first column of the rest fixes q₆).
///
/// Assumes the default arm's structure (spherical wrist, α₂ = 0).
pub fn arm_ik_grid(arm: &ArmModel, target: &M4) -> Vec<[f64; 6]> {
    let lo = &arm.joint_limits.lower;
    let hi = &arm.joint_limits.upper;
    let wc = origin(&mul(target, &inv(&arm_link(arm, 5, 0.0))));
    let o4_in_1 = |q2: f64, q3: f64| origin(&mul(&mul(&arm_link(arm, 1, q2), &arm_link(arm, 2, q3)), &arm_link(arm, 3, 0.0)));
    let h = o4_in_1(0.0, 0.0)[2];
    let o4_in_2 = |q3: f64| origin(&mul(&arm_link(arm, 2, q3), &arm_link(arm, 3, 0.0)));
    let forearm = { let o = o4_in_2(0.0); o[0].hypot(o[1]) };
    let mut out = Vec::new();
    for q1 in grid_roots(|q| apply(&inv(&arm_link(arm, 0, q)), wc)[2] - h, lo[0], hi[0], GRID_STEP) {
        let w1 = apply(&inv(&arm_link(arm, 0, q1)), wc);
        let w2 = |q2: f64| apply(&inv(&arm_link(arm, 1, q2)), w1);
        for q2 in grid_roots(|q| { let w = w2(q); w[0].hypot(w[1]) - forearm }, lo[1], hi[1], GRID_STEP) {
            let to = xy(w2(q2));
            for q3 in align_roots(|q| xy(o4_in_2(q)), to, lo[2], hi[2], GRID_STEP) {
                let r03 = mul(&mul(&arm_link(arm, 0, q1), &arm_link(arm, 1, q2)), &arm_link(arm, 2, q3));
                let m = mul(&mul(&inv(&r03), target), &inv(&arm_link(arm, 5, 0.0)));
                let mut m = m;
                for row in m.iter_mut().take(3) {
                    row[3] = 0.0;
                }
                let (a4, a5) = (arm.dh_rows[3].alpha, arm.dh_rows[4].alpha);
                let inner = |q5: f64| mul(&mul(&rot_x(a4), &rot_z(q5)), &rot_x(a5));
                for q5 in grid_roots(|q| inner(q)[2][2] - m[2][2], lo[4], hi[4], GRID_STEP) {
                    let v = col(&inner(q5), 2);
                    let mez = col(&m, 2);
                    for q4 in align_roots(|q| xy(apply(&rot_z(q), v)), xy(mez), lo[3], hi[3], GRID_STEP) {
                        let p = mul(&rot_z(q4), &inner(q5));
                        let rest = mul(&inv(&p), &m);
                        let ex = col(&rest, 0);
                        for q6 in align_roots(|q| [q.cos(), q.sin()], xy(ex), lo[5], hi[5], GRID_STEP) {
                            out.push([q1, q2, q3, q4, q5, q6]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Explained-variance ratios of column observations, via the full row-space
/// covariance and [`jacobi_eigenvalues`]; the first `columns.len()` ratios.
pub fn pca_oracle(columns: &[Vec<f64>]) -> Vec<f64> {
    let l = columns.len();
    let n = columns.iter().map(Vec::len).max().unwrap_or(0);
    let padded: Vec<Vec<f64>> = columns.iter().map(|c| (0..n).map(|i| c.get(i).copied().unwrap_or(0.0)).collect()).collect();
    let mean: Vec<f64> = (0..n).map(|i| padded.iter().map(|c| c[i]).sum::<f64>() / l as f64).collect();
    let mut cov = vec![vec![0.0; n]; n];
    for c in &padded {
        for i in 0..n {
            for j in 0..n {
                cov[i][j] += (c[i] - mean[i]) * (c[j] - mean[j]) / (l as f64 - 1.0);
            }
        }
    }
    let ev: Vec<f64> = jacobi_eigenvalues(cov).into_iter().map(|e| e.max(0.0)).collect();
    let total: f64 = ev.iter().sum();
    ev.iter().take(l).map(|e| e / total).collect()
}

pub fn to_m4(t: &Transform<f64>) -> M4 {
    rotation_of(&t.rotation, t.translation)
}

fn uniform(lo: &[f64], hi: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    lo.iter().zip(hi).map(|(&l, &h)| rng.gen_range(l..=h)).collect()
}

/// Worst position and rotation gaps between the library FK and the matrix
/// oracle over `n` random configurations each of the planar, arm and mobile
/// models.
pub fn fk_oracle_gaps(n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planar = PlanarChain::default();
    let ammr = AmmrModel::default();
    let (mut pos, mut rot) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let q = uniform(&planar.joint_limits.lower, &planar.joint_limits.upper, &mut rng);
        let got = planar.forward(&q);
        let want = planar_fk(&planar, &q);
        pos = pos.max((got[0] - want[0]).hypot(got[1] - want[1]));

        let l = ammr.joint_limits();
        let theta = uniform(&l.lower, &l.upper, &mut rng);
        for (got, want) in [
            (to_m4(&ammr.arm.forward(&theta[3..])), arm_fk(&ammr.arm, &theta[3..])),
            (to_m4(&ammr.forward(&theta)), ammr_fk(&ammr, &theta)),
        ] {
            let d: f64 = (0..3).map(|i| (got[i][3] - want[i][3]).powi(2)).sum::<f64>().sqrt();
            pos = pos.max(d);
            rot = rot.max(rotation_gap(&got, &want));
        }
    }
    (pos, rot)
}

/// Arm configurations away from the singular sets the grid oracle cannot
/// resolve: wrist flips, the wrist centre on the shoulder axis, full
/// extension, and joints near their limits.
pub fn generic_arm_config(arm: &ArmModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let lo: Vec<f64> = arm.joint_limits.lower.iter().map(|v| v + 0.1).collect();
        let hi: Vec<f64> = arm.joint_limits.upper.iter().map(|v| v - 0.1).collect();
        let q = uniform(&lo, &hi, rng);
        if q[4].sin().abs() < 0.2 {
            continue;
        }
        let t = arm_fk(arm, &q);
        let wc = origin(&mul(&t, &inv(&arm_link(arm, 5, 0.0))));
        if wc[0].hypot(wc[1]) < 0.1 {
            continue;
        }
        let (lo_r, hi_r) = arm.wrist_reach();
        let shoulder = origin(&arm_link(arm, 0, q[0]));
        let dist = ((wc[0] - shoulder[0]).powi(2) + (wc[1] - shoulder[1]).powi(2) + (wc[2] - shoulder[2]).powi(2)).sqrt();
        if dist < lo_r + 0.02 || dist > hi_r - 0.02 {
            continue;
        }
        return q;
    }
}

/// Outcome of comparing closed-form IK with the grid oracle.
#[derive(Debug, Default)]
pub struct IkCheck {
    pub targets: usize,
    pub count_mismatches: usize,
    pub max_planar_round_trip: f64,
    pub max_arm_round_trip: f64,
    pub total_solutions: usize,
}

/// Closed-form IK against the grid oracle on `n` planar targets (default
/// and restricted chains) and `n` arm targets.
pub fn ik_oracle_check(n: usize, seed: u64) -> IkCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = IkCheck::default();
    for chain in [PlanarChain::default(), PlanarChain::restricted()] {
        for _ in 0..n {
            let q = loop {
                let q = uniform(&[-std::f64::consts::PI; 2], &[std::f64::consts::PI; 2], &mut rng);
                if q[1].sin().abs() > 0.1 {
                    break q;
                }
            };
            let p = planar_fk(&chain, &q);
            let sols = chain.ik(&Pose::planar(p[0], p[1])).expect("planar target");
            let grid = planar_ik_grid(&chain, p);
            out.targets += 1;
            out.total_solutions += sols.len();
            if sols.len() != grid.len() {
                out.count_mismatches += 1;
            }
            for s in &sols {
                let got = planar_fk(&chain, &s.0);
                out.max_planar_round_trip = out.max_planar_round_trip.max((got[0] - p[0]).hypot(got[1] - p[1]));
            }
        }
    }
    let arm = ArmModel::default();
    for _ in 0..n {
        let q = generic_arm_config(&arm, &mut rng);
        let t = arm_fk(&arm, &q);
        let pose = Pose::from_transform(&arm.forward(&q));
        let sols = arm.ik_solutions(&pose).expect("spatial target");
        let grid = arm_ik_grid(&arm, &t);
        out.targets += 1;
        out.total_solutions += sols.len();
        if sols.len() != grid.len() {
            out.count_mismatches += 1;
        }
        for s in &sols {
            let got = arm_fk(&arm, &s.0);
            let d: f64 = (0..3).map(|i| (got[i][3] - t[i][3]).powi(2)).sum::<f64>().sqrt();
            out.max_arm_round_trip = out.max_arm_round_trip.max(d).max(rotation_gap(&got, &t));
        }
    }
    out
}

/// Worst relative error between the trainer's loss gradient and central
/// differences (step 1e-6) of the plain loss, over `points` random networks
/// and targets on `model`. Every parameter coordinate is probed.
pub fn loss_gradcheck(model: &kinform::kinematics::RobotModel, hidden: &[usize], points: usize, batch: usize, seed: u64) -> f64 {
    use kinform::models::{MlpParams, MlpSpec};
    use kinform::samplers::{encoding_size, TaskDistribution};

    let mut sizes = vec![encoding_size(model)];
    sizes.extend_from_slice(hidden);
    sizes.push(model.dof());
    let spec = MlpSpec::squashed(sizes, model.joint_limits()).expect("valid spec");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..points {
        let params = MlpParams::init(&spec, seed.wrapping_mul(1000).wrapping_add(k as u64)).expect("init");
        let targets = TaskDistribution::FkUniform.draw_many(model, batch, &mut rng);
        worst = worst.max(flat_gradcheck(model, &params, &targets));
    }
    worst
}

/// Relative error of the full parameter gradient of the mean pose loss of
/// `params` on `targets`.
pub fn flat_gradcheck(model: &kinform::kinematics::RobotModel, params: &kinform::models::MlpParams, targets: &[Pose]) -> f64 {
    use kinform::autodiff::{finite_differences, relative_error};
    use kinform::samplers::{robkinet_loss, robkinet_loss_gradient};

    let w = kinform::kinematics::DEFAULT_ROTATION_WEIGHT;
    let (_, analytic) = robkinet_loss_gradient(model, params, targets, w).expect("gradient");
    let numeric = finite_differences(
        |flat| {
            let mut probe = params.clone();
            probe.set_flat(flat).expect("same shape");
            robkinet_loss(model, &probe, targets, w).expect("loss")
        },
        &params.to_flat(),
        1e-6,
    )
    .expect("finite probes");
    relative_error(&analytic, &numeric)
}
