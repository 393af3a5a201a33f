use proptest::prelude::*;
use propsim_core::articulated::{Body, Joint, JointKind, KinematicTree};
use propsim_core::diffcore::{Transform, Vec3};
use propsim_core::sim::{simulate, ObjectModel, ParamTarget, Scenario, SimConfig, TorqueEntry, TorqueSchedule};
use propsim_core::sysid::{
    calibrate, calibrate_cmaes, gradient_check, log_spaced_seeds, CmaesConfig, OptimConfig, ParamEntry, ParamSpec, Problem, SupervisionChannel,
};
use propsim_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const TRUTH: f64 = 0.05;

/// Light arm on a horizontal hinge with a ball welded near its tip, pushed
/// by a short torque pulse.
fn arm_with_ball() -> Scenario {
    let bodies = vec![
        Body::massless("world"),
        Body::new("arm", 0.02, [0.0, 0.05, 0.0], [[2e-5, 0.0, 0.0], [0.0, 1e-6, 0.0], [0.0, 0.0, 2e-5]]),
        Body::point_mass("ball", TRUTH, [0.0; 3]),
    ];
    let joints = vec![
        Joint::new("hinge", JointKind::Revolute { axis: [0.0, 0.0, 1.0] }, 0, 1, Transform::identity()),
        Joint::new("weld", JointKind::Fixed, 1, 2, Transform::translation(Vec3::from_f64([0.0, 0.1, 0.0]))),
    ];
    let tree = KinematicTree::new(bodies, joints).unwrap();
    let mut s = Scenario::new("arm", tree, SimConfig { substeps: 16, duration: 0.6, gravity: [0.0, 0.0, -9.81], ..SimConfig::default() });
    s.object = ObjectModel::Attached { body: 2 };
    s.schedule = TorqueSchedule::new(vec![TorqueEntry::new("hinge", 0.0, 0.1, 0.05)]);
    s
}

fn supervision(s: &Scenario, noise: Option<(f64, u64)>) -> SupervisionChannel {
    let gt = simulate::<0>(s, &[]).unwrap();
    let mut sup = SupervisionChannel::from_trajectory(&gt, &gt.joint_names, &[], None).unwrap();
    if let Some((sigma, seed)) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).unwrap();
        for row in &mut sup.joint_targets {
            for q in row.iter_mut() {
                *q += normal.sample(&mut rng);
            }
        }
    }
    sup
}

fn spec(seeds: Vec<f64>) -> ParamSpec {
    ParamSpec { entries: vec![ParamEntry { target: ParamTarget::Mass, lower: 0.0, upper: 1.0, seeds }] }
}

#[test]
fn recovers_mass_from_clean_track() {
    let s = arm_with_ball();
    let sup = supervision(&s, None);
    let targets = [ParamTarget::Mass];
    let problem = Problem::new(&s, &sup, &targets).unwrap();
    let r = calibrate(&problem, &spec(log_spaced_seeds(0.01, 5)), &OptimConfig::default()).unwrap();
    assert!((r.theta[0] - TRUTH).abs() < 0.001, "{:?}", r.theta);
    assert_eq!(r.restarts.len(), 5);
}

#[test]
fn encoder_noise_keeps_mass_within_ten_percent() {
    let s = arm_with_ball();
    let targets = [ParamTarget::Mass];
    for seed in 0..5 {
        let sup = supervision(&s, Some((1e-3, seed)));
        let problem = Problem::new(&s, &sup, &targets).unwrap();
        let r = calibrate(&problem, &spec(log_spaced_seeds(0.01, 5)), &OptimConfig::default()).unwrap();
        let err = (r.theta[0] - TRUTH).abs() / TRUTH;
        assert!(err < 0.1, "noise seed {seed}: {} kg", r.theta[0]);
    }
}

#[test]
fn cmaes_recovers_mass() {
    let s = arm_with_ball();
    let sup = supervision(&s, None);
    let targets = [ParamTarget::Mass];
    let problem = Problem::new(&s, &sup, &targets).unwrap();
    let cfg = CmaesConfig { budget: 600, ..CmaesConfig::default() };
    let r = calibrate_cmaes(&problem, &spec(vec![0.005]), &cfg).unwrap();
    assert_eq!(r.method, "cmaes");
    assert!(r.evaluations <= 600);
    assert!((r.theta[0] - TRUTH).abs() < 0.001, "{:?}", r.theta);
}

#[test]
fn cmaes_rejects_budget_below_two_generations() {
    let s = arm_with_ball();
    let sup = supervision(&s, None);
    let targets = [ParamTarget::Mass];
    let problem = Problem::new(&s, &sup, &targets).unwrap();
    let cfg = CmaesConfig { budget: 7, ..CmaesConfig::default() };
    assert!(matches!(calibrate_cmaes(&problem, &spec(vec![0.005]), &cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn tangent_gradient_matches_central_difference() {
    let s = arm_with_ball();
    let sup = supervision(&s, None);
    let targets = [ParamTarget::Mass];
    let problem = Problem::new(&s, &sup, &targets).unwrap();
    for m in [0.01, 0.03, 0.12] {
        let rows = gradient_check(&problem, &[m], 1e-6).unwrap();
        assert!(rows[0].pass && rows[0].rel_err < 1e-4, "{:?}", rows[0]);
    }
}

#[test]
fn problem_rejects_parameters_the_scenario_lacks() {
    let s = arm_with_ball();
    let sup = supervision(&s, None);
    let targets = [ParamTarget::KMu];
    assert!(Problem::new(&s, &sup, &targets).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loss_is_non_negative_and_minimal_at_truth(m in 0.005..0.5f64) {
        let s = arm_with_ball();
        let sup = supervision(&s, None);
        let targets = [ParamTarget::Mass];
        let problem = Problem::new(&s, &sup, &targets).unwrap();
        let at_truth = problem.loss(&[TRUTH]).unwrap();
        let elsewhere = problem.loss(&[m]).unwrap();
        prop_assert_eq!(at_truth, 0.0);
        prop_assert!(elsewhere >= 0.0);
        prop_assert!((m - TRUTH).abs() < 1e-12 || elsewhere > 0.0);
    }
}
