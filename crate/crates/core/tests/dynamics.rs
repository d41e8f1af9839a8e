use proptest::prelude::*;
use swarmsim::dynamics::integrate_rigid_body;
use swarmsim::{autopilot_velocity, step_point_mass, step_quadcopter, Actuation, AgentState, QuadParams, Vec3};

fn hover() -> AgentState<f64> {
    AgentState::at_rest(Vec3::new(5.0, -3.0, -20.0))
}

fn max_diff(a: &AgentState<f64>, b: &AgentState<f64>) -> f64 {
    a.as_array()
        .iter()
        .zip(b.as_array())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn hover_is_a_fixed_point() {
    let qp = QuadParams::default();
    let mut s = hover();
    for _ in 0..1000 {
        let next = step_quadcopter(&s, Vec3::zeros(), &qp, 0.01, 10.0).unwrap();
        assert!(max_diff(&next, &s) < 1e-9, "{next:?}");
        s = next;
    }
}

#[test]
fn free_fall_gains_g_dt_and_conserves_energy() {
    let qp = QuadParams::default();
    let act = Actuation {
        thrust: 0.0,
        torques: Vec3::zeros(),
    };
    let dt = 0.01;
    let mut s = hover();
    for _ in 0..200 {
        let next = integrate_rigid_body(&s, &act, &qp, dt);
        assert!((next.w - s.w - qp.gravity * dt).abs() < 1e-12);
        let ke = |x: &AgentState<f64>| 0.5 * qp.mass * x.inertial_velocity().norm_squared();
        let gained = ke(&next) - ke(&s);
        let drop = next.pd - s.pd;
        let work = qp.mass * qp.gravity * drop;
        assert!((gained - work).abs() <= 1e-6 * work.abs(), "{gained} vs {work}");
        s = next;
    }
}

#[test]
fn autopilot_equilibrium_and_climb() {
    let qp = QuadParams::default();
    let act = autopilot_velocity(&hover(), Vec3::zeros(), &qp);
    assert!((act.thrust - qp.mass * qp.gravity).abs() < 1e-9);
    assert!(act.torques.norm() < 1e-12);
    let climb = autopilot_velocity(&hover(), Vec3::new(0.0, 0.0, -2.0), &qp);
    assert!(climb.thrust > qp.mass * qp.gravity);
    // north request: pitch forward, negative torque about body y
    let north = autopilot_velocity(&hover(), Vec3::new(2.0, 0.0, 0.0), &qp);
    assert!(north.torques.y < 0.0);
}

fn constant_accel_run(dt: f64, seconds: f64) -> AgentState<f64> {
    let qp = QuadParams::default();
    let steps = (seconds / dt).round() as usize;
    let mut s = hover();
    for _ in 0..steps {
        s = step_quadcopter(&s, Vec3::new(1.0, 0.0, 0.0), &qp, dt, 10.0).unwrap();
    }
    s
}

#[test]
fn step_response_matches_fine_reference() {
    let coarse = constant_accel_run(0.01, 2.0).inertial_velocity();
    let fine = constant_accel_run(1e-4, 2.0).inertial_velocity();
    assert!((coarse.x - 2.0).abs() <= 0.4, "coarse {}", coarse.x);
    assert!((fine.x - 2.0).abs() <= 0.4, "fine {}", fine.x);
    assert!((coarse.x - fine.x).abs() <= 0.05 * fine.x, "{} vs {}", coarse.x, fine.x);
}

fn open_loop(dt: f64) -> AgentState<f64> {
    let qp = QuadParams::default();
    let act = Actuation {
        thrust: 1.1 * qp.mass * qp.gravity,
        torques: Vec3::new(2e-4, -3e-4, 1e-4),
    };
    let mut s = AgentState::at_rest(Vec3::new(0.0, 0.0, -10.0));
    s.u = 1.0;
    s.v = -0.5;
    s.p = 0.2;
    let steps = (1.0 / dt).round() as usize;
    for _ in 0..steps {
        s = integrate_rigid_body(&s, &act, &qp, dt);
    }
    s
}

#[test]
fn rk4_self_convergence_order() {
    // successive differences e(dt) = |x(dt) − x(dt/2)| shrink like dt⁴
    let dts = [0.04, 0.02, 0.01, 0.005];
    let runs: Vec<_> = dts.iter().map(|&dt| open_loop(dt)).chain([open_loop(0.0025)]).collect();
    let errs: Vec<f64> = (0..dts.len()).map(|k| max_diff(&runs[k], &runs[k + 1])).collect();
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope >= 3.5, "observed order {slope}, errors {errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn point_mass_never_exceeds_v_max(
        v in prop::array::uniform3(-20.0..20.0f64),
        a in prop::array::uniform3(-200.0..200.0f64),
        dt in 1e-4..0.1f64,
        v_max in 0.5..15.0f64,
    ) {
        let s = AgentState::point_mass(Vec3::new(1.0, 2.0, -3.0), v.into());
        let next = step_point_mass(&s, a.into(), dt, v_max);
        prop_assert!(next.inertial_velocity().norm() <= v_max * (1.0 + 1e-12));
        prop_assert_eq!(next.attitude(), Vec3::zeros());
        prop_assert_eq!(next.body_rates(), Vec3::zeros());
    }

    #[test]
    fn point_mass_step_is_semi_implicit_euler(
        p in prop::array::uniform3(-100.0..100.0f64),
        v in prop::array::uniform3(-3.0..3.0f64),
        a in prop::array::uniform3(-5.0..5.0f64),
        dt in 1e-3..0.1f64,
    ) {
        let s = AgentState::point_mass(p.into(), v.into());
        let next = step_point_mass(&s, a.into(), dt, 1e3);
        for k in 0..3 {
            let v1 = v[k] + a[k] * dt;
            let p1 = p[k] + v1 * dt;
            let got_v = next.inertial_velocity();
            let got_p = next.position();
            let (gv, gp) = match k { 0 => (got_v.x, got_p.x), 1 => (got_v.y, got_p.y), _ => (got_v.z, got_p.z) };
            prop_assert!((gv - v1).abs() < 1e-12);
            prop_assert!((gp - p1).abs() < 1e-12);
        }
    }
}
