use std::fs;

use swarmsim::flocking::olfati_saber_command;
use swarmsim::record::{read_meta, write_record, META_FILE, METRICS_FILE, STATES_FILE, MAP_FILE};
use swarmsim::rng;
use swarmsim::{
    build_graph, run, spawn_swarm, step_point_mass, Algorithm, DynamicsMode, Kinematics, NeighborMode,
    ParamPatch, RunStatus, Scenario, ScenarioF32, ScenarioF64, Simulation, Vec3,
};

fn small(alg: Algorithm, n: usize, t_end: f64) -> ScenarioF64 {
    let mut s = ScenarioF64::default();
    s.swarm.algorithm = alg;
    s.swarm.n_agents = n;
    s.swarm.neighbors = NeighborMode::Topological {
        count: (n - 1).min(4).max(1),
    };
    s.sim.t_end = t_end;
    s.sim.spawn.center = Vec3::new(60.0, 0.0, -50.0);
    s
}

fn metric_rows(s: &ScenarioF64) -> Vec<Vec<String>> {
    run(s).unwrap().metrics.iter().map(|f| f.to_row()).collect()
}

#[test]
fn spawn_is_deterministic_and_separated() {
    let s = ScenarioF64::default();
    let a = spawn_swarm(&s.sim, &s.swarm, &mut rng::stream(9, rng::SPAWN_STREAM)).unwrap();
    let b = spawn_swarm(&s.sim, &s.swarm, &mut rng::stream(9, rng::SPAWN_STREAM)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 25);
    let mut pairs = 0;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            assert!((a[i].position() - a[j].position()).norm() > 2.0 * s.swarm.r_coll);
            pairs += 1;
        }
    }
    assert_eq!(pairs, 300);
    let half = s.sim.spawn.edge / 2.0;
    for st in &a {
        let d = st.position() - s.sim.spawn.center;
        assert!(d.x.abs() <= half && d.y.abs() <= half && d.z.abs() <= half);
        assert_eq!(st.inertial_velocity(), Vec3::zeros());
    }
}

#[test]
fn twenty_seconds_is_two_thousand_ticks() {
    let r = run(&small(Algorithm::OlfatiSaber, 3, 20.0)).unwrap();
    assert_eq!(r.ticks, 2000);
    assert_eq!(r.metrics.len(), 2000);
    assert_eq!(r.status, RunStatus::Completed);
    for (k, f) in r.metrics.iter().enumerate() {
        assert_eq!(f.tick, k as u64 + 1);
        assert_eq!(f.t, (k + 1) as f64 * 0.01);
    }
}

#[test]
fn identical_inputs_give_identical_series() {
    for alg in Algorithm::ALL {
        let s = small(alg, 12, 3.0);
        assert_eq!(metric_rows(&s), metric_rows(&s));
    }
}

#[test]
fn records_are_byte_identical_except_timing() {
    let s = small(Algorithm::Vasarhelyi, 6, 1.0);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_record(a.path(), &run(&s).unwrap()).unwrap();
    write_record(b.path(), &run(&s).unwrap()).unwrap();
    for f in [META_FILE, METRICS_FILE, STATES_FILE, MAP_FILE] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(read_meta::<f64>(a.path()).unwrap().ticks, 100);
}

#[test]
fn serial_and_parallel_runs_agree() {
    for alg in Algorithm::ALL {
        for dynamics in [DynamicsMode::PointMass, DynamicsMode::Quadcopter] {
            let mut s = small(alg, 16, 1.0);
            s.sim.dynamics = dynamics;
            let serial = run(&s).unwrap();
            s.sim.parallel = true;
            let parallel = run(&s).unwrap();
            assert_eq!(serial.states, parallel.states, "{alg} {dynamics}");
            assert_eq!(serial.metrics, parallel.metrics, "{alg} {dynamics}");
        }
    }
}

#[test]
fn two_agent_tick_matches_hand_trace() {
    let mut s = small(Algorithm::OlfatiSaber, 2, 1.0);
    s.swarm.neighbors = NeighborMode::Topological { count: 1 };
    let mut sim = Simulation::new(&s).unwrap();
    for _ in 0..5 {
        let before = sim.states().to_vec();
        let kin: Vec<Kinematics<f64>> = before.iter().map(Kinematics::from).collect();
        let positions: Vec<_> = kin.iter().map(|k| k.position).collect();
        let g = build_graph(&positions, &s.swarm.neighbors);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        let expected: Vec<_> = (0..2)
            .map(|i| {
                let a = olfati_saber_command(i, &kin, g.neighbors(i), &[], &s.swarm);
                step_point_mass(&before[i], a, s.sim.dt, s.swarm.v_max)
            })
            .collect();
        sim.step().unwrap();
        assert_eq!(sim.states(), &expected[..]);
    }
}

#[test]
fn lone_agent_drifts_along_migration() {
    let mut s = small(Algorithm::Vasarhelyi, 1, 30.0);
    s.sim.map.density = 0.0;
    let r = run(&s).unwrap();
    let last = r.states.last().unwrap().agents[0];
    let v = last.inertial_velocity();
    assert!((v - s.swarm.u_mig).norm() < 1e-6, "{v:?}");
    assert!(r.metrics.last().unwrap().phi_order.is_nan());
}

#[test]
fn empty_patch_list_changes_nothing() {
    let s = small(Algorithm::OlfatiSaber, 5, 1.0);
    let mut with = s.clone();
    with.patches = Vec::new();
    assert_eq!(metric_rows(&s), metric_rows(&with));
}

#[test]
fn live_patches_replay_from_the_record() {
    let s = small(Algorithm::Vasarhelyi, 8, 2.0);
    let mut sim = Simulation::new(&s).unwrap();
    let mut live = Vec::new();
    while !sim.is_finished() {
        match sim.tick() {
            50 => {
                let mut p = ParamPatch::at(50);
                p.u_mig = Some(Vec3::new(0.0, 4.0, 0.0));
                sim.submit_patch(p).unwrap();
            }
            120 => {
                let mut p = ParamPatch::at(130);
                p.v_ref = Some(3.0);
                sim.submit_patch(p).unwrap();
            }
            _ => {}
        }
        if let Some(f) = sim.step().unwrap() {
            live.push(f.to_row());
        }
    }
    let record = sim.run_to_end();
    assert_eq!(record.scenario.patches.len(), 2);
    let replayed = metric_rows(&record.scenario);
    assert_eq!(live, replayed);
    assert_ne!(live, metric_rows(&s));
}

#[test]
fn quadcopter_run_completes() {
    let mut s = small(Algorithm::OlfatiSaber, 4, 3.0);
    s.sim.dynamics = DynamicsMode::Quadcopter;
    let r = run(&s).unwrap();
    assert_eq!(r.status, RunStatus::Completed);
    assert!(r.metrics.iter().all(|f| f.speed_max <= s.swarm.v_max + 1.0));
}

#[test]
fn f32_smoke_run() {
    for alg in Algorithm::ALL {
        let mut s = ScenarioF32::default();
        s.swarm.algorithm = alg;
        s.swarm.n_agents = 6;
        s.swarm.neighbors = NeighborMode::Topological { count: 3 };
        s.sim.t_end = 2.0;
        let r = run(&s).unwrap();
        assert_eq!(r.ticks, 200);
        let f = r.metrics.last().unwrap();
        assert!(f.phi_order.is_finite() && f.dist_min > 0.0);
    }
}

#[test]
fn f32_config_text_matches_f64() {
    let text = ScenarioF64::default().to_toml().unwrap();
    let s: ScenarioF32 = Scenario::from_toml(&text).unwrap();
    assert_eq!(s.swarm.n_agents, 25);
    assert_eq!(s.sim.dt, 0.01f32);
}
