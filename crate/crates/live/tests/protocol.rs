use serde_json::json;
use swarmsim::{Simulation, ScenarioF64, Vec3, Violation};
use swarmsim_live::{ClientMessage, MapView, PatchRequest, ServerMessage};

#[test]
fn client_messages_parse() {
    let m: ClientMessage = serde_json::from_value(json!({
        "type": "param_patch",
        "id": 4,
        "patch": {"tick": 120, "u_mig": [0.0, 2.0, 0.0], "vasarhelyi": {"c_frict": 0.1}}
    }))
    .unwrap();
    let ClientMessage::ParamPatch { id, patch } = &m else { panic!() };
    assert_eq!(*id, Some(4));
    assert_eq!(patch.tick, Some(120));
    assert_eq!(patch.u_mig, Some(Vec3::new(0.0, 2.0, 0.0)));
    assert_eq!(patch.vasarhelyi.as_ref().unwrap()["c_frict"], json!(0.1));
    assert_eq!(m.name(), "param_patch");

    let cases = [
        (json!({"type": "pause"}), "pause"),
        (json!({"type": "resume", "id": 1}), "resume"),
        (json!({"type": "reset", "seed": 3}), "reset"),
        (json!({"type": "set_rate", "ticks_per_second": 50.0}), "set_rate"),
    ];
    for (v, name) in cases {
        assert_eq!(serde_json::from_value::<ClientMessage>(v).unwrap().name(), name);
    }
    for bad in [
        json!({"type": "set_rate"}),
        json!({"type": "param_patch", "patch": {"vref": 1.0}}),
        json!({"patch": {}}),
    ] {
        assert!(serde_json::from_value::<ClientMessage>(bad).is_err());
    }
}

#[test]
fn server_message_shapes() {
    let ack = ServerMessage::Ack {
        id: None,
        control: "pause".into(),
        tick: 12,
        epoch: 0,
    };
    assert_eq!(
        serde_json::to_value(&ack).unwrap(),
        json!({"type": "ack", "control": "pause", "tick": 12, "epoch": 0})
    );
    let err = ServerMessage::Error {
        id: Some(2),
        message: "no".into(),
        violations: vec![Violation {
            field: "swarm.d_ref".into(),
            message: "too small".into(),
        }],
    };
    assert_eq!(
        serde_json::to_value(&err).unwrap(),
        json!({"type": "error", "id": 2, "message": "no",
               "violations": [{"field": "swarm.d_ref", "message": "too small"}]})
    );
}

#[test]
fn map_view_lists_obstacles() {
    let sim = Simulation::new(&ScenarioF64::default()).unwrap();
    let view = MapView::of(sim.map());
    assert_eq!(view.obstacles.len(), sim.map().len());
    assert_eq!(view.digest, sim.map().digest());
    let v = serde_json::to_value(&view).unwrap();
    assert_eq!(v["bounds"].as_array().unwrap().len(), 4);
    assert_eq!(v["obstacles"][0].as_array().unwrap().len(), 3);
}

#[test]
fn empty_patch_request_serializes_empty() {
    assert_eq!(serde_json::to_value(PatchRequest::default()).unwrap(), json!({}));
}
