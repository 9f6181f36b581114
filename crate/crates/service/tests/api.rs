use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use interplay_service::{read_events, replay, router, AppState, ServiceConfig};

fn app() -> Router {
    router(AppState::new(ServiceConfig::default()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, v)
}

async fn create(app: &Router, body: Value) -> (String, Value) {
    let (status, v) = call(app, Method::POST, "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    (v["session_id"].as_str().unwrap().to_string(), v)
}

fn ring() -> Value {
    json!({"game": "skirmish", "config": {"ring": {"agents": 3, "per_agent": 2}, "max_turns": 3}, "seed": 4})
}

#[tokio::test]
async fn cop_session_starts_at_round_zero() {
    let app = app();
    let (id, v) = create(&app, json!({"game": "cop", "config": {"rounds": 2}, "seed": 1})).await;
    assert_eq!(v["state"]["state"]["round"], 0);
    assert_eq!(v["state"]["state"]["chat"], json!([]));
    assert_eq!(v["state"]["state"]["phase"], "communicate");
    assert_eq!(v["state"]["game"], "cop");

    let (status, state) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state, v);
}

#[tokio::test]
async fn unknown_session_is_404() {
    let app = app();
    for (method, path, body) in [
        (Method::GET, "state", None),
        (Method::GET, "candidates", None),
        (Method::POST, "explain", Some(json!({"type": "sica"}))),
        (Method::POST, "act", Some(json!({"action": 0}))),
    ] {
        let (status, v) = call(&app, method, &format!("/sessions/nope/{path}"), body).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{path}");
        assert_eq!(v["error"]["kind"], "unknown_session");
    }
}

#[tokio::test]
async fn sica_is_repeatable_and_read_only() {
    let app = app();
    let (id, created) = create(&app, json!({"game": "cop", "seed": 3})).await;
    let req = json!({"type": "sica", "params": {"k": 300, "d": 1, "seed": 11}});
    let (s1, a) = call(&app, Method::POST, &format!("/sessions/{id}/explain"), Some(req.clone())).await;
    let (s2, b) = call(&app, Method::POST, &format!("/sessions/{id}/explain"), Some(req)).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK), "{a}");
    assert_eq!(a.to_string(), b.to_string());
    assert_eq!(a["type"], "sica");
    assert_eq!(a["matrix"].as_array().unwrap().len(), 3);
    let (_, after) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(after, created);
}

#[tokio::test]
async fn concurrent_explains_match_serial_ones() {
    let app = app();
    let (id, _) = create(&app, ring()).await;
    let req = json!({"type": "sica", "params": {"k": 200, "d": 2, "seed": 5}});
    let uri = format!("/sessions/{id}/explain");
    let (_, serial) = call(&app, Method::POST, &uri, Some(req.clone())).await;
    let handles: Vec<_> = (0..6)
        .map(|_| {
            let (app, uri, req) = (app.clone(), uri.clone(), req.clone());
            tokio::spawn(async move { call(&app, Method::POST, &uri, Some(req)).await })
        })
        .collect();
    for h in handles {
        let (status, v) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        assert_eq!(v, serial);
    }
}

#[tokio::test]
async fn out_of_phase_announcement_is_409() {
    let app = app();
    let (id, _) = create(&app, json!({"game": "cop", "seed": 2})).await;
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/act"),
        Some(json!({"action": "announce(b=guilty,c=guilty)"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT, "{v}");
    assert_eq!(v["error"]["kind"], "illegal_action");
}

#[tokio::test]
async fn malformed_requests_are_422() {
    let app = app();
    let (id, _) = create(&app, ring()).await;
    let bad_bodies = [
        ("/sessions".to_string(), json!({"config": {}})),
        ("/sessions".to_string(), json!({"game": "chess"})),
        (format!("/sessions/{id}/explain"), json!({"params": {}})),
        (format!("/sessions/{id}/explain"), json!({"type": "telepathy"})),
        (format!("/sessions/{id}/explain"), json!({"type": "sica", "params": {"k": 100000}})),
        (format!("/sessions/{id}/explain"), json!({"type": "sica", "params": {"k": "many"}})),
        (format!("/sessions/{id}/act"), json!({"move": 1})),
        (format!("/sessions/{id}/act"), json!({"action": 17})),
    ];
    for (uri, body) in bad_bodies {
        let (status, v) = call(&app, Method::POST, &uri, Some(body.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{uri} {body} -> {v}");
    }
    // Not JSON at all.
    let req = Request::post(format!("/sessions/{id}/act"))
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn skirmish_play_loop() {
    let app = app();
    let (id, _) = create(&app, ring()).await;
    let (status, c) = call(&app, Method::GET, &format!("/sessions/{id}/candidates?samples=50&seed=1"), None).await;
    assert_eq!(status, StatusCode::OK, "{c}");
    assert_eq!(c["agent"], 0);
    assert!(c["enumerated"].as_bool().unwrap());
    let legal = c["legal"].as_array().unwrap();
    assert!(!legal.is_empty());
    let total: f64 = c["sampled"].as_array().unwrap().iter().map(|s| s["frequency"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let action = legal[legal.len() / 2]["action"].clone();
    let (status, e) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/explain"),
        Some(json!({"type": "sbue", "params": {"k": 100, "seed": 1, "pins": [{"agent": 0, "action": action}], "standardize": true}})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{e}");
    assert_eq!(e["values"].as_array().unwrap().len(), 3);

    let reference = legal[0]["action"].clone();
    let (status, cf) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/explain"),
        Some(json!({"type": "counterfactual", "params": {"agent": 0, "reference_action": reference, "constraints": [], "samples": 200, "utility_samples": 50, "seed": 2}})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{cf}");

    let (status, probable) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/explain"),
        Some(json!({"type": "probable", "params": {"k": 50, "seed": 1, "pins": [{"agent": 0, "action": action}]}})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{probable}");

    let mut terminal = false;
    let mut last = Value::Null;
    for _ in 0..3 {
        let (_, c) = call(&app, Method::GET, &format!("/sessions/{id}/candidates?samples=10"), None).await;
        last = c["legal"][0]["action"].clone();
        let (status, v) = call(&app, Method::POST, &format!("/sessions/{id}/act"), Some(json!({"action": last}))).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        terminal = v["step"]["terminal"].as_bool().unwrap();
        if terminal {
            assert_eq!(v["rewards"].as_array().unwrap().len(), 3);
        } else {
            assert!(v.get("rewards").is_none());
        }
    }
    assert!(terminal);
    let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/act"), Some(json!({"action": last}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn cop_message_round_appends_three() {
    let app = app();
    let (id, _) = create(&app, json!({"game": "cop", "config": {"rounds": 1}, "seed": 9})).await;
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/act"),
        Some(json!({"action": {"kind": "message", "recipient": "b", "template": "accuse", "target": "c"}})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["state"]["state"]["chat"].as_array().unwrap().len(), 3);
    assert_eq!(v["state"]["state"]["phase"], "announce");
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/act"),
        Some(json!({"action": {"kind": "announce", "b": "guilty", "c": "guilty"}})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert!(v["step"]["terminal"].as_bool().unwrap());
    assert_eq!(v["rewards"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn cors_headers_are_sent() {
    let app = app();
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/sessions")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let res = app.oneshot(req).await.unwrap();
    assert!(res.headers().contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}

#[tokio::test]
async fn event_log_replays_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(ServiceConfig {
        log_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    }));
    let (id, _) = create(&app, json!({"game": "cop", "config": {"rounds": 2}, "seed": 21, "human": 1})).await;
    let explain = json!({"type": "sbue", "params": {"k": 50, "seed": 1, "pins": [{"agent": 1, "action": "b->a:accuse(c)"}]}});
    call(&app, Method::POST, &format!("/sessions/{id}/explain"), Some(explain)).await;
    for action in [json!("b->a:accuse(c)"), json!("b->c:free:hello there"), json!("announce(a=guilty,c=innocent)")] {
        let (status, v) = call(&app, Method::POST, &format!("/sessions/{id}/act"), Some(json!({"action": action}))).await;
        assert_eq!(status, StatusCode::OK, "{v}");
    }
    let (_, live) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;

    let events = read_events(&dir.path().join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(events.len(), 5);
    let replayed = replay(&events).unwrap();
    assert_eq!(replayed.game.view(), live["state"]);
}
