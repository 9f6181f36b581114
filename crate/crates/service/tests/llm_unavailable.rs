use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use interplay_service::{router, AppState, ServiceConfig};

async fn post(app: &axum::Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

// Its own test binary: the endpoint is configured through the process environment.
#[tokio::test]
async fn unreachable_language_model_is_503() {
    std::env::set_var("INTERPLAY_LLM_URL", "http://127.0.0.1:9/v1/chat/completions");
    std::env::set_var("INTERPLAY_LLM_TIMEOUT_SECS", "2");
    let app = router(AppState::new(ServiceConfig::default()));
    let (status, v) = post(&app, "/sessions", json!({"game": "cop", "config": {"llm_seats": [2]}, "seed": 1})).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let id = v["session_id"].as_str().unwrap();
    let (status, v) = post(&app, &format!("/sessions/{id}/act"), json!({"action": "a->b:accuse(c)"})).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE, "{v}");
    assert_eq!(v["error"]["kind"], "external_policy");
    // The failed step left the session where it was.
    let req = Request::get(format!("/sessions/{id}/state")).body(Body::empty()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let state: Value = serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(state["state"]["state"]["round"], 0);
}
