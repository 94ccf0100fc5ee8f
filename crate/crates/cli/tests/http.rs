mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use base64::Engine;
use http_body_util::BodyExt;
use nccut_cli::server::{router, AppState, ServerConfig};
use nccut_core::pipeline::init_session;
use nccut_core::{Config, Mask};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(state: &Arc<AppState>, method: Method, uri: &str, body: Body, json_body: bool) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if json_body {
        req = req.header("content-type", "application/json");
    }
    let resp = router(state.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn post_json(state: &Arc<AppState>, uri: &str, v: Value) -> (StatusCode, Value) {
    let (s, b) = call(state, Method::POST, uri, Body::from(v.to_string()), true).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn get(state: &Arc<AppState>, uri: &str) -> (StatusCode, Vec<u8>) {
    call(state, Method::GET, uri, Body::empty(), false).await
}

async fn create(state: &Arc<AppState>) -> String {
    let (s, b) = call(state, Method::POST, "/sessions", Body::from(common::two_tone_png()), false).await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!((v["width"].as_u64(), v["height"].as_u64()), (Some(100), Some(90)));
    v["id"].as_str().unwrap().to_string()
}

fn roi_json() -> Value {
    json!({ "polygon": common::two_tone().2.vertices })
}

fn decode_mask(payload: &Value) -> Vec<u8> {
    base64::engine::general_purpose::STANDARD
        .decode(payload["mask"].as_str().unwrap())
        .unwrap()
}

#[tokio::test]
async fn segment_matches_core_and_ground_truth() {
    let state = AppState::new(ServerConfig::default());
    let id = create(&state).await;
    let (s, payload) = post_json(&state, &format!("/sessions/{id}/segment"), roi_json()).await;
    assert_eq!(s, StatusCode::OK, "{payload}");
    let png = decode_mask(&payload);

    let (image, gt, roi) = common::two_tone();
    let direct = init_session(&image, &roi, &Config::default()).unwrap().segment().unwrap();
    assert_eq!(png, direct.mask.to_png().unwrap());
    assert_eq!(Mask::from_png(&png).unwrap(), gt);
    assert_eq!(payload["iterations"].as_u64(), Some(direct.iterations() as u64));
    assert_eq!(payload["gamma"].as_array().unwrap().len(), direct.iterations());

    let (s, raw_png) = get(&state, &format!("/sessions/{id}/mask")).await;
    assert_eq!((s, raw_png), (StatusCode::OK, png));
    let (s, raw) = get(&state, &format!("/sessions/{id}/mask?format=raw")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(raw, gt.to_labels());
}

#[tokio::test]
async fn read_endpoints() {
    let state = AppState::new(ServerConfig::default());
    let id = create(&state).await;
    let (s, b) = get(&state, &format!("/sessions/{id}/superpixels")).await;
    assert_eq!(s, StatusCode::OK);
    let sp: Value = serde_json::from_slice(&b).unwrap();
    let regions = sp["regions"].as_array().unwrap();
    assert!(regions.len() > 1);
    assert!(regions.iter().enumerate().all(|(k, r)| r["id"] == k && !r["polylines"].as_array().unwrap().is_empty()));

    // Nothing to show before the first segmentation.
    assert_eq!(get(&state, &format!("/sessions/{id}/ncmap")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&state, &format!("/sessions/{id}/candidates")).await.0, StatusCode::NOT_FOUND);

    post_json(&state, &format!("/sessions/{id}/segment"), roi_json()).await;
    let (s, b) = get(&state, &format!("/sessions/{id}/ncmap")).await;
    assert_eq!(s, StatusCode::OK);
    let map = nccut_core::load_image(&b).unwrap();
    assert_eq!((map.width(), map.height()), (100, 90));
    let (s, b) = get(&state, &format!("/sessions/{id}/candidates")).await;
    assert_eq!(s, StatusCode::OK);
    let c: Value = serde_json::from_slice(&b).unwrap();
    assert!(c["p_obj"].is_array() && c["p_bkg"].is_array());
}

#[tokio::test]
async fn edit_applies_strokes() {
    let state = AppState::new(ServerConfig::default());
    let id = create(&state).await;
    let uri = format!("/sessions/{id}/edit");
    let strokes = json!({ "strokes": [{ "path": [[50, 45], [52, 45]], "label": 0 }] });
    assert_eq!(post_json(&state, &uri, strokes.clone()).await.0, StatusCode::BAD_REQUEST);

    post_json(&state, &format!("/sessions/{id}/segment"), roi_json()).await;
    let (s, payload) = post_json(&state, &uri, strokes).await;
    assert_eq!(s, StatusCode::OK, "{payload}");
    let mask = Mask::from_png(&decode_mask(&payload)).unwrap();
    assert!(!mask.get(50, 45) && !mask.get(52, 45));

    let (s, noop) = post_json(&state, &uri, json!({ "strokes": [] })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(noop["iterations"], 0);
    assert_eq!(decode_mask(&noop), decode_mask(&payload));

    let (s, _) = post_json(&state, &uri, json!({ "strokes": [{ "path": [[500, 1]], "label": 1 }] })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn error_statuses() {
    let state = AppState::new(ServerConfig {
        max_pixels: 5000,
        ..ServerConfig::default()
    });
    let missing = "/sessions/00000000-0000-0000-0000-000000000000";
    assert_eq!(get(&state, &format!("{missing}/superpixels")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&state, Method::DELETE, missing, Body::empty(), false).await.0, StatusCode::NOT_FOUND);
    assert_eq!(post_json(&state, &format!("{missing}/segment"), roi_json()).await.0, StatusCode::NOT_FOUND);

    // 100×90 exceeds 5000 pixels.
    let (s, _) = call(&state, Method::POST, "/sessions", Body::from(common::two_tone_png()), false).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    let (s, _) = call(&state, Method::POST, "/sessions", Body::from("not an image"), false).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(state.n_sessions(), 0);

    let state = AppState::new(ServerConfig::default());
    let id = create(&state).await;
    let uri = format!("/sessions/{id}/segment");
    let (s, _) = call(&state, Method::POST, &uri, Body::from("{not json"), true).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(post_json(&state, &uri, json!({ "points": [] })).await.0, StatusCode::BAD_REQUEST);
    let degenerate = json!({ "polygon": [[1, 1], [5, 5], [9, 9]] });
    assert_eq!(post_json(&state, &uri, degenerate).await.0, StatusCode::BAD_REQUEST);
    let (s, _) = get(&state, &format!("/sessions/{id}/mask?format=tiff")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn concurrent_mutation_conflicts_but_reads_proceed() {
    let state = AppState::new(ServerConfig::default());
    let id = create(&state).await;
    post_json(&state, &format!("/sessions/{id}/segment"), roi_json()).await;
    let other = create(&state).await;

    let session = state.session(&id).unwrap();
    let held = session.work.try_lock().unwrap();
    assert_eq!(post_json(&state, &format!("/sessions/{id}/segment"), roi_json()).await.0, StatusCode::CONFLICT);
    let (s, _) = post_json(&state, &format!("/sessions/{id}/edit"), json!({ "strokes": [] })).await;
    assert_eq!(s, StatusCode::CONFLICT);
    // Snapshot reads and other sessions are not blocked.
    assert_eq!(get(&state, &format!("/sessions/{id}/mask")).await.0, StatusCode::OK);
    assert_eq!(get(&state, &format!("/sessions/{id}/candidates")).await.0, StatusCode::OK);
    assert_eq!(post_json(&state, &format!("/sessions/{other}/segment"), roi_json()).await.0, StatusCode::OK);
    drop(held);
    assert_eq!(post_json(&state, &format!("/sessions/{id}/segment"), roi_json()).await.0, StatusCode::OK);
}

#[tokio::test]
async fn delete_and_idle_expiry() {
    let state = AppState::new(ServerConfig::default());
    let id = create(&state).await;
    let (s, _) = call(&state, Method::DELETE, &format!("/sessions/{id}"), Body::empty(), false).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    assert_eq!(get(&state, &format!("/sessions/{id}/superpixels")).await.0, StatusCode::NOT_FOUND);

    let state = AppState::new(ServerConfig {
        idle_timeout: Duration::from_secs(60),
        ..ServerConfig::default()
    });
    let id = create(&state).await;
    assert_eq!(state.purge_idle(Instant::now()), 0);
    assert_eq!(state.purge_idle(Instant::now() + Duration::from_secs(61)), 1);
    assert_eq!(get(&state, &format!("/sessions/{id}/superpixels")).await.0, StatusCode::NOT_FOUND);
}
