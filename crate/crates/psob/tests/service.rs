use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use psob::service::{router, AppState};
use psob::session::{ImageRef, NewSession, Session};
use psob_core::attention::Stroke;
use psob_core::dataset::DatasetSplit;
use psob_core::geometry::Point2;
use psob_core::raster::decode_gray_png;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(root: &std::path::Path) -> Router {
    router(Arc::new(AppState::new(root, 7)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn square() -> Value {
    json!([[50, 50, 150, 50, 150, 150, 50, 150]])
}

async fn new_session(app: &Router, gt: Value) -> String {
    let body = json!({ "image": { "width": 200, "height": 200 }, "ground_truth": gt });
    let (status, bytes) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    v["session_id"].as_str().unwrap().to_string()
}

fn stroke_body(pts: &[(f64, f64)], start: f64) -> Value {
    json!({ "points": pts.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>(), "start_time": start, "duration": 0.5 })
}

/// The same session built directly through the library.
fn direct(strokes: &[Value]) -> Session {
    let spec = NewSession {
        image: ImageRef { id: 1, width: 200, height: 200, path: None },
        ground_truth: vec![vec![50.0, 50.0, 150.0, 50.0, 150.0, 150.0, 50.0, 150.0]],
        category: None,
    };
    let mut s = Session::new("direct".into(), spec).unwrap();
    for v in strokes {
        s.add_stroke(serde_json::from_value::<Stroke>(v.clone()).unwrap()).unwrap();
    }
    s
}

#[tokio::test]
async fn health_check() {
    let dir = tempfile::tempdir().unwrap();
    let (status, body) = call(&app(dir.path()), "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"ok");
}

#[tokio::test]
async fn responses_match_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app, square()).await;
    let strokes = [stroke_body(&[(50.0, 50.0), (150.0, 50.0), (150.0, 70.0)], 0.0), stroke_body(&[(50.0, 150.0)], 1.0)];
    for (k, s) in strokes.iter().enumerate() {
        let (status, body) = call(&app, "POST", &format!("/sessions/{id}/strokes"), Some(s.clone())).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["stroke_count"], k + 1);
    }
    let reference = direct(&strokes);

    let (status, png) = call(&app, "GET", &format!("/sessions/{id}/attention-map"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(png, reference.attention_map().unwrap().to_png().unwrap());
    let raster = decode_gray_png(&png).unwrap();
    assert_eq!(raster.data(), reference.attention_map().unwrap().data());

    let (_, analysis) = call(&app, "GET", &format!("/sessions/{id}/analysis"), None).await;
    assert_eq!(analysis, serde_json::to_vec(&reference.analysis()).unwrap());
    let v: Value = serde_json::from_slice(&analysis).unwrap();
    assert_eq!(v["assistance_class"], "medium");

    let (status, export) = call(&app, "GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(export, reference.export().unwrap().to_canonical_json().into_bytes());
    DatasetSplit::from_json_bytes(&export).unwrap();
}

#[tokio::test]
async fn sessions_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let a = new_session(&app, square()).await;
    let b = new_session(&app, square()).await;
    assert_ne!(a, b);
    for k in 0..4 {
        let (s, _) = call(&app, "POST", &format!("/sessions/{a}/strokes"), Some(stroke_body(&[(10.0, 10.0 + k as f64)], k as f64))).await;
        assert_eq!(s, StatusCode::OK);
        if k % 2 == 0 {
            let (s, _) = call(&app, "POST", &format!("/sessions/{b}/strokes"), Some(stroke_body(&[(90.0, 90.0)], k as f64))).await;
            assert_eq!(s, StatusCode::OK);
        }
    }
    let count = |bytes: Vec<u8>| serde_json::from_slice::<Value>(&bytes).unwrap()["stroke_count"].clone();
    assert_eq!(count(call(&app, "GET", &format!("/sessions/{a}/analysis"), None).await.1), 4);
    assert_eq!(count(call(&app, "GET", &format!("/sessions/{b}/analysis"), None).await.1), 2);
    let (_, png) = call(&app, "GET", &format!("/sessions/{b}/attention-map"), None).await;
    let map = decode_gray_png(&png).unwrap();
    assert_eq!(map.pixel(10, 10)[0], 10);
    assert_eq!(map.pixel(90, 90)[0], 255);
}

#[tokio::test]
async fn concurrent_appends_are_all_kept() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app, square()).await;
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let app = app.clone();
            let uri = format!("/sessions/{id}/strokes");
            tokio::spawn(async move { call(&app, "POST", &uri, Some(stroke_body(&[(1.0, 1.0)], 0.0))).await.0 })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let (_, body) = call(&app, "GET", &format!("/sessions/{id}/analysis"), None).await;
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["stroke_count"], 16);
}

#[tokio::test]
async fn errors_and_stubs() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    assert_eq!(call(&app, "GET", "/sessions/nope/analysis", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "POST", "/predict", Some(json!({}))).await.0, StatusCode::NOT_IMPLEMENTED);
    let bad = json!({ "image": { "width": 0, "height": 10 } });
    assert_eq!(call(&app, "POST", "/sessions", Some(bad)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let huge = json!({ "image": { "width": 4_000_000_000u32, "height": 4_000_000_000u32 } });
    assert_eq!(call(&app, "POST", "/sessions", Some(huge)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let unknown = json!({ "image": { "width": 5, "height": 5 }, "colour": "red" });
    assert!(call(&app, "POST", "/sessions", Some(unknown)).await.0.is_client_error());

    let id = new_session(&app, json!([])).await;
    let (_, body) = call(&app, "GET", &format!("/sessions/{id}/analysis"), None).await;
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["empty"], true);
    assert_eq!(call(&app, "GET", &format!("/sessions/{id}/export"), None).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let empty_stroke = json!({ "points": [], "start_time": 0.0, "duration": 0.0 });
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/strokes"), Some(empty_stroke)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn serves_static_ui() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("ui")).unwrap();
    std::fs::write(dir.path().join("ui/index.html"), "<html>psob</html>").unwrap();
    let app = app(dir.path());
    let (status, body) = call(&app, "GET", "/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>psob</html>");
    assert_eq!(call(&app, "GET", "/missing.js", None).await.0, StatusCode::NOT_FOUND);
}

#[test]
fn stroke_points_are_clamped_into_the_map() {
    let mut s = direct(&[]);
    s.add_stroke(Stroke::new(vec![Point2::new(-40.0, 500.0)], 0.0, 0.0).unwrap()).unwrap();
    let map = s.attention_map().unwrap();
    assert_eq!(map.attention_count(), 1);
    assert_eq!(map.get(0, 199), 255);
}
