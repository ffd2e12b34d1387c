use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use prognos::cohort::Endpoint;
use prognos::cohort::{Drusen, EyeGrade, Pigment, Smoking};
use prognos::model::FeatureMode;
use prognos::pipeline::{train, TrainConfig};
use prognos::predict::{Grades, Horizon, ModelSet, SubjectInput};
use prognos::service::{router, ServiceState};
use prognos::synth::AmdDesign;

fn models() -> ModelSet {
    static MODELS: OnceLock<ModelSet> = OnceLock::new();
    MODELS
        .get_or_init(|| {
            let cohort = AmdDesign {
                n: 1000,
                with_features: false,
                ..AmdDesign::default()
            }
            .generate(8)
            .unwrap()
            .cohort;
            let cfg = TrainConfig {
                feature_mode: FeatureMode::DlGrading,
                ..TrainConfig::default()
            };
            let trained = Endpoint::ALL
                .iter()
                .map(|&e| train(&cohort, e, &cfg).unwrap().model)
                .collect();
            ModelSet::new(trained).unwrap()
        })
        .clone()
}

async fn call(state: &Arc<ServiceState>, req: Request<Body>) -> (StatusCode, String) {
    let response = router(state.clone()).oneshot(req).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(uri: &str, body: &str) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

const SUBJECT: &str = r#"{"age": 77, "smoking": "current",
    "grades": {"left": {"drusen": "large", "pigment": "present"},
               "right": {"drusen": "medium", "pigment": "absent"}}}"#;

#[tokio::test]
async fn health_and_no_model() {
    let state = ServiceState::new(None);
    assert_eq!(call(&state, get("/v1/health")).await, (StatusCode::OK, "ok".into()));
    assert_eq!(call(&state, get("/v1/model")).await.0, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(
        call(&state, post("/v1/predict", SUBJECT)).await.0,
        StatusCode::SERVICE_UNAVAILABLE
    );
}

#[tokio::test]
async fn metadata_describes_loaded_models() {
    let state = ServiceState::new(Some(models()));
    let (status, body) = call(&state, get("/v1/model")).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["feature_mode"], "dl_grading");
    assert_eq!(v["endpoints"], serde_json::json!(["late_amd", "ga", "nv"]));
    assert_eq!(v["horizons"].as_array().unwrap().len(), 12);
    let late = &v["models"]["late_amd"];
    assert_eq!(
        late["covariates"].as_array().unwrap().len(),
        late["coefficients"].as_array().unwrap().len()
    );
    assert_eq!(call(&state, get("/v1/model")).await.1, body);
}

#[tokio::test]
async fn full_precision_agrees_with_the_library() {
    let set = models();
    let state = ServiceState::new(Some(set.clone()));
    let (status, body) = call(&state, post("/v1/predict?precision=full", SUBJECT)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let v: Value = serde_json::from_str(&body).unwrap();
    let subject: SubjectInput = serde_json::from_str(SUBJECT).unwrap();
    let profile = set.predict(&subject, &[], &Horizon::all()).unwrap();
    for (endpoint, risks) in &profile.endpoints {
        let got = v["endpoints"][endpoint.as_str()].as_array().unwrap();
        assert_eq!(got.len(), 12);
        for (g, r) in got.iter().zip(risks) {
            assert_eq!(g["horizon"], r.horizon_years);
            assert_eq!(
                g["probability"].as_f64().unwrap().to_bits(),
                r.progression_probability.to_bits()
            );
        }
    }
    assert_eq!(v["sss"]["score"], profile.sss.unwrap().score);
}

#[tokio::test]
async fn default_precision_is_six_decimals() {
    let state = ServiceState::new(Some(models()));
    let (status, body) = call(&state, post("/v1/predict", SUBJECT)).await;
    assert_eq!(status, StatusCode::OK);
    let mut count = 0;
    for part in body.split("\"probability\":").skip(1) {
        let number = part.split(',').next().unwrap();
        assert_eq!(number.split('.').nth(1).unwrap().len(), 6, "{number}");
        count += 1;
    }
    assert_eq!(count, 36);
    let again = call(&state, post("/v1/predict", SUBJECT)).await.1;
    assert_eq!(again, body);
}

#[tokio::test]
async fn baseline_subject_gets_baseline_risk() {
    let set = models();
    let state = ServiceState::new(Some(set.clone()));
    let body = r#"{"age": 0, "smoking": "never",
        "grades": {"left": {"drusen": "none_small", "pigment": "absent"},
                   "right": {"drusen": "none_small", "pigment": "absent"}},
        "horizons": [1, 5, 12], "endpoints": ["late_amd"]}"#;
    let (status, text) = call(&state, post("/v1/predict?precision=full", body)).await;
    assert_eq!(status, StatusCode::OK, "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    let baseline = &set.get(Endpoint::LateAmd).unwrap().baseline;
    for p in v["endpoints"]["late_amd"].as_array().unwrap() {
        let t = p["horizon"].as_f64().unwrap();
        assert_eq!(p["probability"].as_f64().unwrap(), 1.0 - baseline.survival_at(t));
    }
    assert_eq!(v["sss"]["score"], 0);
}

#[tokio::test]
async fn schema_errors_name_the_field() {
    let state = ServiceState::new(Some(models()));
    let cases = [
        (
            r#"{"age": 70, "smoking": "never", "grades": null, "deep_features": null, "horizons": [13]}"#,
            Some("horizons[0]"),
        ),
        (r#"{"age": 70, "smoking": "sometimes"}"#, Some("smoking")),
        (r#"{"age": 70, "smoking": "never", "colour": 1}"#, None),
        (r#"{"age": 70, "smoking": "never"}"#, None),
        (
            r#"{"age": 70, "smoking": "never", "grades": {"left": {"drusen": "none_small", "pigment": "absent"}, "right": {"drusen": "none_small", "pigment": "absent"}}, "horizons": []}"#,
            Some("horizons"),
        ),
        ("{} x", None),
    ];
    for (body, field) in cases {
        let (status, text) = call(&state, post("/v1/predict", body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body} -> {text}");
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(v["error"].is_string());
        if let Some(field) = field {
            assert!(v["field"].as_str().unwrap().starts_with(field), "{body} -> {text}");
        }
    }
}

#[tokio::test]
async fn inputs_the_model_cannot_use_are_unprocessable() {
    let state = ServiceState::new(Some(models()));
    let (status, text) = call(
        &state,
        post(
            "/v1/predict",
            r#"{"age": 70, "smoking": "never", "deep_features": [0.1, 0.2]}"#,
        ),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{text}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_and_model_swap() {
    let state = ServiceState::new(Some(models()));
    let expected = call(&state, post("/v1/predict", SUBJECT)).await.1;
    let tasks: Vec<_> = (0..32)
        .map(|_| {
            let state = state.clone();
            tokio::spawn(async move { call(&state, post("/v1/predict", SUBJECT)).await })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), (StatusCode::OK, expected.clone()));
    }
    state.replace(None);
    assert_eq!(call(&state, get("/v1/model")).await.0, StatusCode::SERVICE_UNAVAILABLE);
    state.replace(Some(models()));
    assert_eq!(call(&state, post("/v1/predict", SUBJECT)).await.1, expected);
}

#[test]
fn request_subject_matches_library_input() {
    let grades = Grades {
        left: EyeGrade::new(Drusen::Large, Pigment::Present),
        right: EyeGrade::new(Drusen::Medium, Pigment::Absent),
    };
    let subject: SubjectInput = serde_json::from_str(SUBJECT).unwrap();
    assert_eq!(subject.grades, Some(grades));
    assert_eq!(subject.smoking, Smoking::Current);
}
