//! Drives the HTTP prediction service in-process: model metadata, a
//! prediction, and a rejected request.

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use prognos::cohort::Endpoint;
use prognos::model::FeatureMode;
use prognos::pipeline::{train, TrainConfig};
use prognos::predict::ModelSet;
use prognos::service::{router, ServiceState};
use prognos::synth::AmdDesign;
use tower::ServiceExt;

async fn call(state: &std::sync::Arc<ServiceState>, req: Request<Body>) -> (StatusCode, String) {
    let response = router(state.clone()).oneshot(req).await.expect("router is infallible");
    let status = response.status();
    let bytes = response
        .into_body()
        .collect()
        .await
        .expect("body is readable")
        .to_bytes();
    (status, String::from_utf8_lossy(&bytes).into_owned())
}

#[tokio::main]
async fn main() -> prognos::Result<()> {
    let cohort = AmdDesign {
        n: 1200,
        with_features: false,
        ..AmdDesign::default()
    }
    .generate(8)?
    .cohort;
    let cfg = TrainConfig {
        feature_mode: FeatureMode::DlGrading,
        ..TrainConfig::default()
    };
    let models = Endpoint::ALL
        .iter()
        .map(|&e| train(&cohort, e, &cfg).map(|o| o.model))
        .collect::<prognos::Result<Vec<_>>>()?;
    let state = ServiceState::new(Some(ModelSet::new(models)?));

    let get = |uri: &str| Request::get(uri).body(Body::empty()).unwrap();
    println!("{:?}", call(&state, get("/v1/health")).await);
    println!("{:?}\n", call(&state, get("/v1/model")).await);

    let body = r#"{"age": 77, "smoking": "current",
        "grades": {"left": {"drusen": "large", "pigment": "present"},
                   "right": {"drusen": "medium", "pigment": "absent"}},
        "horizons": [1, 2, 5], "endpoints": ["late_amd", "nv"]}"#;
    let post = |body: &str| {
        Request::post("/v1/predict")
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap()
    };
    println!("{:?}\n", call(&state, post(body)).await);
    println!(
        "{:?}",
        call(&state, post(r#"{"age": 77, "smoking": "never", "horizons": [13]}"#)).await
    );
    Ok(())
}
