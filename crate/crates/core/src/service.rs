//! HTTP prediction service over a loaded [`ModelSet`].
//!
//! | route | |
//! |---|---|
//! | `GET /v1/health` | `200 ok` |
//! | `GET /v1/model` | model metadata, `503` before a model set is loaded |
//! | `POST /v1/predict` | risks per endpoint and horizon, plus the severity score |
//!
//! Probabilities go over the wire with six decimals; `?precision=full`
//! returns the shortest representation that parses back to the same `f64`.
//! Schema violations answer `400` with the offending field path; requests
//! that do not fit the loaded models' covariates answer `422`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::cohort::{Endpoint, Genotype, Smoking};
use crate::covariates::GenotypeMode;
use crate::error::{Error, Result};
use crate::model::FeatureMode;
use crate::predict::{Grades, Horizon, ModelSet, SubjectInput, MAX_HORIZON};
use crate::scales::SssResult;

/// Shared service state. Requests see one model set for their whole
/// lifetime; [`ServiceState::replace`] swaps the set atomically.
#[derive(Debug, Default)]
pub struct ServiceState {
    models: RwLock<Option<Arc<ModelSet>>>,
}

impl ServiceState {
    pub fn new(models: Option<ModelSet>) -> Arc<Self> {
        Arc::new(ServiceState {
            models: RwLock::new(models.map(Arc::new)),
        })
    }

    pub fn current(&self) -> Option<Arc<ModelSet>> {
        self.models.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn replace(&self, models: Option<ModelSet>) {
        *self.models.write().unwrap_or_else(|e| e.into_inner()) = models.map(Arc::new);
    }
}

/// Body of `POST /v1/predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub age: f64,
    pub smoking: Smoking,
    #[serde(default)]
    pub genotype: Genotype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grades: Option<Grades>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deep_features: Option<Vec<f64>>,
    /// Defaults to 1 through 12.
    #[serde(default = "Horizon::all")]
    pub horizons: Vec<Horizon>,
    /// Defaults to every loaded endpoint.
    #[serde(default)]
    pub endpoints: Vec<Endpoint>,
}

impl PredictRequest {
    pub fn subject(&self) -> SubjectInput {
        SubjectInput {
            id: None,
            age: self.age,
            smoking: self.smoking,
            genotype: self.genotype,
            grades: self.grades,
            deep_features: self.deep_features.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ModelInfo {
    feature_mode: FeatureMode,
    endpoints: Vec<Endpoint>,
    horizons: Vec<u32>,
    models: BTreeMap<Endpoint, EndpointInfo>,
}

#[derive(Debug, Serialize)]
struct EndpointInfo {
    covariates: Vec<String>,
    coefficients: Vec<f64>,
    genotype_mode: GenotypeMode,
    train_fingerprint: String,
}

#[derive(Serialize)]
struct HorizonOut {
    horizon: u32,
    probability: Box<RawValue>,
    extrapolated: bool,
}

#[derive(Serialize)]
struct PredictResponse {
    endpoints: BTreeMap<Endpoint, Vec<HorizonOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sss: Option<SssResult>,
}

#[derive(Debug, Default, Deserialize)]
struct PredictQuery {
    #[serde(default)]
    precision: Option<String>,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, error: String, field: Option<String>) -> Response {
    let body = serde_json::to_string(&ErrorBody { error, field }).expect("error body serializes");
    json_response(status, body)
}

fn status_for(err: &Error) -> StatusCode {
    match err {
        Error::MissingGrades
        | Error::MissingGenotype { .. }
        | Error::DimensionMismatch { .. }
        | Error::ModelDataMismatch(_)
        | Error::NoFeatures => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::BAD_REQUEST,
    }
}

fn format_probability(p: f64, full: bool) -> Box<RawValue> {
    let text = if full {
        serde_json::to_string(&p).expect("finite probability")
    } else {
        format!("{p:.6}")
    };
    RawValue::from_string(text).expect("a number is valid JSON")
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/v1/health", get(|| async { "ok" }))
        .route("/v1/model", get(model_info))
        .route("/v1/predict", post(predict))
        .with_state(state)
}

async fn model_info(State(state): State<Arc<ServiceState>>) -> Response {
    let Some(models) = state.current() else {
        return error_response(StatusCode::SERVICE_UNAVAILABLE, "no model loaded".into(), None);
    };
    let info = ModelInfo {
        feature_mode: models.feature_mode(),
        endpoints: models.endpoints(),
        horizons: (1..=MAX_HORIZON).collect(),
        models: models
            .models()
            .map(|m| {
                (
                    m.endpoint(),
                    EndpointInfo {
                        covariates: m.cox.covariate_names(),
                        coefficients: m.cox.beta.clone(),
                        genotype_mode: m.genotype_mode,
                        train_fingerprint: m.train_fingerprint.clone(),
                    },
                )
            })
            .collect(),
    };
    json_response(
        StatusCode::OK,
        serde_json::to_string(&info).expect("metadata serializes"),
    )
}

async fn predict(State(state): State<Arc<ServiceState>>, Query(query): Query<PredictQuery>, body: Bytes) -> Response {
    let Some(models) = state.current() else {
        return error_response(StatusCode::SERVICE_UNAVAILABLE, "no model loaded".into(), None);
    };
    let full = query.precision.as_deref() == Some("full");
    let request: PredictRequest = {
        let mut de = serde_json::Deserializer::from_slice(&body);
        match serde_path_to_error::deserialize(&mut de) {
            Ok(r) if de.end().is_ok() => r,
            Ok(_) => {
                return error_response(
                    StatusCode::BAD_REQUEST,
                    "trailing characters after the request".into(),
                    None,
                )
            }
            Err(e) => {
                let field = e.path().to_string();
                let field = (field != ".").then_some(field);
                return error_response(StatusCode::BAD_REQUEST, e.inner().to_string(), field);
            }
        }
    };
    if request.grades.is_none() && request.deep_features.is_none() {
        return error_response(
            StatusCode::BAD_REQUEST,
            "either grades or deep_features must be present".into(),
            None,
        );
    }
    if request.horizons.is_empty() {
        return error_response(
            StatusCode::BAD_REQUEST,
            "at least one horizon is required".into(),
            Some("horizons".into()),
        );
    }
    match respond(&models, &request, full) {
        Ok(body) => json_response(StatusCode::OK, body),
        Err(e) => error_response(status_for(&e), e.to_string(), None),
    }
}

fn respond(models: &ModelSet, request: &PredictRequest, full: bool) -> Result<String> {
    let profile = models.predict(&request.subject(), &request.endpoints, &request.horizons)?;
    let response = PredictResponse {
        endpoints: profile
            .endpoints
            .into_iter()
            .map(|(endpoint, risks)| {
                let out = risks
                    .into_iter()
                    .map(|r| HorizonOut {
                        horizon: r.horizon_years,
                        probability: format_probability(r.progression_probability, full),
                        extrapolated: r.extrapolated,
                    })
                    .collect();
                (endpoint, out)
            })
            .collect(),
        sss: profile.sss,
    };
    Ok(serde_json::to_string(&response)?)
}

/// Serves until the process is stopped.
pub async fn serve(state: Arc<ServiceState>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}
