//! HTTP advisor service, versioned under `/v1`.
//!
//! - `POST /v1/sessions` `{fixture?, models?, policy?, seed?}` -> `{session_id, ...}`
//! - `GET /v1/sessions/{id}/recommendation` -> `{module_id, prediction, model_id}`
//! - `POST /v1/sessions/{id}/outcomes` `{module_id, actual}` -> `{rewards, averages, status}`
//! - `GET /v1/sessions/{id}/state` -> `{arms, tested, status, step_log}`
//!
//! Sessions live in memory. Each session sits behind its own lock, so
//! requests against one session are applied one at a time while distinct
//! sessions proceed independently.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use faultbandit_core::session::{Recommendation, SessionStatus, SessionStep};
use faultbandit_core::synth::derive_seed;
use faultbandit_core::{ArmState, Error as CoreError, Faultiness, Fixture, Model, Outcome, PolicyConfig, Session};
use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::commands::BuiltinFixture;

struct Entry {
    session: Session,
    rng: ChaCha8Rng,
}

pub struct AppState {
    default_models: Vec<Model>,
    default_policy: PolicyConfig,
    seed: u64,
    counter: AtomicU64,
    sessions: Mutex<HashMap<String, Arc<Mutex<Entry>>>>,
}

impl AppState {
    pub fn new(default_models: Vec<Model>, default_policy: PolicyConfig, seed: u64) -> Arc<Self> {
        Arc::new(Self {
            default_models,
            default_policy,
            seed,
            counter: AtomicU64::new(0),
            sessions: Mutex::new(HashMap::new()),
        })
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session `{id}`")))
    }
}

pub struct ApiError(pub StatusCode, pub String);

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let status = match e {
            CoreError::SessionCompleted | CoreError::AlreadyTested(_) | CoreError::NoPendingRecommendation => {
                StatusCode::CONFLICT
            }
            CoreError::UnknownModule(_) => StatusCode::UNPROCESSABLE_ENTITY,
            CoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError(status, e.to_string())
    }
}

/// Either a built-in fixture name or an inline fixture.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum FixtureRef {
    Named(String),
    Inline(Box<Fixture>),
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub fixture: Option<FixtureRef>,
    pub models: Option<Vec<Model>>,
    pub policy: Option<PolicyConfig>,
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub models: Vec<String>,
    pub policy: PolicyConfig,
    pub status: SessionStatus,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitOutcome {
    pub module_id: String,
    pub actual: Faultiness,
}

#[derive(Serialize, Deserialize)]
pub struct ArmView {
    pub model_id: String,
    pub average: f64,
    #[serde(flatten)]
    pub state: ArmState,
}

#[derive(Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub status: SessionStatus,
    pub policy: PolicyConfig,
    pub arms: Vec<ArmView>,
    pub tested: Vec<String>,
    pub step_log: Vec<SessionStep<f64>>,
    pub composite_auc: Option<f64>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/recommendation", get(recommendation))
        .route("/v1/sessions/{id}/outcomes", post(submit_outcome))
        .route("/v1/sessions/{id}/state", get(session_state))
        .with_state(state)
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let models = match (req.fixture, req.models) {
        (Some(_), Some(_)) => {
            return Err(ApiError(
                StatusCode::BAD_REQUEST,
                "give either `fixture` or `models`, not both".into(),
            ))
        }
        (Some(FixtureRef::Named(name)), None) if name.eq_ignore_ascii_case("worked-example") => {
            BuiltinFixture::WorkedExample.build().models
        }
        (Some(FixtureRef::Named(name)), None) => {
            return Err(ApiError(StatusCode::BAD_REQUEST, format!("unknown fixture `{name}`")))
        }
        (Some(FixtureRef::Inline(f)), None) => {
            f.validate()?;
            f.models
        }
        (None, Some(models)) => models,
        (None, None) => app.default_models.clone(),
    };
    let policy = req.policy.unwrap_or(app.default_policy);
    let session = Session::create(models, policy)?;
    let n = app.counter.fetch_add(1, Ordering::Relaxed);
    let seed = req.seed.unwrap_or_else(|| derive_seed(app.seed, n));
    let created = Created {
        session_id: session.session_id.clone(),
        models: session.models().iter().map(|m| m.model_id.clone()).collect(),
        policy,
        status: session.status(),
    };
    let entry = Entry {
        session,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    app.sessions
        .lock()
        .expect("session map lock")
        .insert(created.session_id.clone(), Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(created)))
}

async fn recommendation(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Recommendation>, ApiError> {
    let entry = app.entry(&id)?;
    let mut guard = entry.lock().expect("session lock");
    let Entry { session, rng } = &mut *guard;
    Ok(Json(session.recommend(rng)?))
}

async fn submit_outcome(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<SubmitOutcome>,
) -> Result<Json<Outcome>, ApiError> {
    let entry = app.entry(&id)?;
    let mut guard = entry.lock().expect("session lock");
    Ok(Json(guard.session.submit_outcome(&body.module_id, body.actual)?))
}

async fn session_state(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    let entry = app.entry(&id)?;
    let guard = entry.lock().expect("session lock");
    let s = &guard.session;
    let averages: IndexMap<String, f64> = s.averages();
    Ok(Json(StateView {
        session_id: s.session_id.clone(),
        status: s.status(),
        policy: *s.policy(),
        arms: s
            .models()
            .iter()
            .zip(s.arms())
            .map(|(m, a)| ArmView {
                model_id: m.model_id.clone(),
                average: averages[&m.model_id],
                state: *a,
            })
            .collect(),
        tested: s.tested().iter().cloned().collect(),
        step_log: s.log().to_vec(),
        composite_auc: s.composite_auc(),
    }))
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
