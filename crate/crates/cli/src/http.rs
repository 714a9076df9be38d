//! HTTP face of the node: submit, status and state reads.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use txforge_core::chain::{Address, TxHash, TxRequest};
use txforge_core::lifecycle::Controller;
use txforge_core::node::{
    rpc_get_state, rpc_get_transaction_status, rpc_submit_transaction, SubmitMode, SubmitResponse, PROTOCOL_VERSION,
};

#[derive(Clone)]
struct AppState {
    controller: Arc<Mutex<Controller>>,
    mode: SubmitMode,
}

fn error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    (status, Json(json!({ "code": code, "message": message.into() }))).into_response()
}

pub fn router(controller: Arc<Mutex<Controller>>, mode: SubmitMode) -> Router {
    Router::new()
        .route("/version", get(version))
        .route("/tx", post(submit))
        .route("/tx/{hash}", get(status))
        .route("/state/{contract}", get(state))
        .with_state(AppState { controller, mode })
}

async fn version() -> Response {
    Json(json!({ "protocol": PROTOCOL_VERSION })).into_response()
}

async fn submit(State(app): State<AppState>, body: Bytes) -> Response {
    let req: TxRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, "bad_request", e.to_string()),
    };
    let result = rpc_submit_transaction(&mut app.controller.lock().unwrap(), req, app.mode);
    match result {
        Ok(tx_hash) => Json(SubmitResponse { tx_hash }).into_response(),
        Err(e) => error(StatusCode::CONFLICT, &e.code, e.message),
    }
}

async fn status(State(app): State<AppState>, Path(hash): Path<String>) -> Response {
    let Ok(hash) = hash.parse::<TxHash>() else {
        return error(StatusCode::BAD_REQUEST, "bad_request", format!("not a transaction hash: {hash}"));
    };
    Json(rpc_get_transaction_status(&app.controller.lock().unwrap(), &hash)).into_response()
}

async fn state(
    State(app): State<AppState>,
    Path(contract): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Response {
    let Ok(contract) = contract.parse::<Address>() else {
        return error(StatusCode::BAD_REQUEST, "bad_request", format!("not a contract address: {contract}"));
    };
    let key = query.get("key").map(String::as_str);
    Json(rpc_get_state(&app.controller.lock().unwrap(), &contract, key)).into_response()
}
