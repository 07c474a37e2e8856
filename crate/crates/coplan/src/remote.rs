//! HTTP client for an external planning model.
//!
//! One `POST {endpoint}/plan` per call with
//! `{"instruction", "text_prompt", "images": [pgm_b64, pgm_b64], "num_waypoints", "max_new_tokens"}`;
//! a 200 response carries `{"residuals": [[dx, dy], ...], "reasoning": "..."}`.
//! Model output is noisy, so the parser also accepts a bare pair array
//! embedded in free text.

use std::time::Duration;

use coplan_core::planner::{BackendError, BackendErrorKind, PlanReply, PlanRequest, PlannerBackend, ResidualSet};
use coplan_core::Vec2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::pgm::bev_to_base64_pgm;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no residual array in response")]
    NoArray,
    #[error("expected {expected} residual pairs, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite residual value")]
    NonFinite,
}

impl From<ParseError> for BackendErrorKind {
    fn from(e: ParseError) -> Self {
        match e {
            ParseError::LengthMismatch { expected, got } => BackendErrorKind::LengthMismatch { expected, got },
            ParseError::NonFinite => BackendErrorKind::NonFinite,
            ParseError::NoArray => BackendErrorKind::Parse(e.to_string()),
        }
    }
}

fn as_pairs(v: &Value) -> Option<Vec<(f64, f64)>> {
    v.as_array()?
        .iter()
        .map(|p| match p.as_array()?.as_slice() {
            [x, y] => Some((x.as_f64()?, y.as_f64()?)),
            _ => None,
        })
        .collect()
}

fn finish(pairs: Vec<(f64, f64)>, m: usize, reasoning: Option<String>) -> Result<ResidualSet, ParseError> {
    if pairs.len() != m {
        return Err(ParseError::LengthMismatch {
            expected: m,
            got: pairs.len(),
        });
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(ParseError::NonFinite);
    }
    Ok(ResidualSet::new(pairs.into_iter().map(Vec2::from).collect()).with_reasoning(reasoning))
}

/// Extract `m` residual pairs from a model response.
///
/// A JSON object with a `residuals` key is read directly (with its optional
/// `reasoning`). Otherwise the first well-formed JSON array of numeric pairs
/// anywhere in the body is used.
pub fn parse_residual_response(body: &str, m: usize) -> Result<ResidualSet, ParseError> {
    if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(body.trim()) {
        if let Some(pairs) = obj.get("residuals").and_then(as_pairs) {
            let reasoning = obj.get("reasoning").and_then(Value::as_str).map(str::to_owned);
            return finish(pairs, m, reasoning);
        }
    }
    for (i, _) in body.match_indices('[') {
        let mut de = serde_json::Deserializer::from_str(&body[i..]);
        if let Ok(v) = Value::deserialize(&mut de) {
            if let Some(pairs) = as_pairs(&v) {
                return finish(pairs, m, None);
            }
        }
    }
    Err(ParseError::NoArray)
}

/// Request body of the `/plan` endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub instruction: String,
    pub text_prompt: String,
    pub images: [String; 2],
    pub num_waypoints: usize,
    pub max_new_tokens: usize,
}

impl WireRequest {
    pub fn from_plan_request(req: &PlanRequest<'_>, max_new_tokens: usize) -> Self {
        Self {
            instruction: req.text.instruction.clone(),
            text_prompt: req.text.context_block.clone(),
            images: [
                bev_to_base64_pgm(&req.visual.bev_now),
                bev_to_base64_pgm(&req.visual.bev_past),
            ],
            num_waypoints: req.nominal.len(),
            max_new_tokens,
        }
    }
}

pub struct RemotePlanner {
    endpoint: String,
    max_new_tokens: usize,
    agent: ureq::Agent,
}

impl RemotePlanner {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, max_new_tokens: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            max_new_tokens,
            agent,
        }
    }

    pub fn url(&self) -> String {
        format!("{}/plan", self.endpoint.trim_end_matches('/'))
    }

    /// Issue one request and parse the reply.
    pub fn remote_plan(&self, wire: &WireRequest) -> Result<ResidualSet, BackendErrorKind> {
        let mut resp = self.agent.post(&self.url()).send_json(wire).map_err(transport_error)?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(BackendErrorKind::Status(status));
        }
        let body = resp.body_mut().read_to_string().map_err(transport_error)?;
        Ok(parse_residual_response(&body, wire.num_waypoints)?)
    }
}

fn transport_error(e: ureq::Error) -> BackendErrorKind {
    match e {
        ureq::Error::Timeout(_) => BackendErrorKind::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => BackendErrorKind::Timeout,
        other => BackendErrorKind::Transport(other.to_string()),
    }
}

impl PlannerBackend for RemotePlanner {
    fn name(&self) -> &'static str {
        "remote"
    }

    fn plan(&self, req: &PlanRequest<'_>) -> Result<PlanReply, BackendError> {
        let wire = WireRequest::from_plan_request(req, self.max_new_tokens);
        match self.remote_plan(&wire) {
            Ok(residuals) => Ok(PlanReply {
                residuals,
                decision: None,
            }),
            Err(kind) => {
                log::warn!("remote planner failed, keeping the nominal plan: {kind}");
                Err(BackendError::with_zero_fallback(kind, req.nominal.len()))
            }
        }
    }
}
