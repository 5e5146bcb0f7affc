//! Receiver-side generation requests: personalised prompts, generator
//! controls, an HTTP/JSON client and a deterministic mock generator.

mod mock;
mod prompt;

pub use mock::{mock_generate, resize_nearest};
pub use prompt::{personalize_prompt, PromptFields};

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ppm::{decode_ppm, encode_ppm, PpmError};
use crate::scalar::Scalar;
use crate::tensor::{FrameTensor, TensorError, VideoTensor};

/// Environment variable consulted for the generation endpoint.
pub const ENDPOINT_ENV: &str = "MIRAGE_GEN_ENDPOINT";

#[derive(Debug, Error)]
pub enum GenError {
    #[error("caption is empty")]
    EmptyCaption,
    #[error("malformed prompt: {0}")]
    MalformedPrompt(String),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("request has no keyframes")]
    NoKeyframes,
    #[error("keyframes disagree on channel count")]
    ChannelMismatch,
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("request timed out")]
    Timeout,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("frame encoding: {0}")]
    Ppm(#[from] PpmError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Generator controls. Only `frames`, `fps`, `height` and `width` affect the
/// mock; the rest are passed through to real backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(rename = "F")]
    pub frames: usize,
    pub fps: f64,
    pub width: usize,
    pub height: usize,
    /// Keyframe-conditioning strength in `[0, 1]`.
    pub lambda: f64,
    pub steps: u32,
    pub guidance: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { frames: 16, fps: 8.0, width: 256, height: 256, lambda: 0.5, steps: 50, guidance: 7.5 }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidConfig(m.to_string()));
        if self.frames == 0 {
            return bad("F must be at least 1");
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad("fps must be positive");
        }
        if self.height < 16 || self.width < 16 {
            return bad("output resolution must be at least 16x16");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.guidance.is_finite() && self.guidance >= 0.0) {
            return bad("guidance must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest<T> {
    pub prompt: PromptFields,
    pub keyframes: Vec<FrameTensor<T>>,
    pub config: GeneratorConfig,
}

#[derive(Serialize, Deserialize)]
struct RequestBody {
    prompt: PromptFields,
    keyframes: Vec<String>,
    config: GeneratorConfig,
}

#[derive(Serialize, Deserialize)]
struct ResponseBody {
    frames: Vec<String>,
}

fn encode_frames<T: Scalar>(frames: &[FrameTensor<T>]) -> Result<Vec<String>, GenError> {
    frames.iter().map(|f| Ok(BASE64.encode(encode_ppm(f)?))).collect()
}

fn decode_frames<T: Scalar>(frames: &[String]) -> Result<Vec<FrameTensor<T>>, GenError> {
    frames
        .iter()
        .map(|s| {
            let bytes = BASE64.decode(s).map_err(|e| GenError::MalformedResponse(format!("base64: {e}")))?;
            decode_ppm(&bytes).map_err(|e| GenError::MalformedResponse(format!("frame: {e}")))
        })
        .collect()
}

impl<T: Scalar> GenerationRequest<T> {
    pub fn new(prompt: PromptFields, keyframes: Vec<FrameTensor<T>>, config: GeneratorConfig) -> Result<Self, GenError> {
        let req = Self { prompt, keyframes, config };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.prompt.content.is_empty() {
            return Err(GenError::EmptyCaption);
        }
        self.config.validate()?;
        let first = self.keyframes.first().ok_or(GenError::NoKeyframes)?;
        if self.keyframes.iter().any(|k| k.channels() != first.channels()) {
            return Err(GenError::ChannelMismatch);
        }
        Ok(())
    }

    /// JSON request body with keyframes as base64 binary PPM.
    pub fn to_json(&self) -> Result<String, GenError> {
        self.validate()?;
        let body = RequestBody { prompt: self.prompt.clone(), keyframes: encode_frames(&self.keyframes)?, config: self.config };
        Ok(serde_json::to_string(&body).expect("request body serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self, GenError> {
        let body: RequestBody = serde_json::from_str(text).map_err(|e| GenError::MalformedResponse(e.to_string()))?;
        let keyframes = decode_frames(&body.keyframes)?;
        Self::new(body.prompt, keyframes, body.config)
    }
}

/// Where generation requests go.
#[derive(Debug, Clone, PartialEq)]
pub enum Endpoint {
    Mock,
    Http { url: String, timeout: Duration },
}

impl Endpoint {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

    /// An explicit URL wins; otherwise the environment variable is used.
    pub fn resolve(url: Option<&str>) -> Option<Self> {
        let url = url.map(str::to_string).or_else(|| std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty()))?;
        Some(Endpoint::Http { url, timeout: Self::DEFAULT_TIMEOUT })
    }
}

/// Runs one generation request against the mock or a remote service.
pub fn request_generation<T: Scalar>(req: &GenerationRequest<T>, endpoint: &Endpoint) -> Result<VideoTensor<T>, GenError> {
    req.validate()?;
    match endpoint {
        Endpoint::Mock => mock_generate(req),
        Endpoint::Http { url, timeout } => http_generate(req, url, *timeout),
    }
}

fn http_generate<T: Scalar>(req: &GenerationRequest<T>, url: &str, timeout: Duration) -> Result<VideoTensor<T>, GenError> {
    let body = req.to_json()?;
    let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
    let mut resp = agent.post(url).header("content-type", "application/json").send(body.as_bytes()).map_err(map_ureq_error)?;
    let text = resp.body_mut().read_to_string().map_err(map_ureq_error)?;
    let parsed: ResponseBody = serde_json::from_str(&text).map_err(|e| GenError::MalformedResponse(e.to_string()))?;
    if parsed.frames.is_empty() {
        return Err(GenError::MalformedResponse("no frames".into()));
    }
    let frames = decode_frames(&parsed.frames)?;
    VideoTensor::new(frames, req.config.fps).map_err(|e| GenError::MalformedResponse(e.to_string()))
}

fn map_ureq_error(e: ureq::Error) -> GenError {
    match e {
        ureq::Error::Timeout(_) => GenError::Timeout,
        ureq::Error::Io(io) if matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) => GenError::Timeout,
        ureq::Error::StatusCode(code) => GenError::MalformedResponse(format!("HTTP status {code}")),
        ureq::Error::Protocol(p) => GenError::MalformedResponse(p.to_string()),
        other => GenError::Unreachable(other.to_string()),
    }
}
