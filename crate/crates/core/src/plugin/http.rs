//! Blocking HTTP POST client for remote processing services.

use std::io::Read;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

/// Responses larger than this are rejected.
pub const MAX_RESPONSE_BYTES: u64 = 256 * 1024 * 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HttpError {
    #[error("invalid URL `{url}`: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("timeout must be greater than zero")]
    InvalidTimeout,
    #[error("remote service answered {status}")]
    Remote { status: u16, body: Vec<u8> },
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport failure: {0}")]
    Transport(String),
}

/// A completed request/response pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HttpExchange {
    pub url: String,
    #[serde(skip)]
    pub request_body: Vec<u8>,
    pub content_type: String,
    pub status: u16,
    #[serde(skip)]
    pub response_body: Vec<u8>,
    pub timeout_ms: u64,
}

/// Absolute `http` or `https` URL with a host.
pub fn validate_url(url: &str) -> Result<url::Url, HttpError> {
    let invalid = |reason: String| HttpError::InvalidUrl {
        url: url.to_string(),
        reason,
    };
    let parsed = url::Url::parse(url).map_err(|e| invalid(e.to_string()))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(invalid(format!("unsupported scheme `{}`", parsed.scheme())));
    }
    if parsed.host_str().is_none_or(str::is_empty) {
        return Err(invalid("missing host".into()));
    }
    Ok(parsed)
}

/// POSTs `body` and returns the exchange for any 2xx answer.
///
/// `timeout` bounds the whole request, connect through body read.
pub fn send_http_post(
    url: &str,
    body: &[u8],
    content_type: &str,
    timeout: Duration,
) -> Result<HttpExchange, HttpError> {
    let parsed = validate_url(url)?;
    if timeout.is_zero() {
        return Err(HttpError::InvalidTimeout);
    }
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let response = agent
        .request_url("POST", &parsed)
        .set("Content-Type", content_type)
        .send_bytes(body);
    let response = match response {
        Ok(r) => r,
        Err(ureq::Error::Status(status, r)) => {
            let body = read_body(r, timeout).unwrap_or_default();
            return Err(HttpError::Remote { status, body });
        }
        Err(ureq::Error::Transport(t)) => return Err(transport_error(&t, timeout)),
    };
    let status = response.status();
    let response_body = read_body(response, timeout)?;
    if !(200..300).contains(&status) {
        return Err(HttpError::Remote {
            status,
            body: response_body,
        });
    }
    Ok(HttpExchange {
        url: url.to_string(),
        request_body: body.to_vec(),
        content_type: content_type.to_string(),
        status,
        response_body,
        timeout_ms: timeout.as_millis() as u64,
    })
}

fn read_body(response: ureq::Response, timeout: Duration) -> Result<Vec<u8>, HttpError> {
    let mut out = Vec::new();
    response
        .into_reader()
        .take(MAX_RESPONSE_BYTES + 1)
        .read_to_end(&mut out)
        .map_err(|e| io_error(&e, timeout))?;
    if out.len() as u64 > MAX_RESPONSE_BYTES {
        return Err(HttpError::Transport("response body too large".into()));
    }
    Ok(out)
}

fn io_error(err: &std::io::Error, timeout: Duration) -> HttpError {
    match err.kind() {
        std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock => HttpError::Timeout(timeout),
        _ => HttpError::Transport(err.to_string()),
    }
}

fn transport_error(t: &ureq::Transport, timeout: Duration) -> HttpError {
    let mut source = std::error::Error::source(t);
    while let Some(err) = source {
        if let Some(io) = err.downcast_ref::<std::io::Error>() {
            return io_error(io, timeout);
        }
        source = err.source();
    }
    HttpError::Transport(t.to_string())
}
