mod common;

use std::time::{Duration, Instant};

use boostlet_core::plugin::http::{send_http_post, HttpError};
use common::server::FixtureServer;

#[test]
fn echo_returns_body_and_status() {
    let server = FixtureServer::start();
    let ex = send_http_post(&server.url("/echo"), b"abc", "text/plain", Duration::from_secs(5)).unwrap();
    assert_eq!(ex.status, 200);
    assert_eq!(ex.response_body, b"abc");
    assert_eq!(ex.content_type, "text/plain");
    assert_eq!(ex.timeout_ms, 5000);
}

#[test]
fn server_error_is_remote() {
    let server = FixtureServer::start();
    let err = send_http_post(&server.url("/fail"), b"x", "text/plain", Duration::from_secs(5)).unwrap_err();
    assert_eq!(
        err,
        HttpError::Remote {
            status: 500,
            body: b"boom".to_vec()
        }
    );
}

#[test]
fn slow_server_times_out() {
    let server = FixtureServer::start();
    let start = Instant::now();
    let err = send_http_post(&server.url("/slow"), b"x", "text/plain", Duration::from_millis(500)).unwrap_err();
    assert!(matches!(err, HttpError::Timeout(_)), "{err:?}");
    assert!(start.elapsed() < Duration::from_millis(950));
}

#[test]
fn invalid_url_sends_nothing() {
    let server = FixtureServer::start();
    for url in ["not a url", "ftp://127.0.0.1/x", "http://"] {
        let err = send_http_post(url, b"x", "text/plain", Duration::from_secs(1)).unwrap_err();
        assert!(matches!(err, HttpError::InvalidUrl { .. }), "{url}: {err:?}");
    }
    assert_eq!(server.hits(), 0);
}
