//! Loopback HTTP fixture for the remote-processing client.
//!
//! Routes:
//! - `/echo`    200, body and content type echoed back
//! - `/fail`    500
//! - `/slow`    sleeps one second, then 200
//! - `/invert`  decodes the posted PNG, returns its negative as PNG
//! - `/mask`    returns one raw byte per pixel: 255 where luma >= 128
//! - `/tiny`    returns a 1x1 PNG regardless of input

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::oracle;

pub struct FixtureServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    hits: Arc<AtomicUsize>,
    handle: Option<thread::JoinHandle<()>>,
}

impl FixtureServer {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let addr = listener.local_addr().unwrap();
        let stop = Arc::new(AtomicBool::new(false));
        let hits = Arc::new(AtomicUsize::new(0));
        let (stop2, hits2) = (stop.clone(), hits.clone());
        let handle = thread::spawn(move || {
            for conn in listener.incoming() {
                if stop2.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                hits2.fetch_add(1, Ordering::SeqCst);
                thread::spawn(move || {
                    let _ = handle(stream);
                });
            }
        });
        Self {
            addr,
            stop,
            hits,
            handle: Some(handle),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle(stream: TcpStream) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut content_length = 0usize;
    let mut content_type = String::from("application/octet-stream");
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            match k.trim().to_ascii_lowercase().as_str() {
                "content-length" => content_length = v.trim().parse().unwrap_or(0),
                "content-type" => content_type = v.trim().to_string(),
                _ => {}
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body)?;

    let (status, ctype, payload): (u16, String, Vec<u8>) = match path.as_str() {
        "/echo" => (200, content_type, body),
        "/fail" => (500, "text/plain".into(), b"boom".to_vec()),
        "/slow" => {
            thread::sleep(Duration::from_secs(1));
            (200, "text/plain".into(), b"late".to_vec())
        }
        "/invert" => {
            let img = oracle::read_raw(&body);
            (200, "image/png".into(), oracle::raw_to_png(&oracle::invert(&img)))
        }
        "/mask" => {
            let img = oracle::read_raw(&body);
            let gray = if img.channels == 4 { oracle::luma(&img) } else { img };
            let mask = gray.data.iter().map(|&g| if g >= 128 { 255 } else { 0 }).collect();
            (200, "application/octet-stream".into(), mask)
        }
        "/tiny" => (200, "image/png".into(), oracle::png_bytes(1, 1, 0, &[7])),
        _ => (404, "text/plain".into(), b"not found".to_vec()),
    };
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        _ => "Internal Server Error",
    };
    let mut stream = reader.into_inner();
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Length: {}\r\nContent-Type: {ctype}\r\nConnection: close\r\n\r\n",
        payload.len()
    )?;
    stream.write_all(&payload)?;
    stream.flush()
}
