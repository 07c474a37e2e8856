//! Loopback stand-in for the `/plan` endpoint, for tests and demos.
//!
//! Serves each connection on its own thread and answers according to a
//! fixed [`MockBehavior`]. Only the subset of HTTP/1.1 the client uses is
//! understood: one request per connection with a `Content-Length` body.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::json;

use crate::remote::WireRequest;

#[derive(Debug, Clone, PartialEq)]
pub enum MockBehavior {
    /// `num_waypoints` zero residuals.
    Zeros,
    /// The same residual for every waypoint.
    Constant(f64, f64),
    /// One pair fewer than requested.
    Short,
    /// Sleep before answering with zeros.
    Delay(Duration),
    /// Reply with this status and an empty JSON object.
    Status(u16),
    /// Reply 200 with this literal body.
    Body(String),
}

pub struct MockServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    hits: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Bind an ephemeral port on 127.0.0.1 and start serving.
    pub fn start(behavior: MockBehavior) -> std::io::Result<Self> {
        Self::bind("127.0.0.1:0", behavior)
    }

    pub fn bind(addr: &str, behavior: MockBehavior) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let hits = Arc::new(AtomicUsize::new(0));
        let handle = {
            let (stop, hits) = (stop.clone(), hits.clone());
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    hits.fetch_add(1, Ordering::SeqCst);
                    let behavior = behavior.clone();
                    thread::spawn(move || {
                        if let Err(e) = serve(stream, &behavior) {
                            log::debug!("mock server connection failed: {e}");
                        }
                    });
                }
            })
        };
        Ok(Self {
            addr,
            stop,
            hits,
            handle: Some(handle),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Connections accepted so far.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    /// Block serving until the process ends.
    pub fn join(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the accept loop so it sees the flag
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, behavior: &MockBehavior) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let is_plan = request_line.starts_with("POST ") && request_line.split(' ').nth(1) == Some("/plan");
    let request: Option<WireRequest> = serde_json::from_slice(&body).ok();
    let (status, payload) = match (is_plan, request) {
        (false, _) => (404, json!({}).to_string()),
        (true, None) => (400, json!({}).to_string()),
        (true, Some(req)) => respond(behavior, req.num_waypoints),
    };
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        _ => "Error",
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

fn respond(behavior: &MockBehavior, m: usize) -> (u16, String) {
    let pairs = |n: usize, d: (f64, f64)| json!({ "residuals": vec![[d.0, d.1]; n], "reasoning": "mock" }).to_string();
    match behavior {
        MockBehavior::Zeros => (200, pairs(m, (0.0, 0.0))),
        MockBehavior::Constant(x, y) => (200, pairs(m, (*x, *y))),
        MockBehavior::Short => (200, pairs(m.saturating_sub(1), (0.0, 0.0))),
        MockBehavior::Delay(d) => {
            thread::sleep(*d);
            (200, pairs(m, (0.0, 0.0)))
        }
        MockBehavior::Status(s) => (*s, json!({}).to_string()),
        MockBehavior::Body(b) => (200, b.clone()),
    }
}
