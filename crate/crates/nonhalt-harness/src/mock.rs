//! A bundled mock chat-completions server.
//!
//! Listens on an ephemeral local port, answers
//! `POST /v1/chat/completions` with a scripted SSE stream, and captures the
//! request bodies for assertions. Useful both in tests and for dry-running
//! the harness without credentials.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::protocol::{ChatChunk, ChatRequest};

/// What the mock replies with.
#[derive(Clone, Debug)]
pub struct MockReply {
    /// Content deltas, one SSE chunk each.
    pub units: Vec<String>,
    /// Final `finish_reason` ("length", "stop", ...).
    pub finish_reason: String,
    /// Optional per-unit logprobs (padded with the last value if short).
    pub logprobs: Option<Vec<f64>>,
}

impl MockReply {
    pub fn new(units: Vec<String>, finish_reason: &str) -> Self {
        Self {
            units,
            finish_reason: finish_reason.to_string(),
            logprobs: None,
        }
    }

    /// `unit` repeated `n` times with finish_reason "length".
    pub fn repeating(unit: &str, n: usize) -> Self {
        Self::new(vec![unit.to_string(); n], "length")
    }

    pub fn with_logprobs(mut self, logprobs: Vec<f64>) -> Self {
        self.logprobs = Some(logprobs);
        self
    }
}

type Handler = dyn Fn(&ChatRequest) -> MockReply + Send + Sync;

pub struct MockServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
    requests: Arc<Mutex<Vec<ChatRequest>>>,
}

impl MockServer {
    /// Start with a per-request handler.
    pub fn start<F>(handler: F) -> std::io::Result<Self>
    where
        F: Fn(&ChatRequest) -> MockReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind(("127.0.0.1", 0))?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);

        let stop_bg = Arc::clone(&stop);
        let requests_bg = Arc::clone(&requests);
        let handle = std::thread::spawn(move || {
            while !stop_bg.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let handler = Arc::clone(&handler);
                        let requests = Arc::clone(&requests_bg);
                        std::thread::spawn(move || {
                            let _ = serve_connection(stream, &handler, &requests);
                        });
                    }
                    Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });

        Ok(Self {
            addr,
            stop,
            handle: Some(handle),
            requests,
        })
    }

    /// Start with one fixed reply for every request.
    pub fn replay(reply: MockReply) -> std::io::Result<Self> {
        Self::start(move |_| reply.clone())
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Request bodies received so far.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().expect("requests lock").clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve_connection(
    mut stream: TcpStream,
    handler: &Arc<Handler>,
    requests: &Arc<Mutex<Vec<ChatRequest>>>,
) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let mut reader = BufReader::new(stream.try_clone()?);

    // Request line + headers.
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some(v) = line
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
        {
            content_length = v;
        }
    }

    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    if !request_line.starts_with("POST /v1/chat/completions") {
        stream.write_all(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n")?;
        return Ok(());
    }

    let request: ChatRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            let msg = format!("bad request: {e}");
            stream.write_all(
                format!(
                    "HTTP/1.1 400 Bad Request\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{msg}",
                    msg.len()
                )
                .as_bytes(),
            )?;
            return Ok(());
        }
    };
    let reply = handler(&request);
    let want_logprobs = request.logprobs.unwrap_or(false);
    requests.lock().expect("requests lock").push(request);

    stream.write_all(
        b"HTTP/1.1 200 OK\r\nContent-Type: text/event-stream\r\nCache-Control: no-cache\r\nConnection: close\r\n\r\n",
    )?;
    for (i, unit) in reply.units.iter().enumerate() {
        let logprob = if want_logprobs {
            reply
                .logprobs
                .as_ref()
                .and_then(|lps| lps.get(i).or(lps.last()))
                .copied()
        } else {
            None
        };
        let chunk = ChatChunk::content_with_logprob(unit, logprob);
        let payload = serde_json::to_string(&chunk).expect("chunk serializes");
        if stream
            .write_all(format!("data: {payload}\n\n").as_bytes())
            .is_err()
        {
            // Client hung up (budget cut); that is normal.
            return Ok(());
        }
    }
    let finish = ChatChunk::finish(&reply.finish_reason);
    let payload = serde_json::to_string(&finish).expect("chunk serializes");
    let _ = stream.write_all(format!("data: {payload}\n\ndata: [DONE]\n\n").as_bytes());
    Ok(())
}
