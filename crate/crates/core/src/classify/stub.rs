//! Reference prediction server: serves any [`Predictor`] over the
//! `coco-predict/1` protocol. Used for loopback tests and as a template for
//! wrapping real backbones.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};
use tiny_http::{Header, Method, Response, Server};

use super::remote::PREDICT_FORMAT;
use super::Predictor;
use crate::corpus::sample_from_json;

pub struct StubServer {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and serves until the
    /// handle is dropped.
    pub fn spawn<P>(addr: &str, predictor: P) -> std::io::Result<StubServer>
    where
        P: Predictor + 'static,
    {
        let server = Server::http(addr).map_err(std::io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("stub must bind an IP address"))?;
        let server = Arc::new(server);
        let worker = {
            let server = Arc::clone(&server);
            std::thread::spawn(move || serve(&server, &predictor))
        };
        Ok(StubServer {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server thread exits.
    pub fn join(mut self) {
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

fn serve(server: &Server, predictor: &dyn Predictor) {
    for mut request in server.incoming_requests() {
        let (status, body) = if request.method() != &Method::Post || request.url() != "/predict" {
            (404, json!({"error": "not found"}))
        } else {
            let mut text = String::new();
            match request.as_reader().read_to_string(&mut text) {
                Ok(_) => handle(&text, predictor),
                Err(e) => (400, json!({"error": e.to_string()})),
            }
        };
        let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
        let response = Response::from_string(body.to_string())
            .with_status_code(status)
            .with_header(header);
        if let Err(e) = request.respond(response) {
            log::warn!("stub: failed to respond: {e}");
        }
    }
}

fn handle(text: &str, predictor: &dyn Predictor) -> (u16, Value) {
    let bad = |msg: String| (400, json!({ "error": msg }));
    let request: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return bad(format!("request is not JSON: {e}")),
    };
    if request.get("format").and_then(Value::as_str) != Some(PREDICT_FORMAT) {
        return bad(format!("`format` must be `{PREDICT_FORMAT}`"));
    }
    let Some(items) = request.get("samples").and_then(Value::as_array) else {
        return bad("`samples` must be an array".into());
    };
    let mut samples = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        match sample_from_json(item.clone()) {
            Ok(s) => samples.push(s),
            Err(e) => return bad(format!("samples[{i}]: {e}")),
        }
    }
    match predictor.predict_batch(&samples) {
        Ok(preds) => {
            let labels: Vec<&str> = preds.iter().map(|p| p.label.as_str()).collect();
            let scores: Vec<&[f64]> = preds.iter().map(|p| p.scores.as_slice()).collect();
            (200, json!({ "labels": labels, "scores": scores }))
        }
        Err(e) => (500, json!({ "error": e.to_string() })),
    }
}
