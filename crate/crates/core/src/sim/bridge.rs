//! Simulated robot state and the stateless HTTP context bridge.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};
use tiny_http::{Header, Method, Response, Server};

use crate::error::SimError;
use crate::world::{DetectedObject, Pose, World};

/// What the simulated robot currently senses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimState {
    pub pose: Pose,
    pub detections: Vec<DetectedObject>,
}

pub type SharedState = Arc<RwLock<SimState>>;

pub fn shared_state(state: SimState) -> SharedState {
    Arc::new(RwLock::new(state))
}

/// Deterministic stand-in for a camera frame at `pose`.
pub fn placeholder_frame(pose: &Pose) -> Vec<u8> {
    format!("SIMFRAME x={:.2} y={:.2} yaw={:.2}", pose.x, pose.y, pose.yaw).into_bytes()
}

/// Read side of the robot, either in-process or over HTTP.
pub trait ContextSource: Send + Sync {
    fn pose(&self) -> Result<Pose, SimError>;
    fn detections(&self) -> Result<Vec<DetectedObject>, SimError>;
    fn camera(&self) -> Result<Vec<u8>, SimError>;
}

pub struct InProcessContext {
    state: SharedState,
}

impl InProcessContext {
    pub fn new(state: SharedState) -> Self {
        Self { state }
    }
}

impl ContextSource for InProcessContext {
    fn pose(&self) -> Result<Pose, SimError> {
        Ok(self.state.read().unwrap_or_else(|p| p.into_inner()).pose)
    }

    fn detections(&self) -> Result<Vec<DetectedObject>, SimError> {
        Ok(self.state.read().unwrap_or_else(|p| p.into_inner()).detections.clone())
    }

    fn camera(&self) -> Result<Vec<u8>, SimError> {
        Ok(placeholder_frame(&self.pose()?))
    }
}

/// Client for a running bridge.
pub struct HttpContext {
    base: String,
}

impl HttpContext {
    pub fn new(base_url: &str) -> Self {
        Self {
            base: base_url.trim_end_matches('/').to_owned(),
        }
    }

    fn get(&self, path: &str) -> Result<Value, SimError> {
        ureq::get(&format!("{}{path}", self.base))
            .timeout(Duration::from_secs(10))
            .call()
            .map_err(|e| SimError::Bridge(format!("GET {path}: {e}")))?
            .into_json()
            .map_err(|e| SimError::Bridge(format!("GET {path}: {e}")))
    }
}

impl ContextSource for HttpContext {
    fn pose(&self) -> Result<Pose, SimError> {
        let v = self.get("/pose")?;
        let f = |k: &str| {
            v.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| SimError::Bridge(format!("/pose lacks `{k}`")))
        };
        Ok(Pose::new(f("x")?, f("y")?, f("yaw")?))
    }

    fn detections(&self) -> Result<Vec<DetectedObject>, SimError> {
        let v = self.get("/objects")?;
        serde_json::from_value(v.get("detections").cloned().unwrap_or(Value::Array(vec![])))
            .map_err(|e| SimError::Bridge(format!("/objects: {e}")))
    }

    fn camera(&self) -> Result<Vec<u8>, SimError> {
        let v = self.get("/camera")?;
        let data = v
            .get("data")
            .and_then(Value::as_str)
            .ok_or_else(|| SimError::Bridge("/camera lacks `data`".into()))?;
        base64::engine::general_purpose::STANDARD
            .decode(data)
            .map_err(|e| SimError::Bridge(format!("/camera: {e}")))
    }
}

/// Renders the body for `path`, or `None` for an unknown path. Pure
/// function of the current state: the bridge keeps no session state.
pub fn bridge_response(path: &str, world: &World, state: &SimState) -> Option<Value> {
    let path = path.split('?').next().unwrap_or(path);
    Some(match path {
        "/pose" => json!({"x": state.pose.x, "y": state.pose.y, "yaw": state.pose.yaw}),
        "/graph" => serde_json::to_value(world.graph()).ok()?,
        "/objects" => json!({"static": world.pois(), "detections": state.detections}),
        "/camera" => json!({
            "encoding": "placeholder",
            "data": base64::engine::general_purpose::STANDARD.encode(placeholder_frame(&state.pose)),
        }),
        _ => return None,
    })
}

/// A running bridge; stops when dropped.
pub struct BridgeHandle {
    addr: SocketAddr,
    server: Arc<Server>,
    worker: Option<JoinHandle<()>>,
}

impl BridgeHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for BridgeHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves GET requests on a
/// background thread.
pub fn serve_context_bridge(addr: &str, world: Arc<World>, state: SharedState) -> Result<BridgeHandle, SimError> {
    let server = Server::http(addr).map_err(|e| SimError::Bridge(format!("bind {addr}: {e}")))?;
    let bound = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| SimError::Bridge("bridge bound to a non-IP address".into()))?;
    let server = Arc::new(server);
    let srv = Arc::clone(&server);
    let worker = std::thread::spawn(move || {
        let content_type = Header::from_bytes("Content-Type", "application/json").expect("static header");
        for request in srv.incoming_requests() {
            let body = if *request.method() == Method::Get {
                let state = state.read().unwrap_or_else(|p| p.into_inner()).clone();
                bridge_response(request.url(), &world, &state)
            } else {
                None
            };
            let response = match body {
                Some(v) => Response::from_string(v.to_string())
                    .with_header(content_type.clone())
                    .with_status_code(200),
                None => Response::from_string(json!({"error": "not found"}).to_string())
                    .with_header(content_type.clone())
                    .with_status_code(404),
            };
            let _ = request.respond(response);
        }
    });
    Ok(BridgeHandle {
        addr: bound,
        server,
        worker: Some(worker),
    })
}
