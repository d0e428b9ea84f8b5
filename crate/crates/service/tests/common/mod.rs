//! Shared harness: an in-process server on an ephemeral port and a blocking
//! HTTP client.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::Value;

use maad_service::api::{self, AppState, ServerConfig};
use maad_service::setup::{load_kb, EngineOptions};

pub fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/bookstore")
}

pub fn srs() -> String {
    std::fs::read_to_string(fixture().join("srs.md")).unwrap()
}

pub fn pinned_digest() -> String {
    std::fs::read_to_string(fixture().join("expected.digest"))
        .unwrap()
        .trim()
        .to_string()
}

pub struct TestServer {
    pub base: String,
    pub data_dir: tempfile::TempDir,
    runtime: tokio::runtime::Runtime,
}

impl TestServer {
    /// Serves with the fixture corpus loaded and `replay_roots` for replay
    /// sessions.
    pub fn start(replay_roots: Vec<PathBuf>) -> Self {
        let data_dir = tempfile::tempdir().unwrap();
        let kb = load_kb(data_dir.path(), &[fixture().join("knowledge")]).unwrap();
        let state = AppState::new(
            ServerConfig {
                data_dir: data_dir.path().to_path_buf(),
                replay_roots,
                engine: EngineOptions::default(),
            },
            kb,
        );
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        let listener = runtime
            .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
            .unwrap();
        let addr = listener.local_addr().unwrap();
        runtime.spawn(async move {
            axum::serve(listener, api::router(state)).await.unwrap();
        });
        TestServer {
            base: format!("http://{addr}"),
            data_dir,
            runtime,
        }
    }

    pub fn replay() -> Self {
        TestServer::start(vec![fixture().join("replay")])
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn session_dir(&self, id: &str) -> PathBuf {
        self.data_dir.path().join("sessions").join(id)
    }
}

pub struct Reply {
    pub status: u16,
    pub headers: ureq::http::HeaderMap,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.body))
    }

    pub fn header(&self, name: &str) -> Option<String> {
        self.headers
            .get(name)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string)
    }
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(30)))
        .build()
        .into()
}

fn reply(res: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Reply {
    let mut res = res.expect("request failed");
    Reply {
        status: res.status().as_u16(),
        headers: res.headers().clone(),
        body: res.body_mut().read_to_string().unwrap(),
    }
}

pub fn get(url: &str) -> Reply {
    reply(agent().get(url).call())
}

pub fn post(url: &str, body: &Value) -> Reply {
    post_raw(url, &body.to_string())
}

pub fn post_raw(url: &str, body: &str) -> Reply {
    reply(
        agent()
            .post(url)
            .header("content-type", "application/json")
            .send(body),
    )
}

/// Reads an event stream to its end and returns the `data:` payloads.
pub fn sse(url: &str, last_event_id: Option<u64>) -> Vec<String> {
    let mut req = agent().get(url);
    if let Some(id) = last_event_id {
        req = req.header("last-event-id", id.to_string());
    }
    let res = req.call().expect("stream request failed");
    assert_eq!(res.status().as_u16(), 200);
    let reader = BufReader::new(res.into_body().into_reader());
    reader
        .lines()
        .map(|l| l.unwrap())
        .filter_map(|l| l.strip_prefix("data: ").map(str::to_string))
        .collect()
}

pub fn create(server: &TestServer, config: Value) -> String {
    let r = post(
        &server.url("/sessions"),
        &serde_json::json!({ "srs_text": srs(), "config": config }),
    );
    assert_eq!(r.status, 201, "{}", r.body);
    r.json()["session_id"].as_str().unwrap().to_string()
}

/// Polls the session until `done` holds for its snapshot.
pub fn wait_for(server: &TestServer, id: &str, done: impl Fn(&Value) -> bool) -> Value {
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        let snap = get(&server.url(&format!("/sessions/{id}"))).json();
        if done(&snap) {
            return snap;
        }
        assert!(Instant::now() < deadline, "timed out; last snapshot {snap}");
        std::thread::sleep(Duration::from_millis(10));
    }
}

pub fn wait_terminal(server: &TestServer, id: &str) -> Value {
    wait_for(server, id, |s| {
        matches!(s["phase"].as_str(), Some("CONFIRMED" | "ABORTED"))
    })
}
