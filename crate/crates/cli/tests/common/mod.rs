#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use lmplanner::{cmd_synth, RunConfig};
use lmplanner_core::backend::BackendMode;
use lmplanner_core::prompt::build_prompt;
use lmplanner_core::reasoning::{make_finetune_example, OracleConfig};
use lmplanner_core::scenario::ScenarioKind;
use lmplanner_core::{CodecConfig, Horizon, Scenario};
use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

pub fn synth_file(dir: &Path, name: &str, kind: Option<ScenarioKind>, count: usize, seed: u64) -> (PathBuf, Vec<Scenario>) {
    let path = dir.join(name);
    let scenarios = cmd_synth(kind, count, seed, &RunConfig::default(), &path).unwrap();
    (path, scenarios)
}

pub fn stub_config(dir: &Path, scenarios: &Path, mode: BackendMode) -> RunConfig {
    let mut cfg = RunConfig {
        scenario_path: scenarios.to_path_buf(),
        output_dir: dir.join("out"),
        ..RunConfig::default()
    };
    cfg.backend.mode = mode;
    cfg
}

/// Oracle answers keyed by the user prompt they belong to.
pub fn answers(scenarios: &[Scenario]) -> HashMap<String, String> {
    let codec = CodecConfig::default();
    scenarios
        .iter()
        .map(|s| {
            let user = build_prompt(s, &Horizon::default(), &codec).unwrap().user_text;
            let ex = make_finetune_example(s, &OracleConfig::default(), &codec).unwrap();
            (user, ex.assistant_text())
        })
        .collect()
}

/// Mock chat-completions endpoint answering with the oracle text for the
/// prompt it receives. `corrupt(request_index, answer)` may rewrite it.
pub struct MockPlanner {
    server: Arc<Server>,
    handle: Option<thread::JoinHandle<()>>,
    pub requests: Arc<AtomicUsize>,
    pub corrupted: Arc<AtomicUsize>,
    pub port: u16,
}

impl MockPlanner {
    pub fn start<F>(answers: HashMap<String, String>, corrupt: F) -> Self
    where
        F: Fn(usize, &str) -> Option<String> + Send + Sync + 'static,
    {
        let server = Arc::new(Server::http("127.0.0.1:0").unwrap());
        let port = server.server_addr().to_ip().unwrap().port();
        let requests = Arc::new(AtomicUsize::new(0));
        let corrupted = Arc::new(AtomicUsize::new(0));
        let answers = Arc::new(answers);
        let corrupt = Arc::new(Mutex::new(corrupt));
        let (srv, req, cor) = (server.clone(), requests.clone(), corrupted.clone());
        let handle = thread::spawn(move || {
            for mut rq in srv.incoming_requests() {
                let (answers, corrupt, req, cor) = (answers.clone(), corrupt.clone(), req.clone(), cor.clone());
                thread::spawn(move || {
                    let mut text = String::new();
                    rq.as_reader().read_to_string(&mut text).unwrap();
                    let body: Value = serde_json::from_str(&text).unwrap();
                    let user = body["messages"]
                        .as_array()
                        .and_then(|m| m.last())
                        .and_then(|m| m["content"].as_str())
                        .unwrap_or_default()
                        .to_string();
                    let answer = answers.get(&user).cloned().unwrap_or_else(|| "unknown prompt".into());
                    let content = {
                        let f = corrupt.lock().unwrap();
                        let index = req.fetch_add(1, Ordering::SeqCst);
                        match f(index, &answer) {
                            Some(bad) => {
                                cor.fetch_add(1, Ordering::SeqCst);
                                bad
                            }
                            None => answer,
                        }
                    };
                    let reply = json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
                    let resp = Response::from_string(reply.to_string())
                        .with_header(Header::from_bytes("Content-Type", "application/json").unwrap());
                    let _ = rq.respond(resp);
                });
            }
        });
        Self {
            server,
            handle: Some(handle),
            requests,
            corrupted,
            port,
        }
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}/v1", self.port)
    }
}

impl Drop for MockPlanner {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Damaged completions that carry no usable trajectory.
pub fn garble(kind: usize, answer: &str) -> String {
    match kind % 3 {
        0 => "I am unable to plan a trajectory for this scene.".to_string(),
        1 => {
            let cut = answer.find("Trajectory:").map_or(answer.len() / 2, |i| i + "Trajectory: [(0.".len());
            answer[..cut.min(answer.len())].to_string()
        }
        _ => "Trajectory: [(0.00,1.00), (0.00,2.00), (oops".to_string(),
    }
}
