#![allow(dead_code)]

use std::time::Duration;

use seqnovelty_service::{router, AppState, ServiceConfig};
use serde_json::Value;

/// A service instance on an ephemeral port, backed by a temporary store.
pub struct Server {
    pub base: String,
    pub state: AppState,
    pub client: reqwest::Client,
    _dir: tempfile::TempDir,
}

impl Server {
    pub async fn start() -> Server {
        let dir = tempfile::tempdir().unwrap();
        let config = ServiceConfig {
            root: dir.path().to_path_buf(),
            ..Default::default()
        };
        let state = AppState::new(config).unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let app = router(state.clone());
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        Server {
            base: format!("http://{addr}"),
            state,
            client: reqwest::Client::new(),
            _dir: dir,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let resp = self.client.post(self.url(path)).json(body).send().await.unwrap();
        let status = resp.status().as_u16();
        let text = resp.text().await.unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let resp = self.client.get(self.url(path)).send().await.unwrap();
        let status = resp.status().as_u16();
        let text = resp.text().await.unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    /// Polls a job until it leaves the queued/running states.
    pub async fn wait(&self, job_id: &str) -> Value {
        loop {
            let (status, job) = self.get(&format!("/jobs/{job_id}")).await;
            assert_eq!(status, 200, "{job}");
            match job["state"].as_str() {
                Some("done") | Some("failed") => return job,
                _ => tokio::time::sleep(Duration::from_millis(20)).await,
            }
        }
    }
}

/// Runs a job-starting request and returns the finished job.
pub async fn run_job(server: &Server, path: &str, body: &Value) -> Value {
    let (status, resp) = server.post(path, body).await;
    assert_eq!(status, 202, "{resp}");
    let job = server.wait(resp["job_id"].as_str().unwrap()).await;
    assert_eq!(job["state"], "done", "{job}");
    job
}
