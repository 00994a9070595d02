use serde::{Deserialize, Serialize};
use uuid::Uuid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    LdaEnsemble,
    TrainDetector,
    Evaluate,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: Uuid,
    pub project_id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub progress: f64,
    #[serde(default)]
    pub result: Option<serde_json::Value>,
    #[serde(default)]
    pub error: Option<String>,
}

impl Job {
    pub fn new(project_id: impl Into<String>, kind: JobKind) -> Self {
        Job {
            id: Uuid::new_v4(),
            project_id: project_id.into(),
            kind,
            state: JobState::Queued,
            progress: 0.0,
            result: None,
            error: None,
        }
    }

    /// Moves to `state`; a finished job never changes again. Returns whether
    /// the transition happened.
    pub fn advance(&mut self, state: JobState, progress: f64) -> bool {
        if self.state.is_terminal() {
            return false;
        }
        self.state = state;
        self.progress = progress.clamp(0.0, 1.0);
        true
    }

    pub fn finish(&mut self, outcome: Result<serde_json::Value, String>) -> bool {
        if self.state.is_terminal() {
            return false;
        }
        match outcome {
            Ok(v) => {
                self.state = JobState::Done;
                self.progress = 1.0;
                self.result = Some(v);
            }
            Err(e) => {
                self.state = JobState::Failed;
                self.error = Some(e);
            }
        }
        true
    }
}
