//! Run reports: one human-readable text and one JSON document per run.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "zii";

/// Spec file identity recorded in a report.
#[derive(Debug, Clone)]
pub struct SpecSource {
    pub path: String,
    pub sha256: String,
}

impl SpecSource {
    pub fn new(path: &str, bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        SpecSource {
            path: path.to_string(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

/// Result of one command.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub invocation: String,
    pub spec: Option<SpecSource>,
    /// Human-readable rendering of `payload`.
    pub text: String,
    pub payload: Value,
    pub timing_ms: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "tool": TOOL,
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "invocation": self.invocation,
            "spec": self.spec.as_ref().map(|s| json!({"path": s.path, "sha256": s.sha256})),
            "payload": self.payload,
            "text": self.text,
        });
        if let Some(ms) = self.timing_ms {
            v["timing_ms"] = json!(ms);
        }
        v
    }

    pub fn json_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn human_text(&self) -> String {
        let mut s = self.text.clone();
        if let Some(ms) = self.timing_ms {
            s.push_str(&format!("timing: {ms:.1} ms\n"));
        }
        s
    }
}
