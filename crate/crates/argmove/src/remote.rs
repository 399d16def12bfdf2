//! Client for a classifier service speaking the JSON wire protocol.
//!
//! Request (HTTP POST):
//! `{"request_id": str, "essay_id": str, "segments": [str], "boundary_token": "[SEP]"}`
//!
//! Response: `{"request_id": str, "distributions": [{"<label>": float, ...}]}` with
//! one nine-label distribution per segment. Errors come back with a non-2xx
//! status and `{"error": str}`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use argmove_core::labeler::{
    check_arity, Classifier, ClassifyError, LabelDistribution, ModifiedEssay, BOUNDARY_TOKEN,
};
use argmove_core::CandidateLabel;
use serde::{Deserialize, Serialize};

pub const ENDPOINT_ENV: &str = "ARGMOVE_BACKEND_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub request_id: String,
    pub essay_id: String,
    pub segments: Vec<String>,
    pub boundary_token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub request_id: String,
    pub distributions: Vec<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout: Duration,
    /// Extra attempts after the first on transport errors, 429 and 5xx.
    pub retries: u32,
    /// First retry delay; doubled on each further retry.
    pub backoff: Duration,
    /// Requests in flight at once across all threads.
    pub concurrency: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> RemoteConfig {
        RemoteConfig {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            retries: 3,
            backoff: Duration::from_millis(200),
            concurrency: 4,
        }
    }
}

/// Counting semaphore capping in-flight requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Gate {
        Gate { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteClassifier {
    config: RemoteConfig,
    agent: ureq::Agent,
    next_id: AtomicU64,
    gate: Gate,
}

enum Attempt {
    Retry(String),
    Fail(ClassifyError),
}

impl RemoteClassifier {
    pub fn new(config: RemoteConfig) -> RemoteClassifier {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        let gate = Gate::new(config.concurrency);
        RemoteClassifier { config, agent, next_id: AtomicU64::new(1), gate }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn request(&self, context: &ModifiedEssay) -> WireRequest {
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        WireRequest {
            request_id: format!("{}#{n}", context.essay_id),
            essay_id: context.essay_id.clone(),
            segments: context.texts().into_iter().map(String::from).collect(),
            boundary_token: BOUNDARY_TOKEN.into(),
        }
    }

    fn attempt(&self, body: &str) -> Result<String, Attempt> {
        let _permit = self.gate.acquire();
        match self.agent.post(&self.config.endpoint).set("Content-Type", "application/json").send_string(body) {
            Ok(resp) => resp.into_string().map_err(|e| Attempt::Retry(format!("reading response: {e}"))),
            Err(ureq::Error::Status(code, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                let msg = serde_json::from_str::<WireError>(&text).map(|e| e.error).unwrap_or(text);
                let msg = format!("backend returned {code}: {msg}");
                if code == 429 || code >= 500 {
                    Err(Attempt::Retry(msg))
                } else {
                    Err(Attempt::Fail(ClassifyError::Backend(msg)))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(Attempt::Retry(format!("backend unreachable: {t}"))),
        }
    }
}

/// Checks a response against its request and converts the distributions.
pub fn decode_response(
    request: &WireRequest,
    body: &str,
    context: &ModifiedEssay,
) -> Result<Vec<LabelDistribution>, ClassifyError> {
    let resp: WireResponse =
        serde_json::from_str(body).map_err(|e| ClassifyError::Backend(format!("malformed response: {e}")))?;
    if resp.request_id != request.request_id {
        return Err(ClassifyError::Backend(format!(
            "response request_id {:?} does not match request {:?}",
            resp.request_id, request.request_id
        )));
    }
    let out = resp
        .distributions
        .iter()
        .enumerate()
        .map(|(index, d)| {
            let mut map = BTreeMap::new();
            for (k, v) in d {
                let label: CandidateLabel = k
                    .parse()
                    .map_err(|_| ClassifyError::Backend(format!("distribution {index}: unknown label {k:?}")))?;
                map.insert(label, *v);
            }
            LabelDistribution::from_map(&map).map_err(|source| ClassifyError::InvalidDistribution { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_arity(context, &out)?;
    Ok(out)
}

impl Classifier for RemoteClassifier {
    fn classify(&self, context: &ModifiedEssay) -> Result<Vec<LabelDistribution>, ClassifyError> {
        let request = self.request(context);
        let body = serde_json::to_string(&request).expect("requests serialize");
        let mut delay = self.config.backoff;
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                thread::sleep(delay);
                delay = delay.saturating_mul(2);
            }
            match self.attempt(&body) {
                Ok(text) => return decode_response(&request, &text, context),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => last = msg,
            }
        }
        Err(ClassifyError::Backend(format!("{last} (after {} attempts)", self.config.retries + 1)))
    }
}
