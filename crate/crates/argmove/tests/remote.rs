//! The remote classifier against an in-process HTTP server.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use argmove::backend::{self, BackendDescriptor};
use argmove::remote::{RemoteClassifier, RemoteConfig, WireRequest, WireResponse, ENDPOINT_ENV};
use argmove::run::par_map;
use argmove_core::labeler::{build_context, Classifier, ClassifyError, DistributionError, ModifiedEssay};
use argmove_core::pipeline::annotate;
use argmove_core::segmenter::{segment_candidates, AlignOptions};
use argmove_core::{CandidateLabel, Essay, MoveLabel, SegmentationRules};

type Handler = dyn Fn(&WireRequest) -> (u16, String) + Send + Sync;

struct MockServer {
    url: String,
    requests: Arc<Mutex<Vec<WireRequest>>>,
    live: Arc<AtomicUsize>,
    peak: Arc<AtomicUsize>,
}

impl MockServer {
    fn start(handler: impl Fn(&WireRequest) -> (u16, String) + Send + Sync + 'static) -> MockServer {
        Self::with_delay(Duration::ZERO, handler)
    }

    fn with_delay(delay: Duration, handler: impl Fn(&WireRequest) -> (u16, String) + Send + Sync + 'static) -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/classify", listener.local_addr().unwrap());
        let handler: Arc<Handler> = Arc::new(handler);
        let requests = Arc::new(Mutex::new(Vec::new()));
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (r, l, p) = (requests.clone(), live.clone(), peak.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let (handler, r, l, p) = (handler.clone(), r.clone(), l.clone(), p.clone());
                thread::spawn(move || serve(stream, &*handler, &r, &l, &p, delay));
            }
        });
        MockServer { url, requests, live, peak }
    }

    fn requests(&self) -> Vec<WireRequest> {
        self.requests.lock().unwrap().clone()
    }
}

fn serve(
    stream: TcpStream,
    handler: &Handler,
    requests: &Mutex<Vec<WireRequest>>,
    live: &AtomicUsize,
    peak: &AtomicUsize,
    delay: Duration,
) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut length = 0;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
    peak.fetch_max(now, Ordering::SeqCst);
    thread::sleep(delay);
    let request: WireRequest = serde_json::from_slice(&body).unwrap();
    requests.lock().unwrap().push(request.clone());
    let (status, text) = handler(&request);
    live.fetch_sub(1, Ordering::SeqCst);
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
}

fn one_hot(label: &str) -> BTreeMap<String, f64> {
    CandidateLabel::ALL.iter().map(|l| (l.as_str().to_string(), if l.as_str() == label { 1.0 } else { 0.0 })).collect()
}

/// Labels each segment by its first word when that is a label name, else none.
fn by_first_word(req: &WireRequest) -> (u16, String) {
    let distributions = req
        .segments
        .iter()
        .map(|s| {
            let w = s.split_whitespace().next().unwrap_or("").trim_matches(|c: char| !c.is_alphanumeric() && c != '_');
            one_hot(if CandidateLabel::ALL.iter().any(|l| l.as_str() == w) { w } else { "none" })
        })
        .collect();
    (200, serde_json::to_string(&WireResponse { request_id: req.request_id.clone(), distributions }).unwrap())
}

fn config(url: &str) -> RemoteConfig {
    RemoteConfig { backoff: Duration::from_millis(5), ..RemoteConfig::new(url) }
}

fn context(text: &str) -> ModifiedEssay {
    let e = Essay::new("e1", "l1", 1, text, None).unwrap();
    build_context(&e, &segment_candidates(e.text(), &SegmentationRules::default())).unwrap()
}

const TEXT: &str = "claim school uniforms help. data fewer fights happen, none and so. rebuttal_claim critics disagree.";

#[test]
fn sends_segments_and_reads_one_distribution_each() {
    let server = MockServer::start(by_first_word);
    let client = RemoteClassifier::new(config(&server.url));
    let ctx = context(TEXT);
    let out = client.classify(&ctx).unwrap();
    assert_eq!(out.len(), ctx.len());
    let labels: Vec<_> = out.iter().map(|d| d.argmax()).collect();
    assert_eq!(
        labels,
        [
            CandidateLabel::Move(MoveLabel::Claim),
            CandidateLabel::Move(MoveLabel::Data),
            CandidateLabel::None,
            CandidateLabel::Move(MoveLabel::RebuttalClaim)
        ]
    );
    for d in &out {
        assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let reqs = server.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].essay_id, "e1");
    assert_eq!(reqs[0].boundary_token, "[SEP]");
    assert_eq!(reqs[0].segments.concat(), TEXT);
    assert_eq!(reqs[0].segments.len(), 4);
}

#[test]
fn request_ids_are_unique_and_checked() {
    let server = MockServer::start(by_first_word);
    let client = RemoteClassifier::new(config(&server.url));
    client.classify(&context(TEXT)).unwrap();
    client.classify(&context(TEXT)).unwrap();
    let reqs = server.requests();
    assert_ne!(reqs[0].request_id, reqs[1].request_id);

    let server = MockServer::start(|req| {
        let (code, body) = by_first_word(req);
        (code, body.replace(&req.request_id, "someone-else"))
    });
    let err = RemoteClassifier::new(config(&server.url)).classify(&context(TEXT)).unwrap_err();
    assert!(matches!(&err, ClassifyError::Backend(m) if m.contains("request_id")), "{err}");
}

#[test]
fn rejects_wrong_distribution_count() {
    let server = MockServer::start(|req| {
        let (_, body) = by_first_word(req);
        let mut resp: WireResponse = serde_json::from_str(&body).unwrap();
        resp.distributions.push(one_hot("none"));
        (200, serde_json::to_string(&resp).unwrap())
    });
    let err = RemoteClassifier::new(config(&server.url)).classify(&context(TEXT)).unwrap_err();
    assert_eq!(err, ClassifyError::CountMismatch { expected: 4, got: 5 });
}

#[test]
fn rejects_unnormalized_missing_and_unknown_labels() {
    let respond = |f: fn(&mut BTreeMap<String, f64>)| {
        move |req: &WireRequest| {
            let (_, body) = by_first_word(req);
            let mut resp: WireResponse = serde_json::from_str(&body).unwrap();
            f(&mut resp.distributions[0]);
            (200, serde_json::to_string(&resp).unwrap())
        }
    };
    let server = MockServer::start(respond(|d| *d.get_mut("data").unwrap() = 0.5));
    let err = RemoteClassifier::new(config(&server.url)).classify(&context(TEXT)).unwrap_err();
    assert!(
        matches!(err, ClassifyError::InvalidDistribution { index: 0, source: DistributionError::NotNormalized(s) } if (s - 1.5).abs() < 1e-12)
    );

    let server = MockServer::start(respond(|d| {
        d.remove("counter_data");
    }));
    let err = RemoteClassifier::new(config(&server.url)).classify(&context(TEXT)).unwrap_err();
    assert!(matches!(err, ClassifyError::InvalidDistribution { index: 0, .. }), "{err}");

    let server = MockServer::start(respond(|d| {
        d.insert("warrant".into(), 0.0);
    }));
    let err = RemoteClassifier::new(config(&server.url)).classify(&context(TEXT)).unwrap_err();
    assert!(err.to_string().contains("warrant"), "{err}");
}

#[test]
fn retries_server_errors_then_succeeds() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let server = MockServer::start(move |req| {
        if c.fetch_add(1, Ordering::SeqCst) < 2 {
            (503, r#"{"error":"warming up"}"#.into())
        } else {
            by_first_word(req)
        }
    });
    let client = RemoteClassifier::new(config(&server.url));
    assert_eq!(client.classify(&context(TEXT)).unwrap().len(), 4);
    assert_eq!(calls.load(Ordering::SeqCst), 3);
    let reqs = server.requests();
    assert!(reqs.iter().all(|r| r.request_id == reqs[0].request_id));
}

#[test]
fn gives_up_after_the_retry_budget() {
    let server = MockServer::start(|_| (500, r#"{"error":"model crashed"}"#.into()));
    let client = RemoteClassifier::new(RemoteConfig { retries: 2, ..config(&server.url) });
    let err = client.classify(&context(TEXT)).unwrap_err();
    assert_eq!(server.requests().len(), 3);
    let msg = err.to_string();
    assert!(msg.contains("500") && msg.contains("model crashed") && msg.contains("3 attempts"), "{msg}");
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(|_| (400, r#"{"error":"segments must not be empty"}"#.into()));
    let err = RemoteClassifier::new(config(&server.url)).classify(&context(TEXT)).unwrap_err();
    assert_eq!(server.requests().len(), 1);
    assert_eq!(err, ClassifyError::Backend("backend returned 400: segments must not be empty".into()));
}

#[test]
fn unreachable_endpoint_is_an_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let client =
        RemoteClassifier::new(RemoteConfig { retries: 1, ..config(&format!("http://127.0.0.1:{port}/classify")) });
    let err = client.classify(&context(TEXT)).unwrap_err();
    assert!(err.to_string().contains("unreachable"), "{err}");
}

#[test]
fn caps_requests_in_flight() {
    let server = MockServer::with_delay(Duration::from_millis(30), by_first_word);
    let client = RemoteClassifier::new(RemoteConfig { concurrency: 2, ..config(&server.url) });
    let contexts: Vec<_> = (0..12).map(|_| context(TEXT)).collect();
    let out = par_map(8, &contexts, |c| client.classify(c)).unwrap();
    assert!(out.iter().all(|r| r.is_ok()));
    assert_eq!(server.requests().len(), 12);
    let peak = server.peak.load(Ordering::SeqCst);
    assert!((1..=2).contains(&peak), "peak {peak}");
    assert_eq!(server.live.load(Ordering::SeqCst), 0);
}

#[test]
fn windows_long_essays_within_the_budget() {
    let server = MockServer::start(by_first_word);
    let client = RemoteClassifier::new(config(&server.url));
    let e = Essay::new("long", "l1", 1, TEXT.repeat(5), None).unwrap();
    let a = annotate(&e, &SegmentationRules::default(), &client, Some(60)).unwrap();
    let reqs = server.requests();
    assert!(reqs.len() > 1);
    for r in &reqs {
        assert!(r.segments.iter().map(|s| s.chars().count()).sum::<usize>() <= 60);
    }
    let whole = annotate(&e, &SegmentationRules::default(), &client, None).unwrap();
    assert_eq!(a.labels, whole.labels);
    assert_eq!(a.moves.iter().filter(|m| m.label == MoveLabel::Claim).count(), 5);
}

#[test]
fn environment_overrides_configured_endpoint() {
    let server = MockServer::start(by_first_word);
    let dead = "http://127.0.0.1:9/unused".to_string();
    std::env::set_var(ENDPOINT_ENV, &server.url);
    let d = BackendDescriptor::Remote {
        endpoint: Some(dead),
        timeout_secs: 5.0,
        retries: 0,
        concurrency: 1,
        char_budget: None,
    };
    let b = backend::load(&d, &SegmentationRules::default(), AlignOptions::default());
    std::env::remove_var(ENDPOINT_ENV);
    let out = b.unwrap().classify(&context(TEXT)).unwrap();
    assert_eq!(out.len(), 4);
    assert_eq!(server.requests().len(), 1);
}
