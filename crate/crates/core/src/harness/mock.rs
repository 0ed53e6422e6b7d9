//! A protocol-conformant stand-in adapter that predicts the training mean,
//! plus misbehaving variants for exercising the harness's error paths.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use super::adapter::{Reply, Request, Transport, PROTOCOL_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockBehavior {
    /// Well-behaved mean predictor.
    Mean,
    /// Answers the handshake with protocol version 2.
    WrongVersion,
    /// Answers `train` with a line that is not JSON.
    Malformed,
    /// Never answers `train`.
    Hang,
    /// Answers `train` with an error frame.
    Fail,
}

impl MockBehavior {
    pub const ALL: [MockBehavior; 5] = [
        MockBehavior::Mean,
        MockBehavior::WrongVersion,
        MockBehavior::Malformed,
        MockBehavior::Hang,
        MockBehavior::Fail,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MockBehavior::Mean => "mean",
            MockBehavior::WrongVersion => "wrong-version",
            MockBehavior::Malformed => "malformed",
            MockBehavior::Hang => "hang",
            MockBehavior::Fail => "fail",
        }
    }
}

impl fmt::Display for MockBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MockBehavior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MockBehavior::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mock behavior {s:?}")))
    }
}

pub const MALFORMED_LINE: &str = "this is not a frame";

/// Request handling shared by the in-process transport and the stdio server.
#[derive(Debug)]
pub struct MockAdapter {
    behavior: MockBehavior,
    mean: Option<f64>,
}

fn csv_rows(csv: &str) -> std::result::Result<Vec<csv::StringRecord>, csv::Error> {
    csv::Reader::from_reader(csv.as_bytes()).records().collect()
}

fn error_reply(code: &str, message: impl Into<String>) -> Reply {
    Reply::Error {
        code: code.into(),
        message: message.into(),
    }
}

impl MockAdapter {
    pub fn new(behavior: MockBehavior) -> Self {
        MockAdapter { behavior, mean: None }
    }

    /// The reply line for one request line; `None` means no reply.
    pub fn handle(&mut self, line: &str) -> Option<String> {
        let request: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Some(to_line(&error_reply("bad_request", e.to_string()))),
        };
        let reply = match request {
            Request::Handshake { .. } => Reply::Handshake {
                protocol_version: if self.behavior == MockBehavior::WrongVersion {
                    PROTOCOL_VERSION + 1
                } else {
                    PROTOCOL_VERSION
                },
                framework_name: format!("mock-{}", self.behavior),
                expertise_level: 2,
            },
            Request::Train { target, csv, .. } => match self.behavior {
                MockBehavior::Malformed => return Some(MALFORMED_LINE.to_string()),
                MockBehavior::Hang => return None,
                MockBehavior::Fail => error_reply("train_failed", "mock failure"),
                _ => {
                    let start = Instant::now();
                    match mean_of(&csv, &target) {
                        Ok(m) => {
                            self.mean = Some(m);
                            Reply::TrainAck {
                                train_seconds: start.elapsed().as_secs_f64(),
                            }
                        }
                        Err(msg) => error_reply("bad_data", msg),
                    }
                }
            },
            Request::Predict { csv } => match (self.mean, csv_rows(&csv)) {
                (None, _) => error_reply("not_trained", "predict before train"),
                (_, Err(e)) => error_reply("bad_data", e.to_string()),
                (Some(m), Ok(rows)) => Reply::Predictions {
                    values: vec![m; rows.len()],
                },
            },
            Request::Shutdown => return None,
        };
        Some(to_line(&reply))
    }
}

fn to_line(reply: &Reply) -> String {
    serde_json::to_string(reply).expect("replies serialize")
}

fn mean_of(csv: &str, target: &str) -> std::result::Result<f64, String> {
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let col = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| format!("no column {target:?}"))?;
    let mut values = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let v: f64 = rec[col].parse().map_err(|_| format!("bad target {:?}", &rec[col]))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err("no training rows".into());
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Serves the protocol on a line stream until end of input or shutdown.
pub fn serve<R: BufRead, W: Write>(behavior: MockBehavior, input: R, mut output: W) -> std::io::Result<()> {
    let mut adapter = MockAdapter::new(behavior);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if matches!(serde_json::from_str(&line), Ok(Request::Shutdown)) {
            break;
        }
        if let Some(reply) = adapter.handle(&line) {
            writeln!(output, "{reply}")?;
            output.flush()?;
        }
    }
    Ok(())
}

/// In-process transport backed by a [`MockAdapter`].
#[derive(Debug)]
pub struct MockTransport {
    adapter: MockAdapter,
    pending: VecDeque<String>,
    pub terminated: bool,
    /// Every line the harness sent.
    pub sent: Vec<String>,
}

impl MockTransport {
    pub fn new(behavior: MockBehavior) -> Self {
        MockTransport {
            adapter: MockAdapter::new(behavior),
            pending: VecDeque::new(),
            terminated: false,
            sent: Vec::new(),
        }
    }
}

impl Transport for MockTransport {
    fn send(&mut self, line: &str) -> Result<()> {
        self.sent.push(line.to_string());
        if let Some(reply) = self.adapter.handle(line) {
            self.pending.push_back(reply);
        }
        Ok(())
    }

    fn recv(&mut self, timeout: Duration) -> Result<Option<String>> {
        match self.pending.pop_front() {
            Some(line) => Ok(Some(line)),
            None => {
                thread::sleep(timeout);
                Err(Error::AdapterTimeout(timeout.as_secs_f64()))
            }
        }
    }

    fn terminate(&mut self) {
        self.terminated = true;
    }
}
