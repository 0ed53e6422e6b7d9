//! JSON-lines protocol spoken with external training adapters over their
//! standard streams. The harness sends one request per line and reads
//! exactly one reply line per request.
//!
//! ```text
//! -> {"type":"handshake","protocol_version":1}
//! <- {"type":"handshake","protocol_version":1,"framework_name":"flaml","expertise_level":2}
//! -> {"type":"train","budget_seconds":300.0,"scoring":"mape","target":"price","csv":"model,...\n"}
//! <- {"type":"train_ack","train_seconds":297.4}
//! -> {"type":"predict","csv":"model,...\n"}
//! <- {"type":"predictions","values":[51000.0, ...]}
//! <- {"type":"error","code":"...","message":"..."}   (in place of any reply)
//! -> {"type":"shutdown"}                             (no reply)
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::criteria::{ErrorKind, ExpertiseLevel, ResponseCategory, Responsiveness};
use crate::dataset::FeatureTable;
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;
pub const TARGET_COLUMN: &str = "price";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Handshake {
        protocol_version: u32,
    },
    Train {
        budget_seconds: f64,
        scoring: ErrorKind,
        target: String,
        csv: String,
    },
    Predict {
        csv: String,
    },
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Handshake {
        protocol_version: u32,
        framework_name: String,
        #[serde(default = "default_expertise")]
        expertise_level: u8,
    },
    TrainAck {
        train_seconds: f64,
    },
    Predictions {
        values: Vec<f64>,
    },
    Error {
        code: String,
        message: String,
    },
}

fn default_expertise() -> u8 {
    ExpertiseLevel::AUTOMATED.level()
}

/// A bidirectional line channel to an adapter.
pub trait Transport {
    fn send(&mut self, line: &str) -> Result<()>;
    /// Next line, `Ok(None)` at end of stream, `Err(AdapterTimeout)` when
    /// nothing arrives within `timeout`.
    fn recv(&mut self, timeout: Duration) -> Result<Option<String>>;
    /// Releases the adapter; called on timeouts and protocol violations.
    fn terminate(&mut self) {}
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, line: &str) -> Result<()> {
        (**self).send(line)
    }

    fn recv(&mut self, timeout: Duration) -> Result<Option<String>> {
        (**self).recv(timeout)
    }

    fn terminate(&mut self) {
        (**self).terminate()
    }
}

/// Adapter running as a child process. A reader thread forwards stdout
/// lines so reads can time out; the child is killed on drop.
pub struct ProcessTransport {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl ProcessTransport {
    pub fn spawn(argv: &[String]) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::InvalidConfig("empty adapter command".into()))?;
        let command = argv.join(" ");
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| Error::AdapterSpawn {
                command: command.clone(),
                source,
            })?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ProcessTransport {
            command,
            stdin: child.stdin.take(),
            child,
            lines: rx,
        })
    }
}

impl Transport for ProcessTransport {
    fn send(&mut self, line: &str) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::io(&self.command, std::io::ErrorKind::BrokenPipe.into()))?;
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::io(&self.command, e))
    }

    fn recv(&mut self, timeout: Duration) -> Result<Option<String>> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(Some(line)),
            Ok(Err(e)) => Err(Error::io(&self.command, e)),
            Err(RecvTimeoutError::Disconnected) => Ok(None),
            Err(RecvTimeoutError::Timeout) => Err(Error::AdapterTimeout(timeout.as_secs_f64())),
        }
    }

    fn terminate(&mut self) {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ProcessTransport {
    fn drop(&mut self) {
        self.terminate();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterInfo {
    pub framework_name: String,
    pub expertise: ExpertiseLevel,
}

/// Client side of the protocol. Every reply must arrive before a session
/// deadline fixed at connect time.
pub struct AdapterClient<T: Transport> {
    transport: T,
    deadline: Instant,
    info: AdapterInfo,
}

impl<T: Transport> AdapterClient<T> {
    pub fn connect(mut transport: T, hard_timeout: Duration) -> Result<Self> {
        let deadline = Instant::now() + hard_timeout;
        let reply = exchange(
            &mut transport,
            deadline,
            &Request::Handshake {
                protocol_version: PROTOCOL_VERSION,
            },
        )?;
        let info = match reply {
            Reply::Handshake {
                protocol_version,
                framework_name,
                expertise_level,
            } => {
                if protocol_version != PROTOCOL_VERSION {
                    transport.terminate();
                    return Err(Error::HandshakeMismatch(format!(
                        "adapter speaks protocol {protocol_version}, harness speaks {PROTOCOL_VERSION}"
                    )));
                }
                let expertise = ExpertiseLevel::new(expertise_level).map_err(|_| {
                    Error::HandshakeMismatch(format!("expertise level {expertise_level} outside 1..=6"))
                })?;
                AdapterInfo {
                    framework_name,
                    expertise,
                }
            }
            other => return Err(unexpected(&mut transport, "handshake", &other)),
        };
        Ok(AdapterClient {
            transport,
            deadline,
            info,
        })
    }

    pub fn info(&self) -> &AdapterInfo {
        &self.info
    }

    /// Returns the adapter-reported training seconds.
    pub fn train(&mut self, table: &FeatureTable, y: &[f64], budget_seconds: f64, scoring: ErrorKind) -> Result<f64> {
        let req = Request::Train {
            budget_seconds,
            scoring,
            target: TARGET_COLUMN.to_string(),
            csv: table.to_csv_string(Some((TARGET_COLUMN, y)))?,
        };
        match exchange(&mut self.transport, self.deadline, &req)? {
            Reply::TrainAck { train_seconds } => Ok(train_seconds),
            other => Err(unexpected(&mut self.transport, "train_ack", &other)),
        }
    }

    pub fn predict(&mut self, table: &FeatureTable) -> Result<Vec<f64>> {
        let req = Request::Predict {
            csv: table.to_csv_string(None)?,
        };
        match exchange(&mut self.transport, self.deadline, &req)? {
            Reply::Predictions { values } if values.len() == table.nrows() => Ok(values),
            Reply::Predictions { values } => {
                self.transport.terminate();
                Err(Error::ProtocolViolation {
                    line: String::new(),
                    reason: format!("expected {} predictions, got {}", table.nrows(), values.len()),
                })
            }
            other => Err(unexpected(&mut self.transport, "predictions", &other)),
        }
    }

    /// Round-trip time of single-row predict requests, averaged.
    pub fn measure_responsiveness(&mut self, table: &FeatureTable) -> Result<Responsiveness> {
        if table.nrows() == 0 {
            return Err(Error::TooFewRows { needed: 1, got: 0 });
        }
        let mut total = 0.0;
        for i in 0..table.nrows() {
            let row = table.select_rows(&[i]);
            let start = Instant::now();
            self.predict(&row)?;
            total += start.elapsed().as_secs_f64();
        }
        let mean_seconds = total / table.nrows() as f64;
        Ok(Responsiveness {
            mean_seconds,
            category: ResponseCategory::from_seconds(mean_seconds),
        })
    }

    pub fn shutdown(mut self) {
        if let Ok(line) = serde_json::to_string(&Request::Shutdown) {
            let _ = self.transport.send(&line);
        }
        self.transport.terminate();
    }
}

fn exchange<T: Transport>(transport: &mut T, deadline: Instant, req: &Request) -> Result<Reply> {
    transport.send(&serde_json::to_string(req)?)?;
    let remaining = deadline.saturating_duration_since(Instant::now());
    let line = match transport.recv(remaining) {
        Ok(Some(line)) => line,
        Ok(None) => {
            transport.terminate();
            return Err(Error::ProtocolViolation {
                line: String::new(),
                reason: "adapter closed its output".into(),
            });
        }
        Err(e) => {
            transport.terminate();
            return Err(e);
        }
    };
    match serde_json::from_str::<Reply>(&line) {
        Ok(Reply::Error { code, message }) => Err(Error::AdapterError { code, message }),
        Ok(reply) => Ok(reply),
        Err(e) => {
            transport.terminate();
            Err(Error::ProtocolViolation {
                line,
                reason: e.to_string(),
            })
        }
    }
}

fn unexpected<T: Transport>(transport: &mut T, expected: &str, got: &Reply) -> Error {
    transport.terminate();
    Error::ProtocolViolation {
        line: serde_json::to_string(got).unwrap_or_default(),
        reason: format!("expected a {expected} reply"),
    }
}

/// Result of benchmarking one external adapter on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeOutcome {
    pub predictions: Vec<f64>,
    pub train_seconds: f64,
    pub responsiveness: Responsiveness,
    pub info: AdapterInfo,
}

/// Hard timeout for a whole adapter session.
pub fn hard_timeout(budget_seconds: f64) -> Duration {
    Duration::from_secs_f64(2.0 * budget_seconds.max(0.0) + 60.0)
}

/// Spawns `command`, trains on `train`, predicts `test` in one batch and
/// then row by row for timing.
pub fn bridge_external(
    command: &[String],
    train: (&FeatureTable, &[f64]),
    test: &FeatureTable,
    budget_seconds: f64,
    scoring: ErrorKind,
) -> Result<BridgeOutcome> {
    let transport = ProcessTransport::spawn(command)?;
    run_session(
        transport,
        train,
        test,
        budget_seconds,
        scoring,
        hard_timeout(budget_seconds),
    )
}

/// [`bridge_external`] over an arbitrary transport.
pub fn run_session<T: Transport>(
    transport: T,
    train: (&FeatureTable, &[f64]),
    test: &FeatureTable,
    budget_seconds: f64,
    scoring: ErrorKind,
    timeout: Duration,
) -> Result<BridgeOutcome> {
    let mut client = AdapterClient::connect(transport, timeout)?;
    let train_seconds = client.train(train.0, train.1, budget_seconds, scoring)?;
    let predictions = client.predict(test)?;
    let responsiveness = client.measure_responsiveness(test)?;
    let info = client.info().clone();
    client.shutdown();
    Ok(BridgeOutcome {
        predictions,
        train_seconds,
        responsiveness,
        info,
    })
}
