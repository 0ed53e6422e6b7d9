use std::time::{Duration, Instant};

use pricebench::criteria::{ErrorKind, ResponseCategory};
use pricebench::dataset::{subset_table, synth_generate, FeatureTable, SubsetId, SynthConfig};
use pricebench::harness::adapter::{
    hard_timeout, run_session, AdapterClient, ProcessTransport, Reply, Request, PROTOCOL_VERSION,
};
use pricebench::harness::mock::{serve, MockBehavior, MockTransport, MALFORMED_LINE};
use pricebench::Error;

fn tables() -> ((FeatureTable, Vec<f64>), FeatureTable) {
    let d = synth_generate(&SynthConfig::noiseless(2, 15, 3)).unwrap();
    let (t, y) = subset_table(&d, SubsetId::Full);
    let train: Vec<usize> = (0..20).collect();
    let test: Vec<usize> = (20..t.nrows()).collect();
    let y_train = train.iter().map(|&i| y[i]).collect();
    ((t.select_rows(&train), y_train), t.select_rows(&test))
}

fn mock_command(behavior: &str) -> Vec<String> {
    vec![
        env!("CARGO_BIN_EXE_pricebench").to_string(),
        "mock-adapter".to_string(),
        "--behavior".to_string(),
        behavior.to_string(),
    ]
}

#[test]
fn frames_have_the_documented_shape() {
    let hs = serde_json::to_string(&Request::Handshake { protocol_version: 1 }).unwrap();
    assert_eq!(hs, r#"{"type":"handshake","protocol_version":1}"#);
    assert_eq!(
        serde_json::to_string(&Request::Shutdown).unwrap(),
        r#"{"type":"shutdown"}"#
    );
    let reply: Reply =
        serde_json::from_str(r#"{"type":"handshake","protocol_version":1,"framework_name":"x"}"#).unwrap();
    assert_eq!(
        reply,
        Reply::Handshake {
            protocol_version: 1,
            framework_name: "x".into(),
            expertise_level: 2
        }
    );
    let ack: Reply = serde_json::from_str(r#"{"type":"train_ack","train_seconds":1.5}"#).unwrap();
    assert_eq!(ack, Reply::TrainAck { train_seconds: 1.5 });
}

#[test]
fn full_session_against_in_process_mock() {
    let ((train, y), test) = tables();
    let mut transport = MockTransport::new(MockBehavior::Mean);
    let out = run_session(
        &mut transport,
        (&train, &y),
        &test,
        5.0,
        ErrorKind::Mape,
        Duration::from_secs(5),
    )
    .unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    assert_eq!(out.predictions.len(), test.nrows());
    assert!(out.predictions.iter().all(|p| (p - mean).abs() < 1e-9 * mean));
    assert_eq!(out.info.framework_name, "mock-mean");
    assert_eq!(out.info.expertise.level(), 2);
    assert_eq!(out.responsiveness.category, ResponseCategory::RealTime);

    let kinds: Vec<String> = transport
        .sent
        .iter()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["type"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(kinds[0], "handshake");
    assert_eq!(kinds[1], "train");
    assert_eq!(kinds.last().unwrap(), "shutdown");
    // One batch predict, then one per test row.
    assert_eq!(kinds.iter().filter(|k| *k == "predict").count(), 1 + test.nrows());
    let train_frame: serde_json::Value = serde_json::from_str(&transport.sent[1]).unwrap();
    assert_eq!(train_frame["target"], "price");
    assert_eq!(train_frame["budget_seconds"], 5.0);
    assert!(train_frame["csv"]
        .as_str()
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .ends_with("price"));
}

#[test]
fn version_mismatch_is_rejected() {
    let mut t = MockTransport::new(MockBehavior::WrongVersion);
    let err = AdapterClient::connect(&mut t, Duration::from_secs(1)).err().unwrap();
    assert!(matches!(err, Error::HandshakeMismatch(_)), "{err}");
    assert!(t.terminated);
}

#[test]
fn malformed_frame_is_a_protocol_violation() {
    let ((train, y), _) = tables();
    let mut t = MockTransport::new(MockBehavior::Malformed);
    let mut client = AdapterClient::connect(&mut t, Duration::from_secs(1)).unwrap();
    match client.train(&train, &y, 1.0, ErrorKind::Mape) {
        Err(Error::ProtocolViolation { line, .. }) => assert_eq!(line, MALFORMED_LINE),
        other => panic!("expected a protocol violation, got {other:?}"),
    }
    drop(client);
    assert!(t.terminated);
}

#[test]
fn silent_adapter_times_out() {
    let ((train, y), _) = tables();
    let mut t = MockTransport::new(MockBehavior::Hang);
    let mut client = AdapterClient::connect(&mut t, Duration::from_millis(300)).unwrap();
    let start = Instant::now();
    let err = client.train(&train, &y, 1.0, ErrorKind::Mape).unwrap_err();
    assert!(matches!(err, Error::AdapterTimeout(_)), "{err}");
    assert!(start.elapsed() < Duration::from_secs(2));
    drop(client);
    assert!(t.terminated);
}

#[test]
fn error_frames_surface_code_and_message() {
    let ((train, y), _) = tables();
    let mut client = AdapterClient::connect(MockTransport::new(MockBehavior::Fail), Duration::from_secs(1)).unwrap();
    match client.train(&train, &y, 1.0, ErrorKind::Mape) {
        Err(Error::AdapterError { code, message }) => {
            assert_eq!(code, "train_failed");
            assert_eq!(message, "mock failure");
        }
        other => panic!("expected an adapter error, got {other:?}"),
    }
}

#[test]
fn stdio_server_answers_line_by_line() {
    let input = format!(
        "{}\n\n{}\n{}\n",
        serde_json::to_string(&Request::Handshake {
            protocol_version: PROTOCOL_VERSION
        })
        .unwrap(),
        serde_json::to_string(&Request::Predict { csv: "a\n1\n".into() }).unwrap(),
        serde_json::to_string(&Request::Shutdown).unwrap(),
    );
    let mut out = Vec::new();
    serve(MockBehavior::Mean, input.as_bytes(), &mut out).unwrap();
    let lines: Vec<Reply> = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert!(matches!(lines[0], Reply::Handshake { .. }));
    assert!(matches!(&lines[1], Reply::Error { code, .. } if code == "not_trained"));
}

#[test]
fn hard_timeout_doubles_budget_plus_a_minute() {
    assert_eq!(hard_timeout(10.0), Duration::from_secs(80));
    assert_eq!(hard_timeout(0.0), Duration::from_secs(60));
}

#[test]
fn subprocess_session_round_trips() {
    let ((train, y), test) = tables();
    let t = ProcessTransport::spawn(&mock_command("mean")).unwrap();
    let out = run_session(t, (&train, &y), &test, 2.0, ErrorKind::Mape, Duration::from_secs(20)).unwrap();
    assert_eq!(out.predictions.len(), test.nrows());
    assert_eq!(out.responsiveness.category, ResponseCategory::RealTime);
}

#[test]
fn subprocess_failure_modes() {
    let ((train, y), test) = tables();
    let run = |behavior: &str, timeout: Duration| {
        let t = ProcessTransport::spawn(&mock_command(behavior)).unwrap();
        run_session(t, (&train, &y), &test, 1.0, ErrorKind::Mape, timeout)
    };
    assert!(matches!(
        run("wrong-version", Duration::from_secs(20)),
        Err(Error::HandshakeMismatch(_))
    ));
    assert!(matches!(
        run("malformed", Duration::from_secs(20)),
        Err(Error::ProtocolViolation { .. })
    ));
    assert!(matches!(
        run("fail", Duration::from_secs(20)),
        Err(Error::AdapterError { .. })
    ));
    let start = Instant::now();
    assert!(matches!(
        run("hang", Duration::from_secs(2)),
        Err(Error::AdapterTimeout(_))
    ));
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn adapter_that_exits_early_is_reported() {
    let t = ProcessTransport::spawn(&["true".to_string()]).unwrap();
    let err = AdapterClient::connect(t, Duration::from_secs(5)).err().unwrap();
    assert!(
        matches!(err, Error::ProtocolViolation { .. } | Error::Io { .. }),
        "{err}"
    );
    let missing = ProcessTransport::spawn(&["/nonexistent/adapter".to_string()])
        .err()
        .unwrap();
    assert!(matches!(missing, Error::AdapterSpawn { .. }));
}
