//! Drives the external-framework protocol against the built-in mock adapter,
//! first in process and then through the failure modes a real adapter can show.

use std::time::Duration;

use pricebench::criteria::ErrorKind;
use pricebench::dataset::{subset_table, synth_generate, SubsetId, SynthConfig};
use pricebench::harness::adapter::run_session;
use pricebench::harness::mock::{MockBehavior, MockTransport};

fn main() -> pricebench::Result<()> {
    let d = synth_generate(&SynthConfig::noiseless(2, 20, 1))?;
    let (table, y) = subset_table(&d, SubsetId::Full);
    let train: Vec<usize> = (0..30).collect();
    let test: Vec<usize> = (30..table.nrows()).collect();
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let (train, test) = (table.select_rows(&train), table.select_rows(&test));

    let mut transport = MockTransport::new(MockBehavior::Mean);
    let out = run_session(
        &mut transport,
        (&train, &y_train),
        &test,
        10.0,
        ErrorKind::Mape,
        Duration::from_secs(5),
    )?;
    println!(
        "{} (expertise {}): trained in {:.4} s, {} predictions, {}",
        out.info.framework_name,
        out.info.expertise.level(),
        out.train_seconds,
        out.predictions.len(),
        out.responsiveness.category.as_str()
    );
    for frame in transport.sent.iter().take(2) {
        println!("  sent {}...", &frame[..frame.len().min(70)]);
    }

    for behavior in [
        MockBehavior::WrongVersion,
        MockBehavior::Malformed,
        MockBehavior::Fail,
        MockBehavior::Hang,
    ] {
        let result = run_session(
            MockTransport::new(behavior),
            (&train, &y_train),
            &test,
            1.0,
            ErrorKind::Mape,
            Duration::from_millis(200),
        );
        println!(
            "{behavior:?}: {}",
            result.err().map(|e| e.to_string()).unwrap_or_default()
        );
    }
    Ok(())
}
