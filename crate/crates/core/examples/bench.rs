//! A small end-to-end benchmark: two manual methods and the automated
//! optimizer across all feature subsets, written to a report directory.
//!
//! `cargo run --release --example bench -- /tmp/bench-out`

use pricebench::dataset::{CleaningConfig, SynthConfig};
use pricebench::harness::{emit_report, run_benchmark, BenchmarkConfig, DatasetSource, MethodConfig, ReportFormat};
use pricebench::regressors::Algorithm;
use pricebench::search::{Budget, SearchConfig};

fn main() -> pricebench::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "bench-out".into());
    let cfg = BenchmarkConfig {
        seed: 1,
        repetitions: 3,
        dataset: DatasetSource::Synth {
            synth: SynthConfig {
                samples_per_model: 60,
                ..Default::default()
            },
            clean: true,
            cleaning: CleaningConfig {
                min_model_count: 20,
                ..Default::default()
            },
        },
        search: SearchConfig {
            n_iter: 4,
            k_folds: 3,
            ..Default::default()
        },
        methods: vec![
            MethodConfig::Manual {
                algorithm: Algorithm::Tree,
            },
            MethodConfig::Manual {
                algorithm: Algorithm::Knn,
            },
            MethodConfig::automl(Budget::Iterations(10)),
        ],
        ..Default::default()
    };
    let bundle = run_benchmark(&cfg)?;
    for report in &bundle.reports {
        println!("{}", report.subset);
        for m in &report.methods {
            println!(
                "  {} {:<12} MAPE {:.4}  train {:>6.2} s  MES {:.3}",
                m.rank, m.record.method, m.record.s_corr, m.record.s_comp, m.mes_mean
            );
        }
    }
    for path in emit_report(&bundle, &ReportFormat::ALL, out.as_ref())? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
