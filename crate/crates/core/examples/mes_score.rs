//! Scores a small set of methods with the multi-criteria evaluation score.

use pricebench::criteria::{CriteriaRecord, ExpertiseLevel, Repetition};
use pricebench::mes::{build_report, Weights};

fn rep(corr: f64, comp: f64) -> Repetition {
    Repetition {
        corr,
        comp,
        resp_seconds: 1e-4,
    }
}

fn main() -> pricebench::Result<()> {
    let records = vec![
        CriteriaRecord::from_repetitions(
            "forest",
            "full",
            ExpertiseLevel::MANUAL,
            vec![rep(0.098, 20.0), rep(0.094, 22.0), rep(0.095, 21.0)],
        )?,
        CriteriaRecord::from_repetitions(
            "knn",
            "full",
            ExpertiseLevel::MANUAL,
            vec![rep(0.128, 0.6), rep(0.125, 0.5), rep(0.130, 0.6)],
        )?,
        CriteriaRecord::from_repetitions(
            "automl",
            "full",
            ExpertiseLevel::AUTOMATED,
            vec![rep(0.066, 48.0), rep(0.070, 30.0), rep(0.063, 60.0)],
        )?,
    ];
    for weights in ["corr=50,exp=40,comp=10", "corr=1"] {
        let w: Weights = weights.parse()?;
        let report = build_report("full", &records, &w, 0.05)?;
        println!("weights {weights}");
        for m in &report.methods {
            println!(
                "  {} {:<7} MES {:.3} ± {:.3}",
                m.rank, m.record.method, m.mes_mean, m.mes_std
            );
        }
        for s in report.significance.iter().filter(|s| s.test.significant) {
            println!("  significant: {} vs {} on {}", s.a, s.b, s.criterion.as_str());
        }
    }
    Ok(())
}
