//! Runs the cleaning pipeline on generated data and reports what each stage removed.

use pricebench::dataset::{clean, synth_generate_labeled, CleaningConfig, InjectionKind, SynthConfig};

fn main() -> pricebench::Result<()> {
    let synth = synth_generate_labeled(&SynthConfig::default())?;
    let report = clean(&synth.dataset, &CleaningConfig::default())?;

    println!("input rows         {}", synth.dataset.len());
    println!("incomplete dropped {}", report.dropped_incomplete);
    println!("duplicates removed {}", report.duplicates_removed);
    println!("outliers rejected  {}", report.rejected.len());
    println!("hours imputed      {}", report.imputed);
    println!("rare models        {}", report.rare_removed);
    println!("output rows        {}", report.dataset.len());

    let injected = synth
        .injections
        .iter()
        .filter(|i| i.kind == InjectionKind::PriceOutlier)
        .count();
    let caught = report
        .rejected
        .iter()
        .filter(|r| {
            synth
                .injections
                .iter()
                .any(|i| i.kind == InjectionKind::PriceOutlier && i.source_id == r.listing.source_id)
        })
        .count();
    println!("price outliers caught: {caught} of {injected}");
    for r in report.rejected.iter().take(5) {
        println!(
            "  {} {} {:.0} EUR ({})",
            r.listing.source_id,
            r.listing.model,
            r.listing.price,
            r.reason.as_str()
        );
    }
    Ok(())
}
