//! Generates a labeled synthetic listings set and writes it as CSV.
//!
//! `cargo run --example synth -- /tmp/listings.csv`

use std::collections::BTreeMap;

use pricebench::dataset::{synth_generate_labeled, write_csv, SynthConfig};

fn main() -> pricebench::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "listings.csv".into());
    let cfg = SynthConfig {
        n_models: 4,
        samples_per_model: 200,
        seed: 7,
        ..Default::default()
    };
    let synth = synth_generate_labeled(&cfg)?;

    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    for inj in &synth.injections {
        *kinds.entry(format!("{:?}", inj.kind)).or_default() += 1;
    }
    println!("{} rows over models {:?}", synth.dataset.len(), synth.dataset.models());
    println!("injected defects: {kinds:?}");
    for row in synth.dataset.rows.iter().take(3) {
        println!(
            "  {} {} {:?} {:?} h, {:.0} EUR",
            row.source_id, row.model, row.construction_year, row.working_hours, row.price
        );
    }

    write_csv(&synth.dataset, &out)?;
    println!("wrote {out}");
    Ok(())
}
