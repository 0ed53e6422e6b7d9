//! The built-in automated optimizer under an iteration budget and a time budget.

use pricebench::dataset::{subset_table, synth_generate, SubsetId, SynthConfig};
use pricebench::preprocess::Preprocessor;
use pricebench::search::{automl_fit, AutomlConfig, Budget};

fn main() -> pricebench::Result<()> {
    let d = synth_generate(&SynthConfig::noiseless(3, 80, 5))?;
    let (table, y) = subset_table(&d, SubsetId::Full);
    let (_, x) = Preprocessor::fit_transform(&table)?;

    for budget in [Budget::Iterations(20), Budget::Seconds(2.0)] {
        let cfg = AutomlConfig {
            budget,
            seed: 3,
            ensemble_top_k: 3,
            ..Default::default()
        };
        let e = automl_fit(&x, &y, &cfg)?;
        println!(
            "{budget:?}: {} trials in {:.2} s, warnings {:?}",
            e.trials.len(),
            e.elapsed_seconds,
            e.warnings
        );
        for (spec, (_, w)) in e.member_specs.iter().zip(&e.members) {
            println!("  weight {w:.3}  {spec}");
        }
    }
    Ok(())
}
