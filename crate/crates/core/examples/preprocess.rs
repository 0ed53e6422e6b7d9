//! Encodes each feature subset: one-hot for categories, standard scaling for numbers.

use pricebench::dataset::{subset_table, synth_generate, SubsetId, SynthConfig};
use pricebench::preprocess::Preprocessor;

fn main() -> pricebench::Result<()> {
    let d = synth_generate(&SynthConfig::noiseless(3, 40, 1))?;
    for subset in SubsetId::ALL {
        let (table, y) = subset_table(&d, subset);
        let (pre, x) = Preprocessor::fit_transform(&table)?;
        println!(
            "{subset:<15} columns {:?} -> {} x {}",
            subset.columns(),
            x.nrows(),
            pre.output_width()
        );
        if subset == SubsetId::Full {
            println!("  first row {:?} -> price {:.0}", x.row(0), y[0]);
        }
    }
    Ok(())
}
