//! Random search with k-fold cross-validation over one algorithm's grid.

use pricebench::dataset::{subset_table, synth_generate, SubsetId, SynthConfig};
use pricebench::preprocess::Preprocessor;
use pricebench::regressors::Algorithm;
use pricebench::search::{random_search, write_trial_log, SearchConfig};

fn main() -> pricebench::Result<()> {
    let d = synth_generate(&SynthConfig::noiseless(3, 80, 5))?;
    let (table, y) = subset_table(&d, SubsetId::Full);
    let (_, x) = Preprocessor::fit_transform(&table)?;
    let cfg = SearchConfig {
        n_iter: 8,
        k_folds: 5,
        seed: 1,
        ..Default::default()
    };
    let res = random_search(Algorithm::Tree, &x, &y, &cfg)?;
    println!("best {} with CV MAPE {:.4}", res.best, res.best_score);
    write_trial_log(&res.trials, std::io::stdout())?;
    Ok(())
}
