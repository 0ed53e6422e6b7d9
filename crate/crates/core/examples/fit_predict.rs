//! Fits each of the seven regressors on one split and prints holdout MAPE.

use pricebench::criteria::{regression_error, ErrorKind};
use pricebench::dataset::{holdout_split, subset_table, synth_generate, SubsetId, SynthConfig};
use pricebench::preprocess::Preprocessor;
use pricebench::regressors::{fit, Algorithm, FittedModel, ModelSpec};

fn main() -> pricebench::Result<()> {
    let d = synth_generate(&SynthConfig::noiseless(4, 100, 3))?;
    let (table, y) = subset_table(&d, SubsetId::Full);
    let split = holdout_split(table.nrows(), 0.2, 0)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<f64>>();
    let (train, test) = (table.select_rows(&split.train), table.select_rows(&split.test));
    let pre = Preprocessor::fit(&train)?;
    let (xt, xv) = (pre.transform(&train)?, pre.transform(&test)?);
    let (yt, yv) = (pick(&split.train), pick(&split.test));

    let specs = [
        ModelSpec::new(Algorithm::Poly).with("degree", 2i64),
        ModelSpec::new(Algorithm::Tree)
            .with("max_depth", 10i64)
            .with("criterion", "squared_error"),
        ModelSpec::new(Algorithm::Forest)
            .with("max_depth", 0i64)
            .with("criterion", "squared_error")
            .with("n_estimators", 50i64)
            .with("max_features", xt.ncols() as i64 - 1)
            .with("min_samples_split", 2i64)
            .with("bootstrap", true),
        ModelSpec::new(Algorithm::Adaboost).with("n_estimators", 50i64),
        ModelSpec::new(Algorithm::Svr)
            .with("kernel", "rbf")
            .with("C", 10.0)
            .with("epsilon", 1e-2),
        ModelSpec::new(Algorithm::Knn)
            .with("n_neighbors", 4i64)
            .with("weights", "distance")
            .with("p", 2i64),
        ModelSpec::new(Algorithm::Mlp)
            .with("hidden_layer_size", 9i64)
            .with("learning_rate", 1e-3)
            .with("activation", "relu")
            .with("solver", "adam"),
    ];
    for spec in specs {
        let model = fit(&spec, &xt, &yt, 42)?;
        let mape = regression_error(&yv, &model.predict(&xv)?, ErrorKind::Mape)?;
        // Models survive a JSON round trip unchanged.
        let reloaded = FittedModel::from_json(&model.to_json()?)?;
        assert_eq!(reloaded.predict(&xv)?, model.predict(&xv)?);
        println!(
            "{:<8} MAPE {mape:.4}  warnings {:?}",
            spec.algorithm.as_str(),
            model.warnings
        );
    }
    Ok(())
}
