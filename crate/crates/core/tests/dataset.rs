use std::collections::BTreeSet;

use proptest::prelude::*;

use pricebench::dataset::{
    clean, deduplicate, default_key_sets, filter_outliers, impute_working_hours, ingest_reader, subset_table,
    synth_generate, write_csv_to, CleaningConfig, Dataset, Listing, OutlierConfig, SubsetId, SynthConfig,
};

fn config(seed: u64, n_models: usize, dup: f64, out: f64, miss: f64) -> SynthConfig {
    SynthConfig {
        n_models,
        samples_per_model: 60,
        duplicate_frac: dup,
        outlier_frac: out,
        missing_hours_frac: miss,
        seed,
        ..Default::default()
    }
}

fn value_key(r: &Listing) -> String {
    format!(
        "{}|{:?}|{:?}|{:?}|{}",
        r.model,
        r.series,
        r.construction_year,
        r.working_hours.map(f64::to_bits),
        r.price.to_bits()
    )
}

fn is_subsequence(sub: &[Listing], of: &[Listing]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|r| it.any(|o| o == r))
}

#[test]
fn subsets_have_the_documented_columns() {
    let d = synth_generate(&SynthConfig::noiseless(2, 10, 0)).unwrap();
    for id in SubsetId::ALL {
        let (t, y) = subset_table(&d, id);
        assert_eq!(t.nrows(), d.len());
        assert_eq!(y, d.rows.iter().map(|r| r.price).collect::<Vec<_>>());
        assert_eq!(id.columns()[..3], ["model", "working_hours", "construction_year"]);
        assert!(!id.columns().contains(&"brand"));
    }
    assert_eq!(SubsetId::Full.columns().len(), 5);
}

#[test]
fn csv_round_trip_keeps_rows() {
    let d = synth_generate(&config(3, 2, 0.1, 0.05, 0.1)).unwrap();
    let mut buf = Vec::new();
    write_csv_to(&d, &mut buf).unwrap();
    let (back, errors) = ingest_reader(buf.as_slice()).unwrap();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(back.rows, d.rows);
}

#[test]
fn malformed_cells_are_reported_per_row() {
    let d = synth_generate(&SynthConfig::noiseless(1, 3, 0)).unwrap();
    let mut buf = Vec::new();
    write_csv_to(&d, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let first = lines[1].clone();
    let price = d.rows[0].price.to_string();
    lines[1] = first.replacen(&price, "cheap", 1);
    let (back, errors) = ingest_reader(lines.join("\n").as_bytes()).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(errors.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cleaning_is_idempotent(seed in any::<u64>(), dup in 0.0f64..0.3, out in 0.0f64..0.1, miss in 0.0f64..0.2) {
        let d = synth_generate(&config(seed, 3, dup, out, miss)).unwrap();
        let cfg = CleaningConfig { min_model_count: 10, ..Default::default() };
        let once = clean(&d, &cfg).unwrap().dataset;
        let twice = clean(&once, &cfg).unwrap().dataset;
        prop_assert_eq!(&once.rows, &twice.rows);
        for r in &once.rows {
            prop_assert!(r.price > 0.0);
            prop_assert!(!r.model.is_empty() && !r.brand.is_empty() && !r.location.is_empty());
            prop_assert!(r.working_hours.is_some_and(|h| h >= 0.0));
        }
    }

    #[test]
    fn dedup_leaves_no_violations_and_keeps_rows_intact(seed in any::<u64>(), dup in 0.0f64..0.5) {
        let d = synth_generate(&config(seed, 2, dup, 0.0, 0.0)).unwrap();
        let out = deduplicate(&d, &default_key_sets()).unwrap();
        prop_assert!(out.len() <= d.len());
        prop_assert!(is_subsequence(&out.rows, &d.rows));
        let ids: BTreeSet<&str> = out.rows.iter().map(|r| r.source_id.as_str()).collect();
        prop_assert_eq!(ids.len(), out.len());
        let values: BTreeSet<String> = out.rows.iter().map(value_key).collect();
        prop_assert_eq!(values.len(), out.len());
    }

    #[test]
    fn outlier_filter_never_modifies_survivors(seed in any::<u64>(), out in 0.0f64..0.2, conf in 0.9f64..0.999) {
        let d = synth_generate(&config(seed, 3, 0.0, out, 0.0)).unwrap();
        let (kept, rejected) = filter_outliers(&d, &OutlierConfig::with_confidence(conf));
        prop_assert_eq!(kept.len() + rejected.len(), d.len());
        prop_assert!(is_subsequence(&kept.rows, &d.rows));
        let (again, more) = filter_outliers(&kept, &OutlierConfig::with_confidence(conf));
        prop_assert!(more.is_empty());
        prop_assert_eq!(again.rows, kept.rows);
    }

    #[test]
    fn imputation_touches_only_missing_cells(seed in any::<u64>(), miss in 0.0f64..0.4) {
        let d = synth_generate(&config(seed, 3, 0.0, 0.0, miss)).unwrap();
        let filled: Dataset = impute_working_hours(&d, seed).unwrap();
        prop_assert_eq!(filled.len(), d.len());
        for (before, after) in d.rows.iter().zip(&filled.rows) {
            match before.working_hours {
                Some(_) => prop_assert_eq!(before, after),
                None => {
                    prop_assert!(after.hours_imputed);
                    prop_assert!(after.working_hours.is_some_and(|h| h >= 0.0));
                    let mut restored = after.clone();
                    restored.working_hours = None;
                    restored.hours_imputed = false;
                    prop_assert_eq!(before, &restored);
                }
            }
        }
    }

    #[test]
    fn generator_is_a_function_of_its_seed(seed in any::<u64>()) {
        let cfg = config(seed, 2, 0.1, 0.05, 0.05);
        prop_assert_eq!(synth_generate(&cfg).unwrap().rows, synth_generate(&cfg).unwrap().rows);
    }
}
