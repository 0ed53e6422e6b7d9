use std::panic::{self, AssertUnwindSafe};

use serde::{Deserialize, Serialize};

use super::adapter::bridge_external;
use super::config::{BenchmarkConfig, DatasetSource, MethodConfig, DEFAULT_AUTOML_BUDGET_SECONDS};
use crate::criteria::{
    measure_responsiveness, measure_training, regression_error, CriteriaRecord, ErrorKind, ExpertiseLevel, Repetition,
};
use crate::dataset::{self, holdout_split, subset_table, CleaningConfig, Dataset, FeatureTable, Split};
use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};
use crate::mes::{build_report, MesReport};
use crate::preprocess::Preprocessor;
use crate::regressors;
use crate::search::{automl_fit, random_search, AutomlConfig, SearchConfig};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSummary {
    pub input_rows: usize,
    pub output_rows: usize,
    pub dropped_incomplete: usize,
    pub duplicates_removed: usize,
    pub outliers_rejected: usize,
    pub imputed: usize,
    pub rare_removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLog {
    pub method: String,
    pub subset: String,
    pub repetition: usize,
    pub seed: u64,
    pub measurement: Option<Repetition>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Complete,
    Failed,
}

/// One (method, subset) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: String,
    pub subset: String,
    pub status: CellStatus,
    pub reason: Option<String>,
    pub record: Option<CriteriaRecord>,
    /// Failed tuning trials summed over repetitions.
    pub failed_trials: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub subset: String,
    pub best_method: String,
    pub best_mes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub config: BenchmarkConfig,
    pub dataset_rows: usize,
    pub cleaning: Option<CleanSummary>,
    pub train_rows: usize,
    pub test_rows: usize,
    /// `methods x subsets`, in config order (subset-major).
    pub cells: Vec<Cell>,
    pub cycles: Vec<CycleLog>,
    /// One report per subset that has at least one complete cell.
    pub reports: Vec<MesReport>,
    /// All complete cells normalized together.
    pub overall: Option<MesReport>,
    pub summary: Vec<SubsetSummary>,
}

impl ReportBundle {
    pub fn cell(&self, method: &str, subset: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.subset == subset)
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellStatus::Failed).count()
    }

    pub fn is_partial(&self) -> bool {
        self.failed_cells() > 0
    }

    pub fn report(&self, subset: &str) -> Option<&MesReport> {
        self.reports.iter().find(|r| r.subset == subset)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Loads the configured dataset and applies the cleaning pipeline if enabled.
pub fn load_dataset(cfg: &BenchmarkConfig) -> Result<(Dataset, Option<CleanSummary>)> {
    let (raw, clean, cleaning) = match &cfg.dataset {
        DatasetSource::Csv { path, clean, cleaning } => (dataset::ingest_csv(path)?, *clean, cleaning),
        DatasetSource::Synth { synth, clean, cleaning } => (dataset::synth_generate(synth)?, *clean, cleaning),
    };
    if !clean {
        return Ok((raw, None));
    }
    let cleaning = CleaningConfig {
        impute_seed: seed::derive_labeled(cfg.seed, &["impute"], 0),
        ..cleaning.clone()
    };
    let report = dataset::clean(&raw, &cleaning)?;
    let summary = CleanSummary {
        input_rows: raw.len(),
        output_rows: report.dataset.len(),
        dropped_incomplete: report.dropped_incomplete,
        duplicates_removed: report.duplicates_removed,
        outliers_rejected: report.rejected.len(),
        imputed: report.imputed,
        rare_removed: report.rare_removed,
    };
    Ok((report.dataset, Some(summary)))
}

struct SubsetData<'a> {
    train_table: FeatureTable,
    test_table: FeatureTable,
    y_train: &'a [f64],
    y_test: &'a [f64],
    x_train: Matrix,
    x_test: Matrix,
}

struct CycleResult {
    measurement: Repetition,
    expertise: ExpertiseLevel,
    failed_trials: usize,
    warnings: Vec<String>,
}

fn run_cycle(method: &MethodConfig, data: &SubsetData, cfg: &BenchmarkConfig, seed: u64) -> Result<CycleResult> {
    let scoring = cfg.scoring;
    let score = |pred: &[f64]| regression_error(data.y_test, pred, ErrorKind::Mape);
    match method {
        MethodConfig::Manual { algorithm } => {
            let search = SearchConfig {
                seed,
                scoring,
                ..cfg.search
            };
            let ((model, result), comp) = measure_training(|| {
                let result = random_search(*algorithm, &data.x_train, data.y_train, &search)?;
                let model = regressors::fit(&result.best, &data.x_train, data.y_train, seed)?;
                Ok((model, result))
            })?;
            let corr = score(&model.predict(&data.x_test)?)?;
            let resp = measure_responsiveness(|x| model.predict(x), &data.x_test)?;
            Ok(CycleResult {
                measurement: Repetition {
                    corr,
                    comp,
                    resp_seconds: resp.mean_seconds,
                },
                expertise: ExpertiseLevel::MANUAL,
                failed_trials: result.failed_trials(),
                warnings: model.warnings.iter().map(|w| format!("{w:?}")).collect(),
            })
        }
        MethodConfig::AutomlLite { ensemble_top_k, .. } => {
            let automl = AutomlConfig {
                budget: method.automl_budget().expect("automl method has a budget"),
                seed,
                scoring,
                ensemble_top_k: *ensemble_top_k,
                ..AutomlConfig::default()
            };
            let (ensemble, comp) = measure_training(|| automl_fit(&data.x_train, data.y_train, &automl))?;
            let corr = score(&ensemble.predict(&data.x_test)?)?;
            let resp = measure_responsiveness(|x| ensemble.predict(x), &data.x_test)?;
            Ok(CycleResult {
                measurement: Repetition {
                    corr,
                    comp,
                    resp_seconds: resp.mean_seconds,
                },
                expertise: ExpertiseLevel::AUTOMATED,
                failed_trials: ensemble.failed_trials(),
                warnings: ensemble.warnings.iter().map(|w| format!("{w:?}")).collect(),
            })
        }
        MethodConfig::External {
            command,
            budget_seconds,
            ..
        } => {
            let out = bridge_external(
                command,
                (&data.train_table, data.y_train),
                &data.test_table,
                budget_seconds.unwrap_or(DEFAULT_AUTOML_BUDGET_SECONDS),
                scoring,
            )?;
            Ok(CycleResult {
                measurement: Repetition {
                    corr: score(&out.predictions)?,
                    comp: out.train_seconds,
                    resp_seconds: out.responsiveness.mean_seconds,
                },
                expertise: out.info.expertise,
                failed_trials: 0,
                warnings: Vec::new(),
            })
        }
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Runs every method on every subset for the configured repetitions. All
/// methods share one holdout split; repetition `r` of a method on a subset
/// uses a seed derived from the master seed, the method id, the subset id
/// and `r`. A failing cell is recorded and the run continues.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let (data, cleaning) = load_dataset(cfg)?;
    let split: Split = holdout_split(data.len(), cfg.test_frac, seed::derive_labeled(cfg.seed, &["split"], 0))?;
    log::info!(
        "dataset: {} rows, train {}, test {}",
        data.len(),
        split.train.len(),
        split.test.len()
    );

    let mut cells = Vec::new();
    let mut cycles = Vec::new();
    let mut reports = Vec::new();
    let mut summary = Vec::new();

    for &subset in &cfg.subsets {
        let (table, y) = subset_table(&data, subset);
        let y_train = matrix::select(&y, &split.train);
        let y_test = matrix::select(&y, &split.test);
        let train_table = table.select_rows(&split.train);
        let test_table = table.select_rows(&split.test);
        let pre = Preprocessor::fit(&train_table)?;
        let sd = SubsetData {
            x_train: pre.transform(&train_table)?,
            x_test: pre.transform(&test_table)?,
            train_table,
            test_table,
            y_train: &y_train,
            y_test: &y_test,
        };

        let mut records = Vec::new();
        for method in &cfg.methods {
            let id = method.id();
            let mut reps = Vec::new();
            let mut expertise = ExpertiseLevel::AUTOMATED;
            let mut failed_trials = 0;
            let mut warnings = Vec::new();
            let mut failure = None;
            for r in 0..cfg.repetitions {
                let s = seed::derive_labeled(cfg.seed, &[&id, subset.as_str()], r as u64);
                let outcome = panic::catch_unwind(AssertUnwindSafe(|| run_cycle(method, &sd, cfg, s)))
                    .unwrap_or_else(|p| Err(Error::InvalidData(format!("panicked: {}", panic_message(p)))));
                match outcome {
                    Ok(c) => {
                        log::info!(
                            "{id}/{subset} rep {r}: mape {:.4}, {:.2} s",
                            c.measurement.corr,
                            c.measurement.comp
                        );
                        cycles.push(CycleLog {
                            method: id.clone(),
                            subset: subset.to_string(),
                            repetition: r,
                            seed: s,
                            measurement: Some(c.measurement),
                            error: None,
                        });
                        reps.push(c.measurement);
                        expertise = c.expertise;
                        failed_trials += c.failed_trials;
                        for w in c.warnings {
                            if !warnings.contains(&w) {
                                warnings.push(w);
                            }
                        }
                    }
                    Err(e) => {
                        log::warn!("{id}/{subset} rep {r} failed: {e}");
                        cycles.push(CycleLog {
                            method: id.clone(),
                            subset: subset.to_string(),
                            repetition: r,
                            seed: s,
                            measurement: None,
                            error: Some(e.to_string()),
                        });
                        failure = Some(format!("repetition {r}: {e}"));
                        break;
                    }
                }
            }
            let record = match failure {
                None => Some(CriteriaRecord::from_repetitions(&id, subset.as_str(), expertise, reps)?),
                Some(_) => None,
            };
            if let Some(rec) = &record {
                records.push(rec.clone());
            }
            cells.push(Cell {
                method: id,
                subset: subset.to_string(),
                status: if record.is_some() {
                    CellStatus::Complete
                } else {
                    CellStatus::Failed
                },
                reason: failure,
                record,
                failed_trials,
                warnings,
            });
        }

        if !records.is_empty() {
            let report = build_report(subset.as_str(), &records, &cfg.weights, cfg.alpha)?;
            let best = &report.methods[0];
            summary.push(SubsetSummary {
                subset: subset.to_string(),
                best_method: best.record.method.clone(),
                best_mes: best.mes_mean,
            });
            reports.push(report);
        }
    }

    let complete: Vec<CriteriaRecord> = cells.iter().filter_map(|c| c.record.clone()).collect();
    if complete.is_empty() {
        return Err(Error::AllMethodsFailed);
    }
    let overall = Some(build_report("all", &complete, &cfg.weights, cfg.alpha)?);

    Ok(ReportBundle {
        config: cfg.clone(),
        dataset_rows: data.len(),
        cleaning,
        train_rows: split.train.len(),
        test_rows: split.test.len(),
        cells,
        cycles,
        reports,
        overall,
        summary,
    })
}
