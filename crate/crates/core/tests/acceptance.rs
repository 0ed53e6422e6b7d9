//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any of them fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use common::{knn_oracle, mes_oracle, random_matrix, random_table, rng, svr_dual_oracle, to_rows, to_weights};
use pricebench::criteria::{measure_responsiveness, ErrorKind, ResponseCategory};
use pricebench::dataset::{
    clean, deduplicate, drop_incomplete, filter_outliers, impute_working_hours, subset_table, synth_generate,
    synth_generate_labeled, CleaningConfig, InjectionKind, SubsetId, SynthConfig,
};
use pricebench::harness::adapter::{run_session, AdapterClient, ProcessTransport};
use pricebench::harness::mock::{MockBehavior, MockTransport, MALFORMED_LINE};
use pricebench::harness::{run_benchmark, BenchmarkConfig, CellStatus, DatasetSource, MethodConfig};
use pricebench::mes::{mes_table, minmax_normalize, rank, CriterionKind, PerCriterion, Weights};
use pricebench::preprocess::Preprocessor;
use pricebench::regressors::svr::solve_dual;
use pricebench::regressors::{
    fit, Algorithm, Criterion, HyperSpace, Kernel, Knn, KnnWeights, Network, PolyModel, RegressionTree, TreeParams,
};
use pricebench::search::{automl_fit, AutomlConfig, Budget, SearchConfig};
use pricebench::{Error, Matrix};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<f64, String> {
    let s = start.elapsed().as_secs_f64();
    ensure(s < limit.as_secs_f64(), || {
        format!("took {s:.1} s, limit {} s", limit.as_secs())
    })?;
    Ok(s)
}

fn mes_matches_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for t in 0..20 {
        let n = r.random_range(3..=8);
        let (raw, w) = random_table(&mut r, n);
        let got = mes_table(&to_rows(&raw), &to_weights(&w)).map_err(|e| e.to_string())?;
        for (a, b) in got.iter().zip(mes_oracle(&raw, &w)) {
            worst = worst.max((a - b).abs());
        }
        ensure(worst <= 1e-12, || format!("table {t}: deviation {worst:.1e}"))?;
    }
    let s = within(Duration::from_secs(1), start)?;
    Ok(format!("20 tables, max deviation {worst:.1e}, {s:.3} s"))
}

fn published_table_structure() -> Outcome {
    let names = ["MLP", "RF", "auto-sklearn", "AutoGluon", "FLAML"];
    let corr = [0.1570, 0.1482, 0.1506, 0.1389, 0.1646];
    let comp = [2308.1, 1067.6, 1806.1, 14.2, 1801.5];
    let exp = [5.0, 5.0, 2.0, 2.0, 2.0];
    let raw: Vec<PerCriterion> = (0..5)
        .map(|i| {
            PerCriterion::from_pairs(&[
                (CriterionKind::Corr, corr[i]),
                (CriterionKind::Comp, comp[i]),
                (CriterionKind::Resp, ResponseCategory::RealTime.ordinal()),
                (CriterionKind::Exp, exp[i]),
            ])
        })
        .collect();
    let scores = mes_table(&raw, &Weights::default()).map_err(|e| e.to_string())?;
    ensure(scores.iter().all(|s| (0.0..=1.0).contains(s)), || {
        format!("out of range: {scores:?}")
    })?;
    let best = rank(&names, &scores, &comp)[0];
    ensure(names[best] == "AutoGluon", || format!("best is {}", names[best]))?;
    ensure(
        scores.iter().enumerate().all(|(i, s)| i == best || *s > scores[best]),
        || format!("minimum not strict: {scores:?}"),
    )?;
    let n = minmax_normalize(&corr);
    for (a, b) in n.iter().zip([0.704, 0.362, 0.455, 0.0, 1.0]) {
        ensure((a - b).abs() < 5e-4, || format!("normalized {n:?}"))?;
    }
    Ok(format!("AutoGluon minimal at {:.3}", scores[best]))
}

fn invariants_hold() -> Outcome {
    let mut r = rng(3);
    let cases = 1000;
    let mut violations = 0;
    for _ in 0..cases {
        let n = r.random_range(2..=8);
        let (raw, w) = random_table(&mut r, n);
        let rows = to_rows(&raw);
        let base = mes_table(&rows, &to_weights(&w)).map_err(|e| e.to_string())?;

        if base.iter().any(|s| !(0.0..=1.0).contains(s)) {
            violations += 1;
        }

        let k = 10f64.powf(r.random_range(-3.0..3.0));
        let scaled = mes_table(&rows, &to_weights(&w.map(|x| x * k))).map_err(|e| e.to_string())?;
        if base.iter().zip(&scaled).any(|(a, b)| (a - b).abs() > 1e-9) {
            violations += 1;
        }

        let c = r.random_range(0..5);
        if w.iter().enumerate().any(|(i, x)| i != c && *x > 0.0) {
            let mut zeroed = w;
            zeroed[c] = 0.0;
            let mut perturbed = raw.clone();
            for row in &mut perturbed {
                row[c] = r.random_range(-100.0..100.0);
            }
            let a = mes_table(&rows, &to_weights(&zeroed)).map_err(|e| e.to_string())?;
            let b = mes_table(&to_rows(&perturbed), &to_weights(&zeroed)).map_err(|e| e.to_string())?;
            if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-9) {
                violations += 1;
            }
        }

        // Raising one method's value for one criterion never lowers its score.
        let m = r.random_range(0..n);
        let mut worse = raw.clone();
        worse[m][c] += r.random_range(0.0..10.0);
        let after = mes_table(&to_rows(&worse), &to_weights(&w)).map_err(|e| e.to_string())?;
        if after[m] < base[m] - 1e-12 {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations in {cases} cases"))?;
    Ok(format!("{cases} cases, 0 violations"))
}

fn regressors_match_oracles() -> Outcome {
    let start = Instant::now();
    let e = |x: Error| x.to_string();

    let mut r = rng(4);
    let x = random_matrix(&mut r, 150, 3);
    let y: Vec<f64> = (0..150).map(|_| r.random_range(1.0..100.0)).collect();
    let queries = random_matrix(&mut r, 40, 3);
    for p in [1u32, 2, 3] {
        for (weights, dw) in [(KnnWeights::Uniform, false), (KnnWeights::Distance, true)] {
            let m = Knn::fit(&x, &y, 5, weights, p).map_err(e)?;
            for q in queries.rows_iter() {
                let (got, want) = (m.predict_row(q), knn_oracle(&x, &y, q, 5, p, dw));
                ensure((got - want).abs() <= 1e-12 * want.abs(), || {
                    format!("knn p={p}: {got} vs {want}")
                })?;
            }
        }
    }

    for criterion in ["squared_error", "absolute_error", "poisson"] {
        let params = TreeParams {
            max_depth: None,
            criterion: Criterion::parse(criterion).map_err(e)?,
            min_samples_split: 2,
            max_features: None,
        };
        let tree = RegressionTree::fit(&x, &y, &params, &mut rng(0)).map_err(e)?;
        ensure(tree.predict(&x) == y, || format!("{criterion} tree does not memorize"))?;
    }

    let truth = [1.5, -2.0, 0.25, 4.0];
    let ly: Vec<f64> = x
        .rows_iter()
        .map(|row| truth[0] + row.iter().zip(&truth[1..]).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let poly = PolyModel::fit(&x, &ly, 1).map_err(e)?;
    for (c, t) in poly.coefficients().iter().zip(truth) {
        ensure((c - t).abs() < 1e-6, || format!("poly coefficient {c} vs {t}"))?;
    }

    let mut worst_fd = 0.0f64;
    for _ in 0..20 {
        let (input, hidden, n) = (r.random_range(1..5), r.random_range(1..8), r.random_range(3..12));
        let xs = random_matrix(&mut r, n, input);
        let ys: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let net = Network::init(input, hidden, &mut r);
        let rows: Vec<usize> = (0..n).collect();
        let (_, grad) = net.loss_and_gradient(&xs, &ys, &rows);
        let h = 1e-6;
        let mut diff = 0.0;
        for (i, g) in grad.iter().enumerate() {
            let (mut plus, mut minus) = (net.clone(), net.clone());
            plus.params[i] += h;
            minus.params[i] -= h;
            let num =
                (plus.loss_and_gradient(&xs, &ys, &rows).0 - minus.loss_and_gradient(&xs, &ys, &rows).0) / (2.0 * h);
            diff += (g - num).powi(2);
        }
        let scale = grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1e-12);
        worst_fd = worst_fd.max(diff.sqrt() / scale);
    }
    ensure(worst_fd < 1e-4, || format!("mlp gradient relative error {worst_fd:e}"))?;

    let mut worst_svr = 0.0f64;
    for case in 0..12 {
        let l = r.random_range(3..=8);
        let xs = random_matrix(&mut r, l, 2);
        let z: Vec<f64> = (0..l).map(|_| r.random_range(-1.5..1.5)).collect();
        let kernel = Kernel::from_name(["rbf", "linear", "poly"][case % 3], &xs).map_err(e)?;
        let k: Vec<f64> = (0..l * l)
            .map(|ij| kernel.eval(xs.row(ij / l), xs.row(ij % l)))
            .collect();
        let (c, eps) = ([0.1, 1.0, 10.0][case % 3], [1e-2, 1e-3, 1e-4][(case / 3) % 3]);
        let sol = solve_dual(&k, &z, c, eps, 1e-8, 1_000_000);
        worst_svr = worst_svr.max((sol.objective - svr_dual_oracle(&k, &z, c, eps)).abs());
    }
    ensure(worst_svr < 1e-4, || format!("svr dual objective off by {worst_svr:e}"))?;

    let s = within(Duration::from_secs(120), start)?;
    Ok(format!(
        "knn, tree, poly, mlp gradient {worst_fd:.1e}, svr {worst_svr:.1e}, {s:.1} s"
    ))
}

fn cleaning_recovers_injections() -> Outcome {
    let start = Instant::now();
    let e = |x: Error| x.to_string();
    let out = synth_generate_labeled(&SynthConfig::default()).map_err(e)?;
    let cfg = CleaningConfig::default();
    let report = clean(&out.dataset, &cfg).map_err(e)?;
    let kept: BTreeSet<&str> = report.dataset.rows.iter().map(|r| r.source_id.as_str()).collect();

    let dups: Vec<_> = out
        .injections
        .iter()
        .filter(|i| i.kind == InjectionKind::Duplicate)
        .collect();
    let both_kept = dups
        .iter()
        .filter(|i| kept.contains(i.source_id.as_str()) && kept.contains(i.original.as_deref().unwrap_or("")))
        .count();
    ensure(both_kept == 0, || {
        format!("{both_kept} of {} duplicate pairs survived", dups.len())
    })?;

    let rejected: BTreeSet<&str> = report.rejected.iter().map(|r| r.listing.source_id.as_str()).collect();
    let outliers: Vec<&str> = out
        .injections
        .iter()
        .filter(|i| i.kind == InjectionKind::PriceOutlier)
        .map(|i| i.source_id.as_str())
        .collect();
    let caught = outliers.iter().filter(|id| rejected.contains(*id)).count();
    let recall = caught as f64 / outliers.len() as f64;
    ensure(recall >= 0.9, || format!("outlier recall {recall:.3}"))?;

    let (complete, _) = drop_incomplete(&out.dataset);
    let (filtered, _) = filter_outliers(&deduplicate(&complete, &cfg.key_sets).map_err(e)?, &cfg.outliers);
    let filled = impute_working_hours(&filtered, cfg.impute_seed).map_err(e)?;
    ensure(filled.rows.len() == filtered.rows.len(), || {
        "imputation changed the row count".into()
    })?;
    let missing: BTreeSet<&str> = out
        .injections
        .iter()
        .filter(|i| i.kind == InjectionKind::MissingHours)
        .map(|i| i.source_id.as_str())
        .collect();
    for (before, after) in filtered.rows.iter().zip(&filled.rows) {
        if before.working_hours.is_none() {
            ensure(missing.contains(before.source_id.as_str()), || {
                format!("{} was not injected", before.source_id)
            })?;
            ensure(after.hours_imputed && after.working_hours.is_some(), || {
                format!("{} not filled", before.source_id)
            })?;
            let mut restored = after.clone();
            restored.working_hours = None;
            restored.hours_imputed = false;
            ensure(&restored == before, || {
                format!("{} changed beyond its hours", before.source_id)
            })?;
        } else {
            ensure(after == before, || format!("{} changed", before.source_id))?;
        }
    }

    let again = clean(&report.dataset, &cfg).map_err(e)?;
    ensure(again.dataset.rows == report.dataset.rows, || {
        "cleaning is not idempotent".into()
    })?;
    let s = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "{} duplicate pairs resolved, outlier recall {:.3}, {} cells imputed, {s:.1} s",
        dups.len(),
        recall,
        report.imputed
    ))
}

fn end_to_end_benchmark() -> Outcome {
    let start = Instant::now();
    let cfg = BenchmarkConfig {
        seed: 11,
        repetitions: 3,
        dataset: DatasetSource::Synth {
            synth: SynthConfig::default(),
            clean: true,
            cleaning: CleaningConfig::default(),
        },
        search: SearchConfig {
            n_iter: 6,
            k_folds: 3,
            ..Default::default()
        },
        methods: vec![
            MethodConfig::Manual {
                algorithm: Algorithm::Forest,
            },
            MethodConfig::Manual {
                algorithm: Algorithm::Knn,
            },
            MethodConfig::automl(Budget::Iterations(30)),
        ],
        ..Default::default()
    };
    let b = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    let complete = b.cells.iter().filter(|c| c.status == CellStatus::Complete).count();
    ensure(complete == 12, || {
        format!("{complete} of {} cells complete", b.cells.len())
    })?;
    let mape = |subset: &str| {
        b.cell("forest", subset)
            .and_then(|c| c.record.as_ref())
            .map(|r| r.s_corr)
    };
    let (full, basic) = (mape("full").unwrap_or(f64::NAN), mape("basic").unwrap_or(f64::NAN));
    ensure(full < basic, || {
        format!("forest MAPE full {full:.4} vs basic {basic:.4}")
    })?;
    let s = within(Duration::from_secs(600), start)?;
    Ok(format!(
        "{} rows, 12 cells, forest MAPE basic {basic:.4} > full {full:.4}, {s:.0} s",
        b.dataset_rows
    ))
}

fn small_design(seed: u64) -> Result<(Matrix, Vec<f64>), String> {
    let cfg = SynthConfig {
        duplicate_frac: 0.0,
        outlier_frac: 0.0,
        missing_hours_frac: 0.0,
        ..SynthConfig::noiseless(4, 50, seed)
    };
    let cfg = SynthConfig {
        noise_sigma: SynthConfig::default().noise_sigma,
        ..cfg
    };
    let d = synth_generate(&cfg).map_err(|e| e.to_string())?;
    let (table, y) = subset_table(&d, SubsetId::Full);
    let (_, x) = Preprocessor::fit_transform(&table).map_err(|e| e.to_string())?;
    Ok((x, y))
}

fn budgets_are_respected() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for budget in [2.0, 5.0, 10.0] {
        for trial in 0..10u64 {
            let (x, y) = small_design(trial)?;
            let cfg = AutomlConfig {
                budget: Budget::Seconds(budget),
                seed: trial,
                ..Default::default()
            };
            let start = Instant::now();
            let fitted = automl_fit(&x, &y, &cfg).map_err(|e| e.to_string())?;
            let wall = start.elapsed().as_secs_f64();
            let allowed = 1.1 * budget + fitted.last_fit_seconds;
            ensure(wall <= allowed, || {
                format!("budget {budget} s trial {trial}: {wall:.2} s > {allowed:.2} s")
            })?;
            worst = worst.max(wall / budget);
        }
    }
    Ok(format!("30 runs, worst wall/budget {worst:.3}"))
}

fn responsiveness_categories() -> Outcome {
    for (s, want) in [
        (0.0999, ResponseCategory::RealTime),
        (0.1, ResponseCategory::Fast),
        (0.999, ResponseCategory::Fast),
        (1.0, ResponseCategory::Slow),
    ] {
        let got = ResponseCategory::from_seconds(s);
        ensure(got == want, || format!("{s} s is {got:?}"))?;
    }
    let cfg = SynthConfig {
        duplicate_frac: 0.0,
        ..Default::default()
    };
    let d = synth_generate(&cfg).map_err(|e| e.to_string())?;
    let (table, y) = subset_table(&d, SubsetId::Full);
    let (_, x) = Preprocessor::fit_transform(&table).map_err(|e| e.to_string())?;
    let probe: Vec<usize> = (0..x.nrows()).step_by(x.nrows() / 100).collect();
    let probe = x.select_rows(&probe);
    let mut slowest = 0.0f64;
    let mut r = rng(5);
    for alg in Algorithm::ALL {
        let spec = HyperSpace::for_algorithm(alg, x.ncols()).sample(&mut r);
        let model = fit(&spec, &x, &y, 0).map_err(|e| format!("{spec}: {e}"))?;
        let resp = measure_responsiveness(|m: &Matrix| model.predict(m), &probe).map_err(|e| e.to_string())?;
        ensure(resp.category == ResponseCategory::RealTime, || {
            format!("{alg:?} takes {:.4} s per row", resp.mean_seconds)
        })?;
        slowest = slowest.max(resp.mean_seconds);
    }
    Ok(format!("{} rows, slowest model {:.2e} s per row", x.nrows(), slowest))
}

fn protocol_conformance() -> Outcome {
    let d = synth_generate(&SynthConfig::noiseless(2, 15, 3)).map_err(|e| e.to_string())?;
    let (t, y) = subset_table(&d, SubsetId::Full);
    let train: Vec<usize> = (0..20).collect();
    let test: Vec<usize> = (20..t.nrows()).collect();
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let (train, test) = (t.select_rows(&train), t.select_rows(&test));

    let out = run_session(
        MockTransport::new(MockBehavior::Mean),
        (&train, &y_train),
        &test,
        1.0,
        ErrorKind::Mape,
        Duration::from_secs(5),
    )
    .map_err(|e| format!("in-process session: {e}"))?;
    ensure(out.predictions.len() == test.nrows(), || "prediction count".into())?;

    let exe = env!("CARGO_BIN_EXE_pricebench").to_string();
    let spawn = |behavior: &str| {
        ProcessTransport::spawn(&[exe.clone(), "mock-adapter".into(), "--behavior".into(), behavior.into()])
            .map_err(|e| e.to_string())
    };
    let out = run_session(
        spawn("mean")?,
        (&train, &y_train),
        &test,
        1.0,
        ErrorKind::Mape,
        Duration::from_secs(20),
    )
    .map_err(|e| format!("subprocess session: {e}"))?;
    ensure(out.predictions.len() == test.nrows(), || {
        "subprocess prediction count".into()
    })?;

    let mut wrong = MockTransport::new(MockBehavior::WrongVersion);
    let mismatch = AdapterClient::connect(&mut wrong, Duration::from_secs(1)).err();
    ensure(matches!(mismatch, Some(Error::HandshakeMismatch(_))), || {
        "version mismatch accepted".into()
    })?;
    ensure(wrong.terminated, || "mismatched adapter left running".into())?;

    let mut client = AdapterClient::connect(MockTransport::new(MockBehavior::Malformed), Duration::from_secs(1))
        .map_err(|e| e.to_string())?;
    match client.train(&train, &y_train, 1.0, ErrorKind::Mape) {
        Err(Error::ProtocolViolation { line, .. }) if line == MALFORMED_LINE => {}
        other => return Err(format!("malformed frame gave {other:?}")),
    }

    let start = Instant::now();
    let hung = run_session(
        spawn("hang")?,
        (&train, &y_train),
        &test,
        1.0,
        ErrorKind::Mape,
        Duration::from_secs(2),
    );
    ensure(matches!(hung, Err(Error::AdapterTimeout(_))), || {
        format!("hang gave {hung:?}")
    })?;
    let waited = start.elapsed().as_secs_f64();
    ensure(waited < 10.0, || format!("timeout took {waited:.1} s"))?;
    Ok(format!(
        "handshake, train, predict, malformed frame, timeout after {waited:.1} s"
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("mes matches independent oracle", mes_matches_oracle),
        ("published table structure", published_table_structure),
        ("mes invariants", invariants_hold),
        ("regressor oracles", regressors_match_oracles),
        ("cleaning recovers injected defects", cleaning_recovers_injections),
        ("end-to-end benchmark", end_to_end_benchmark),
        ("time budget adherence", budgets_are_respected),
        ("responsiveness categories", responsiveness_categories),
        ("adapter protocol conformance", protocol_conformance),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
