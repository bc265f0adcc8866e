use std::collections::BTreeMap;
use std::io::Write;

use windcast_core::neural::{Directionality, TrainConfig};
use windcast_core::par::Execution;
use windcast_core::pipeline::{
    emit_report, fit_entry, forecast_causal, forecast_segment, load_fitted, prepare, run_benchmark,
    run_entry, run_proposed, score, walk_forward_eval, DataSource, Decomposition, EvalMode, ModelSpec,
    PersistenceForecaster, PipelineConfig, PipelineError, RecurrentForecaster,
};
use windcast_core::synthetic::SineMix;

fn tiny() -> PipelineConfig {
    PipelineConfig {
        data: DataSource::Synthetic(SineMix {
            n: 1200,
            slow_period: 96.0,
            ..SineMix::default()
        }),
        wavelet_order: 4,
        wpd_level: 2,
        sam_period: 48,
        horizons: vec![1, 3],
        windows: BTreeMap::from([(1, 3), (3, 6)]),
        train: TrainConfig {
            epochs: 2,
            batch_size: 64,
            learning_rate: 1e-2,
            hidden_units: 4,
            ..TrainConfig::default()
        },
        models: vec![ModelSpec::PROPOSED, ModelSpec::new(Decomposition::None, Directionality::Uni)],
        seed: 3,
        workers: Some(1),
        ..PipelineConfig::default()
    }
}

#[test]
fn persistence_forecasters_aggregate_to_persistence() {
    let cfg = tiny();
    let prepared = prepare(&cfg).unwrap();
    for decomposition in [Decomposition::Wpd, Decomposition::Dwt, Decomposition::Swt, Decomposition::None] {
        let spec = ModelSpec::new(decomposition, Directionality::Bi);
        let run = run_entry(&prepared, &cfg, spec, &PersistenceForecaster, Execution::Sequential).unwrap();
        for (&h, preds) in &run.forecast.predictions {
            for (&slot, p) in run.forecast.target_slots.iter().zip(preds) {
                let expected = prepared.values[slot - h];
                assert!(
                    (p - expected).abs() < 1e-8,
                    "{spec} h={h} slot {slot}: {p} vs {expected}"
                );
            }
        }
    }
}

#[test]
fn seasonal_persistence_adds_the_index_difference() {
    let cfg = tiny();
    let prepared = prepare(&cfg).unwrap();
    let spec = ModelSpec::new(Decomposition::Sam, Directionality::Bi);
    let run = run_entry(&prepared, &cfg, spec, &PersistenceForecaster, Execution::Sequential).unwrap();
    let norm = run.fitted.normalizer;
    let sam = &run.fitted.seasonal[0];
    let h = 1;
    for (&slot, p) in run.forecast.target_slots.iter().zip(&run.forecast.predictions[&h]) {
        let z = (prepared.values[slot - h] - norm.mean) / norm.std;
        let expected = norm.invert_one(z - sam.index_at(slot - h) + sam.index_at(slot));
        assert!((p - expected).abs() < 1e-9);
    }
}

#[test]
fn benchmark_report_shape_and_determinism() {
    let cfg = tiny();
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&PipelineConfig {
        workers: Some(3),
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(a.report.to_csv(), b.report.to_csv());
    let dir = tempfile::tempdir().unwrap();
    emit_report(&a, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + cfg.models.len() * (cfg.horizons.len() + 1));
    assert!(csv.starts_with("model,horizon_h,mae,rmse,r2\n"));
    assert!(a.report.invariants_hold());

    let pred = std::fs::read_to_string(dir.path().join("predictions_h1.csv")).unwrap();
    assert_eq!(pred.lines().next(), Some("timestamp,actual,predicted"));
    assert_eq!(pred.lines().count(), 1 + a.prepared.test().len());
    assert!(dir.path().join("predictions_h3_LSTM.csv").exists());

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["provenance"]["config_hash"], cfg.hash());
    assert_eq!(json["split"]["n_train"], 840);
    assert_eq!(json["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn saved_models_reproduce_the_forecast() {
    let cfg = tiny();
    let a = run_proposed(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&a, dir.path()).unwrap();
    let fitted = load_fitted(&dir.path().join("models/WPD-SAM-BiLSTM.json")).unwrap();
    let entry = a.entry("WPD-SAM-BiLSTM").unwrap();
    assert_eq!(fitted, entry.fitted);
    let again = forecast_segment(&fitted, &a.prepared.values, &cfg, Execution::Sequential).unwrap();
    assert_eq!(again, entry.forecast);
}

#[test]
fn failing_entry_is_recorded_without_aborting() {
    let mut cfg = tiny();
    cfg.wpd_level = 11; // 2048 > 840 training slots
    let a = run_benchmark(&cfg).unwrap();
    assert_eq!(a.report.failed.len(), 1);
    assert_eq!(a.report.failed[0].model, "WPD-SAM-BiLSTM");
    assert!(a.report.to_csv().contains("WPD-SAM-BiLSTM,failed,,,\n"));
    assert!(a.report.overall_for("LSTM").is_some());
}

#[test]
fn empty_matrix_and_zero_stride_are_errors() {
    let mut cfg = tiny();
    cfg.models.clear();
    assert!(matches!(run_benchmark(&cfg), Err(PipelineError::Config(_))));
    assert!(matches!(walk_forward_eval(&tiny(), 0), Err(PipelineError::Config(_))));
}

#[test]
fn causal_stride_of_test_length_scores_first_test_slot() {
    let cfg = tiny();
    let prepared = prepare(&cfg).unwrap();
    let fitted = fit_entry(
        &prepared.values,
        prepared.cut,
        &cfg,
        ModelSpec::PROPOSED,
        &PersistenceForecaster,
        Execution::Sequential,
    )
    .unwrap();
    let f = forecast_causal(&fitted, &prepared.values, &cfg, prepared.test().len(), Execution::Sequential).unwrap();
    assert_eq!(f.target_slots, vec![prepared.cut]);
    assert!(f.predictions.values().all(|p| p.len() == 1));
}

#[test]
fn causal_forecast_ignores_values_after_the_origin() {
    let cfg = tiny();
    let prepared = prepare(&cfg).unwrap();
    let fitted = fit_entry(
        &prepared.values,
        prepared.cut,
        &cfg,
        ModelSpec::PROPOSED,
        &PersistenceForecaster,
        Execution::Sequential,
    )
    .unwrap();
    let base = forecast_causal(&fitted, &prepared.values, &cfg, 50, Execution::Sequential).unwrap();
    let target_index = 3;
    let slot = base.target_slots[target_index];
    let mut mutated = prepared.values.clone();
    for v in &mut mutated[slot..] {
        *v += 5.0;
    }
    let other = forecast_causal(&fitted, &mutated, &cfg, 50, Execution::Sequential).unwrap();
    for (h, preds) in &base.predictions {
        assert_eq!(preds[..=target_index], other.predictions[h][..=target_index], "h={h}");
    }
}

#[test]
fn causal_matches_segment_without_wavelets() {
    let mut cfg = tiny();
    cfg.models = vec![
        ModelSpec::new(Decomposition::None, Directionality::Bi),
        ModelSpec::new(Decomposition::Sam, Directionality::Uni),
    ];
    let seg = run_benchmark(&cfg).unwrap();
    let causal = walk_forward_eval(&cfg, 1).unwrap();
    assert_eq!(causal.provenance.mode, EvalMode::Causal);
    for (s, c) in seg.entries.iter().zip(&causal.entries) {
        assert_eq!(s.forecast.target_slots, c.forecast.target_slots);
        for (h, p) in &s.forecast.predictions {
            for (a, b) in p.iter().zip(&c.forecast.predictions[h]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn csv_source_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mix = SineMix {
        n: 1200,
        slow_period: 96.0,
        ..SineMix::default()
    };
    let path = dir.path().join("wind.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "timestamp,wind_speed").unwrap();
    let series = mix.series();
    for (t, v) in mix.values().iter().enumerate() {
        // a sentinel reading and a gap exercise the cleaning path
        if t == 100 {
            writeln!(f, "{},999.9", series.timestamp(t).format("%Y-%m-%d %H:%M")).unwrap();
        } else if t != 200 {
            writeln!(f, "{},{v}", series.timestamp(t).format("%Y-%m-%d %H:%M")).unwrap();
        }
    }
    drop(f);
    let conf = dir.path().join("run.conf");
    let mut text = tiny().to_text();
    text = text.replace("data.source = synthetic", "data.source = csv\ndata.path = wind.csv");
    text = text
        .lines()
        .filter(|l| !l.starts_with("synthetic."))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&conf, text).unwrap();
    let cfg = PipelineConfig::from_file(&conf).unwrap();
    let a = run_proposed(&cfg).unwrap();
    assert_eq!(a.prepared.clean_report.n_sentinel, 1);
    assert_eq!(a.prepared.clean_report.n_gap_slots, 1);
    assert_eq!(a.prepared.values.len(), 1200);
    assert_eq!(a.report.rows.len(), 2);
}

#[test]
fn causal_error_is_not_below_segment_error() {
    let cfg = PipelineConfig {
        horizons: vec![1],
        windows: BTreeMap::from([(1, 3)]),
        models: vec![ModelSpec::PROPOSED],
        seed: 1,
        ..PipelineConfig::synthetic_reduced()
    };
    let prepared = prepare(&cfg).unwrap();
    let forecaster = RecurrentForecaster { config: cfg.train.clone() };
    let fitted = fit_entry(&prepared.values, prepared.cut, &cfg, ModelSpec::PROPOSED, &forecaster, Execution::Auto).unwrap();
    let seg = forecast_segment(&fitted, &prepared.values, &cfg, Execution::Auto).unwrap();
    let causal = forecast_causal(&fitted, &prepared.values, &cfg, 5, Execution::Auto).unwrap();
    let seg_mae = score("seg", &seg, &prepared.values).unwrap()[0].mae;
    let causal_mae = score("causal", &causal, &prepared.values).unwrap()[0].mae;
    let ratio = causal_mae / seg_mae;
    println!("h=1 MAE segment {seg_mae:.4}, causal {causal_mae:.4}, ratio {ratio:.2}");
    assert!(ratio >= 0.8, "causal MAE {causal_mae} unexpectedly below segment MAE {seg_mae}");
}

#[test]
fn fitted_artifacts_ignore_test_values() {
    let cfg = tiny();
    let prepared = prepare(&cfg).unwrap();
    let forecaster = RecurrentForecaster { config: cfg.train.clone() };
    let fit = |values: &[f64]| {
        fit_entry(values, prepared.cut, &cfg, ModelSpec::PROPOSED, &forecaster, Execution::Sequential)
            .unwrap()
            .hashes()
    };
    let base = fit(&prepared.values);
    let mut fuzzed = prepared.values.clone();
    for (i, v) in fuzzed[prepared.cut..].iter_mut().enumerate() {
        *v = (i as f64 * 0.37).sin() * 20.0;
    }
    assert_eq!(fit(&fuzzed), base);
}
