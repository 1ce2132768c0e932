use std::path::PathBuf;

use ecoamlp::baselines::{ClassifierKind, PreprocessorKind};
use ecoamlp::data::{load_csv, split, Schema, SplitSpec};
use ecoamlp::harness::{
    load_dataset, run_experiment, run_on_dataset, run_sweep, ExperimentConfig, SweepAxis,
};
use ecoamlp::Error;

fn pidd_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/pima-indians-diabetes.csv")
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        data_path: pidd_path(),
        ..ExperimentConfig::default()
    }
}

/// AutoMLP settings small enough for quick pipeline tests.
fn light() -> ExperimentConfig {
    ExperimentConfig {
        ensemble_size: 2,
        cycles: 3,
        generations: 2,
        hidden_range: (2, 16),
        repeats: 2,
        ..config()
    }
}

fn strip_timestamp(mut value: serde_json::Value) -> serde_json::Value {
    if let Some(obj) = value.as_object_mut() {
        obj.remove("generated_at");
    }
    value
}

#[test]
fn pidd_shape() {
    let data = load_csv(pidd_path(), &Schema::pidd()).unwrap();
    assert_eq!(data.len(), 768);
    assert_eq!(data.dim(), 8);
    assert_eq!(data.class_counts(), [500, 268]);
    let parts = split(&data, &SplitSpec::default()).unwrap();
    assert_eq!(parts.sizes(), [538, 115, 115]);
}

#[test]
fn default_run_removes_ten_training_outliers() {
    let report = run_experiment(&ExperimentConfig {
        repeats: 1,
        ..config()
    })
    .unwrap();
    let r = &report.repeats[0];
    assert_eq!(r.split_sizes, [538, 115, 115]);
    assert_eq!(r.outliers.as_ref().unwrap().ranked.len(), 10);
    assert_eq!(r.train_size_after_preprocessing, 528);
    assert_eq!(r.test.matrix.total(), 115);
    let history = &r.automlp.as_ref().unwrap().history;
    assert_eq!(history.len(), 10);
    assert!(history.iter().all(|g| g.members.len() == 4));
}

#[test]
fn reports_are_deterministic_apart_from_timestamp() {
    let c = ExperimentConfig {
        repeats: 3,
        ..light()
    };
    let a = serde_json::to_value(run_experiment(&c).unwrap()).unwrap();
    let b = serde_json::to_value(run_experiment(&c).unwrap()).unwrap();
    assert_eq!(
        serde_json::to_string(&strip_timestamp(a)).unwrap(),
        serde_json::to_string(&strip_timestamp(b)).unwrap()
    );
}

#[test]
fn one_nn_scores_perfectly_on_its_training_set() {
    let c = ExperimentConfig {
        preprocessor: PreprocessorKind::None,
        classifier: ClassifierKind::Knn,
        knn_k: 1,
        test_on_train: true,
        ..light()
    };
    let report = run_experiment(&c).unwrap();
    assert!(report.repeats.iter().all(|r| r.test.accuracy == 1.0));
}

#[test]
fn repeats_use_consecutive_seeds() {
    let c = ExperimentConfig {
        seed: 40,
        repeats: 3,
        classifier: ClassifierKind::Nb,
        ..light()
    };
    let report = run_experiment(&c).unwrap();
    let seeds: Vec<u64> = report.repeats.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, [40, 41, 42]);
    for name in [
        "accuracy",
        "weighted_mean_recall",
        "weighted_mean_precision",
    ] {
        let s = report.aggregate.test[name];
        assert!(s.min <= s.median && s.median <= s.max);
    }
}

#[test]
fn preprocessor_sweep_has_five_rows() {
    let variants: Vec<String> = PreprocessorKind::ALL
        .iter()
        .map(|p| p.to_string())
        .collect();
    let sweep = run_sweep(&light(), SweepAxis::Preprocessor, &variants).unwrap();
    let names: Vec<&str> = sweep.rows.iter().map(|r| r.variant.as_str()).collect();
    assert_eq!(
        names,
        ["none", "ztransform", "bootstrap", "stratified", "ecodb"]
    );
    let paired = sweep.paired.as_ref().unwrap();
    assert_eq!(paired.accuracy_differences.len(), 2);
    let text = sweep.to_text();
    assert!(text.starts_with("Pre-processing"));
    assert!(text.contains("ecodb vs none"));
}

#[test]
fn classifier_sweep_has_three_rows() {
    let variants: Vec<String> = ClassifierKind::ALL.iter().map(|c| c.to_string()).collect();
    let sweep = run_sweep(&light(), SweepAxis::Classifier, &variants).unwrap();
    assert_eq!(sweep.rows.len(), 3);
    assert!(sweep.paired.is_none());
    // Every variant sees the same splits.
    let sizes: Vec<_> = sweep
        .reports
        .iter()
        .map(|r| r.repeats[0].split_sizes)
        .collect();
    assert!(sizes.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn empty_sweep_is_a_config_error() {
    let err = run_sweep(&light(), SweepAxis::Classifier, &[]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let err = run_sweep(&light(), SweepAxis::Classifier, &["svm".to_string()]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn dropping_features_narrows_the_dataset() {
    let c = ExperimentConfig {
        drop_features: vec!["insulin".into()],
        classifier: ClassifierKind::Nb,
        ..light()
    };
    assert_eq!(load_dataset(&c).unwrap().dim(), 7);
    run_experiment(&c).unwrap();
    let bad = ExperimentConfig {
        drop_features: vec!["height".into()],
        ..light()
    };
    assert!(run_experiment(&bad).is_err());
}

#[test]
fn missing_data_file_is_a_data_error() {
    let c = ExperimentConfig {
        data_path: PathBuf::from("/nonexistent/pima.csv"),
        ..light()
    };
    let err = run_experiment(&c).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn stratified_split_preserves_class_ratio() {
    let data = load_dataset(&config()).unwrap();
    let c = ExperimentConfig {
        stratified: true,
        classifier: ClassifierKind::Nb,
        ..light()
    };
    let report = run_on_dataset(&c, &data).unwrap();
    for r in &report.repeats {
        let positives = r.test.matrix.positives() as f64 / r.test.matrix.total() as f64;
        assert!((positives - 268.0 / 768.0).abs() < 0.01, "{positives}");
    }
}
