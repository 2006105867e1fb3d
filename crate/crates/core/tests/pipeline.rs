use motivmine::corpus::split_indices;
use motivmine::runner::{self, prepare};
use motivmine::synth::{self, SynthParams};
use motivmine::{Block, Dataset, ExperimentConfig, ModelId, Resources};

fn small() -> (Dataset, ExperimentConfig) {
    let (ds, _) = synth::generate(&SynthParams {
        n_records: 600,
        seed: 4,
        ..SynthParams::default()
    });
    let mut config = ExperimentConfig::default();
    config.set_topics(5);
    config.lda.sweeps = 40;
    config.lda.fold_in_sweeps = 10;
    config.svm.epochs = 200;
    (ds, config)
}

#[test]
fn test_part_does_not_reach_fitted_objects() {
    let (ds, config) = small();
    let resources = Resources::bundled();
    let before = prepare(&ds, &config, &resources, &Block::ALL).unwrap();

    let (_, test_idx) = split_indices(ds.len(), config.train_fraction, config.split_seed).unwrap();
    let mut blanked = ds.clone();
    for &i in &test_idx {
        let r = &mut blanked.records[i];
        r.motivation_text.clear();
        r.grades.dutch = Some(1.0);
        r.program = "NEW".into();
    }
    let after = prepare(&blanked, &config, &resources, &Block::ALL).unwrap();
    assert_eq!(before.pipeline.fingerprint(), after.pipeline.fingerprint());
    assert_eq!(before.train_blocks, after.train_blocks);
    assert_ne!(before.test_blocks, after.test_blocks);
    assert_eq!(after.unseen_programs, test_idx.len());
}

#[test]
fn block_widths_line_up() {
    let (ds, config) = small();
    let prepared = prepare(&ds, &config, &Resources::bundled(), &Block::ALL).unwrap();
    for id in ModelId::all() {
        let train = prepared.train_matrix(id).unwrap();
        let test = prepared.test_matrix(id).unwrap();
        assert_eq!(train.column_names, test.column_names);
        assert_eq!(train.len(), 450);
        assert_eq!(test.len(), 150);
    }
    assert_eq!(prepared.train_blocks[&Block::Lda].width(), 5);
}

#[test]
fn missing_block_is_an_error() {
    let (ds, config) = small();
    let prepared = prepare(&ds, &config, &Resources::bundled(), &[Block::Tfidf]).unwrap();
    assert!(prepared.train_matrix(ModelId::new(2).unwrap()).is_ok());
    assert!(prepared.train_matrix(ModelId::new(1).unwrap()).is_err());
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let (ds, config) = small();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| runner::run_all(&ds, &config, &Resources::bundled()).unwrap().to_json())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(1));
}

#[test]
fn single_experiment_matches_suite_entry() {
    let (ds, mut config) = small();
    config.model_id = ModelId::new(4).unwrap();
    let single = runner::run_experiment(&ds, &config, &Resources::bundled()).unwrap();
    let suite = runner::run_all(&ds, &config, &Resources::bundled()).unwrap();
    let entry = &suite.outcomes[3].report;
    assert_eq!(single.report.test, entry.test);
    assert_eq!(single.model.weights, suite.outcomes[3].model.weights);
    assert!(single.report.topics.is_none());
}

#[test]
fn report_json_carries_schema_version() {
    let (ds, config) = small();
    let outcome = runner::run_experiment(&ds, &config, &Resources::bundled()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&outcome.report.to_json()).unwrap();
    assert_eq!(v["schema_version"], runner::REPORT_SCHEMA_VERSION);
    assert_eq!(v["model_id"], 1);
    assert_eq!(v["n_train"], 450);
}

#[test]
fn saved_pipeline_reproduces_test_scores() {
    let (ds, mut config) = small();
    config.model_id = ModelId::new(6).unwrap();
    let outcome = runner::run_experiment(&ds, &config, &Resources::bundled()).unwrap();
    let prepared = prepare(&ds, &config, &Resources::bundled(), config.model_id.blocks()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    prepared.pipeline.save(dir.path()).unwrap();
    let loaded = runner::FittedPipeline::load(dir.path()).unwrap();
    assert_eq!(loaded.schema, prepared.pipeline.schema, "schema");
    assert_eq!(loaded.vocab, prepared.pipeline.vocab, "vocab");
    assert_eq!(loaded.topic_model, prepared.pipeline.topic_model, "lda");
    assert_eq!(loaded.liwc_scaler, prepared.pipeline.liwc_scaler, "liwc");
    assert_eq!(loaded.fingerprint(), prepared.pipeline.fingerprint());

    let (_, test_idx) = split_indices(ds.len(), config.train_fraction, config.split_seed).unwrap();
    let test = ds.subset(&test_idx);
    let scores = runner::predict(&test, &loaded, &outcome.model, &config, &Resources::bundled()).unwrap();
    assert_eq!(scores, outcome.test_predictions);
}
