//! The experiment protocol: split, fit every feature transformer on the
//! training part only, cross-validate on the training part, train the final
//! model, evaluate on the held-out part and report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Block, ExperimentConfig, ModelId};
use crate::corpus::{self, Dataset, FeatureSchema, Label};
use crate::error::{Error, Result, StageExt};
use crate::features::{ColumnScaler, FeatureBlock, FeatureMatrix};
use crate::lda::{self, TopicModel, TopicSummary};
use crate::lexicon::{self, Lexicon};
use crate::model::{self, LinearModel, MetricsReport};
use crate::textprep::{StopwordList, TokenizedDoc};
use crate::tfidf::{self, Vocabulary};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Dictionary and stopword list used by an experiment.
#[derive(Debug, Clone)]
pub struct Resources {
    pub stopwords: StopwordList,
    pub lexicon: Lexicon,
}

impl Resources {
    /// Loads configured resources, falling back to the bundled ones.
    pub fn load(config: &ExperimentConfig) -> Result<Resources> {
        let stopwords = match &config.stopwords {
            Some(p) => StopwordList::load(p)?,
            None => StopwordList::bundled_dutch(),
        };
        let lexicon = match &config.dictionary {
            Some(p) => Lexicon::load(p)?,
            None => Lexicon::bundled_mini(),
        };
        Ok(Resources { stopwords, lexicon })
    }

    pub fn bundled() -> Resources {
        Resources {
            stopwords: StopwordList::bundled_dutch(),
            lexicon: Lexicon::bundled_mini(),
        }
    }
}

/// Transformers fitted on the training part.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub schema: Option<FeatureSchema>,
    pub vocab: Option<Vocabulary>,
    pub topic_model: Option<TopicModel>,
    pub liwc_scaler: Option<ColumnScaler>,
    /// Dictionary columns kept in the liwc block.
    pub liwc_columns: Vec<String>,
}

impl FittedPipeline {
    /// SHA-256 over every fitted constant.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        if let Some(s) = &self.schema {
            h.update(serde_json::to_vec(s).expect("schema serializes"));
        }
        if let Some(v) = &self.vocab {
            h.update(v.to_text().as_bytes());
        }
        if let Some(m) = &self.topic_model {
            h.update(m.to_text().as_bytes());
        }
        if let Some(s) = &self.liwc_scaler {
            h.update(serde_json::to_vec(s).expect("scaler serializes"));
        }
        h.update(self.liwc_columns.join("\t").as_bytes());
        hex::encode(h.finalize())
    }

    /// Applies every fitted component to new records. Returns the blocks and
    /// the number of records whose program was not seen in training.
    pub fn transform(
        &self,
        dataset: &Dataset,
        docs: &[TokenizedDoc],
        lexicon: &Lexicon,
        fold_in_sweeps: usize,
        seed: u64,
    ) -> Result<(BTreeMap<Block, FeatureBlock>, usize)> {
        let mut blocks = BTreeMap::new();
        let mut unseen = 0;
        if let Some(schema) = &self.schema {
            let applied = corpus::encode_structured(dataset, Some(schema));
            unseen = applied.unseen_programs;
            blocks.insert(Block::Structured, applied.block);
        }
        if let Some(vocab) = &self.vocab {
            blocks.insert(Block::Tfidf, tfidf::transform_block(docs, vocab));
        }
        if let Some(model) = &self.topic_model {
            blocks.insert(Block::Lda, lda::fold_in_block(model, docs, fold_in_sweeps, seed));
        }
        if let Some(scaler) = &self.liwc_scaler {
            let mut raw = lexicon::extract_block(docs, lexicon);
            if raw.column_names != self.liwc_columns {
                raw = select_columns(raw, &self.liwc_columns)?;
            }
            blocks.insert(Block::Liwc, scaler.apply(&raw));
        }
        Ok((blocks, unseen))
    }

    /// Writes `schema.json`, `vocab.tsv`, `lda.txt` and `liwc.json` for the
    /// components that were fitted.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        if let Some(s) = &self.schema {
            write(SCHEMA_FILE, serde_json::to_string_pretty(s).expect("schema serializes"))?;
        }
        if let Some(v) = &self.vocab {
            write(VOCAB_FILE, v.to_text())?;
        }
        if let Some(m) = &self.topic_model {
            write(LDA_FILE, m.to_text())?;
        }
        if let Some(scaler) = &self.liwc_scaler {
            let saved = SavedLiwc {
                columns: self.liwc_columns.clone(),
                scaler: scaler.clone(),
            };
            write(LIWC_FILE, serde_json::to_string_pretty(&saved).expect("scaler serializes"))?;
        }
        Ok(())
    }

    /// Reads whatever [`FittedPipeline::save`] wrote; absent files leave the
    /// component unset.
    pub fn load(dir: &Path) -> Result<FittedPipeline> {
        let read = |name: &str| -> Result<Option<String>> {
            let p = dir.join(name);
            if p.exists() {
                std::fs::read_to_string(&p).map(Some).map_err(|e| Error::io(&p, e))
            } else {
                Ok(None)
            }
        };
        let json_err = |name: &str, e: serde_json::Error| Error::Format(format!("{name}: {e}"));
        let schema = read(SCHEMA_FILE)?
            .map(|t| serde_json::from_str(&t).map_err(|e| json_err(SCHEMA_FILE, e)))
            .transpose()?;
        let vocab = read(VOCAB_FILE)?.map(|t| Vocabulary::from_text(&t)).transpose()?;
        let topic_model = match (read(LDA_FILE)?, &vocab) {
            (Some(t), Some(v)) => Some(TopicModel::from_text(&t, v.clone())?),
            (Some(_), None) => return Err(Error::Format(format!("{LDA_FILE} needs {VOCAB_FILE}"))),
            (None, _) => None,
        };
        let liwc: Option<SavedLiwc> = read(LIWC_FILE)?
            .map(|t| serde_json::from_str(&t).map_err(|e| json_err(LIWC_FILE, e)))
            .transpose()?;
        let (liwc_columns, liwc_scaler) = match liwc {
            Some(l) => (l.columns, Some(l.scaler)),
            None => (Vec::new(), None),
        };
        Ok(FittedPipeline {
            schema,
            vocab,
            topic_model,
            liwc_scaler,
            liwc_columns,
        })
    }
}

pub const SCHEMA_FILE: &str = "schema.json";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const LDA_FILE: &str = "lda.txt";
pub const LIWC_FILE: &str = "liwc.json";

#[derive(Serialize, Deserialize)]
struct SavedLiwc {
    columns: Vec<String>,
    scaler: ColumnScaler,
}

/// Feature blocks for both parts of one split.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub train_labels: Vec<Label>,
    pub test_labels: Vec<Label>,
    pub train_docs: Vec<TokenizedDoc>,
    pub test_docs: Vec<TokenizedDoc>,
    pub train_blocks: BTreeMap<Block, FeatureBlock>,
    pub test_blocks: BTreeMap<Block, FeatureBlock>,
    pub pipeline: FittedPipeline,
    pub topics: Option<TopicSummary>,
    pub unseen_programs: usize,
    pub timings: Vec<(String, f64)>,
}

impl PreparedData {
    fn matrix(blocks: &BTreeMap<Block, FeatureBlock>, model_id: ModelId) -> Result<FeatureMatrix> {
        let selected: Vec<&FeatureBlock> = model_id
            .blocks()
            .iter()
            .map(|b| {
                blocks
                    .get(b)
                    .ok_or_else(|| Error::InvalidArgument(format!("feature block `{}` was not prepared", b.name())))
            })
            .collect::<Result<_>>()?;
        FeatureMatrix::from_blocks(&selected)
    }

    pub fn train_matrix(&self, model_id: ModelId) -> Result<FeatureMatrix> {
        Self::matrix(&self.train_blocks, model_id)
    }

    pub fn test_matrix(&self, model_id: ModelId) -> Result<FeatureMatrix> {
        Self::matrix(&self.test_blocks, model_id)
    }
}

/// Concatenates the blocks a model id calls for, in canonical order, with
/// block-prefixed column names.
pub fn assemble_features(model_id: ModelId, blocks: &BTreeMap<Block, FeatureBlock>) -> Result<FeatureMatrix> {
    PreparedData::matrix(blocks, model_id)
}

fn tokenize_all(dataset: &Dataset, stopwords: &StopwordList) -> Vec<TokenizedDoc> {
    dataset
        .records
        .par_iter()
        .map(|r| TokenizedDoc::from_text(r.id.clone(), &r.motivation_text, stopwords))
        .collect()
}

fn select_columns(block: FeatureBlock, keep: &[String]) -> Result<FeatureBlock> {
    let idx: Vec<usize> = keep
        .iter()
        .map(|k| {
            block
                .column_names
                .iter()
                .position(|c| c == k)
                .ok_or_else(|| Error::Config(format!("dictionary has no feature `{k}`")))
        })
        .collect::<Result<_>>()?;
    let rows = block
        .rows
        .iter()
        .map(|r| {
            let dense = r.to_dense();
            crate::features::SparseVector::from_dense(&idx.iter().map(|&i| dense[i]).collect::<Vec<_>>())
        })
        .collect();
    Ok(FeatureBlock::new(block.block_name, keep.to_vec(), rows))
}

/// Splits `dataset` and builds the requested blocks. Every transformer is
/// fitted on training records only.
pub fn prepare(
    dataset: &Dataset,
    config: &ExperimentConfig,
    resources: &Resources,
    needed: &[Block],
) -> Result<PreparedData> {
    config.validate()?;
    let mut timings = Vec::new();
    let clock = Instant::now();
    let labels = dataset.labels().stage("split")?;
    let (train_idx, test_idx) = corpus::split_indices(dataset.len(), config.train_fraction, config.split_seed).stage("split")?;
    let train = dataset.subset(&train_idx);
    let test = dataset.subset(&test_idx);
    let train_labels: Vec<Label> = train_idx.iter().map(|&i| labels[i]).collect();
    let test_labels: Vec<Label> = test_idx.iter().map(|&i| labels[i]).collect();

    let train_docs = tokenize_all(&train, &resources.stopwords);
    let test_docs = tokenize_all(&test, &resources.stopwords);
    timings.push(("tokenize".to_string(), clock.elapsed().as_secs_f64()));

    let mut pipeline = FittedPipeline {
        schema: None,
        vocab: None,
        topic_model: None,
        liwc_scaler: None,
        liwc_columns: Vec::new(),
    };
    let mut train_blocks = BTreeMap::new();
    let mut topics = None;
    let wants = |b: Block| needed.contains(&b);

    if wants(Block::Structured) {
        let t = Instant::now();
        let fitted = corpus::encode_structured(&train, None);
        train_blocks.insert(Block::Structured, fitted.block);
        pipeline.schema = Some(fitted.schema);
        timings.push(("structured".into(), t.elapsed().as_secs_f64()));
    }

    if wants(Block::Tfidf) || wants(Block::Lda) {
        let t = Instant::now();
        let vocab = tfidf::build_vocabulary(&train_docs, config.min_df).stage("vocabulary")?;
        if wants(Block::Tfidf) {
            train_blocks.insert(Block::Tfidf, tfidf::transform_block(&train_docs, &vocab));
        }
        timings.push(("tfidf".into(), t.elapsed().as_secs_f64()));
        if wants(Block::Lda) {
            let t = Instant::now();
            let state = lda::fit(&train_docs, &vocab, &config.lda).stage("lda")?;
            train_blocks.insert(Block::Lda, state.feature_block());
            topics = Some(state.top_terms(config.top_terms_per_topic));
            pipeline.topic_model = Some(state.model);
            timings.push(("lda".into(), t.elapsed().as_secs_f64()));
        }
        pipeline.vocab = Some(vocab);
    }

    if wants(Block::Liwc) {
        let t = Instant::now();
        let mut train_raw = lexicon::extract_block(&train_docs, &resources.lexicon);
        if let Some(keep) = &config.liwc_columns {
            train_raw = select_columns(train_raw, keep).stage("liwc")?;
        }
        let scaler = ColumnScaler::fit(&train_raw);
        train_blocks.insert(Block::Liwc, scaler.apply(&train_raw));
        pipeline.liwc_columns = train_raw.column_names.clone();
        pipeline.liwc_scaler = Some(scaler);
        timings.push(("liwc".into(), t.elapsed().as_secs_f64()));
    }

    // The test part only ever passes through the fitted pipeline.
    let t = Instant::now();
    let (mut test_blocks, unseen_programs) = pipeline
        .transform(&test, &test_docs, &resources.lexicon, config.lda.fold_in_sweeps, config.lda.seed)
        .stage("transform")?;
    // A vocabulary fitted only for the topic model does not make a tfidf block.
    test_blocks.retain(|b, _| train_blocks.contains_key(b));
    timings.push(("transform".into(), t.elapsed().as_secs_f64()));

    Ok(PreparedData {
        train_ids: train.records.iter().map(|r| r.id.clone()).collect(),
        test_ids: test.records.iter().map(|r| r.id.clone()).collect(),
        train_labels,
        test_labels,
        train_docs,
        test_docs,
        train_blocks,
        test_blocks,
        pipeline,
        topics,
        unseen_programs,
        timings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermGroup {
    pub name: String,
    pub documents: usize,
    pub terms: Vec<(String, usize)>,
}

/// Most frequent terms among correctly and incorrectly predicted dropouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopTermsReport {
    pub n: usize,
    pub correct_dropout: Option<TermGroup>,
    pub incorrect_dropout: Option<TermGroup>,
    /// Shared terms over the shorter list's length; absent if a group is empty.
    pub overlap: Option<f64>,
    pub notes: Vec<String>,
}

fn most_frequent<'a>(docs: impl Iterator<Item = &'a TokenizedDoc>, n: usize) -> (usize, Vec<(String, usize)>) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut n_docs = 0;
    for d in docs {
        n_docs += 1;
        for t in &d.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    (n_docs, ranked)
}

pub fn compare_top_terms(
    test_docs: &[TokenizedDoc],
    predictions: &[Label],
    truth: &[Label],
    n: usize,
) -> Result<TopTermsReport> {
    if test_docs.len() != predictions.len() || predictions.len() != truth.len() {
        return Err(Error::Dimension {
            expected: test_docs.len(),
            got: predictions.len().min(truth.len()),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one term".into()));
    }
    let group = |want_truth: Label, name: &str| {
        let docs = test_docs
            .iter()
            .zip(predictions.iter().zip(truth))
            .filter(|(_, (&p, &t))| p == Label::Dropout && t == want_truth)
            .map(|(d, _)| d);
        let (documents, terms) = most_frequent(docs, n);
        (documents > 0).then(|| TermGroup {
            name: name.to_string(),
            documents,
            terms,
        })
    };
    let correct = group(Label::Dropout, "correctly predicted dropout");
    let incorrect = group(Label::Retention, "incorrectly predicted dropout");
    let mut notes = Vec::new();
    if correct.is_none() {
        notes.push("no correctly predicted dropouts".to_string());
    }
    if incorrect.is_none() {
        notes.push("no incorrectly predicted dropouts".to_string());
    }
    let overlap = match (&correct, &incorrect) {
        (Some(a), Some(b)) => {
            let denom = a.terms.len().min(b.terms.len());
            let shared = a.terms.iter().filter(|(t, _)| b.terms.iter().any(|(u, _)| u == t)).count();
            Some(if denom == 0 { 0.0 } else { shared as f64 / denom as f64 })
        }
        _ => None,
    };
    Ok(TopTermsReport {
        n,
        correct_dropout: correct,
        incorrect_dropout: incorrect,
        overlap,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub epochs: usize,
    pub objective: f64,
    pub converged: bool,
}

/// Everything in here is a pure function of dataset, config and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub model_id: ModelId,
    pub blocks: Vec<Block>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub pipeline_fingerprint: String,
    pub unseen_programs: usize,
    pub cv_folds: Vec<MetricsReport>,
    pub cv_f1_spread: f64,
    pub cv_warning: bool,
    pub test: MetricsReport,
    pub optimizer: OptimizerSummary,
    pub top_coefficients: Vec<(String, f64)>,
    pub topics: Option<TopicSummary>,
    pub top_terms: TopTermsReport,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let blocks: Vec<&str> = self.blocks.iter().map(|b| b.name()).collect();
        writeln!(out, "Model {} [{}]", self.model_id, blocks.join(" + ")).unwrap();
        writeln!(
            out,
            "train {} / test {} records, {} features",
            self.n_train, self.n_test, self.n_features
        )
        .unwrap();
        writeln!(out, "\nCross-validation (weighted f1 per fold):").unwrap();
        let f1s: Vec<String> = self.cv_folds.iter().map(|m| format!("{:.3}", m.total.f1)).collect();
        writeln!(out, "  {}  (spread {:.3}{})", f1s.join(" "), self.cv_f1_spread, if self.cv_warning { ", WARNING" } else { "" }).unwrap();
        writeln!(out, "\nTest set:\n{}", self.test).unwrap();
        writeln!(
            out,
            "optimizer: {} epochs, objective {:.6}, converged {}",
            self.optimizer.epochs, self.optimizer.objective, self.optimizer.converged
        )
        .unwrap();
        writeln!(out, "\nTop coefficients (+ dropout, - retention):").unwrap();
        for (name, w) in &self.top_coefficients {
            writeln!(out, "  {w:+.4}  {name}").unwrap();
        }
        if let Some(topics) = &self.topics {
            writeln!(out, "\nTopics:").unwrap();
            for (k, terms) in topics.topics.iter().enumerate() {
                let words: Vec<&str> = terms.iter().map(|(t, _)| t.as_str()).collect();
                writeln!(out, "  {:>2}: {}", k + 1, words.join(", ")).unwrap();
            }
        }
        writeln!(out, "\nTop-{} terms of predicted dropouts:", self.top_terms.n).unwrap();
        for g in [&self.top_terms.correct_dropout, &self.top_terms.incorrect_dropout].into_iter().flatten() {
            let words: Vec<&str> = g.terms.iter().take(15).map(|(t, _)| t.as_str()).collect();
            writeln!(out, "  {} ({} docs): {} ...", g.name, g.documents, words.join(", ")).unwrap();
        }
        match self.top_terms.overlap {
            Some(o) => writeln!(out, "  overlap {o:.2}").unwrap(),
            None => writeln!(out, "  {}", self.top_terms.notes.join("; ")).unwrap(),
        }
        out
    }
}

/// Result of one experiment: the reproducible report plus the trained model
/// and wall-clock timings, which are kept out of the report.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub model: LinearModel,
    pub test_predictions: Vec<(Label, f64)>,
    pub timings: Vec<(String, f64)>,
}

/// Trains and evaluates one model id on already prepared data.
pub fn run_model(prepared: &PreparedData, config: &ExperimentConfig, model_id: ModelId) -> Result<ExperimentOutcome> {
    let clock = Instant::now();
    let x_train = prepared.train_matrix(model_id).stage("assemble")?;
    let x_test = prepared.test_matrix(model_id).stage("assemble")?;
    let y_train = &prepared.train_labels;

    let folds = corpus::kfold_indices(x_train.len(), config.cv_folds, config.cv_seed).stage("cross-validation")?;
    let cv_folds: Vec<MetricsReport> = folds
        .par_iter()
        .map(|fold| {
            let x = x_train.select_rows(&fold.train);
            let y: Vec<Label> = fold.train.iter().map(|&i| y_train[i]).collect();
            let weights = model::class_weights(&y)?;
            let (mut m, _) = model::train(&x, &y, weights, &config.svm)?;
            m.threshold = config.threshold;
            let xv = x_train.select_rows(&fold.validation);
            let yv: Vec<Label> = fold.validation.iter().map(|&i| y_train[i]).collect();
            let pred: Vec<Label> = m.predict_all(&xv)?.into_iter().map(|p| p.0).collect();
            model::evaluate(&pred, &yv)
        })
        .collect::<Result<_>>()
        .stage("cross-validation")?;
    let cv_timing = clock.elapsed().as_secs_f64();
    let f1s = cv_folds.iter().map(|m| m.total.f1);
    let cv_f1_spread = f1s.clone().fold(f64::MIN, f64::max) - f1s.fold(f64::MAX, f64::min);
    let cv_warning = cv_f1_spread > config.cv_spread_warning;
    if cv_warning {
        log::warn!("model {model_id}: cross-validation f1 spread {cv_f1_spread:.3} exceeds {}", config.cv_spread_warning);
    }

    let t = Instant::now();
    let weights = model::class_weights(y_train).stage("train")?;
    let (mut fitted, _) = model::train(&x_train, y_train, weights, &config.svm).stage("train")?;
    fitted.threshold = config.threshold;
    let train_timing = t.elapsed().as_secs_f64();

    let test_predictions = fitted.predict_all(&x_test).stage("evaluate")?;
    let pred: Vec<Label> = test_predictions.iter().map(|p| p.0).collect();
    let test = model::evaluate(&pred, &prepared.test_labels).stage("evaluate")?;
    let top_terms = compare_top_terms(&prepared.test_docs, &pred, &prepared.test_labels, config.error_analysis_terms)
        .stage("error analysis")?;

    let uses_lda = model_id.blocks().contains(&Block::Lda);
    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: ExperimentConfig {
            model_id,
            ..config.clone()
        },
        model_id,
        blocks: model_id.blocks().to_vec(),
        n_train: x_train.len(),
        n_test: x_test.len(),
        n_features: x_train.width(),
        pipeline_fingerprint: prepared.pipeline.fingerprint(),
        unseen_programs: prepared.unseen_programs,
        cv_folds,
        cv_f1_spread,
        cv_warning,
        test,
        optimizer: OptimizerSummary {
            epochs: fitted.epochs,
            objective: fitted.objective,
            converged: fitted.converged,
        },
        top_coefficients: model::top_coefficients(&fitted, config.top_coefficients),
        topics: if uses_lda { prepared.topics.clone() } else { None },
        top_terms,
    };
    let mut timings = prepared.timings.clone();
    timings.push(("cross-validation".into(), cv_timing));
    timings.push(("train".into(), train_timing));
    Ok(ExperimentOutcome {
        report,
        model: fitted,
        test_predictions,
        timings,
    })
}

pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig, resources: &Resources) -> Result<ExperimentOutcome> {
    let prepared = prepare(dataset, config, resources, config.model_id.blocks())?;
    run_model(&prepared, config, config.model_id)
}

/// Six-model comparison sharing one split and one set of fitted blocks.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub outcomes: Vec<ExperimentOutcome>,
    /// Weighted metrics of always predicting the majority class on the test part.
    pub majority_baseline: MetricsReport,
}

impl SuiteOutcome {
    pub fn summary_table(&self) -> String {
        let mut out = String::from(MetricsReport::table_header());
        out.push('\n');
        for o in &self.outcomes {
            out.push_str(&o.report.test.table_row(&o.report.model_id.to_string()));
            out.push('\n');
        }
        out.push_str(&self.majority_baseline.table_row("majority"));
        out.push('\n');
        out
    }

    /// Deterministic JSON covering all six reports and the baseline.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Suite<'a> {
            schema_version: u32,
            majority_baseline: &'a MetricsReport,
            reports: Vec<&'a ExperimentReport>,
        }
        serde_json::to_string_pretty(&Suite {
            schema_version: REPORT_SCHEMA_VERSION,
            majority_baseline: &self.majority_baseline,
            reports: self.outcomes.iter().map(|o| &o.report).collect(),
        })
        .expect("suite serializes")
    }
}

pub fn majority_baseline(train_labels: &[Label], test_labels: &[Label]) -> Result<MetricsReport> {
    let dropouts = train_labels.iter().filter(|l| l.is_dropout()).count();
    let majority = if 2 * dropouts > train_labels.len() { Label::Dropout } else { Label::Retention };
    model::evaluate(&vec![majority; test_labels.len()], test_labels)
}

pub fn run_all(dataset: &Dataset, config: &ExperimentConfig, resources: &Resources) -> Result<SuiteOutcome> {
    let prepared = prepare(dataset, config, resources, &Block::ALL)?;
    let outcomes = ModelId::all()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&id| run_model(&prepared, config, id))
        .collect::<Result<Vec<_>>>()?;
    let majority_baseline = majority_baseline(&prepared.train_labels, &prepared.test_labels)?;
    Ok(SuiteOutcome {
        outcomes,
        majority_baseline,
    })
}

/// Scores new records with a saved pipeline and model. Fold-in uses the
/// configured sweeps and LDA seed, as during training.
pub fn predict(
    dataset: &Dataset,
    pipeline: &FittedPipeline,
    model: &LinearModel,
    config: &ExperimentConfig,
    resources: &Resources,
) -> Result<Vec<(Label, f64)>> {
    let docs = tokenize_all(dataset, &resources.stopwords);
    let (blocks, _) = pipeline
        .transform(dataset, &docs, &resources.lexicon, config.lda.fold_in_sweeps, config.lda.seed)
        .stage("transform")?;
    let x = assemble_features(config.model_id, &blocks).stage("assemble")?;
    if x.column_names != model.column_names {
        return Err(Error::Format("saved model and pipeline produce different feature columns".into()));
    }
    model.predict_all(&x).stage("predict")
}

/// Plot-ready table of every signed coefficient, strongest first.
pub fn coefficients_tsv(model: &LinearModel) -> String {
    let mut out = String::from("rank\tfeature\tcoefficient\tdirection\n");
    for (i, (name, w)) in model::top_coefficients(model, model.weights.len()).into_iter().enumerate() {
        let direction = if w > 0.0 {
            "dropout"
        } else if w < 0.0 {
            "retention"
        } else {
            "none"
        };
        writeln!(out, "{}\t{name}\t{w:?}\t{direction}", i + 1).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &[&str]) -> TokenizedDoc {
        TokenizedDoc {
            record_id: String::new(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            unfiltered: vec![],
            raw_sentence_count: 1,
        }
    }

    #[test]
    fn overlap_extremes() {
        use Label::*;
        let docs = vec![doc(&["a", "b"]), doc(&["a", "b"])];
        let r = compare_top_terms(&docs, &[Dropout, Dropout], &[Dropout, Retention], 100).unwrap();
        assert_eq!(r.overlap, Some(1.0));
        let docs = vec![doc(&["a", "b"]), doc(&["c", "d"])];
        let r = compare_top_terms(&docs, &[Dropout, Dropout], &[Dropout, Retention], 100).unwrap();
        assert_eq!(r.overlap, Some(0.0));
    }

    #[test]
    fn empty_group_is_noted() {
        use Label::*;
        let docs = vec![doc(&["a"]), doc(&["b"])];
        let r = compare_top_terms(&docs, &[Dropout, Retention], &[Dropout, Retention], 10).unwrap();
        assert!(r.incorrect_dropout.is_none());
        assert_eq!(r.overlap, None);
        assert_eq!(r.correct_dropout.unwrap().terms, vec![("a".to_string(), 1)]);
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn frequency_ties_are_lexicographic() {
        let docs = [doc(&["b", "a", "c", "c"])];
        let (_, terms) = most_frequent(docs.iter(), 2);
        assert_eq!(terms, vec![("c".to_string(), 2), ("a".to_string(), 1)]);
    }

    #[test]
    fn assemble_width_is_sum_of_blocks() {
        use crate::features::SparseVector;
        let mut blocks = BTreeMap::new();
        for (b, w) in [(Block::Structured, 3), (Block::Tfidf, 5), (Block::Lda, 2), (Block::Liwc, 4)] {
            blocks.insert(
                b,
                FeatureBlock::new(b.name(), (0..w).map(|i| format!("c{i}")).collect(), vec![SparseVector::zeros(w); 2]),
            );
        }
        for id in ModelId::all() {
            let m = assemble_features(id, &blocks).unwrap();
            let expected: usize = id.blocks().iter().map(|b| blocks[b].width()).sum();
            assert_eq!(m.width(), expected);
            let prefixes: Vec<&str> = id.blocks().iter().map(|b| b.name()).collect();
            assert!(m.column_names.iter().all(|c| prefixes.iter().any(|p| c.starts_with(p))));
        }
        blocks.remove(&Block::Lda);
        assert!(assemble_features(ModelId::new(3).unwrap(), &blocks).is_err());
    }
}
