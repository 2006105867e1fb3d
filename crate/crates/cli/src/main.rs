use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use motivmine::corpus::{self, load_dataset, DataFormat, LoadOptions, ProgramMap};
use motivmine::lda::{self, LdaParams};
use motivmine::runner::{self, prepare, FittedPipeline};
use motivmine::synth::{self, SynthParams};
use motivmine::textprep::TokenizedDoc;
use motivmine::{tfidf, Block, Dataset, Error, ErrorKind, ExperimentConfig, ExperimentReport, LinearModel, ModelId, Resources};

#[derive(Parser)]
#[command(name = "motivmine", version, about = "Dropout prediction from motivation statements and applicant records")]
struct Cli {
    /// Flat `key = value` experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    model_id: Option<u8>,
    /// Base seed; split, cv, lda and svm seeds derive from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// LIWC-style `.dic` file (defaults to the bundled mini dictionary).
    #[arg(long, global = true)]
    dic: Option<PathBuf>,
    /// One stopword per line (defaults to the bundled Dutch list).
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,
    #[arg(long, global = true)]
    k_topics: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// CSV or JSONL applicant records.
    #[arg(long)]
    data: PathBuf,
    /// Two-column program to discipline map.
    #[arg(long)]
    programs: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labeled dataset and its program map.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7060)]
        n: usize,
        #[arg(long, default_value_t = 0.25)]
        positive_rate: f64,
        /// Program map path (default: `programs.csv` next to the dataset).
        #[arg(long)]
        programs: Option<PathBuf>,
    },
    /// Validate a dataset and print a summary.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        /// Accept records without labels.
        #[arg(long)]
        unlabeled: bool,
    },
    /// Fit topic models for several K on the training part and print top terms.
    Topics {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,50")]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        terms: usize,
    },
    /// Fit the feature pipeline and write it with both feature matrices.
    Features {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment and save the model, pipeline and report.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score records with a directory written by `train`.
    Eval {
        #[arg(long)]
        model_dir: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Predictions TSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run all six models and write the comparison.
    Report {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            })
        }
    }
}

fn config_from(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    apply_overrides(cli, &mut config)?;
    Ok(config)
}

fn apply_overrides(cli: &Cli, config: &mut ExperimentConfig) -> Result<(), Error> {
    if let Some(id) = cli.model_id {
        config.model_id = ModelId::new(id)?;
    }
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if let Some(k) = cli.k_topics {
        config.set_topics(k);
    }
    if let Some(p) = &cli.dic {
        config.dictionary = Some(p.clone());
    }
    if let Some(p) = &cli.stopwords {
        config.stopwords = Some(p.clone());
    }
    config.validate()
}

fn load(args: &DataArgs, require_label: bool) -> Result<Dataset, Error> {
    let program_map = args.programs.as_deref().map(ProgramMap::load).transpose()?;
    let options = LoadOptions {
        require_label,
        program_map,
    };
    let ds = load_dataset(&args.data, DataFormat::from_path(&args.data), &options)?;
    info!("loaded {} records from {}", ds.len(), args.data.display());
    Ok(ds)
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Synth {
            out,
            n,
            positive_rate,
            programs,
        } => {
            if !(0.0..=1.0).contains(positive_rate) {
                return Err(Error::Config(format!("positive rate must lie in [0, 1], got {positive_rate}")));
            }
            let params = SynthParams {
                n_records: *n,
                positive_rate: *positive_rate,
                seed: cli.seed.unwrap_or(0),
                ..SynthParams::default()
            };
            let (ds, map) = synth::generate(&params);
            ds.save(out, DataFormat::from_path(out))?;
            let map_path = programs
                .clone()
                .unwrap_or_else(|| out.with_file_name("programs.csv"));
            map.save(&map_path)?;
            info!("wrote {} records to {} and the program map to {}", ds.len(), out.display(), map_path.display());
            Ok(())
        }
        Command::Ingest { data, unlabeled } => {
            let ds = load(data, !unlabeled)?;
            print!("{}", summarize(&ds));
            Ok(())
        }
        Command::Topics { data, ks, terms } => {
            let config = config_from(&cli)?;
            let resources = Resources::load(&config)?;
            topics(&load(data, false)?, &config, &resources, ks, *terms)
        }
        Command::Features { data, out } => {
            let config = config_from(&cli)?;
            let resources = Resources::load(&config)?;
            let ds = load(data, true)?;
            let prepared = prepare(&ds, &config, &resources, &Block::ALL)?;
            create_dir(out)?;
            prepared.pipeline.save(out)?;
            let train = prepared.train_matrix(config.model_id)?;
            let test = prepared.test_matrix(config.model_id)?;
            write(&out.join("columns.txt"), train.column_names.join("\n") + "\n")?;
            write(&out.join("train.tsv"), matrix_tsv(&prepared.train_ids, &prepared.train_labels, &train))?;
            write(&out.join("test.tsv"), matrix_tsv(&prepared.test_ids, &prepared.test_labels, &test))?;
            info!(
                "model {}: {} columns, {} train and {} test rows in {}",
                config.model_id,
                train.width(),
                train.len(),
                test.len(),
                out.display()
            );
            Ok(())
        }
        Command::Train { data, out } => {
            let config = config_from(&cli)?;
            let resources = Resources::load(&config)?;
            let ds = load(data, true)?;
            let prepared = prepare(&ds, &config, &resources, config.model_id.blocks())?;
            let outcome = runner::run_model(&prepared, &config, config.model_id)?;
            create_dir(out)?;
            prepared.pipeline.save(out)?;
            outcome.model.save(&out.join("model.txt"))?;
            write(&out.join("report.json"), outcome.report.to_json())?;
            write(&out.join("report.txt"), outcome.report.to_text())?;
            write(&out.join("coefficients.tsv"), runner::coefficients_tsv(&outcome.model))?;
            for (stage, secs) in &outcome.timings {
                info!("{stage}: {secs:.2}s");
            }
            if outcome.report.cv_warning {
                warn!("fold-to-fold F1 spread {:.3} exceeds {}", outcome.report.cv_f1_spread, config.cv_spread_warning);
            }
            print!("{}", outcome.report.to_text());
            Ok(())
        }
        Command::Eval { model_dir, data, out } => {
            let report_path = model_dir.join("report.json");
            let text = std::fs::read_to_string(&report_path).map_err(|e| Error::io(&report_path, e))?;
            let saved: ExperimentReport =
                serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", report_path.display())))?;
            let mut config = saved.config;
            // Only resource paths may change at evaluation time.
            if let Some(p) = &cli.dic {
                config.dictionary = Some(p.clone());
            }
            if let Some(p) = &cli.stopwords {
                config.stopwords = Some(p.clone());
            }
            config.validate()?;
            let resources = Resources::load(&config)?;
            let pipeline = FittedPipeline::load(model_dir)?;
            if pipeline.fingerprint() != saved.pipeline_fingerprint {
                return Err(Error::Format("pipeline files do not match report.json".into()));
            }
            let model = LinearModel::load(&model_dir.join("model.txt"))?;
            let ds = load(data, false)?;
            let scores = runner::predict(&ds, &pipeline, &model, &config, &resources)?;
            let mut tsv = String::from("id\tprediction\tscore\n");
            for (r, (label, score)) in ds.records.iter().zip(&scores) {
                tsv.push_str(&format!("{}\t{}\t{score:?}\n", r.id, label.code()));
            }
            match out {
                Some(p) => write(p, tsv)?,
                None => print!("{tsv}"),
            }
            if ds.records.iter().all(|r| r.label.is_some()) && !ds.is_empty() {
                let predicted: Vec<_> = scores.iter().map(|s| s.0).collect();
                let metrics = motivmine::model::evaluate(&predicted, &ds.labels()?)?;
                eprint!("{metrics}");
            }
            Ok(())
        }
        Command::Report { data, out } => {
            let config = config_from(&cli)?;
            let resources = Resources::load(&config)?;
            let ds = load(data, true)?;
            let start = Instant::now();
            let suite = runner::run_all(&ds, &config, &resources)?;
            create_dir(out)?;
            write(&out.join("summary.tsv"), suite.summary_table())?;
            write(&out.join("suite.json"), suite.to_json())?;
            for o in &suite.outcomes {
                let id = o.report.model_id;
                write(&out.join(format!("model{id}.json")), o.report.to_json())?;
                write(&out.join(format!("model{id}.txt")), o.report.to_text())?;
                write(&out.join(format!("coefficients_model{id}.tsv")), runner::coefficients_tsv(&o.model))?;
                if o.report.cv_warning {
                    warn!("model {id}: fold-to-fold F1 spread {:.3}", o.report.cv_f1_spread);
                }
            }
            info!("six models in {:.1?}", start.elapsed());
            print!("{}", suite.summary_table());
            Ok(())
        }
    }
}

fn summarize(ds: &Dataset) -> String {
    let n = ds.len();
    let dropouts = ds.records.iter().filter(|r| r.label.is_some_and(|l| l.is_dropout())).count();
    let unlabeled = ds.records.iter().filter(|r| r.label.is_none()).count();
    let missing = |f: &dyn Fn(&motivmine::StudentRecord) -> bool| ds.records.iter().filter(|r| f(r)).count();
    let words: usize = ds.records.iter().map(|r| r.motivation_text.split_whitespace().count()).sum();
    let mut programs: Vec<&str> = ds.records.iter().map(|r| r.program.as_str()).collect();
    programs.sort_unstable();
    programs.dedup();
    let mut out = String::new();
    out.push_str(&format!("records\t{n}\n"));
    out.push_str(&format!("dropout\t{dropouts}\n"));
    out.push_str(&format!("retention\t{}\n", n - dropouts - unlabeled));
    out.push_str(&format!("unlabeled\t{unlabeled}\n"));
    out.push_str(&format!("programs\t{}\n", programs.len()));
    out.push_str(&format!("hsgpa_missing\t{}\n", missing(&|r| r.grades.hsgpa().is_none())));
    out.push_str(&format!("ability_belief_missing\t{}\n", missing(&|r| r.ability_belief.is_none())));
    out.push_str(&format!("interest_missing\t{}\n", missing(&|r| r.interest.is_none())));
    out.push_str(&format!("gender_missing\t{}\n", missing(&|r| r.gender.is_none())));
    out.push_str(&format!("empty_texts\t{}\n", missing(&|r| r.motivation_text.trim().is_empty())));
    let mean = if n == 0 { 0.0 } else { words as f64 / n as f64 };
    out.push_str(&format!("mean_words\t{mean:.1}\n"));
    out
}

fn topics(
    ds: &Dataset,
    config: &ExperimentConfig,
    resources: &Resources,
    ks: &[usize],
    n_terms: usize,
) -> Result<(), Error> {
    let (train_idx, _) = corpus::split_indices(ds.len(), config.train_fraction, config.split_seed)?;
    let docs: Vec<TokenizedDoc> = train_idx
        .iter()
        .map(|&i| {
            let r = &ds.records[i];
            TokenizedDoc::from_text(r.id.clone(), &r.motivation_text, &resources.stopwords)
        })
        .collect();
    let vocab = tfidf::build_vocabulary(&docs, config.min_df)?;
    for &k in ks {
        let params = LdaParams {
            k,
            alpha: 50.0 / k.max(1) as f64,
            ..config.lda
        };
        let start = Instant::now();
        let state = lda::fit(&docs, &vocab, &params)?;
        println!(
            "K = {k} (log-likelihood {:.1}, {:.1?})",
            state.log_likelihood(),
            start.elapsed()
        );
        for (i, terms) in state.top_terms(n_terms).topics.iter().enumerate() {
            let words: Vec<&str> = terms.iter().map(|(t, _)| t.as_str()).collect();
            println!("  {:>2}: {}", i + 1, words.join(" "));
        }
        println!();
    }
    Ok(())
}

/// One row per record: id, label code, then sparse `column:value` pairs.
fn matrix_tsv(ids: &[String], labels: &[motivmine::Label], x: &motivmine::FeatureMatrix) -> String {
    let mut out = String::from("id\tlabel\tfeatures\n");
    for ((id, label), row) in ids.iter().zip(labels).zip(&x.rows) {
        let pairs: Vec<String> = row.entries().iter().map(|(j, v)| format!("{j}:{v:?}")).collect();
        out.push_str(&format!("{id}\t{}\t{}\n", label.code(), pairs.join(" ")));
    }
    out
}
