//! `reportminer`: clean, embed, classify and query daily drilling reports.

mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use reportminer_core::classifier::{self, Label, TrainedClassifier};
use reportminer_core::corpus::{self, Report, StatsOptions};
use reportminer_core::embedding::{self, WordVectors};
use reportminer_core::mining::{self, LabelFilter, SequencePattern, WellTimeline};
use reportminer_core::synthetic;
use serde::Serialize;

use config::PipelineConfig;

#[derive(Parser, Debug)]
#[command(name = "reportminer", version, about = "Text mining for daily drilling reports")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Global seed for every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Classifier architecture.
    #[arg(long, global = true, value_parser = ["avg", "cnn", "lstm"])]
    arch: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override any config key, e.g. `--set embed.dim=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply the cleaning rules to every report; one sentence per line of text.
    Clean {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file (default: OUT/clean.jsonl).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Token counts, length histogram, top tokens and top n-grams as JSON.
    Stats {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [3, 4])]
        ngrams: Vec<usize>,
    },
    /// Train skip-gram word vectors.
    Embed {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Nearest neighbors of a token by cosine similarity.
    Neighbors {
        #[arg(long)]
        embeddings: PathBuf,
        token: String,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
    /// Train a classifier on labeled sentences and evaluate it.
    Train {
        #[arg(long)]
        labeled: Option<PathBuf>,
        #[arg(long)]
        embeddings: PathBuf,
    },
    /// Evaluate a saved classifier on a labeled file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        labeled: Option<PathBuf>,
    },
    /// Label every report sentence and write per-well timelines.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Only sentences from NPT reports.
        #[arg(long)]
        npt_only: bool,
    },
    /// Analytics over reports and timelines.
    #[command(subcommand)]
    Query(Query),
    /// Write a seeded synthetic report corpus and labeled set.
    Synth {
        #[arg(long, default_value_t = 50)]
        wells: usize,
        #[arg(long, default_value_t = 1500)]
        labeled: usize,
    },
}

#[derive(Subcommand, Debug)]
enum Query {
    /// Well counts and the NPT-based performance estimate.
    Summary(ReportsArg),
    /// Wells ranked by EVENT sentence count.
    RankWells {
        #[command(flatten)]
        timelines: TimelinesArg,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Label proportions per operator on one well.
    OperatorBehavior {
        #[command(flatten)]
        timelines: TimelinesArg,
        #[arg(long)]
        well: String,
    },
    /// Antecedent → consequent label sequences, e.g. `SYMPTOM:torque` → `ACTION`.
    Sequences {
        #[command(flatten)]
        timelines: TimelinesArg,
        #[arg(long, default_value = "SYMPTOM")]
        antecedent: String,
        #[arg(long, default_value = "ACTION")]
        consequent: String,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
    },
    /// Least-squares fit of NPT days against report count per well.
    Regression(ReportsArg),
    /// Share of each label across all timelines.
    Labels {
        #[command(flatten)]
        timelines: TimelinesArg,
    },
}

#[derive(Args, Debug)]
struct ReportsArg {
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TimelinesArg {
    /// Timeline JSON Lines written by `classify`.
    #[arg(long)]
    timelines: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("REPORTMINER_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        config.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(arch) = &cli.arch {
        config.arch = arch.parse()?;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    config.finalize();
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = resolve_config(&cli)?;
    if cli.print_config {
        print!("{}", config.render());
        return Ok(());
    }
    let Some(command) = cli.command else {
        bail!("no command given; see --help");
    };
    match command {
        Command::Clean { input, output } => cmd_clean(&config, input, output),
        Command::Stats { input, top, ngrams } => cmd_stats(&config, input, top, &ngrams),
        Command::Embed { input } => cmd_embed(&config, input),
        Command::Neighbors { embeddings, token, n } => cmd_neighbors(&embeddings, &token, n),
        Command::Train { labeled, embeddings } => cmd_train(&config, labeled, &embeddings),
        Command::Eval { model, labeled } => cmd_eval(&config, &model, labeled),
        Command::Classify { model, input, npt_only } => cmd_classify(&config, &model, input, npt_only),
        Command::Query(q) => cmd_query(&config, q),
        Command::Synth { wells, labeled } => cmd_synth(&config, wells, labeled),
    }
}

fn reports_path(config: &PipelineConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| config.reports.clone())
        .context("no reports file; pass --input or set `reports` in the config")
}

fn labeled_path(config: &PipelineConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| config.labeled.clone())
        .context("no labeled file; pass --labeled or set `labeled` in the config")
}

fn load_reports(path: &Path) -> Result<Vec<Report>> {
    let reports = corpus::ingest_reports(path)?;
    log::info!("read {} reports from {}", reports.len(), path.display());
    Ok(reports)
}

fn out_dir(config: &PipelineConfig) -> Result<&Path> {
    fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
    Ok(&config.out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    writeln!(lock)?;
    Ok(())
}

fn cmd_clean(config: &PipelineConfig, input: Option<PathBuf>, output: Option<PathBuf>) -> Result<()> {
    let reports = load_reports(&reports_path(config, input)?)?;
    let output = match output {
        Some(p) => p,
        None => out_dir(config)?.join("clean.jsonl"),
    };
    let file = File::create(&output).with_context(|| format!("creating {}", output.display()))?;
    let mut w = BufWriter::new(file);
    for report in &reports {
        let sentences: Vec<String> = corpus::segment_sentences(report).iter().map(|s| s.text()).collect();
        let cleaned = Report {
            text: sentences.join("\n"),
            ..report.clone()
        };
        serde_json::to_writer(&mut w, &cleaned)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    eprintln!("wrote {} cleaned reports to {}", reports.len(), output.display());
    Ok(())
}

#[derive(Serialize)]
struct StatsOutput {
    reports: usize,
    raw_token_count: u64,
    raw_vocab_size: usize,
    #[serde(flatten)]
    cleaned: corpus::CorpusStats,
    sentences: usize,
    ngrams: Vec<NgramTable>,
}

#[derive(Serialize)]
struct NgramTable {
    n: usize,
    top: Vec<(String, u64)>,
}

fn cmd_stats(config: &PipelineConfig, input: Option<PathBuf>, top: usize, ngrams: &[usize]) -> Result<()> {
    let reports = load_reports(&reports_path(config, input)?)?;
    let (raw_token_count, raw_vocab_size) = corpus::raw_counts(&reports);
    let sentences = corpus::segment_all(&reports);
    let output = StatsOutput {
        reports: reports.len(),
        raw_token_count,
        raw_vocab_size,
        cleaned: corpus::corpus_stats(&reports, StatsOptions::default()),
        sentences: sentences.len(),
        ngrams: ngrams
            .iter()
            .map(|&n| NgramTable {
                n,
                top: corpus::top_ngrams(&sentences, n, top),
            })
            .collect(),
    };
    print_json(&output)
}

fn cmd_embed(config: &PipelineConfig, input: Option<PathBuf>) -> Result<()> {
    let reports = load_reports(&reports_path(config, input)?)?;
    let sentences = corpus::segment_all(&reports);
    let vocab = corpus::build_vocabulary(&sentences, config.min_count)?;
    log::info!(
        "{} sentences, vocabulary of {} over {} tokens",
        sentences.len(),
        vocab.len(),
        vocab.total_tokens()
    );
    let (model, trace) = embedding::train_embeddings(&sentences, &vocab, &config.embedding)?;
    let dir = out_dir(config)?;
    let vectors_path = dir.join("embeddings.txt");
    embedding::save_embeddings(&model.word_vectors(), &vectors_path)?;
    model.save_checkpoint(&dir.join("embedding.ckpt"))?;
    fs::write(dir.join("loss.csv"), trace.to_csv())?;
    let first = trace.epoch_means.first().copied().unwrap_or(f64::NAN);
    let last = trace.epoch_means.last().copied().unwrap_or(f64::NAN);
    eprintln!(
        "wrote {} ({} x {}); mean loss {first:.4} -> {last:.4}",
        vectors_path.display(),
        vocab.len(),
        config.embedding.dim
    );
    Ok(())
}

fn cmd_neighbors(embeddings: &Path, token: &str, n: usize) -> Result<()> {
    let vectors = embedding::load_embeddings(embeddings)?;
    let neighbors = embedding::nearest_neighbors(&vectors, token, n)?;
    print_json(&neighbors)
}

fn load_vectors(path: &Path) -> Result<WordVectors> {
    embedding::load_embeddings(path).with_context(|| format!("loading embeddings {}", path.display()))
}

fn cmd_train(config: &PipelineConfig, labeled: Option<PathBuf>, embeddings: &Path) -> Result<()> {
    let labeled = classifier::load_labeled(&labeled_path(config, labeled)?)?;
    if labeled.skipped_empty > 0 {
        eprintln!(
            "skipped {} records that were empty after cleaning",
            labeled.skipped_empty
        );
    }
    let data = labeled.records;
    let vectors = load_vectors(embeddings)?;
    let kind = config.arch;

    let (train, test) = classifier::split_train_test(&data, config.train_fraction, config.seed)?;
    let mut model = classifier::train_classifier(&train, kind, &vectors, &config.train)?;
    model.embedding_path = Some(embeddings.display().to_string());
    let mut report = if test.is_empty() {
        classifier::evaluate(&model, &train)?
    } else {
        classifier::evaluate(&model, &test)?
    };
    if config.folds > 0 {
        let cv = classifier::kfold_cv(&data, config.folds, kind, &vectors, &config.train)?;
        report.fold_accuracies = cv.fold_accuracies;
        report.cv_mean_accuracy = cv.cv_mean_accuracy;
    }
    let dir = out_dir(config)?;
    model.save(&dir.join("classifier.bin"))?;
    write_json(&dir.join("eval.json"), &report)?;
    eprintln!(
        "{kind}: held-out accuracy {:.4}{}",
        report.accuracy,
        report
            .cv_mean_accuracy
            .map(|m| format!(", {}-fold mean {m:.4}", config.folds))
            .unwrap_or_default()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<TrainedClassifier> {
    TrainedClassifier::load(path).with_context(|| format!("loading classifier {}", path.display()))
}

fn cmd_eval(config: &PipelineConfig, model: &Path, labeled: Option<PathBuf>) -> Result<()> {
    let model = load_model(model)?;
    let data = classifier::load_labeled(&labeled_path(config, labeled)?)?.records;
    print_json(&classifier::evaluate(&model, &data)?)
}

fn cmd_classify(config: &PipelineConfig, model: &Path, input: Option<PathBuf>, npt_only: bool) -> Result<()> {
    let model = load_model(model)?;
    let reports = load_reports(&reports_path(config, input)?)?;
    let timelines = mining::classify_corpus(&reports, &model, npt_only)?;
    let path = out_dir(config)?.join("timelines.jsonl");
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    mining::write_timelines(&timelines, &mut w)?;
    w.flush()?;
    let entries: usize = timelines.iter().map(|t| t.entries.len()).sum();
    eprintln!(
        "labeled {entries} sentences across {} wells into {}",
        timelines.len(),
        path.display()
    );
    Ok(())
}

fn load_timelines(arg: &TimelinesArg) -> Result<Vec<WellTimeline>> {
    let file = File::open(&arg.timelines).with_context(|| format!("opening {}", arg.timelines.display()))?;
    Ok(mining::read_timelines(BufReader::new(file))?)
}

/// `LABEL` or `LABEL:substring`.
fn parse_filter(spec: &str) -> Result<LabelFilter> {
    let (label, contains) = match spec.split_once(':') {
        Some((l, c)) => (l, Some(c.to_owned())),
        None => (spec, None),
    };
    let label: Label = label
        .parse()
        .map_err(|l| anyhow::anyhow!("unknown label {l:?}; expected EVENT, SYMPTOM or ACTION"))?;
    Ok(LabelFilter { label, contains })
}

#[derive(Serialize)]
struct RegressionOutput {
    wells: usize,
    #[serde(flatten)]
    fit: mining::RegressionFit,
}

#[derive(Serialize)]
struct RankedWell {
    well_id: String,
    events: usize,
}

#[derive(Serialize)]
struct LabelShares {
    event: f64,
    symptom: f64,
    action: f64,
}

fn cmd_query(config: &PipelineConfig, query: Query) -> Result<()> {
    match query {
        Query::Summary(r) => {
            let reports = load_reports(&reports_path(config, r.input)?)?;
            print_json(&mining::field_summary(&reports)?)
        }
        Query::Regression(r) => {
            let reports = load_reports(&reports_path(config, r.input)?)?;
            let summary = mining::field_summary(&reports)?;
            let (xs, ys) = summary.duration_vs_reports();
            let fit = mining::fit_regression(&xs, &ys)?;
            print_json(&RegressionOutput { wells: xs.len(), fit })
        }
        Query::RankWells { timelines, top } => {
            let ranked: Vec<RankedWell> = mining::rank_problematic_wells(&load_timelines(&timelines)?, top)
                .into_iter()
                .map(|(well_id, events)| RankedWell { well_id, events })
                .collect();
            print_json(&ranked)
        }
        Query::OperatorBehavior { timelines, well } => {
            print_json(&mining::operator_behavior(&load_timelines(&timelines)?, &well)?)
        }
        Query::Sequences {
            timelines,
            antecedent,
            consequent,
            horizon,
        } => {
            let pattern = SequencePattern {
                antecedent: parse_filter(&antecedent)?,
                consequent: parse_filter(&consequent)?,
                horizon,
            };
            print_json(&mining::find_sequences(&load_timelines(&timelines)?, &pattern)?)
        }
        Query::Labels { timelines } => {
            let [event, symptom, action] = mining::label_distribution(&load_timelines(&timelines)?)?;
            print_json(&LabelShares { event, symptom, action })
        }
    }
}

fn cmd_synth(config: &PipelineConfig, wells: usize, labeled: usize) -> Result<()> {
    let field = synthetic::generate_field(&synthetic::FieldConfig {
        wells,
        seed: config.seed,
        ..synthetic::FieldConfig::default()
    });
    let dir = out_dir(config)?;
    let mut w = BufWriter::new(File::create(dir.join("reports.jsonl"))?);
    for r in &field.reports {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    let set = synthetic::separable_labeled_set(labeled, [0.28, 0.15, 0.57], config.seed);
    let mut tsv = String::new();
    for r in &set {
        tsv.push_str(&format!("{}\t{}\n", r.label, r.sentence.text()));
    }
    fs::write(dir.join("labeled.tsv"), tsv)?;
    eprintln!(
        "wrote {} reports and {} labeled sentences to {}",
        field.reports.len(),
        set.len(),
        dir.display()
    );
    Ok(())
}
