use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use screeneval_core::corpus::{
    corpus_stats, is_known_key, partition_speakers, synth_corpus, Corpus, Partition, Session, Split,
};
use screeneval_core::metrics::{auc, delong_variance, eer, roc_curve, sensitivity_specificity_at, ScoredSample};
use screeneval_core::robustness::{
    render_report, roc_overlay_export, subset_auc_report, ComparisonMode, ModelScores, ReportFormat, ReportOptions,
};

use crate::checkpoint;
use crate::config::{ModeName, ToolConfig};
use crate::features::{check_session_id, load_session, write_features, FeatureError, FeatureKind};
use crate::formats::{
    latent_to_csv, parse_model_list, partition_to_csv, read_latent, read_partition, read_references, read_scores,
    read_sessions, scores_to_csv, sessions_to_jsonl, FormatError,
};
use crate::manifest::{digest_all, digest_path, manifest_path, now_rfc3339, RunManifest};
use crate::output::OutputSet;
use crate::pipeline::{featurize_all, score_all, train_model, with_pool, FeaturizeOptions, PipelineError, Source};

#[derive(Debug, Parser)]
#[command(name = "screeneval", version, about = "Depression-screening evaluation toolkit")]
pub struct Cli {
    /// Seed for every random stream; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration, or a run manifest to repeat.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Filterbank,
    Text,
}

impl From<KindArg> for FeatureKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Filterbank => FeatureKind::Filterbank,
            KindArg::Text => FeatureKind::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Tsv,
    Md,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    OneVsRest,
    AllPairs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus: sessions.jsonl and latent.csv.
    Synth,
    /// Session count, hours and words per split and class.
    Stats {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        partition: PathBuf,
    },
    /// Speaker-disjoint train/test split.
    Partition {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Per-session feature files under <out>/features.
    Featurize {
        #[arg(long)]
        sessions: PathBuf,
        /// Render synthetic audio or text from these latent values instead
        /// of reading audio_ref / transcript_ref.
        #[arg(long)]
        latent: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "filterbank")]
        kind: KindArg,
    },
    /// Train on the train split and write model.sevm.
    Train {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Shuffle training labels across sessions (null control).
        #[arg(long)]
        permute_labels: bool,
    },
    /// Score sessions with a trained model into scores.csv.
    Score {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        split: SplitArg,
    },
    /// AUC, EER and sensitivity/specificity of a scores file.
    Evaluate {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// Restrict to the test split of this partition.
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Operating threshold; defaults to the EER threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Per-subset AUC report with significance flags and ROC overlays.
    Robustness {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        /// name=scores.csv,...
        #[arg(long)]
        models: String,
        /// Comma-separated metadata keys.
        #[arg(long)]
        keys: Option<String>,
        #[arg(long)]
        min_count: Option<usize>,
        #[arg(long, value_enum, default_value = "tsv")]
        format: FormatArg,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// label,sensitivity,specificity CSV of reference operating points.
        #[arg(long)]
        references: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Stats { .. } => "stats",
            Command::Partition { .. } => "partition",
            Command::Featurize { .. } => "featurize",
            Command::Train { .. } => "train",
            Command::Score { .. } => "score",
            Command::Evaluate { .. } => "evaluate",
            Command::Robustness { .. } => "robustness",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        runtime(e)
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr, results to stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, args) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Context shared by every command: resolved configuration, recorded
/// inputs and seeds, and the output set.
struct Run {
    command: &'static str,
    argv: Vec<String>,
    config: ToolConfig,
    started_at: String,
    inputs: Vec<PathBuf>,
    seeds: BTreeMap<String, u64>,
    out: OutputSet,
    /// Primary outputs, digested into the manifest.
    primary: Vec<PathBuf>,
}

impl Run {
    fn input(&mut self, p: &Path) -> PathBuf {
        self.inputs.push(p.to_path_buf());
        p.to_path_buf()
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let p = self.out.write(name, contents)?;
        self.primary.push(p.clone());
        Ok(p)
    }

    fn finish(mut self) -> Result<(), CliError> {
        let digest_err = |e: std::io::Error| runtime(format!("digest: {e}"));
        let inputs = digest_all(self.inputs.iter().map(PathBuf::as_path)).map_err(digest_err)?;
        let outputs = digest_all(self.primary.iter().map(PathBuf::as_path)).map_err(digest_err)?;
        let manifest = RunManifest {
            command: self.command.to_string(),
            argv: self.argv.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(&self.config).map_err(runtime)?,
            seeds: self.seeds.clone(),
            inputs,
            outputs,
            started_at: self.started_at.clone(),
            finished_at: now_rfc3339(),
        };
        let path = manifest_path(self.out.dir(), self.command);
        let json = serde_json::to_string_pretty(&manifest).map_err(runtime)?;
        self.out.write_at(&path, json + "\n")?;
        self.out.commit();
        Ok(())
    }
}

fn load_config(cli: &Cli) -> Result<ToolConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ToolConfig::load(p).map_err(usage)?,
        None => ToolConfig::default(),
    }
    .resolved();
    if let Some(s) = cli.seed {
        cfg.apply_seed(s);
    }
    Ok(cfg)
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<String, CliError> {
    let config = load_config(&cli)?;
    let out_dir = cli
        .out
        .clone()
        .ok_or_else(|| usage(format!("{}: --out <dir> is required", cli.command.name())))?;
    let mut run = Run {
        command: cli.command.name(),
        argv,
        config,
        started_at: now_rfc3339(),
        inputs: cli.config.iter().cloned().collect(),
        seeds: BTreeMap::new(),
        out: OutputSet::new(&out_dir)?,
        primary: Vec::new(),
    };
    let stdout = with_pool(|| dispatch(cli.command, &mut run)).map_err(usage)??;
    run.finish()?;
    Ok(stdout)
}

fn dispatch(command: Command, run: &mut Run) -> Result<String, CliError> {
    match command {
        Command::Synth => cmd_synth(run),
        Command::Stats { sessions, partition } => cmd_stats(run, &sessions, &partition),
        Command::Partition { sessions, test_fraction } => cmd_partition(run, &sessions, test_fraction),
        Command::Featurize { sessions, latent, kind } => cmd_featurize(run, &sessions, latent.as_deref(), kind.into()),
        Command::Train {
            sessions,
            partition,
            features,
            permute_labels,
        } => cmd_train(run, &sessions, &partition, &features, permute_labels),
        Command::Score {
            sessions,
            model,
            features,
            partition,
            split,
        } => cmd_score(run, &sessions, &model, &features, partition.as_deref(), split),
        Command::Evaluate {
            sessions,
            scores,
            partition,
            threshold,
        } => cmd_evaluate(run, &sessions, &scores, partition.as_deref(), threshold),
        Command::Robustness {
            sessions,
            partition,
            models,
            keys,
            min_count,
            format,
            mode,
            references,
        } => cmd_robustness(
            run,
            RobustnessArgs {
                sessions,
                partition,
                models,
                keys,
                min_count,
                format,
                mode,
                references,
            },
        ),
    }
}

fn load_corpus(run: &mut Run, path: &Path) -> Result<Corpus, CliError> {
    let p = run.input(path);
    Corpus::new(read_sessions(&p)?).map_err(|e| runtime(format!("{}: {e}", p.display())))
}

fn load_partition(run: &mut Run, path: &Path, corpus: &Corpus) -> Result<Partition, CliError> {
    let p = run.input(path);
    let partition = read_partition(&p)?;
    partition
        .validate(corpus)
        .map_err(|e| runtime(format!("{}: {e}", p.display())))?;
    Ok(partition)
}

fn cmd_synth(run: &mut Run) -> Result<String, CliError> {
    let cfg = run.config.synth.clone();
    cfg.validate().map_err(usage)?;
    run.seeds.insert("synth".into(), cfg.seed);
    let sc = synth_corpus(&cfg).map_err(usage)?;
    run.write("sessions.jsonl", sessions_to_jsonl(sc.corpus.sessions()))?;
    run.write("latent.csv", latent_to_csv(&sc.latent))?;
    Ok(format!(
        "{} sessions from {} speakers\n",
        sc.corpus.len(),
        sc.corpus.n_speakers()
    ))
}

fn cmd_stats(run: &mut Run, sessions: &Path, partition: &Path) -> Result<String, CliError> {
    let corpus = load_corpus(run, sessions)?;
    let partition = load_partition(run, partition, &corpus)?;
    let table = corpus_stats(&corpus, &partition).map_err(runtime)?.to_tsv();
    run.write("stats.tsv", &table)?;
    Ok(table)
}

fn cmd_partition(run: &mut Run, sessions: &Path, test_fraction: Option<f64>) -> Result<String, CliError> {
    if let Some(f) = test_fraction {
        run.config.partition.test_fraction = f;
    }
    let f = run.config.partition.test_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(usage(format!("test_fraction must lie in (0, 1), got {f}")));
    }
    let corpus = load_corpus(run, sessions)?;
    let seed = run.config.partition.seed;
    run.seeds.insert("partition".into(), seed);
    let partition = partition_speakers(&corpus, f, seed).map_err(runtime)?;
    run.write("partition.csv", partition_to_csv(&partition))?;
    Ok(format!(
        "train {} sessions, test {} sessions\n",
        partition.count(Split::Train),
        partition.count(Split::Test)
    ))
}

fn cmd_featurize(run: &mut Run, sessions: &Path, latent: Option<&Path>, kind: FeatureKind) -> Result<String, CliError> {
    let corpus = load_corpus(run, sessions)?;
    for s in corpus.sessions() {
        check_session_id(&s.session_id).map_err(runtime)?;
    }
    let latent = match latent {
        Some(p) => {
            let p = run.input(p);
            Some(read_latent(&p)?)
        }
        None => None,
    };
    let base_dir = sessions.parent().map(Path::to_path_buf).unwrap_or_default();
    let source = match &latent {
        Some(l) => Source::Latent(l),
        None => Source::Files { base_dir: &base_dir },
    };
    let opts = FeaturizeOptions {
        kind,
        frontend: run.config.frontend.clone(),
        audio: run.config.audio.clone(),
        text: run.config.text.clone(),
        seed: run.config.synth.seed,
    };
    run.seeds.insert("featurize".into(), opts.seed);
    let results = featurize_all(corpus.sessions(), source, &opts);
    let dir = run.out.path("features");
    run.out.ensure_dir(&dir)?;
    let mut failures = Vec::new();
    let mut n_segments = 0;
    for (s, r) in corpus.sessions().iter().zip(results) {
        match r {
            Ok((m, side)) => {
                n_segments += side.segments.len();
                for p in write_features(&dir, &m, &side).inspect_err(|_| {
                    run.out.track(&crate::features::matrix_path(&dir, &s.session_id));
                    run.out.track(&crate::features::sidecar_path(&dir, &s.session_id));
                })? {
                    run.out.track(&p);
                }
            }
            Err(e) => failures.push(format!("{}: {e}", s.session_id)),
        }
    }
    if !failures.is_empty() {
        return Err(runtime(format!(
            "featurization failed for {} session(s):\n  {}",
            failures.len(),
            failures.join("\n  ")
        )));
    }
    run.primary.push(dir);
    Ok(format!(
        "{} sessions, {} segments ({})\n",
        corpus.len(),
        n_segments,
        kind.as_str()
    ))
}

type Loaded = (Option<FeatureKind>, BTreeMap<String, Vec<screeneval_core::model::PooledSegment>>);

/// Loads features for `ids`, failing with every missing id listed.
fn load_features(dir: &Path, ids: &[&str]) -> Result<Loaded, CliError> {
    use rayon::prelude::*;
    let results: Vec<(String, Result<_, FeatureError>)> = ids
        .par_iter()
        .map(|id| (id.to_string(), load_session(dir, id)))
        .collect();
    let mut missing = Vec::new();
    let mut store = BTreeMap::new();
    let mut kind = None;
    for (id, r) in results {
        match r {
            Ok((k, pooled)) => {
                if kind.is_some_and(|prev| prev != k) {
                    return Err(runtime(format!("{}: mixed feature kinds", dir.display())));
                }
                kind = Some(k);
                store.insert(id, pooled);
            }
            Err(FeatureError::Missing(id)) => missing.push(id),
            Err(e) => return Err(runtime(e)),
        }
    }
    if !missing.is_empty() {
        return Err(runtime(PipelineError::MissingFeatures(missing)));
    }
    Ok((kind, store))
}

fn cmd_train(
    run: &mut Run,
    sessions: &Path,
    partition: &Path,
    features: &Path,
    permute_labels: bool,
) -> Result<String, CliError> {
    run.config.train.validate().map_err(usage)?;
    if run.config.model.hidden.iter().any(|h| *h == 0) {
        return Err(usage("model.hidden widths must be positive"));
    }
    let corpus = load_corpus(run, sessions)?;
    let partition = load_partition(run, partition, &corpus)?;
    let features = run.input(features);
    let train: Vec<&Session> = partition.sessions_in(&corpus, Split::Train);
    let ids: Vec<&str> = train.iter().map(|s| s.session_id.as_str()).collect();
    let (kind, store) = load_features(&features, &ids)?;
    let kind = kind.ok_or_else(|| runtime("no training sessions"))?;
    run.seeds.insert("train".into(), run.config.train.seed);
    let (ck, log) = train_model(&train, &store, &run.config.model, &run.config.train, kind, permute_labels)
        .map_err(runtime)?;
    run.write("model.sevm", checkpoint::encode(&ck))?;
    run.write("train_log.json", serde_json::to_string_pretty(&log).map_err(runtime)? + "\n")?;
    let final_loss = log.stage_losses.last().and_then(|l| l.last()).copied().unwrap_or(f64::NAN);
    Ok(format!(
        "trained on {} sessions ({} segments), {} stages, final loss {final_loss:.4}\n",
        log.n_sessions,
        log.n_segments,
        log.stages.len()
    ))
}

fn cmd_score(
    run: &mut Run,
    sessions: &Path,
    model: &Path,
    features: &Path,
    partition: Option<&Path>,
    split: SplitArg,
) -> Result<String, CliError> {
    let corpus = load_corpus(run, sessions)?;
    let model = run.input(model);
    let bytes = std::fs::read(&model).map_err(|e| runtime(format!("{}: {e}", model.display())))?;
    let ck = checkpoint::decode(&bytes).map_err(|e| runtime(format!("{}: {e}", model.display())))?;
    let selected: Vec<&Session> = match (partition, split) {
        (_, SplitArg::All) => corpus.sessions().iter().collect(),
        (Some(p), s) => {
            let partition = load_partition(run, p, &corpus)?;
            partition.sessions_in(&corpus, if s == SplitArg::Train { Split::Train } else { Split::Test })
        }
        (None, _) => return Err(usage("--split train|test needs --partition")),
    };
    let features = run.input(features);
    let ids: Vec<&str> = selected.iter().map(|s| s.session_id.as_str()).collect();
    let (kind, store) = load_features(&features, &ids)?;
    if let Some(k) = kind {
        if k.as_str() != ck.feature_kind {
            return Err(runtime(format!(
                "model was trained on {} features, found {}",
                ck.feature_kind,
                k.as_str()
            )));
        }
    }
    let scores = score_all(&ck, &ids, &store).map_err(runtime)?;
    run.write("scores.csv", scores_to_csv(&scores))?;
    Ok(format!("scored {} sessions\n", scores.len()))
}

#[derive(Debug, Serialize)]
struct Evaluation {
    n_sessions: usize,
    n_positive: usize,
    auc: f64,
    auc_std_error: Option<f64>,
    eer: f64,
    eer_threshold: f64,
    threshold: f64,
    sensitivity: f64,
    specificity: f64,
}

fn cmd_evaluate(
    run: &mut Run,
    sessions: &Path,
    scores: &Path,
    partition: Option<&Path>,
    threshold: Option<f64>,
) -> Result<String, CliError> {
    let corpus = load_corpus(run, sessions)?;
    let scores_path = run.input(scores);
    let scores = read_scores(&scores_path)?;
    let selected: Vec<&Session> = match partition {
        Some(p) => load_partition(run, p, &corpus)?.sessions_in(&corpus, Split::Test),
        None => corpus.sessions().iter().filter(|s| scores.contains_key(&s.session_id)).collect(),
    };
    let missing: Vec<&str> = selected
        .iter()
        .filter(|s| !scores.contains_key(&s.session_id))
        .map(|s| s.session_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(runtime(format!(
            "no score for {} session(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    let samples: Vec<ScoredSample> = selected
        .iter()
        .map(|s| ScoredSample::new(scores[&s.session_id], s.label().is_positive()))
        .collect();
    // the variance needs two sessions per class; fall back to the bare AUC
    let est = delong_variance(&samples).or_else(|_| auc(&samples)).map_err(runtime)?;
    let curve = roc_curve(&samples).map_err(runtime)?;
    let e = eer(&curve);
    let t = threshold.unwrap_or(e.threshold);
    let (sens, spec) = sensitivity_specificity_at(&samples, t).map_err(runtime)?;
    let ev = Evaluation {
        n_sessions: samples.len(),
        n_positive: curve.n_pos,
        auc: est.auc,
        auc_std_error: est.std_error(),
        eer: e.rate,
        eer_threshold: e.threshold,
        threshold: t,
        sensitivity: sens,
        specificity: spec,
    };
    run.write("evaluation.json", serde_json::to_string_pretty(&ev).map_err(runtime)? + "\n")?;
    let mut out = String::new();
    let _ = writeln!(out, "Sessions {} ({} Dep+)", ev.n_sessions, ev.n_positive);
    match ev.auc_std_error {
        Some(se) => {
            let _ = writeln!(out, "AUC {:.3} (SE {:.3})", ev.auc, se);
        }
        None => {
            let _ = writeln!(out, "AUC {:.3}", ev.auc);
        }
    }
    let _ = writeln!(out, "EER {:.3} at threshold {}", ev.eer, ev.eer_threshold);
    let _ = writeln!(out, "Sensitivity {:.3} at threshold {}", ev.sensitivity, ev.threshold);
    let _ = writeln!(out, "Specificity {:.3} at threshold {}", ev.specificity, ev.threshold);
    Ok(out)
}

struct RobustnessArgs {
    sessions: PathBuf,
    partition: PathBuf,
    models: String,
    keys: Option<String>,
    min_count: Option<usize>,
    format: FormatArg,
    mode: Option<ModeArg>,
    references: Option<PathBuf>,
}

fn cmd_robustness(run: &mut Run, args: RobustnessArgs) -> Result<String, CliError> {
    let models = parse_model_list(&args.models).map_err(usage)?;
    if let Some(k) = &args.keys {
        run.config.robustness.keys = k.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect();
    }
    if let Some(m) = args.min_count {
        run.config.robustness.min_count = m;
    }
    if let Some(m) = args.mode {
        run.config.robustness.mode = match m {
            ModeArg::OneVsRest => ModeName::OneVsRest,
            ModeArg::AllPairs => ModeName::AllPairs,
        };
    }
    let rc = run.config.robustness.clone();
    if let Some(bad) = rc.keys.iter().find(|k| !is_known_key(k)) {
        return Err(usage(format!("unknown metadata key {bad:?}")));
    }
    let corpus = load_corpus(run, &args.sessions)?;
    let partition = load_partition(run, &args.partition, &corpus)?;
    let mut model_scores = Vec::new();
    for (name, path) in &models {
        let p = run.input(Path::new(path));
        model_scores.push(ModelScores {
            name: name.clone(),
            scores: read_scores(&p)?,
        });
    }
    let references = match &args.references {
        Some(p) => {
            let p = run.input(p);
            read_references(&p)?
        }
        None => Vec::new(),
    };
    let options = ReportOptions {
        min_count: rc.min_count,
        mode: match rc.mode {
            ModeName::OneVsRest => ComparisonMode::OneVsRest,
            ModeName::AllPairs => ComparisonMode::AllPairs,
        },
    };
    let keys: Vec<&str> = rc.keys.iter().map(String::as_str).collect();
    let report = subset_auc_report(&model_scores, &corpus, &partition, &keys, &options).map_err(runtime)?;
    let (fmt, name) = match args.format {
        FormatArg::Tsv => (ReportFormat::Tsv, "report.tsv"),
        FormatArg::Md => (ReportFormat::Markdown, "report.md"),
    };
    let text = render_report(&report, fmt);
    run.write(name, &text)?;
    let test = partition.sessions_in(&corpus, Split::Test);
    let mut curves = Vec::new();
    for m in &model_scores {
        let samples: Vec<ScoredSample> = test
            .iter()
            .map(|s| ScoredSample::new(m.scores[&s.session_id], s.label().is_positive()))
            .collect();
        curves.push((m.name.clone(), roc_curve(&samples).map_err(runtime)?));
    }
    for f in roc_overlay_export(&curves, &references).files {
        run.write(&f.name, f.contents)?;
    }
    Ok(text)
}

/// Digest helper re-exported for tests that compare runs.
pub fn output_digest(path: &Path) -> std::io::Result<String> {
    digest_path(path)
}
