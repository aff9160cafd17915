//! The `cdl` command line. Each analysis is its own subcommand; `run` chains
//! them and writes a manifest.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 prior-provider error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing::info;

use crate::likelihood::{BetaGrid, CalibrationObjective, DistanceCache, DEFAULT_SAMPLE_SIZE};
use crate::pipeline::{
    self, NgramWindow, PipelineError, PriorSpec, RunConfig, Stage, TokenCounts, DEFAULT_AGE_BIN_MONTHS,
    DEFAULT_MIN_COUNT, DEFAULT_PROVIDER_TIMEOUT_MS, DEFAULT_WINDOW,
};
use crate::posterior::DEFAULT_TOP_K;
use crate::priors::{PriorSource, UniformPrior, DEFAULT_BACKOFF};

pub const ENDPOINT_ENV: &str = "CDL_PRIOR_ENDPOINT";

#[derive(Debug, Parser)]
#[command(name = "cdl", version, about = "Noisy-channel word recovery for child productions")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load inputs, select tokens and print a JSON summary.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        /// Also write every unselected token with its reason.
        #[arg(long)]
        exclusions: Option<PathBuf>,
    },
    /// Write the candidate vocabulary as TSV.
    BuildVocab {
        #[command(flatten)]
        data: DataArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the calibration objective for every grid β as CSV.
    Calibrate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Score selected tokens and write the per-token CSV.
    Score {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy ROC for failures versus successes; prints the AUC.
    Classify {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value = "roc.csv")]
        out: PathBuf,
    },
    /// Information gain by age from fitted-prior and uniform-prior scores.
    Infogain {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        uniform_scores: PathBuf,
        #[arg(long, default_value_t = DEFAULT_AGE_BIN_MONTHS)]
        bin_width: u32,
        #[arg(long, default_value = "infogain.csv")]
        out: PathBuf,
    },
    /// Surprisal summaries and paired tests across scored models.
    Report {
        /// `NAME=PATH` of a score file; repeat for each model.
        #[arg(long = "scores", required = true, value_parser = parse_named)]
        scores: Vec<(String, PathBuf)>,
        #[arg(long, default_value_t = 3)]
        distance_open_from: u32,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Every stage end to end, with a manifest.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_AGE_BIN_MONTHS)]
        age_bin_months: u32,
        #[arg(long, default_value_t = 3)]
        distance_open_from: u32,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_named(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Prior-model word list, one per line; all lexicon words when absent.
    #[arg(long)]
    pub prior_vocab: Option<PathBuf>,
    /// Utterances of context on each side of a token.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: u64,
    /// Treat vowelless productions as monosyllabic instead of excluding them.
    #[arg(long)]
    pub include_vowelless: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorKind {
    Uniform,
    Unigram,
    Ngram,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct PriorArgs {
    #[arg(long, value_enum, default_value_t = PriorKind::Uniform)]
    pub prior: PriorKind,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = NgramWindow::OneUtt)]
    pub ngram_window: NgramWindow,
    #[arg(long, default_value_t = DEFAULT_BACKOFF)]
    pub backoff: f64,
    /// Corpus to estimate count-based priors from; the scored corpus when absent.
    #[arg(long)]
    pub train_corpus: Option<PathBuf>,
    /// Prior-provider URL for `--prior external`.
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    #[arg(long, default_value_t = DEFAULT_PROVIDER_TIMEOUT_MS)]
    pub timeout_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    GeometricMean,
    ArithmeticMean,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Fixed noise scale; the default is 3.2.
    #[arg(long, conflicts_with = "calibrate")]
    pub beta: Option<f64>,
    /// Pick β by grid search on selected successes.
    #[arg(long)]
    pub calibrate: bool,
    /// Pool the uniform baseline into calibration.
    #[arg(long)]
    pub calibrate_across: bool,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
    pub calibration_sample: usize,
    #[arg(long, value_enum, default_value_t = Objective::GeometricMean)]
    pub objective: Objective,
    #[arg(long, default_value_t = 1.0)]
    pub grid_lo: f64,
    #[arg(long, default_value_t = 6.0)]
    pub grid_hi: f64,
    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
}

impl Default for ModelArgs {
    fn default() -> Self {
        ModelArgs {
            beta: None,
            calibrate: false,
            calibrate_across: false,
            calibration_sample: DEFAULT_SAMPLE_SIZE,
            objective: Objective::GeometricMean,
            grid_lo: 1.0,
            grid_hi: 6.0,
            grid_step: 0.1,
            seed: 0,
            top_k: DEFAULT_TOP_K,
        }
    }
}

fn prior_spec(p: &PriorArgs) -> Result<PriorSpec, PipelineError> {
    Ok(match p.prior {
        PriorKind::Uniform => PriorSpec::Uniform,
        PriorKind::Unigram => PriorSpec::Unigram,
        PriorKind::Ngram => PriorSpec::Ngram {
            order: p.order,
            window: p.ngram_window,
            backoff: p.backoff,
            train_corpus: p.train_corpus.clone(),
        },
        PriorKind::External => PriorSpec::External {
            endpoint: p
                .endpoint
                .clone()
                .ok_or_else(|| PipelineError::Config(format!("--prior external needs --endpoint or {ENDPOINT_ENV}")))?,
            timeout_ms: p.timeout_ms,
        },
    })
}

/// Builds and validates a [`RunConfig`] from flags.
pub fn run_config(
    data: &DataArgs,
    prior: Option<&PriorArgs>,
    model: Option<&ModelArgs>,
    out_dir: &Path,
) -> Result<RunConfig, PipelineError> {
    let mut cfg = RunConfig::new(&data.corpus, &data.lexicon, out_dir);
    cfg.prior_vocab = data.prior_vocab.clone();
    cfg.window = data.window;
    cfg.min_count = data.min_count;
    cfg.include_vowelless = data.include_vowelless;
    cfg.threads = data.threads;
    if let Some(p) = prior {
        cfg.prior = prior_spec(p)?;
    }
    if let Some(m) = model {
        cfg.beta = m.beta;
        cfg.calibrate = m.calibrate;
        cfg.calibrate_across = m.calibrate_across;
        cfg.calibration_sample = m.calibration_sample;
        cfg.objective = match m.objective {
            Objective::GeometricMean => CalibrationObjective::GeometricMean,
            Objective::ArithmeticMean => CalibrationObjective::ArithmeticMean,
        };
        cfg.grid =
            BetaGrid::new(m.grid_lo, m.grid_hi, m.grid_step).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.seed = m.seed;
        cfg.top_k = m.top_k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn io_err(stage: Stage, path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::data(stage, format!("{}: {e}", path.display()))
}

fn write_out(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), PipelineError> {
    match out {
        Some(p) => pipeline::write_atomic(p, bytes).map_err(|e| io_err(Stage::Write, p, e)),
        None => stdout
            .write_all(bytes)
            .map_err(|e| PipelineError::data(Stage::Write, e)),
    }
}

fn read_score_file(path: &Path) -> Result<Vec<crate::posterior::TokenScore>, PipelineError> {
    let f = File::open(path).map_err(|e| io_err(Stage::Analyze, path, e))?;
    pipeline::read_scores(BufReader::new(f)).map_err(|e| io_err(Stage::Analyze, path, e))
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Executes a parsed command, writing primary output to `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest { data, exclusions } => {
            let cfg = run_config(&data, None, None, Path::new("."))?;
            let inputs = pipeline::load_inputs(&cfg)?;
            let sel = in_pool(cfg.threads, || pipeline::select(&inputs, &cfg))?;
            if let Some(p) = exclusions {
                let mut w = csv::Writer::from_writer(Vec::new());
                let csv_err = |e: csv::Error| PipelineError::data(Stage::Write, e);
                w.write_record(["transcript_id", "utterance_index", "token_index", "gloss", "reason"])
                    .map_err(csv_err)?;
                for x in &sel.exclusions {
                    w.write_record([
                        x.transcript_id.as_str(),
                        &x.utterance_index.to_string(),
                        &x.token_index.to_string(),
                        &x.gloss,
                        x.reason.code(),
                    ])
                    .map_err(csv_err)?;
                }
                let bytes = w.into_inner().map_err(|e| PipelineError::data(Stage::Write, e))?;
                pipeline::write_atomic(&p, &bytes).map_err(|e| io_err(Stage::Write, &p, e))?;
            }
            let counts = TokenCounts::from_selection(&sel);
            let summary = serde_json::json!({
                "utterances": inputs.corpus.len(),
                "lexicon_entries": inputs.lexicon.len(),
                "ingest": inputs.ingest,
                "selected_successes": counts.selected_successes,
                "selected_failures": counts.selected_failures,
                "excluded": counts.excluded,
            });
            let mut text = serde_json::to_vec_pretty(&summary).map_err(|e| PipelineError::data(Stage::Write, e))?;
            text.push(b'\n');
            write_out(None, &text, stdout)
        }
        Command::BuildVocab { data, out } => {
            let cfg = run_config(&data, None, None, Path::new("."))?;
            let inputs = pipeline::load_inputs(&cfg)?;
            let vocab = pipeline::build_vocabulary(&inputs, &cfg)?;
            info!(size = vocab.len(), "vocabulary built");
            let mut buf = Vec::new();
            vocab
                .write_tsv(&mut buf)
                .map_err(|e| PipelineError::data(Stage::Write, e))?;
            write_out(out.as_deref(), &buf, stdout)
        }
        Command::Calibrate { data, prior, mut model } => {
            model.calibrate = true;
            model.beta = None;
            let cfg = run_config(&data, Some(&prior), Some(&model), Path::new("."))?;
            let inputs = pipeline::load_inputs(&cfg)?;
            let res = in_pool(cfg.threads, || -> Result<_, PipelineError> {
                let sel = pipeline::select(&inputs, &cfg);
                let vocab = pipeline::build_vocabulary(&inputs, &cfg)?;
                let fitted = pipeline::build_prior(&cfg, &inputs);
                let uniform = UniformPrior;
                let mut priors: Vec<&dyn PriorSource> = vec![fitted.as_ref()];
                if cfg.calibrate_across && cfg.prior != PriorSpec::Uniform {
                    priors.push(&uniform);
                }
                pipeline::calibrate(&cfg, &sel.tokens, &priors, &vocab, &DistanceCache::new())
            })??;
            info!(beta = res.best_beta, sample = res.sample_size, "calibrated");
            write_out(None, res.to_csv().as_bytes(), stdout)
        }
        Command::Score {
            data,
            prior,
            model,
            out,
        } => {
            let cfg = run_config(&data, Some(&prior), Some(&model), Path::new("."))?;
            let inputs = pipeline::load_inputs(&cfg)?;
            let scored = in_pool(cfg.threads, || -> Result<_, PipelineError> {
                let sel = pipeline::select(&inputs, &cfg);
                let vocab = pipeline::build_vocabulary(&inputs, &cfg)?;
                let fitted = pipeline::build_prior(&cfg, &inputs);
                let cache = DistanceCache::new();
                let beta = if cfg.calibrate {
                    pipeline::calibrate(&cfg, &sel.tokens, &[fitted.as_ref()], &vocab, &cache)?.best_beta
                } else {
                    cfg.beta.unwrap_or(crate::likelihood::DEFAULT_BETA)
                };
                let score_cfg = crate::posterior::ScoreConfig {
                    likelihood: crate::likelihood::LikelihoodConfig::with_beta(beta)
                        .map_err(|e| PipelineError::Config(e.to_string()))?,
                    top_k: cfg.top_k,
                };
                pipeline::score_all(&sel.tokens, fitted.as_ref(), &vocab, &score_cfg, &cache)
            })??;
            for (id, code) in &scored.excluded {
                info!(token = %id, reason = %code, "not scored");
            }
            let mut buf = Vec::new();
            pipeline::write_scores(&mut buf, &scored.scores, cfg.top_k)
                .map_err(|e| PipelineError::data(Stage::Write, e))?;
            write_out(out.as_deref(), &buf, stdout)
        }
        Command::Classify { scores, out } => {
            let roc = pipeline::classify(&read_score_file(&scores)?)?;
            pipeline::write_atomic(&out, roc.to_csv().as_bytes()).map_err(|e| io_err(Stage::Write, &out, e))?;
            writeln!(stdout, "AUC {}", roc.auc).map_err(|e| PipelineError::data(Stage::Write, e))
        }
        Command::Infogain {
            scores,
            uniform_scores,
            bin_width,
            out,
        } => {
            if bin_width == 0 {
                return Err(PipelineError::Config("bin width must be positive".into()));
            }
            let report = pipeline::infogain(
                &read_score_file(&scores)?,
                &read_score_file(&uniform_scores)?,
                bin_width,
            )?;
            if report.missing_age > 0 {
                info!(tokens = report.missing_age, "tokens without age left out");
            }
            pipeline::write_atomic(&out, report.to_csv().as_bytes()).map_err(|e| io_err(Stage::Write, &out, e))
        }
        Command::Report {
            scores,
            distance_open_from,
            out_dir,
        } => {
            if distance_open_from == 0 {
                return Err(PipelineError::Config("distance bins must start above 0".into()));
            }
            let models = scores
                .iter()
                .map(|(name, p)| Ok((name.clone(), read_score_file(p)?)))
                .collect::<Result<Vec<_>, PipelineError>>()?;
            let report = pipeline::report(&models, distance_open_from)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| io_err(Stage::Write, &out_dir, e))?;
            for (name, text) in [
                ("surprisal_by_model.csv", report.by_model_csv()),
                ("surprisal_by_distance.csv", report.by_distance_csv()),
                ("surprisal_paired.csv", report.paired_csv()),
            ] {
                let p = out_dir.join(name);
                pipeline::write_atomic(&p, text.as_bytes()).map_err(|e| io_err(Stage::Write, &p, e))?;
            }
            write_out(None, report.by_model_csv().as_bytes(), stdout)
        }
        Command::Run {
            data,
            prior,
            model,
            age_bin_months,
            distance_open_from,
            out_dir,
        } => {
            let mut cfg = run_config(&data, Some(&prior), Some(&model), &out_dir)?;
            cfg.age_bin_months = age_bin_months;
            cfg.distance_open_from = distance_open_from;
            let m = pipeline::run_pipeline(&cfg)?;
            let t = &m.tokens;
            let mut summary = format!(
                "|V| = {}, beta = {} ({}), successes {}/{} scored, failures {}/{} scored",
                m.vocab_size,
                m.beta,
                m.beta_source,
                t.scored_successes,
                t.selected_successes,
                t.scored_failures,
                t.selected_failures
            );
            let excluded: usize = t.excluded.values().sum();
            if excluded > 0 {
                summary.push_str(&format!(", {excluded} corpus tokens excluded {:?}", t.excluded));
            }
            if !t.scoring_excluded.is_empty() {
                summary.push_str(&format!(", not scored {:?}", t.scoring_excluded));
            }
            if let Some(auc) = m.analysis.auc {
                summary.push_str(&format!(", AUC {auc:.4}"));
            }
            writeln!(stdout, "{summary}\noutputs in {}", out_dir.display())
                .map_err(|e| PipelineError::data(Stage::Write, e))
        }
    }
}

fn init_tracing(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(io::stderr)
        .try_init();
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_tracing(cli.verbose);
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}
