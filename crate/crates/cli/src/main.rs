use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use hetmatch::eval::{
    aggregate_labels, read_ratings, synth_corpus, weight_table, AggregatedLabel, SynthParams,
};
use hetmatch::index::{read_corpus, write_corpus, DocType};
use hetmatch::textpipe::{Pipeline, StopwordList, SynonymMap};
use hetmatch::train::{run_job, LabeledPair, TrainJob, TrainMode};
use hetmatch::{Index, Matcher64, WeightConfig64};
use hetmatch_service::{AppState, ServiceOptions};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] hetmatch::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "hetmatch",
    version,
    about = "Match documents of two types by weighted component similarity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Grid,
    Sgd,
    Es,
}

impl From<Mode> for TrainMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Grid => TrainMode::Grid,
            Mode::Sgd => TrainMode::Sgd,
            Mode::Es => TrainMode::Es,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a JSONL corpus.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        doctype: DocType,
        #[arg(long)]
        out: PathBuf,
        /// One stop word per line; `#` starts a comment.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Lines of the form `word: synonym, synonym`.
        #[arg(long)]
        synonyms: Option<PathBuf>,
    },
    /// Rank B documents for one A document.
    Match {
        /// Directory holding the `a/` and `b/` indexes.
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        a_id: String,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 3)]
        top: usize,
        /// Print the ranking as a JSON array instead of tab-separated lines.
        #[arg(long)]
        json: bool,
    },
    /// Fit weights on labeled pairs and write the best config.
    Train {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        labels: PathBuf,
        /// Grid file; required for grid mode.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// JSON parameters for sgd or es mode.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Starting config; uniform unit weights over the index fields if absent.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full training report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Accuracy of one or more configs against labeled pairs.
    Eval {
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<PathBuf>,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        index: PathBuf,
    },
    /// Write a synthetic corpus with planted matches.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        n_a: usize,
        #[arg(long, default_value_t = 100)]
        n_b: usize,
        #[arg(long, default_value_t = 50)]
        planted: usize,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        index_a: PathBuf,
        #[arg(long)]
        index_b: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Directory with the judge UI bundle, served at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HETMATCH_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetmatch: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Index {
            corpus,
            doctype,
            out,
            stopwords,
            synonyms,
        } => {
            let stops = stopwords
                .map(|p| StopwordList::load(&p))
                .transpose()?
                .unwrap_or_default();
            let syn = synonyms
                .map(|p| SynonymMap::load(&p))
                .transpose()?
                .unwrap_or_default();
            let docs = read_corpus(&corpus)?;
            let index = Index::from_documents(doctype, Pipeline::new(stops, syn), docs)?;
            index.save(&out)?;
            println!(
                "indexed {} {} documents into {}",
                index.len(),
                doctype,
                out.display()
            );
        }
        Command::Match {
            index,
            a_id,
            weights,
            top,
            json,
        } => {
            let (a, b) = load_pair(&index)?;
            let cfg = WeightConfig64::load(&weights)?;
            let ranked = Matcher64::new(&a, &b).rank(&a_id, &cfg, top)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string(&ranked).map_err(hetmatch::Error::from)?
                );
            } else {
                for r in ranked {
                    println!("{}\t{}", r.b_id, r.score);
                }
            }
        }
        Command::Train {
            mode,
            labels,
            grid,
            params,
            init,
            index,
            out,
            report,
        } => {
            let (a, b) = load_pair(&index)?;
            let pairs: Vec<LabeledPair> = load_labels(&labels)?
                .iter()
                .map(LabeledPair::from)
                .collect();
            let init = match init {
                Some(p) => WeightConfig64::load(&p)?,
                None => WeightConfig64::uniform(a.fields(), b.fields(), 1.0)?,
            };
            let job_params = match (mode, grid, params) {
                (Mode::Grid, Some(g), _) => read_json(&g)?,
                (Mode::Grid, None, _) => {
                    return Err(CliError::Usage("--grid is required in grid mode".into()))
                }
                (_, _, Some(p)) => read_json(&p)?,
                (_, _, None) => serde_json::Value::Null,
            };
            let job = TrainJob::from_params(mode.into(), job_params)?;
            let result = run_job(&Matcher64::new(&a, &b), &pairs, &init, &job)?;
            write_file(&out, result.best.to_json_pretty() + "\n")?;
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&result).map_err(hetmatch::Error::from)?;
                write_file(&path, text + "\n")?;
            }
            print!("{}", result.render_table());
            println!(
                "best: accuracy {:.1}%, loss {:.6}, {} iterations, {:.0} ms",
                result.best_accuracy, result.best_loss, result.iterations, result.wall_time_ms
            );
            if !result.flagged.is_empty() {
                println!("kinks: {}", result.flagged.join(", "));
            }
        }
        Command::Eval {
            weights,
            labels,
            index,
        } => {
            let (a, b) = load_pair(&index)?;
            let labels = load_labels(&labels)?;
            let configs = weights
                .iter()
                .map(|p| {
                    let name = p.file_stem().map_or_else(
                        || p.display().to_string(),
                        |s| s.to_string_lossy().into_owned(),
                    );
                    Ok((name, WeightConfig64::load(p)?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let report = weight_table(&Matcher64::new(&a, &b), &labels, &configs)?;
            print!("{}", report.render());
            eprintln!("{} labeled pairs", report.pair_count);
        }
        Command::Synth {
            seed,
            out,
            n_a,
            n_b,
            planted,
        } => {
            let corpus = synth_corpus(&SynthParams {
                seed,
                n_a,
                n_b,
                planted_pairs: planted,
                ..SynthParams::default()
            })?;
            std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            write_corpus(&out.join("articles.jsonl"), &corpus.articles)?;
            write_corpus(&out.join("videos.jsonl"), &corpus.videos)?;
            let mut text = String::new();
            for r in corpus.ratings("synth") {
                text += &serde_json::to_string(&r).map_err(hetmatch::Error::from)?;
                text.push('\n');
            }
            write_file(&out.join("labels.jsonl"), text)?;
            println!(
                "wrote {} articles, {} videos, {} labels to {}",
                corpus.articles.len(),
                corpus.videos.len(),
                corpus.labels.len(),
                out.display()
            );
        }
        Command::Serve {
            port,
            host,
            index_a,
            index_b,
            weights,
            labels,
            static_dir,
        } => {
            let state = AppState::open(&ServiceOptions {
                index_a,
                index_b,
                weights,
                labels,
                static_dir,
                judging_seed: 0,
            })?;
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| io_err(Path::new("tokio runtime"), e))?;
            let addr = format!("{host}:{port}");
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(|e| io_err(Path::new(&addr), e))?;
                eprintln!(
                    "serving on http://{}",
                    listener
                        .local_addr()
                        .map_err(|e| io_err(Path::new(&addr), e))?
                );
                hetmatch_service::serve(listener, Arc::new(state))
                    .await
                    .map_err(|e| io_err(Path::new(&addr), e))
            })?;
        }
    }
    Ok(())
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_pair(dir: &Path) -> CliResult<(Index, Index)> {
    Ok((
        Index::load_typed(dir, DocType::A)?,
        Index::load_typed(dir, DocType::B)?,
    ))
}

fn load_labels(path: &Path) -> CliResult<Vec<AggregatedLabel>> {
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "labels file {} not found",
            path.display()
        )));
    }
    Ok(aggregate_labels(&read_ratings(path)?))
}

fn read_json(path: &Path) -> CliResult<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: String) -> CliResult {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}
