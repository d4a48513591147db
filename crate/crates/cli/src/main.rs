use std::path::{Path, PathBuf};
use std::process::ExitCode;

use apimine_cli::commands::{self, Dumps};
use apimine_cli::config::parse_k_range;
use apimine_cli::{CliError, Format, ModelStore, PipelineConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "apimine", version, about = "Mine API call sequences and recommend calls")]
struct Cli {
    /// Base seed for splits, initialization and hole positions.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Settings file with one `key = value` per line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Hapi,
    Ngram,
}

impl From<ModelArg> for Format {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Hapi => Format::Hapi,
            ModelArg::Ngram => Format::Ngram,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Extract counted call sequences from micro-IR files or directories.
    Extract {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Corpus file to write (JSON lines).
        #[arg(short, long)]
        output: PathBuf,
        /// Write each method's control-flow graph as DOT into DIR.
        #[arg(long, value_name = "DIR")]
        dump_cfg: Option<PathBuf>,
        /// Write each method's usage graphs as DOT into DIR.
        #[arg(long, value_name = "DIR")]
        dump_arus: Option<PathBuf>,
        /// Largest multi-object key to keep.
        #[arg(long)]
        max_set_size: Option<usize>,
    },
    /// Train one hidden Markov and one n-gram model per key.
    Train {
        corpus: PathBuf,
        #[arg(long)]
        model_store: PathBuf,
        /// Candidate state counts, `lo..hi` or a comma list.
        #[arg(long)]
        k_range: Option<String>,
    },
    /// Rank candidate calls for a partial sequence.
    Recommend {
        #[arg(long)]
        model_store: PathBuf,
        /// Comma-separated receiver types of the key.
        #[arg(long)]
        types: String,
        /// Comma-separated observed calls.
        #[arg(long, default_value = "")]
        seq: String,
        /// 1-based position of the missing call; the next call by default.
        #[arg(long)]
        hole: Option<usize>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum, default_value = "hapi")]
        model: ModelArg,
    },
    /// Top-k accuracy of both models on held-out sequences, as CSV.
    Eval {
        corpus: PathBuf,
        /// Evaluate stored models; without it both models are fitted here.
        #[arg(long)]
        model_store: Option<PathBuf>,
        /// CSV destination; standard output by default.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Average per-key accuracies instead of pooling hits.
        #[arg(long = "macro")]
        macro_average: bool,
    },
    /// Render a hidden Markov model as DOT.
    Inspect {
        /// A model file; or use --model-store with --types.
        file: Option<PathBuf>,
        #[arg(long)]
        model_store: Option<PathBuf>,
        #[arg(long)]
        types: Option<String>,
        /// Hide probabilities below this.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        config
            .apply_text(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit(text: &str, dest: Option<&Path>) -> Result<(), CliError> {
    match dest {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Internal(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializes") + "\n"
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Extract {
            inputs,
            output,
            dump_cfg,
            dump_arus,
            max_set_size,
        } => {
            if max_set_size.is_some() {
                config.max_set_size = max_set_size;
            }
            config.validate()?;
            let dumps = Dumps {
                cfg_dir: dump_cfg,
                arus_dir: dump_arus,
            };
            let (corpus, summary) = commands::extract(&inputs, &config, &dumps)?;
            commands::write_corpus(&corpus, &output)?;
            if cli.json {
                print!("{}", json(&summary));
            } else {
                println!("{summary}");
            }
        }
        Command::Train {
            corpus,
            model_store,
            k_range,
        } => {
            if let Some(r) = k_range {
                config.k_range = parse_k_range(&r).map_err(CliError::Input)?;
            }
            config.validate()?;
            let corpus = commands::read_corpus(&corpus)?;
            let summary = commands::train(&corpus, &config, &model_store)?;
            if cli.json {
                print!("{}", json(&summary));
            } else {
                print!("{summary}");
            }
        }
        Command::Recommend {
            model_store,
            types,
            seq,
            hole,
            k,
            model,
        } => {
            let store = ModelStore::open(&model_store)?;
            let key = commands::parse_key(&types)?;
            let rec = commands::recommend(&store, &key, &commands::parse_seq(&seq), hole, model.into())?;
            print!("{}", commands::render_recommendation(&rec, model.into(), k, cli.json));
        }
        Command::Eval {
            corpus,
            model_store,
            output,
            macro_average,
        } => {
            config.validate()?;
            let corpus = commands::read_corpus(&corpus)?;
            let cmp = match model_store {
                Some(dir) => commands::eval_store(&corpus, &ModelStore::open(&dir)?, &config, macro_average)?,
                None => commands::eval_fresh(&corpus, &config, macro_average),
            };
            // The CSV goes to the file when there is one; standard output then
            // gets the summary.
            match (&output, cli.json) {
                (Some(path), json) => {
                    emit(&cmp.to_csv(), Some(path))?;
                    print!("{}", if json { commands::comparison_json(&cmp) } else { cmp.to_table() });
                }
                (None, true) => print!("{}", commands::comparison_json(&cmp)),
                (None, false) => emit(&cmp.to_csv(), None)?,
            }
        }
        Command::Inspect {
            file,
            model_store,
            types,
            threshold,
        } => {
            let dot = match (file, model_store, types) {
                (Some(f), None, None) => commands::inspect_file(&f, threshold)?,
                (None, Some(dir), Some(t)) => {
                    commands::inspect_store(&ModelStore::open(&dir)?, &commands::parse_key(&t)?, threshold)?
                }
                _ => return Err(CliError::Input("inspect takes a model file, or --model-store with --types".into())),
            };
            print!("{dot}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("apimine: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
