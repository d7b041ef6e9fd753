//! `vdk`: batch viewpoint-diversity reports from labelled conversation data.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use vdk_core::ingest::write_tweets_jsonl;
use vdk_core::report::{run_analyze, run_stats, AnalysisOptions, RunConfig, VariantSelection};
use vdk_core::synth::{generate_tweets, summarize, GeneratorConfig};

#[derive(Parser)]
#[command(name = "vdk", version, about = "Viewpoint diversity of reply-tree conversations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct conversations and write every report.
    Analyze(InputArgs),
    /// Reconstruct conversations and write stats.csv only.
    Stats(InputArgs),
    /// Generate a synthetic corpus from a JSON config.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Both,
    WithL1,
    WithoutL1,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    topic: String,
    /// Tweets, one JSON object per line.
    #[arg(long)]
    tweets: PathBuf,
    /// Optional CSV or JSONL with tweet_id,relevance,claim.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    max_size: usize,
    #[arg(long, default_value_t = 2)]
    min_authors: usize,
    #[arg(long, default_value_t = 0.05)]
    bin_width: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    variant: VariantArg,
    /// Count replies to one's own tweets in the dyadic conditionals.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    dyadic_self_replies: bool,
    /// Also write trees.jsonl with the reconstructed trees.
    #[arg(long)]
    emit_trees: bool,
}

impl InputArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            topic: self.topic,
            tweets_path: self.tweets,
            labels_path: self.labels,
            output_dir: self.out,
            options: AnalysisOptions {
                max_tweets_per_conversation: self.max_size,
                min_authors: self.min_authors,
                bin_width: self.bin_width,
                variants: match self.variant {
                    VariantArg::Both => VariantSelection::Both,
                    VariantArg::WithL1 => VariantSelection::WithL1,
                    VariantArg::WithoutL1 => VariantSelection::WithoutL1,
                },
                include_self_replies_in_dyadic: self.dyadic_self_replies,
            },
            emit_trees: self.emit_trees,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze(args) => {
            let config = args.into_config();
            let outcome = run_analyze(&config)?;
            eprintln!("{}", serde_json::json!({ "ingest": outcome.analysis.ingest }));
            log::info!("wrote {} files to {}", outcome.files.len(), config.output_dir.display());
        }
        Command::Stats(args) => {
            let config = args.into_config();
            let outcome = run_stats(&config)?;
            eprintln!("{}", serde_json::json!({ "ingest": outcome.analysis.ingest }));
        }
        Command::Synth { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("cannot read {}", config.display()))?;
            let config: GeneratorConfig = serde_json::from_str(&text)
                .with_context(|| format!("invalid generator config {}", config.display()))?;
            let tweets = generate_tweets(&config)?;

            let tmp = out.with_file_name(format!(
                ".{}.tmp",
                out.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
            ));
            let write = || -> std::io::Result<()> {
                let mut w = BufWriter::new(File::create(&tmp)?);
                write_tweets_jsonl(&tweets, &mut w)?;
                w.flush()?;
                drop(w);
                fs::rename(&tmp, &out)
            };
            if let Err(e) = write() {
                let _ = fs::remove_file(&tmp);
                return Err(e).with_context(|| format!("cannot write {}", out.display()));
            }
            println!("{}", serde_json::to_string(&summarize(&tweets))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VDK_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}");
            eprintln!("{}", serde_json::json!({ "error": message }));
            ExitCode::FAILURE
        }
    }
}
