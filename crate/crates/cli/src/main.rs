mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hetrolat::latent::DEFAULT_DENSE_CAP;

use commands::{
    AnalyzeArgs, EvalArgs, LatentArgs, PipelineArgs, PrefilterArgs, SynthArgs, TrainArgs,
};

/// Latent-graph guided representation learning on heterogeneous graphs.
#[derive(Parser, Debug)]
#[command(name = "hetrolat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Meta-path and k-NN homophily report.
    Analyze {
        dataset: PathBuf,
        /// k values for k-NN feature graphs.
        #[arg(long, value_delimiter = ',', default_value = "5,10")]
        knn: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also dump per-node NHR as TSV.
        #[arg(long)]
        nhr: Option<PathBuf>,
    },
    /// Build the homophilic/heterophilic latent graph pair.
    BuildLatent {
        dataset: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long = "kpos", default_value_t = 2)]
        k_pos: usize,
        #[command(flatten)]
        scalable: ScalableOpts,
        #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
        dense_cap: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precompute filtered features for mini-batch training.
    Prefilter {
        dataset: PathBuf,
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Also filter over this latent graph pair.
        #[arg(long)]
        latent: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and write the model and fused embeddings.
    Train {
        dataset: PathBuf,
        #[arg(long)]
        latent: PathBuf,
        #[arg(long)]
        scalable: bool,
        #[arg(long, requires = "scalable")]
        filtered: Option<PathBuf>,
        /// Overrides `batch_size` from the config.
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        emb: PathBuf,
    },
    /// Evaluate an embedding matrix.
    Eval {
        dataset: PathBuf,
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        splits: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a planted-partition dataset.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage with one training config.
    Pipeline {
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        eval_config: Option<PathBuf>,
        #[arg(long)]
        scalable: bool,
        #[arg(long, value_delimiter = ',', default_value = "5,10")]
        knn: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
        dense_cap: usize,
        /// Output directory; defaults to the dataset directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ScalableOpts {
    #[arg(long)]
    scalable: bool,
    #[arg(long, default_value_t = 1000)]
    anchors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(cmd: Command) -> Result<(), error::StageError> {
    match cmd {
        Command::Analyze { dataset, knn, out, nhr } => commands::analyze(&AnalyzeArgs { dataset, knn, out, nhr }),
        Command::BuildLatent {
            dataset,
            k,
            k_pos,
            scalable,
            dense_cap,
            out,
        } => commands::build_latent_cmd(&LatentArgs {
            dataset,
            k,
            k_pos,
            scalable: scalable.scalable,
            anchors: scalable.anchors,
            seed: scalable.seed,
            dense_cap,
            out,
        }),
        Command::Prefilter { dataset, r, latent, out } => {
            commands::prefilter(&PrefilterArgs { dataset, r, latent, out })
        }
        Command::Train {
            dataset,
            latent,
            scalable,
            filtered,
            batch,
            config,
            out,
            emb,
        } => commands::train(&TrainArgs {
            dataset,
            latent,
            scalable,
            filtered,
            batch,
            config,
            out,
            emb,
        }),
        Command::Eval {
            dataset,
            emb,
            splits,
            config,
            out,
        } => commands::eval(&EvalArgs {
            dataset,
            emb,
            splits,
            config,
            out,
        }),
        Command::Synth { spec, out } => commands::synth(&SynthArgs { spec, out }),
        Command::Pipeline {
            dataset,
            config,
            eval_config,
            scalable,
            knn,
            dense_cap,
            out,
        } => commands::pipeline(&PipelineArgs {
            dataset,
            config,
            eval_config,
            scalable,
            knn,
            dense_cap,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version go to stdout with exit 0, usage errors exit 2
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
