use std::path::PathBuf;

use clap::{Parser, Subcommand};
use tlcm::corpus::InputFormat;
use tlcm::Axis;
use tlcm_cli::commands::{self, Protocol, ReportFormat};
use tlcm_cli::config::ConfigArgs;
use tlcm_cli::exit_code;

#[derive(Parser)]
#[command(
    name = "tlcm",
    version,
    about = "Topographic latent class models of user reviews"
)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Format {
    Jsonl,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw reviews and write a preprocessed corpus directory.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Input format; guessed from the file name when omitted.
        #[arg(long)]
        format: Option<Format>,
    },
    /// SOM initialization, EM and the rating regression; writes a model file.
    Train,
    /// Held-out metric of a trained model.
    Eval {
        #[arg(long, value_enum)]
        protocol: Protocol,
    },
    /// Top words of every class on one axis.
    Grid {
        #[arg(long, default_value = "product")]
        axis: Axis,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        /// Fix the class of the other axis instead of averaging over it.
        #[arg(long)]
        condition: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// User-class posterior for a new user from one review of a known product.
    Oos {
        #[arg(long)]
        product: String,
        #[arg(long)]
        review: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Rating prediction for a known user and product.
    Predict {
        #[arg(long)]
        user: String,
        #[arg(long)]
        product: String,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()?;
    }
    let cfg = cli.config.resolve()?;
    let model = || {
        cfg.model_path
            .clone()
            .ok_or_else(|| tlcm::Error::InvalidArgument("no model path given (--model)".into()))
    };
    let corpus = || {
        cfg.corpus_dir.clone().ok_or_else(|| {
            tlcm::Error::InvalidArgument("no corpus directory given (--corpus)".into())
        })
    };
    match cli.command {
        Command::Ingest { input, out, format } => {
            let format = format.map(|f| match f {
                Format::Jsonl => InputFormat::JsonLines,
                Format::Tsv => InputFormat::Tsv,
            });
            commands::ingest(&input, &out, format, &cfg)
        }
        Command::Train => commands::train(&cfg),
        Command::Eval { protocol } => commands::eval(&model()?, &corpus()?, protocol),
        Command::Grid {
            axis,
            n,
            condition,
            format,
            out,
        } => commands::grid(&model()?, axis, n, condition, format, out.as_deref()),
        Command::Oos {
            product,
            review,
            top,
        } => commands::oos(&model()?, &product, &review, top),
        Command::Predict { user, product } => commands::predict(&model()?, &user, &product),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
