use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use morphome_lab::pipeline::{
    cmd_analyze, cmd_eval, cmd_gen, cmd_gnm, cmd_regress, cmd_report, cmd_train, Pipeline, PipelineConfig,
    PipelineError,
};

/// Nonce-verb reinflection experiments.
///
/// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
/// failure. MORPHOME_WORKDIR overrides the configured work directory.
#[derive(Parser)]
#[command(name = "morphome-lab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Work directory; takes precedence over the config and MORPHOME_WORKDIR.
    #[arg(long)]
    workdir: Option<PathBuf>,
    /// Root seed; replaces `root_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one condition (label such as 90L-10NL, or an L fraction).
    #[arg(long)]
    condition: Option<String>,
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate lexicons and train/test splits.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Output directory for the generated data.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model per condition and replicate.
    Train {
        #[command(flatten)]
        common: Common,
        /// Directory produced by `gen`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Number of parameter updates.
        #[arg(long)]
        updates: Option<u64>,
    },
    /// Decode the test items with every trained model.
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Accuracies, preference ratios, correlations and KS tests.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Wordlikeness scores of the test items.
    Gnm {
        #[command(flatten)]
        common: Common,
    },
    /// Mixed-effects regression on wordlikeness.
    Regress {
        #[command(flatten)]
        common: Common,
    },
    /// Consolidated report with published values alongside.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn pipeline(c: &Common, tweak: impl FnOnce(&mut PipelineConfig)) -> Result<Pipeline, PipelineError> {
    let level = match c.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let mut cfg = PipelineConfig::load(&c.config)?;
    if let Some(w) = &c.workdir {
        cfg.paths.workdir = w.clone();
    }
    if let Some(s) = c.seed {
        cfg.root_seed = s;
    }
    if let Some(cond) = &c.condition {
        cfg.conditions = vec![cond.clone()];
    }
    tweak(&mut cfg);
    Pipeline::new(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let report = |paths: Vec<PathBuf>| {
        for p in paths {
            println!("{}", p.display());
        }
    };
    match cli.cmd {
        Cmd::Gen { common, out } => {
            let p = pipeline(&common, |c| {
                if out.is_some() {
                    c.paths.data = out;
                }
            })?;
            report(cmd_gen(&p)?);
        }
        Cmd::Train { common, data, updates } => {
            let p = pipeline(&common, |c| {
                if data.is_some() {
                    c.paths.data = data;
                }
                if let Some(u) = updates {
                    c.train.max_updates = u;
                }
            })?;
            report(cmd_train(&p)?);
        }
        Cmd::Eval { common } => report(cmd_eval(&pipeline(&common, |_| {})?)?.to_vec()),
        Cmd::Analyze { common } => report(cmd_analyze(&pipeline(&common, |_| {})?)?),
        Cmd::Gnm { common } => report(vec![cmd_gnm(&pipeline(&common, |_| {})?)?]),
        Cmd::Regress { common } => report(vec![cmd_regress(&pipeline(&common, |_| {})?)?]),
        Cmd::Report { common } => report(cmd_report(&pipeline(&common, |_| {})?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("morphome-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
