//! Command-line front end for the mailcat pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mailcat::pipeline::{self, PipelineConfig, Workdir};
use mailcat::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "mailcat", version, about = "Latent-category email classification pipeline")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working directory holding every stage's inputs and outputs.
    #[arg(long, global = true, default_value = "mailcat-work")]
    workdir: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic corpus with ground truth.
    Synth {
        #[arg(long)]
        senders: Option<usize>,
        #[arg(long)]
        manual_share: Option<f64>,
    },
    /// Validate a corpus file and copy it into the working directory.
    Ingest { input: PathBuf },
    /// Roll messages up into per-sender aggregates.
    Aggregate,
    /// Build the pruned content, address and folder vocabularies.
    Vocab(VocabArgs),
    /// Train LDA over folder documents and name the topics.
    Lda(LdaArgs),
    /// Produce the labeled sender set.
    Label(LabelArgs),
    /// Train sender- and message-level models.
    Train(TrainArgs),
    /// Build the sender table and the lightweight rules.
    BuildTable(TableArgs),
    /// Classify a corpus with the three-stage cascade.
    Classify {
        /// Corpus to classify; defaults to the working-directory corpus.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Domain-split evaluation, ablation table and ROC plots.
    Evaluate(EvalArgs),
    /// Traffic coverage and human/machine statistics.
    Report,
    /// Every stage from synth to report.
    Run {
        #[arg(long)]
        senders: Option<usize>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Args, Debug)]
struct VocabArgs {
    #[arg(long)]
    content_top: Option<usize>,
    #[arg(long)]
    content_min_senders: Option<u64>,
    #[arg(long)]
    address_top: Option<usize>,
    #[arg(long)]
    address_min_senders: Option<u64>,
    #[arg(long)]
    folder_top: Option<usize>,
    #[arg(long)]
    folder_min_senders: Option<u64>,
    #[arg(long)]
    keywords: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LdaArgs {
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated K values for the coverage report.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<usize>>,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    folder_min_messages: Option<u64>,
    #[arg(long)]
    topic_labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LabelArgs {
    #[arg(long)]
    tau_v: Option<u64>,
    #[arg(long)]
    tau_f: Option<usize>,
    #[arg(long)]
    lda_threshold: Option<f64>,
    #[arg(long)]
    labeled_folders: Option<PathBuf>,
    #[arg(long)]
    manual: Option<PathBuf>,
    #[arg(long)]
    no_cotrain: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    hash_bits: Option<u32>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    per_sender: Option<usize>,
    #[arg(long)]
    include_folder_features: bool,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    whitelist_top: Option<usize>,
    #[arg(long)]
    whitelist_consistency: Option<f64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Comma-separated feature subsets.
    #[arg(long, value_delimiter = ',')]
    subsets: Option<Vec<String>>,
    #[arg(long)]
    testset_size: Option<usize>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Error> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::config(format!("{}: {}", p.display(), e.message())))
        }
    }
}

fn apply_overrides(cfg: &mut PipelineConfig, cli: &Cli) {
    set(&mut cfg.seed, cli.seed);
    match &cli.command {
        Command::Synth { senders, manual_share } => {
            set(&mut cfg.synth.senders, *senders);
            set(&mut cfg.synth.manual_share, *manual_share);
        }
        Command::Run { senders } => set(&mut cfg.synth.senders, *senders),
        Command::Vocab(a) => {
            set(&mut cfg.vocab.content_top, a.content_top);
            set(&mut cfg.vocab.content_min_senders, a.content_min_senders);
            set(&mut cfg.vocab.address_top, a.address_top);
            set(&mut cfg.vocab.address_min_senders, a.address_min_senders);
            set(&mut cfg.vocab.folder_top, a.folder_top);
            set(&mut cfg.vocab.folder_min_senders, a.folder_min_senders);
            if a.keywords.is_some() {
                cfg.vocab.keywords = a.keywords.clone();
            }
        }
        Command::Lda(a) => {
            set(&mut cfg.lda.k, a.k);
            set(&mut cfg.lda.candidates, a.candidates.clone());
            set(&mut cfg.lda.passes, a.passes);
            set(&mut cfg.lda.folder_min_messages, a.folder_min_messages);
            if a.topic_labels.is_some() {
                cfg.lda.topic_labels = a.topic_labels.clone();
            }
        }
        Command::Label(a) => {
            set(&mut cfg.label.tau_v, a.tau_v);
            set(&mut cfg.label.tau_f, a.tau_f);
            set(&mut cfg.label.lda_threshold, a.lda_threshold);
            if a.labeled_folders.is_some() {
                cfg.label.labeled_folders = a.labeled_folders.clone();
            }
            if a.manual.is_some() {
                cfg.label.manual = a.manual.clone();
            }
            if a.no_cotrain {
                cfg.label.cotrain = false;
            }
        }
        Command::Train(a) => {
            set(&mut cfg.train.hash_bits, a.hash_bits);
            set(&mut cfg.train.epochs, a.epochs);
            set(&mut cfg.train.learning_rate, a.learning_rate);
            set(&mut cfg.train.l2, a.l2);
            set(&mut cfg.train.per_sender, a.per_sender);
            if a.include_folder_features {
                cfg.train.include_folder_features = true;
            }
        }
        Command::BuildTable(a) => {
            set(&mut cfg.table.cutoff, a.cutoff);
            set(&mut cfg.table.whitelist_top, a.whitelist_top);
            set(&mut cfg.table.whitelist_consistency, a.whitelist_consistency);
        }
        Command::Evaluate(a) => {
            set(&mut cfg.eval.repeats, a.repeats);
            set(&mut cfg.eval.train_fraction, a.train_fraction);
            set(&mut cfg.eval.subsets, a.subsets.clone());
            set(&mut cfg.eval.testset_size, a.testset_size);
        }
        _ => {}
    }
}

fn execute(cli: &Cli) -> Result<String, Error> {
    let mut cfg = load_config(cli.config.as_deref())?;
    apply_overrides(&mut cfg, cli);
    cfg.validate()?;
    if let Command::Config = cli.command {
        return toml::to_string(&cfg).map_err(|e| Error::config(e.to_string()));
    }
    let wd = Workdir::new(&cli.workdir)?;
    match &cli.command {
        Command::Synth { .. } => pipeline::run_synth(&wd, &cfg),
        Command::Ingest { input } => pipeline::run_ingest(&wd, input),
        Command::Aggregate => pipeline::run_aggregate(&wd),
        Command::Vocab(_) => pipeline::run_vocab(&wd, &cfg),
        Command::Lda(_) => pipeline::run_lda(&wd, &cfg),
        Command::Label(_) => pipeline::run_label(&wd, &cfg),
        Command::Train(_) => pipeline::run_train(&wd, &cfg),
        Command::BuildTable(_) => pipeline::run_build_table(&wd, &cfg),
        Command::Classify { input } => {
            let (summary, timing) = pipeline::run_classify(&wd, &cfg, input.as_deref())?;
            Ok(format!(
                "{summary}throughput_msgs_per_sec\t{:.0}\ntable_stage_msgs_per_sec\t{:.0}\n",
                timing.messages_per_sec, timing.table_stage_messages_per_sec
            ))
        }
        Command::Evaluate(_) => pipeline::run_evaluate(&wd, &cfg),
        Command::Report => pipeline::run_report(&wd),
        Command::Run { .. } => {
            let t = pipeline::run_all(&wd, &cfg)?;
            let mut s = String::new();
            for (stage, secs) in t.stages {
                s.push_str(&format!("{stage}\t{secs:.2}s\n"));
            }
            s.push_str(&std::fs::read_to_string(wd.auc_table()).map_err(|e| Error::io(&wd.auc_table(), e))?);
            Ok(s)
        }
        Command::Config => unreachable!("handled above"),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_INTERNAL);
        }
    }
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(out)) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
