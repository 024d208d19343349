use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use memcluster::gateway::{ChatClient, HttpChatClient, OracleScript, ScriptedOracle};
use memcluster::metrics::MetricsReport;
use memcluster::model::{Mode, Partition, RunConfig};
use memcluster::pipeline::{
    ablate, evaluate_run, ingest_corpus, resume_run, run_clustering, sweep_offsets, PipelineError,
    RunArtifacts,
};

#[derive(Parser)]
#[command(name = "memcluster", about = "Single-pass stateful LLM text clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one clustering pass over a JSONL corpus
    Cluster(ClusterArgs),
    /// Evaluate a stored partition against corpus gold labels
    Evaluate(EvaluateArgs),
    /// Run one clustering per transition offset and tabulate the results
    Sweep(SweepArgs),
    /// Run the ablation variants and tabulate the comparison
    Ablate(AblateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Relaxed,
    Dual,
}

#[derive(Args)]
struct CommonArgs {
    /// Newline-delimited JSON corpus: {"id"?, "text", "label"?}
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long)]
    k_max: usize,
    /// Signed shift of the relaxed-to-strict switching threshold
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    offset: i64,
    /// Render an empty Known-labels list every step
    #[arg(long)]
    no_memory: bool,
    /// Drop the few-shot Examples section from prompts
    #[arg(long)]
    no_fewshot: bool,
    /// dual (default) switches by memory size; strict/relaxed force one prompt
    #[arg(long, value_enum, default_value_t = ModeArg::Dual)]
    mode: ModeArg,
    /// JSON script for the deterministic oracle client (no provider needed)
    #[arg(long)]
    oracle_script: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shuffle document order with the run seed
    #[arg(long)]
    shuffle: bool,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "run")]
    out_dir: PathBuf,
    /// Continue from the event log in --out-dir
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    input: PathBuf,
    /// partition.json produced by `cluster`
    #[arg(long)]
    partition: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
          default_value = "-10,0,10,50,100,200")]
    offsets: Vec<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &CommonArgs) -> RunConfig {
    let mut config = RunConfig::with_k_range(args.k_min, args.k_max);
    config.offset = args.offset;
    config.use_memory = !args.no_memory;
    config.use_fewshot = !args.no_fewshot;
    config.forced_mode = match args.mode {
        ModeArg::Dual => None,
        ModeArg::Strict => Some(Mode::Strict),
        ModeArg::Relaxed => Some(Mode::Relaxed),
    };
    config.seed = args.seed;
    config.shuffle = args.shuffle;
    if let Some(model) = &args.model {
        config.llm_settings.model = model.clone();
    }
    if let Some(base_url) = &args.base_url {
        config.llm_settings.base_url = base_url.clone();
    }
    config
}

fn build_client(args: &CommonArgs, config: &RunConfig) -> Result<Box<dyn ChatClient>> {
    match &args.oracle_script {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading oracle script {}", path.display()))?;
            let script: OracleScript =
                serde_json::from_str(&text).context("parsing oracle script")?;
            Ok(Box::new(ScriptedOracle::new(script)?))
        }
        None => Ok(Box::new(HttpChatClient::new(config.llm_settings.clone())?)),
    }
}

fn write_artifacts(out_dir: &Path, artifacts: &RunArtifacts) -> Result<()> {
    fs::write(
        out_dir.join("partition.json"),
        serde_json::to_string_pretty(&artifacts.partition)?,
    )?;
    if let Some(metrics) = &artifacts.metrics {
        fs::write(out_dir.join("metrics.json"), serde_json::to_string_pretty(metrics)?)?;
        let table = format!("{}\n{}\n", MetricsReport::table_header(), metrics.table_row("run"));
        fs::write(out_dir.join("metrics.txt"), table)?;
    }
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let corpus = ingest_corpus(&args.common.input)?;
    let config = build_config(&args.common);
    config.validate()?;
    fs::create_dir_all(&args.out_dir)?;
    let events_path = args.out_dir.join("events.ndjson");
    let mut client = build_client(&args.common, &config)?;

    let artifacts = if args.resume {
        resume_run(&events_path, &corpus, &config, client.as_mut())?
    } else {
        run_clustering(&corpus, &config, client.as_mut(), Some(&events_path))?
    };

    write_artifacts(&args.out_dir, &artifacts)?;
    println!(
        "clustered {} documents into {} clusters ({} events)",
        artifacts.partition.num_documents(),
        artifacts.partition.num_clusters(),
        artifacts.events.len()
    );
    if let Some(metrics) = &artifacts.metrics {
        println!("{}", MetricsReport::table_header());
        println!("{}", metrics.table_row("run"));
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let corpus = ingest_corpus(&args.input)?;
    if corpus.is_empty() {
        bail!("corpus is empty");
    }
    let partition: Partition = serde_json::from_str(
        &fs::read_to_string(&args.partition)
            .with_context(|| format!("reading {}", args.partition.display()))?,
    )?;
    let artifacts = RunArtifacts {
        partition,
        final_memory: Default::default(),
        events: Vec::new(),
        metrics: None,
        config_snapshot: RunConfig::with_k_range(1, 1),
    };
    let metrics = evaluate_run(&artifacts, &corpus)?;
    println!("{}", MetricsReport::table_header());
    println!("{}", metrics.table_row("run"));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let corpus = ingest_corpus(&args.common.input)?;
    let config = build_config(&args.common);
    let mut factory = |c: &RunConfig| -> Result<Box<dyn ChatClient>, PipelineError> {
        build_client(&args.common, c).map_err(|e| {
            PipelineError::Gateway(memcluster::gateway::GatewayError::Transport(e.to_string()))
        })
    };
    let report = sweep_offsets(&corpus, &config, &args.offsets, &mut factory);
    let table = report.render_table();
    print!("{table}");
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let corpus = ingest_corpus(&args.common.input)?;
    let config = build_config(&args.common);
    let mut factory = |c: &RunConfig| -> Result<Box<dyn ChatClient>, PipelineError> {
        build_client(&args.common, c).map_err(|e| {
            PipelineError::Gateway(memcluster::gateway::GatewayError::Transport(e.to_string()))
        })
    };
    let report = ablate(&corpus, &config, &mut factory);
    let table = report.render_table();
    print!("{table}");
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Ablate(args) => cmd_ablate(args),
    }
}
