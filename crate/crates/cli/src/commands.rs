use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsnn::evolve::{
    advance, checkpoint_save, config_hash, write_history, Checkpoint, GaRunState, StopReason,
    Target,
};
use qsnn::genome::{parse_network, write_network, write_static_array_source, write_table_text};
use qsnn::srm::{neuron_labels, simulate_network, write_trace_table};
use qsnn::tasks::{classify_outputs, write_patterns, SpikePattern};
use qsnn::{QuantizedNetwork, SpikeTask, SpikeTrain};

use crate::config::RunConfig;
use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const HISTORY_FILE: &str = "history.tsv";
pub const NETWORK_FILE: &str = "network.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const PATTERNS_FILE: &str = "patterns.tsv";

#[derive(Debug, Parser)]
#[command(
    name = "qsnn",
    version,
    about = "Train and inspect quantized spiking neural networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a network and write its artifacts to a new run directory.
    Train(TrainArgs),
    /// Continue a run from its checkpoint.
    Resume(ResumeArgs),
    /// Score a trained network on the task's patterns.
    Eval(EvalArgs),
    /// Dump membrane potentials of every computing neuron for one pattern.
    Trace(TraceArgs),
    /// Convert a network file to another format.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct RunControl {
    /// Write a checkpoint every N generations (overrides the config).
    #[arg(long, value_name = "N")]
    pub checkpoint_every: Option<usize>,
    /// Pause after this generation, leaving a checkpoint to resume from.
    #[arg(long, value_name = "GENERATION")]
    pub stop_after: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `ga.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parent directory for the run directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub control: RunControl,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Must resolve to the configuration the checkpoint was written with.
    /// Defaults to the copy embedded in the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "config")]
    pub seed: Option<u64>,
    /// Directory for the artifacts; defaults to the checkpoint's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub control: RunControl,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// One network, or one per fold in fold order.
    #[arg(long, required = true)]
    pub network: Vec<PathBuf>,
    /// Folds to score a single network on (default: the configured fold).
    #[arg(long)]
    pub fold: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    /// Pattern index: XOR row 0..3, or iris sample 0..149 in file order.
    #[arg(long)]
    pub pattern: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// Weight/delay matrices, one block per layer pair.
    TableText,
    /// C header with level indices and delays as flat integer arrays.
    StaticArraySource,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => train(&a),
        Command::Resume(a) => resume(&a),
        Command::Eval(a) => eval(&a),
        Command::Trace(a) => trace(&a),
        Command::Export(a) => export(&a),
    }
}

fn with_output<F>(out: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match out {
        Some(p) => {
            let mut buf = Vec::new();
            f(&mut buf)?;
            fs::write(p, buf)?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn load_network(path: &Path) -> Result<QuantizedNetwork, CliError> {
    Ok(parse_network(&fs::read_to_string(path)?)?)
}

/// A fresh `run-<unix seconds>-seed<seed>` directory under `base`.
fn new_run_dir(base: &Path, seed: u64) -> Result<PathBuf, CliError> {
    fs::create_dir_all(base)?;
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let stem = format!("run-{secs}-seed{seed}");
    for n in 0.. {
        let name = if n == 0 {
            stem.clone()
        } else {
            format!("{stem}-{n}")
        };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

fn train(args: &TrainArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    let task = cfg.spike_task(cfg.training_patterns()?)?;
    let dir = new_run_dir(args.out.as_deref().unwrap_or(&cfg.out_dir), cfg.ga.seed)?;
    let mut state = GaRunState::initialize(&cfg.ga, task.chromosome_len(), &task)?;
    evolve_into(&cfg, &task, &mut state, &dir, &args.control)
}

fn resume(args: &ResumeArgs) -> Result<(), CliError> {
    let cp = Checkpoint::from_text(&fs::read_to_string(&args.checkpoint)?)?;
    let cfg = match &args.config {
        Some(path) => {
            let mut cfg = RunConfig::load(path)?;
            if let Some(seed) = args.seed {
                cfg = cfg.with_seed(seed);
            }
            cp.verify_config(&cfg.canonical_text())?;
            cfg
        }
        None => RunConfig::from_toml(&cp.config_text)?,
    };
    let mut state = cp.state;
    if let Some(reason) = state.stop_reason(&cfg.ga) {
        println!(
            "run already finished at generation {} (stop reason: {}); nothing to do",
            state.generation,
            reason.name()
        );
        return Ok(());
    }
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .checkpoint
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    fs::create_dir_all(&dir)?;
    let task = cfg.spike_task(cfg.training_patterns()?)?;
    evolve_into(&cfg, &task, &mut state, &dir, &args.control)
}

/// Evolves `state` and writes every artifact of the run into `dir`.
fn evolve_into(
    cfg: &RunConfig,
    task: &SpikeTask,
    state: &mut GaRunState,
    dir: &Path,
    control: &RunControl,
) -> Result<(), CliError> {
    let text = cfg.canonical_text();
    let every = control.checkpoint_every.unwrap_or(cfg.checkpoint_every);
    if every == 0 {
        return Err(CliError::Usage("--checkpoint-every must be >= 1".into()));
    }
    fs::write(dir.join(CONFIG_FILE), &text)?;
    let mut patterns = Vec::new();
    write_patterns(&mut patterns, task.patterns())?;
    fs::write(dir.join(PATTERNS_FILE), patterns)?;

    let ckpt = dir.join(CHECKPOINT_FILE);
    let stop = advance(state, &cfg.ga, task, control.stop_after, |s| {
        if s.generation % every == 0 {
            checkpoint_save(&ckpt, s, &text)?;
        }
        Ok(())
    })?;
    checkpoint_save(&ckpt, state, &text)?;
    write_artifacts(cfg, task, state, stop, &text, dir)?;

    let best = state.best();
    match stop {
        Some(reason) => println!(
            "{}: stopped at generation {} ({}), best MSE {} ms^2",
            dir.display(),
            state.generation,
            reason.name(),
            best.objective
        ),
        None => println!(
            "{}: paused at generation {}, best MSE {} ms^2; resume with --checkpoint {}",
            dir.display(),
            state.generation,
            best.objective,
            ckpt.display()
        ),
    }
    Ok(())
}

fn write_artifacts(
    cfg: &RunConfig,
    task: &SpikeTask,
    state: &GaRunState,
    stop: Option<StopReason>,
    config_text: &str,
    dir: &Path,
) -> Result<(), CliError> {
    let mut history = Vec::new();
    write_history(&mut history, &state.history)?;
    fs::write(dir.join(HISTORY_FILE), history)?;

    let best = state.best();
    let net = task.decode(&best.chromosome)?;
    let mut network = Vec::new();
    write_network(&mut network, &net)?;
    fs::write(dir.join(NETWORK_FILE), network)?;

    let manifest = format!(
        "qsnn_version = {}\ntask = {}\ntopology = {}\nscheme = {}\nseed = {}\nconfig_hash = {}\n\
         status = {}\nstop_reason = {}\ngenerations = {}\nbest_mse_ms2 = {}\nbest_chromosome = {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.task,
        cfg.topology,
        cfg.scheme,
        cfg.ga.seed,
        config_hash(config_text),
        if stop.is_some() { "finished" } else { "paused" },
        stop.map_or("none", StopReason::name),
        state.generation,
        best.objective,
        best.chromosome,
    );
    fs::write(dir.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

fn fmt_time(t: Option<f64>) -> String {
    // 0 stands for "no spike".
    format!("{}", t.unwrap_or(0.0))
}

fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let nets = args
        .network
        .iter()
        .map(|p| load_network(p))
        .collect::<Result<Vec<_>, _>>()?;
    let folds = cfg.fold_patterns()?;
    let default_fold = cfg.iris.as_ref().map_or(0, |i| i.fold);

    let plan: Vec<(usize, &QuantizedNetwork)> = if nets.len() == 1 {
        let picked = if args.fold.is_empty() {
            vec![default_fold]
        } else {
            args.fold.clone()
        };
        if let Some(&bad) = picked.iter().find(|&&f| f >= folds.len()) {
            return Err(CliError::Usage(format!(
                "fold {bad} out of range (0..{})",
                folds.len()
            )));
        }
        picked.into_iter().map(|f| (f, &nets[0])).collect()
    } else if nets.len() == folds.len() && args.fold.is_empty() {
        nets.iter().enumerate().collect()
    } else {
        return Err(CliError::Usage(format!(
            "give one network, or one per fold ({} folds)",
            folds.len()
        )));
    };

    struct FoldResult {
        fold: usize,
        train_mse: f64,
        validation_mse: f64,
        rows: Vec<(Option<f64>, Target)>,
    }
    let mut results = Vec::new();
    for (f, net) in plan {
        let (train, validation) = &folds[f];
        let train_task = cfg.spike_task(train.clone())?;
        let val_task = cfg.spike_task(validation.clone())?;
        let firsts: Vec<_> = val_task
            .outputs(net)?
            .iter()
            .map(SpikeTrain::first)
            .collect();
        results.push(FoldResult {
            fold: f,
            train_mse: train_task.evaluate_network(net)?,
            validation_mse: val_task.evaluate_network(net)?,
            rows: firsts.into_iter().zip(val_task.targets()).collect(),
        });
    }
    let tol = cfg.tolerance_ms();
    let per_fold: Vec<_> = results
        .iter()
        .map(|r| {
            (
                r.rows.iter().map(|x| x.0).collect(),
                r.rows.iter().map(|x| x.1).collect(),
            )
        })
        .collect();
    let summary = classify_outputs(&per_fold, tol, cfg.all_patterns()?.len())?;

    with_output(args.out.as_deref(), |w| {
        writeln!(w, "fold\tpattern\tfirst_spike_ms\tdesired_ms\tcorrect")?;
        for r in &results {
            for (k, (a, d)) in r.rows.iter().enumerate() {
                let ok = qsnn::tasks::count_misclassified(&[*a], &[*d], tol)? == 0;
                writeln!(
                    w,
                    "{}\t{k}\t{}\t{}\t{}",
                    r.fold,
                    fmt_time(*a),
                    fmt_time(d.time()),
                    u8::from(ok)
                )?;
            }
        }
        writeln!(w)?;
        writeln!(
            w,
            "fold\ttrain_mse_ms2\tvalidation_mse_ms2\tvalidation_patterns\tmisclassified"
        )?;
        for (r, e) in results.iter().zip(&summary.fold_errors) {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{e}",
                r.fold,
                r.train_mse,
                r.validation_mse,
                r.rows.len()
            )?;
        }
        writeln!(w)?;
        writeln!(w, "metric\tvalue")?;
        writeln!(w, "mean_misclassified\t{}", summary.mean_errors)?;
        writeln!(w, "accuracy_pct\t{:.2}", summary.accuracy_pct)?;
        Ok(())
    })
}

fn trace(args: &TraceArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let net = load_network(&args.network)?;
    if net.topology() != &cfg.topology {
        return Err(qsnn::Error::Shape(format!(
            "network topology [{}] does not match config topology [{}]",
            net.topology(),
            cfg.topology
        ))
        .into());
    }
    let patterns: Vec<SpikePattern> = cfg.all_patterns()?;
    let pattern = patterns.get(args.pattern).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown pattern {} (task has {})",
            args.pattern,
            patterns.len()
        ))
    })?;
    let run = simulate_network(&net, &pattern.input_trains()?, &cfg.sim, true)?;
    let traces = run.traces.expect("trace requested");
    let labels = neuron_labels(net.topology());
    let names: Vec<String> = labels.into_iter().skip(1).flatten().collect();
    let refs: Vec<_> = traces.iter().flatten().collect();
    with_output(args.out.as_deref(), |w| {
        write_trace_table(w, &names, &refs, cfg.sim.dt_ms)?;
        Ok(())
    })
}

fn export(args: &ExportArgs) -> Result<(), CliError> {
    let net = load_network(&args.network)?;
    with_output(args.out.as_deref(), |w| {
        match args.format {
            ExportFormat::TableText => write_table_text(w, &net)?,
            ExportFormat::StaticArraySource => write_static_array_source(w, &net)?,
        }
        Ok(())
    })
}
