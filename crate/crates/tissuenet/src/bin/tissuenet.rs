//! Command-line front end: analyze an architecture file, train a model,
//! evaluate a checkpoint, and compare models with CE/SE scores.
//!
//! Every run prints a header recording the tool version, seed and config,
//! and failures exit nonzero with a one-line machine-parseable category.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tissuenet::arch::ArchSpec;
use tissuenet::checkpoint::{load_checkpoint, save_checkpoint};
use tissuenet::cost::{
    analyze, compute_ce, compute_se, measure_built_model, BaselineRecord, CostReport,
    EfficiencyScores, FlopConvention,
};
use tissuenet::data::{load_cifar10, load_cifar100, load_mnist, synth_dataset, Dataset};
use tissuenet::error::Error;
use tissuenet::optim::{OptimKind, Schedule};
use tissuenet::train::{evaluate, train, TrainConfig};

#[derive(Parser)]
#[command(name = "tissuenet", version, about = "Compact networks from stacked basic units")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-layer and total parameter/FLOP report for an architecture file.
    Analyze {
        /// Architecture JSON file.
        #[arg(long)]
        arch: PathBuf,
        /// Override the spec's input shape, e.g. 3x32x32.
        #[arg(long)]
        input_shape: Option<String>,
        /// Directory for CSV/JSON reports (stdout only if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an architecture on a dataset and write logs + best checkpoint.
    Train {
        #[arg(long)]
        arch: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Accuracy of a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// CE/SE efficiency scores of a run against a baseline record.
    Compare {
        /// JSON file with acc/flops/params of the compact model (for
        /// example a train summary).
        #[arg(long)]
        run: PathBuf,
        /// JSON file with acc/flops/params of the baseline.
        #[arg(long)]
        baseline: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DatasetKind {
    Mnist,
    Cifar10,
    Cifar100,
    Synth,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, value_enum)]
    dataset: DatasetKind,
    /// Directory holding the dataset files (unused for synth).
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    lr0: f64,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    #[arg(long, default_value_t = 10)]
    warmup_epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    weight_decay: f64,
    #[arg(long, value_enum, default_value = "sgd-momentum")]
    optimizer: OptimizerArg,
    #[arg(long, value_enum, default_value = "cosine")]
    schedule: ScheduleArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    SgdMomentum,
    Adam,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleArg {
    Constant,
    Cosine,
}

fn error_category(e: &Error) -> &'static str {
    match e {
        Error::Shape { .. } => "shape",
        Error::Geometry(_) => "geometry",
        Error::Partition(_) => "partition",
        Error::State(_) => "state",
        Error::Config(_) => "config",
        Error::Policy(_) => "policy",
        Error::Domain(_) => "domain",
        Error::Format { .. } => "format",
        Error::NonFinite { .. } => "non-finite",
        Error::Checkpoint(_) => "checkpoint",
        Error::Io(_) => "io",
        Error::Parse(_) => "parse",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: category={} message={e}", error_category(&e));
            ExitCode::FAILURE
        }
    }
}

fn header(seed: Option<u64>, config: &str) -> String {
    let mut h = format!("# tissuenet v{}\n", env!("CARGO_PKG_VERSION"));
    if let Some(s) = seed {
        h.push_str(&format!("# seed: {s}\n"));
    }
    h.push_str(&format!("# config: {config}\n"));
    h
}

fn parse_shape(text: &str) -> Result<Vec<usize>, Error> {
    text.split('x')
        .map(|p| p.parse::<usize>().map_err(|_| Error::Parse(format!("bad input shape '{text}'"))))
        .collect()
}

fn load_dataset(args: &DataArgs) -> Result<(Dataset, Dataset), Error> {
    match args.dataset {
        DatasetKind::Mnist => load_mnist(&args.data_dir),
        DatasetKind::Cifar10 => load_cifar10(&args.data_dir),
        DatasetKind::Cifar100 => load_cifar100(&args.data_dir),
        DatasetKind::Synth => Ok((
            synth_dataset(0, 2000, 10, 32, true)?,
            synth_dataset(1, 400, 10, 32, true)?,
        )),
    }
}

/// Reshape image datasets to flat features when the model wants rank-1
/// input.
fn fit_dataset(ds: &Dataset, input_shape: &[usize]) -> Result<Dataset, Error> {
    if input_shape.len() == 1 && ds.images.shape().len() != 2 {
        ds.flattened()
    } else {
        Ok(ds.clone())
    }
}

fn cmd_analyze(
    arch_path: &Path,
    input_shape: Option<String>,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let mut arch = ArchSpec::load(arch_path)?;
    if let Some(text) = input_shape {
        arch.input_shape = parse_shape(&text)?;
    }
    let report = analyze(&arch)?;
    // Cross-check the closed forms against the built model's actual weight
    // tensors and executed matrix dimensions.
    let model = arch.build()?;
    let (p, m) = measure_built_model(&model, &arch.input_shape)?;
    let consistent = p == report.total_params && m == report.total_macs;

    print!("{}", header(Some(arch.seed), &format!("analyze {}", arch.name)));
    println!("layer            kind              params        macs  out_shape");
    for l in &report.layers {
        let shape = l.out_shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
        println!("{:<16} {:<16} {:>9} {:>11}  {shape}", l.name, l.kind, l.params, l.macs);
    }
    println!("total params: {}", report.total_params);
    println!("total flops (1 per MAC): {}", report.total_flops(FlopConvention::MacIsOne));
    println!("total flops (2 per MAC): {}", report.total_flops(FlopConvention::MacIsTwo));
    println!(
        "closed-form vs built-layer cross-check: {}",
        if consistent { "PASS" } else { "FAIL" }
    );
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        let head = header(Some(arch.seed), &format!("analyze {}", arch.name));
        write_report_files(&dir, &head, &report)?;
        println!("reports written to {}", dir.display());
    }
    if !consistent {
        return Err(Error::Domain("analyzer cross-check failed".into()));
    }
    Ok(())
}

fn write_report_files(dir: &Path, head: &str, report: &CostReport) -> Result<(), Error> {
    for (conv, name) in
        [(FlopConvention::MacIsOne, "cost_1mac.csv"), (FlopConvention::MacIsTwo, "cost_2mac.csv")]
    {
        std::fs::write(dir.join(name), format!("{head}{}", report.to_csv(conv)))?;
    }
    std::fs::write(dir.join("cost.json"), report.to_json())?;
    Ok(())
}

fn cmd_train(
    arch_path: &Path,
    data: &DataArgs,
    out: &Path,
    args: &TrainArgs,
) -> Result<(), Error> {
    let arch = ArchSpec::load(arch_path)?;
    let cfg = TrainConfig {
        optimizer: match args.optimizer {
            OptimizerArg::SgdMomentum => OptimKind::SgdMomentum,
            OptimizerArg::Adam => OptimKind::Adam,
        },
        lr0: args.lr0,
        weight_decay: args.weight_decay,
        batch_size: args.batch_size,
        epochs: args.epochs,
        warmup_epochs: args.warmup_epochs.min(args.epochs),
        schedule: match args.schedule {
            ScheduleArg::Constant => Schedule::Constant,
            ScheduleArg::Cosine => Schedule::Cosine,
        },
        seed: args.seed,
        ..Default::default()
    };
    let (train_ds, test_ds) = load_dataset(data)?;
    let train_ds = fit_dataset(&train_ds, &arch.input_shape)?;
    let test_ds = fit_dataset(&test_ds, &arch.input_shape)?;

    let config_line = format!(
        "train {} epochs={} lr0={} batch={} optimizer={:?} schedule={:?} wd={}",
        arch.name, cfg.epochs, cfg.lr0, cfg.batch_size, cfg.optimizer, cfg.schedule,
        cfg.weight_decay
    );
    print!("{}", header(Some(cfg.seed), &config_line));

    let mut model = arch.build()?;
    let outcome = train(&mut model, &train_ds, &test_ds, &cfg)?;
    for e in &outcome.log.epochs {
        println!(
            "epoch {:>3}  lr {:.5}  loss {:.5}  train {:.2}%  test {:.2}%",
            e.epoch, e.lr, e.train_loss, e.train_acc, e.test_acc
        );
    }

    std::fs::create_dir_all(out)?;
    let head = header(Some(cfg.seed), &config_line);
    std::fs::write(out.join("runlog.csv"), format!("{head}{}", outcome.log.to_csv()))?;
    let report = analyze(&arch)?;
    let summary = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": config_line,
        "seed": cfg.seed,
        "arch": arch.name,
        "acc": outcome.log.best_test_acc,
        "best_epoch": outcome.log.best_epoch,
        "params": report.total_params,
        "macs": report.total_macs,
        "flops": report.total_flops(FlopConvention::MacIsTwo),
        "flop_convention": "mac-is-two",
    });
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap())?;
    save_checkpoint(&out.join("best.ckpt"), &arch, &outcome.best_model)?;
    println!(
        "best test acc {:.2}% (epoch {}); artifacts in {}",
        outcome.log.best_test_acc,
        outcome.log.best_epoch,
        out.display()
    );
    Ok(())
}

fn cmd_eval(ckpt: &Path, data: &DataArgs) -> Result<(), Error> {
    let (arch, mut model) = load_checkpoint(ckpt)?;
    let (_, test_ds) = load_dataset(data)?;
    let test_ds = fit_dataset(&test_ds, &arch.input_shape)?;
    print!("{}", header(Some(arch.seed), &format!("eval {}", arch.name)));
    let acc = evaluate(&mut model, &test_ds)?;
    println!("test accuracy: {acc:.2}%");
    Ok(())
}

fn read_record(path: &Path) -> Result<BaselineRecord, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn cmd_compare(run: &Path, baseline: &Path) -> Result<(), Error> {
    let model = read_record(run)?;
    let base = read_record(baseline)?;
    let scores = EfficiencyScores {
        ce: compute_ce(model.acc, model.flops, &base)?,
        se: compute_se(model.acc, model.params, &base)?,
    };
    print!("{}", header(None, &format!("compare {} vs {}", run.display(), baseline.display())));
    println!("model:    acc {:.4}%  flops {:.6e}  params {:.6e}", model.acc, model.flops, model.params);
    println!("baseline: acc {:.4}%  flops {:.6e}  params {:.6e}", base.acc, base.flops, base.params);
    println!("CE = {:.4}", scores.ce);
    println!("SE = {:.4}", scores.se);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze { arch, input_shape, out } => cmd_analyze(&arch, input_shape, out),
        Command::Train { arch, data, out, train } => cmd_train(&arch, &data, &out, &train),
        Command::Eval { checkpoint, data } => cmd_eval(&checkpoint, &data),
        Command::Compare { run, baseline } => cmd_compare(&run, &baseline),
    }
}
