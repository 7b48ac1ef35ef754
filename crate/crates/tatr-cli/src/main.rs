//! Command-line driver: dataset generation, training, evaluation, the
//! four-variant ablation, and gradient checking.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error,
//! 3 numerical failure.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};
use tatr::adam::AdamConfig;
use tatr::data::Dataset;
use tatr::error::{Error, Result};
use tatr::evaluation::{ablate, ablation_summary, attention_report, evaluate_dataset};
use tatr::gradcheck::{grad_check, synthetic_check_batch};
use tatr::model::{build_model, load_checkpoint, ModelConfig, Variant};
use tatr::schema::AttributeSchema;
use tatr::synthetic::{generate, SyntheticSpec};
use tatr::training::{train, TrainConfig};

#[derive(Parser)]
#[command(
    name = "tatr",
    version,
    about = "Temporal-attention multi-task attribute recognition over tracklet features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic planted-signal dataset.
    Synth(SynthArgs),
    /// Train one model variant.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a test set.
    Eval(EvalArgs),
    /// Train and evaluate all four variants with paired seeds.
    Ablate(AblateArgs),
    /// Check tape gradients against finite differences (64-bit).
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Serialize)]
struct SynthArgs {
    /// JSON spec file; flag overrides apply on top.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Enable the anti-correlated two-channel conflict task.
    #[arg(long)]
    conflict: bool,
    #[arg(long)]
    train_tracklets: Option<usize>,
    #[arg(long)]
    test_tracklets: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    signal_frames: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Args, Serialize, Clone)]
struct TrainArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    train_manifest: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "proposed", value_parser = parse_variant)]
    variant: Variant,
    #[arg(long = "K", default_value_t = 64)]
    k: usize,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 3e-4)]
    lr: f64,
    #[arg(long, default_value_t = 5000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    d_a: usize,
    #[arg(long)]
    checkpoint_every: Option<usize>,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    test_manifest: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also write per-tracklet attention vectors.
    #[arg(long)]
    attention_report: bool,
}

#[derive(Args, Serialize)]
struct AblateArgs {
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long)]
    test_manifest: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Serialize)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Check a single variant instead of all four.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    Variant::from_name(s)
        .ok_or_else(|| format!("unknown variant '{s}', expected proposed|shared|pool|pool-sep"))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => match err.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = err.print();
                std::process::exit(0);
            }
            _ => {
                let _ = err.print();
                std::process::exit(1);
            }
        },
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(match err {
            Error::Numeric(_) => 3,
            _ => 2,
        });
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Train(args) => run_train(args),
        Command::Eval(args) => run_eval(args),
        Command::Ablate(args) => run_ablate(args),
        Command::Gradcheck(args) => run_gradcheck(args),
    }
}

fn write_run_echo<T: Serialize>(out_dir: &Path, command: &str, args: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a, T> {
        command: &'a str,
        #[serde(flatten)]
        args: &'a T,
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let json = serde_json::to_string_pretty(&Echo { command, args })
        .map_err(|e| Error::Invalid(format!("config echo: {e}")))?;
    let path = out_dir.join("run.json");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<SyntheticSpec>(&text)
                .map_err(|e| Error::format(path, format!("bad spec: {e}")))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if args.conflict {
        spec.conflict_mode = true;
    }
    if let Some(v) = args.train_tracklets {
        spec.train_tracklets = v;
    }
    if let Some(v) = args.test_tracklets {
        spec.test_tracklets = v;
    }
    if let Some(v) = args.frames {
        spec.frames = v;
    }
    if let Some(v) = args.signal_frames {
        spec.signal_frames = v;
    }
    if let Some(v) = args.noise_sigma {
        spec.noise_sigma = v;
    }

    write_run_echo(&args.out, "synth", &spec)?;
    let generated = generate(&spec, &args.out)?;
    println!(
        "wrote {} train / {} test tracklets under {}",
        spec.train_tracklets,
        spec.test_tracklets,
        generated.root.display()
    );
    Ok(())
}

fn train_config(args: &TrainArgs) -> TrainConfig {
    TrainConfig {
        k: args.k,
        n: args.n,
        d_a: args.d_a,
        variant: args.variant,
        adam: AdamConfig::with_lr(args.lr),
        steps: args.steps,
        seed: args.seed,
        grad_clip: None,
        group_weights: None,
        freeze_attention: false,
        checkpoint_every: args.checkpoint_every,
        out_dir: Some(args.out.clone()),
    }
}

fn run_train(args: TrainArgs) -> Result<()> {
    let schema = AttributeSchema::from_file(&args.schema)?;
    let dataset = Dataset::load(&args.train_manifest, &args.annotations, &schema)?;
    write_run_echo(&args.out, "train", &args)?;
    let config = train_config(&args);
    let (_, log) = train::<f32>(&dataset, &schema, &config)?;
    let final_loss = log.entries.last().map_or(f64::NAN, |e| e.total_loss);
    println!(
        "trained {} for {} steps on {} tracklets; final loss {:.6}",
        args.variant,
        args.steps,
        dataset.len(),
        final_loss
    );
    println!("checkpoint: {}", args.out.join("checkpoint_final.tatr").display());
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let schema = AttributeSchema::from_file(&args.schema)?;
    let model = load_checkpoint::<f32>(&args.checkpoint, &schema)?;
    let dataset = Dataset::load(&args.test_manifest, &args.annotations, &schema)?;
    write_run_echo(&args.out, "eval", &args)?;

    let (_, report) = evaluate_dataset(&model, &dataset, &schema, args.n, args.seed, args.threads)?;
    let metrics_path = args.out.join("metrics.txt");
    std::fs::write(&metrics_path, report.serialize()).map_err(|e| Error::io(&metrics_path, e))?;
    if args.attention_report {
        let attn = attention_report(&model, &dataset, args.n, args.seed)?;
        let attn_path = args.out.join("attention.txt");
        std::fs::write(&attn_path, attn).map_err(|e| Error::io(&attn_path, e))?;
    }
    print!("{}", report.serialize());
    Ok(())
}

fn run_ablate(args: AblateArgs) -> Result<()> {
    let schema = AttributeSchema::from_file(&args.train.schema)?;
    let train_set = Dataset::load(&args.train.train_manifest, &args.train.annotations, &schema)?;
    let test_set = Dataset::load(&args.test_manifest, &args.train.annotations, &schema)?;
    write_run_echo(&args.train.out, "ablate", &args)?;

    let base = train_config(&args.train);
    let outcomes = ablate::<f32>(
        &train_set,
        &test_set,
        &schema,
        &base,
        args.train.seed,
        args.threads,
    )?;
    for outcome in &outcomes {
        let path = args
            .train
            .out
            .join(outcome.variant.name())
            .join("metrics.txt");
        std::fs::write(&path, outcome.report.serialize()).map_err(|e| Error::io(&path, e))?;
    }
    let summary = ablation_summary(&outcomes);
    let summary_path = args.train.out.join("summary.txt");
    std::fs::write(&summary_path, &summary).map_err(|e| Error::io(&summary_path, e))?;
    print!("{summary}");
    Ok(())
}

fn run_gradcheck(args: GradcheckArgs) -> Result<()> {
    if let Some(out) = &args.out {
        write_run_echo(out, "gradcheck", &args)?;
    } else {
        let echo = serde_json::to_string(&args)
            .map_err(|e| Error::Invalid(format!("config echo: {e}")))?;
        println!("config: {echo}");
    }

    // Small fixed geometry: fast finite-difference sweep, yet every
    // variant owns at least 200 parameters.
    let schema = AttributeSchema::parse(
        "motion|mp|a,b,c\nbag|id|no,yes\ncolor|id|w,x,y,z\n",
        Path::new("<gradcheck>"),
    )?;
    let class_counts: Vec<usize> = schema.groups().iter().map(|g| g.classes.len()).collect();
    let batch = synthetic_check_batch(&class_counts, 2, 3, 10, 2, 2, args.seed);

    let variants: Vec<Variant> = match args.variant {
        Some(v) => vec![v],
        None => Variant::all().to_vec(),
    };
    let mut worst = 0.0f64;
    for variant in variants {
        let config = ModelConfig {
            variant,
            n: 3,
            d_c: 10,
            d_a: 6,
        };
        let model = build_model::<f64>(&schema, config, args.seed)?;
        let report = grad_check(&model, &batch, args.epsilon, 200, args.seed)?;
        let skipped = if report.coords_skipped > 0 {
            format!(" ({} kink coordinates skipped)", report.coords_skipped)
        } else {
            String::new()
        };
        println!(
            "{variant}: max relative error {:.3e} over {} coordinates{skipped}",
            report.max_rel_err, report.coords_checked
        );
        worst = worst.max(report.max_rel_err);
    }
    if worst >= 1e-4 {
        return Err(Error::Numeric(format!(
            "gradient check failed: max relative error {worst:.3e} >= 1e-4"
        )));
    }
    println!("gradient check passed: max relative error {worst:.3e}");
    Ok(())
}
