//! Command-line surface: dataset synthesis, flow training, controlled
//! sampling, metric sweeps, and model verification.
//!
//! Every randomized command takes an explicit `--seed` (default 0) and prints
//! it in its output header; re-running with the same inputs and seed produces
//! byte-identical files. Exit codes: 0 success, 1 usage error, 2 data error,
//! 3 verification failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

mod verify;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use priorflow::control::{controlled_sample, ControlSpec};
use priorflow::flow::{self, FlowModel, FlowShape, PriorMode, TrainConfig};
use priorflow::metrics::{
    alpha_sweep, format_alpha_table, format_sweep_table, lambda_sweep, ExclusivePair, Gaussian1d,
};
use priorflow::numerics::Activation;
use priorflow::priors::DiagonalGaussian;
use priorflow::synthlab::{default_scene, generate_dataset, load_dataset, LatentDataset};
use priorflow::Rng;

#[derive(Parser)]
#[command(name = "priorflow", version)]
#[command(about = "Controllable sampling via density estimation in a flow-mapped prior space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset with known densities
    Synth(SynthArgs),
    /// Train a flow on a labeled latent dataset
    Train(TrainArgs),
    /// Sample a single attribute at a given scale
    Sample(SampleArgs),
    /// Draw controlled samples for a weighted attribute combination
    Control(ControlArgs),
    /// Emit metric sweep tables
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Run the verification suite against a trained model
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset path (line-delimited records)
    #[arg(long)]
    out: PathBuf,
    /// Samples per attribute
    #[arg(long)]
    per_attr: Option<usize>,
    /// Latent dimension of the scene
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flat key=value config file; flags win over file entries
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Input dataset
    #[arg(long)]
    data: PathBuf,
    /// Where to write the trained model
    #[arg(long)]
    model_out: PathBuf,
    /// Where to write the loss trace (default: <model-out>.loss.csv)
    #[arg(long)]
    loss_out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// fixed | learned
    #[arg(long)]
    prior_mode: Option<String>,
    /// Gradient clip (global norm)
    #[arg(long)]
    clip: Option<f64>,
    /// Number of coupling layers
    #[arg(long)]
    layers: Option<usize>,
    /// Hidden widths of the subnets, comma separated
    #[arg(long)]
    hidden: Option<String>,
    /// tanh | relu
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    scale_clamp: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    /// Attribute to sample
    #[arg(long)]
    attr: String,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ControlArgs {
    #[arg(long)]
    model: PathBuf,
    /// Attribute weights, e.g. "pos=0.7,neg=0.3" (must sum to 1)
    #[arg(long)]
    weights: String,
    #[arg(long)]
    lambda: Option<f64>,
    /// Center offset: either a full vector "dx,dy,..." or a single scalar,
    /// applied along the direction from the first attribute's mean toward
    /// the second's (negative values move away from the second)
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Sampling-scale sweep over an analytic 1-D pair
    Lambda(LambdaSweepArgs),
    /// Interpolation-weight sweep on a trained model
    Alpha(AlphaSweepArgs),
}

#[derive(Args)]
struct LambdaSweepArgs {
    /// Grid "start:end:step" or a single value
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    target_mu: Option<f64>,
    #[arg(long)]
    target_sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    interferer_mu: Option<f64>,
    #[arg(long)]
    interferer_sigma: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AlphaSweepArgs {
    #[arg(long)]
    model: PathBuf,
    /// The attribute pair, e.g. "pos,neg": weights go (alpha, 1-alpha)
    #[arg(long)]
    attrs: String,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Tolerance profile: default | strict
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Errors carrying their exit code.
pub enum CliError {
    Usage(String),
    Data(String),
    Verification,
}

impl From<priorflow::Error> for CliError {
    fn from(e: priorflow::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Flat key=value config file. Every key must be consumed by the command.
struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Data(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::Usage(format!("config line {}: expected key=value", i + 1))
                })?;
                entries.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self { entries })
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: invalid value `{raw}`"))),
        }
    }

    fn finish(self) -> CliResult<()> {
        if let Some(key) = self.entries.keys().next() {
            return Err(CliError::Usage(format!(
                "config contains unknown key `{key}`"
            )));
        }
        Ok(())
    }
}

fn write_output(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn load_model_or_data_err(path: &Path) -> CliResult<FlowModel> {
    flow::load_model(path)
        .map_err(|e| CliError::Data(format!("cannot load model {}: {e}", path.display())))
}

fn load_dataset_or_data_err(path: &Path) -> CliResult<LatentDataset> {
    load_dataset(path)
        .map_err(|e| CliError::Data(format!("cannot load dataset {}: {e}", path.display())))
}

/// Resolved configuration, echoed to stderr and returned as comment lines
/// for output headers.
fn log_config(command: &str, entries: &[(&str, String)]) -> String {
    let mut header = String::new();
    writeln!(header, "# priorflow {command}").unwrap();
    for (key, value) in entries {
        writeln!(header, "# {key} {value}").unwrap();
        eprintln!("config: {key}={value}");
    }
    header
}

/// Parse "start:end:step" (inclusive, direction inferred) or a single value.
fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |t: &str| -> CliResult<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("invalid grid number `{t}`")))
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [start, end, step] => {
            let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
            if !(step > 0.0) {
                return Err(CliError::Usage(format!(
                    "grid step must be positive, got {step}"
                )));
            }
            let span = (end - start).abs();
            let n = (span / step).round() as usize;
            if (span - n as f64 * step).abs() > 1e-9 * step.max(1.0) {
                return Err(CliError::Usage(format!(
                    "grid step {step} does not evenly divide [{start}, {end}]"
                )));
            }
            let dir = if end >= start { 1.0 } else { -1.0 };
            Ok((0..=n).map(|i| start + dir * i as f64 * step).collect())
        }
        _ => Err(CliError::Usage(format!(
            "grid must be `value` or `start:end:step`, got `{text}`"
        ))),
    }
}

fn float_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid number `{t}`")))
        })
        .collect()
}

/// Render latent samples in dataset format, tagged with the control spec.
fn samples_to_records(samples: &[Vec<f64>], tag: &str) -> String {
    let mut out = String::new();
    for x in samples {
        writeln!(out, "{}", priorflow::synthlab::record_to_string(x, tag)).unwrap();
    }
    out
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.config.as_deref())?;
    let per_attr = args.per_attr.or(cfg.take("per-attr")?).unwrap_or(5000);
    let dim = args.dim.or(cfg.take("dim")?).unwrap_or(2);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    cfg.finish()?;

    let scene = default_scene(dim)?;
    let dataset = generate_dataset(&scene, per_attr, seed)?;
    let attrs: Vec<&str> = scene.iter().map(|d| d.id.as_str()).collect();
    let header = log_config(
        "synth",
        &[
            ("seed", seed.to_string()),
            ("dim", dim.to_string()),
            ("per-attr", per_attr.to_string()),
            ("attrs", attrs.join(",")),
        ],
    );
    let body = priorflow::synthlab::dataset_to_string(&dataset);
    write_output(&args.out, &format!("{header}{body}"))?;
    println!("wrote {} records to {}", dataset.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.config.as_deref())?;
    let epochs = args.epochs.or(cfg.take("epochs")?).unwrap_or(100);
    let batch = args.batch.or(cfg.take("batch")?).unwrap_or(256);
    let lr = args.lr.or(cfg.take("lr")?).unwrap_or(1e-3);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    let prior_mode_text = args
        .prior_mode
        .or(cfg.take("prior-mode")?)
        .unwrap_or_else(|| "learned".to_string());
    let clip = args.clip.or(cfg.take("clip")?).unwrap_or(5.0);
    let layers = args
        .layers
        .or(cfg.take("layers")?)
        .unwrap_or(flow::DEFAULT_NUM_LAYERS);
    let hidden_text = args
        .hidden
        .or(cfg.take("hidden")?)
        .unwrap_or_else(|| "64,64".to_string());
    let activation_text = args
        .activation
        .or(cfg.take("activation")?)
        .unwrap_or_else(|| "tanh".to_string());
    let scale_clamp = args
        .scale_clamp
        .or(cfg.take("scale-clamp")?)
        .unwrap_or(flow::DEFAULT_SCALE_CLAMP);
    cfg.finish()?;

    let prior_mode =
        PriorMode::parse(&prior_mode_text).map_err(|e| CliError::Usage(e.to_string()))?;
    let activation =
        Activation::parse(&activation_text).map_err(|e| CliError::Usage(e.to_string()))?;
    let hidden: Vec<usize> = hidden_text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("invalid hidden width `{t}`")))
        })
        .collect::<CliResult<_>>()?;

    let dataset = load_dataset_or_data_err(&args.data)?;
    let shape = FlowShape {
        dim: dataset.dim(),
        num_layers: layers,
        hidden,
        activation,
        scale_clamp,
    };
    let mut model = FlowModel::random_init(&shape, seed)?;
    for attr in dataset.attribute_counts().keys() {
        model.register_attribute(attr, DiagonalGaussian::standard(dataset.dim()))?;
    }
    let train_cfg = TrainConfig {
        epochs,
        batch_size: batch,
        learning_rate: lr,
        seed,
        prior_mode,
        grad_clip: clip,
    };
    log_config(
        "train",
        &[
            ("data", args.data.display().to_string()),
            ("dim", dataset.dim().to_string()),
            ("epochs", epochs.to_string()),
            ("batch", batch.to_string()),
            ("lr", lr.to_string()),
            ("seed", seed.to_string()),
            ("prior-mode", prior_mode.name().to_string()),
            ("clip", clip.to_string()),
            ("layers", layers.to_string()),
            ("hidden", hidden_text.clone()),
            ("activation", activation_text.clone()),
            ("scale-clamp", scale_clamp.to_string()),
        ],
    );

    let outcome = flow::train(model, &dataset, &train_cfg)?;
    flow::save_model(&outcome.model, &args.model_out)
        .map_err(|e| CliError::Data(format!("cannot write model: {e}")))?;

    let loss_path = args
        .loss_out
        .unwrap_or_else(|| PathBuf::from(format!("{}.loss.csv", args.model_out.display())));
    let mut trace = String::from("epoch,nll\n");
    for (epoch, nll) in outcome.loss_trace.iter().enumerate() {
        writeln!(trace, "{epoch},{nll:.6}").unwrap();
    }
    write_output(&loss_path, &trace)?;
    println!(
        "trained {} epochs, final NLL {:.4}; model at {}",
        epochs,
        outcome.loss_trace.last().unwrap(),
        args.model_out.display()
    );
    Ok(())
}

fn parse_offset(
    text: &str,
    model: &FlowModel,
    terms: &[(String, f64)],
    dim: usize,
) -> CliResult<Vec<f64>> {
    let values = float_list(text)?;
    if values.len() == dim {
        return Ok(values);
    }
    if values.len() == 1 && dim != 1 {
        if terms.len() < 2 {
            return Err(CliError::Usage(
                "scalar offset needs at least two attributes to define a direction".into(),
            ));
        }
        let a = model.prior(&terms[0].0)?;
        let b = model.prior(&terms[1].0)?;
        let diff: Vec<f64> = b.mean().iter().zip(a.mean()).map(|(x, y)| x - y).collect();
        let norm = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(CliError::Data(
                "offset direction undefined: attribute means coincide".into(),
            ));
        }
        // `+ 0.0` normalizes any negative zero out of the display.
        return Ok(diff.iter().map(|d| d / norm * values[0] + 0.0).collect());
    }
    Err(CliError::Usage(format!(
        "offset must have 1 or {dim} components, got {}",
        values.len()
    )))
}

#[allow(clippy::too_many_arguments)]
fn run_control(
    model_path: &Path,
    weights: &str,
    lambda: f64,
    offset_text: Option<&str>,
    count: usize,
    seed: u64,
    out: &Path,
    command_name: &str,
) -> CliResult<()> {
    let terms = ControlSpec::parse_weights(weights).map_err(|e| CliError::Usage(e.to_string()))?;
    // Weight-sum and lambda violations are usage errors even when the model
    // path is bad, so validate the control spec before touching the filesystem.
    let mut spec =
        ControlSpec::new(terms, lambda, None).map_err(|e| CliError::Usage(e.to_string()))?;
    let model = load_model_or_data_err(model_path)?;
    let offset = offset_text
        .map(|t| parse_offset(t, &model, &spec.terms, model.dim()))
        .transpose()?;
    spec.center_offset = offset.clone();
    if spec.exceeds_intersection_bound(model.dim()) {
        eprintln!(
            "warning: {} attributes in a {}-dimensional prior space cannot share a common \
             intersection center in general position",
            spec.terms.len(),
            model.dim()
        );
    }
    let mut rng = Rng::new(seed);
    let samples = controlled_sample(&model, &spec, count, &mut rng)?;
    let tag = spec.weights_tag();
    let header = log_config(
        command_name,
        &[
            ("model", model_path.display().to_string()),
            ("weights", tag.clone()),
            ("lambda", lambda.to_string()),
            (
                "offset",
                offset
                    .map(|o| {
                        o.iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .unwrap_or_else(|| "none".to_string()),
            ),
            ("count", count.to_string()),
            ("seed", seed.to_string()),
        ],
    );
    let body = samples_to_records(&samples, &tag);
    write_output(out, &format!("{header}{body}"))?;
    println!("wrote {count} samples to {}", out.display());
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.config.as_deref())?;
    let lambda = args.lambda.or(cfg.take("lambda")?).unwrap_or(1.0);
    let count = args.count.or(cfg.take("count")?).unwrap_or(100);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    cfg.finish()?;
    let weights = format!("{}=1.0", args.attr);
    run_control(
        &args.model,
        &weights,
        lambda,
        None,
        count,
        seed,
        &args.out,
        "sample",
    )
}

fn cmd_control(args: ControlArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.config.as_deref())?;
    let lambda = args.lambda.or(cfg.take("lambda")?).unwrap_or(1.0);
    let count = args.count.or(cfg.take("count")?).unwrap_or(100);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    let offset = args.offset.clone().or(cfg.take("offset")?);
    cfg.finish()?;
    run_control(
        &args.model,
        &args.weights,
        lambda,
        offset.as_deref(),
        count,
        seed,
        &args.out,
        "control",
    )
}

fn cmd_sweep_lambda(args: LambdaSweepArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.config.as_deref())?;
    let grid_text = args
        .grid
        .or(cfg.take("grid")?)
        .unwrap_or_else(|| "1.0:0.0:0.1".to_string());
    let target_mu = args.target_mu.or(cfg.take("target-mu")?).unwrap_or(0.0);
    let target_sigma = args
        .target_sigma
        .or(cfg.take("target-sigma")?)
        .unwrap_or(1.0);
    let interferer_mu = args
        .interferer_mu
        .or(cfg.take("interferer-mu")?)
        .unwrap_or(1.5);
    let interferer_sigma = args
        .interferer_sigma
        .or(cfg.take("interferer-sigma")?)
        .unwrap_or(1.0);
    cfg.finish()?;

    let grid = parse_grid(&grid_text)?;
    if grid.iter().any(|&l| l < 0.0) {
        return Err(CliError::Usage("lambda grid values must be >= 0".into()));
    }
    let pair = ExclusivePair::baseline(
        Gaussian1d::new(target_mu, target_sigma),
        Gaussian1d::new(interferer_mu, interferer_sigma),
    )?;
    let rows = lambda_sweep(&pair, &grid)?;
    let header = log_config(
        "sweep lambda",
        &[
            ("grid", grid_text.clone()),
            ("target", format!("N({target_mu},{target_sigma})")),
            (
                "interferer",
                format!("N({interferer_mu},{interferer_sigma})"),
            ),
        ],
    );
    write_output(&args.out, &format!("{header}{}", format_sweep_table(&rows)))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_sweep_alpha(args: AlphaSweepArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.config.as_deref())?;
    let grid_text = args
        .grid
        .or(cfg.take("grid")?)
        .unwrap_or_else(|| "1.0:0.0:0.1".to_string());
    let lambda = args.lambda.or(cfg.take("lambda")?).unwrap_or(1.0);
    let count = args.count.or(cfg.take("count")?).unwrap_or(500);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    cfg.finish()?;

    let (attr_a, attr_b) = args
        .attrs
        .split_once(',')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| CliError::Usage("attrs must be `target,other`".into()))?;
    let grid = parse_grid(&grid_text)?;
    let model = load_model_or_data_err(&args.model)?;
    let mut rng = Rng::new(seed);
    let rows = alpha_sweep(&model, &attr_a, &attr_b, &grid, lambda, count, &mut rng)?;
    let header = log_config(
        "sweep alpha",
        &[
            ("model", args.model.display().to_string()),
            ("attrs", format!("{attr_a},{attr_b}")),
            ("grid", grid_text.clone()),
            ("lambda", lambda.to_string()),
            ("count", count.to_string()),
            ("seed", seed.to_string()),
        ],
    );
    write_output(&args.out, &format!("{header}{}", format_alpha_table(&rows)))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> CliResult<()> {
    let mut cfg = ConfigFile::load(args.config.as_deref())?;
    let profile_text = args
        .profile
        .or(cfg.take("profile")?)
        .unwrap_or_else(|| "default".to_string());
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    cfg.finish()?;

    let profile = verify::Profile::parse(&profile_text).map_err(CliError::Usage)?;
    let model = load_model_or_data_err(&args.model)?;
    log_config(
        "verify",
        &[
            ("model", args.model.display().to_string()),
            ("profile", profile_text.clone()),
            ("seed", seed.to_string()),
        ],
    );
    let report = verify::run(&model, &profile, seed)?;
    print!("{}", report.text);
    if report.all_passed {
        println!("verification: all checks passed");
        Ok(())
    } else {
        println!("verification: FAILED");
        Err(CliError::Verification)
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Control(args) => cmd_control(args),
        Command::Sweep(SweepCommand::Lambda(args)) => cmd_sweep_lambda(args),
        Command::Sweep(SweepCommand::Alpha(args)) => cmd_sweep_alpha(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("data error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Verification) => ExitCode::from(3),
    }
}
