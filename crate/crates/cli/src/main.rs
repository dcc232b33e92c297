//! `quatprop` command-line tool.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 runtime
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use quatprop::data::{load_dataset, make_random_network, random_sample};
use quatprop::failures::{demonstrate_rule_failures, FailureReport};
use quatprop::ghr::DEFAULT_FD_STEP;
use quatprop::identities::max_identity_residual;
use quatprop::model_io::{load_network, save_network};
use quatprop::nn::CheckReport;
use quatprop::rng::{seeded, uniform_quaternion};
use quatprop::train::{
    align_to_teacher, weight_diff, write_generated, write_metrics_csv, EpochMetrics, WeightDiff,
    METRICS_FILE, STUDENT_FILE, TEACHER_FILE, TRAIN_FILE, VAL_FILE,
};
use quatprop::{gradient_check, Activation, Error, TrainConfig};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Quaternion neural networks with GHR-calculus backpropagation.
#[derive(Debug, Parser)]
#[command(name = "quatprop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a teacher model plus training and validation datasets.
    GenData(ConfigArgs),
    /// Train a student on generated data and write metrics and the model.
    Train(TrainArgs),
    /// Show which derivative rules hold for quaternion functions.
    VerifyCalculus(VerifyArgs),
    /// Compare analytic gradients with finite differences on a random network.
    GradCheck(GradCheckArgs),
}

#[derive(Debug, Clone, Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = 250)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Layer sizes from input to output.
    #[arg(long, default_value = "3,3,2,2", value_parser = parse_shape)]
    shape: Shape,
    /// Hidden activation: tanhshrink or identity.
    #[arg(long, default_value = "tanhshrink")]
    activation: Activation,
    #[arg(long, default_value_t = 1)]
    seed_teacher: u64,
    #[arg(long, default_value_t = 2)]
    seed_student: u64,
    /// Training data seed; validation data uses this plus one.
    #[arg(long, default_value_t = 3)]
    seed_data: u64,
    #[arg(long, default_value_t = 4)]
    seed_shuffle: u64,
    #[arg(long, default_value_t = 40_000)]
    train_size: usize,
    #[arg(long, default_value_t = 10_000)]
    val_size: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print a machine-readable summary instead of text.
    #[arg(long)]
    json: bool,
}

impl ConfigArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            shape: self.shape.0.clone(),
            activation: self.activation,
            seed_teacher: self.seed_teacher,
            seed_student: self.seed_student,
            seed_data: self.seed_data,
            seed_shuffle: self.seed_shuffle,
            train_size: self.train_size,
            val_size: self.val_size,
            out_dir: self.out.clone(),
        }
    }
}

#[derive(Debug, Clone, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory holding train.qds, val.qds and teacher.qnn. Defaults to --out.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    train_file: Option<PathBuf>,
    #[arg(long)]
    val_file: Option<PathBuf>,
    /// Teacher model for the weight-difference columns. Defaults to
    /// teacher.qnn in the data directory when present.
    #[arg(long)]
    teacher: Option<PathBuf>,
    /// Start from this model instead of a freshly seeded student.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Clone, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Random quaternions for the involution identity suite.
    #[arg(long, default_value_t = 1000)]
    identity_samples: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Args)]
struct GradCheckArgs {
    #[arg(long, default_value = "3,3,2,2", value_parser = parse_shape)]
    shape: Shape,
    #[arg(long, default_value = "tanhshrink")]
    activation: Activation,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Central-difference step.
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    h: f64,
    #[arg(long)]
    json: bool,
}

/// Largest relative error `grad-check` accepts.
const GRAD_CHECK_TOLERANCE: f64 = 1e-5;
const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Shape(Vec<usize>);

fn parse_shape(s: &str) -> Result<Shape, String> {
    let dims = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{t}' is not a layer size"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if dims.len() < 2 {
        return Err("a shape needs at least an input and an output size, e.g. 3,3,2,2".into());
    }
    if dims.contains(&0) {
        return Err("layer sizes must be positive".into());
    }
    Ok(Shape(dims))
}

/// A command either ran to completion or found that what it verified does
/// not hold.
enum Status {
    Ok,
    VerificationFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::Train(a) => train(&a),
        Command::VerifyCalculus(a) => verify_calculus(&a),
        Command::GradCheck(a) => grad_check(&a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerificationFailed) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(e.downcast_ref::<Error>(), Some(Error::InvalidConfig(_)));
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_RUNTIME })
        }
    }
}

fn print_json(value: &impl Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct GenDataSummary {
    train: PathBuf,
    val: PathBuf,
    teacher: PathBuf,
    train_size: usize,
    val_size: usize,
}

fn gen_data(args: &ConfigArgs) -> anyhow::Result<Status> {
    let config = args.config();
    let paths = write_generated(&config)?;
    let summary = GenDataSummary {
        train: paths[0].clone(),
        val: paths[1].clone(),
        teacher: paths[2].clone(),
        train_size: config.train_size,
        val_size: config.val_size,
    };
    if args.json {
        print_json(&summary)?;
    } else {
        println!(
            "wrote {} ({} records)",
            summary.train.display(),
            summary.train_size
        );
        println!(
            "wrote {} ({} records)",
            summary.val.display(),
            summary.val_size
        );
        println!("wrote {}", summary.teacher.display());
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct TrainSummary {
    epochs: usize,
    final_train_loss: f64,
    final_val_loss: f64,
    final_wdiff: Option<WeightDiff>,
    /// Weight difference after relabelling the student's hidden units.
    aligned_wdiff: Option<WeightDiff>,
    metrics: PathBuf,
    model: PathBuf,
}

fn train(args: &TrainArgs) -> anyhow::Result<Status> {
    let config = args.config.config();
    config.validate()?;
    let data_dir = args.data.clone().unwrap_or_else(|| config.out_dir.clone());
    let train_path = args
        .train_file
        .clone()
        .unwrap_or_else(|| data_dir.join(TRAIN_FILE));
    let val_path = args
        .val_file
        .clone()
        .unwrap_or_else(|| data_dir.join(VAL_FILE));
    let teacher_path = args
        .teacher
        .clone()
        .or_else(|| Some(data_dir.join(TEACHER_FILE)).filter(|p| p.exists()));

    let train_set = load_dataset(&train_path).context("loading training data")?;
    let val_set = load_dataset(&val_path).context("loading validation data")?;
    let teacher = teacher_path
        .as_ref()
        .map(load_network)
        .transpose()
        .context("loading teacher")?;
    let student = match &args.init {
        Some(p) => load_network(p).context("loading initial model")?,
        None => config.student()?,
    };

    let quiet = args.quiet || args.config.json;
    let outcome = quatprop::train(
        &config,
        student,
        &train_set,
        &val_set,
        teacher.as_ref(),
        |m: &EpochMetrics| {
            if !quiet {
                eprintln!(
                    "epoch {:>4}  train {:.3e}  val {:.3e}{}",
                    m.epoch,
                    m.train_loss,
                    m.val_loss,
                    m.wdiff
                        .map_or(String::new(), |w| format!("  wdiff {:.3e}", w.mean))
                );
            }
        },
    )?;

    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::Io {
        path: config.out_dir.clone(),
        source: e,
    })?;
    let metrics_path = config.out_dir.join(METRICS_FILE);
    let model_path = config.out_dir.join(STUDENT_FILE);
    write_metrics_csv(&outcome.metrics, &metrics_path)?;
    save_network(&outcome.student, &model_path)?;

    let last = outcome.metrics.last().expect("at least one epoch");
    let aligned = teacher
        .as_ref()
        .map(|t| align_to_teacher(&outcome.student, t).and_then(|a| weight_diff(&a, t)))
        .transpose()
        .ok()
        .flatten();
    let summary = TrainSummary {
        epochs: outcome.metrics.len(),
        final_train_loss: last.train_loss,
        final_val_loss: last.val_loss,
        final_wdiff: last.wdiff,
        aligned_wdiff: aligned,
        metrics: metrics_path,
        model: model_path,
    };
    if args.config.json {
        print_json(&summary)?;
    } else {
        println!("final validation loss: {:.6e}", summary.final_val_loss);
        if let Some(w) = summary.final_wdiff {
            println!(
                "weight difference to teacher: mean {:.3e}, min {:.3e}, max {:.3e}",
                w.mean, w.min, w.max
            );
        }
        if let Some(w) = summary.aligned_wdiff {
            println!(
                "after relabelling hidden units: mean {:.3e}, max {:.3e}",
                w.mean, w.max
            );
        }
        println!("wrote {}", summary.metrics.display());
        println!("wrote {}", summary.model.display());
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct IdentitySuite {
    samples: usize,
    max_residual: f64,
    passed: bool,
}

#[derive(Serialize)]
struct CalculusReport {
    rules: FailureReport,
    identities: IdentitySuite,
    passed: bool,
}

fn verify_calculus(args: &VerifyArgs) -> anyhow::Result<Status> {
    let rules = demonstrate_rule_failures(args.seed);
    let mut rng = seeded(args.seed);
    let max_residual = (0..args.identity_samples)
        .map(|_| max_identity_residual(uniform_quaternion(&mut rng, -10.0, 10.0)))
        .fold(0.0, f64::max);
    let identities = IdentitySuite {
        samples: args.identity_samples,
        max_residual,
        passed: max_residual <= IDENTITY_TOLERANCE,
    };
    let passed = rules.all_as_expected() && identities.passed;
    let report = CalculusReport {
        rules,
        identities,
        passed,
    };
    if args.json {
        print_json(&report)?;
    } else {
        print!("{}", report.rules.to_text());
        println!(
            "involution identities: {} random quaternions, max residual {:.2e} [{}]",
            report.identities.samples,
            report.identities.max_residual,
            if report.identities.passed {
                "PASSED"
            } else {
                "FAILED"
            }
        );
        println!(
            "overall: {}",
            if passed {
                "as expected"
            } else {
                "UNEXPECTED OUTCOME"
            }
        );
    }
    Ok(if passed {
        Status::Ok
    } else {
        Status::VerificationFailed
    })
}

#[derive(Serialize)]
struct GradCheckSummary {
    shape: Vec<usize>,
    activation: Activation,
    seed: u64,
    tolerance: f64,
    report: CheckReport,
    passed: bool,
}

fn grad_check(args: &GradCheckArgs) -> anyhow::Result<Status> {
    let net = make_random_network(&args.shape.0, args.activation, args.seed)?;
    let (x, d) = random_sample(net.input_dim(), net.output_dim(), args.seed.wrapping_add(1));
    let report = gradient_check(&net, &x, &d, args.h)?;
    let passed = report.max_rel_error < GRAD_CHECK_TOLERANCE;
    let summary = GradCheckSummary {
        shape: args.shape.0.clone(),
        activation: args.activation,
        seed: args.seed,
        tolerance: GRAD_CHECK_TOLERANCE,
        report,
        passed,
    };
    if args.json {
        print_json(&summary)?;
    } else {
        let r = &summary.report;
        println!(
            "{} parameters, step {:e}: max abs error {:.3e}, max rel error {:.3e} at {}",
            r.parameters, r.step, r.max_abs_error, r.max_rel_error, r.worst
        );
        println!("{}", if passed { "PASS" } else { "FAIL" });
    }
    Ok(if passed {
        Status::Ok
    } else {
        Status::VerificationFailed
    })
}
