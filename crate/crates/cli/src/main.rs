//! Command line front end for the lungct toolkit.
//!
//! Every subcommand prints machine-readable `key=value` lines on stdout
//! and human-readable errors on stderr. Exit codes: 0 on full success,
//! 1 when a batch ran but at least one case failed, 2 for usage or
//! configuration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lungct::{
    accuracy, generate_cohort, inflate_kernel, preprocess_batch, read_features_csv,
    read_lvw, read_manifest, read_scores_csv, roc_curve, split, train_logistic, write_lvw,
    write_roc_csv, LossKind, LvwKernel, ManifestRow, RunConfig, TrainConfig,
    DEFAULT_FOCAL_ALPHA, DEFAULT_FOCAL_GAMMA,
};

#[derive(Parser)]
#[command(
    name = "lungct",
    version,
    about = "Deterministic CT preprocessing and evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess every manifest case into fixed-size LVOL crops.
    ///
    /// Writes `<case_id>.lvol` per case plus `run_report.txt` into the
    /// output directory and prints the same report on stdout. Failed
    /// cases are reported, not fatal; they flip the exit code to 1.
    Preprocess {
        /// Manifest CSV (case_id,path,label); paths are taken relative
        /// to the manifest's directory.
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for LVOL files and the run report.
        #[arg(long)]
        out: PathBuf,
        /// Flat `key = value` config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker count override; 0 means one worker per core.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Generate a synthetic DICOM cohort with manifest and features.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cases: usize,
        /// Fraction of cases that get a nodule.
        #[arg(long = "positive-frac", default_value_t = 0.34)]
        positive_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score a predictions file: ROC CSV out, auc and accuracy printed.
    Eval {
        /// Scores CSV (case_id,label,score).
        #[arg(long)]
        scores: PathBuf,
        /// Where to write the ROC curve CSV.
        #[arg(long = "roc-out")]
        roc_out: PathBuf,
        /// Decision threshold for the accuracy line.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Split a manifest into train and test manifests.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long = "train-frac")]
        train_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "out-train")]
        out_train: PathBuf,
        #[arg(long = "out-test")]
        out_test: PathBuf,
    },
    /// Inflate 2D convolution weights to 3D by depth replication.
    ///
    /// The input must be a rank-4 LVW file; the output is rank 5 with
    /// each 2D filter repeated `depth` times at weight 1/depth, so
    /// depth 1 reproduces the input payload exactly.
    Inflate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the demo logistic model on a feature table.
    ///
    /// Mirrors the reference recipe: mini-batches of 2, Adam at 5e-5,
    /// cross-entropy or focal loss. Prints one loss/AUC pair per epoch.
    TrainDemo {
        /// Features CSV (case_id,label,then numeric columns).
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, value_enum, default_value_t = LossArg::Ce)]
        loss: LossArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LossArg {
    /// Plain binary cross-entropy.
    Ce,
    /// Focal loss with the standard alpha 0.25, gamma 2.
    Focal,
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Preprocess {
            manifest,
            out,
            config,
            threads,
        } => cmd_preprocess(&manifest, &out, config.as_deref(), threads),
        Command::Phantom {
            out,
            cases,
            positive_frac,
            seed,
        } => cmd_phantom(&out, cases, positive_frac, seed),
        Command::Eval {
            scores,
            roc_out,
            threshold,
        } => cmd_eval(&scores, &roc_out, threshold),
        Command::Split {
            manifest,
            train_frac,
            seed,
            out_train,
            out_test,
        } => cmd_split(&manifest, train_frac, seed, &out_train, &out_test),
        Command::Inflate { input, depth, out } => cmd_inflate(&input, depth, &out),
        Command::TrainDemo {
            features,
            epochs,
            loss,
            seed,
        } => cmd_train_demo(&features, epochs, loss, seed),
    }
}

fn cmd_preprocess(
    manifest: &Path,
    out: &Path,
    config: Option<&Path>,
    threads: Option<usize>,
) -> Result<ExitCode, String> {
    let mut config = match config {
        Some(path) => RunConfig::load(path).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if let Some(threads) = threads {
        config.threads = threads;
    }
    let report = preprocess_batch(manifest, out, &config).map_err(|e| e.to_string())?;
    let text = report.to_text();
    fs::write(out.join("run_report.txt"), &text).map_err(|e| e.to_string())?;
    print!("{text}");
    Ok(if report.all_succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_phantom(out: &Path, cases: usize, positive_frac: f64, seed: u64) -> Result<ExitCode, String> {
    let cohort = generate_cohort(out, cases, positive_frac, seed).map_err(|e| e.to_string())?;
    let positives = cohort.iter().filter(|c| c.label == 1).count();
    println!("cohort.cases={}", cohort.len());
    println!("cohort.positives={positives}");
    println!("cohort.manifest={}", out.join("manifest.csv").display());
    println!("cohort.features={}", out.join("features.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(scores: &Path, roc_out: &Path, threshold: f64) -> Result<ExitCode, String> {
    let cases = read_scores_csv(scores).map_err(|e| e.to_string())?;
    let curve = roc_curve(&cases).map_err(|e| e.to_string())?;
    let acc = accuracy(&cases, threshold).map_err(|e| e.to_string())?;
    write_roc_csv(roc_out, &curve).map_err(|e| e.to_string())?;
    println!("eval.cases={}", cases.len());
    println!("eval.auc={}", curve.auc);
    println!("eval.threshold={threshold}");
    println!("eval.accuracy={acc}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_split(
    manifest: &Path,
    train_frac: f64,
    seed: u64,
    out_train: &Path,
    out_test: &Path,
) -> Result<ExitCode, String> {
    let rows = read_manifest(manifest).map_err(|e| e.to_string())?;
    let (train, test) = split(&rows, train_frac, seed).map_err(|e| e.to_string())?;
    // Keep the input's header convention so both halves stay valid manifests.
    let had_header = fs::read_to_string(manifest)
        .map_err(|e| e.to_string())?
        .lines()
        .next()
        == Some("case_id,path,label");
    write_manifest(out_train, &train, had_header)?;
    write_manifest(out_test, &test, had_header)?;
    println!("split.train={}", train.len());
    println!("split.test={}", test.len());
    Ok(ExitCode::SUCCESS)
}

fn write_manifest(path: &Path, rows: &[ManifestRow], header: bool) -> Result<(), String> {
    let mut text = String::new();
    if header {
        text.push_str("case_id,path,label\n");
    }
    for row in rows {
        text.push_str(&format!(
            "{},{},{}\n",
            row.case_id,
            row.path.display(),
            row.label
        ));
    }
    fs::write(path, text).map_err(|e| e.to_string())
}

fn cmd_inflate(input: &Path, depth: usize, out: &Path) -> Result<ExitCode, String> {
    if depth == 0 {
        return Err("inflation depth must be at least 1".to_string());
    }
    let kernel = match read_lvw(input).map_err(|e| e.to_string())? {
        LvwKernel::K2(k) => k,
        LvwKernel::K3(_) => {
            return Err(format!("{} already holds 3d weights", input.display()))
        }
    };
    let (kh, kw, cin, cout) = kernel.shape();
    let inflated = inflate_kernel(&kernel, depth);
    write_lvw(&LvwKernel::K3(inflated), out).map_err(|e| e.to_string())?;
    println!("inflate.in_shape={kh}x{kw}x{cin}x{cout}");
    println!("inflate.out_shape={depth}x{kh}x{kw}x{cin}x{cout}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_train_demo(
    features: &Path,
    epochs: usize,
    loss: LossArg,
    seed: u64,
) -> Result<ExitCode, String> {
    let table = read_features_csv(features).map_err(|e| e.to_string())?;
    let labels: Vec<u8> = table.iter().map(|(_, label, _)| *label).collect();
    let rows: Vec<Vec<f64>> = table.into_iter().map(|(_, _, row)| row).collect();
    let config = TrainConfig {
        loss: match loss {
            LossArg::Ce => LossKind::CrossEntropy,
            LossArg::Focal => LossKind::Focal {
                alpha: DEFAULT_FOCAL_ALPHA,
                gamma: DEFAULT_FOCAL_GAMMA,
            },
        },
        epochs,
        seed,
        ..TrainConfig::default()
    };
    let model = train_logistic(&rows, &labels, &config).map_err(|e| e.to_string())?;
    for (epoch, stats) in model.trace.iter().enumerate() {
        println!("epoch.{epoch}.loss={}", stats.mean_loss);
        println!("epoch.{epoch}.auc={}", stats.train_auc);
    }
    if let Some(last) = model.trace.last() {
        println!("train.final_loss={}", last.mean_loss);
        println!("train.final_auc={}", last.train_auc);
    }
    Ok(ExitCode::SUCCESS)
}
