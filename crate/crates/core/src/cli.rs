//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cache::{read_cache, write_cache, CachedDataset};
use crate::domain::{LabeledPoint, SampleSet};
use crate::error::{Error, Result};
use crate::experiment::{
    fit_and_score, generate_planted, run_final, run_sweep, sample_labeled_by, write_final_report,
    write_summary_csv, write_sweep_csv, ClassPool, FinalConfig, SweepConfig,
};
use crate::features::select_features;
use crate::mnist::{load_idx, preprocess, DEFAULT_THRESHOLD, GRID};
use crate::svm::TrainConfig;
use crate::theory::{
    class_size_upper_bound, sample_class_size, shattering_report, vc_bound_term, BoundParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "kspectra",
    version,
    about = "Learn Boolean classifiers with sparse Walsh-Hadamard spectra"
)]
pub struct Cli {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse IDX files and write the preprocessed zero/one dataset cache.
    Ingest(IngestArgs),
    /// Train one classifier on the whole dataset and write it as text.
    Train(TrainArgs),
    /// Sweep k over repeated random splits; writes sweep.csv and summary.csv.
    Sweep(SweepArgs),
    /// Train once on a large split; writes final_report.txt.
    Final(FinalArgs),
    /// Learn a planted synthetic model and report recovery.
    Planted(PlantedArgs),
    /// Run the theory checks.
    Theory(TheoryArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// IDX image file (optionally gzip-compressed).
    #[arg(long, default_value = "data/train-images-idx3-ubyte")]
    images: PathBuf,
    /// IDX label file (optionally gzip-compressed).
    #[arg(long, default_value = "data/train-labels-idx1-ubyte")]
    labels: PathBuf,
    /// Preprocessed dataset written by `ingest`; overrides --images/--labels.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Block means strictly above this become +1.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// ℓ1 budget on the coefficients.
    #[arg(long, default_value_t = 1000.0)]
    tau: f64,
    #[arg(long, default_value_t = 2000)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 1.0)]
    step_scale: f64,
}

impl SolverArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            tau: self.tau,
            max_epochs: self.max_epochs,
            tolerance: self.tolerance,
            step_scale: self.step_scale,
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, default_value = "data/train-images-idx3-ubyte")]
    images: PathBuf,
    #[arg(long, default_value = "data/train-labels-idx1-ubyte")]
    labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "mnist01.kspc")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 150)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "classifier.txt")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated sparsity levels.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "10,20,30,40,50,60,70,80,90,100,110,120,130,140,150,160,170,180,190,200,210,220,230,240,250,260,270,280"
    )]
    k_values: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 1500)]
    train_per_class: usize,
    #[arg(long, default_value_t = 2500)]
    test_per_class: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write zero wall-clock columns so identical runs produce identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct FinalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 150)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 4000)]
    train_per_class: usize,
    #[arg(long, default_value_t = 1900)]
    test_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct PlantedArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 25)]
    n: usize,
    /// Number of planted terms.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Training points.
    #[arg(long, default_value_t = 4000)]
    ell: usize,
    /// Fresh test points.
    #[arg(long, default_value_t = 4000)]
    test: usize,
    /// Features kept by screening.
    #[arg(long, default_value_t = 150)]
    select_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    /// Check the shattering construction at this n.
    #[arg(long)]
    shatter_n: Option<u32>,
    /// VC dimension for the bound term (requires --ell).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    /// Sample sign patterns of k-sparse spectra at this n (with --class-k).
    #[arg(long)]
    class_n: Option<u32>,
    #[arg(long)]
    class_k: Option<usize>,
    #[arg(long, default_value_t = 10000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(err: &Error) -> i32 {
    if err.is_numeric_error() {
        EXIT_NUMERIC
    } else if matches!(err, Error::InvalidArgument(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(Error::InvalidArgument("--jobs must be at least 1".into())),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| run(cli.command, out, err))),
        None => run(cli.command, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        // A closed stdout (e.g. piped into `head`) is not worth reporting.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn run(command: Command, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    match command {
        Command::Ingest(args) => ingest(args, out),
        Command::Train(args) => train_cmd(args, out),
        Command::Sweep(args) => sweep(args, out),
        Command::Final(args) => final_cmd(args, out),
        Command::Planted(args) => planted(args, out),
        Command::Theory(args) => theory(args, out, err),
    }
}

fn load_items(data: &DataArgs) -> Result<Vec<LabeledPoint>> {
    if let Some(path) = &data.cache {
        let mut file = File::open(path)
            .map_err(|e| Error::Format(format!("cannot open {}: {e}", path.display())))?;
        return Ok(read_cache(&mut file)?.items);
    }
    let images = load_idx(&data.images, &data.labels)?;
    preprocess(&images, data.threshold)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn ingest(args: IngestArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let images = load_idx(&args.images, &args.labels)?;
    let items = preprocess(&images, args.threshold)?;
    let zeros = items.iter().filter(|it| it.label < 0).count();
    let data = CachedDataset {
        dim: GRID * GRID,
        threshold: args.threshold,
        items,
    };
    let mut file = create(&args.output)?;
    write_cache(&mut file, &data)?;
    file.flush()?;
    writeln!(
        out,
        "ingested {} images: {zeros} zeros, {} ones -> {}",
        images.len(),
        data.items.len() - zeros,
        args.output.display()
    )?;
    Ok(())
}

fn train_cmd(args: TrainArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let items = load_items(&args.data)?;
    let sample = SampleSet::from_labeled(&items)?;
    let eval = fit_and_score(
        &sample,
        &sample,
        args.d,
        args.k,
        &args.solver.config(args.seed),
    )?;
    let mut file = create(&args.output)?;
    file.write_all(eval.classifier.to_text().as_bytes())?;
    file.flush()?;
    writeln!(
        out,
        "train_error: {:.6}\nobjective: {:.6}\nepochs: {}\nconverged: {}\nwrote {}",
        eval.train_error,
        eval.training.objective,
        eval.training.epochs_used,
        eval.training.converged,
        args.output.display()
    )?;
    Ok(())
}

fn sweep(args: SweepArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let items = load_items(&args.data)?;
    let pool = ClassPool::new(&items)?;
    let cfg = SweepConfig {
        k_values: args.k_values,
        trials_per_k: args.trials,
        train_per_class: args.train_per_class,
        test_per_class: args.test_per_class,
        d: args.d,
        train: args.solver.config(args.seed),
        root_seed: args.seed,
    };
    let result = run_sweep(&pool, &cfg)?;
    let sweep_path = args.out_dir.join("sweep.csv");
    let summary_path = args.out_dir.join("summary.csv");
    let mut file = create(&sweep_path)?;
    write_sweep_csv(&mut file, &result.records, !args.no_timing)?;
    file.flush()?;
    let mut file = create(&summary_path)?;
    write_summary_csv(&mut file, &result.summary)?;
    file.flush()?;
    for row in &result.summary {
        writeln!(
            out,
            "k={:>4}  test={:.6} ± {:.6}  train={:.6}  gap={:.6}",
            row.k, row.mean_test, row.std_test, row.mean_train, row.mean_gap
        )?;
    }
    writeln!(
        out,
        "wrote {} and {}",
        sweep_path.display(),
        summary_path.display()
    )?;
    Ok(())
}

fn final_cmd(args: FinalArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let items = load_items(&args.data)?;
    let pool = ClassPool::new(&items)?;
    let cfg = FinalConfig {
        train_per_class: args.train_per_class,
        test_per_class: args.test_per_class,
        k: args.k,
        d: args.d,
        train: args.solver.config(args.seed),
        seed: args.seed,
    };
    let report = run_final(&pool, &cfg)?;
    let report_path = args.out_dir.join("final_report.txt");
    let mut file = create(&report_path)?;
    write_final_report(&mut file, &cfg, &report, !args.no_timing)?;
    file.flush()?;
    let classifier_path = args.out_dir.join("final_classifier.txt");
    let mut file = create(&classifier_path)?;
    file.write_all(report.classifier.to_text().as_bytes())?;
    file.flush()?;
    writeln!(
        out,
        "test_error: {:.6} ({} of {} misclassified)\nwall_seconds: {:.3}\nwrote {}",
        report.test_error,
        report.misclassified.len(),
        report.test_size,
        report.wall_seconds,
        report_path.display()
    )?;
    Ok(())
}

fn planted(args: PlantedArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let (train_set, truth) = generate_planted(args.n, args.k, args.d, args.ell, args.seed)?;
    let test_set = sample_labeled_by(&truth, args.test, args.seed)?;
    let eval = fit_and_score(
        &train_set,
        &test_set,
        args.d,
        args.select_k,
        &args.solver.config(args.seed),
    )?;
    let selected = select_features(&train_set, args.d, args.select_k)?;
    let recovered = truth
        .masks()
        .filter(|m| selected.masks().contains(m))
        .count();
    writeln!(
        out,
        "train_error: {:.6}\ntest_error: {:.6}\nrecovered: {recovered}/{}",
        eval.train_error,
        eval.test_error,
        truth.sparsity()
    )?;
    Ok(())
}

fn theory(
    args: TheoryArgs,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<()> {
    let mut ran = false;
    if let Some(n) = args.shatter_n {
        ran = true;
        let report = shattering_report(n)?;
        let status = if report.is_shattered() { "OK" } else { "FAIL" };
        writeln!(
            out,
            "shattering: {status} {}/{}",
            report.realized, report.total
        )?;
    }
    match (args.h, args.ell) {
        (Some(h), Some(ell)) => {
            ran = true;
            let params = BoundParams::new(h, ell, args.eta)?;
            if !params.is_sample_sufficient() {
                writeln!(err, "warning: ell = {ell} is smaller than h = {h}")?;
            }
            writeln!(out, "bound_term: {:.6}", vc_bound_term(&params)?)?;
        }
        (None, None) => {}
        _ => return Err(Error::InvalidArgument("--h and --ell go together".into())),
    }
    match (args.class_n, args.class_k) {
        (Some(n), Some(k)) => {
            ran = true;
            let count = sample_class_size(n, k, args.trials, args.seed)?;
            writeln!(
                out,
                "class_size: >= {count} (upper bound {:.0})",
                class_size_upper_bound(n, k)
            )?;
        }
        (None, None) => {}
        _ => {
            return Err(Error::InvalidArgument(
                "--class-n and --class-k go together".into(),
            ))
        }
    }
    if !ran {
        return Err(Error::InvalidArgument(
            "nothing to do: pass --shatter-n, --h/--ell or --class-n/--class-k".into(),
        ));
    }
    Ok(())
}
