//! Command-line front end: spectrum enumeration, intensity reports,
//! Monte-Carlo simulation and end-to-end verification, with reproducible
//! machine-readable output (same flags + seed ⇒ byte-identical files, for
//! any `--threads` value).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use octaspectrum::stats::{FitReport, GatePolicy};
use octaspectrum::words::SpectralLine;
use octaspectrum::{
    classify_isometry, interval_intensity, letter_matrix, trace, translation_length_of_trace,
    words, Error as LibError, Letter, TrialConfig,
};

/// Default master seed for the random gluing model; fix `--seed` explicitly
/// for anything you want to cite.
const DEFAULT_SEED: u64 = 1729;

#[derive(Parser)]
#[command(
    name = "octaspectrum",
    about = "Length spectrum of random octahedral hyperbolic 3-manifolds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct IntervalArgs {
    /// Lower end of the length window (also first positional argument)
    #[arg(value_name = "MIN")]
    min_pos: Option<f64>,
    /// Upper end of the length window (also second positional argument)
    #[arg(value_name = "MAX")]
    max_pos: Option<f64>,
    #[arg(long, value_name = "MIN")]
    min: Option<f64>,
    #[arg(long, value_name = "MAX")]
    max: Option<f64>,
}

impl IntervalArgs {
    fn resolve(&self) -> Result<(f64, f64), String> {
        let min = self.min.or(self.min_pos).unwrap_or(0.0);
        let max = self
            .max
            .or(self.max_pos)
            .ok_or_else(|| "an interval end is required (positional MAX or --max)".to_string())?;
        Ok((min, max))
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the machine-readable report here (stdout shows a summary)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SimArgs {
    /// Number of octahedra per sampled complex
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of Monte-Carlo trials
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Longest cycle length read from each sample (defaults to the longest
    /// enumerated class)
    #[arg(long, value_name = "LEN")]
    max_word_len: Option<usize>,
    /// Master seed; trial t draws from ChaCha stream t+1
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Sample the unconditioned configuration model (keep loops/bigons)
    #[arg(long)]
    unconditioned: bool,
    /// Worker threads for the trial loop (default: all cores); results do
    /// not depend on this
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the nine generator matrices with traces and isometry types
    Matrices,
    /// List the spectrum lines with translation length in [MIN, MAX]
    Enumerate {
        #[command(flatten)]
        interval: IntervalArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Total Poisson intensity of the window [MIN, MAX]
    Intensity {
        #[command(flatten)]
        interval: IntervalArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sample gluings and record per-class cycle counts
    Simulate {
        #[command(flatten)]
        interval: IntervalArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare simulated cycle counts against the predicted intensities
    Verify {
        #[command(flatten)]
        interval: IntervalArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Exit codes: 2 for invalid arguments, 3 when a resource guard rejects the
/// request, 1 when verification fails its tolerance gates.
fn main() -> ExitCode {
    // die quietly when the output pipe closes (e.g. `octaspectrum enumerate … | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(AppError::Args(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Resource(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

enum AppError {
    Args(String),
    Resource(String),
}

impl From<LibError> for AppError {
    fn from(e: LibError) -> Self {
        match e {
            LibError::IntervalCeiling { .. }
            | LibError::OrbitTooLarge { .. }
            | LibError::OrbitSizeOverflow { .. }
            | LibError::CycleLengthCap { .. }
            | LibError::CycleCountCap { .. } => AppError::Resource(e.to_string()),
            other => AppError::Args(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Args(format!("io: {e}"))
    }
}

fn run(cli: Cli) -> Result<ExitCode, AppError> {
    match cli.command {
        Command::Matrices => {
            print_matrices();
            Ok(ExitCode::SUCCESS)
        }
        Command::Enumerate { interval, output } => {
            let (a, b) = interval.resolve().map_err(AppError::Args)?;
            let lines = words::enumerate_classes(a, b)?;
            print_spectrum_table(&lines);
            write_report(&output, || spectrum_json(&lines), || spectrum_csv(&lines))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Intensity { interval, output } => {
            let (a, b) = interval.resolve().map_err(AppError::Args)?;
            let report = interval_intensity(a, b)?;
            println!(
                "interval [{}, {}]: {} lines, word length cap {}, total intensity {}",
                sig12(a),
                sig12(b),
                report.lines.len(),
                report.word_length_cap,
                sig12(report.total_intensity)
            );
            write_report(
                &output,
                || serde_json::to_string_pretty(&report).expect("serializable") + "\n",
                || spectrum_csv(&report.lines),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            interval,
            sim,
            output,
        } => {
            if output.out.is_none() {
                return Err(AppError::Args(
                    "simulate writes the trial batch to disk; pass --out".into(),
                ));
            }
            let (a, b) = interval.resolve().map_err(AppError::Args)?;
            let (cfg, classes) = build_run(&interval_classes(a, b)?, &sim)?;
            let batch = in_pool(sim.threads, || {
                octaspectrum::collect_trial_batch(&cfg, &classes)
            })?;
            println!(
                "simulated {} trials at n = {} over {} classes (seed {})",
                cfg.trials, cfg.n, classes.len(), cfg.master_seed
            );
            write_report(
                &output,
                || serde_json::to_string_pretty(&batch).expect("serializable") + "\n",
                || batch_csv(&batch),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            interval,
            sim,
            output,
        } => {
            let (a, b) = interval.resolve().map_err(AppError::Args)?;
            let lines = interval_classes(a, b)?;
            let (cfg, classes) = build_run(&lines, &sim)?;
            let batch = in_pool(sim.threads, || {
                octaspectrum::collect_trial_batch(&cfg, &classes)
            })?;
            let lambdas: Vec<f64> = lines.iter().map(|l| l.intensity).collect();
            let report = FitReport::from_batch(&batch, &lambdas);
            for class in &report.classes {
                println!(
                    "{}: lambda {} mean {} z {} tv {}",
                    class.canonical,
                    sig12(class.fit.lambda),
                    sig12(class.fit.mean),
                    sig12(class.fit.z_score),
                    sig12(class.fit.tv_distance)
                );
            }
            let failures = report.gate_failures(&GatePolicy::default());
            write_report(
                &output,
                || serde_json::to_string_pretty(&report).expect("serializable") + "\n",
                || report.to_csv(),
            )?;
            if failures.is_empty() {
                println!("verification passed ({} classes)", report.classes.len());
                Ok(ExitCode::SUCCESS)
            } else {
                for f in &failures {
                    println!("gate failed: {f}");
                }
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn interval_classes(a: f64, b: f64) -> Result<Vec<SpectralLine>, AppError> {
    Ok(words::enumerate_classes(a, b)?)
}

fn build_run(
    lines: &[SpectralLine],
    sim: &SimArgs,
) -> Result<(TrialConfig, Vec<words::WordClass>), AppError> {
    let classes: Vec<words::WordClass> = lines.iter().map(|l| l.word_class.clone()).collect();
    let longest = classes.iter().map(|c| c.length).max().unwrap_or(3);
    let max_word_len = sim.max_word_len.unwrap_or(longest);
    if classes.iter().any(|c| c.length > max_word_len) {
        return Err(AppError::Args(format!(
            "--max-word-len {max_word_len} is below the longest enumerated class ({longest})"
        )));
    }
    Ok((
        TrialConfig {
            n: sim.n as usize,
            trials: sim.trials as usize,
            master_seed: sim.seed,
            conditioned: !sim.unconditioned,
            max_word_len,
        },
        classes,
    ))
}

fn in_pool<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> octaspectrum::Result<T> + Send,
) -> Result<T, AppError> {
    let result = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| AppError::Args(e.to_string()))?
            .install(job),
        None => job(),
    };
    Ok(result?)
}

/// 12 significant digits, the fixed text format for numeric output.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn print_matrices() {
    println!("letter  matrix                                trace     type        length");
    for letter in Letter::all() {
        let m = letter_matrix(letter);
        let t = trace(&m);
        let kind = classify_isometry(&m);
        let length = translation_length_of_trace(&t);
        println!(
            "{:<7} [[{}, {}], [{}, {}]]{:padding$} {:<9} {:<11} {}",
            letter.to_string(),
            m.a,
            m.b,
            m.c,
            m.d,
            "",
            t.to_string(),
            kind.to_string(),
            sig12(length),
            padding = 24usize.saturating_sub(format!("[[{}, {}], [{}, {}]]", m.a, m.b, m.c, m.d).len()),
        );
    }
}

fn print_spectrum_table(lines: &[SpectralLine]) {
    println!("canonical     |w|  orbit      trace      length            lambda");
    for line in lines {
        let c = &line.word_class;
        println!(
            "{:<13} {:<4} {:<10} {:<10} {} {}",
            c.canonical.to_string(),
            c.length,
            c.orbit_size,
            c.trace.to_string(),
            sig12(c.translation_length),
            sig12(line.intensity)
        );
    }
    println!("({} lines)", lines.len());
}

fn spectrum_json(lines: &[SpectralLine]) -> String {
    serde_json::to_string_pretty(lines).expect("serializable") + "\n"
}

fn spectrum_csv(lines: &[SpectralLine]) -> String {
    let mut out = String::from("canonical,word_len,orbit_size,trace_re,trace_im,length,lambda\n");
    for line in lines {
        let c = &line.word_class;
        let json = serde_json::to_value(line).expect("serializable");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.canonical,
            c.length,
            c.orbit_size,
            json["trace_re"],
            json["trace_im"],
            sig12(c.translation_length),
            sig12(line.intensity)
        ));
    }
    out
}

fn batch_csv(batch: &octaspectrum::TrialBatch) -> String {
    let mut out = String::from("trial");
    for word in &batch.classes {
        out.push(',');
        out.push_str(&word.to_string());
    }
    out.push('\n');
    for t in 0..batch.trials {
        out.push_str(&t.to_string());
        for class_counts in &batch.counts {
            out.push(',');
            out.push_str(&class_counts[t].to_string());
        }
        out.push('\n');
    }
    out
}

fn write_report(
    output: &OutputArgs,
    json: impl FnOnce() -> String,
    csv: impl FnOnce() -> String,
) -> Result<(), AppError> {
    if let Some(path) = &output.out {
        let content = match output.format {
            Format::Json => json(),
            Format::Csv => csv(),
        };
        fs::write(path, content)?;
    }
    Ok(())
}
