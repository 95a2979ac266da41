//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::spec::ExperimentKind;
use super::{default_jobs, run_to_dir, selftest, ExperimentSpec, Report};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "primephase", version, about = "Seeded phase retrieval experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recovery probability and NMSE over an (M, K) grid.
    Sweep(RunArgs),
    /// Patch-based image recovery with PSNR and SSIM.
    Image(RunArgs),
    /// Modulus versus intensity noise statistics over an SNR grid.
    NoiseStudy(RunArgs),
    /// Quick invariant checks.
    Selftest,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON experiment spec.
    #[arg(long)]
    spec: PathBuf,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides trials.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads [default: PRIMEPHASE_JOBS or all cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Sweep only: one row subset per M shared by all trials.
    #[arg(long)]
    fix_ensemble: bool,
}

fn load_spec(args: &RunArgs, expected: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::load(&args.spec)?;
    if spec.kind.name() != expected {
        return Err(Error::Config(format!(
            "spec kind is {}, this subcommand runs {expected}",
            spec.kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        spec.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if args.fix_ensemble {
        match &mut spec.kind {
            ExperimentKind::SparseSweep(s) => s.fix_ensemble = true,
            _ => return Err(Error::Config("--fix-ensemble applies to sweeps only".into())),
        }
    }
    spec.validate()?;
    if let ExperimentKind::ImageRecovery(img) = &spec.kind {
        if !img.image.is_file() {
            return Err(Error::Config(format!("image not found: {}", img.image.display())));
        }
    }
    Ok(spec)
}

fn summarize(report: &Report) {
    match report {
        Report::Sweep(r) => {
            for c in &r.cells {
                println!(
                    "M={:<4} K={:<4} recovery={:.3} nmse={:.3e}",
                    c.m, c.k, c.recovery_prob, c.nmse
                );
            }
        }
        Report::Image(r) => {
            for t in &r.trials {
                let res = &t.result;
                println!(
                    "trial {}: X psnr={:.2} ssim={:.4}  DZ psnr={:.2} ssim={:.4}",
                    res.trial,
                    res.psnr_x.unwrap_or(f64::NAN),
                    res.ssim_x.unwrap_or(f64::NAN),
                    res.psnr_dz.unwrap_or(f64::NAN),
                    res.ssim_dz.unwrap_or(f64::NAN)
                );
            }
        }
        Report::Noise(r) => {
            for row in &r.rows {
                println!(
                    "snr={:>6.1} dB var_ratio={:.4} below_half={} outside_regime={}",
                    row.snr_db,
                    row.var_ratio.unwrap_or(f64::NAN),
                    row.below_half,
                    row.outside_regime
                );
            }
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    if err.is_config_error() || matches!(err, Error::Image(_)) {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (args, kind) = match &cli.command {
        Command::Selftest => {
            let checks = selftest::run_selftest();
            for c in &checks {
                println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return if checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_RUNTIME
            };
        }
        Command::Sweep(a) => (a, "sparse_sweep"),
        Command::Image(a) => (a, "image_recovery"),
        Command::NoiseStudy(a) => (a, "noise_study"),
    };
    let spec = match load_spec(args, kind) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_to_dir(&spec, args.jobs.unwrap_or_else(default_jobs), &args.out) {
        Ok(report) => {
            summarize(&report);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
