use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use coupled_ris::error::Error;
use coupled_ris::harness::{
    coupling_with_sidecar, emit_outputs, run_experiment, run_scaling, run_selftest, write_coupling, write_scaling_csv,
    ExperimentKind, ExperimentSpec, Instance,
};
use coupled_ris::harness::output::{write_value, SCALING_FILE};

/// Share of failed trials above which a sweep exits with status 3.
const FAILURE_THRESHOLD: f64 = 0.01;

const THREADS_ENV: &str = "COUPLED_RIS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "coupled-ris", version, about = "RIS channel simulator with mutual coupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment file (JSON instance file for `optimize`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the trial count of the config file.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads; COUPLED_RIS_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write dipole coupling matrices as CSV with a JSON sidecar.
    Coupling,
    /// Solve one instance file.
    Optimize,
    /// Gain versus array size.
    SweepN,
    /// Gain versus inter-element spacing, aware and unaware.
    SweepD,
    /// Monte Carlo validation of the scaling laws.
    Scaling,
    /// Quick numerical self-check.
    Selftest,
}

enum Failure {
    Config(String),
    Numerical(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            e => Failure::Other(e.to_string()),
        }
    }
}

fn config_failure(path: &Path, e: Error) -> Failure {
    match e {
        Error::Config(m) => Failure::Config(format!("{}: {m}", path.display())),
        e => Failure::Config(format!("{}: {e}", path.display())),
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(flag),
    }
}

/// Reads the config on top of the defaults of `kind`. With `strict`, a
/// config that names another kind is rejected.
fn load_spec(common: &Common, kind: ExperimentKind, strict: bool) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let spec = ExperimentSpec::from_toml_str(&text, Some(kind)).map_err(|e| config_failure(path, e))?;
            if strict && spec.kind != kind {
                return Err(Failure::Config(format!(
                    "{}: kind `{}` does not match this subcommand (`{}`)",
                    path.display(),
                    spec.kind.label(),
                    kind.label()
                )));
            }
            spec
        }
        None => ExperimentSpec::defaults(kind),
    };
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(trials) = common.trials {
        spec.trials = trials;
    }
    spec.validate()?;
    Ok(spec)
}

fn sweep(common: &Common, kind: ExperimentKind) -> Result<(), Failure> {
    let spec = load_spec(common, kind, true)?;
    let out = run_experiment(&spec)?;
    for path in emit_outputs(&out, &common.out)? {
        println!("{}", path.display());
    }
    let rate = out.failure_rate();
    if rate > FAILURE_THRESHOLD {
        return Err(Failure::Numerical(format!(
            "{} of {} trials failed ({:.2}%)",
            out.failures(),
            out.records.len(),
            100.0 * rate
        )));
    }
    Ok(())
}

fn coupling(common: &Common) -> Result<(), Failure> {
    let spec = load_spec(common, ExperimentKind::SingleInstance, false)?;
    for &n in &spec.n_list {
        for &d in &spec.spacing_list {
            let (z_ii, sidecar) = coupling_with_sidecar(&spec, n, d)?;
            let (csv, json) = write_coupling(&z_ii, &sidecar, &common.out, &format!("coupling_n{n}_d{d}"))?;
            println!("{}\n{}", csv.display(), json.display());
        }
    }
    Ok(())
}

fn optimize(common: &Common) -> Result<(), Failure> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::Config("`optimize` needs --config <instance.json>".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let instance = Instance::from_json(&text).map_err(|e| config_failure(path, e))?;
    let result = instance.solve()?;
    let out = result_path(&common.out, path);
    write_value(&out, &result)?;
    println!("{}", out.display());
    Ok(())
}

fn result_path(dir: &Path, instance: &Path) -> PathBuf {
    let stem = instance.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    dir.join(format!("{stem}_result.json"))
}

fn scaling(common: &Common) -> Result<(), Failure> {
    let spec = load_spec(common, ExperimentKind::ScalingValidation, true)?;
    let rows = run_scaling(&spec)?;
    let path = common.out.join(SCALING_FILE);
    write_scaling_csv(&rows, &path)?;
    println!("{}", path.display());
    Ok(())
}

fn selftest(common: &Common) -> Result<(), Failure> {
    let checks = run_selftest(common.seed.unwrap_or(1))?;
    for c in &checks {
        println!(
            "{} {:<32} worst {:.3e} (tolerance {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance
        );
    }
    write_value(&common.out.join("selftest.json"), &checks)?;
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        k => Err(Failure::Numerical(format!("{k} self-test checks failed"))),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(k) = thread_count(cli.common.threads)? {
        if k == 0 {
            return Err(Failure::Config("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
        info!("using {k} threads");
    }
    match cli.command {
        Command::Coupling => coupling(&cli.common),
        Command::Optimize => optimize(&cli.common),
        Command::SweepN => sweep(&cli.common, ExperimentKind::SweepN),
        Command::SweepD => sweep(&cli.common, ExperimentKind::SweepSpacing),
        Command::Scaling => scaling(&cli.common),
        Command::Selftest => selftest(&cli.common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
