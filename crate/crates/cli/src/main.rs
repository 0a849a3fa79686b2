use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsr_lab::commands::{cmd_coeffs, cmd_scan, cmd_simulate, cmd_snr_curve, emit, CommandOutput};
use qsr_lab::config::{self, ConfigError, EnvironmentBlock, OutputBlock, RawConfig, SCHEMA_VERSION};
use qsr_lab::preset::FigurePreset;
use qsr_lab::validate::run_suite;
use qsr_lab::{exit, CliError};

#[derive(Parser, Debug)]
#[command(name = "qsr-lab", version, about = "Stochastic resonance of a driven spin-boson system")]
struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named parameter set; a config file overrides its fields
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Absolute tolerance of the shift integral
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for parallel evaluation
    #[arg(long, global = true, env = "QSR_LAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Damping and shift at one temperature, as JSON
    Coeffs {
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// SNR, amplitude and phase along the temperature axis
    SnrCurve,
    /// SNR map over noise strength and temperature, with row classifications
    Scan,
    /// Integrate the driven equations and compare with the linear response
    Simulate {
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Run the built-in cross-checks
    Validate,
}

fn load(cli: &Cli, temperature: Option<f64>) -> Result<RawConfig, CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(config::parse(&text).map_err(|mut e| {
                e.field = if e.field.is_empty() || e.field == "." {
                    path.display().to_string()
                } else {
                    format!("{}: {}", path.display(), e.field)
                };
                e
            })?)
        }
        None => None,
    };
    let preset_name = cli.preset.clone().or_else(|| file.as_ref().and_then(|f| f.preset.clone()));
    let mut cfg = match (preset_name, file) {
        (Some(name), file) => {
            let base = name.parse::<FigurePreset>()?.config();
            match file {
                Some(f) => config::merge(base, f),
                None => base,
            }
        }
        (None, Some(f)) => f,
        (None, None) => RawConfig { schema_version: Some(SCHEMA_VERSION), ..Default::default() },
    };
    if let Some(tol) = cli.tol {
        cfg.tol = Some(tol);
    }
    if let Some(dir) = &cli.out {
        let output = cfg.output.get_or_insert_with(OutputBlock::default);
        output.directory = Some(dir.clone());
    }
    if let Some(t) = temperature {
        let env = cfg.environment.get_or_insert_with(EnvironmentBlock::default);
        env.t = Some(t);
    }
    Ok(cfg)
}

fn finish(cfg: &RawConfig, output: CommandOutput) -> Result<(), CliError> {
    for note in &output.notes {
        eprintln!("warning: {note}");
    }
    let dir = cfg.output_directory();
    for path in emit(dir.as_deref(), &output.artifacts)? {
        eprintln!("wrote {}", path.display());
    }
    if output.failed > 0 {
        return Err(CliError::Partial { failed: output.failed, total: output.total });
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Coeffs { temperature } => {
            let cfg = load(cli, *temperature)?;
            finish(&cfg, cmd_coeffs(&cfg)?)
        }
        Command::SnrCurve => {
            let cfg = load(cli, None)?;
            finish(&cfg, cmd_snr_curve(&cfg)?)
        }
        Command::Scan => {
            let cfg = load(cli, None)?;
            if cfg.output_directory().is_none() {
                return Err(ConfigError::new("output.directory", "scan writes two files; give --out").into());
            }
            finish(&cfg, cmd_scan(&cfg)?)
        }
        Command::Simulate { temperature } => {
            let cfg = load(cli, *temperature)?;
            finish(&cfg, cmd_simulate(&cfg)?)
        }
        Command::Validate => {
            let cfg = load(cli, None)?;
            let checks = run_suite(cfg.tolerance()?);
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Validation { failed, total: checks.len() });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.threads.unwrap_or(0));
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
