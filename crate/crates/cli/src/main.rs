use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fewmode::config::{preset, preset_names, RunConfig};
use fewmode::run::{run_spectrum, run_sweep};
use fewmode::verify::{run_verify, ToleranceProfile, SUITES};
use fewmode::Error;

#[derive(Parser)]
#[command(name = "fewmode", version, about = "Few-mode scattering spectra and verification suites")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Profile::Default)]
    tolerance_profile: Profile,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Default,
    Strict,
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum over the configured grid: CSV plus manifest.
    Spectrum(Source),
    /// One spectrum per sweep value plus an index.
    Sweep(Source),
    /// Run a verification suite and print its report as JSON.
    Verify {
        suite: String,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the shipped presets.
    ListPresets,
}

const EXIT_VERIFY: u8 = 3;

fn load(src: &Source) -> Result<RunConfig, Error> {
    match (&src.config, &src.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text)
        }
        (None, Some(name)) => preset(name),
        (None, None) => Err(Error::config("--config", "give --config or --preset")),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("--threads", e.to_string()))?;
    }
    let profile = match cli.tolerance_profile {
        Profile::Default => ToleranceProfile::Default,
        Profile::Strict => ToleranceProfile::Strict,
    };
    match cli.command {
        Command::Spectrum(src) => {
            for f in run_spectrum(&load(&src)?, &src.out)?.files {
                println!("{}", f.display());
            }
        }
        Command::Sweep(src) => {
            for f in run_sweep(&load(&src)?, &src.out)?.files {
                println!("{}", f.display());
            }
        }
        Command::Verify { suite, out } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(Error::config("suite", format!("unknown suite `{suite}`; expected one of {}", SUITES.join(", "))));
            }
            let report = run_verify(&suite, profile)?;
            let text = serde_json::to_string_pretty(&report)?;
            println!("{text}");
            if let Some(path) = out {
                std::fs::write(path, text + "\n")?;
            }
            if !report.passed {
                return Ok(EXIT_VERIFY);
            }
        }
        Command::ListPresets => {
            for name in preset_names() {
                let description = preset(name).map(|c| c.description).unwrap_or_default();
                println!("{name}\t{description}");
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
