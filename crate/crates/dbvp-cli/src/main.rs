use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dbvp_cli::render::{self, Format};
use dbvp_cli::run::{self, ManifestEntries, ManifestEntry};
use dbvp_cli::{CliError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "dbvp", version, about = "Boundary spectra, mode spectra and index checks on model geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Check to run; repeat for several. Replaces the config's list.
    #[arg(long = "check")]
    checks: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Boundary spectrum, condition classification and eigenvalues.
    Spectrum(Common),
    /// Numerical index of every configured condition.
    Index(Common),
    /// Run the named checks.
    Verify(Common),
    /// Render an index manifest.
    Report {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Everything the config asks for, with artifacts written to `--out`.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    cfg.apply(&Overrides { grid_n: c.grid_n, cutoff: c.cutoff, rank_tol: c.rank_tol, checks: c.checks.clone() });
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn entries(m: &run::Manifest) -> Vec<ManifestEntry> {
    m.checks.iter().map(ManifestEntry::from).collect()
}

fn report_errors(errors: &[String]) {
    for e in errors {
        eprintln!("error: {e}");
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Spectrum(c) => {
            let doc = run::spectrum_only(&load(&c)?, true)?;
            print!("{}", render::spectrum(&doc, c.format)?);
            Ok(doc.conditions.iter().all(|d| d.error.is_none()))
        }
        Command::Index(c) => {
            let (reports, errors) = run::indices(&load(&c)?)?;
            print!("{}", render::indices(&reports, &errors, c.format)?);
            report_errors(&errors);
            Ok(errors.is_empty() && reports.iter().all(|r| r.warnings.is_empty()))
        }
        Command::Verify(c) => {
            let cfg = load(&c)?;
            if cfg.checks.is_empty() {
                return Err(CliError::Config("no checks requested".into()));
            }
            let m = run::verify(&cfg)?;
            print!("{}", render::checks(&entries(&m), c.format)?);
            report_errors(&m.errors);
            Ok(m.errors.is_empty() && m.checks.iter().all(|e| e.pass))
        }
        Command::Report { manifest, format } => {
            let text =
                fs::read_to_string(&manifest).map_err(|e| CliError::Io(format!("{}: {e}", manifest.display())))?;
            // a bare list of entries is accepted as well as a full manifest
            let list: Vec<ManifestEntry> = match serde_json::from_str::<ManifestEntries>(&text) {
                Ok(m) => m.checks,
                Err(_) => serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?,
            };
            print!("{}", render::checks(&list, format)?);
            Ok(true)
        }
        Command::Run { common, out } => {
            let cfg = load(&common)?;
            let dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run::run(&cfg)?;
            fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let list = entries(&outcome.manifest);
            write(&dir, "spectrum.json", &render::json(&outcome.spectrum))?;
            write(&dir, "index_manifest.json", &render::json(&outcome.manifest))?;
            write(
                &dir,
                "results.csv",
                &render::results_csv(&outcome.spectrum, &outcome.manifest.indices, &list)?,
            )?;
            print!("{}", render::checks(&list, common.format)?);
            report_errors(&outcome.manifest.errors);
            Ok(outcome.success())
        }
    }
}

fn main() -> ExitCode {
    dbvp_modes::init_threads_from_env();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dbvp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
