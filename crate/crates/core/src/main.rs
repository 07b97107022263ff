use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dirac_simop::config::RunConfig;
use dirac_simop::pipeline::{self, Artifacts, Format, Report, Stages};
use dirac_simop::{selftest, Result};

#[derive(Parser)]
#[command(name = "dirac-simop", version, about = "Similar-operator analysis of 1D Dirac operators")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML). Without it the defaults and the bundled
    /// `per_generic` potential are used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use a bundled potential instead of the one named by the config.
    #[arg(long, global = true)]
    bundled: Option<String>,
    /// Half-width N of the index window.
    #[arg(long, global = true)]
    window: Option<usize>,
    /// FFT grid size (power of two).
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true, env = "DIRAC_SIMOP_OUT", default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Derived scalars and coefficient tables of the potential.
    Derive,
    /// Block eigenvalues, predictions and the dense oracle.
    Spectrum,
    /// Evolution trace and truncation bound.
    Evolve {
        /// Final time (defaults to the period).
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Equiconvergence scan and resolution-of-identity checks.
    Equiconv,
    /// Runs several windows in parallel and reports the interior drift.
    Sweep {
        /// Comma-separated windows, e.g. 16,24,32,48.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<usize>>,
    },
    /// The seeded invariant suite over the bundled potentials.
    Selftest,
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &common.bundled {
        cfg.potential = None;
        cfg.bundled = Some(name.clone());
    }
    if let Some(n) = common.window {
        cfg.window = n;
    }
    if let Some(g) = common.grid {
        cfg.grid = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(artifacts: &Artifacts, common: &Common) -> Result<()> {
    for path in artifacts.write_to(&common.out_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn finish_report(report: &Report, common: &Common) -> Result<bool> {
    write(&report.artifacts, common)?;
    let s = &report.summary;
    println!(
        "{} ({}, {:?}) N = {}: k = {}, m = {}, delta_P = {:.4e}, contraction {:.3e}, similarity residual {:.3e}",
        s.potential, s.bc, s.branch, s.window, s.k, s.m, s.delta_p, s.contraction_ratio, s.similarity_residual
    );
    for v in &s.violations {
        eprintln!("violation [{}] {}: {:e} > {:e}", v.module, v.what, v.value, v.threshold);
    }
    Ok(report.ok())
}

fn execute(cli: &Cli) -> Result<bool> {
    let common = &cli.common;
    match &cli.command {
        Command::Selftest => {
            let report = selftest::run_default()?;
            let text = report.to_text();
            print!("{text}");
            let mut artifacts = Artifacts::default();
            artifacts.insert("selftest.txt", text);
            write(&artifacts, common)?;
            Ok(report.passed())
        }
        Command::Derive => {
            let cfg = load_config(common)?;
            let derived = pipeline::derive_from(&cfg)?;
            write(&pipeline::derived_artifacts(&derived, cfg.window, common.format), common)?;
            println!("{}: branch {:?}, r = {}, delta_P = {:.4e}", cfg.potential_name(), derived.branch, derived.r, derived.delta_p);
            Ok(true)
        }
        Command::Spectrum => {
            let cfg = load_config(common)?;
            let stages = Stages { spectrum: true, matrices: cfg.outputs.matrices, ..Stages::NONE };
            finish_report(&pipeline::run_pipeline(&cfg, stages, common.format)?, common)
        }
        Command::Evolve { t_max, steps } => {
            let mut cfg = load_config(common)?;
            if t_max.is_some() {
                cfg.evolution.t_max = *t_max;
            }
            if let Some(s) = steps {
                cfg.evolution.steps = *s;
            }
            cfg.validate()?;
            let stages = Stages { evolution: true, ..Stages::NONE };
            finish_report(&pipeline::run_pipeline(&cfg, stages, common.format)?, common)
        }
        Command::Equiconv => {
            let cfg = load_config(common)?;
            let stages = Stages { equiconvergence: true, ..Stages::NONE };
            finish_report(&pipeline::run_pipeline(&cfg, stages, common.format)?, common)
        }
        Command::Sweep { windows } => {
            let mut cfg = load_config(common)?;
            if let Some(w) = windows {
                cfg.sweep.windows = w.clone();
            }
            let report = pipeline::sweep(&cfg, common.format)?;
            write(&report.artifacts, common)?;
            let mut ok = true;
            for st in &report.stability {
                let pass = st.max_interior_drift <= cfg.tolerances.drift;
                ok &= pass;
                println!("N = {} -> {}: max interior drift {:.3e}", st.small, st.large, st.max_interior_drift);
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
