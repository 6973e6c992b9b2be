use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use wzwlab_core::experiments::{run_command, ExperimentConfig, RunReport};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Measure,
    Cohom,
    Minimize,
    Props,
    Ratio,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Measure => "measure",
            Command::Cohom => "cohom",
            Command::Minimize => "minimize",
            Command::Props => "props",
            Command::Ratio => "ratio",
        }
    }
}

/// Reproducible experiment runner. Exit status: 0 all asserted verdicts pass, 1 some fail,
/// 2 invalid configuration or input, 3 I/O failure.
#[derive(Debug, Parser)]
#[command(name = "wzwlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_IO: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("wzwlab: invalid config: {e:#}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let start = Instant::now();
    let report = match run_command(cli.command.name(), &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("wzwlab: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let elapsed = start.elapsed();
    if let Err(e) = write_report(&report, Path::new(&cfg.output_dir)) {
        eprintln!("wzwlab: {e:#}");
        return ExitCode::from(EXIT_IO);
    }
    for v in report.asserted.iter().filter(|v| !v.pass) {
        eprintln!("FAIL {}: {} {:?} {} (tol {}) {}", v.name, v.lhs, v.relation, v.rhs, v.tolerance, v.detail);
    }
    eprintln!(
        "wzwlab {}: {} of {} asserted verdicts pass, wall clock {:.2} s, output in {}",
        report.command,
        report.asserted.iter().filter(|v| v.pass).count(),
        report.asserted.len(),
        elapsed.as_secs_f64(),
        cfg.output_dir
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", cli.config.display()))?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate(cli.command.name())?;
    Ok(cfg)
}

fn write_report(report: &RunReport, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    for t in &report.tables {
        let path = dir.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(&t.columns)?;
        for row in &t.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
    }
    for c in &report.curves {
        std::fs::write(dir.join(format!("{}.dat", c.name)), c.to_dat())?;
    }
    Ok(())
}
