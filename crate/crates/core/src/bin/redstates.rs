use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use redstates::scenario::{self, OutputFormat, Scenario, ScenarioConfig};
use redstates::Error;

#[derive(Parser)]
#[command(name = "redstates", version, about = "Reduced density operators, measurement chains and decoherence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file (JSON or `key = value`); `-` reads stdin.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report destination; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance for invariant checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Two premeasurements in sequence and their joint probabilities.
    Consecutive,
    /// Full chain versus the product-of-reduced-states predictor.
    Contrast,
    /// Spin-bath decoherence trajectory.
    Decohere,
    /// Equal-coupling bath: revival versus a proper mixture.
    Recohere,
    /// Coarse-graining projector checks.
    CoarseGrain,
    /// Baker-map mixing and classical coarse-graining.
    Classical,
    /// Run the invariant suite on random states.
    Verify,
}

impl Command {
    fn scenario(self) -> Scenario {
        match self {
            Command::Consecutive => Scenario::Consecutive,
            Command::Contrast => Scenario::Contrast,
            Command::Decohere => Scenario::Decohere,
            Command::Recohere => Scenario::Recohere,
            Command::CoarseGrain => Scenario::CoarseGrain,
            Command::Classical => Scenario::Classical,
            Command::Verify => Scenario::Verify,
        }
    }
}

fn load(cli: &Cli) -> redstates::Result<ScenarioConfig> {
    let scenario = cli.command.scenario();
    let mut text = match &cli.config {
        Some(path) => {
            let p = path.as_path();
            if p == std::path::Path::new("-") {
                let mut s = String::new();
                std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
                s
            } else {
                std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?
            }
        }
        None => String::new(),
    };
    // A seed on the command line must be visible before seed validation.
    if let Some(seed) = cli.seed {
        if text.trim_start().starts_with('{') {
            let mut v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
            if let Some(m) = v.as_object_mut() {
                m.insert("seed".into(), seed.into());
            }
            text = v.to_string();
        } else {
            text = text
                .lines()
                .filter(|l| l.split_once('=').map(|(k, _)| k.trim() != "seed").unwrap_or(true))
                .map(|l| format!("{l}\n"))
                .collect();
            text.push_str(&format!("seed = {seed}\n"));
        }
    }
    let mut cfg = scenario::parse_config(&text, Some(scenario))?;
    if let Some(t) = cli.tolerance {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::Config("--tolerance must be positive".into()));
        }
        cfg.tolerance = t;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(f) = cli.format {
        cfg.format = Some(match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        });
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> redstates::Result<i32> {
    let cfg = load(cli)?;
    let report = scenario::run(&cfg)?;
    let format = cfg.format.unwrap_or_else(|| match &cfg.out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => OutputFormat::Json,
        _ => OutputFormat::Csv,
    });
    let body = report.render(format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("invariant failed: {} (residual {:e}, tolerance {:e})", c.name, c.residual, c.tolerance);
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
