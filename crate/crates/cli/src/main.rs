//! `blid`: run blid, cutoff, linearization and exponent checks on a
//! scenario. Exit status 0 means every check passed, 1 that a verified
//! inequality failed or a computation did not converge, 2 a configuration,
//! usage or I/O error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use blid_core::commands::{self, parse_points};
use blid_core::{builtin, Error, Outcome, PointSource, Scenario, BUILTIN_IDS};
use clap::{Args, Parser, Subcommand};

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "blid", version, about = "Blid-map cutoffs and verified Hartman–Grobman linearization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    scenario: Option<PathBuf>,
    /// Builtin scenario id (see `blid list`).
    #[arg(long)]
    builtin: Option<String>,
    /// Directory for CSV and JSON reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Print only the final verdict.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Local identity and c0/c1 bounds of the blid map.
    CheckBlid(Common),
    /// Smallness and Hölder bounds of the globalized nonlinearity.
    CutoffVerify(Common),
    /// Evaluate Φ, Φ⁻¹ and conjugacy residuals.
    Linearize {
        #[command(flatten)]
        common: Common,
        /// File with one comma-separated point per line.
        #[arg(long, conflicts_with = "sample")]
        points: Option<PathBuf>,
        /// Number of seeded points in the identity ball.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Fit the differentiability exponent of Φ and Φ⁻¹.
    FitBeta(Common),
    /// Hyperbolic splitting and band width prediction.
    Spectral(Common),
    /// Print a scenario as JSON.
    ShowScenario(Common),
    /// List builtin scenarios.
    List,
}

fn load(c: &Common) -> Result<Scenario, Error> {
    let mut sc = match (&c.scenario, &c.builtin) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            Scenario::from_json(&text)?
        }
        (None, Some(id)) => builtin(id)?,
        (None, None) => return Err(Error::Usage("one of --scenario or --builtin is required".into())),
    };
    if let Some(seed) = c.seed {
        sc.seed = seed;
    }
    if let Some(n) = c.samples {
        sc.samples = n;
    }
    Ok(sc)
}

fn finish(outcome: Outcome, c: &Common) -> Result<bool, Error> {
    if !c.quiet {
        say!("{} [{}]", outcome.command, outcome.scenario_id);
        for line in &outcome.lines {
            say!("  {line}");
        }
    }
    if let Some(dir) = &c.out {
        for path in outcome.write(dir)? {
            if !c.quiet {
                say!("  wrote {}", path.display());
            }
        }
    }
    let pass = outcome.pass();
    say!("{}: {}", outcome.command, if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::CheckBlid(c) => finish(commands::check_blid(&load(&c)?)?, &c),
        Command::CutoffVerify(c) => finish(commands::cutoff_verify(&load(&c)?)?, &c),
        Command::Linearize { common, points, sample } => {
            let sc = load(&common)?;
            let source = match points {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|source| Error::Io { path, source })?;
                    PointSource::Given(parse_points(&text, sc.space.dim())?)
                }
                None => PointSource::Sample(sample.unwrap_or(commands::DEFAULT_LINEARIZE_SAMPLES)),
            };
            finish(commands::linearize(&sc, &source)?, &common)
        }
        Command::FitBeta(c) => finish(commands::fit(&load(&c)?)?, &c),
        Command::Spectral(c) => finish(commands::spectral(&load(&c)?)?, &c),
        Command::ShowScenario(c) => {
            say!("{}", load(&c)?.to_json());
            Ok(true)
        }
        Command::List => {
            for id in BUILTIN_IDS {
                say!("{id}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() || matches!(e, Error::Io { .. }) { 2 } else { 1 })
        }
    }
}
