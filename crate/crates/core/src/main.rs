use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gabor_beam::propagator::ReinitPolicy;
use gabor_beam::scenario::{self, Scenario};
use gabor_beam::{Error, Result};

#[derive(Parser)]
#[command(
    name = "gabor-beam",
    version,
    about = "Gaussian-beam parametrix on a Gabor frame"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset (well, hill, hill_well, free, order_probe) or a TOML config file.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Preset name or path to a config file.
    scenario: String,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// none | uniform:K | event:R
    #[arg(long)]
    reinit: Option<ReinitPolicy>,
    #[arg(long)]
    hbar: Option<f64>,
    /// Output directory [default: output/<scenario name>]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    reference: Option<Switch>,
    /// Worker threads for beam propagation.
    #[arg(long)]
    threads: Option<usize>,
}

fn apply_overrides(mut s: Scenario, args: &RunArgs) -> Result<Scenario> {
    if let Some(eta) = args.eta {
        s.eta = eta;
    }
    if let Some(t) = args.horizon {
        s.horizon = t;
        s.output_times.retain(|&o| o <= t);
        s.reference_dt = s.reference_dt.min(t);
    }
    if let Some(r) = args.reinit {
        s.reinit = r;
    }
    if let Some(hbar) = args.hbar {
        if s.is_probe() {
            return Err(Error::Config(
                "--hbar does not apply to an order probe".into(),
            ));
        }
        s.hbar = hbar;
    }
    if let Some(r) = args.reference {
        s.reference = matches!(r, Switch::On);
    }
    s.validate()?;
    Ok(s)
}

fn run(args: RunArgs) -> Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    let s = apply_overrides(Scenario::resolve(&args.scenario)?, &args)?;
    let report = scenario::run(&s)?;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("output").join(&s.name));
    report.write(&dir)?;
    print!("{}", report.summary());
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
