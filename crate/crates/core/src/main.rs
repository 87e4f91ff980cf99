use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use simlab::harness::{self, Experiment, ExperimentConfig};
use simlab::SimError;

#[derive(Parser)]
#[command(name = "simlab", version, about = "Heavy-tailed workload model under exponential admission control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Base seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    Lln(Common),
    Clt(Common),
    MomentBound(Common),
    Longrun(Common),
    FouVerify(Common),
    BaselineNoControl(Common),
    SamplerSelftest(Common),
    /// Write the fluid solution to `fluid.csv`.
    Fluid(Common),
    /// Print the model constants and write `constants.txt`.
    Constants(Common),
}

const EXIT_VERDICT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

enum Want {
    Exactly(Experiment),
    Any(Experiment),
}

fn load(c: &Common, want: Want) -> Result<ExperimentConfig, ExitCode> {
    let loaded = match want {
        Want::Exactly(e) => harness::load_config(&c.config, Some(e)),
        Want::Any(e) => harness::load_config_or(&c.config, e),
    };
    let mut cfg = loaded.map_err(|err| {
        eprintln!("simlab: {err}");
        match err {
            SimError::Io { .. } | SimError::Config(_) | SimError::Validation(_) => ExitCode::from(EXIT_USAGE),
            _ => ExitCode::from(EXIT_RUNTIME),
        }
    })?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn runtime_error(err: SimError) -> ExitCode {
    eprintln!("simlab: {err}");
    ExitCode::from(EXIT_RUNTIME)
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    let (common, experiment) = match &cli.command {
        Command::Lln(c) => (c, Experiment::Lln),
        Command::Clt(c) => (c, Experiment::Clt),
        Command::MomentBound(c) => (c, Experiment::MomentBound),
        Command::Longrun(c) => (c, Experiment::Longrun),
        Command::FouVerify(c) => (c, Experiment::FouVerify),
        Command::BaselineNoControl(c) => (c, Experiment::BaselineNoControl),
        Command::SamplerSelftest(c) => (c, Experiment::SamplerSelftest),
        Command::Fluid(c) => {
            let cfg = load(c, Want::Any(Experiment::Lln))?;
            let csv = harness::fluid_csv(&cfg).map_err(runtime_error)?;
            csv.write(&cfg.out.join("fluid.csv")).map_err(runtime_error)?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::Constants(c) => {
            let cfg = load(c, Want::Any(Experiment::Longrun))?;
            let text = harness::constants_text(&cfg).map_err(runtime_error)?;
            print!("{text}");
            simlab::csvout::write_file(&cfg.out.join("constants.txt"), &text).map_err(runtime_error)?;
            return Ok(ExitCode::SUCCESS);
        }
    };
    let cfg = load(common, Want::Exactly(experiment))?;
    match harness::run_experiment(&cfg) {
        Ok(report) => {
            harness::emit_report(&report, &cfg.out, None).map_err(runtime_error)?;
            for v in &report.verdicts {
                println!("{}", v.line());
            }
            Ok(if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERDICT)
            })
        }
        Err(e) => {
            let msg = e.error.to_string();
            let _ = harness::emit_report(&e.partial, &cfg.out, Some(&msg));
            Err(runtime_error(e.error))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    run(cli).unwrap_or_else(|c| c)
}
