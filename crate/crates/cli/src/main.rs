use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kronlab::config::{load_config, Experiment, ExperimentConfig};
use kronlab::{init_thread_pool, run, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "kronlab", version, about = "Numerical experiments on quantized Kronecker flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV/JSON (and optional SVG) outputs.
    Run(RunArgs),
    /// List the available experiments.
    List,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment name, see `kronlab list`.
    experiment: String,
    /// Config file with key = value lines and optional [section] headers.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frequency system, e.g. powerlaw:A=1,alpha=1.5 or explicit:1,2.5.
    #[arg(long)]
    system: Option<String>,
    /// Energy grid: comma list or start:stop:step.
    #[arg(long = "E")]
    energies: Option<String>,
    /// Inverse temperatures.
    #[arg(long)]
    beta: Option<String>,
    /// σ grid: comma list, start:stop:step or dyadic:K.
    #[arg(long)]
    sigma: Option<String>,
    /// Time grid.
    #[arg(long = "t")]
    times: Option<String>,
    /// Averaging times.
    #[arg(long = "M")]
    averaging: Option<String>,
    #[arg(long)]
    modes: Option<String>,
    #[arg(long = "boson-cutoff")]
    boson_cutoff: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
    /// Any other key as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn flags(&self) -> Result<BTreeMap<String, String>, String> {
        let mut map = BTreeMap::new();
        for entry in &self.set {
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{entry}`"))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let named = [
            ("system", &self.system),
            ("E", &self.energies),
            ("beta", &self.beta),
            ("sigma", &self.sigma),
            ("t", &self.times),
            ("M", &self.averaging),
            ("modes", &self.modes),
            ("boson-cutoff", &self.boson_cutoff),
            ("seed", &self.seed),
            ("tol", &self.tol),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        if let Some(out) = &self.out {
            map.insert("out".into(), out.display().to_string());
        }
        if self.svg {
            map.insert("svg".into(), "true".into());
        }
        Ok(map)
    }
}

fn execute(args: &RunArgs) -> Result<i32, String> {
    let experiment: Experiment = args.experiment.parse().map_err(|e| format!("{e}"))?;
    let file = match &args.config {
        Some(path) => load_config(path, experiment).map_err(|e| e.to_string())?,
        None => BTreeMap::new(),
    };
    let cfg = ExperimentConfig::resolve(experiment, &file, &args.flags()?).map_err(|e| e.to_string())?;
    let artifacts = run(&cfg).map_err(|e| e.to_string())?;
    println!(
        "{}: {} ({})",
        experiment,
        if artifacts.pass { "pass" } else { "FAIL" },
        artifacts.json.display()
    );
    Ok(artifacts.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<16} {}", e.name(), e.about());
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(&args) {
            Ok(code) => ExitCode::from(code as u8),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_ERROR as u8)
            }
        },
    }
}
