use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use seejam::mdp::Mdp;
use seejam::policy_file::{read_policy, write_policy};
use seejam::sim::{episode_seed, run_episode};
use seejam::Metrics;
use seejam_cli::config::{load_config, Algorithm, EvalMode, ExperimentConfig};
use seejam_cli::experiment::{compare_timing, evaluate, plan, run_experiment, write_results};

#[derive(Parser)]
#[command(name = "seejam", version, about = "Secure energy-efficient transmission planners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one algorithm and write its policy file.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Algorithm to plan.
        #[arg(long, alias = "algorithms", default_value = "fhjpa")]
        algorithm: Algorithm,
        /// Policy file to write (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a policy file over the configured horizon.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalArgs,
        /// Policy file produced by `plan`.
        #[arg(long)]
        policy: PathBuf,
        /// Also simulate one seeded episode and write its slot-by-slot trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the configured sweep and write the results table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalArgs,
        /// Comma-separated subset of fhjpa,ga,ihjpa.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<Algorithm>>,
        /// Results file (defaults to the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record planning wall time instead of 0.
        #[arg(long)]
        wall_time: bool,
    },
    /// Compare planning effort of the configured algorithms.
    Timing {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of fhjpa,ga,ihjpa (must include fhjpa and ihjpa).
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<Algorithm>>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Evaluation mode.
    #[arg(long)]
    mode: Option<EvalMode>,
    /// Monte Carlo episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(path) => load_config(path).with_context(|| format!("loading {}", path.display())),
            None => Ok(ExperimentConfig::default()),
        }
    }
}

impl EvalArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(m) = self.mode {
            config.mode = m;
        }
        if let Some(e) = self.episodes {
            config.episodes = e;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
    }
}

fn open_out(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_metrics(m: &Metrics) {
    println!("avg_see_bits_per_joule = {}", m.avg_see);
    println!("total_secure_bits = {}", m.total_secure_bits);
    if let (Some(a), Some(b), Some(n)) = (m.avg_see_std_err, m.total_secure_bits_std_err, m.episodes) {
        println!("avg_see_std_err = {a}");
        println!("total_secure_bits_std_err = {b}");
        println!("episodes = {n}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan { common, algorithm, out } => {
            let config = common.load()?;
            let mdp = Mdp::build(&config.system)?;
            let planned = plan(algorithm, &mdp)?;
            let mut w = open_out(out.as_ref())?;
            write_policy(&planned.policy, config.system.num_power_levels(), &mut w)?;
            w.flush()?;
            eprintln!(
                "{algorithm}: {} backups, {} iterations, {:.3}s",
                planned.stats.backups,
                planned.stats.iterations,
                planned.stats.elapsed.as_secs_f64()
            );
        }
        Command::Evaluate { common, eval, policy, trace } => {
            let mut config = common.load()?;
            eval.apply(&mut config);
            config.validate()?;
            let mdp = Mdp::build(&config.system)?;
            let file = File::open(&policy).with_context(|| format!("opening {}", policy.display()))?;
            let (header, pol) =
                read_policy(BufReader::new(file)).with_context(|| format!("reading {}", policy.display()))?;
            let levels = config.system.num_power_levels();
            if header.states != mdp.num_states() || header.levels != levels {
                bail!(
                    "policy file covers {} states and {} power levels; config has {} and {}",
                    header.states,
                    header.levels,
                    mdp.num_states(),
                    levels
                );
            }
            let m = evaluate(&pol, &mdp, config.mode, config.episodes, config.seed)?;
            print_metrics(&m);
            if let Some(path) = trace {
                let ep = run_episode(&pol, &config.system, episode_seed(config.seed, 0))?;
                let mut w = open_out(Some(&path))?;
                ep.write_delimited(&mut w)?;
                w.flush()?;
            }
        }
        Command::Sweep { common, eval, algorithms, out, wall_time } => {
            let mut config = common.load()?;
            eval.apply(&mut config);
            if let Some(a) = algorithms {
                config.algorithms = a;
            }
            config.record_wall_time |= wall_time;
            let path = out.unwrap_or_else(|| config.output.clone());
            let rows = run_experiment(&config)?;
            write_results(&rows, &path)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        Command::Timing { common, algorithms, out } => {
            let mut config = common.load()?;
            if let Some(a) = algorithms {
                config.algorithms = a;
            }
            let report = compare_timing(&config)?;
            let mut w = open_out(out.as_ref())?;
            write!(w, "{report}")?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
