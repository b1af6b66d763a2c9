use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pulseprep::scenario::{self, plot, CheckOutcome, RunOptions, ScenarioConfig};
use rayon::prelude::*;

/// Shaped single-photon pulses for waveguide emitter arrays.
#[derive(Parser)]
#[command(name = "pulseprep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run built-in scenarios or TOML configs ("all" runs every built-in).
    Run {
        #[arg(required = true)]
        scenarios: Vec<String>,
        #[command(flatten)]
        opts: Common,
    },
    /// Run the Monte-Carlo noise ensemble of a scenario.
    Mc {
        scenario: String,
        #[command(flatten)]
        opts: Common,
    },
    /// Render SVG charts from an existing result directory.
    Plot { dir: PathBuf },
    /// List built-in scenarios.
    List,
}

#[derive(Args)]
struct Common {
    /// Output root; each scenario writes to a subdirectory named after it.
    #[arg(long, env = "PULSEPREP_OUT", default_value = "results")]
    out: PathBuf,
    /// Seed for the noise model.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Exit with status 1 if any acceptance check fails.
    #[arg(long)]
    check: bool,
    /// Integrator time step in 1/Γ.
    #[arg(long)]
    dt: Option<f64>,
    /// Points of the input spectral grid.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Skip SVG rendering.
    #[arg(long)]
    no_plots: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            out_dir: self.out.clone(),
            seed: self.seed,
            jobs: self.jobs,
            dt: self.dt,
            grid_points: self.grid_points,
            plots: !self.no_plots,
        }
    }
}

fn resolve(arg: &str) -> Result<Vec<ScenarioConfig>> {
    if arg == "all" {
        return Ok(scenario::builtins());
    }
    if let Some(c) = scenario::builtin(arg) {
        return Ok(vec![c]);
    }
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(vec![ScenarioConfig::load(path).with_context(|| format!("reading {}", path.display()))?]);
    }
    bail!("{arg:?} is neither a built-in scenario nor a config file (see `pulseprep list`)")
}

fn report_checks(name: &str, checks: &[CheckOutcome]) -> bool {
    let mut ok = true;
    for c in checks {
        let status = match c.passed {
            Some(true) => "ok",
            Some(false) => {
                ok = false;
                "FAIL"
            }
            None => "skipped",
        };
        let bound = match (c.min, c.max) {
            (Some(lo), Some(hi)) => format!("[{lo}, {hi}]"),
            (Some(lo), None) => format!(">= {lo}"),
            (None, Some(hi)) => format!("<= {hi}"),
            (None, None) => String::new(),
        };
        let value = c.value.map_or("n/a".into(), |v| format!("{v:.4}"));
        println!("  {status:<7} {name}: {} = {value} {bound}", c.metric);
    }
    ok
}

fn run(names: &[String], common: &Common) -> Result<bool> {
    let mut configs = Vec::new();
    for n in names {
        configs.extend(resolve(n)?);
    }
    let opts = common.options();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = common.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let results: Vec<_> = pool.build()?.install(|| {
        configs
            .par_iter()
            .map(|c| scenario::run_scenario(c, &opts).with_context(|| format!("scenario {}", c.name)))
            .collect()
    });
    let mut ok = true;
    for r in results {
        let r = r?;
        let s = &r.summary;
        println!("{}: peak fidelity {:.4} at t = {:.3} -> {}", s.name, s.peak_fidelity, s.peak_time, r.dir.display());
        ok &= report_checks(&s.name, &s.checks);
    }
    Ok(ok)
}

fn mc(name: &str, common: &Common) -> Result<bool> {
    let configs = resolve(name)?;
    let mut ok = true;
    for c in &configs {
        let r = scenario::run_monte_carlo(c, &common.options()).with_context(|| format!("scenario {}", c.name))?;
        let m = &r.mc;
        println!(
            "{}: {} trials, seed {}: peak fidelity mean {:.4} std {:.4} (nominal {:.4}) -> {}",
            m.name,
            m.trials,
            m.seed,
            m.mean,
            m.std,
            m.nominal_peak_fidelity,
            r.dir.display()
        );
        ok &= report_checks(&m.name, &m.checks);
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::List => {
            for name in scenario::builtin_names() {
                let c = scenario::builtin(name).expect("listed built-in exists");
                println!("{name:<28} {}", c.description.unwrap_or_default());
            }
            Ok(true)
        }
        Command::Plot { dir } => plot::emit_plots(dir).map_err(Into::into).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
            true
        }),
        Command::Run { scenarios, opts } => run(scenarios, opts).map(|ok| ok || !opts.check),
        Command::Mc { scenario, opts } => mc(scenario, opts).map(|ok| ok || !opts.check),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("acceptance checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
