use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afv_cli::sweep::{self, SweepConfig};
use afv_cli::validate::{self, ValidateOptions, ALL_CRITERIA};
use afv_cli::{load_catalog, output, uptime, wire};
use afv_core::simulator::presets;
use afv_core::simulator::{Scenario, Strategy};
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Function-virtualization experiments for wearable personal-area networks.
///
/// Exit status: 0 on success, 1 when `validate` finds a failing criterion,
/// 2 on bad input (missing catalog, malformed scenario, bad arguments).
#[derive(Parser)]
#[command(name = "afv", version)]
struct Cli {
    /// Energy catalog JSON; the built-in catalog is used when absent.
    #[arg(long, global = true, env = "AFV_CATALOG")]
    catalog: Option<PathBuf>,
    /// Master seed. Trial i of a sweep uses stream i of this seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for CSV/JSON outputs; CSV goes to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    parallel: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 5)]
    devices: usize,
    #[arg(long, default_value_t = 10)]
    requests: usize,
    /// Standard deviation as a fraction of the mean.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
}

impl SweepArgs {
    fn config(&self, seed: u64, ratios: Vec<f64>) -> anyhow::Result<SweepConfig> {
        let cfg = SweepConfig {
            n_devices: self.devices,
            n_requests: self.requests,
            fc_ratios: ratios,
            n_trials: self.trials,
            sigma_factor: self.sigma,
            seed,
            ..SweepConfig::default()
        };
        cfg.validate().map_err(anyhow::Error::msg)?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Uptime,
    Quality,
    Monetary,
    HeartRate,
    Group,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy cost reduction vs optimal, ALL and MANUAL across f/c ratios.
    SweepRatio {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,5,10")]
        ratios: Vec<f64>,
    },
    /// Greedy cost reduction as the number of function types grows.
    SweepFunctions {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Function-type counts to evaluate (default 1 to 20).
        #[arg(long, value_delimiter = ',')]
        functions: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
    },
    /// Uptime gain of coordinated allocation over fixed strategies.
    Uptime {
        /// Scenario JSON; the two-device accelerometer preset when absent.
        #[arg(long, conflicts_with = "soc_sweep")]
        scenario: Option<PathBuf>,
        /// Initial phone SoC for the preset.
        #[arg(long, default_value_t = uptime::SINGLE_RUN_PHONE_SOC_PERCENT)]
        phone_soc: f64,
        /// Sweep the preset's phone SoC instead of a single run.
        #[arg(long)]
        soc_sweep: bool,
        #[arg(long, value_delimiter = ',', default_value = "70,80,90,100")]
        socs: Vec<f64>,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Validate {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Subset of criteria to run (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
    /// Encode a JSON message (file or stdin) to hex.
    Encode { input: Option<PathBuf> },
    /// Decode a hex message (argument or stdin) to JSON.
    Decode { hex: Option<String> },
    /// Print a built-in scenario as JSON.
    Preset {
        name: Preset,
        /// Device count for the group preset.
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

fn read_input(path: Option<&Path>) -> anyhow::Result<String> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.parallel {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::SweepRatio { sweep, ratios } => {
            let cfg = sweep.config(cli.seed, ratios)?;
            output::emit_csv(out, "sweep_ratio.csv", &sweep::sweep_ratio(&cfg))?;
        }
        Command::SweepFunctions {
            sweep,
            functions,
            ratio,
        } => {
            let cfg = sweep.config(cli.seed, vec![ratio])?;
            let counts = if functions.is_empty() {
                (1..=20).collect()
            } else {
                functions
            };
            anyhow::ensure!(
                counts.iter().all(|&n| n >= 1),
                "function counts must be >= 1"
            );
            let rows = sweep::sweep_functions(&cfg, ratio, &counts);
            output::emit_csv(out, "sweep_functions.csv", &rows)?;
        }
        Command::Uptime {
            scenario,
            phone_soc,
            soc_sweep,
            socs,
        } => {
            let catalog = load_catalog(cli.catalog.as_deref())?;
            if soc_sweep {
                let rows = uptime::soc_sweep(&catalog, &socs, &uptime::sweep_baselines())?;
                output::emit_csv(out, "soc_sweep.csv", &rows)?;
                output::emit_json(out, "device_gains.json", &uptime::device_gains(&catalog)?)?;
            } else {
                let sc = match scenario {
                    Some(p) => Scenario::from_json_str(&read_input(Some(&p))?)?,
                    None => presets::uptime_scenario(
                        phone_soc,
                        uptime::WATCH_SOC_PERCENT,
                        Strategy::Afv,
                    ),
                };
                let cmp = uptime::compare(&sc, &catalog, &uptime::default_baselines(&sc))?;
                output::emit_csv(out, "uptime.csv", &cmp.rows)?;
                if out.is_some() {
                    output::emit_csv(out, "trace.csv", &cmp.trace.samples)?;
                    output::emit_json(out, "events.json", &cmp.trace.events)?;
                    output::emit_json(out, "ledger.json", &cmp.trace.ledger)?;
                }
            }
        }
        Command::Validate { trials, criteria } => {
            let opts = ValidateOptions {
                catalog: load_catalog(cli.catalog.as_deref())?,
                trials,
                seed: cli.seed,
                ..ValidateOptions::default()
            };
            let ids = if criteria.is_empty() {
                ALL_CRITERIA.to_vec()
            } else {
                criteria
            };
            if let Some(bad) = ids.iter().find(|id| !ALL_CRITERIA.contains(id)) {
                anyhow::bail!("no criterion {bad}; valid ids are 1-9");
            }
            let mut outcomes = Vec::new();
            for id in ids {
                let o = validate::run_criterion(id, &opts)?;
                println!("{}", o.line());
                outcomes.push(o);
            }
            output::emit_json(out, "validate.json", &outcomes)?;
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            println!(
                "{} of {} criteria passed",
                outcomes.len() - failed,
                outcomes.len()
            );
            return Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
        Command::Encode { input } => {
            println!("{}", wire::encode_json(&read_input(input.as_deref())?)?);
        }
        Command::Decode { hex } => {
            let text = match hex {
                Some(h) => h,
                None => read_input(None)?,
            };
            println!("{}", wire::decode_hex(&text)?);
        }
        Command::Preset { name, n } => {
            let sc = match name {
                Preset::Uptime => presets::uptime_scenario(
                    uptime::SINGLE_RUN_PHONE_SOC_PERCENT,
                    uptime::WATCH_SOC_PERCENT,
                    Strategy::Afv,
                ),
                Preset::Quality => presets::activity_quality_scenario(),
                Preset::Monetary => presets::monetary_scenario(),
                Preset::HeartRate => presets::heart_rate_scenario(),
                Preset::Group => presets::group_scenario(n),
            };
            println!("{}", serde_json::to_string_pretty(&sc)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
