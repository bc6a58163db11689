use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use hiersim_core::experiment::{self, run_drop_detailed, run_sweep, SweepOutput};
use hiersim_core::validation::run_checks;
use hiersim_core::ExperimentConfig;

#[derive(Parser)]
#[command(name = "hiersim", version, about = "Load-aware spectrum allocation simulator for small-cell OFDMA networks")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "HIERSIM_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep; writes results.csv, summary.csv and manifest.json.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Run one drop and dump every stage as JSON.
    Drop {
        #[command(flatten)]
        config: ConfigArgs,
        /// Drop seed; defaults to the base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Closed-form curves: outage.csv and load_cdf.csv.
    Analyze {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        /// Grid points per load CDF.
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Upper end of the load grid, PRBs.
        #[arg(long, default_value_t = 50.0)]
        max_load: f64,
    },
    /// Invariant suite; exits non-zero if a check fails.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Multiplier on every sample size.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Print the effective configuration as JSON.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; fields not given keep their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    lambda_f: Option<f64>,
    #[arg(long)]
    lambda_u_ratio: Option<f64>,
    /// Demand sweep in Mb/s, comma separated.
    #[arg(long, value_delimiter = ',')]
    demands_mbps: Option<Vec<f64>>,
    /// Fixed-allocation PRBs per AP, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_ap: Option<Vec<usize>>,
    #[arg(long)]
    prbs: Option<usize>,
    #[arg(long)]
    scheduler: Option<String>,
    #[arg(long)]
    load_solver: Option<String>,
    /// `lte_indoor` or `power_law`.
    #[arg(long)]
    propagation_model: Option<String>,
    /// `managed` or `full`.
    #[arg(long)]
    hierarchical_interference: Option<String>,
    /// Any other field as `key=json`, e.g. `--set propagation.alpha=3.5`.
    #[arg(long = "set", value_name = "KEY=JSON")]
    set: Vec<String>,
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        let obj = node.as_object_mut().with_context(|| format!("`{path}`: not an object above `{part}`"))?;
        if parts.peek().is_none() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part).or_insert_with(|| json!({}));
    }
    bail!("empty key")
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        let mut v = serde_json::to_value(&base)?;
        let mut overrides: Vec<(&str, Value)> = Vec::new();
        if let Some(s) = &self.scenario {
            overrides.push(("scenario", json!(s)));
        }
        if let Some(d) = self.drops {
            overrides.push(("drops", json!(d)));
        }
        if let Some(s) = self.base_seed {
            overrides.push(("base_seed", json!(s)));
        }
        if let Some(l) = self.lambda_f {
            overrides.push(("lambda_f", json!(l)));
        }
        if let Some(l) = self.lambda_u_ratio {
            overrides.push(("lambda_u_ratio", json!(l)));
        }
        if let Some(d) = &self.demands_mbps {
            overrides.push(("demands_bps", json!(d.iter().map(|r| r * 1e6).collect::<Vec<_>>())));
        }
        if let Some(n) = &self.n_ap {
            overrides.push(("n_ap", json!(n)));
        }
        if let Some(n) = self.prbs {
            overrides.push(("prbs", json!(n)));
        }
        if let Some(s) = &self.scheduler {
            overrides.push(("scheduler", json!(s)));
        }
        if let Some(s) = &self.load_solver {
            overrides.push(("load_solver", json!(s)));
        }
        if let Some(s) = &self.propagation_model {
            overrides.push(("propagation.model", json!(s)));
        }
        if let Some(s) = &self.hierarchical_interference {
            overrides.push(("hierarchical_interference", json!(s)));
        }
        for (key, value) in overrides {
            set_path(&mut v, key, value)?;
        }
        for kv in &self.set {
            let (key, raw) = kv.split_once('=').with_context(|| format!("`--set {kv}`: expected KEY=JSON"))?;
            // Bare words are taken as strings so `--set scheduler=greedy` works.
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut v, key, value)?;
        }
        let cfg = ExperimentConfig::from_json_str(&v.to_string()).context("invalid configuration")?;
        Ok(cfg)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = config.resolve()?;
            let files = SweepOutput::in_dir(&out);
            let sweep = run_sweep(&cfg, Some(&files))?;
            println!(
                "{} rows from {} drops in {:.2} s -> {}",
                sweep.rows.len(),
                cfg.drops,
                sweep.wall_time_s,
                files.rows_csv.display()
            );
            println!("{}", experiment::csv_string(&sweep.summary)?.trim_end());
        }
        Command::Drop { config, seed } => {
            let cfg = config.resolve()?;
            let seed = seed.unwrap_or(cfg.base_seed);
            let rep = run_drop_detailed(&cfg, seed)?;
            let stages: Vec<Value> = rep
                .stages
                .iter()
                .map(|st| {
                    json!({
                        "demand_bps": st.demand_bps,
                        "hierarchical": st.hierarchical.as_ref().map(|h| json!({
                            "ap_loads": h.loads.loads,
                            "newton_fallbacks": h.loads.fallbacks,
                            "graph_edges": h.graph.ap_edges().collect::<Vec<_>>(),
                            "graph_nodes": h.graph.node_count(),
                            "colors_used": h.colors_used,
                            "prbs": h.allocation.prbs,
                            "shortfall": h.shortfall,
                            "metrics": h.metrics,
                        })),
                        "fixed": st.fixed.iter().map(|f| json!({
                            "n_ap": f.n_ap,
                            "prbs": f.allocation.prbs,
                            "metrics": f.metrics,
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let real = &rep.state.realization;
            let dump = json!({
                "seed": seed,
                "attempts": rep.state.attempts,
                "aps": real.aps.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
                "users": real.users.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
                "clamped_links": rep.state.clamped_links,
                "serving_ap": rep.state.assoc.serving(),
                "stages": stages,
                "rows": rep.rows,
            });
            println!("{}", serde_json::to_string_pretty(&dump)?);
        }
        Command::Analyze { config, out, points, max_load } => {
            let cfg = config.resolve()?;
            fs::create_dir_all(&out)?;
            write_file(&out.join("outage.csv"), &experiment::csv_string(&experiment::outage_curve(&cfg))?)?;
            write_file(&out.join("load_cdf.csv"), &experiment::csv_string(&experiment::load_cdf_curves(&cfg, points, max_load))?)?;
            print!("{}", experiment::csv_string(&experiment::outage_curve(&cfg))?);
        }
        Command::Validate { config, scale } => {
            let cfg = config.resolve()?;
            if !(scale > 0.0) {
                bail!("--scale must be positive");
            }
            let checks = run_checks(&cfg, scale)?;
            for c in &checks {
                println!("{} {:<42} {:>12.4e} (bound {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
            }
            return Ok(checks.iter().all(|c| c.pass));
        }
        Command::Config { config } => println!("{}", config.resolve()?.to_json()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
