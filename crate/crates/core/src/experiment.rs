//! Monte Carlo orchestration: one drop runs every scheme and demand on a
//! shared realization; a sweep runs many drops in parallel and writes CSV.

use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{self, AreaCount, CountLaw};
use crate::association::{associate, Association};
use crate::coloring::{allocation_from_coloring, ap_outage_from_allocation, dsatur_color, ChannelAllocation, InterferenceGraph};
use crate::config::ExperimentConfig;
use crate::deployment::{deploy, NetworkRealization};
use crate::error::Result;
use crate::evaluation::{evaluate_allocation, fixed_allocation, DropContext, DropMetrics, InterferenceModel, InterferenceScope};
use crate::load::{estimate_drop_loads, DropLoads};
use crate::propagation::{draw_link_budget, ChannelState, LinkBudget};
use crate::seed::{drop_seed, stream_rng, Stream};

/// Positions, channels and association of one drop.
#[derive(Debug, Clone)]
pub struct DropState {
    pub seed: u64,
    pub attempts: u64,
    pub realization: NetworkRealization,
    pub channel: ChannelState,
    pub assoc: Association,
    pub clamped_links: usize,
}

/// Positions, large-scale gains and association of one drop, without
/// small-scale fading.
#[derive(Debug, Clone)]
pub struct DropGeometry {
    pub attempts: u64,
    pub realization: NetworkRealization,
    pub budget: LinkBudget,
    pub assoc: Association,
}

pub fn drop_geometry(cfg: &ExperimentConfig, seed: u64) -> Result<DropGeometry> {
    let deployment = deploy(&cfg.deployment(), seed)?;
    let attempt = deployment.attempts - 1;
    let realization = deployment.realization;
    let budget = draw_link_budget(&cfg.propagation, &realization, &mut stream_rng(seed, Stream::LinkBudget, attempt))?;
    let assoc = associate(&budget.avg_power)?;
    Ok(DropGeometry {
        attempts: deployment.attempts,
        realization,
        budget,
        assoc,
    })
}

/// Everything that depends only on the seed: deployment, link budget,
/// fading and association.
pub fn prepare_drop(cfg: &ExperimentConfig, seed: u64) -> Result<DropState> {
    let g = drop_geometry(cfg, seed)?;
    let channel = ChannelState::draw(
        g.budget.avg_power,
        cfg.prbs,
        cfg.radio().noise_w,
        &mut stream_rng(seed, Stream::Fading, g.attempts - 1),
    );
    Ok(DropState {
        seed,
        attempts: g.attempts,
        realization: g.realization,
        channel,
        assoc: g.assoc,
        clamped_links: g.budget.clamped_links,
    })
}

/// One output line: a scheme at one sweep point on one drop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scheme: &'static str,
    pub demand_bps: f64,
    /// PRBs per AP of the fixed baseline; empty for the hierarchical scheme.
    pub n_ap: Option<usize>,
    pub lambda_f: f64,
    pub lambda_u: f64,
    pub drop_seed: u64,
    pub aps: usize,
    pub users: usize,
    pub outage_fraction: f64,
    pub min_rate: f64,
    pub min_normalized: f64,
    pub throughput: f64,
    pub mean_ap_load: f64,
    pub colors_used: usize,
    /// Fraction of APs granted fewer PRBs than `⌈N_l⌉`.
    pub ap_shortfall_fraction: f64,
}

pub const HIERARCHICAL: &str = "hierarchical";
pub const FIXED: &str = "fixed";

/// Per-stage results of the hierarchical scheme at one demand.
#[derive(Debug, Clone)]
pub struct HierarchicalStage {
    pub loads: DropLoads,
    pub graph: InterferenceGraph,
    pub allocation: ChannelAllocation,
    pub colors_used: usize,
    pub shortfall: Vec<bool>,
    pub metrics: DropMetrics,
}

/// Per-stage results of the baseline at one demand and `n_ap`.
#[derive(Debug, Clone)]
pub struct FixedStage {
    pub n_ap: usize,
    pub allocation: ChannelAllocation,
    pub metrics: DropMetrics,
}

#[derive(Debug, Clone)]
pub struct DemandStage {
    pub demand_bps: f64,
    pub hierarchical: Option<HierarchicalStage>,
    pub fixed: Vec<FixedStage>,
}

/// A fully evaluated drop.
#[derive(Debug, Clone)]
pub struct DropReport {
    pub state: DropState,
    pub stages: Vec<DemandStage>,
    pub rows: Vec<ResultRow>,
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn fraction(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        0.0
    } else {
        flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
    }
}

/// Run every configured scheme and sweep point on the drop keyed by `seed`.
/// Rows are ordered hierarchical first, then by demand, then by `n_ap`.
pub fn run_drop_detailed(cfg: &ExperimentConfig, seed: u64) -> Result<DropReport> {
    run_inner(cfg, seed).map_err(|e| e.in_drop(seed))
}

fn run_inner(cfg: &ExperimentConfig, seed: u64) -> Result<DropReport> {
    let state = prepare_drop(cfg, seed)?;
    let radio = cfg.radio();
    let aps = state.realization.ap_count();
    let users = state.realization.user_count();
    let mut stages = Vec::with_capacity(cfg.demands_bps.len());
    let mut hier_rows = Vec::new();
    let mut fixed_rows = Vec::new();
    for &rate in &cfg.demands_bps {
        let demands = vec![rate; users];
        let ctx = DropContext {
            assoc: &state.assoc,
            channel: &state.channel,
            demands: &demands,
            p_tot: radio.p_tot_w,
            bandwidth: radio.bandwidth_hz,
            scheduler: cfg.scheduler,
            cap_at_demand: cfg.cap_rate_at_demand,
        };
        let loads = estimate_drop_loads(&state.assoc, state.channel.avg_power(), &demands, &radio, cfg.load_solver, &cfg.newton)?;
        let mean_load = mean(&loads.loads);
        let row = |scheme, n_ap, m: &DropMetrics, colors_used, shortfall| ResultRow {
            scheme,
            demand_bps: rate,
            n_ap,
            lambda_f: cfg.lambda_f,
            lambda_u: cfg.lambda_u(),
            drop_seed: seed,
            aps,
            users,
            outage_fraction: m.outage_fraction,
            min_rate: m.min_rate,
            min_normalized: m.min_normalized,
            throughput: m.throughput,
            mean_ap_load: mean_load,
            colors_used,
            ap_shortfall_fraction: shortfall,
        };

        let mut fixed = Vec::new();
        if cfg.scenario.runs_fixed() {
            for &n_ap in &cfg.n_ap {
                let mut rng = if cfg.freeze_fixed_allocation {
                    stream_rng(cfg.base_seed, Stream::FixedAllocation, 0)
                } else {
                    stream_rng(seed, Stream::FixedAllocation, state.attempts - 1)
                };
                let allocation = fixed_allocation(aps, cfg.prbs, n_ap, &mut rng)?;
                let outcome = evaluate_allocation(&ctx, &allocation, InterferenceScope::All)?;
                let shortfall = fraction(&ap_outage_from_allocation(&loads.loads, &allocation));
                fixed_rows.push(row(FIXED, Some(n_ap), &outcome.metrics, 0, shortfall));
                fixed.push(FixedStage {
                    n_ap,
                    allocation,
                    metrics: outcome.metrics,
                });
            }
        }

        let hierarchical = if cfg.scenario.runs_hierarchical() {
            let graph = InterferenceGraph::build(&state.realization.aps, cfg.d_tilde_m, &loads.loads)?;
            let coloring = dsatur_color(&graph, cfg.prbs)?;
            let allocation = allocation_from_coloring(&coloring, &graph);
            debug_assert!(allocation.is_orthogonal(&graph));
            let scope = match cfg.hierarchical_interference {
                InterferenceModel::Full => InterferenceScope::All,
                InterferenceModel::Managed => InterferenceScope::GraphNeighbors(&graph),
            };
            let outcome = evaluate_allocation(&ctx, &allocation, scope)?;
            let shortfall = ap_outage_from_allocation(&loads.loads, &allocation);
            let colors_used = coloring.colors_used();
            hier_rows.push(row(HIERARCHICAL, None, &outcome.metrics, colors_used, fraction(&shortfall)));
            Some(HierarchicalStage {
                loads,
                graph,
                allocation,
                colors_used,
                shortfall,
                metrics: outcome.metrics,
            })
        } else {
            None
        };
        stages.push(DemandStage {
            demand_bps: rate,
            hierarchical,
            fixed,
        });
    }
    hier_rows.append(&mut fixed_rows);
    Ok(DropReport {
        state,
        stages,
        rows: hier_rows,
    })
}

/// Result rows of one drop.
pub fn run_drop(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<ResultRow>> {
    run_drop_detailed(cfg, seed).map(|r| r.rows)
}

/// Mean and standard error of every metric at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scheme: &'static str,
    pub demand_bps: f64,
    pub n_ap: Option<usize>,
    pub drops: usize,
    pub outage_mean: f64,
    pub outage_se: f64,
    pub min_rate_mean: f64,
    pub min_rate_se: f64,
    pub min_normalized_mean: f64,
    pub min_normalized_se: f64,
    pub throughput_mean: f64,
    pub throughput_se: f64,
    pub mean_ap_load_mean: f64,
    pub colors_used_mean: f64,
    pub ap_shortfall_mean: f64,
    pub ap_shortfall_se: f64,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let m = mean(x);
    if n < 2 {
        return (m, 0.0);
    }
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Aggregate rows per (scheme, demand, `n_ap`) in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(&'static str, f64, Option<usize>)> = Vec::new();
    for r in rows {
        let key = (r.scheme, r.demand_bps, r.n_ap);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(scheme, demand_bps, n_ap)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.scheme == scheme && r.demand_bps == demand_bps && r.n_ap == n_ap)
                .collect();
            let col = |f: fn(&ResultRow) -> f64| mean_and_se(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (outage_mean, outage_se) = col(|r| r.outage_fraction);
            let (min_rate_mean, min_rate_se) = col(|r| r.min_rate);
            let (min_normalized_mean, min_normalized_se) = col(|r| r.min_normalized);
            let (throughput_mean, throughput_se) = col(|r| r.throughput);
            let (ap_shortfall_mean, ap_shortfall_se) = col(|r| r.ap_shortfall_fraction);
            SummaryRow {
                scheme,
                demand_bps,
                n_ap,
                drops: group.len(),
                outage_mean,
                outage_se,
                min_rate_mean,
                min_rate_se,
                min_normalized_mean,
                min_normalized_se,
                throughput_mean,
                throughput_se,
                mean_ap_load_mean: col(|r| r.mean_ap_load).0,
                colors_used_mean: col(|r| r.colors_used as f64).0,
                ap_shortfall_mean,
                ap_shortfall_se,
            }
        })
        .collect()
}

/// Rows of a sweep ordered by scheme, demand, `n_ap`, then drop index.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub wall_time_s: f64,
}

/// Where a sweep writes its files.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub manifest_json: PathBuf,
}

impl SweepOutput {
    /// `results.csv`, `summary.csv` and `manifest.json` under `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        SweepOutput {
            rows_csv: dir.join("results.csv"),
            summary_csv: dir.join("summary.csv"),
            manifest_json: dir.join("manifest.json"),
        }
    }

    fn partial(&self) -> PathBuf {
        let mut p = self.rows_csv.clone().into_os_string();
        p.push(".partial");
        PathBuf::from(p)
    }
}

/// Drops evaluated between two flushes of the partial results file.
const BATCH: usize = 16;

/// Run `cfg.drops` drops (seeds `base_seed + i`) on the current rayon pool.
///
/// With an output, finished drops are appended to `<rows_csv>.partial` in
/// drop order after every batch, so an interrupted sweep keeps its work.
/// The final files are written once all drops are done and the partial
/// file is removed.
pub fn run_sweep(cfg: &ExperimentConfig, out: Option<&SweepOutput>) -> Result<SweepResult> {
    cfg.validate()?;
    let started = Instant::now();
    let mut per_drop: Vec<Vec<ResultRow>> = Vec::with_capacity(cfg.drops);
    let mut partial = match out {
        Some(o) => {
            if let Some(dir) = o.rows_csv.parent() {
                fs::create_dir_all(dir)?;
            }
            Some((o.partial(), true))
        }
        None => None,
    };
    for start in (0..cfg.drops).step_by(BATCH) {
        let end = (start + BATCH).min(cfg.drops);
        let batch: Vec<Vec<ResultRow>> = (start..end)
            .into_par_iter()
            .map(|i| run_drop(cfg, drop_seed(cfg.base_seed, i as u64)))
            .collect::<Result<_>>()?;
        if let Some((path, fresh)) = partial.as_mut() {
            let file = if *fresh {
                File::create(&*path)?
            } else {
                OpenOptions::new().append(true).open(&*path)?
            };
            let mut w = csv::WriterBuilder::new().has_headers(*fresh).from_writer(file);
            for row in batch.iter().flatten() {
                w.serialize(row)?;
            }
            w.flush()?;
            *fresh = false;
        }
        log::info!("{end}/{} drops done", cfg.drops);
        per_drop.extend(batch);
    }
    let points = per_drop.first().map_or(0, Vec::len);
    let mut rows = Vec::with_capacity(points * per_drop.len());
    for p in 0..points {
        rows.extend(per_drop.iter().map(|d| d[p].clone()));
    }
    let summary = summarize(&rows);
    let wall_time_s = started.elapsed().as_secs_f64();
    if let Some(o) = out {
        write_csv(&o.rows_csv, &rows)?;
        write_csv(&o.summary_csv, &summary)?;
        write_manifest(&o.manifest_json, cfg, rows.len(), wall_time_s, o)?;
        if let Some((path, _)) = partial {
            fs::remove_file(path)?;
        }
    }
    Ok(SweepResult {
        rows,
        summary,
        wall_time_s,
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Serialize rows to CSV text.
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    rows: usize,
    workers: usize,
    wall_time_s: f64,
    rows_csv: String,
    summary_csv: String,
}

fn write_manifest(path: &Path, cfg: &ExperimentConfig, rows: usize, wall_time_s: f64, out: &SweepOutput) -> Result<()> {
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        rows,
        workers: rayon::current_num_threads(),
        wall_time_s,
        rows_csv: out.rows_csv.display().to_string(),
        summary_csv: out.summary_csv.display().to_string(),
    };
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &m)?;
    writeln!(f)?;
    Ok(())
}

/// Closed-form outage at one demand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageCurveRow {
    pub demand_bps: f64,
    pub d_star_m: f64,
    pub n_star: f64,
    pub outage_poisson_area: f64,
    pub outage_binomial_area: f64,
}

pub fn outage_curve(cfg: &ExperimentConfig) -> Vec<OutageCurveRow> {
    let a = cfg.analytics();
    cfg.demands_bps
        .iter()
        .map(|&r| OutageCurveRow {
            demand_bps: r,
            d_star_m: analytics::most_probable_distance(a.lambda_f),
            n_star: analytics::typical_user_load(r, &a),
            outage_poisson_area: analytics::outage_probability(r, &a, AreaCount::Poisson),
            outage_binomial_area: analytics::outage_probability(r, &a, AreaCount::Binomial),
        })
        .collect()
}

/// Closed-form load CDFs at one demand on a load grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadCdfRow {
    pub demand_bps: f64,
    pub load: f64,
    pub user_load_cdf: f64,
    pub ap_load_cdf: f64,
    /// System load of an AP with the mean number of APs within reach.
    pub system_load_cdf: f64,
}

pub fn load_cdf_curves(cfg: &ExperimentConfig, points: usize, max_load: f64) -> Vec<LoadCdfRow> {
    let a = cfg.analytics();
    let in_reach = (a.lambda_f * std::f64::consts::PI * a.reach() * a.reach()).round().max(1.0) as u64;
    let law: CountLaw = cfg.user_count_law;
    let mut out = Vec::new();
    for &r in &cfg.demands_bps {
        for i in 0..=points {
            let n = max_load * i as f64 / points.max(1) as f64;
            out.push(LoadCdfRow {
                demand_bps: r,
                load: n,
                user_load_cdf: analytics::cdf_user_load(n, r, &a),
                ap_load_cdf: analytics::cdf_ap_load(n, r, &a, law),
                system_load_cdf: analytics::cdf_system_load(n, in_reach, r, &a),
            });
        }
    }
    out
}
