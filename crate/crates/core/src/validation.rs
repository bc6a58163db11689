//! Monte Carlo samples that the closed-form laws are checked against, and
//! the invariant suite behind `hiersim validate`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{self, AnalyticsConfig, CountLaw};
use crate::coloring::{allocation_from_coloring, dsatur_color, InterferenceGraph};
use crate::config::{ExperimentConfig, Scenario};
use crate::deployment::{Placement, Point};
use crate::error::Result;
use crate::experiment::{csv_string, drop_geometry, run_drop_detailed, run_sweep, mean_and_se};
use crate::load::{estimate_load_newton, user_load_equal_power, KktSystem};
use crate::propagation::CarrierModel;
use crate::seed::{drop_seed, stream_rng, Stream};

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Fraction of `sorted` that is `<= x`.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64
}

/// Largest gap between the empirical and model CDF over `points`.
pub fn sup_distance_at(samples: &[f64], cdf: impl Fn(f64) -> f64, points: impl IntoIterator<Item = f64>) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    points
        .into_iter()
        .map(|p| (empirical_cdf(&x, p) - cdf(p)).abs())
        .fold(0.0, f64::max)
}

/// Radius of the disc of reference users: the nearest AP of a user inside
/// it lies outside the region with probability at most 1e-3.
pub fn reference_radius(region_radius: f64, lambda_f: f64) -> f64 {
    region_radius - (1e3f64.ln() / (std::f64::consts::PI * lambda_f)).sqrt()
}

/// `cfg` with pure power-law attenuation, no clamping in practice and the
/// given densities; the setting of every closed-form law.
pub fn power_law_setup(base: &ExperimentConfig, lambda_f: f64, lambda_u_ratio: f64, region_radius: f64) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.lambda_f = lambda_f;
    cfg.lambda_u_ratio = lambda_u_ratio;
    cfg.region_radius_m = region_radius;
    cfg.propagation.model = CarrierModel::PowerLaw;
    cfg.propagation.min_distance_m = 1e-2;
    cfg
}

/// Connection distance and average gain of a reference user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceLink {
    pub distance: f64,
    pub gain: f64,
}

const SAMPLE_BATCH: usize = 32;

/// Links of users inside [`reference_radius`], collected over drops
/// `base_seed, base_seed + 1, ...` until at least `min_samples` are in.
pub fn reference_links(cfg: &ExperimentConfig, min_samples: usize) -> Result<Vec<ReferenceLink>> {
    let inner = reference_radius(cfg.region_radius_m, cfg.lambda_f);
    let centre = Point::ORIGIN;
    let mut out = Vec::with_capacity(min_samples);
    let mut next = 0u64;
    while out.len() < min_samples {
        let batch: Vec<Vec<ReferenceLink>> = (next..next + SAMPLE_BATCH as u64)
            .into_par_iter()
            .map(|i| {
                let g = drop_geometry(cfg, drop_seed(cfg.base_seed, i))?;
                Ok(g.realization
                    .users
                    .iter()
                    .enumerate()
                    .filter(|(_, u)| u.distance(centre) <= inner)
                    .map(|(k, u)| {
                        let l = g.assoc.serving_ap(k);
                        ReferenceLink {
                            distance: u.distance(g.realization.aps[l]),
                            gain: g.budget.avg_power.get(l, k),
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        next += SAMPLE_BATCH as u64;
        for links in batch {
            if out.len() >= min_samples {
                break;
            }
            out.extend(links);
        }
    }
    Ok(out)
}

/// Equal-power load of each reference link at demand `rate`.
pub fn user_loads(cfg: &ExperimentConfig, links: &[ReferenceLink], rate: f64) -> Vec<f64> {
    let r = cfg.radio();
    links
        .iter()
        .map(|l| user_load_equal_power(rate, l.gain, r.p_tot_w, r.prbs, r.noise_w, r.bandwidth_hz))
        .collect()
}

/// Load of the AP nearest the region centre (sum of its users' equal-power
/// loads), one sample per drop.
pub fn reference_ap_loads(cfg: &ExperimentConfig, rate: f64, drops: usize) -> Result<Vec<f64>> {
    let r = cfg.radio();
    (0..drops as u64)
        .into_par_iter()
        .map(|i| {
            let g = drop_geometry(cfg, drop_seed(cfg.base_seed, i))?;
            let l = crate::association::nearest(&g.realization.aps, Point::ORIGIN).expect("deployments are non-empty");
            Ok(g.assoc
                .members(l)
                .iter()
                .map(|&k| user_load_equal_power(rate, g.budget.avg_power.get(l, k), r.p_tot_w, r.prbs, r.noise_w, r.bandwidth_hz))
                .sum())
        })
        .collect()
}

/// Equal-cell variant: APs on the square lattice, a fixed user count.
pub fn grid_mode(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        ap_placement: Placement::Lattice,
        user_placement: Placement::FixedCount,
        ..cfg.clone()
    }
}

/// Gap between sampled AP loads and the count-based CDF, read halfway
/// between the steps `j n*` of the model CDF.
pub fn ap_load_gap(samples: &[f64], rate: f64, acfg: &AnalyticsConfig, law: CountLaw) -> f64 {
    let n_star = analytics::typical_user_load(rate, acfg);
    let cdf = |n: f64| analytics::cdf_ap_load(n, rate, acfg, law);
    let mut points = Vec::new();
    let mut j = 0.0;
    loop {
        let p = (j + 0.5) * n_star;
        points.push(p);
        if cdf(p) > 1.0 - 1e-9 || j > acfg.expected_users() {
            break;
        }
        j += 1.0;
    }
    sup_distance_at(samples, cdf, points)
}

/// Closed-form and simulated outage at one demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutagePoint {
    pub demand_bps: f64,
    pub analytic: f64,
    /// Mean fraction of APs that the coloring could not fully serve.
    pub simulated: f64,
    pub simulated_se: f64,
    /// Mean fraction of users below their demand.
    pub user_outage: f64,
}

pub fn outage_comparison(cfg: &ExperimentConfig) -> Result<Vec<OutagePoint>> {
    let cfg = ExperimentConfig {
        scenario: Scenario::Hierarchical,
        ..cfg.clone()
    };
    let sweep = run_sweep(&cfg, None)?;
    let acfg = cfg.analytics();
    Ok(cfg
        .demands_bps
        .iter()
        .map(|&r| {
            let rows: Vec<_> = sweep.rows.iter().filter(|row| row.demand_bps == r).collect();
            let (simulated, simulated_se) = mean_and_se(&rows.iter().map(|row| row.ap_shortfall_fraction).collect::<Vec<_>>());
            let (user_outage, _) = mean_and_se(&rows.iter().map(|row| row.outage_fraction).collect::<Vec<_>>());
            OutagePoint {
                demand_bps: r,
                analytic: analytics::outage_probability(r, &acfg, cfg.area_count),
                simulated,
                simulated_se,
                user_outage,
            }
        })
        .collect())
}

/// One line of the invariant suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, bound: f64) -> Self {
        Check {
            name,
            value,
            bound,
            pass: value <= bound,
        }
    }
}

/// Invariant suite on the configuration `base` (radio parameters, seeds).
/// `scale` multiplies every sample size; 1.0 is the full suite.
pub fn run_checks(base: &ExperimentConfig, scale: f64) -> Result<Vec<Check>> {
    let n = |full: usize| ((full as f64 * scale).ceil() as usize).max(1);
    let mut checks = Vec::new();

    let dense = power_law_setup(base, 1.0 / 100.0, 5.0, 100.0);
    let links = reference_links(&dense, n(100_000))?;
    let d: Vec<f64> = links.iter().map(|l| l.distance).collect();
    checks.push(Check::at_most(
        "connection distance KS",
        ks_distance(&d, |x| analytics::cdf_connection_distance(x, dense.lambda_f)),
        0.01,
    ));

    let rate = 5e6;
    let sparse = power_law_setup(base, 1.0 / 1000.0, 5.0, 200.0);
    let mut widths = Vec::new();
    for (name, cfg, links) in [
        ("user load sup, dense", &dense, links),
        ("user load sup, sparse", &sparse, reference_links(&sparse, n(100_000))?),
    ] {
        let a = cfg.analytics();
        let loads = user_loads(cfg, &links, rate);
        checks.push(Check::at_most(name, ks_distance(&loads, |x| analytics::cdf_user_load(x, rate, &a)), 0.02));
        let (lo, hi) = analytics::quantile_interval(|x| analytics::cdf_user_load(x, rate, &a), 0.05, 0.95, 1e4);
        widths.push(hi - lo);
    }
    checks.push(Check::at_most("user load rise width ratio dense/sparse", widths[0] / widths[1], 1.0 - f64::EPSILON));

    let grid = grid_mode(&dense);
    let samples = reference_ap_loads(&grid, rate, n(4000))?;
    checks.push(Check::at_most(
        "grid AP load sup",
        ap_load_gap(&samples, rate, &grid.analytics(), CountLaw::Binomial),
        0.05,
    ));

    let mut rng = stream_rng(base.base_seed, Stream::Validation, 0);
    let radio = base.radio();
    let mut worst_kkt: f64 = 0.0;
    let mut worst_slack: f64 = 0.0;
    for _ in 0..n(500) {
        let m = rng.random_range(1..=3);
        let demands: Vec<f64> = (0..m).map(|_| rng.random_range(0.2e6..3e6)).collect();
        let gains: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-11.0..-7.0))).collect();
        if !KktSystem::new(&demands, &gains, &radio).feasible() {
            continue;
        }
        let (est, state) = estimate_load_newton(&demands, &gains, &radio, &base.newton)?;
        if state.converged() {
            worst_kkt = worst_kkt.max(state.residual);
            for k in 0..m {
                let snr = est.power[k] * gains[k] / (est.n[k] * radio.noise_w);
                let achieved = est.n[k] * radio.bandwidth_hz * snr.ln_1p() * std::f64::consts::LOG2_E;
                worst_slack = worst_slack.max((achieved / demands[k] - 1.0).abs());
            }
        } else {
            worst_kkt = f64::INFINITY;
        }
    }
    checks.push(Check::at_most("Newton KKT residual", worst_kkt, 1e-8));
    checks.push(Check::at_most("Newton rate constraint slack", worst_slack, 1e-6));

    let small = ExperimentConfig {
        drops: n(20).min(base.drops),
        demands_bps: vec![1e6, 2.5e6],
        n_ap: vec![18.min(base.prbs)],
        ..base.clone()
    };
    let mut bad_colorings: usize = 0;
    for i in 0..small.drops as u64 {
        let rep = run_drop_detailed(&small, drop_seed(small.base_seed, i))?;
        for st in &rep.stages {
            if let Some(h) = &st.hierarchical {
                if !h.allocation.is_orthogonal(&h.graph) {
                    bad_colorings += 1;
                }
                let g = InterferenceGraph::build(&rep.state.realization.aps, small.d_tilde_m, &h.loads.loads)?;
                if !dsatur_color(&g, small.prbs)?.is_proper(&g)
                    || allocation_from_coloring(&dsatur_color(&g, small.prbs)?, &g) != h.allocation
                {
                    bad_colorings += 1;
                }
            }
        }
    }
    checks.push(Check::at_most("improper colorings", bad_colorings as f64, 0.0));

    let a = csv_string(&run_sweep(&small, None)?.rows)?;
    let b = csv_string(&run_sweep(&small, None)?.rows)?;
    checks.push(Check::at_most("differing bytes across reruns", (a != b) as u8 as f64, 0.0));
    Ok(checks)
}
