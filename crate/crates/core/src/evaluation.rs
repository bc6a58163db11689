//! Realized rates under co-channel interference, per-drop metrics, and the
//! uncoordinated fixed-allocation baseline.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::association::Association;
use crate::coloring::{ChannelAllocation, InterferenceGraph};
use crate::error::{Error, Result};
use crate::propagation::ChannelState;
use crate::scheduling::{achieved_rates, schedule, LocalChannel, Schedule, SchedulerKind};

/// Every AP draws an independent uniform `n_ap`-subset of the `prbs` PRBs.
pub fn fixed_allocation<R: Rng + ?Sized>(aps: usize, prbs: usize, n_ap: usize, rng: &mut R) -> Result<ChannelAllocation> {
    if n_ap == 0 || n_ap > prbs {
        return Err(Error::param("n_ap", format!("need 1 <= n_ap <= {prbs}, got {n_ap}")));
    }
    let sets = (0..aps)
        .map(|_| {
            let mut s = index::sample(rng, prbs, n_ap).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    Ok(ChannelAllocation {
        prbs: sets,
        requested: vec![n_ap; aps],
    })
}

/// Scheduling input of AP `ap`: its members on its granted PRBs with the
/// power budget split equally over them.
pub fn local_channel(
    ap: usize,
    assoc: &Association,
    alloc: &ChannelAllocation,
    channel: &ChannelState,
    demands: &[f64],
    p_tot: f64,
    bandwidth: f64,
) -> Result<LocalChannel> {
    let gains = assoc
        .members(ap)
        .iter()
        .map(|&k| alloc.prbs[ap].iter().map(|&n| channel.inst_gain(ap, k, n)).collect())
        .collect();
    let r = assoc.members(ap).iter().map(|&k| demands[k]).collect();
    LocalChannel::equal_power(gains, r, p_tot, channel.noise(), bandwidth)
}

/// Which co-channel transmitters count as interference.
#[derive(Debug, Clone, Copy)]
pub enum InterferenceScope<'a> {
    /// Every other AP active on the PRB.
    All,
    /// Only APs adjacent in the interference graph.
    GraphNeighbors(&'a InterferenceGraph),
}

impl InterferenceScope<'_> {
    fn counts(&self, interferer: usize, serving: usize) -> bool {
        match self {
            InterferenceScope::All => interferer != serving,
            InterferenceScope::GraphNeighbors(g) => g.interferes(interferer, serving),
        }
    }
}

/// Average power each AP radiates on each PRB of the band, W.
pub fn transmit_power_map(alloc: &ChannelAllocation, schedules: &[Schedule], prbs: usize) -> Vec<Vec<f64>> {
    alloc
        .prbs
        .iter()
        .zip(schedules)
        .map(|(granted, s)| {
            let mut row = vec![0.0; prbs];
            for (j, &n) in granted.iter().enumerate() {
                row[n] = s.power.iter().map(|p| p[j]).sum();
            }
            row
        })
        .collect()
}

/// Interference `I[k][j]` seen by each member k of `ap` on its j-th granted
/// PRB: the power of every counted AP transmitting on that PRB times its
/// instantaneous gain towards the member.
pub fn interference_map(
    ap: usize,
    assoc: &Association,
    alloc: &ChannelAllocation,
    tx_power: &[Vec<f64>],
    channel: &ChannelState,
    scope: InterferenceScope<'_>,
) -> Vec<Vec<f64>> {
    assoc
        .members(ap)
        .iter()
        .map(|&k| {
            alloc.prbs[ap]
                .iter()
                .map(|&n| {
                    (0..alloc.ap_count())
                        .filter(|&i| scope.counts(i, ap) && tx_power[i][n] > 0.0)
                        .map(|i| tx_power[i][n] * channel.inst_gain(i, k, n))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Per-user result of one drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserOutcome {
    pub rate: f64,
    pub outage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropMetrics {
    pub outage_fraction: f64,
    /// Smallest user rate, bit/s; zero for a drop without users.
    pub min_rate: f64,
    pub min_normalized: f64,
    /// Sum of user rates, bit/s.
    pub throughput: f64,
    pub per_user: Vec<UserOutcome>,
}

/// A user is in outage when its rate is strictly below its demand.
pub fn drop_metrics(rates: &[f64], demands: &[f64]) -> DropMetrics {
    let per_user: Vec<UserOutcome> = rates
        .iter()
        .zip(demands)
        .map(|(&rate, &d)| UserOutcome { rate, outage: rate < d })
        .collect();
    let users = per_user.len();
    let outages = per_user.iter().filter(|u| u.outage).count();
    let min_normalized = rates
        .iter()
        .zip(demands)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, d)| r / d)
        .fold(f64::INFINITY, f64::min);
    DropMetrics {
        outage_fraction: if users > 0 { outages as f64 / users as f64 } else { 0.0 },
        min_rate: if users > 0 { rates.iter().copied().fold(f64::INFINITY, f64::min) } else { 0.0 },
        min_normalized: if min_normalized.is_finite() { min_normalized } else { 0.0 },
        throughput: rates.iter().sum(),
        per_user,
    }
}

/// How a scheme's transmissions are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceModel {
    /// Every co-channel AP interferes.
    Full,
    /// Only APs within the interference-graph reach interfere; with an
    /// orthogonal allocation this is interference free.
    #[default]
    Managed,
}

/// Scheduling and evaluation result of one scheme on one drop.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub schedules: Vec<Schedule>,
    /// Rate per user before any demand cap, bit/s.
    pub raw_rates: Vec<f64>,
    pub metrics: DropMetrics,
}

/// Common inputs for scheduling and evaluating one drop.
#[derive(Debug, Clone, Copy)]
pub struct DropContext<'a> {
    pub assoc: &'a Association,
    pub channel: &'a ChannelState,
    pub demands: &'a [f64],
    pub p_tot: f64,
    pub bandwidth: f64,
    pub scheduler: SchedulerKind,
    /// Count delivered rate at most up to the demand.
    pub cap_at_demand: bool,
}

/// Schedule every AP on its allocation and evaluate the realized rates.
pub fn evaluate_allocation(ctx: &DropContext<'_>, alloc: &ChannelAllocation, scope: InterferenceScope<'_>) -> Result<SchemeOutcome> {
    let aps = ctx.assoc.ap_count();
    if alloc.ap_count() != aps {
        return Err(Error::param("alloc", "allocation does not match the AP count"));
    }
    let channels = (0..aps)
        .map(|l| local_channel(l, ctx.assoc, alloc, ctx.channel, ctx.demands, ctx.p_tot, ctx.bandwidth))
        .collect::<Result<Vec<_>>>()?;
    let schedules: Vec<Schedule> = channels.iter().map(|ch| schedule(ctx.scheduler, ch)).collect();
    let tx = transmit_power_map(alloc, &schedules, ctx.channel.prb_count());
    let mut raw_rates = vec![0.0; ctx.assoc.user_count()];
    for l in 0..aps {
        let interference = interference_map(l, ctx.assoc, alloc, &tx, ctx.channel, scope);
        let rates = achieved_rates(&schedules[l], &channels[l], &interference);
        for (&k, r) in ctx.assoc.members(l).iter().zip(rates.rate) {
            raw_rates[k] = r;
        }
    }
    let delivered: Vec<f64> = if ctx.cap_at_demand {
        raw_rates.iter().zip(ctx.demands).map(|(r, d)| r.min(*d)).collect()
    } else {
        raw_rates.clone()
    };
    Ok(SchemeOutcome {
        schedules,
        metrics: drop_metrics(&delivered, ctx.demands),
        raw_rates,
    })
}
