//! Per-AP max-min scheduling of the granted PRBs with equal power per PRB.
//!
//! Scheduling is interference blind: per-PRB rates use noise only. The
//! interference of co-channel APs enters when rates are evaluated.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scheduling input of one AP: member users × granted PRBs.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    /// Instantaneous gain `h[k][j]` of member k on the j-th granted PRB.
    pub gains: Vec<Vec<f64>>,
    /// Demand per member, bit/s. Members with zero demand are not served.
    pub demands: Vec<f64>,
    /// Transmit power on each granted PRB, W.
    pub power_per_prb: f64,
    pub noise: f64,
    pub bandwidth: f64,
}

impl LocalChannel {
    /// Split `p_tot` equally over the granted PRBs.
    pub fn equal_power(gains: Vec<Vec<f64>>, demands: Vec<f64>, p_tot: f64, noise: f64, bandwidth: f64) -> Result<Self> {
        if gains.len() != demands.len() {
            return Err(Error::param("gains", "one gain row per member required"));
        }
        let prbs = gains.first().map_or(0, Vec::len);
        if gains.iter().any(|g| g.len() != prbs) {
            return Err(Error::param("gains", "ragged gain table"));
        }
        let power_per_prb = if prbs > 0 { p_tot / prbs as f64 } else { 0.0 };
        Ok(LocalChannel {
            gains,
            demands,
            power_per_prb,
            noise,
            bandwidth,
        })
    }

    pub fn users(&self) -> usize {
        self.demands.len()
    }

    pub fn prbs(&self) -> usize {
        self.gains.first().map_or(0, Vec::len)
    }

    /// Noise-limited rate of member k holding PRB j for the whole subframe.
    pub fn prb_rate(&self, k: usize, j: usize) -> f64 {
        self.bandwidth * (1.0 + self.power_per_prb * self.gains[k][j] / self.noise).log2()
    }

    fn eligible(&self) -> Vec<usize> {
        (0..self.users()).filter(|&k| self.demands[k] > 0.0).collect()
    }
}

/// Time shares and powers of one AP, members × granted PRBs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    /// Fraction `c[k][j]` of granted PRB j used by member k.
    pub share: Vec<Vec<f64>>,
    /// Energy-equivalent power `p[k][j] = c[k][j] · P / N̄`, W.
    pub power: Vec<Vec<f64>>,
    /// Assignment steps taken; greedy takes one per granted PRB.
    pub steps: usize,
}

impl Schedule {
    fn empty(ch: &LocalChannel) -> Self {
        Schedule {
            share: vec![vec![0.0; ch.prbs()]; ch.users()],
            power: vec![vec![0.0; ch.prbs()]; ch.users()],
            steps: 0,
        }
    }

    fn from_shares(ch: &LocalChannel, share: Vec<Vec<f64>>, steps: usize) -> Self {
        let power = share
            .iter()
            .map(|row| row.iter().map(|c| c * ch.power_per_prb).collect())
            .collect();
        Schedule { share, power, steps }
    }

    /// Noise-limited rate per member.
    pub fn planned_rates(&self, ch: &LocalChannel) -> Vec<f64> {
        (0..ch.users())
            .map(|k| (0..ch.prbs()).map(|j| self.share[k][j] * ch.prb_rate(k, j)).sum())
            .collect()
    }

    /// Smallest noise-limited normalized rate over members with demand.
    pub fn min_normalized(&self, ch: &LocalChannel) -> f64 {
        let rates = self.planned_rates(ch);
        ch.eligible()
            .into_iter()
            .map(|k| rates[k] / ch.demands[k])
            .fold(f64::INFINITY, f64::min)
    }

    /// Total transmit power, W.
    pub fn total_power(&self) -> f64 {
        self.power.iter().flatten().sum()
    }

    /// Whether granted PRB j carries any member.
    pub fn prb_active(&self, j: usize) -> bool {
        self.share.iter().any(|row| row[j] > 0.0)
    }
}

/// Greedy max-min assignment of whole PRBs.
///
/// Repeatedly the member with the lowest normalized rate so far takes its
/// strongest unassigned PRB, until every granted PRB is assigned. Ties go to
/// the lowest member index, then the lowest PRB index.
pub fn greedy_maxmin(ch: &LocalChannel) -> Schedule {
    let users = ch.eligible();
    if users.is_empty() {
        return Schedule::empty(ch);
    }
    let mut normalized = vec![0.0; ch.users()];
    let mut free = vec![true; ch.prbs()];
    let mut share = vec![vec![0.0; ch.prbs()]; ch.users()];
    for _ in 0..ch.prbs() {
        let mut k = users[0];
        for &u in &users[1..] {
            if normalized[u] < normalized[k] {
                k = u;
            }
        }
        let mut best: Option<usize> = None;
        for j in 0..ch.prbs() {
            if free[j] && best.is_none_or(|b| ch.gains[k][j] > ch.gains[k][b]) {
                best = Some(j);
            }
        }
        let j = best.expect("a free PRB remains while steps remain");
        free[j] = false;
        share[k][j] = 1.0;
        normalized[k] += ch.prb_rate(k, j) / ch.demands[k];
    }
    Schedule::from_shares(ch, share, ch.prbs())
}

/// Baseline: granted PRB j goes to the (j mod M)-th member with demand.
pub fn round_robin(ch: &LocalChannel) -> Schedule {
    let users = ch.eligible();
    if users.is_empty() {
        return Schedule::empty(ch);
    }
    let mut share = vec![vec![0.0; ch.prbs()]; ch.users()];
    for j in 0..ch.prbs() {
        share[users[j % users.len()]][j] = 1.0;
    }
    Schedule::from_shares(ch, share, ch.prbs())
}

/// Time-sharing refinement: the linear program
/// `max t  s.t.  Σ_j c[k][j] r[k][j] / R_k ≥ t,  Σ_k c[k][j] = 1,  c ≥ 0`
/// under the same equal power. Returns `start` unchanged when the solver
/// fails or does not improve on it.
pub fn fractional_refine(ch: &LocalChannel, start: &Schedule) -> Schedule {
    let users = ch.eligible();
    if users.is_empty() || ch.prbs() == 0 {
        return start.clone();
    }
    match solve_time_share(ch, &users) {
        Ok(share) => {
            let refined = Schedule::from_shares(ch, share, start.steps);
            if refined.min_normalized(ch) >= start.min_normalized(ch) {
                refined
            } else {
                start.clone()
            }
        }
        Err(e) => {
            log::warn!("time-share LP failed ({e}), keeping whole-PRB schedule");
            start.clone()
        }
    }
}

fn solve_time_share(ch: &LocalChannel, users: &[usize]) -> std::result::Result<Vec<Vec<f64>>, microlp::Error> {
    let n = ch.prbs();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    let vars: Vec<Vec<_>> = users
        .iter()
        .map(|_| (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect())
        .collect();
    for (i, &k) in users.iter().enumerate() {
        let mut expr: Vec<(microlp::Variable, f64)> = (0..n)
            .map(|j| (vars[i][j], ch.prb_rate(k, j) / ch.demands[k]))
            .collect();
        expr.push((t, -1.0));
        lp.add_constraint(expr, ComparisonOp::Ge, 0.0);
    }
    for j in 0..n {
        let expr: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        lp.add_constraint(expr, ComparisonOp::Eq, 1.0);
    }
    let outcome = lp.solve()?;
    let sol = outcome.solution().ok_or(microlp::Error::InternalError("interrupted".into()))?;
    let mut share = vec![vec![0.0; n]; ch.users()];
    for (i, &k) in users.iter().enumerate() {
        for j in 0..n {
            share[k][j] = sol.var_value(vars[i][j]).clamp(0.0, 1.0);
        }
    }
    // Re-normalize the solver's rounding so every PRB is shared exactly once.
    for j in 0..n {
        let sum: f64 = users.iter().map(|&k| share[k][j]).sum();
        if sum > 0.0 {
            for &k in users {
                share[k][j] /= sum;
            }
        }
    }
    Ok(share)
}

/// Step-4 algorithm run by every AP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    /// Whole-PRB greedy max-min.
    Greedy,
    /// Greedy followed by the time-sharing linear program.
    #[default]
    TimeShare,
    RoundRobin,
}

pub fn schedule(kind: SchedulerKind, ch: &LocalChannel) -> Schedule {
    match kind {
        SchedulerKind::Greedy => greedy_maxmin(ch),
        SchedulerKind::TimeShare => fractional_refine(ch, &greedy_maxmin(ch)),
        SchedulerKind::RoundRobin => round_robin(ch),
    }
}

/// Rates actually delivered to the members of one AP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievedRates {
    pub rate: Vec<f64>,
    /// `rate / R`; infinite for members without demand.
    pub normalized: Vec<f64>,
}

/// Rates under interference `interference[k][j]` (W) on each granted PRB:
/// `Σ_j c B log2(1 + (p / c) h / (I + σ²))`. A member holding a share c of
/// a PRB transmits at the PRB's full power for that fraction of the
/// subframe, which reduces to `p h` for whole PRBs.
pub fn achieved_rates(sched: &Schedule, ch: &LocalChannel, interference: &[Vec<f64>]) -> AchievedRates {
    let rate: Vec<f64> = (0..ch.users())
        .map(|k| {
            (0..ch.prbs())
                .filter(|&j| sched.share[k][j] > 0.0)
                .map(|j| {
                    let c = sched.share[k][j];
                    let p = sched.power[k][j] / c;
                    c * ch.bandwidth * (1.0 + p * ch.gains[k][j] / (interference[k][j] + ch.noise)).log2()
                })
                .sum()
        })
        .collect();
    let normalized = rate
        .iter()
        .zip(&ch.demands)
        .map(|(r, d)| if *d > 0.0 { r / d } else { f64::INFINITY })
        .collect();
    AchievedRates { rate, normalized }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn channel(gains: Vec<Vec<f64>>, demands: Vec<f64>) -> LocalChannel {
        LocalChannel::equal_power(gains, demands, 1.0, 1.0, 1.0).unwrap()
    }

    fn exhaustive_best(ch: &LocalChannel) -> f64 {
        let (m, n) = (ch.users(), ch.prbs());
        let mut best = 0.0f64;
        let mut owner = vec![0usize; n];
        loop {
            let mut share = vec![vec![0.0; n]; m];
            for j in 0..n {
                share[owner[j]][j] = 1.0;
            }
            best = best.max(Schedule::from_shares(ch, share, 0).min_normalized(ch));
            let mut pos = 0;
            loop {
                if pos == n {
                    return best;
                }
                owner[pos] += 1;
                if owner[pos] < m {
                    break;
                }
                owner[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn single_user_takes_everything() {
        let ch = channel(vec![vec![1.0, 2.0, 3.0]], vec![1.0]);
        let s = greedy_maxmin(&ch);
        assert_eq!(s.share, vec![vec![1.0, 1.0, 1.0]]);
        assert_eq!(s.steps, 3);
        assert!((s.total_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_gains_give_each_user_its_best_prb() {
        let ch = channel(vec![vec![10.0, 1.0], vec![1.0, 10.0]], vec![1.0, 1.0]);
        let s = greedy_maxmin(&ch);
        assert_eq!(s.share, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((s.min_normalized(&ch) - exhaustive_best(&ch)).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs() {
        let none = channel(vec![], vec![]);
        assert!(greedy_maxmin(&none).share.is_empty());
        let no_prbs = channel(vec![vec![], vec![]], vec![1.0, 1.0]);
        let ch_rates = achieved_rates(&greedy_maxmin(&no_prbs), &no_prbs, &[vec![], vec![]]);
        assert_eq!(ch_rates.rate, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_demand_users_are_skipped() {
        let ch = channel(vec![vec![1.0, 1.0], vec![5.0, 5.0]], vec![1.0, 0.0]);
        let s = greedy_maxmin(&ch);
        assert_eq!(s.share[1], vec![0.0, 0.0]);
        assert_eq!(s.share[0], vec![1.0, 1.0]);
    }

    #[test]
    fn time_share_examples() {
        let single = channel(vec![vec![1.0, 3.0]], vec![2.0]);
        let s = fractional_refine(&single, &greedy_maxmin(&single));
        let want = (single.prb_rate(0, 0) + single.prb_rate(0, 1)) / 2.0;
        assert!((s.min_normalized(&single) - want).abs() < 1e-9);

        let pair = channel(vec![vec![1.0], vec![1.0]], vec![1.0, 1.0]);
        let s = fractional_refine(&pair, &greedy_maxmin(&pair));
        assert!((s.share[0][0] - 0.5).abs() < 1e-9 && (s.share[1][0] - 0.5).abs() < 1e-9);
        assert!((s.min_normalized(&pair) - pair.prb_rate(0, 0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn time_share_rates_use_full_prb_power() {
        let ch = channel(vec![vec![1.0], vec![1.0]], vec![1.0, 1.0]);
        let s = fractional_refine(&ch, &greedy_maxmin(&ch));
        let r = achieved_rates(&s, &ch, &[vec![0.0], vec![0.0]]);
        // One PRB at SNR 1 is worth exactly B; halves split it.
        assert!((r.rate[0] - 0.5).abs() < 1e-9);
        assert!((s.total_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn achieved_rate_examples() {
        let ch = channel(vec![vec![1.0]], vec![1.0]);
        let idle = Schedule::empty(&ch);
        assert_eq!(achieved_rates(&idle, &ch, &[vec![0.0]]).rate, vec![0.0]);
        let s = greedy_maxmin(&ch);
        assert!((achieved_rates(&s, &ch, &[vec![0.0]]).rate[0] - 1.0).abs() < 1e-12);
        let jammed = achieved_rates(&s, &ch, &[vec![1.0]]).rate[0];
        assert!((jammed - 1.5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn round_robin_cycles() {
        let ch = channel(vec![vec![1.0; 5]; 2], vec![1.0, 1.0]);
        let s = round_robin(&ch);
        assert_eq!(s.share[0], vec![1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn schedule_invariants(
            m in 1usize..5,
            n in 0usize..7,
            raw in prop::collection::vec(1e-3f64..10.0, 35),
            demands in prop::collection::vec(0.1f64..5.0, 5),
        ) {
            let gains: Vec<Vec<f64>> = (0..m).map(|k| raw[k * 7..k * 7 + n].to_vec()).collect();
            let ch = LocalChannel::equal_power(gains, demands[..m].to_vec(), 0.1, 1e-3, 180e3).unwrap();
            let g = greedy_maxmin(&ch);
            prop_assert_eq!(g.steps, n);
            for kind in [SchedulerKind::Greedy, SchedulerKind::TimeShare, SchedulerKind::RoundRobin] {
                let s = schedule(kind, &ch);
                prop_assert!(s.total_power() <= 0.1 + 1e-12);
                for j in 0..n {
                    let col: f64 = s.share.iter().map(|r| r[j]).sum();
                    prop_assert!((col - 1.0).abs() < 1e-9);
                }
                for (c_row, p_row) in s.share.iter().zip(&s.power) {
                    for (c, p) in c_row.iter().zip(p_row) {
                        prop_assert!(*c >= 0.0 && (*p == 0.0 || *c > 0.0));
                    }
                }
            }
            let refined = fractional_refine(&ch, &g);
            prop_assert!(refined.min_normalized(&ch) >= g.min_normalized(&ch) - 1e-9);
        }
    }
}
