//! Closed-form load and outage laws for PPP access points with power-law
//! attenuation `L0 d^-alpha` and equal power over the `N` PRBs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Result};
use crate::special::{binomial_cdf, binomial_pmf, poisson_cdf, poisson_pmf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsConfig {
    pub lambda_f: f64,
    pub lambda_u: f64,
    pub alpha: f64,
    /// SNR scale `P_tot L0 / (N σ²)`.
    pub gamma0: f64,
    pub bandwidth_hz: f64,
    pub prbs: usize,
    pub d_tilde: f64,
    pub region_radius: f64,
}

impl AnalyticsConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("lambda_f", self.lambda_f)?;
        ensure_positive("lambda_u", self.lambda_u)?;
        ensure_positive("alpha", self.alpha)?;
        ensure_positive("gamma0", self.gamma0)?;
        ensure_positive("bandwidth_hz", self.bandwidth_hz)?;
        ensure_positive("prbs", self.prbs as f64)?;
        ensure_positive("d_tilde", self.d_tilde)?;
        ensure_positive("region_radius", self.region_radius)
    }

    fn area(&self) -> f64 {
        PI * self.region_radius * self.region_radius
    }

    /// Expected user count `K = λ_u π R_c²`.
    pub fn expected_users(&self) -> f64 {
        self.lambda_u * self.area()
    }

    /// Expected AP count `L = λ_f π R_c²`.
    pub fn expected_aps(&self) -> f64 {
        self.lambda_f * self.area()
    }

    /// Users per AP, `η = K / L`.
    pub fn eta(&self) -> f64 {
        self.lambda_u / self.lambda_f
    }

    /// Interference reach `r̃ = 2 d̃`.
    pub fn reach(&self) -> f64 {
        2.0 * self.d_tilde
    }
}

/// `P(D ≤ d) = 1 - exp(-λ π d²)`.
pub fn cdf_connection_distance(d: f64, lambda_f: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else {
        -(-lambda_f * PI * d * d).exp_m1()
    }
}

pub fn pdf_connection_distance(d: f64, lambda_f: f64) -> f64 {
    if d < 0.0 {
        0.0
    } else {
        2.0 * PI * lambda_f * d * (-lambda_f * PI * d * d).exp()
    }
}

/// Mode of the connection distance, `sqrt(1 / (2 π λ))`.
pub fn most_probable_distance(lambda_f: f64) -> f64 {
    (1.0 / (2.0 * PI * lambda_f)).sqrt()
}

/// PRBs a user at distance `d` needs for rate `rate`.
pub fn user_load_at_distance(rate: f64, d: f64, cfg: &AnalyticsConfig) -> f64 {
    rate / (cfg.bandwidth_hz * (cfg.gamma0 * d.powf(-cfg.alpha)).ln_1p() * std::f64::consts::LOG2_E)
}

/// Distance at which a user needs exactly `n` PRBs.
fn distance_for_load(n: f64, rate: f64, cfg: &AnalyticsConfig) -> f64 {
    let snr = (rate * std::f64::consts::LN_2 / (n * cfg.bandwidth_hz)).exp_m1();
    (snr / cfg.gamma0).powf(-1.0 / cfg.alpha)
}

/// CDF of the per-user load at demand `rate`.
pub fn cdf_user_load(n: f64, rate: f64, cfg: &AnalyticsConfig) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if n.is_infinite() {
        return 1.0;
    }
    cdf_connection_distance(distance_for_load(n, rate, cfg), cfg.lambda_f)
}

/// Load of a user at the most probable distance, `n*`.
pub fn typical_user_load(rate: f64, cfg: &AnalyticsConfig) -> f64 {
    user_load_at_distance(rate, most_probable_distance(cfg.lambda_f), cfg)
}

/// `P(m users on an AP)` with `K` users each picking one of `L` APs.
pub fn pmf_users_per_ap(m: u64, users: u64, aps: f64) -> f64 {
    binomial_pmf(m, users, 1.0 / aps)
}

/// Law of the number of users per AP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountLaw {
    /// `Binomial(K, 1/L)`.
    #[default]
    Binomial,
    /// `Poisson(η)`.
    Poisson,
}

fn floor_count(x: f64) -> u64 {
    if x.is_finite() {
        x.max(0.0).floor() as u64
    } else {
        u64::MAX
    }
}

/// CDF of the AP load: every user is taken to need `n*`, so the load is
/// below `n_l` iff at most `⌊n_l / n*⌋` users attach.
pub fn cdf_ap_load(n_l: f64, rate: f64, cfg: &AnalyticsConfig, law: CountLaw) -> f64 {
    if n_l < 0.0 {
        return 0.0;
    }
    let m = floor_count(n_l / typical_user_load(rate, cfg));
    match law {
        CountLaw::Binomial => {
            let k = cfg.expected_users().round() as u64;
            binomial_cdf(m.min(k), k, 1.0 / cfg.expected_aps())
        }
        CountLaw::Poisson => poisson_cdf(m, cfg.eta()),
    }
}

/// CDF of the load of `aps_in_reach` APs: Poisson with mean `L̃ η` at
/// `⌊ñ / n*⌋`.
pub fn cdf_system_load(n_tilde: f64, aps_in_reach: u64, rate: f64, cfg: &AnalyticsConfig) -> f64 {
    if n_tilde < 0.0 {
        return 0.0;
    }
    let m = floor_count(n_tilde / typical_user_load(rate, cfg));
    if aps_in_reach == 0 {
        return 1.0;
    }
    poisson_cdf(m, aps_in_reach as f64 * cfg.eta())
}

/// Law of the number of APs inside the interference reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaCount {
    /// `Poisson(λ_f π r̃²)`.
    #[default]
    Poisson,
    /// `Binomial(L, (r̃ / R_c)²)`.
    Binomial,
}

const TAIL_MASS: f64 = 1e-12;

/// Probability that an AP and its interfering neighbours need more than the
/// `N` PRBs of the band.
pub fn outage_probability(rate: f64, cfg: &AnalyticsConfig, area: AreaCount) -> f64 {
    let budget = floor_count(cfg.prbs as f64 / typical_user_load(rate, cfg));
    let reach = cfg.reach();
    let eta = cfg.eta();
    let (trials, p_in) = (
        cfg.expected_aps().round() as u64,
        (reach / cfg.region_radius).powi(2).min(1.0),
    );
    let mean = cfg.lambda_f * PI * reach * reach;
    let count = |l: u64| match area {
        AreaCount::Poisson => poisson_pmf(l, mean),
        AreaCount::Binomial => binomial_pmf(l, trials, p_in),
    };
    let mut covered = count(0);
    let mut sum = 0.0;
    let mut l = 1u64;
    while 1.0 - covered > TAIL_MASS {
        if area == AreaCount::Binomial && l > trials {
            break;
        }
        let w = count(l);
        covered += w;
        sum += w * poisson_cdf(budget, l as f64 * eta);
        l += 1;
        if l > 1_000_000 {
            break;
        }
    }
    (1.0 - sum).clamp(0.0, 1.0)
}

/// Rise interval `[n_lo, n_hi]` of a CDF between levels `lo` and `hi`, found
/// by bisection on `[0, upper]`.
pub fn quantile_interval(cdf: impl Fn(f64) -> f64, lo: f64, hi: f64, upper: f64) -> (f64, f64) {
    let quantile = |level: f64| {
        let (mut a, mut b) = (0.0, upper);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if cdf(mid) < level {
                a = mid;
            } else {
                b = mid;
            }
        }
        b
    };
    (quantile(lo), quantile(hi))
}
