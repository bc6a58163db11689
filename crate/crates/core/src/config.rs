//! Experiment configuration, read from JSON. Every field has a default, so
//! a config file only lists what it changes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::{AnalyticsConfig, AreaCount, CountLaw};
use crate::deployment::{DeploymentConfig, Placement};
use crate::error::{ensure_positive, Error, Result};
use crate::evaluation::InterferenceModel;
use crate::load::{LoadSolver, NewtonOptions, RadioParams};
use crate::propagation::{dbm_to_watts, noise_power, PropagationConfig};
use crate::scheduling::SchedulerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Hierarchical,
    Fixed,
    #[default]
    Both,
    /// Closed-form curves only.
    Analyze,
}

impl Scenario {
    pub fn runs_hierarchical(self) -> bool {
        matches!(self, Scenario::Hierarchical | Scenario::Both)
    }

    pub fn runs_fixed(self) -> bool {
        matches!(self, Scenario::Fixed | Scenario::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub region_radius_m: f64,
    /// PRBs in the band, `N`.
    pub prbs: usize,
    pub p_tot_dbm: f64,
    /// AP coverage radius; APs closer than twice this interfere.
    pub d_tilde_m: f64,
    pub propagation: PropagationConfig,
    /// AP density, 1/m².
    pub lambda_f: f64,
    /// User density as a multiple of `lambda_f`.
    pub lambda_u_ratio: f64,
    pub ap_placement: Placement,
    pub user_placement: Placement,
    /// Common per-user demand values to sweep, bit/s.
    pub demands_bps: Vec<f64>,
    /// PRBs per AP of the fixed-allocation baseline; several values sweep.
    pub n_ap: Vec<usize>,
    /// Reuse one random subset per AP index for the whole experiment.
    pub freeze_fixed_allocation: bool,
    pub drops: usize,
    pub base_seed: u64,
    pub load_solver: LoadSolver,
    pub newton: NewtonOptions,
    pub scheduler: SchedulerKind,
    /// Interference model applied to the hierarchical scheme; the baseline
    /// always sees every co-channel AP.
    pub hierarchical_interference: InterferenceModel,
    /// Count rates only up to the demand in throughput and min-rate.
    pub cap_rate_at_demand: bool,
    pub user_count_law: CountLaw,
    pub area_count: AreaCount,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::Both,
            region_radius_m: 100.0,
            prbs: 50,
            p_tot_dbm: 20.0,
            d_tilde_m: 20.0,
            propagation: PropagationConfig::default(),
            lambda_f: 1.0 / 200.0,
            lambda_u_ratio: 3.0,
            ap_placement: Placement::Poisson,
            user_placement: Placement::Poisson,
            demands_bps: vec![0.5e6, 1e6, 1.5e6, 2e6, 2.5e6, 3e6],
            n_ap: vec![18],
            freeze_fixed_allocation: false,
            drops: 200,
            base_seed: 1,
            load_solver: LoadSolver::EqualPower,
            newton: NewtonOptions::default(),
            scheduler: SchedulerKind::TimeShare,
            hierarchical_interference: InterferenceModel::Managed,
            cap_rate_at_demand: true,
            user_count_law: CountLaw::Binomial,
            area_count: AreaCount::Poisson,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.drops == 0 {
            return Err(Error::param("drops", "need at least one drop"));
        }
        if self.demands_bps.is_empty() {
            return Err(Error::param("demands_bps", "sweep is empty"));
        }
        if let Some(r) = self.demands_bps.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::param("demands_bps", format!("demand must be positive, got {r}")));
        }
        if self.scenario.runs_fixed() {
            if self.n_ap.is_empty() {
                return Err(Error::param("n_ap", "sweep is empty"));
            }
            if let Some(n) = self.n_ap.iter().find(|n| **n == 0 || **n > self.prbs) {
                return Err(Error::param("n_ap", format!("need 1 <= n_ap <= {}, got {n}", self.prbs)));
            }
        }
        ensure_positive("d_tilde_m", self.d_tilde_m)?;
        ensure_positive("lambda_u_ratio", self.lambda_u_ratio)?;
        ensure_positive("newton.tol", self.newton.tol)?;
        self.propagation.validate()?;
        self.deployment().validate()?;
        self.radio().validate()
    }

    pub fn lambda_u(&self) -> f64 {
        self.lambda_f * self.lambda_u_ratio
    }

    pub fn p_tot_w(&self) -> f64 {
        dbm_to_watts(self.p_tot_dbm)
    }

    pub fn deployment(&self) -> DeploymentConfig {
        DeploymentConfig {
            region_radius: self.region_radius_m,
            lambda_f: self.lambda_f,
            lambda_u: self.lambda_u(),
            ap_placement: self.ap_placement,
            user_placement: self.user_placement,
        }
    }

    pub fn radio(&self) -> RadioParams {
        RadioParams {
            bandwidth_hz: self.propagation.prb_bandwidth_hz,
            p_tot_w: self.p_tot_w(),
            noise_w: noise_power(&self.propagation),
            prbs: self.prbs,
        }
    }

    /// Closed-form model of the same network: power-law attenuation with the
    /// configured `alpha` and `l0`.
    pub fn analytics(&self) -> AnalyticsConfig {
        let radio = self.radio();
        AnalyticsConfig {
            lambda_f: self.lambda_f,
            lambda_u: self.lambda_u(),
            alpha: self.propagation.alpha,
            gamma0: radio.p_tot_w * self.propagation.l0 / (self.prbs as f64 * radio.noise_w),
            bandwidth_hz: radio.bandwidth_hz,
            prbs: self.prbs,
            d_tilde: self.d_tilde_m,
            region_radius: self.region_radius_m,
        }
    }
}
