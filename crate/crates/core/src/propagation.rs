//! Large-scale path loss, Rayleigh block fading and receiver noise.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::deployment::NetworkRealization;
use crate::error::{ensure_positive, Error, Result};

/// Large-scale propagation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierModel {
    /// Indoor/outdoor LTE small-cell model with penetration and shadowing.
    #[default]
    LteIndoor,
    /// Pure distance attenuation `L0 · d^-alpha`.
    PowerLaw,
}

/// External obstacle crossed by an indoor link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penetration {
    Wall,
    Window,
}

impl Penetration {
    /// Default penetration loss in dB.
    pub fn loss_db(self) -> f64 {
        match self {
            Penetration::Wall => 10.0,
            Penetration::Window => 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    pub model: CarrierModel,
    /// Path-loss exponent of the power-law model.
    pub alpha: f64,
    /// Linear gain at the 1 m reference distance of the power-law model.
    pub l0: f64,
    pub shadowing_sigma_db: f64,
    pub wall_loss_db: f64,
    pub window_loss_db: f64,
    /// Range of the uniformly drawn AP-to-external-wall distance, metres.
    pub d_in_range: (f64, f64),
    /// Links shorter than this are clamped to it.
    pub min_distance_m: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub prb_bandwidth_hz: f64,
    /// 1x1 antennas; 0 dB leaves every gain untouched.
    pub antenna_gain_db: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            model: CarrierModel::LteIndoor,
            alpha: 3.0,
            l0: db_to_linear(-LTE_INTERCEPT_DB),
            shadowing_sigma_db: 10.0,
            wall_loss_db: Penetration::Wall.loss_db(),
            window_loss_db: Penetration::Window.loss_db(),
            d_in_range: (1.0, 5.0),
            min_distance_m: 1.0,
            noise_psd_dbm_per_hz: -174.0,
            noise_figure_db: 9.0,
            prb_bandwidth_hz: 180e3,
            antenna_gain_db: 0.0,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 2.0) {
            return Err(Error::param("alpha", format!("must exceed 2, got {}", self.alpha)));
        }
        ensure_positive("l0", self.l0)?;
        ensure_positive("prb_bandwidth_hz", self.prb_bandwidth_hz)?;
        ensure_positive("min_distance_m", self.min_distance_m)?;
        let (lo, hi) = self.d_in_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::param(
                "d_in_range",
                format!("need 0 < min <= max, got ({lo}, {hi})"),
            ));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::param("shadowing_sigma_db", "must be non-negative"));
        }
        Ok(())
    }

    fn penetration_loss_db(&self, p: Penetration) -> f64 {
        match p {
            Penetration::Wall => self.wall_loss_db,
            Penetration::Window => self.window_loss_db,
        }
    }
}

const LTE_INTERCEPT_DB: f64 = 38.46;
const LTE_D_IN_SLOPE_DB: f64 = 20.0;
const LTE_DISTANCE_SLOPE_DB: f64 = 37.6;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// A path-loss value and whether the distance had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub loss_db: f64,
    pub clamped: bool,
}

impl PathLoss {
    pub fn gain(&self) -> f64 {
        db_to_linear(-self.loss_db)
    }
}

/// LTE indoor/outdoor path loss in dB:
/// `38.46 + 20 log10(d_in) + 37.6 log10(d) + L_p + L_s`.
///
/// Distances below 1 m are clamped to 1 m and flagged.
pub fn path_loss_lte(d: f64, d_in: f64, penetration: Penetration, shadow_db: f64) -> PathLoss {
    lte_loss(d, 1.0, d_in, penetration.loss_db(), shadow_db)
}

fn lte_loss(d: f64, min_distance: f64, d_in: f64, penetration_db: f64, shadow_db: f64) -> PathLoss {
    let clamped = d < min_distance;
    let d = d.max(min_distance);
    PathLoss {
        loss_db: LTE_INTERCEPT_DB
            + LTE_D_IN_SLOPE_DB * d_in.log10()
            + LTE_DISTANCE_SLOPE_DB * d.log10()
            + penetration_db
            + shadow_db,
        clamped,
    }
}

/// Average channel power `L0 · d^-alpha`.
pub fn avg_power_law(d: f64, l0: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("power-law gain needs d > 0, got {d}")));
    }
    Ok(l0 * d.powf(-alpha))
}

/// `n_prbs` independent Rayleigh block fades: exponential power gains with
/// mean `mean_gain`, one per PRB.
pub fn sample_fading<R: Rng + ?Sized>(mean_gain: f64, n_prbs: usize, rng: &mut R) -> Vec<f64> {
    (0..n_prbs)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            mean_gain * e
        })
        .collect()
}

/// Thermal noise power per PRB in watts.
pub fn noise_power(cfg: &PropagationConfig) -> f64 {
    dbm_to_watts(
        cfg.noise_psd_dbm_per_hz + linear_to_db(cfg.prb_bandwidth_hz) + cfg.noise_figure_db,
    )
}

/// Dense AP × user matrix of per-link values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMatrix {
    aps: usize,
    users: usize,
    data: Vec<f64>,
}

impl LinkMatrix {
    pub fn from_fn(aps: usize, users: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(aps * users);
        for l in 0..aps {
            for k in 0..users {
                data.push(f(l, k));
            }
        }
        LinkMatrix { aps, users, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let users = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != users) {
            return Err(Error::param("rows", "ragged link matrix"));
        }
        Ok(LinkMatrix {
            aps: rows.len(),
            users,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn aps(&self) -> usize {
        self.aps
    }

    pub fn users(&self) -> usize {
        self.users
    }

    #[inline]
    pub fn get(&self, ap: usize, user: usize) -> f64 {
        self.data[ap * self.users + user]
    }

    pub fn row(&self, ap: usize) -> &[f64] {
        &self.data[ap * self.users..(ap + 1) * self.users]
    }

    pub fn scaled(&self, c: f64) -> Self {
        LinkMatrix {
            aps: self.aps,
            users: self.users,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }
}

/// Large-scale gains of every link of one drop.
#[derive(Debug, Clone)]
pub struct LinkBudget {
    /// Average channel power gain per (AP, user), linear.
    pub avg_power: LinkMatrix,
    /// Links whose distance was clamped to the minimum distance.
    pub clamped_links: usize,
}

/// Draw the per-link large-scale gains of a drop.
///
/// Under [`CarrierModel::LteIndoor`] each link gets its own `d_in`, a wall
/// or a window with equal probability, and a log-normal shadow, all held for
/// the whole drop. The power-law model consumes no randomness.
pub fn draw_link_budget<R: Rng + ?Sized>(
    cfg: &PropagationConfig,
    real: &NetworkRealization,
    rng: &mut R,
) -> Result<LinkBudget> {
    cfg.validate()?;
    let mut clamped_links = 0;
    let antenna = db_to_linear(cfg.antenna_gain_db);
    let (d_lo, d_hi) = cfg.d_in_range;
    let avg_power = LinkMatrix::from_fn(real.ap_count(), real.user_count(), |l, k| {
        let d = real.aps[l].distance(real.users[k]);
        if d < cfg.min_distance_m {
            clamped_links += 1;
        }
        let gain = match cfg.model {
            CarrierModel::PowerLaw => cfg.l0 * d.max(cfg.min_distance_m).powf(-cfg.alpha),
            CarrierModel::LteIndoor => {
                let d_in = if d_hi > d_lo {
                    rng.random_range(d_lo..d_hi)
                } else {
                    d_lo
                };
                let pen = if rng.random_bool(0.5) {
                    Penetration::Wall
                } else {
                    Penetration::Window
                };
                let z: f64 = StandardNormal.sample(rng);
                let shadow = cfg.shadowing_sigma_db * z;
                lte_loss(d, cfg.min_distance_m, d_in, cfg.penetration_loss_db(pen), shadow).gain()
            }
        };
        gain * antenna
    });
    Ok(LinkBudget {
        avg_power,
        clamped_links,
    })
}

/// Average and instantaneous channel state of one drop.
#[derive(Debug, Clone)]
pub struct ChannelState {
    avg: LinkMatrix,
    prbs: usize,
    inst: Vec<f64>,
    noise: f64,
}

impl ChannelState {
    /// Draw an independent Rayleigh fade per (AP, user, PRB) around `avg`.
    pub fn draw<R: Rng + ?Sized>(avg: LinkMatrix, prbs: usize, noise: f64, rng: &mut R) -> Self {
        let mut inst = Vec::with_capacity(avg.aps() * avg.users() * prbs);
        for l in 0..avg.aps() {
            for &h in avg.row(l) {
                for _ in 0..prbs {
                    let e: f64 = Exp1.sample(rng);
                    inst.push(h * e);
                }
            }
        }
        ChannelState {
            avg,
            prbs,
            inst,
            noise,
        }
    }

    /// Build from explicit gains `inst[l][k][n]`.
    pub fn from_gains(avg: LinkMatrix, inst: Vec<Vec<Vec<f64>>>, noise: f64) -> Result<Self> {
        let prbs = inst.first().and_then(|r| r.first()).map_or(0, Vec::len);
        if inst.len() != avg.aps()
            || inst
                .iter()
                .any(|r| r.len() != avg.users() || r.iter().any(|g| g.len() != prbs))
        {
            return Err(Error::param("inst", "gain tensor does not match link matrix"));
        }
        Ok(ChannelState {
            avg,
            prbs,
            inst: inst.into_iter().flatten().flatten().collect(),
            noise,
        })
    }

    pub fn avg_power(&self) -> &LinkMatrix {
        &self.avg
    }

    pub fn prb_count(&self) -> usize {
        self.prbs
    }

    /// Noise power per PRB, watts.
    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Instantaneous gains of link (ap, user) over all PRBs.
    #[inline]
    pub fn link_gains(&self, ap: usize, user: usize) -> &[f64] {
        let start = (ap * self.avg.users() + user) * self.prbs;
        &self.inst[start..start + self.prbs]
    }

    #[inline]
    pub fn inst_gain(&self, ap: usize, user: usize, prb: usize) -> f64 {
        self.inst[(ap * self.avg.users() + user) * self.prbs + prb]
    }
}
