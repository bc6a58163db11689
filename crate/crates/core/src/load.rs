//! Per-AP spectrum load estimation from average channel powers.
//!
//! The load of an AP is the (fractional) number of PRBs it needs to meet its
//! users' rate demands. Two estimators are provided: a closed form that
//! spreads the transmit power equally over all `N` PRBs, and the joint
//! power/spectrum optimum
//!
//! ```text
//! minimize  Σ n_k
//! s.t.      n_k B log2(1 + P_k H_k / (n_k σ²)) ≥ R_k,   Σ P_k ≤ P_tot
//! ```
//!
//! found by damped Newton iterations on its stationarity system.

use serde::{Deserialize, Serialize};

use crate::association::Association;
use crate::error::{ensure_positive, Error, Result};
use crate::linalg::gauss_jordan;
use crate::propagation::LinkMatrix;

/// Radio parameters shared by every AP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// PRB bandwidth `B`, Hz.
    pub bandwidth_hz: f64,
    /// Per-AP transmit power budget, W.
    pub p_tot_w: f64,
    /// Noise power per PRB, W.
    pub noise_w: f64,
    /// Number of PRBs `N` in the band.
    pub prbs: usize,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("bandwidth_hz", self.bandwidth_hz)?;
        ensure_positive("p_tot_w", self.p_tot_w)?;
        ensure_positive("noise_w", self.noise_w)?;
        if self.prbs == 0 {
            return Err(Error::param("prbs", "need at least one PRB"));
        }
        Ok(())
    }
}

/// Fractional spectrum and power per member user of one AP.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadEstimate {
    /// Fractional PRB count per member, in member order.
    pub n: Vec<f64>,
    /// Power per member, W.
    pub power: Vec<f64>,
}

impl LoadEstimate {
    /// `N_l = Σ n_k`.
    pub fn total(&self) -> f64 {
        self.n.iter().sum()
    }
}

/// PRBs needed by one user when `P_tot` is spread over all `N` PRBs:
/// `R / (B log2(1 + P_tot H / (N σ²)))`.
pub fn user_load_equal_power(rate: f64, gain: f64, p_tot: f64, prbs: usize, noise: f64, bandwidth: f64) -> f64 {
    rate / (bandwidth * (1.0 + p_tot * gain / (prbs as f64 * noise)).log2())
}

/// Equal-power estimate for the members of one AP. Powers are booked in
/// proportion to each user's share of the load.
pub fn estimate_load_equal_power(demands: &[f64], gains: &[f64], radio: &RadioParams) -> LoadEstimate {
    let n: Vec<f64> = demands
        .iter()
        .zip(gains)
        .map(|(&r, &h)| user_load_equal_power(r, h, radio.p_tot_w, radio.prbs, radio.noise_w, radio.bandwidth_hz))
        .collect();
    let total: f64 = n.iter().sum();
    let power = n
        .iter()
        .map(|&nk| if total > 0.0 { radio.p_tot_w * nk / total } else { 0.0 })
        .collect();
    LoadEstimate { n, power }
}

/// Newton iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 100,
            max_halvings: 40,
        }
    }
}

/// Why Newton gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonFailure {
    /// No spectrum amount can meet the demands with `P_tot`.
    Infeasible,
    SingularJacobian,
    /// Backtracking could not reduce the residual.
    LineSearch,
    MaxIterations,
}

/// Final point of the Newton solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktState {
    /// `[P_1..P_M, n_1..n_M, mu_1..mu_M]` with powers in W and the rate
    /// multipliers in the units of the Lagrangian.
    pub x: Vec<f64>,
    /// Power-constraint multiplier.
    pub mu0: f64,
    /// Max-norm of the (dimensionless) stationarity system.
    pub residual: f64,
    pub iterations: usize,
    pub failure: Option<NewtonFailure>,
}

impl KktState {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }
}

fn phi(s: f64) -> f64 {
    s.ln_1p() - s / (1.0 + s)
}

fn phi_prime(s: f64) -> f64 {
    s / ((1.0 + s) * (1.0 + s))
}

/// Stationarity system of the joint problem in scaled variables
/// `z = [p_k, n_k, m_k]` where `p_k = P_k / P_tot` and `m_k = mu_k B log2(e)`.
///
/// Rows, in order: `1 - m_k φ(s_k)` for every k; `Σ p_k - 1`; for k ≥ 2 the
/// log of the multiplier-ratio condition
/// `m_k g_k / (1 + s_k) = m_1 g_1 / (1 + s_1)`; and the tight rate
/// constraints `(B / R_k) n_k log2(1 + s_k) - 1`. Here `g_k = P_tot H_k / σ²`
/// and `s_k = p_k g_k / n_k` is the per-PRB SNR. `φ(s) = ln(1+s) - s/(1+s)`.
#[derive(Debug, Clone)]
pub struct KktSystem {
    g: Vec<f64>,
    /// `B / R_k`.
    b_over_r: Vec<f64>,
}

impl KktSystem {
    pub fn new(demands: &[f64], gains: &[f64], radio: &RadioParams) -> Self {
        KktSystem {
            g: gains.iter().map(|h| radio.p_tot_w * h / radio.noise_w).collect(),
            b_over_r: demands.iter().map(|r| radio.bandwidth_hz / r).collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.g.len()
    }

    /// Whether some power split can meet every demand: the rate of user k is
    /// bounded by `B p_k g_k log2(e)` as `n_k` grows.
    pub fn feasible(&self) -> bool {
        let need: f64 = self
            .g
            .iter()
            .zip(&self.b_over_r)
            .map(|(g, br)| 1.0 / (br * g * std::f64::consts::LOG2_E))
            .sum();
        need < 1.0
    }

    fn snr(&self, z: &[f64], k: usize) -> f64 {
        let m = self.users();
        z[k] * self.g[k] / z[m + k]
    }

    pub fn residual(&self, z: &[f64]) -> Vec<f64> {
        let m = self.users();
        let mut out = vec![0.0; 3 * m];
        let s: Vec<f64> = (0..m).map(|k| self.snr(z, k)).collect();
        for k in 0..m {
            out[k] = 1.0 - z[2 * m + k] * phi(s[k]);
        }
        out[m] = z[..m].iter().sum::<f64>() - 1.0;
        let anchor = z[2 * m].ln() + self.g[0].ln() - s[0].ln_1p();
        for k in 1..m {
            out[m + k] = z[2 * m + k].ln() + self.g[k].ln() - s[k].ln_1p() - anchor;
        }
        for k in 0..m {
            out[2 * m + k] = self.b_over_r[k] * z[m + k] * s[k].ln_1p() * std::f64::consts::LOG2_E - 1.0;
        }
        out
    }

    /// Analytic Jacobian, row-major `3M × 3M`.
    pub fn jacobian(&self, z: &[f64]) -> Vec<f64> {
        let m = self.users();
        let dim = 3 * m;
        let mut j = vec![0.0; dim * dim];
        let (p, n, mu) = (&z[..m], &z[m..2 * m], &z[2 * m..]);
        let s: Vec<f64> = (0..m).map(|k| self.snr(z, k)).collect();
        for k in 0..m {
            let row = k * dim;
            let dphi = phi_prime(s[k]);
            j[row + k] = -mu[k] * dphi * s[k] / p[k];
            j[row + m + k] = mu[k] * dphi * s[k] / n[k];
            j[row + 2 * m + k] = -phi(s[k]);
        }
        for k in 0..m {
            j[m * dim + k] = 1.0;
        }
        let ratio_terms = |k: usize| {
            (
                -(s[k] / p[k]) / (1.0 + s[k]),
                (s[k] / n[k]) / (1.0 + s[k]),
                1.0 / mu[k],
            )
        };
        let (dp0, dn0, dm0) = ratio_terms(0);
        for k in 1..m {
            let row = (m + k) * dim;
            let (dp, dn, dm) = ratio_terms(k);
            j[row + k] = dp;
            j[row + m + k] = dn;
            j[row + 2 * m + k] = dm;
            j[row] = -dp0;
            j[row + m] = -dn0;
            j[row + 2 * m] = -dm0;
        }
        let ln2 = std::f64::consts::LN_2;
        for k in 0..m {
            let row = (2 * m + k) * dim;
            j[row + k] = self.b_over_r[k] * self.g[k] / ((1.0 + s[k]) * ln2);
            j[row + m + k] = self.b_over_r[k] * phi(s[k]) / ln2;
        }
        j
    }

    /// Start from the equal-power loads with power in proportion to them and
    /// the rate multipliers that zero the spectrum-stationarity rows.
    pub fn initial_point(&self, n_eq: &[f64]) -> Vec<f64> {
        let m = self.users();
        let total: f64 = n_eq.iter().sum();
        let mut z = Vec::with_capacity(3 * m);
        z.extend(n_eq.iter().map(|n| n / total));
        z.extend_from_slice(n_eq);
        for k in 0..m {
            let s = z[k] * self.g[k] / z[m + k];
            z.push(1.0 / phi(s));
        }
        z
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Joint power/spectrum optimum by damped Newton.
///
/// Always returns an estimate: on failure it is the equal-power one and
/// [`KktState::failure`] says why.
pub fn estimate_load_newton(
    demands: &[f64],
    gains: &[f64],
    radio: &RadioParams,
    opts: &NewtonOptions,
) -> Result<(LoadEstimate, KktState)> {
    if demands.is_empty() || demands.len() != gains.len() {
        return Err(Error::param("demands", "need a non-empty member set with one gain per user"));
    }
    ensure_positive("tol", opts.tol)?;
    let eq = estimate_load_equal_power(demands, gains, radio);
    let sys = KktSystem::new(demands, gains, radio);
    let m = sys.users();
    let fail = |z: &[f64], residual: f64, iterations: usize, why: NewtonFailure| {
        let state = KktState {
            x: z.to_vec(),
            mu0: f64::NAN,
            residual,
            iterations,
            failure: Some(why),
        };
        Ok((eq.clone(), state))
    };
    if !sys.feasible() {
        return fail(&[], f64::INFINITY, 0, NewtonFailure::Infeasible);
    }

    let mut z = sys.initial_point(&eq.n);
    let mut g = sys.residual(&z);
    let mut res = max_norm(&g);
    let mut iterations = 0;
    while res > opts.tol {
        if iterations == opts.max_iter {
            return fail(&z, res, iterations, NewtonFailure::MaxIterations);
        }
        iterations += 1;
        let mut jac = sys.jacobian(&z);
        let mut step: Vec<f64> = g.iter().map(|x| -x).collect();
        if gauss_jordan(&mut jac, &mut step).is_none() {
            return fail(&z, res, iterations, NewtonFailure::SingularJacobian);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, d)| a + t * d).collect();
            if trial.iter().all(|&v| v > 0.0 && v.is_finite()) {
                let tg = sys.residual(&trial);
                let tr = max_norm(&tg);
                if tr < res {
                    accepted = Some((trial, tg, tr));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((nz, ng, nr)) => {
                z = nz;
                g = ng;
                res = nr;
            }
            None => return fail(&z, res, iterations, NewtonFailure::LineSearch),
        }
    }

    let c = radio.bandwidth_hz * std::f64::consts::LOG2_E;
    let s0 = sys.snr(&z, 0);
    let mu0 = z[2 * m] * (gains[0] / radio.noise_w) / (1.0 + s0) / c;
    let est = LoadEstimate {
        n: z[m..2 * m].to_vec(),
        power: z[..m].iter().map(|p| p * radio.p_tot_w).collect(),
    };
    let mut x = Vec::with_capacity(3 * m);
    x.extend(&est.power);
    x.extend(&est.n);
    x.extend(z[2 * m..].iter().map(|mu| mu / c));
    Ok((
        est,
        KktState {
            x,
            mu0,
            residual: res,
            iterations,
            failure: None,
        },
    ))
}

/// Which estimator the APs run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadSolver {
    #[default]
    EqualPower,
    Newton,
}

/// Load estimates of every AP of a drop.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DropLoads {
    /// Estimate per AP, members in [`Association::members`] order.
    pub per_ap: Vec<LoadEstimate>,
    /// `N_l` per AP.
    pub loads: Vec<f64>,
    /// APs where Newton failed and the equal-power estimate was used.
    pub fallbacks: usize,
}

/// Estimate the load of every AP from the average gains of its members.
pub fn estimate_drop_loads(
    assoc: &Association,
    avg_power: &LinkMatrix,
    demands: &[f64],
    radio: &RadioParams,
    solver: LoadSolver,
    opts: &NewtonOptions,
) -> Result<DropLoads> {
    radio.validate()?;
    let mut per_ap = Vec::with_capacity(assoc.ap_count());
    let mut fallbacks = 0;
    for l in 0..assoc.ap_count() {
        let members = assoc.members(l);
        let r: Vec<f64> = members.iter().map(|&k| demands[k]).collect();
        let h: Vec<f64> = members.iter().map(|&k| avg_power.get(l, k)).collect();
        let est = match solver {
            _ if members.is_empty() => LoadEstimate::default(),
            LoadSolver::EqualPower => estimate_load_equal_power(&r, &h, radio),
            LoadSolver::Newton => {
                let (est, state) = estimate_load_newton(&r, &h, radio, opts)?;
                if let Some(why) = state.failure {
                    log::debug!("AP {l}: Newton load solve failed ({why:?}), using equal power");
                    fallbacks += 1;
                }
                est
            }
        };
        per_ap.push(est);
    }
    let loads = aggregate_ap_loads(assoc, &per_ap)?;
    Ok(DropLoads {
        per_ap,
        loads,
        fallbacks,
    })
}

/// `N_l = Σ_{k ∈ S_l} n_k` for every AP.
pub fn aggregate_ap_loads(assoc: &Association, per_ap: &[LoadEstimate]) -> Result<Vec<f64>> {
    if per_ap.len() != assoc.ap_count() {
        return Err(Error::param("per_ap", "one estimate per AP required"));
    }
    per_ap
        .iter()
        .enumerate()
        .map(|(l, e)| {
            if e.n.len() != assoc.members(l).len() {
                Err(Error::param("per_ap", format!("AP {l} estimate does not match its members")))
            } else {
                Ok(e.total())
            }
        })
        .collect()
}
