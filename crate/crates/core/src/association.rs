//! Cell association: every user attaches to the AP with the strongest
//! long-term average received power.

use serde::Serialize;

use crate::deployment::{NetworkRealization, Point};
use crate::error::{Error, Result};
use crate::propagation::LinkMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Association {
    serving_ap: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Association {
    /// Build from a serving-AP vector over `ap_count` APs.
    pub fn from_serving(serving_ap: Vec<usize>, ap_count: usize) -> Result<Self> {
        let mut members = vec![Vec::new(); ap_count];
        for (k, &l) in serving_ap.iter().enumerate() {
            if l >= ap_count {
                return Err(Error::param("serving_ap", format!("user {k} served by missing AP {l}")));
            }
            members[l].push(k);
        }
        Ok(Association { serving_ap, members })
    }

    pub fn serving_ap(&self, user: usize) -> usize {
        self.serving_ap[user]
    }

    pub fn serving(&self) -> &[usize] {
        &self.serving_ap
    }

    /// Users served by `ap`, in increasing index order.
    pub fn members(&self, ap: usize) -> &[usize] {
        &self.members[ap]
    }

    pub fn ap_count(&self) -> usize {
        self.members.len()
    }

    pub fn user_count(&self) -> usize {
        self.serving_ap.len()
    }
}

/// Assign each user to the AP maximizing `avg_power[l][k]`; ties go to the
/// lowest AP index.
pub fn associate(avg_power: &LinkMatrix) -> Result<Association> {
    if avg_power.aps() == 0 {
        return Err(Error::NoAccessPoints);
    }
    let serving = (0..avg_power.users())
        .map(|k| {
            let mut best = 0;
            for l in 1..avg_power.aps() {
                if avg_power.get(l, k) > avg_power.get(best, k) {
                    best = l;
                }
            }
            best
        })
        .collect();
    Association::from_serving(serving, avg_power.aps())
}

/// Distance from every user to its serving AP.
pub fn connection_distances(real: &NetworkRealization, assoc: &Association) -> Vec<f64> {
    real.users
        .iter()
        .enumerate()
        .map(|(k, u)| u.distance(real.aps[assoc.serving_ap(k)]))
        .collect()
}

/// Index of the AP closest to `p`, lowest index on ties.
pub fn nearest(aps: &[Point], p: Point) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (l, a) in aps.iter().enumerate() {
        let d = a.distance(p);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((l, d));
        }
    }
    best.map(|(l, _)| l)
}
