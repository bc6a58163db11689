//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use hiersim_core::coloring::InterferenceGraph;
use hiersim_core::load::RadioParams;
use hiersim_core::scheduling::LocalChannel;

/// Smallest number of colors that properly colors the expanded graph.
pub fn chromatic_number(g: &InterferenceGraph) -> usize {
    let n = g.node_count();
    if n == 0 {
        return 0;
    }
    let adj: Vec<Vec<usize>> = (0..n).map(|v| g.node_neighbors(v).collect()).collect();
    (1..=n)
        .find(|&k| {
            let mut colors = vec![usize::MAX; n];
            colorable(0, k, &adj, &mut colors)
        })
        .expect("n colors always suffice")
}

fn colorable(v: usize, k: usize, adj: &[Vec<usize>], colors: &mut [usize]) -> bool {
    if v == adj.len() {
        return true;
    }
    for c in 0..k {
        if adj[v].iter().all(|&u| colors[u] != c) {
            colors[v] = c;
            if colorable(v + 1, k, adj, colors) {
                return true;
            }
        }
    }
    colors[v] = usize::MAX;
    false
}

/// Fewest PRBs with which one user of gain `h` reaches `rate` using the
/// fraction `p` of the AP power: the root of `n B log2(1 + p g / n) = R`.
pub fn min_prbs_for_share(rate: f64, h: f64, p: f64, radio: &RadioParams) -> f64 {
    let g = radio.p_tot_w * h / radio.noise_w;
    let rate_at = |n: f64| n * radio.bandwidth_hz * (p * g / n).ln_1p() / std::f64::consts::LN_2;
    if p <= 0.0 || p * g * radio.bandwidth_hz / std::f64::consts::LN_2 <= rate {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while rate_at(hi) < rate {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Minimum of `Σ n_k` over power splits, by grid search on the simplex with
/// repeated local refinement around the incumbent.
pub fn min_total_load_grid(demands: &[f64], gains: &[f64], radio: &RadioParams) -> f64 {
    let m = demands.len();
    let total = |p: &[f64]| -> f64 {
        (0..m).map(|k| min_prbs_for_share(demands[k], gains[k], p[k], radio)).sum()
    };
    match m {
        1 => total(&[1.0]),
        2 => {
            let f = |x: f64| total(&[x, 1.0 - x]);
            let (mut best, mut step) = grid_1d(&f, 0.0, 1.0, 400);
            for _ in 0..30 {
                (best, step) = grid_1d(&f, (best - step).max(0.0), (best + step).min(1.0), 40);
            }
            f(best)
        }
        3 => {
            let f = |x: f64, y: f64| {
                if x + y >= 1.0 {
                    f64::INFINITY
                } else {
                    total(&[x, y, 1.0 - x - y])
                }
            };
            let mut best = (1.0 / 3.0, 1.0 / 3.0);
            let mut best_v = f(best.0, best.1);
            let mut half = 0.5;
            let steps = 30;
            for _ in 0..25 {
                let (cx, cy) = best;
                for i in 0..=steps {
                    for j in 0..=steps {
                        let x = (cx - half + 2.0 * half * i as f64 / steps as f64).clamp(0.0, 1.0);
                        let y = (cy - half + 2.0 * half * j as f64 / steps as f64).clamp(0.0, 1.0);
                        let v = f(x, y);
                        if v < best_v {
                            best_v = v;
                            best = (x, y);
                        }
                    }
                }
                half *= 0.3;
            }
            best_v
        }
        _ => unimplemented!("oracle covers at most three users"),
    }
}

fn grid_1d(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    let step = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|i| lo + step * i as f64)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    (best, step.max(f64::EPSILON))
}

/// Best min normalized rate over every assignment of whole PRBs.
pub fn exhaustive_maxmin(ch: &LocalChannel) -> f64 {
    let (m, n) = (ch.users(), ch.prbs());
    let mut best = 0.0f64;
    let mut owner = vec![0usize; n];
    loop {
        let mut rate = vec![0.0; m];
        for (j, &k) in owner.iter().enumerate() {
            rate[k] += ch.prb_rate(k, j);
        }
        let value = (0..m).map(|k| rate[k] / ch.demands[k]).fold(f64::INFINITY, f64::min);
        best = best.max(value);
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            owner[j] += 1;
            if owner[j] < m {
                break;
            }
            owner[j] = 0;
            j += 1;
        }
    }
}
