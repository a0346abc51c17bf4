//! Shared test utilities: independent Monte Carlo oracles and small
//! statistics helpers. Nothing here goes through the closed forms or the
//! value recursion being checked.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Aggregated two-barrier exit simulation.
#[derive(Debug, Clone, Copy)]
pub struct McExit {
    pub p_upper: f64,
    pub p_se: f64,
    pub t_upper_mean: f64,
    pub t_upper_se: f64,
    pub t_lower_mean: f64,
    pub t_lower_se: f64,
    pub n_upper: usize,
    pub n_lower: usize,
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Brute-force two-barrier exit oracle: Euler steps on the raw diffusion
/// with Brownian-bridge crossing tests between grid points, so the
/// discrete monitoring bias is O(dt) rather than O(sqrt(dt)).
///
/// Independent of the closed forms: it sees only the SDE parameters.
#[allow(clippy::too_many_arguments)]
pub fn two_barrier_mc(
    x: f64,
    a: f64,
    b: f64,
    lambda: f64,
    sigma2: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> McExit {
    let sigma = sigma2.sqrt();
    let sdt = dt.sqrt() * sigma;
    let drift = lambda * dt;
    // exp(-2 d0 d1 / (sigma2 dt)) < 1e-26 when d0 d1 > 30 sigma2 dt: skip.
    let bridge_skip = 30.0 * sigma2 * dt;

    let results: Vec<(bool, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut pos = x;
            let mut t = 0.0f64;
            loop {
                let z: f64 = rng.sample(StandardNormal);
                let next = pos + drift + sdt * z;
                if next >= a {
                    return (true, t + dt);
                }
                if next <= b {
                    return (false, t + dt);
                }
                let du = (a - pos) * (a - next);
                let dl = (pos - b) * (next - b);
                if du < bridge_skip || dl < bridge_skip {
                    let pu = if du < bridge_skip {
                        (-2.0 * du / (sigma2 * dt)).exp()
                    } else {
                        0.0
                    };
                    let pl = if dl < bridge_skip {
                        (-2.0 * dl / (sigma2 * dt)).exp()
                    } else {
                        0.0
                    };
                    if pu > 0.0 || pl > 0.0 {
                        let u: f64 = rng.random();
                        if u < pu {
                            return (true, t + 0.5 * dt);
                        }
                        if u < pu + pl {
                            return (false, t + 0.5 * dt);
                        }
                    }
                }
                pos = next;
                t += dt;
            }
        })
        .collect();

    let upper: Vec<f64> = results.iter().filter(|r| r.0).map(|r| r.1).collect();
    let lower: Vec<f64> = results.iter().filter(|r| !r.0).map(|r| r.1).collect();
    let n = n_paths as f64;
    let p = upper.len() as f64 / n;
    let (tu, tu_se) = mean_se(&upper);
    let (tl, tl_se) = mean_se(&lower);
    McExit {
        p_upper: p,
        p_se: (p * (1.0 - p) / n).sqrt(),
        t_upper_mean: tu,
        t_upper_se: tu_se,
        t_lower_mean: tl,
        t_lower_se: tl_se,
        n_upper: upper.len(),
        n_lower: lower.len(),
    }
}
