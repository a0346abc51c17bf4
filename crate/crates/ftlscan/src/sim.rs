//! Discretized simulation of the search dynamics under any policy, the
//! excursion-based construction of the driftless leader SDE, and the
//! empirical probes for its pathwise identities and martingales.
//!
//! The observed signal evolves as `dY = dW + mu 1{J = j*} dt`; the observed
//! box's coordinate picks up `dX_J = dY - mu/2 dt` and the others stay
//! frozen. Euler-Maruyama is applied to `X` directly and the posterior is
//! recovered algebraically each step, which keeps the probability vector on
//! the simplex by construction. The search stops (inclusively) once
//! `max_j pi_j >= 1 - eps`.
//!
//! Replicates derive their random streams from a base seed and the
//! replicate index through ChaCha streams, so estimates are reproducible
//! and independent of the parallel schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::model::{ftl_select, posterior_from_loglik, Posterior, ProblemConfig};

/// Hard cap on steps per simulated search.
pub const MAX_STEPS: u64 = 1_000_000_000;

/// Search policy: which box to observe given the current coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Policy {
    /// Observe the current leader (largest tied index on ties).
    Ftl,
    /// Observe box 2 until its coordinate reaches the leader's initial
    /// level, then follow the leader. The threshold fires on its own when
    /// the coordinate falls to `a_level`.
    StrategyB { a_level: f64 },
    /// Always observe the same box.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, Default)]
struct PolicyState {
    switched: bool,
}

impl Policy {
    fn validate(&self, cfg: &ProblemConfig) -> Result<()> {
        match *self {
            Policy::Ftl => Ok(()),
            Policy::StrategyB { a_level } => {
                if cfg.n_boxes() != 3 {
                    return Err(Error::Unsupported(
                        "strategy B policy needs exactly 3 boxes".into(),
                    ));
                }
                if !a_level.is_finite() {
                    return Err(Error::InvalidArgument("a_level must be finite".into()));
                }
                Ok(())
            }
            Policy::Fixed(j) => {
                if j >= cfg.n_boxes() {
                    return Err(Error::InvalidArgument(format!(
                        "fixed policy index {j} out of range for {} boxes",
                        cfg.n_boxes()
                    )));
                }
                Ok(())
            }
        }
    }

    fn decide(&self, x: &[f64], state: &mut PolicyState) -> usize {
        match *self {
            Policy::Ftl => ftl_select(x),
            Policy::Fixed(j) => j,
            Policy::StrategyB { .. } => {
                // Box 1 is unobserved before the switch, so x[0] still
                // holds the initial leader level.
                if !state.switched && x[1] < x[0] {
                    1
                } else {
                    state.switched = true;
                    ftl_select(x)
                }
            }
        }
    }
}

/// One simulated search.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub t_stop: f64,
    pub declared_index: usize,
    pub true_index: usize,
    pub correct: bool,
    pub n_steps: u64,
    pub terminal: Posterior,
}

/// One sampled path row: state at time `t` and the decision taken there.
#[derive(Debug, Clone, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub w: f64,
    pub x: Vec<f64>,
    pub j: usize,
    pub pi: Vec<f64>,
}

/// Leader index (largest tied) and `sum_i exp(mu (x_i - x_leader))`.
/// The leading posterior probability is the reciprocal of the sum.
fn leader_and_expsum(x: &[f64], mu: f64) -> (usize, f64) {
    let lead = ftl_select(x);
    let top = x[lead];
    let mut sum = 0.0;
    for (i, &v) in x.iter().enumerate() {
        sum += if i == lead { 1.0 } else { (mu * (v - top)).exp() };
    }
    (lead, sum)
}

fn posterior_from_state(x: &[f64], mu: f64) -> Posterior {
    posterior_from_loglik(x, mu).expect("finite simulation state")
}

/// A single search state machine fed one standard normal per step.
struct Machine {
    x: Vec<f64>,
    pstate: PolicyState,
    n_steps: u64,
    done: bool,
    declared: usize,
}

impl Machine {
    fn new(cfg: &ProblemConfig) -> Self {
        let x = cfg.x0().to_vec();
        let (lead, sum) = leader_and_expsum(&x, cfg.mu());
        let done = 1.0 / sum >= 1.0 - cfg.epsilon();
        Machine {
            x,
            pstate: PolicyState::default(),
            n_steps: 0,
            done,
            declared: lead,
        }
    }

    /// Advances one Euler step with driving normal `xi`; returns the box
    /// observed. No-op once stopped.
    fn step(
        &mut self,
        cfg: &ProblemConfig,
        policy: &Policy,
        true_index: usize,
        dt: f64,
        sqrt_dt: f64,
        xi: f64,
    ) -> Option<usize> {
        if self.done {
            return None;
        }
        let mu = cfg.mu();
        let j = policy.decide(&self.x, &mut self.pstate);
        let dy = sqrt_dt * xi + if j == true_index { mu * dt } else { 0.0 };
        self.x[j] += dy - 0.5 * mu * dt;
        self.n_steps += 1;
        let (lead, sum) = leader_and_expsum(&self.x, mu);
        if 1.0 / sum >= 1.0 - cfg.epsilon() {
            self.done = true;
            self.declared = lead;
        }
        Some(j)
    }

    fn result(&self, cfg: &ProblemConfig, dt: f64, true_index: usize) -> SimResult {
        SimResult {
            t_stop: self.n_steps as f64 * dt,
            declared_index: self.declared,
            true_index,
            correct: self.declared == true_index,
            n_steps: self.n_steps,
            terminal: posterior_from_state(&self.x, cfg.mu()),
        }
    }
}

fn sample_true_index(prior: &Posterior, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in prior.probs().iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    prior.len() - 1
}

fn validate_sim_args(cfg: &ProblemConfig, policy: &Policy, dt: f64) -> Result<()> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    policy.validate(cfg)
}

fn run_search(
    cfg: &ProblemConfig,
    policy: &Policy,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SimResult> {
    let prior = posterior_from_loglik(cfg.x0(), cfg.mu())?;
    let true_index = sample_true_index(&prior, rng);
    let sqrt_dt = dt.sqrt();
    let mut m = Machine::new(cfg);
    while !m.done {
        if m.n_steps >= MAX_STEPS {
            return Err(Error::NonConvergence { max_steps: MAX_STEPS });
        }
        let xi: f64 = rng.sample(StandardNormal);
        m.step(cfg, policy, true_index, dt, sqrt_dt, xi);
    }
    Ok(m.result(cfg, dt, true_index))
}

/// Simulates one search to the stopping threshold. Deterministic in
/// `(seed, dt, cfg, policy)`.
pub fn simulate_search(
    cfg: &ProblemConfig,
    policy: &Policy,
    dt: f64,
    seed: u64,
) -> Result<SimResult> {
    validate_sim_args(cfg, policy, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_search(cfg, policy, dt, &mut rng)
}

/// Like [`simulate_search`] but records every `record_every`-th step
/// (plus the initial and final states) for path dumps.
pub fn simulate_search_with_path(
    cfg: &ProblemConfig,
    policy: &Policy,
    dt: f64,
    seed: u64,
    record_every: usize,
) -> Result<(SimResult, Vec<PathPoint>)> {
    validate_sim_args(cfg, policy, dt)?;
    if record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = posterior_from_loglik(cfg.x0(), cfg.mu())?;
    let true_index = sample_true_index(&prior, &mut rng);
    let sqrt_dt = dt.sqrt();
    let mu = cfg.mu();
    let mut m = Machine::new(cfg);
    let mut w = 0.0;
    let mut path = Vec::new();
    let record = |m: &Machine, w: f64, path: &mut Vec<PathPoint>| {
        let mut probe_state = m.pstate;
        let j = policy.decide(&m.x, &mut probe_state);
        path.push(PathPoint {
            t: m.n_steps as f64 * dt,
            w,
            x: m.x.clone(),
            j,
            pi: posterior_from_state(&m.x, mu).probs().to_vec(),
        });
    };
    record(&m, w, &mut path);
    while !m.done {
        if m.n_steps >= MAX_STEPS {
            return Err(Error::NonConvergence { max_steps: MAX_STEPS });
        }
        let xi: f64 = rng.sample(StandardNormal);
        w += sqrt_dt * xi;
        m.step(cfg, policy, true_index, dt, sqrt_dt, xi);
        if m.done || (m.n_steps as usize).is_multiple_of(record_every) {
            record(&m, w, &mut path);
        }
    }
    Ok((m.result(cfg, dt, true_index), path))
}

/// Monte Carlo mean stopping time over independent replicates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanTimeEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_reps: usize,
}

fn summarize(times: &[f64]) -> MeanTimeEstimate {
    let n = times.len();
    let mean = times.iter().sum::<f64>() / n as f64;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n as f64 - 1.0);
    MeanTimeEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n_reps: n,
    }
}

fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn estimate_impl(
    cfg: &ProblemConfig,
    policy: &Policy,
    dt: f64,
    n_reps: usize,
    seed: u64,
    parallel: bool,
) -> Result<MeanTimeEstimate> {
    validate_sim_args(cfg, policy, dt)?;
    if n_reps < 2 {
        return Err(Error::InvalidArgument("need at least 2 replicates".into()));
    }
    let runs = map_indexed(n_reps, parallel, |i| {
        run_search(cfg, policy, dt, &mut rep_rng(seed, i)).map(|r| r.t_stop)
    });
    let times = runs.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&times))
}

/// Mean stopping time with standard error; replicate `i` runs on ChaCha
/// stream `i` of `seed`, so the result does not depend on thread count.
pub fn estimate_mean_time(
    cfg: &ProblemConfig,
    policy: &Policy,
    dt: f64,
    n_reps: usize,
    seed: u64,
) -> Result<MeanTimeEstimate> {
    estimate_impl(cfg, policy, dt, n_reps, seed, true)
}

/// Sequential twin of [`estimate_mean_time`]; bitwise-identical results.
pub fn estimate_mean_time_seq(
    cfg: &ProblemConfig,
    policy: &Policy,
    dt: f64,
    n_reps: usize,
    seed: u64,
) -> Result<MeanTimeEstimate> {
    estimate_impl(cfg, policy, dt, n_reps, seed, false)
}

/// Coupled coarse/fine discretization study for the hitting-time bias.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DtStudy {
    pub dt_fine: f64,
    pub dt_coarse: f64,
    pub fine: MeanTimeEstimate,
    pub coarse: MeanTimeEstimate,
    /// Mean and standard error of the per-replicate difference
    /// `t_coarse - t_fine` (common random numbers).
    pub diff_mean: f64,
    pub diff_se: f64,
}

/// Runs each replicate at `dt_fine` and at `dt_fine * coarsen`
/// simultaneously from the same underlying normals (the coarse machine
/// consumes block sums), giving a low-variance estimate of the
/// discretization bias difference.
pub fn dt_halving_study(
    cfg: &ProblemConfig,
    policy: &Policy,
    dt_fine: f64,
    coarsen: usize,
    n_reps: usize,
    seed: u64,
) -> Result<DtStudy> {
    validate_sim_args(cfg, policy, dt_fine)?;
    if coarsen < 2 {
        return Err(Error::InvalidArgument("coarsen factor must be >= 2".into()));
    }
    if n_reps < 2 {
        return Err(Error::InvalidArgument("need at least 2 replicates".into()));
    }
    let dt_coarse = dt_fine * coarsen as f64;
    let sqrt_f = dt_fine.sqrt();
    let sqrt_c = dt_coarse.sqrt();
    let norm = (coarsen as f64).sqrt();

    let runs = map_indexed(n_reps, true, |i| -> Result<(f64, f64)> {
        let mut rng = rep_rng(seed, i);
        let prior = posterior_from_loglik(cfg.x0(), cfg.mu())?;
        let true_index = sample_true_index(&prior, &mut rng);
        let mut fine = Machine::new(cfg);
        let mut coarse = Machine::new(cfg);
        let mut acc = 0.0;
        let mut k = 0;
        while !(fine.done && coarse.done) {
            if fine.n_steps >= MAX_STEPS || coarse.n_steps >= MAX_STEPS {
                return Err(Error::NonConvergence { max_steps: MAX_STEPS });
            }
            let xi: f64 = rng.sample(StandardNormal);
            fine.step(cfg, policy, true_index, dt_fine, sqrt_f, xi);
            acc += xi;
            k += 1;
            if k == coarsen {
                coarse.step(cfg, policy, true_index, dt_coarse, sqrt_c, acc / norm);
                acc = 0.0;
                k = 0;
            }
        }
        Ok((
            fine.n_steps as f64 * dt_fine,
            coarse.n_steps as f64 * dt_coarse,
        ))
    });
    let pairs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let fine_times: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let coarse_times: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diffs: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let diff = summarize(&diffs);
    Ok(DtStudy {
        dt_fine,
        dt_coarse,
        fine: summarize(&fine_times),
        coarse: summarize(&coarse_times),
        diff_mean: diff.mean,
        diff_se: diff.std_error,
    })
}

/// Posterior vector at `t_target` (or the stopping time, if earlier) for
/// one replicate stream.
fn posterior_at(
    cfg: &ProblemConfig,
    policy: &Policy,
    dt: f64,
    cap_steps: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let prior = posterior_from_loglik(cfg.x0(), cfg.mu())?;
    let true_index = sample_true_index(&prior, rng);
    let sqrt_dt = dt.sqrt();
    let mut m = Machine::new(cfg);
    while !m.done && m.n_steps < cap_steps {
        let xi: f64 = rng.sample(StandardNormal);
        m.step(cfg, policy, true_index, dt, sqrt_dt, xi);
    }
    Ok(posterior_from_state(&m.x, cfg.mu()).probs().to_vec())
}

/// Mean with standard error of a simulated quantity at a fixed time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MartingaleStat {
    pub t: f64,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Estimates `E[pi_j(t ^ T)]` per box under the given policy. The stopped
/// posterior is a martingale, so each mean should match `pi_j(0)`.
pub fn pi_martingale_probe(
    cfg: &ProblemConfig,
    policy: &Policy,
    t: f64,
    dt: f64,
    n_reps: usize,
    seed: u64,
) -> Result<Vec<MartingaleStat>> {
    validate_sim_args(cfg, policy, dt)?;
    if t.is_nan() || t <= 0.0 || n_reps < 2 {
        return Err(Error::InvalidArgument(
            "need t > 0 and at least 2 replicates".into(),
        ));
    }
    let cap = (t / dt).round().max(1.0) as u64;
    let runs = map_indexed(n_reps, true, |i| {
        posterior_at(cfg, policy, dt, cap, &mut rep_rng(seed, i))
    });
    let posts = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let n_boxes = cfg.n_boxes();
    let mut out = Vec::with_capacity(n_boxes);
    for j in 0..n_boxes {
        let col: Vec<f64> = posts.iter().map(|p| p[j]).collect();
        let s = summarize(&col);
        out.push(MartingaleStat {
            t,
            mean: s.mean,
            se: s.std_error,
            n: s.n_reps,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Driftless construction: excursions of W - min W with uniform labels
// ---------------------------------------------------------------------------

/// Label assignment of one excursion above the running minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Excursion {
    /// Grid index at which the excursion first rises from the minimum.
    pub start: usize,
    pub label: usize,
}

/// Discrete pathwise realization of the driftless leader SDE, built from a
/// single driving Brownian path: each excursion of `W - min W` above zero
/// is handed to one uniformly chosen coordinate, while every coordinate
/// tracks `min W / N` at the bottom.
#[derive(Debug, Clone, Serialize)]
pub struct PathBundle {
    pub n_boxes: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    /// `x[j][i]` is coordinate `j` at grid index `i`.
    pub x: Vec<Vec<f64>>,
    pub excursions: Vec<Excursion>,
}

/// Core excursion walk shared by the bundle constructor and the streaming
/// martingale probe: one dynamics implementation, two consumers.
fn walk_excursions<F>(n_boxes: usize, steps: usize, dt: f64, rng: &mut ChaCha8Rng, mut visit: F)
where
    F: FnMut(usize, f64, f64, Option<usize>, bool),
{
    let sqrt_dt = dt.sqrt();
    let mut w = 0.0f64;
    let mut min_w = 0.0f64;
    let mut active: Option<usize> = None;
    visit(0, w, min_w, None, false);
    for i in 1..=steps {
        let xi: f64 = rng.sample(StandardNormal);
        w += sqrt_dt * xi;
        let mut fresh = false;
        if w <= min_w {
            min_w = w;
            active = None;
        } else if active.is_none() {
            active = Some(rng.random_range(0..n_boxes));
            fresh = true;
        }
        visit(i, w, min_w, active, fresh);
    }
}

/// Builds one driftless path bundle on a uniform grid over `[0, horizon]`.
pub fn build_driftless_paths(
    n_boxes: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<PathBundle> {
    if n_boxes == 0 {
        return Err(Error::InvalidArgument("need at least one box".into()));
    }
    if !horizon.is_finite() || horizon <= 0.0 || !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidArgument(
            "horizon and dt must be positive and finite".into(),
        ));
    }
    let steps = (horizon / dt).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n_boxes as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut w_path = Vec::with_capacity(steps + 1);
    let mut x = vec![Vec::with_capacity(steps + 1); n_boxes];
    let mut excursions = Vec::new();
    walk_excursions(n_boxes, steps, dt, &mut rng, |i, w, min_w, active, fresh| {
        times.push(i as f64 * dt);
        w_path.push(w);
        let bottom = min_w / nf;
        for (j, xj) in x.iter_mut().enumerate() {
            let excess = if active == Some(j) { w - min_w } else { 0.0 };
            xj.push(bottom + excess);
        }
        if fresh {
            excursions.push(Excursion {
                start: i,
                label: active.expect("fresh excursion has a label"),
            });
        }
    });
    Ok(PathBundle {
        n_boxes,
        dt,
        times,
        w: w_path,
        x,
        excursions,
    })
}

/// Pathwise checks of the driftless construction on one bundle.
///
/// 1. `sum_j X_j = W` at every grid point;
/// 2. every running minimum equals `min W / N`;
/// 3. at most one coordinate sits above the common minimum;
/// 4. the leader's excess equals `W - min W`.
///
/// Statements 2-4 are granted one grid step of slack (the driver's own
/// increment) at each time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathIdentityReport {
    pub max_sum_err: f64,
    pub max_running_min_err: f64,
    pub multi_leader_violations: usize,
    pub max_excess_err: f64,
    pub sum_pass: bool,
    pub running_min_pass: bool,
    pub single_leader_pass: bool,
    pub excess_pass: bool,
}

impl PathIdentityReport {
    pub fn pass(&self) -> bool {
        self.sum_pass && self.running_min_pass && self.single_leader_pass && self.excess_pass
    }
}

pub fn path_identity_probe(bundle: &PathBundle) -> PathIdentityReport {
    let nf = bundle.n_boxes as f64;
    let n_grid = bundle.w.len();
    let mut min_w = f64::INFINITY;
    let mut run_min = vec![f64::INFINITY; bundle.n_boxes];

    let mut max_sum_err = 0.0f64;
    let mut max_min_err = 0.0f64;
    let mut violations = 0usize;
    let mut max_excess_err = 0.0f64;
    let mut min_ok = true;
    let mut excess_ok = true;

    for i in 0..n_grid {
        let w = bundle.w[i];
        min_w = min_w.min(w);
        let step_tol = if i == 0 {
            1e-12
        } else {
            (bundle.w[i] - bundle.w[i - 1]).abs() + 1e-12
        };
        let common = min_w / nf;

        let mut sum = 0.0;
        let mut above = 0usize;
        let mut excess = 0.0;
        for (j, xj) in bundle.x.iter().enumerate() {
            let v = xj[i];
            sum += v;
            run_min[j] = run_min[j].min(v);
            let err = (run_min[j] - common).abs();
            max_min_err = max_min_err.max(err);
            if err > step_tol {
                min_ok = false;
            }
            if v > common + 1e-12 {
                above += 1;
                excess = v - common;
            }
        }
        max_sum_err = max_sum_err.max((sum - w).abs());
        if above > 1 {
            violations += 1;
        }
        if above == 1 {
            let err = (excess - (w - min_w)).abs();
            max_excess_err = max_excess_err.max(err);
            if err > step_tol {
                excess_ok = false;
            }
        }
    }

    PathIdentityReport {
        max_sum_err,
        max_running_min_err: max_min_err,
        multi_leader_violations: violations,
        max_excess_err,
        sum_pass: max_sum_err <= 1e-9,
        running_min_pass: min_ok,
        single_leader_pass: violations == 0,
        excess_pass: excess_ok,
    }
}

/// Streaming estimate of `E[M_t]` over independent bundles, where
/// `M_t = X_k - (N-1)^{-1} sum_{j != k} X_j`; a martingale started at 0
/// for paths from the origin.
pub fn excursion_martingale_probe(
    n_boxes: usize,
    k: usize,
    ts: &[f64],
    dt: f64,
    n_bundles: usize,
    seed: u64,
) -> Result<Vec<MartingaleStat>> {
    if n_boxes < 2 || k >= n_boxes {
        return Err(Error::InvalidArgument(
            "need n_boxes >= 2 and k < n_boxes".into(),
        ));
    }
    if ts.is_empty() || ts.iter().any(|&t| t.is_nan() || t <= 0.0) || dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidArgument(
            "need positive target times and dt".into(),
        ));
    }
    if n_bundles < 2 {
        return Err(Error::InvalidArgument("need at least 2 bundles".into()));
    }
    let targets: Vec<usize> = ts.iter().map(|&t| (t / dt).round().max(1.0) as usize).collect();
    let steps = *targets.iter().max().unwrap();
    let nf = n_boxes as f64;

    let samples = map_indexed(n_bundles, true, |b| {
        let mut rng = rep_rng(seed, b);
        let mut vals = vec![0.0f64; targets.len()];
        walk_excursions(n_boxes, steps, dt, &mut rng, |i, w, min_w, active, _| {
            for (slot, &ti) in targets.iter().enumerate() {
                if i == ti {
                    let e = w - min_w;
                    vals[slot] = match active {
                        Some(j) if j == k => e,
                        Some(_) => -e / (nf - 1.0),
                        None => 0.0,
                    };
                }
            }
        });
        vals
    });

    let mut out = Vec::with_capacity(targets.len());
    for (slot, &t) in ts.iter().enumerate() {
        let col: Vec<f64> = samples.iter().map(|v| v[slot]).collect();
        let s = summarize(&col);
        out.push(MartingaleStat {
            t,
            mean: s.mean,
            se: s.std_error,
            n: s.n_reps,
        });
    }
    Ok(out)
}
