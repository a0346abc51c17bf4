//! Exact expected search time of the follow-the-leader policy.
//!
//! With the initial coordinates sorted `x_1 >= ... >= x_N`, the FTL search
//! decomposes into stages: while `n` coordinates share the running minimum
//! `y in [x_{n+1}, x_n]`, the value is
//!
//! ```text
//! f(s, y) = A_n(y) + B_n(y) p(s, y) + (2s/mu) (1 - 2 p(s, y)),
//! p(s, y) = e^{mu s} / (e^{mu s} + K_n(y)),   K_n(y) = n - 1 + b_n e^{-mu y},
//! ```
//!
//! where `s` is the leader's excess over the minimum and
//! `b_n = sum_{i>n} e^{mu x_i}`. `B_n` solves a first-order linear ODE in
//! `y`; `A_n` follows algebraically from the stopping boundary
//! `f(q_n(y), y) = 0`. Stages chain through the boundary condition at
//! `y = x_{n+1}`, and the recursion bottoms out at the all-tied stage whose
//! value is the Posner-Rumsey constant.
//!
//! The per-stage ODE is integrated with a fixed-step classical RK4 sweep,
//! refined by step-halving until the stage value stabilizes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_threshold, posterior_from_loglik, ProblemConfig};

/// Fixed-step integration controls for the stage ODE.
#[derive(Debug, Clone)]
pub struct OdeOptions {
    /// Base step count per unit of stage length.
    pub steps_per_unit: f64,
    /// Lower bound on the step count of the first sweep.
    pub min_steps: usize,
    /// Step-halving stops once successive stage values differ by less.
    pub v_top_tol: f64,
    /// Hard cap on halvings.
    pub max_refinements: u32,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            steps_per_unit: 4000.0,
            min_steps: 2000,
            v_top_tol: 1e-10,
            max_refinements: 10,
        }
    }
}

/// Numerical solution of one stage of the recursion.
#[derive(Debug, Clone, Serialize)]
pub struct StageSolution {
    /// Number of coordinates tied at the running minimum.
    pub n: usize,
    pub y_lo: f64,
    pub y_hi: f64,
    /// `b_n = sum_{i>n} e^{mu x_i}`.
    #[serde(skip)]
    pub b_n: f64,
    #[serde(skip)]
    pub y_grid: Vec<f64>,
    #[serde(skip)]
    pub b_vals: Vec<f64>,
    #[serde(skip)]
    pub a_vals: Vec<f64>,
    /// Stage value `V_n` at `y_hi`.
    pub v_top: f64,
}

/// Expected FTL search time together with the per-stage solutions.
#[derive(Debug, Clone, Serialize)]
pub struct ValueResult {
    pub value: f64,
    pub stages: Vec<StageSolution>,
    #[serde(skip)]
    pub config: ProblemConfig,
}

/// Posner-Rumsey value: expected FTL time from the uniform tie of `N`
/// boxes,
///
/// ```text
/// M_PR = (2/mu^2) [ (N-2)/(N-1) (N p0 - 1) + (2 p0 - 1) log((1-eps)/(eps/(N-1))) ]
/// ```
///
/// with `p0 = 1 - eps`.
pub fn mpr_value(n_boxes: usize, mu: f64, epsilon: f64) -> Result<f64> {
    if n_boxes < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two boxes, got {n_boxes}"
        )));
    }
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1/2), got {epsilon}"
        )));
    }
    let n = n_boxes as f64;
    let p0 = 1.0 - epsilon;
    let logit = ((1.0 - epsilon) / (epsilon / (n - 1.0))).ln();
    Ok(2.0 / (mu * mu) * ((n - 2.0) / (n - 1.0) * (n * p0 - 1.0) + (2.0 * p0 - 1.0) * logit))
}

/// `K_n(y) = n - 1 + b_n e^{-mu y}`; strictly decreasing in `y` for
/// `b_n > 0`.
pub fn k_fun(n: usize, b_n: f64, mu: f64, y: f64) -> f64 {
    (n as f64) - 1.0 + b_n * (-mu * y).exp()
}

/// Lead gap at which the success criterion holds:
/// `q_n(y) = log((1-eps) K_n(y) / eps) / mu`.
pub fn q_fun(n: usize, b_n: f64, mu: f64, epsilon: f64, y: f64) -> f64 {
    ((1.0 - epsilon) * k_fun(n, b_n, mu, y) / epsilon).ln() / mu
}

/// Probability that the observed leader is the true box:
/// `p(s, y) = e^{mu s} / (e^{mu s} + K)`.
pub fn p_fun(s: f64, k: f64, mu: f64) -> f64 {
    let es = (mu * s).exp();
    es / (es + k)
}

/// Right-hand side of the stage ODE, solved for `B'`:
///
/// ```text
/// (1 - p0 (1 + K)) B' = (n-1) mu B + 2n (K-1)/mu
///                        - 2 (1 - 2 p0) (K - n + 1)(K + 1) / (mu K)
/// ```
fn stage_rhs(n: usize, b_n: f64, mu: f64, p0: f64, y: f64, b: f64) -> f64 {
    let nf = n as f64;
    let k = k_fun(n, b_n, mu, y);
    let denom = 1.0 - p0 * (1.0 + k);
    let num = (nf - 1.0) * mu * b + 2.0 * nf * (k - 1.0) / mu
        - 2.0 * (1.0 - 2.0 * p0) / (mu * k) * (k - nf + 1.0) * (k + 1.0);
    num / denom
}

fn boundary_b(n: usize, b_n: f64, mu: f64, epsilon: f64, y: f64, v_next: f64) -> f64 {
    let p0 = 1.0 - epsilon;
    let k = k_fun(n, b_n, mu, y);
    let q = q_fun(n, b_n, mu, epsilon, y);
    (1.0 + k) * (mu * v_next - 2.0 * q * (1.0 - 2.0 * epsilon)) / (mu * (1.0 - p0 * (1.0 + k)))
}

fn a_from_b(n: usize, b_n: f64, mu: f64, epsilon: f64, y: f64, b: f64) -> f64 {
    2.0 * q_fun(n, b_n, mu, epsilon, y) * (1.0 - 2.0 * epsilon) / mu - (1.0 - epsilon) * b
}

/// One RK4 sweep from `y_lo` to `y_hi` in `m` steps; returns the grid and
/// `B` values at every accepted step.
#[allow(clippy::too_many_arguments)]
fn rk4_sweep(
    n: usize,
    b_n: f64,
    mu: f64,
    p0: f64,
    y_lo: f64,
    y_hi: f64,
    b0: f64,
    m: usize,
) -> (Vec<f64>, Vec<f64>) {
    let h = (y_hi - y_lo) / m as f64;
    let mut ys = Vec::with_capacity(m + 1);
    let mut bs = Vec::with_capacity(m + 1);
    let mut b = b0;
    ys.push(y_lo);
    bs.push(b);
    for i in 0..m {
        let y = y_lo + i as f64 * h;
        let k1 = stage_rhs(n, b_n, mu, p0, y, b);
        let k2 = stage_rhs(n, b_n, mu, p0, y + 0.5 * h, b + 0.5 * h * k1);
        let k3 = stage_rhs(n, b_n, mu, p0, y + 0.5 * h, b + 0.5 * h * k2);
        let k4 = stage_rhs(n, b_n, mu, p0, y + h, b + h * k3);
        b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let y_next = if i + 1 == m { y_hi } else { y_lo + (i + 1) as f64 * h };
        ys.push(y_next);
        bs.push(b);
    }
    (ys, bs)
}

/// Solves stage `n`: integrates `B_n` upward from `y_lo = x_{n+1}` to
/// `y_hi = x_n`, recovers `A_n` pointwise, and evaluates the stage value
/// `V_n = A_n(y_hi) + B_n(y_hi) / (1 + K_n(y_hi))`.
///
/// `x_tail` holds `(x_{n+1}, ..., x_N)` and `v_boundary` the already-known
/// value `V_{n+1}(x_{n+1}, ...)`.
pub fn solve_stage(
    n: usize,
    x_tail: &[f64],
    v_boundary: f64,
    cfg: &ProblemConfig,
    opts: &OdeOptions,
) -> Result<StageSolution> {
    if n == 0 || x_tail.is_empty() {
        return Err(Error::InvalidArgument(
            "stage needs n >= 1 and a non-empty tail".into(),
        ));
    }
    if n + x_tail.len() != cfg.n_boxes() {
        return Err(Error::InvalidArgument(format!(
            "stage n={n} with tail of {} does not cover {} boxes",
            x_tail.len(),
            cfg.n_boxes()
        )));
    }
    if !v_boundary.is_finite() || v_boundary < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "boundary value must be finite and non-negative, got {v_boundary}"
        )));
    }
    let mu = cfg.mu();
    let epsilon = cfg.epsilon();
    let p0 = 1.0 - epsilon;
    let y_lo = x_tail[0];
    let y_hi = cfg.x0()[n - 1];
    if y_lo > y_hi {
        return Err(Error::InvalidArgument(format!(
            "stage interval inverted: [{y_lo}, {y_hi}]"
        )));
    }
    let b_n: f64 = x_tail.iter().map(|&xi| (mu * xi).exp()).sum();

    // The ODE coefficient 1 - p0 (1 + K) must stay negative; K decreases in
    // y, so checking both endpoints covers the interval.
    for &y in &[y_lo, y_hi] {
        if 1.0 - p0 * (1.0 + k_fun(n, b_n, mu, y)) >= -1e-12 {
            return Err(Error::SingularStage { n, y });
        }
    }

    let b0 = boundary_b(n, b_n, mu, epsilon, y_lo, v_boundary);
    let len = y_hi - y_lo;

    if len < 1e-14 {
        // Zero-length stage: the boundary condition already carries the value.
        let a0 = a_from_b(n, b_n, mu, epsilon, y_lo, b0);
        let v_top = a0 + b0 / (1.0 + k_fun(n, b_n, mu, y_lo));
        return Ok(StageSolution {
            n,
            y_lo,
            y_hi,
            b_n,
            y_grid: vec![y_lo],
            b_vals: vec![b0],
            a_vals: vec![a0],
            v_top,
        });
    }

    let mut m = opts.min_steps.max((len * opts.steps_per_unit).ceil() as usize);
    let (mut ys, mut bs) = rk4_sweep(n, b_n, mu, p0, y_lo, y_hi, b0, m);
    let v_of = |ys: &[f64], bs: &[f64]| -> f64 {
        let y = *ys.last().unwrap();
        let b = *bs.last().unwrap();
        a_from_b(n, b_n, mu, epsilon, y, b) + b / (1.0 + k_fun(n, b_n, mu, y))
    };
    let mut v_top = v_of(&ys, &bs);
    let mut converged = false;
    for _ in 0..opts.max_refinements {
        m *= 2;
        let (ys2, bs2) = rk4_sweep(n, b_n, mu, p0, y_lo, y_hi, b0, m);
        let v2 = v_of(&ys2, &bs2);
        let done = (v2 - v_top).abs() < opts.v_top_tol;
        ys = ys2;
        bs = bs2;
        v_top = v2;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::OdeNotConverged {
            refinements: opts.max_refinements,
        });
    }

    let a_vals: Vec<f64> = ys
        .iter()
        .zip(&bs)
        .map(|(&y, &b)| a_from_b(n, b_n, mu, epsilon, y, b))
        .collect();
    Ok(StageSolution {
        n,
        y_lo,
        y_hi,
        b_n,
        y_grid: ys,
        b_vals: bs,
        a_vals,
        v_top,
    })
}

/// Expected search time of FTL started from `cfg.x0`, by chaining stages
/// from the all-tied base case up to the initial tie group.
pub fn ftl_value(cfg: &ProblemConfig) -> Result<ValueResult> {
    ftl_value_with(cfg, &OdeOptions::default())
}

pub fn ftl_value_with(cfg: &ProblemConfig, opts: &OdeOptions) -> Result<ValueResult> {
    let prior = posterior_from_loglik(cfg.x0(), cfg.mu())?;
    if check_threshold(&prior, cfg.epsilon()).hit {
        return Ok(ValueResult {
            value: 0.0,
            stages: Vec::new(),
            config: cfg.clone(),
        });
    }
    let n_boxes = cfg.n_boxes();
    let tie = cfg.leading_tie_size();
    let mut v = mpr_value(n_boxes, cfg.mu(), cfg.epsilon())?;
    let mut stages = Vec::with_capacity(n_boxes - tie);
    for n in (tie..n_boxes).rev() {
        let stage = solve_stage(n, &cfg.x0()[n..], v, cfg, opts)?;
        v = stage.v_top;
        stages.push(stage);
    }
    Ok(ValueResult {
        value: v,
        stages,
        config: cfg.clone(),
    })
}

/// Interior stage value `f(s, y)` with the leader `s` above the minimum
/// `y`; `A` and `B` are linearly interpolated on the stage grid.
pub fn eval_interior(stage: &StageSolution, s: f64, y: f64, cfg: &ProblemConfig) -> Result<f64> {
    let slack = 1e-9;
    if y < stage.y_lo - slack || y > stage.y_hi + slack {
        return Err(Error::InvalidArgument(format!(
            "y={y} outside stage interval [{}, {}]",
            stage.y_lo, stage.y_hi
        )));
    }
    let q = q_fun(stage.n, stage.b_n, cfg.mu(), cfg.epsilon(), y);
    if s < -slack || s > q + slack {
        return Err(Error::InvalidArgument(format!(
            "s={s} outside [0, q_n(y)={q}]"
        )));
    }
    let (a, b) = interp_ab(stage, y);
    let k = k_fun(stage.n, stage.b_n, cfg.mu(), y);
    let p = p_fun(s, k, cfg.mu());
    Ok(a + b * p + 2.0 * s / cfg.mu() * (1.0 - 2.0 * p))
}

fn interp_ab(stage: &StageSolution, y: f64) -> (f64, f64) {
    let grid = &stage.y_grid;
    if grid.len() == 1 {
        return (stage.a_vals[0], stage.b_vals[0]);
    }
    let h = (stage.y_hi - stage.y_lo) / (grid.len() - 1) as f64;
    let pos = ((y - stage.y_lo) / h).clamp(0.0, (grid.len() - 1) as f64);
    let i = (pos.floor() as usize).min(grid.len() - 2);
    let w = ((y - grid[i]) / h).clamp(0.0, 1.0);
    (
        stage.a_vals[i] * (1.0 - w) + stage.a_vals[i + 1] * w,
        stage.b_vals[i] * (1.0 - w) + stage.b_vals[i + 1] * w,
    )
}
