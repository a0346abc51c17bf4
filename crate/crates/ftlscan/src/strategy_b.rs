//! Exact expected search time of "Strategy B" for three boxes.
//!
//! Instead of following the leader, Strategy B observes the second box
//! until its coordinate `X_2` exits the interval `(a, x_1)`:
//!
//! - at the lower level `a` the posterior of box 1 reaches `1 - eps`
//!   exactly, so the search ends;
//! - at `x_1` the configuration becomes the exact tie `(x_1, x_1, x_3)`
//!   and the search continues with FTL, worth `V(x_1, x_1, x_3)`.
//!
//! While box 2 is observed, `X_2` drifts at `+mu/2` when box 2 is the true
//! box and `-mu/2` otherwise, with unit variance either way. The expected
//! time therefore mixes the two-barrier exit analytics over the prior:
//!
//! ```text
//! E_B[T] = sum_k pi_k(0) [ P_k F_a + (1 - P_k) F_b ] + (sum_k pi_k(0) P_k) V(x1, x1, x3)
//! ```
//!
//! where `P_k` is the probability `X_2` reaches `x_1` before `a` given the
//! true box is `k`, and `F_a`, `F_b` are the conditional exit times (equal
//! for both drift signs).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exit::{exit_prob, exit_time_lower, exit_time_upper, ExitSpec};
use crate::model::{posterior_from_loglik, ProblemConfig};
use crate::value::ftl_value;

/// Valuation of Strategy B on a feasible three-box configuration.
#[derive(Debug, Clone, Serialize)]
pub struct StrategyBResult {
    pub feasible: bool,
    /// Lower observation boundary `a` in `(x_3, x_2)`.
    pub a_level: f64,
    /// Expected search time `E_B[T]`.
    pub e_time: f64,
    /// Probability that `X_2` reaches `x_1` before `a`.
    pub p_continue: f64,
    /// FTL continuation value `V(x_1, x_1, x_3)`.
    pub v_continue: f64,
}

fn three_box(cfg: &ProblemConfig) -> Result<(f64, f64, f64)> {
    if cfg.n_boxes() != 3 {
        return Err(Error::Unsupported(format!(
            "strategy B is defined for exactly 3 boxes, got {}",
            cfg.n_boxes()
        )));
    }
    let x = cfg.x0();
    if !(x[0] > x[1] && x[1] > x[2]) {
        return Err(Error::InvalidArgument(
            "strategy B requires strictly decreasing coordinates".into(),
        ));
    }
    Ok((x[0], x[1], x[2]))
}

/// Whether the defining inequalities hold strictly:
/// `pi_1(0) < 1 - eps < e^{mu x1} / (e^{mu x1} + 2 e^{mu x3})`.
pub fn feasibility(cfg: &ProblemConfig) -> Result<bool> {
    let (x1, _x2, x3) = three_box(cfg)?;
    let mu = cfg.mu();
    let level = 1.0 - cfg.epsilon();
    let pi1 = posterior_from_loglik(cfg.x0(), mu)?.probs()[0];
    // e^{mu x1} / (e^{mu x1} + 2 e^{mu x3}), normalized by the leader.
    let upper = 1.0 / (1.0 + 2.0 * (mu * (x3 - x1)).exp());
    Ok(pi1 < level && level < upper)
}

/// The unique `a` in `(x_3, x_2)` with
/// `e^{mu x1} / (e^{mu x1} + e^{mu a} + e^{mu x3}) = 1 - eps`, i.e.
/// `a = x1 + log(eps/(1-eps) - e^{mu (x3 - x1)}) / mu`.
pub fn boundary_a(cfg: &ProblemConfig) -> Result<f64> {
    if !feasibility(cfg)? {
        return Err(Error::Infeasible(
            "boundary level a exists only under the feasibility inequalities".into(),
        ));
    }
    let (x1, _x2, x3) = three_box(cfg)?;
    let mu = cfg.mu();
    let eps = cfg.epsilon();
    let arg = eps / (1.0 - eps) - (mu * (x3 - x1)).exp();
    Ok(x1 + arg.ln() / mu)
}

/// Expected search time of Strategy B, decomposed over the true box.
pub fn strategy_b_value(cfg: &ProblemConfig) -> Result<StrategyBResult> {
    let (x1, x2, x3) = three_box(cfg)?;
    let a = boundary_a(cfg)?;
    let mu = cfg.mu();
    let prior = posterior_from_loglik(cfg.x0(), mu)?;

    // Continuation: the exact tie (x1, x1, x3) handled by the value
    // recursion with an initial tie group of two.
    let cont_cfg = ProblemConfig::new(mu, cfg.epsilon(), vec![x1, x1, x3])?;
    let v_continue = ftl_value(&cont_cfg)?.value;

    // X_2 runs in (a, x1) with drift +/- mu/2; the conditional times are
    // drift-sign symmetric, so one spec serves both.
    let spec_up = ExitSpec::new(x2, x1, a, 0.5 * mu, 1.0)?;
    let spec_dn = ExitSpec::new(x2, x1, a, -0.5 * mu, 1.0)?;
    let f_upper = exit_time_upper(&spec_up);
    let f_lower = exit_time_lower(&spec_up);
    let p_up = exit_prob(&spec_up);
    let p_dn = exit_prob(&spec_dn);

    let mut p_continue = 0.0;
    let mut e_time = 0.0;
    for (k, &pi_k) in prior.probs().iter().enumerate() {
        let p_k = if k == 1 { p_up } else { p_dn };
        p_continue += pi_k * p_k;
        e_time += pi_k * (p_k * f_upper + (1.0 - p_k) * f_lower);
    }
    e_time += p_continue * v_continue;

    Ok(StrategyBResult {
        feasible: true,
        a_level: a,
        e_time,
        p_continue,
        v_continue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Posterior;

    fn cfg(x1: f64, x2: f64, x3: f64, eps: f64) -> ProblemConfig {
        ProblemConfig::new(1.0, eps, vec![x1, x2, x3]).unwrap()
    }

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn feasibility_examples() {
        // Table 1 row 1: pi_1 ~ 0.5938 < 0.6 and e^2/(e^2+2) ~ 0.787 > 0.6.
        assert!(feasibility(&cfg(2.0, 1.4, 0.0, 0.4)).unwrap());
        // First inequality fails: pi_1 ~ 0.844 already above 1 - eps.
        assert!(!feasibility(&cfg(3.0, 1.0, 0.0, 0.4)).unwrap());
        // Second inequality fails: e^0/(e^0 + 2 e^{-0.2}) ~ 0.379 < 0.6.
        assert!(!feasibility(&cfg(0.0, -0.1, -0.2, 0.4)).unwrap());
    }

    #[test]
    fn feasibility_requires_three_strictly_ordered_boxes() {
        let two = ProblemConfig::new(1.0, 0.4, vec![1.0, 0.0]).unwrap();
        assert!(matches!(feasibility(&two), Err(Error::Unsupported(_))));
        let tied = ProblemConfig::new(1.0, 0.4, vec![1.0, 1.0, 0.0]).unwrap();
        assert!(feasibility(&tied).is_err());
    }

    #[test]
    fn boundary_matches_bisection_oracle() {
        let c = cfg(2.0, 1.4, 0.0, 0.4);
        let a = boundary_a(&c).unwrap();
        assert_close(a, 1.3676306218626668, 1e-12);

        // Independent oracle: bisect pi_1((x1, a, x3)) = 1 - eps on (x3, x2).
        let pi1 = |a: f64| {
            posterior_from_loglik(&[2.0, a, 0.0], 1.0).unwrap().probs()[0]
        };
        let (mut lo, mut hi) = (0.0, 1.4);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pi1(mid) > 0.6 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_close(a, 0.5 * (lo + hi), 1e-12);

        // Defining property: first posterior coordinate is exactly 1 - eps.
        assert_close(pi1(a), 0.6, 1e-12);
        assert!(a > 0.0 && a < 1.4);
    }

    #[test]
    fn boundary_approaches_x2_at_feasibility_edge() {
        // At the feasibility limit eps -> (1 - pi_1(0))^- the threshold
        // approaches pi_1(0) from above and a -> x2 from below.
        let x = [2.0, 1.4, 0.0];
        let pi1 = posterior_from_loglik(&x, 1.0).unwrap().probs()[0];
        let eps_limit = 1.0 - pi1;
        for (eps, tol) in [(eps_limit - 1e-4, 1e-3), (eps_limit - 1e-6, 1e-5)] {
            let a = boundary_a(&cfg(2.0, 1.4, 0.0, eps)).unwrap();
            assert!(x[1] - a < tol && a < x[1], "a={a} not just below x2");
        }
    }

    #[test]
    fn boundary_rejects_infeasible() {
        assert!(matches!(
            boundary_a(&cfg(0.0, -0.1, -0.2, 0.4)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn table1_row1_strategy_b() {
        let r = strategy_b_value(&cfg(2.0, 1.4, 0.0, 0.4)).unwrap();
        assert_close(r.e_time, 0.03464, 5e-6);
        assert_close(r.e_time, 0.03464473915796315, 1e-9);
        assert!(r.e_time < 0.03633258683362195, "E_B must beat E_A here");
        assert_close(r.v_continue, 0.33599955953865396, 1e-9);
        assert!(r.p_continue > 0.0 && r.p_continue < 1.0);
        assert!(r.a_level > 0.0 && r.a_level < 1.4);
    }

    #[test]
    fn table1_row5_strategy_b() {
        let r = strategy_b_value(&cfg(10.3, 7.4, 0.0, 0.05)).unwrap();
        assert_close(r.e_time, 0.106476, 5e-7);
    }

    #[test]
    fn conditional_times_drift_sign_invariant() {
        let c = cfg(2.0, 1.4, 0.0, 0.4);
        let a = boundary_a(&c).unwrap();
        let up = ExitSpec::new(1.4, 2.0, a, 0.5, 1.0).unwrap();
        let dn = ExitSpec::new(1.4, 2.0, a, -0.5, 1.0).unwrap();
        assert_close(exit_time_upper(&up), exit_time_upper(&dn), 1e-12);
        assert_close(exit_time_lower(&up), exit_time_lower(&dn), 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let base = strategy_b_value(&cfg(2.0, 1.4, 0.0, 0.4)).unwrap();
        for c in [-3.0, 5.0] {
            let r = strategy_b_value(&cfg(2.0 + c, 1.4 + c, c, 0.4)).unwrap();
            assert!(((r.e_time - base.e_time) / base.e_time).abs() < 1e-8);
            // The boundary level translates with the configuration.
            assert_close(r.a_level, base.a_level + c, 1e-10);
        }
    }

    #[test]
    fn continuation_posterior_is_exact_tie() {
        // On exit at x1 the continuation config is (x1, x1, x3) regardless
        // of the true box; its top-two posterior entries are exactly equal.
        let p = posterior_from_loglik(&[2.0, 2.0, 0.0], 1.0).unwrap();
        assert_eq!(p.probs()[0], p.probs()[1]);
        let _ = Posterior::new(p.probs().to_vec()).unwrap();
    }
}
