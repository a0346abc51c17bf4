//! Closed-form two-barrier exit analytics for drifted Brownian motion.
//!
//! For a Brownian motion with drift `lambda` and variance `sigma2` started
//! at `x` between barriers `b < x < a`, with `rho = lambda / sigma2`:
//!
//! ```text
//! P(exit at a)    = (e^{-2 rho b} - e^{-2 rho x}) / (e^{-2 rho b} - e^{-2 rho a})
//! E[tau | at a]   = (1/lambda) [ (a-x) + g(a-b) - g(x-b) ]
//! E[tau | at b]   = (1/lambda) [ (x-b) + g(a-b) - g(a-x) ]
//! g(L)            = 2L / (e^{2 rho L} - 1)
//! ```
//!
//! The conditional times depend on the drift only through |lambda|, so they
//! are evaluated at |rho|, which makes the drift-sign symmetry exact in
//! floating point. Near zero drift both `g` differences and the `1/lambda`
//! prefactor cancel catastrophically; below the cutoffs the quantities
//! switch to even Taylor expansions in `rho`:
//!
//! ```text
//! P    = (m/L) [ 1 + rho (L-m) + rho^2 (2m^2/3 - mL + L^2/3) ]
//! F_a  = [ (L^2 - m^2) - rho^2 (L^4 - m^4) / 15 ] / (3 sigma2),  m = x-b
//! F_b  = same with m replaced by a-x
//! ```

use serde::Serialize;

use crate::error::{Error, Result};

/// Probability switches to its expansion below this |rho (a-b)|.
const PROB_EXPANSION_CUTOFF: f64 = 1e-6;

/// Conditional times switch below this |rho (a-b)|. The closed forms lose
/// roughly 2e-16 / rho^2 in absolute terms, so they cannot be trusted much
/// below 1e-3 while the expansion error is O((rho L)^4) there.
const TIME_EXPANSION_CUTOFF: f64 = 1e-3;

/// Two-barrier problem: start `x`, barriers `b < x < a`, drift `lambda`
/// per unit time, variance `sigma2` per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitSpec {
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub sigma2: f64,
}

impl ExitSpec {
    pub fn new(x: f64, a: f64, b: f64, lambda: f64, sigma2: f64) -> Result<Self> {
        if !(x.is_finite() && a.is_finite() && b.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidConfig("exit spec fields must be finite".into()));
        }
        if !(b < x && x < a) {
            return Err(Error::InvalidConfig(format!(
                "need b < x < a, got b={b}, x={x}, a={a}"
            )));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        Ok(Self { x, a, b, lambda, sigma2 })
    }

    fn rho(&self) -> f64 {
        self.lambda / self.sigma2
    }
}

/// Exit probability at the upper barrier plus both conditional expected
/// times and their mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitStats {
    pub p_upper: f64,
    pub t_upper: f64,
    pub t_lower: f64,
    pub t_mean: f64,
}

/// Probability of exiting at the upper barrier `a`.
pub fn exit_prob(spec: &ExitSpec) -> f64 {
    let rho = spec.rho();
    let l = spec.a - spec.b;
    let m = spec.x - spec.b;
    if (rho * l).abs() < PROB_EXPANSION_CUTOFF {
        return (m / l)
            * (1.0 + rho * (l - m) + rho * rho * (2.0 * m * m / 3.0 - m * l + l * l / 3.0));
    }
    if rho >= 0.0 {
        // Exponents <= 0 on both sides: no overflow.
        (-2.0 * rho * m).exp_m1() / (-2.0 * rho * l).exp_m1()
    } else {
        let r = -rho;
        1.0 - (-2.0 * r * (spec.a - spec.x)).exp_m1() / (-2.0 * r * l).exp_m1()
    }
}

/// `g(L) = 2L / expm1(2 rho L)`; vanishes gracefully as `rho L -> +inf`.
fn g(l: f64, two_rho: f64) -> f64 {
    2.0 * l / (two_rho * l).exp_m1()
}

fn conditional_time(spec: &ExitSpec, toward_upper: bool) -> f64 {
    // Symmetric in the drift sign, so canonicalize to |lambda|.
    let lam = spec.lambda.abs();
    let rho = lam / spec.sigma2;
    let l = spec.a - spec.b;
    let m = if toward_upper { spec.x - spec.b } else { spec.a - spec.x };
    if rho * l < TIME_EXPANSION_CUTOFF {
        return ((l * l - m * m) - rho * rho * (l.powi(4) - m.powi(4)) / 15.0)
            / (3.0 * spec.sigma2);
    }
    let linear = if toward_upper { spec.a - spec.x } else { spec.x - spec.b };
    (linear + g(l, 2.0 * rho) - g(m, 2.0 * rho)) / lam
}

/// Expected exit time conditional on exiting at the upper barrier.
pub fn exit_time_upper(spec: &ExitSpec) -> f64 {
    conditional_time(spec, true)
}

/// Expected exit time conditional on exiting at the lower barrier.
pub fn exit_time_lower(spec: &ExitSpec) -> f64 {
    conditional_time(spec, false)
}

/// Bundles the exit probability, both conditional times, and the
/// unconditional mean `p t_up + (1-p) t_lo`.
pub fn exit_stats(spec: &ExitSpec) -> ExitStats {
    let p_upper = exit_prob(spec);
    let t_upper = exit_time_upper(spec);
    let t_lower = exit_time_lower(spec);
    ExitStats {
        p_upper,
        t_upper,
        t_lower,
        t_mean: p_upper * t_upper + (1.0 - p_upper) * t_lower,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(x: f64, a: f64, b: f64, lambda: f64) -> ExitSpec {
        ExitSpec::new(x, a, b, lambda, 1.0).unwrap()
    }

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn construction_guards() {
        assert!(ExitSpec::new(0.0, 1.0, -1.0, 0.0, 1.0).is_ok());
        assert!(ExitSpec::new(2.0, 1.0, -1.0, 0.0, 1.0).is_err());
        assert!(ExitSpec::new(0.0, 1.0, -1.0, 0.0, 0.0).is_err());
        assert!(ExitSpec::new(0.0, 1.0, -1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn driftless_symmetric_half() {
        assert_close(exit_prob(&spec(0.0, 1.0, -1.0, 0.0)), 0.5, 1e-15);
        assert_close(exit_prob(&spec(0.9, 1.0, -1.0, 0.0)), 0.95, 1e-14);
    }

    #[test]
    fn drifted_prob_matches_closed_form() {
        // (e - 1) / (e - e^{-1})
        let e = std::f64::consts::E;
        let want = (e - 1.0) / (e - 1.0 / e);
        assert_close(exit_prob(&spec(0.0, 1.0, -1.0, 0.5)), want, 1e-15);
        assert_close(exit_prob(&spec(0.0, 1.0, -1.0, 0.5)), 0.73106, 1e-5);
    }

    #[test]
    fn drift_sign_symmetry_is_exact() {
        for (x, a, b, lam) in [(0.0, 1.0, -1.0, 0.5), (0.3, 0.9, -0.2, 1.7)] {
            let up_pos = exit_time_upper(&spec(x, a, b, lam));
            let up_neg = exit_time_upper(&spec(x, a, b, -lam));
            assert!(up_pos.to_bits() == up_neg.to_bits(), "F_a not symmetric");
            let lo_pos = exit_time_lower(&spec(x, a, b, lam));
            let lo_neg = exit_time_lower(&spec(x, a, b, -lam));
            assert!(lo_pos.to_bits() == lo_neg.to_bits(), "F_b not symmetric");
        }
    }

    #[test]
    fn driftless_limits_match_classical_forms() {
        // P -> (x-b)/(a-b), E[tau] -> (a-x)(x-b), conditional forms
        // ((a-b)^2 - m^2)/3.
        for (x, a, b) in [(0.0, 1.0, -1.0), (0.2, 0.7, -0.4)] {
            let s = spec(x, a, b, 0.0);
            assert_close(exit_prob(&s), (x - b) / (a - b), 1e-8);
            let l = a - b;
            assert_close(exit_time_upper(&s), (l * l - (x - b) * (x - b)) / 3.0, 1e-8);
            assert_close(exit_time_lower(&s), (l * l - (a - x) * (a - x)) / 3.0, 1e-8);
            let st = exit_stats(&s);
            assert_close(st.t_mean, (a - x) * (x - b), 1e-8);
        }
    }

    #[test]
    fn branches_agree_at_the_seams() {
        // Evaluate just below and above each expansion cutoff; the jump
        // across the seam bounds the branch inconsistency.
        let l = 2.0;
        for (cutoff, f) in [
            (PROB_EXPANSION_CUTOFF, &exit_prob as &dyn Fn(&ExitSpec) -> f64),
            (TIME_EXPANSION_CUTOFF, &exit_time_upper),
            (TIME_EXPANSION_CUTOFF, &exit_time_lower),
        ] {
            let rho_lo = cutoff / l * 0.999;
            let rho_hi = cutoff / l * 1.001;
            let v_lo = f(&spec(0.3, 1.0, -1.0, rho_lo));
            let v_hi = f(&spec(0.3, 1.0, -1.0, rho_hi));
            assert!(
                (v_lo - v_hi).abs() < 1e-8,
                "seam jump {} at cutoff {cutoff}",
                (v_lo - v_hi).abs()
            );
        }
    }

    #[test]
    fn stats_mixture_identity() {
        let st = exit_stats(&spec(0.1, 0.8, -0.5, 0.7));
        let want = st.p_upper * st.t_upper + (1.0 - st.p_upper) * st.t_lower;
        assert!(((st.t_mean - want) / want).abs() < 1e-12);

        let sym = exit_stats(&spec(0.0, 1.0, -1.0, 0.0));
        assert_close(sym.p_upper, 0.5, 1e-15);
        assert_close(sym.t_upper, sym.t_lower, 1e-15);
    }

    #[test]
    fn frozen_drifted_times() {
        // Regression values; cross-validated against the Monte Carlo exit
        // oracle in the acceptance suite.
        let s = spec(0.0, 1.0, -1.0, 0.5);
        assert_close(exit_time_upper(&s), 0.9242343145200191, 1e-12);
        assert_close(exit_time_lower(&s), 0.9242343145200191, 1e-12);
    }

    #[test]
    fn no_overflow_for_large_drift() {
        let s = ExitSpec::new(0.0, 400.0, -400.0, 3.0, 1.0).unwrap();
        let p = exit_prob(&s);
        // True value 1 - e^{-2400}: saturates to 1 in f64 without blowing up.
        assert!(p.is_finite() && p > 0.99 && p <= 1.0);
        // Strong positive drift: conditional upper time approaches the
        // ballistic (a - x) / lambda.
        assert_close(exit_time_upper(&s), 400.0 / 3.0, 1e-6);
    }

    proptest! {
        #[test]
        fn complement_via_reflection(
            x in -1.0f64..1.0,
            da in 0.05f64..2.0,
            db in 0.05f64..2.0,
            lam in -3.0f64..3.0,
            s2 in 0.25f64..4.0,
        ) {
            let a = x + da;
            let b = x - db;
            let p_up = exit_prob(&ExitSpec::new(x, a, b, lam, s2).unwrap());
            // Reflect: exit at b of the original is exit at -b (upper) of
            // the mirrored problem with drift -lam.
            let p_lo = exit_prob(&ExitSpec::new(-x, -b, -a, -lam, s2).unwrap());
            prop_assert!((p_up + p_lo - 1.0).abs() < 1e-12);
        }

        #[test]
        fn prob_monotone_in_start_and_drift(
            x in -0.5f64..0.5,
            lam in -2.0f64..2.0,
        ) {
            let s = ExitSpec::new(x, 1.0, -1.0, lam, 1.0).unwrap();
            let dx = ExitSpec::new(x + 0.1, 1.0, -1.0, lam, 1.0).unwrap();
            let dl = ExitSpec::new(x, 1.0, -1.0, lam + 0.1, 1.0).unwrap();
            prop_assert!(exit_prob(&dx) > exit_prob(&s));
            prop_assert!(exit_prob(&dl) > exit_prob(&s));
        }

        #[test]
        fn times_positive_and_mixture_consistent(
            x in -0.8f64..0.8,
            lam in -3.0f64..3.0,
        ) {
            let s = ExitSpec::new(x, 1.0, -1.0, lam, 1.0).unwrap();
            let st = exit_stats(&s);
            prop_assert!(st.t_upper > 0.0 && st.t_lower > 0.0);
            prop_assert!(st.p_upper > 0.0 && st.p_upper < 1.0);
            let mix = st.p_upper * st.t_upper + (1.0 - st.p_upper) * st.t_lower;
            prop_assert!(((st.t_mean - mix) / mix).abs() < 1e-12);
        }

        #[test]
        fn scale_invariance(
            x in -0.5f64..0.5,
            lam in 0.1f64..2.0,
            c in 0.2f64..5.0,
        ) {
            // Scaling space by c and drift by 1/c preserves rho * lengths,
            // so the exit probability is unchanged and times pick up c^2
            // through the 1/lambda prefactor.
            let s1 = ExitSpec::new(x, 1.0, -1.0, lam, 1.0).unwrap();
            let s2 = ExitSpec::new(c * x, c, -c, lam / c, 1.0).unwrap();
            prop_assert!((exit_prob(&s1) - exit_prob(&s2)).abs() < 1e-10);
            let f1 = exit_time_upper(&s1);
            let f2 = exit_time_upper(&s2);
            prop_assert!(((f2 - c * c * f1) / (c * c * f1)).abs() < 1e-9);
        }
    }
}
