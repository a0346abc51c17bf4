//! Problem configuration, posterior/log-likelihood algebra, and the
//! follow-the-leader selection rule.
//!
//! Box `j` carries a log-likelihood coordinate `x_j`; the posterior over
//! boxes is the softmax `pi_j = exp(mu x_j) / sum_i exp(mu x_i)`. A search
//! terminates once `max_j pi_j >= 1 - epsilon`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates within this distance of the leader are treated as tied.
pub const TIE_EPS: f64 = 1e-12;

/// Static description of a search problem: signal drift `mu`, error bound
/// `epsilon`, and the initial log-likelihood coordinates `x0` (sorted
/// non-increasing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigJson", into = "ConfigJson")]
pub struct ProblemConfig {
    mu: f64,
    epsilon: f64,
    x0: Vec<f64>,
}

/// Wire form of [`ProblemConfig`]: `{"mu", "epsilon", "x0"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigJson {
    mu: f64,
    epsilon: f64,
    x0: Vec<f64>,
}

impl TryFrom<ConfigJson> for ProblemConfig {
    type Error = Error;

    fn try_from(raw: ConfigJson) -> Result<Self> {
        ProblemConfig::new(raw.mu, raw.epsilon, raw.x0)
    }
}

impl From<ProblemConfig> for ConfigJson {
    fn from(cfg: ProblemConfig) -> Self {
        ConfigJson {
            mu: cfg.mu,
            epsilon: cfg.epsilon,
            x0: cfg.x0,
        }
    }
}

impl ProblemConfig {
    /// Validates and builds a configuration.
    ///
    /// Requires `mu > 0`, `epsilon` in `(0, 1/2)`, and `x0` of length >= 2
    /// sorted non-increasing with finite entries.
    pub fn new(mu: f64, epsilon: f64, x0: Vec<f64>) -> Result<Self> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidConfig(format!("mu must be positive, got {mu}")));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 0.5 {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1/2), got {epsilon}"
            )));
        }
        if x0.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least two boxes, got {}",
                x0.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("x0 entries must be finite".into()));
        }
        if x0.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "x0 must be sorted non-increasing".into(),
            ));
        }
        Ok(Self { mu, epsilon, x0 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn n_boxes(&self) -> usize {
        self.x0.len()
    }

    /// Number of leading coordinates tied with `x0[0]` (within [`TIE_EPS`]).
    pub fn leading_tie_size(&self) -> usize {
        self.x0
            .iter()
            .take_while(|&&v| (self.x0[0] - v).abs() <= TIE_EPS)
            .count()
    }

    /// Initial posterior distribution over boxes.
    pub fn prior(&self) -> Posterior {
        posterior_from_loglik(&self.x0, self.mu).expect("validated config")
    }
}

/// Probability vector over boxes; entries in `[0, 1]` summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Posterior {
    probs: Vec<f64>,
}

impl Posterior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty posterior".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::InvalidArgument(
                "posterior entries must lie in [0, 1]".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "posterior sums to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Outcome of a threshold test: whether some box reached `1 - epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEvent {
    pub hit: bool,
    /// Index of the box at the threshold; set only when `hit`.
    pub index: Option<usize>,
    /// The threshold level `1 - epsilon`.
    pub level: f64,
}

/// Softmax of `mu * x` with max-shift normalization.
///
/// Coordinates in long simulations compound to magnitudes where naive
/// exponentiation overflows; shifting by the max keeps every exponent <= 0.
pub fn posterior_from_loglik(x: &[f64], mu: f64) -> Result<Posterior> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty coordinate vector".into()));
    }
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("coordinates must be finite".into()));
    }
    let m = x.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(mu * v));
    let mut probs: Vec<f64> = x.iter().map(|&v| (mu * v - m).exp()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    Ok(Posterior { probs })
}

/// Inverse of [`posterior_from_loglik`] up to an additive constant:
/// `x_j = log(p_j) / mu`. Zero entries have no finite coordinate.
pub fn loglik_from_posterior(p: &Posterior, mu: f64) -> Result<Vec<f64>> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    if p.probs.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument(
            "posterior with a zero entry has no finite log-likelihood coordinates".into(),
        ));
    }
    Ok(p.probs.iter().map(|&v| v.ln() / mu).collect())
}

/// The follow-the-leader index: the largest index among the maximizers of
/// `x`, i.e. the unique `j` with `x_j = max(x_1..x_j)` and
/// `x_j > max(x_{j+1}..)`. Exactly one index satisfies the rule.
pub fn ftl_select(x: &[f64]) -> usize {
    assert!(!x.is_empty(), "ftl_select on empty slice");
    let mut best = 0;
    for (j, &v) in x.iter().enumerate() {
        if v >= x[best] {
            best = j;
        }
    }
    best
}

/// Tests `max_j p_j >= 1 - epsilon` (inclusive), resolving argmax ties to
/// the largest index, consistent with [`ftl_select`].
pub fn check_threshold(p: &Posterior, epsilon: f64) -> ThresholdEvent {
    debug_assert!(epsilon > 0.0 && epsilon < 0.5);
    let level = 1.0 - epsilon;
    let idx = ftl_select(&p.probs);
    let hit = p.probs[idx] >= level;
    ThresholdEvent {
        hit,
        index: hit.then_some(idx),
        level,
    }
}
