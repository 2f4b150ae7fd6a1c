//! Prospect-theory primitives: the s-shaped value function, the probability
//! weighting function, and the utility of a sensing decision.

use crate::error::{Error, Result};
use crate::market::{MarketScenario, SensingDistribution};

/// Parameters of the value and weighting functions.
///
/// `lambda` is the loss penalty, `beta`/`gamma` the curvature for gains and
/// losses, `mu` the probability distortion. The all-ones profile is the
/// expected-utility (risk-neutral) decision maker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskProfile {
    lambda: f64,
    beta: f64,
    gamma: f64,
    mu: f64,
}

impl RiskProfile {
    pub fn new(lambda: f64, beta: f64, gamma: f64, mu: f64) -> Result<Self> {
        let unit = |x: f64| x.is_finite() && x > 0.0 && x <= 1.0;
        if !(lambda.is_finite() && lambda >= 1.0) {
            return Err(Error::InvalidProfile(format!(
                "lambda must be >= 1, got {lambda}"
            )));
        }
        if !unit(beta) {
            return Err(Error::InvalidProfile(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        if !unit(gamma) {
            return Err(Error::InvalidProfile(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        if !unit(mu) {
            return Err(Error::InvalidProfile(format!(
                "mu must lie in (0, 1], got {mu}"
            )));
        }
        Ok(Self {
            lambda,
            beta,
            gamma,
            mu,
        })
    }

    /// The risk-neutral profile (λ = β = γ = μ = 1).
    pub fn eut() -> Self {
        Self {
            lambda: 1.0,
            beta: 1.0,
            gamma: 1.0,
            mu: 1.0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_eut(&self) -> bool {
        self.lambda == 1.0 && self.beta == 1.0 && self.gamma == 1.0 && self.mu == 1.0
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.beta, self.gamma, self.mu)
    }

    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(self.lambda, beta, self.gamma, self.mu)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.lambda, self.beta, gamma, self.mu)
    }

    pub fn with_mu(self, mu: f64) -> Result<Self> {
        Self::new(self.lambda, self.beta, self.gamma, mu)
    }
}

/// Gain curvature strictly below loss curvature (β < γ).
pub fn validate_assumption1(profile: &RiskProfile) -> bool {
    profile.beta < profile.gamma
}

/// Benchmark profit separating gains from losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferencePoint {
    /// Profit of leasing the whole demand without sensing, D(π − c_l).
    RiskFree,
    /// Every sensed unit realized, D(π − c_s).
    High,
    /// No sensed unit realized, D(π − c_l − c_s).
    Low,
    Custom(f64),
}

impl ReferencePoint {
    pub fn resolve(&self, scenario: &MarketScenario) -> f64 {
        let d = scenario.demand();
        match *self {
            ReferencePoint::RiskFree => d * (scenario.price() - scenario.leasing_cost()),
            ReferencePoint::High => d * (scenario.price() - scenario.sensing_cost()),
            ReferencePoint::Low => {
                d * (scenario.price() - scenario.leasing_cost() - scenario.sensing_cost())
            }
            ReferencePoint::Custom(v) => v,
        }
    }

    /// Net gain of the lease-everything decision, D(π − c_l) − R_p.
    ///
    /// Written per variant so the risk-free case is exactly zero.
    pub fn base_gain(&self, scenario: &MarketScenario) -> f64 {
        let d = scenario.demand();
        match *self {
            ReferencePoint::RiskFree => 0.0,
            ReferencePoint::High => -d * (scenario.leasing_cost() - scenario.sensing_cost()),
            ReferencePoint::Low => d * scenario.sensing_cost(),
            ReferencePoint::Custom(v) => d * (scenario.price() - scenario.leasing_cost()) - v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ReferencePoint::Custom(v) if !v.is_finite() => Err(Error::InvalidReference(format!(
                "custom value must be finite, got {v}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ReferencePoint::RiskFree => "risk_free",
            ReferencePoint::High => "high",
            ReferencePoint::Low => "low",
            ReferencePoint::Custom(_) => "custom",
        }
    }
}

/// S-shaped valuation of a net gain `x`.
pub fn value(x: f64, profile: &RiskProfile) -> f64 {
    if x >= 0.0 {
        if profile.beta == 1.0 {
            x
        } else {
            x.powf(profile.beta)
        }
    } else {
        // magnitude only; never a fractional power of a negative base
        let loss = -x;
        let scaled = if profile.gamma == 1.0 {
            loss
        } else {
            (profile.gamma * loss.ln()).exp()
        };
        -profile.lambda * scaled
    }
}

/// Subjective weight of an objective probability `p` in (0, 1].
pub fn weight(p: f64, profile: &RiskProfile) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidDistribution(format!(
            "probability must lie in (0, 1] to be weighted, got {p}"
        )));
    }
    Ok(weight_unchecked(p, profile.mu))
}

pub(crate) fn weight_unchecked(p: f64, mu: f64) -> f64 {
    if mu == 1.0 {
        return p;
    }
    (-(-p.ln()).powf(mu)).exp()
}

/// Net gain of outcome `alpha` relative to the reference point after the
/// optimal lease.
pub(crate) fn net_gain(bs: f64, alpha: f64, scenario: &MarketScenario, base_gain: f64) -> f64 {
    let covered = (bs * alpha).min(scenario.demand());
    base_gain - bs * scenario.sensing_cost() + covered * scenario.leasing_cost()
}

/// Pre-computed weights and base gain so repeated utility evaluations only
/// pay for the value function.
#[derive(Debug, Clone)]
pub struct UtilityModel<'a> {
    scenario: &'a MarketScenario,
    alphas: Vec<f64>,
    weights: Vec<f64>,
    profile: RiskProfile,
    base_gain: f64,
}

impl<'a> UtilityModel<'a> {
    pub fn new(
        scenario: &'a MarketScenario,
        dist: &SensingDistribution,
        profile: &RiskProfile,
        rp: &ReferencePoint,
    ) -> Self {
        Self {
            scenario,
            alphas: dist.alphas().collect(),
            weights: dist
                .probs()
                .map(|p| weight_unchecked(p, profile.mu))
                .collect(),
            profile: *profile,
            base_gain: rp.base_gain(scenario),
        }
    }

    pub fn eval(&self, bs: f64) -> f64 {
        self.alphas
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| {
                value(
                    net_gain(bs, a, self.scenario, self.base_gain),
                    &self.profile,
                ) * w
            })
            .sum()
    }
}

/// PT utility of sensing `bs`: Σ_i v(R_i − R_p) · w(p_i), with each outcome
/// leasing optimally. Weights are applied per outcome and not renormalized.
pub fn pt_utility(
    bs: f64,
    scenario: &MarketScenario,
    dist: &SensingDistribution,
    profile: &RiskProfile,
    rp: &ReferencePoint,
) -> f64 {
    UtilityModel::new(scenario, dist, profile, rp).eval(bs)
}
