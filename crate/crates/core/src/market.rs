//! Market model: prices and costs, the sensing-yield distribution, the
//! second-stage leasing rule and the realized profit.

use std::fmt;

use crate::error::{Error, Result};
use crate::pt::{pt_utility, ReferencePoint, RiskProfile};

/// Tolerance on Σ p_i = 1.
pub const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketScenario {
    sensing_cost: f64,
    leasing_cost: f64,
    price: f64,
    demand: f64,
}

impl MarketScenario {
    /// Requires 0 < c_s < c_l < π and D > 0.
    pub fn new(sensing_cost: f64, leasing_cost: f64, price: f64, demand: f64) -> Result<Self> {
        let all_finite = [sensing_cost, leasing_cost, price, demand]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidScenario(
                "all parameters must be finite".into(),
            ));
        }
        if !(sensing_cost > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "c_s must be > 0, got {sensing_cost}"
            )));
        }
        if !(sensing_cost < leasing_cost) {
            return Err(Error::InvalidScenario(format!(
                "sensing cost must be below leasing cost (c_s = {sensing_cost}, c_l = {leasing_cost})"
            )));
        }
        if !(leasing_cost < price) {
            return Err(Error::InvalidScenario(format!(
                "leasing cost must be below price (c_l = {leasing_cost}, pi = {price})"
            )));
        }
        if !(demand > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "demand must be > 0, got {demand}"
            )));
        }
        Ok(Self {
            sensing_cost,
            leasing_cost,
            price,
            demand,
        })
    }

    pub fn sensing_cost(&self) -> f64 {
        self.sensing_cost
    }

    pub fn leasing_cost(&self) -> f64 {
        self.leasing_cost
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn demand(&self) -> f64 {
        self.demand
    }

    /// c_l / c_s.
    pub fn cost_ratio(&self) -> f64 {
        self.leasing_cost / self.sensing_cost
    }

    /// Sensing beyond D·c_l/c_s costs more than leasing the whole demand.
    pub fn sensing_bound(&self) -> f64 {
        self.demand * self.leasing_cost / self.sensing_cost
    }

    /// Profit of leasing the whole demand, D(π − c_l).
    pub fn lease_only_profit(&self) -> f64 {
        self.demand * (self.price - self.leasing_cost)
    }
}

/// Discrete distribution of the fraction α of sensed bandwidth that turns
/// out to be idle. Outcomes are sorted by strictly increasing α.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingDistribution {
    outcomes: Vec<(f64, f64)>,
}

impl SensingDistribution {
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidDistribution(
                "at least one outcome is required".into(),
            ));
        }
        for (i, &(a, p)) in outcomes.iter().enumerate() {
            if !(a.is_finite() && (0.0..=1.0).contains(&a)) {
                return Err(Error::InvalidDistribution(format!(
                    "alpha out of [0,1]: {a}"
                )));
            }
            if !(p.is_finite() && p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidDistribution(format!(
                    "probability must lie in (0, 1]: {p}"
                )));
            }
            if i > 0 && !(outcomes[i - 1].0 < a) {
                return Err(Error::InvalidDistribution(format!(
                    "alphas must be strictly increasing ({} then {a})",
                    outcomes[i - 1].0
                )));
            }
        }
        let total: f64 = outcomes.iter().map(|o| o.1).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { outcomes })
    }

    /// Two outcomes, nothing idle with probability `p1`, everything idle otherwise.
    pub fn binary(p1: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "p1 must lie in (0, 1), got {p1}"
            )));
        }
        Self::new(vec![(0.0, p1), (1.0, 1.0 - p1)])
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.outcomes.iter().map(|o| o.0)
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.outcomes.iter().map(|o| o.1)
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.outcomes[i].0
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.outcomes[i].1
    }

    /// E[α].
    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|&(a, p)| a * p).sum()
    }

    /// `Some(p1)` when the support is exactly {0, 1}.
    pub fn binary_p1(&self) -> Option<f64> {
        match self.outcomes.as_slice() {
            [(a0, p1), (a1, _)] if *a0 == 0.0 && *a1 == 1.0 => Some(*p1),
            _ => None,
        }
    }
}

/// π·min{D, B_l + B_s·α} − (B_s·c_s + B_l·c_l).
pub fn profit(bs: f64, bl: f64, alpha: f64, scenario: &MarketScenario) -> f64 {
    let supplied = bl + bs * alpha;
    scenario.price * scenario.demand.min(supplied)
        - (bs * scenario.sensing_cost + bl * scenario.leasing_cost)
}

/// Lease whatever sensing left uncovered: max{D − B_s·α, 0}.
pub fn optimal_leasing(bs: f64, alpha: f64, scenario: &MarketScenario) -> f64 {
    (scenario.demand - bs * alpha).max(0.0)
}

/// πD − B_s·c_s − max{D − B_s·α, 0}·c_l.
pub fn profit_after_leasing(bs: f64, alpha: f64, scenario: &MarketScenario) -> f64 {
    let bl = optimal_leasing(bs, alpha, scenario);
    scenario.price * scenario.demand - bs * scenario.sensing_cost - bl * scenario.leasing_cost
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffMetrics {
    pub expected: f64,
    /// Profit at the smallest α in the support.
    pub min_possible: f64,
    /// Profit at the largest α in the support.
    pub max_possible: f64,
}

pub fn tradeoff_metrics(
    bs: f64,
    scenario: &MarketScenario,
    dist: &SensingDistribution,
) -> TradeoffMetrics {
    let expected = dist
        .outcomes()
        .iter()
        .map(|&(a, p)| p * profit_after_leasing(bs, a, scenario))
        .sum();
    let first = dist.alpha(0);
    let last = dist.alpha(dist.len() - 1);
    TradeoffMetrics {
        expected,
        min_possible: profit_after_leasing(bs, first, scenario),
        max_possible: profit_after_leasing(bs, last, scenario),
    }
}

/// Where a solution came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Analytic solution; the label names the table row that fired.
    ClosedForm(String),
    /// Brute-force search with the given grid step.
    NumericOracle(f64),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ClosedForm(label) => write!(f, "closed-form[{label}]"),
            Provenance::NumericOracle(step) => write!(f, "numeric-oracle[grid_step={step}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDecision {
    pub alpha: f64,
    pub prob: f64,
    pub b_l_star: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub b_s_star: f64,
    pub per_outcome: Vec<OutcomeDecision>,
    pub utility: f64,
    pub expected_profit: f64,
    pub min_possible_profit: f64,
    pub max_possible_profit: f64,
    pub provenance: Provenance,
    /// Identifies the inputs the result was computed from.
    pub fingerprint: u64,
}

impl SolveResult {
    /// Fills in the leasing decisions, utility and profit metrics for a
    /// chosen sensing amount.
    pub fn assemble(
        b_s_star: f64,
        scenario: &MarketScenario,
        dist: &SensingDistribution,
        profile: &RiskProfile,
        rp: &ReferencePoint,
        provenance: Provenance,
    ) -> Self {
        let per_outcome = dist
            .outcomes()
            .iter()
            .map(|&(alpha, prob)| OutcomeDecision {
                alpha,
                prob,
                b_l_star: optimal_leasing(b_s_star, alpha, scenario),
                profit: profit_after_leasing(b_s_star, alpha, scenario),
            })
            .collect();
        let metrics = tradeoff_metrics(b_s_star, scenario, dist);
        Self {
            b_s_star,
            per_outcome,
            utility: pt_utility(b_s_star, scenario, dist, profile, rp),
            expected_profit: metrics.expected,
            min_possible_profit: metrics.min_possible,
            max_possible_profit: metrics.max_possible,
            provenance,
            fingerprint: fingerprint(scenario, dist, profile, rp),
        }
    }
}

/// FNV-1a over the bit patterns of every model input.
pub fn fingerprint(
    scenario: &MarketScenario,
    dist: &SensingDistribution,
    profile: &RiskProfile,
    rp: &ReferencePoint,
) -> u64 {
    let mut words = vec![
        scenario.sensing_cost,
        scenario.leasing_cost,
        scenario.price,
        scenario.demand,
        profile.lambda(),
        profile.beta(),
        profile.gamma(),
        profile.mu(),
    ];
    for &(a, p) in dist.outcomes() {
        words.push(a);
        words.push(p);
    }
    let (tag, v) = match *rp {
        ReferencePoint::RiskFree => (1u64, 0.0),
        ReferencePoint::High => (2, 0.0),
        ReferencePoint::Low => (3, 0.0),
        ReferencePoint::Custom(v) => (4, v),
    };
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for w in words {
        feed(w.to_bits());
    }
    feed(tag);
    feed(v.to_bits());
    h
}
