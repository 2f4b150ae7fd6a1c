//! Analytic optimal sensing decisions.
//!
//! Outcome indices are zero-based throughout: outcome `i` is the `i`-th
//! entry of the (α-sorted) distribution. The pivot is the last outcome whose
//! realization makes sensing a per-unit loss, α_pivot ≤ c_s/c_l < α_{pivot+1}.

use crate::error::{Error, Result};
use crate::market::{MarketScenario, Provenance, SensingDistribution, SolveResult};
use crate::pt::{self, validate_assumption1, weight_unchecked, ReferencePoint, RiskProfile};

/// Default bisection width, relative to demand.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

pub fn find_pivot_index(dist: &SensingDistribution, scenario: &MarketScenario) -> Result<usize> {
    let ratio = scenario.sensing_cost() / scenario.leasing_cost();
    let first = dist.alpha(0);
    let last = dist.alpha(dist.len() - 1);
    if !(first < ratio && ratio < last) {
        return Err(Error::PivotOutOfRange { ratio });
    }
    // α is strictly increasing, so the last index with α ≤ ratio is unique
    Ok(dist.alphas().take_while(|&a| a <= ratio).count() - 1)
}

/// One demand threshold. When the bracketed numerator is not positive the
/// fractional power is undefined and the indicator is pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicator {
    pub value: f64,
    pub clamped: bool,
}

/// Demand thresholds that select the optimal row of the PT solution table.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionIndicators {
    pivot: usize,
    len: usize,
    m: Vec<Indicator>,
    h: Vec<Indicator>,
}

impl DecisionIndicators {
    pub fn pivot(&self) -> usize {
        self.pivot
    }

    /// M_j for `j` in pivot+1 ..= I−1.
    pub fn m(&self, j: usize) -> Option<Indicator> {
        j.checked_sub(self.pivot + 1)
            .and_then(|k| self.m.get(k))
            .copied()
    }

    /// H_j for `j` in pivot+1 ..= I−2.
    pub fn h(&self, j: usize) -> Option<Indicator> {
        j.checked_sub(self.pivot + 1)
            .and_then(|k| self.h.get(k))
            .copied()
    }

    /// Indices `j` for which M_j is defined.
    pub fn m_range(&self) -> std::ops::RangeInclusive<usize> {
        self.pivot + 1..=self.len - 1
    }

    /// Indices `j` for which H_j is defined (may be empty).
    pub fn h_range(&self) -> std::ops::Range<usize> {
        self.pivot + 1..self.len - 1
    }
}

/// Sums shared by the indicators and by `g`.
struct Terms {
    pivot: usize,
    alphas: Vec<f64>,
    weights: Vec<f64>,
    beta: f64,
    gamma: f64,
    cs: f64,
    cl: f64,
    demand: f64,
    /// Σ_{i ≤ pivot} λγ(c_s − c_l α_i)^γ w_i
    loss_slope: f64,
}

impl Terms {
    fn new(
        dist: &SensingDistribution,
        scenario: &MarketScenario,
        profile: &RiskProfile,
        pivot: usize,
    ) -> Self {
        let alphas: Vec<f64> = dist.alphas().collect();
        let weights: Vec<f64> = dist
            .probs()
            .map(|p| weight_unchecked(p, profile.mu()))
            .collect();
        let (cs, cl) = (scenario.sensing_cost(), scenario.leasing_cost());
        let (lambda, gamma) = (profile.lambda(), profile.gamma());
        let loss_slope = (0..=pivot)
            .map(|i| lambda * gamma * (cs - cl * alphas[i]).powf(gamma) * weights[i])
            .sum();
        Self {
            pivot,
            alphas,
            weights,
            beta: profile.beta(),
            gamma,
            cs,
            cl,
            demand: scenario.demand(),
            loss_slope,
        }
    }

    /// Σ_{pivot < i ≤ j} β(c_l α_i − c_s)^β w_i
    fn gain_slope(&self, j: usize) -> f64 {
        (self.pivot + 1..=j)
            .map(|i| {
                self.beta * (self.cl * self.alphas[i] - self.cs).powf(self.beta) * self.weights[i]
            })
            .sum()
    }

    /// Σ_{i > j} w_i
    fn tail_weight(&self, j: usize) -> f64 {
        self.weights[j + 1..].iter().sum()
    }

    /// [ (S_j − βc_s(c_l α_k − c_s)^{β−1} T_j) / (L (1/α_k)^{γ−β}) ]^{1/(γ−β)},
    /// evaluated in log space.
    fn indicator(&self, j: usize, k: usize) -> Indicator {
        let tail = self.tail_weight(j);
        let mut num = self.gain_slope(j);
        if tail > 0.0 {
            num -= self.beta
                * self.cs
                * (self.cl * self.alphas[k] - self.cs).powf(self.beta - 1.0)
                * tail;
        }
        if !(num > 0.0) {
            return Indicator {
                value: 0.0,
                clamped: true,
            };
        }
        let spread = self.gamma - self.beta;
        let ln = (num.ln() - self.loss_slope.ln()) / spread + self.alphas[k].ln();
        Indicator {
            value: ln.exp(),
            clamped: false,
        }
    }

    fn g(&self, j: usize, bs: f64) -> f64 {
        let s = self.gain_slope(j);
        let spread = self.gamma - self.beta;
        let loss = self.loss_slope * bs.powf(spread) / s;
        let saturated = self.beta
            * self.cs
            * (self.demand * self.cl / bs - self.cs).powf(self.beta - 1.0)
            * self.tail_weight(j)
            / s;
        1.0 - loss - saturated
    }

    /// Unconstrained maximizer of the utility on [0, D/α_last].
    fn interior_optimum(&self) -> f64 {
        let last = self.alphas.len() - 1;
        let s = self.gain_slope(last);
        ((s.ln() - self.loss_slope.ln()) / (self.gamma - self.beta)).exp()
    }
}

fn require_assumption1(profile: &RiskProfile) -> Result<()> {
    if validate_assumption1(profile) {
        Ok(())
    } else {
        Err(Error::AssumptionViolated(format!(
            "closed form requires beta < gamma (beta = {}, gamma = {})",
            profile.beta(),
            profile.gamma()
        )))
    }
}

pub fn decision_indicators(
    dist: &SensingDistribution,
    scenario: &MarketScenario,
    profile: &RiskProfile,
) -> Result<DecisionIndicators> {
    require_assumption1(profile)?;
    let pivot = find_pivot_index(dist, scenario)?;
    let terms = Terms::new(dist, scenario, profile, pivot);
    let len = dist.len();
    let m = (pivot + 1..len).map(|j| terms.indicator(j, j)).collect();
    let h = (pivot + 1..len - 1)
        .map(|j| terms.indicator(j, j + 1))
        .collect();
    Ok(DecisionIndicators { pivot, len, m, h })
}

fn check_segment(j: usize, pivot: usize, len: usize) -> Result<()> {
    if j <= pivot || j + 1 >= len {
        return Err(Error::AssumptionViolated(format!(
            "segment index {j} outside {}..={}",
            pivot + 1,
            len.saturating_sub(2)
        )));
    }
    Ok(())
}

/// Sign of the utility slope on [D/α_{j+1}, D/α_j], scaled to be strictly
/// decreasing in `bs`.
pub fn g(
    j: usize,
    bs: f64,
    dist: &SensingDistribution,
    scenario: &MarketScenario,
    profile: &RiskProfile,
) -> Result<f64> {
    let pivot = find_pivot_index(dist, scenario)?;
    check_segment(j, pivot, dist.len())?;
    Ok(Terms::new(dist, scenario, profile, pivot).g(j, bs))
}

fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn root_in_segment(terms: &Terms, j: usize, tol: f64) -> Result<f64> {
    let d = terms.demand;
    let lo = d / terms.alphas[j + 1];
    let hi = d / terms.alphas[j];
    if !(terms.g(j, lo) > 0.0 && terms.g(j, hi) < 0.0) {
        return Err(Error::NoSignChange { j, lo, hi });
    }
    Ok(bisect_decreasing(|b| terms.g(j, b), lo, hi, tol))
}

/// Zero of `g` on [D/α_{j+1}, D/α_j], to within `tol` Hz.
pub fn g_root(
    j: usize,
    dist: &SensingDistribution,
    scenario: &MarketScenario,
    profile: &RiskProfile,
    tol: f64,
) -> Result<f64> {
    let pivot = find_pivot_index(dist, scenario)?;
    check_segment(j, pivot, dist.len())?;
    root_in_segment(&Terms::new(dist, scenario, profile, pivot), j, tol)
}

pub fn solve_pt_riskfree(
    scenario: &MarketScenario,
    dist: &SensingDistribution,
    profile: &RiskProfile,
) -> Result<SolveResult> {
    solve_pt_riskfree_tol(scenario, dist, profile, DEFAULT_REL_TOL * scenario.demand())
}

/// PT optimum under the risk-free reference point, β < γ.
pub fn solve_pt_riskfree_tol(
    scenario: &MarketScenario,
    dist: &SensingDistribution,
    profile: &RiskProfile,
    tol: f64,
) -> Result<SolveResult> {
    let ind = decision_indicators(dist, scenario, profile)?;
    let terms = Terms::new(dist, scenario, profile, ind.pivot);
    let d = scenario.demand();
    let first = ind.pivot + 1;
    let last = dist.len() - 1;
    let m = |j: usize| ind.m(j).map(|x| x.value).unwrap_or(0.0);
    let h = |j: usize| ind.h(j).map(|x| x.value).unwrap_or(0.0);

    let (bs, label) = 'pick: {
        if d <= m(first) {
            break 'pick (d / dist.alpha(first), format!("pt:first-kink(j={first})"));
        }
        for j in first..last {
            if d < h(j) {
                let bs = match root_in_segment(&terms, j, tol) {
                    Ok(b) => b,
                    // rounding at a row boundary; the better end wins
                    Err(_) => {
                        let (a, b) = (d / dist.alpha(j + 1), d / dist.alpha(j));
                        let u = |x| {
                            pt::pt_utility(x, scenario, dist, profile, &ReferencePoint::RiskFree)
                        };
                        if u(b) > u(a) {
                            b
                        } else {
                            a
                        }
                    }
                };
                break 'pick (bs, format!("pt:root(j={j})"));
            }
            let next = m(j + 1);
            if d < next || (d == next && j + 1 < last) {
                break 'pick (d / dist.alpha(j + 1), format!("pt:kink(j={})", j + 1));
            }
        }
        (terms.interior_optimum(), "pt:interior".to_string())
    };

    Ok(SolveResult::assemble(
        bs,
        scenario,
        dist,
        profile,
        &ReferencePoint::RiskFree,
        Provenance::ClosedForm(label),
    ))
}

/// Risk-neutral optimum. The utility reported is the expected profit.
pub fn solve_eut(scenario: &MarketScenario, dist: &SensingDistribution) -> SolveResult {
    let (bs, label) = eut_decision(scenario, dist);
    SolveResult::assemble(
        bs,
        scenario,
        dist,
        &RiskProfile::eut(),
        &ReferencePoint::Custom(0.0),
        Provenance::ClosedForm(label),
    )
}

fn eut_decision(scenario: &MarketScenario, dist: &SensingDistribution) -> (f64, String) {
    let ratio = scenario.cost_ratio();
    let d = scenario.demand();
    let n = dist.len();
    // cum[j] = Σ_{i ≤ j} p_i α_i
    let cum: Vec<f64> = dist
        .outcomes()
        .iter()
        .scan(0.0, |acc, &(a, p)| {
            *acc += p * a;
            Some(*acc)
        })
        .collect();

    if ratio <= 1.0 / cum[n - 1] {
        return (0.0, "risk-neutral:lease-only".into());
    }
    // segment j spans [D/α_{j+1}, D/α_j] with outcomes 0..=j unsaturated;
    // a ratio on a threshold resolves to the smaller decision
    for j in (0..n - 1).rev() {
        if 1.0 / cum[j + 1] < ratio && ratio <= 1.0 / cum[j] {
            let bs = (d / dist.alpha(j + 1)).min(d * ratio);
            return (bs, format!("risk-neutral:kink(j={})", j + 1));
        }
    }
    (d / dist.alpha(0), "risk-neutral:full(j=0)".into())
}

fn require_equal_curvature(profile: &RiskProfile) -> Result<()> {
    if profile.beta() == profile.gamma() {
        Ok(())
    } else {
        Err(Error::AssumptionViolated(format!(
            "binary-outcome closed form requires beta == gamma (beta = {}, gamma = {})",
            profile.beta(),
            profile.gamma()
        )))
    }
}

fn binary_weights(p1: f64, profile: &RiskProfile) -> Result<(f64, f64)> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::InvalidDistribution(format!(
            "p1 must lie in (0, 1), got {p1}"
        )));
    }
    Ok((
        weight_unchecked(p1, profile.mu()),
        weight_unchecked(1.0 - p1, profile.mu()),
    ))
}

/// Cost ratio c_l/c_s above which the risk-free-reference operator senses
/// the whole demand: (λ·w(p1)/w(p2))^{1/β} + 1.
pub fn binary_riskfree_threshold(p1: f64, profile: &RiskProfile) -> Result<f64> {
    require_equal_curvature(profile)?;
    let (w1, w2) = binary_weights(p1, profile)?;
    Ok((profile.lambda() * w1 / w2).powf(1.0 / profile.beta()) + 1.0)
}

/// Cost ratio 1 + w(p1)/w(p2) separating the two rows of the high/low
/// reference-point solution.
pub fn binary_refpoint_threshold(p1: f64, profile: &RiskProfile) -> Result<f64> {
    require_equal_curvature(profile)?;
    let (w1, w2) = binary_weights(p1, profile)?;
    Ok(1.0 + w1 / w2)
}

pub fn solve_binary_riskfree(
    scenario: &MarketScenario,
    p1: f64,
    profile: &RiskProfile,
) -> Result<SolveResult> {
    let threshold = binary_riskfree_threshold(p1, profile)?;
    let dist = SensingDistribution::binary(p1)?;
    let (bs, label) = if scenario.cost_ratio() > threshold {
        (scenario.demand(), "binary-risk-free:sense-demand")
    } else {
        (0.0, "binary-risk-free:lease-only")
    };
    Ok(SolveResult::assemble(
        bs,
        scenario,
        &dist,
        profile,
        &ReferencePoint::RiskFree,
        Provenance::ClosedForm(label.into()),
    ))
}

/// d/dB of the high-reference utility on (0, D); strictly increasing.
fn high_slope(bs: f64, scenario: &MarketScenario, w1: f64, w2: f64, profile: &RiskProfile) -> f64 {
    let (cs, cl, d, b, lam) = (
        scenario.sensing_cost(),
        scenario.leasing_cost(),
        scenario.demand(),
        profile.beta(),
        profile.lambda(),
    );
    -lam * cs * w1 * b * (bs * cs + d * (cl - cs)).powf(b - 1.0)
        + lam * w2 * b * (cl - cs).powf(b) * (d - bs).powf(b - 1.0)
}

/// d/dB of the low-reference utility on (0, D); strictly decreasing.
fn low_slope(bs: f64, scenario: &MarketScenario, w1: f64, w2: f64, profile: &RiskProfile) -> f64 {
    let (cs, cl, d, b) = (
        scenario.sensing_cost(),
        scenario.leasing_cost(),
        scenario.demand(),
        profile.beta(),
    );
    -cs * b * (cs * (d - bs)).powf(b - 1.0) * w1
        + b * (cl - cs) * (bs * (cl - cs) + d * cs).powf(b - 1.0) * w2
}

/// Stationary point of the high-reference utility on (0, D), if any.
///
/// The high-reference utility is convex there, so this point is where the
/// utility is smallest, not largest.
pub fn high_reference_stationary_point(
    scenario: &MarketScenario,
    p1: f64,
    profile: &RiskProfile,
) -> Result<Option<f64>> {
    require_equal_curvature(profile)?;
    let (w1, w2) = binary_weights(p1, profile)?;
    let d = scenario.demand();
    let f = |b: f64| high_slope(b, scenario, w1, w2, profile);
    if !(f(0.0) < 0.0 && f(d) > 0.0) {
        return Ok(None);
    }
    // negate so the bisection sees a decreasing function
    Ok(Some(bisect_decreasing(
        |b| -f(b),
        0.0,
        d,
        DEFAULT_REL_TOL * d,
    )))
}

pub fn solve_binary_refpoint(
    scenario: &MarketScenario,
    p1: f64,
    profile: &RiskProfile,
    rp: &ReferencePoint,
) -> Result<SolveResult> {
    solve_binary_refpoint_tol(
        scenario,
        p1,
        profile,
        rp,
        DEFAULT_REL_TOL * scenario.demand(),
    )
}

/// Binary-outcome optimum under the high or low reference point, β = γ.
pub fn solve_binary_refpoint_tol(
    scenario: &MarketScenario,
    p1: f64,
    profile: &RiskProfile,
    rp: &ReferencePoint,
    tol: f64,
) -> Result<SolveResult> {
    let threshold = binary_refpoint_threshold(p1, profile)?;
    let (w1, w2) = binary_weights(p1, profile)?;
    let dist = SensingDistribution::binary(p1)?;
    let d = scenario.demand();
    let ratio = scenario.cost_ratio();

    let (bs, label) = match rp {
        ReferencePoint::High if ratio >= threshold => (d, "binary-high:sense-demand"),
        ReferencePoint::High => {
            // convex on [0, D]: the optimum is an endpoint
            let u = |b| pt::pt_utility(b, scenario, &dist, profile, rp);
            if u(d) > u(0.0) {
                (d, "binary-high:endpoint")
            } else {
                (0.0, "binary-high:endpoint")
            }
        }
        ReferencePoint::Low if ratio < threshold => (0.0, "binary-low:lease-only"),
        ReferencePoint::Low => {
            let f = |b: f64| low_slope(b, scenario, w1, w2, profile);
            let bs = if f(0.0) <= 0.0 {
                0.0
            } else if f(d) > 0.0 {
                // β = 1: the slope never turns negative
                d
            } else {
                bisect_decreasing(f, 0.0, d, tol)
            };
            (bs, "binary-low:root")
        }
        other => {
            return Err(Error::InvalidReference(format!(
                "binary reference-point solver takes high or low, got {}",
                other.kind_name()
            )))
        }
    };
    Ok(SolveResult::assemble(
        bs,
        scenario,
        &dist,
        profile,
        rp,
        Provenance::ClosedForm(label.into()),
    ))
}

/// Picks the analytic solver that covers the inputs.
pub fn solve(
    scenario: &MarketScenario,
    dist: &SensingDistribution,
    profile: &RiskProfile,
    rp: &ReferencePoint,
    tol: f64,
) -> Result<SolveResult> {
    if profile.is_eut() {
        // a reference point only shifts a linear utility
        let eut = solve_eut(scenario, dist);
        return Ok(SolveResult::assemble(
            eut.b_s_star,
            scenario,
            dist,
            profile,
            rp,
            eut.provenance,
        ));
    }
    if let Some(p1) = dist.binary_p1() {
        if profile.beta() == profile.gamma() {
            return match rp {
                ReferencePoint::RiskFree => solve_binary_riskfree(scenario, p1, profile),
                ReferencePoint::High | ReferencePoint::Low => {
                    solve_binary_refpoint_tol(scenario, p1, profile, rp, tol)
                }
                ReferencePoint::Custom(_) => Err(Error::AssumptionViolated(
                    "no closed form for a custom reference point".into(),
                )),
            };
        }
    }
    match rp {
        ReferencePoint::RiskFree => solve_pt_riskfree_tol(scenario, dist, profile, tol),
        other => Err(Error::AssumptionViolated(format!(
            "no closed form for the {} reference point with these inputs",
            other.kind_name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(cs: f64, cl: f64, pi: f64, d: f64) -> MarketScenario {
        MarketScenario::new(cs, cl, pi, d).unwrap()
    }

    fn dist(o: &[(f64, f64)]) -> SensingDistribution {
        SensingDistribution::new(o.to_vec()).unwrap()
    }

    fn profile(l: f64, b: f64, g: f64, m: f64) -> RiskProfile {
        RiskProfile::new(l, b, g, m).unwrap()
    }

    fn brute_argmax(u: impl Fn(f64) -> f64, hi: f64, steps: usize) -> f64 {
        let mut best = (0.0, u(0.0));
        for k in 1..=steps {
            let b = hi * k as f64 / steps as f64;
            let v = u(b);
            if v > best.1 {
                best = (b, v);
            }
        }
        best.0
    }

    #[test]
    fn pivot_examples() {
        let d = dist(&[(0.2, 0.3), (0.6, 0.3), (0.9, 0.4)]);
        assert_eq!(
            find_pivot_index(&d, &scenario(2.0, 5.0, 8.0, 10.0)).unwrap(),
            0
        );
        assert_eq!(
            find_pivot_index(&d, &scenario(3.0, 5.0, 8.0, 10.0)).unwrap(),
            1
        );
        let d = dist(&[(0.2, 0.5), (0.6, 0.5)]);
        assert!(matches!(
            find_pivot_index(&d, &scenario(0.5, 5.0, 8.0, 10.0)),
            Err(Error::PivotOutOfRange { .. })
        ));
    }

    // Straight transcription of the last-outcome indicator for
    // α = (0.1, 0.9), p = (0.5, 0.5), c_l = 5, c_s = 2, λ = 2, β = 0.5, γ = 0.8, μ = 1:
    //   numerator   = (5·0.9 − 2)^0.5 · 0.5 · 0.5
    //   denominator = 2 · 0.8 · (2 − 0.5)^0.8 · (1/0.9)^0.3 · 0.5
    //   M = (numerator / denominator)^(1/0.3)
    #[test]
    fn last_indicator_pinned() {
        let num = (2.5f64).sqrt() * 0.25;
        let den = 2.0 * 0.8 * 1.5f64.powf(0.8) * (1.0 / 0.9f64).powf(0.3) * 0.5;
        let expected = (num / den).powf(1.0 / 0.3);
        assert!((expected - 0.029_111_588_606_6).abs() < 1e-9, "{expected}");

        let d = dist(&[(0.1, 0.5), (0.9, 0.5)]);
        let s = scenario(2.0, 5.0, 8.0, 10.0);
        let ind = decision_indicators(&d, &s, &profile(2.0, 0.5, 0.8, 1.0)).unwrap();
        let m = ind.m(1).unwrap();
        assert!(!m.clamped);
        assert!((m.value - expected).abs() < 1e-12 * expected.max(1.0));

        let heavier = decision_indicators(&d, &s, &profile(4.0, 0.5, 0.8, 1.0)).unwrap();
        assert!(heavier.m(1).unwrap().value < m.value);
    }

    #[test]
    fn indicators_need_assumption1() {
        let d = dist(&[(0.1, 0.5), (0.9, 0.5)]);
        let s = scenario(2.0, 5.0, 8.0, 10.0);
        assert!(matches!(
            decision_indicators(&d, &s, &profile(2.0, 0.8, 0.8, 1.0)),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn four_outcome_interleaving() {
        let d = dist(&[(0.1, 0.25), (0.5, 0.25), (0.7, 0.25), (0.95, 0.25)]);
        let s = scenario(2.0, 5.0, 8.0, 10.0);
        let ind = decision_indicators(&d, &s, &profile(1.2, 0.6, 0.9, 1.0)).unwrap();
        assert_eq!(ind.pivot(), 0);
        let mut checked = 0;
        for j in ind.h_range() {
            let (m, h, m_next) = (ind.m(j).unwrap(), ind.h(j).unwrap(), ind.m(j + 1).unwrap());
            if m.clamped || h.clamped || m_next.clamped {
                continue;
            }
            assert!(
                m.value < h.value && h.value < m_next.value,
                "{m:?} {h:?} {m_next:?}"
            );
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn g_sign_matches_indicators() {
        let d = dist(&[(0.1, 0.4), (0.5, 0.3), (0.9, 0.3)]);
        let p = profile(1.5, 0.5, 0.9, 1.0);
        for demand in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0] {
            let s = scenario(2.0, 5.0, 8.0, demand);
            let ind = decision_indicators(&d, &s, &p).unwrap();
            let j = 1;
            let (m, h) = (ind.m(j).unwrap().value, ind.h(j).unwrap().value);
            let at_left = g(j, demand / 0.9, &d, &s, &p).unwrap();
            let at_right = g(j, demand / 0.5, &d, &s, &p).unwrap();
            assert_eq!(at_left > 0.0, demand < h, "D = {demand}");
            assert_eq!(at_right > 0.0, demand < m, "D = {demand}");
            // strictly decreasing on the segment
            let pts: Vec<f64> = (0..=50)
                .map(|k| demand / 0.9 + (demand / 0.5 - demand / 0.9) * k as f64 / 50.0)
                .map(|b| g(j, b, &d, &s, &p).unwrap())
                .collect();
            assert!(pts.windows(2).all(|w| w[1] < w[0]));
        }
    }

    fn root_instance() -> (SensingDistribution, MarketScenario, RiskProfile) {
        let d = dist(&[(0.1, 0.3), (0.7, 0.6), (0.9, 0.1)]);
        let p = profile(1.5, 0.5, 0.9, 1.0);
        let probe = decision_indicators(&d, &scenario(2.0, 5.0, 8.0, 1.0), &p).unwrap();
        let (m, h) = (probe.m(1).unwrap().value, probe.h(1).unwrap().value);
        // indicators do not depend on D, so any D in (M, H) lands in row 2
        let demand = (m * h).sqrt();
        (d, scenario(2.0, 5.0, 8.0, demand), p)
    }

    #[test]
    fn g_root_matches_brute_force() {
        let (d, s, p) = root_instance();
        let demand = s.demand();
        let root = g_root(1, &d, &s, &p, 1e-9 * demand).unwrap();
        assert!(root > demand / 0.9 && root < demand / 0.7);
        let u = |b| pt::pt_utility(b, &s, &d, &p, &ReferencePoint::RiskFree);
        let hi = s.sensing_bound();
        let brute = brute_argmax(u, hi, (hi / (1e-4 * demand)).ceil() as usize);
        assert!((root - brute).abs() <= 2e-4 * demand, "{root} vs {brute}");

        let coarse = g_root(1, &d, &s, &p, 1e-4 * demand).unwrap();
        let fine = g_root(1, &d, &s, &p, 0.5e-4 * demand).unwrap();
        assert!((coarse - fine).abs() <= 1e-4 * demand);

        let solved = solve_pt_riskfree(&s, &d, &p).unwrap();
        assert!(
            matches!(&solved.provenance, Provenance::ClosedForm(l) if l.starts_with("pt:root"))
        );
        assert!((solved.b_s_star - root).abs() < 1e-6 * demand);
    }

    #[test]
    fn g_root_rejects_missing_bracket() {
        let d = dist(&[(0.1, 0.4), (0.5, 0.3), (0.9, 0.3)]);
        let p = profile(1.5, 0.5, 0.9, 1.0);
        let s = scenario(2.0, 5.0, 8.0, 1e4);
        assert!(matches!(
            g_root(1, &d, &s, &p, 1e-3),
            Err(Error::NoSignChange { .. })
        ));
        assert!(g(0, 1.0, &d, &s, &p).is_err());
    }

    #[test]
    fn pt_solution_beats_dense_grid() {
        let d = dist(&[(0.1, 0.2), (0.35, 0.3), (0.6, 0.3), (0.9, 0.2)]);
        let p = profile(1.8, 0.55, 0.85, 0.7);
        for demand in [0.05, 0.5, 2.0, 10.0, 40.0] {
            let s = scenario(1.5, 5.0, 9.0, demand);
            let sol = solve_pt_riskfree(&s, &d, &p).unwrap();
            let u = |b| pt::pt_utility(b, &s, &d, &p, &ReferencePoint::RiskFree);
            let hi = s.sensing_bound();
            for k in 0..=20_000 {
                let b = hi * k as f64 / 20_000.0;
                assert!(
                    u(b) <= sol.utility + 1e-9 * (1.0 + sol.utility.abs()),
                    "D={demand} b={b}"
                );
            }
        }
    }

    #[test]
    fn loss_penalty_and_cost_reduce_sensing() {
        let d = dist(&[(0.1, 0.4), (0.5, 0.3), (0.9, 0.3)]);
        let s = scenario(2.0, 5.0, 8.0, 10.0);
        let mut prev = f64::INFINITY;
        for lambda in [1.0, 1.5, 2.0, 3.0, 5.0] {
            let b = solve_pt_riskfree(&s, &d, &profile(lambda, 0.5, 0.9, 1.0))
                .unwrap()
                .b_s_star;
            assert!(b <= prev + 1e-12);
            prev = b;
        }
        let mut prev = f64::INFINITY;
        for cs in [1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
            let b = solve_pt_riskfree(
                &scenario(cs, 5.0, 8.0, 10.0),
                &d,
                &profile(1.5, 0.5, 0.9, 1.0),
            )
            .unwrap()
            .b_s_star;
            assert!(b <= prev + 1e-12);
            prev = b;
        }
    }

    #[test]
    fn eut_fixture() {
        let d = dist(&[(0.2, 0.5), (0.8, 0.5)]);
        let s = scenario(2.0, 5.0, 8.0, 10.0);
        let sol = solve_eut(&s, &d);
        assert!((sol.b_s_star - 12.5).abs() < 1e-12);
        assert!((sol.utility - sol.expected_profit).abs() < 1e-12);
        // expected profit is piecewise linear; brute force over it
        let e = |b| crate::market::tradeoff_metrics(b, &s, &d).expected;
        let brute = brute_argmax(e, s.sensing_bound(), 250_000);
        assert!((brute - 12.5).abs() <= 1e-4);
    }

    #[test]
    fn eut_rows() {
        let d = dist(&[(0.2, 0.5), (0.8, 0.5)]);
        // c_l/c_s = 1.6 ≤ 1/E[α] = 2
        let sol = solve_eut(&scenario(2.5, 4.0, 8.0, 10.0), &d);
        assert_eq!(sol.b_s_star, 0.0);
        assert_eq!(sol.per_outcome[0].b_l_star, 10.0);
        // c_l/c_s = 12 ≥ 1/(α_1 p_1) = 10
        let sol = solve_eut(&scenario(0.5, 6.0, 8.0, 10.0), &d);
        assert!((sol.b_s_star - 50.0).abs() < 1e-12);
        // exact tie at the top threshold takes the smaller decision
        let sol = solve_eut(&scenario(0.5, 5.0, 8.0, 10.0), &d);
        assert!((sol.b_s_star - 12.5).abs() < 1e-12);
        // certain full yield
        let certain = dist(&[(1.0, 1.0)]);
        let sol = solve_eut(&scenario(2.0, 5.0, 8.0, 10.0), &certain);
        assert_eq!(sol.b_s_star, 10.0);
    }

    #[test]
    fn binary_riskfree_thresholds() {
        let p = profile(1.0, 0.5, 0.5, 1.0);
        assert!((binary_riskfree_threshold(0.5, &p).unwrap() - 2.0).abs() < 1e-12);
        let sol = solve_binary_riskfree(&scenario(2.0, 5.0, 8.0, 10.0), 0.5, &p).unwrap();
        assert_eq!(sol.b_s_star, 10.0);
        let sol = solve_binary_riskfree(&scenario(3.0, 5.0, 8.0, 10.0), 0.5, &p).unwrap();
        assert_eq!(sol.b_s_star, 0.0);
        // undistorted, linear: 1/p2
        let eut = RiskProfile::eut();
        for p1 in [0.1, 0.3, 0.8] {
            let r = binary_riskfree_threshold(p1, &eut).unwrap();
            assert!((r - 1.0 / (1.0 - p1)).abs() < 1e-12);
        }
        assert!(solve_binary_riskfree(
            &scenario(2.0, 5.0, 8.0, 10.0),
            0.5,
            &profile(1.0, 0.5, 0.6, 1.0)
        )
        .is_err());
    }

    #[test]
    fn binary_riskfree_matches_brute_force_with_loss_penalty() {
        for (lambda, cs) in [(2.25, 2.0), (2.25, 1.0), (1.5, 1.5), (3.0, 0.6)] {
            let s = scenario(cs, 5.0, 8.0, 10.0);
            let p = profile(lambda, 0.7, 0.7, 0.8);
            let sol = solve_binary_riskfree(&s, 0.4, &p).unwrap();
            let d = SensingDistribution::binary(0.4).unwrap();
            let u = |b| pt::pt_utility(b, &s, &d, &p, &ReferencePoint::RiskFree);
            let brute = brute_argmax(u, s.sensing_bound(), 100_000);
            assert!(
                (sol.b_s_star - brute).abs() < 1e-3,
                "λ={lambda} c_s={cs}: {} vs {brute}",
                sol.b_s_star
            );
        }
    }

    #[test]
    fn refpoint_low_pinned_instance() {
        // π=8, c_l=5, c_s=2, D=10, p1=0.5, β=γ=0.6, λ=2, μ=1
        let s = scenario(2.0, 5.0, 8.0, 10.0);
        let p = profile(2.0, 0.6, 0.6, 1.0);
        let sol = solve_binary_refpoint(&s, 0.5, &p, &ReferencePoint::Low).unwrap();
        let d = SensingDistribution::binary(0.5).unwrap();
        let u = |b| pt::pt_utility(b, &s, &d, &p, &ReferencePoint::Low);
        let brute = brute_argmax(u, 10.0, 10_000);
        assert!(
            (sol.b_s_star - brute).abs() <= 2e-3,
            "{} vs {brute}",
            sol.b_s_star
        );
        // first-order condition: 2(2(10 − B))^{-0.4} = 3(3B + 20)^{-0.4}
        let b = sol.b_s_star;
        let lhs = 2.0 * (2.0 * (10.0 - b)).powf(-0.4);
        let rhs = 3.0 * (3.0 * b + 20.0).powf(-0.4);
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn refpoint_high_rows() {
        let s = scenario(2.0, 5.0, 8.0, 10.0);
        let p = profile(2.0, 0.6, 0.6, 1.0);
        // ratio 2.5 ≥ 1 + 1 → sense the demand
        let sol = solve_binary_refpoint(&s, 0.5, &p, &ReferencePoint::High).unwrap();
        assert_eq!(sol.b_s_star, 10.0);
        // ratio below 1 + w1/w2: the stationary point is a minimum
        let s = scenario(3.0, 4.0, 8.0, 10.0);
        let sol = solve_binary_refpoint(&s, 0.5, &p, &ReferencePoint::High).unwrap();
        let d = SensingDistribution::binary(0.5).unwrap();
        let u = |b| pt::pt_utility(b, &s, &d, &p, &ReferencePoint::High);
        let stat = high_reference_stationary_point(&s, 0.5, &p)
            .unwrap()
            .unwrap();
        assert!(u(stat) < u(0.0) && u(stat) < u(10.0));
        let brute = brute_argmax(u, s.sensing_bound(), 100_000);
        assert!((sol.b_s_star - brute).abs() < 1e-3);
        assert!(solve_binary_refpoint(&s, 0.5, &p, &ReferencePoint::RiskFree).is_err());
    }

    #[test]
    fn dispatcher_routes() {
        let s = scenario(2.0, 5.0, 8.0, 10.0);
        let bin = SensingDistribution::binary(0.5).unwrap();
        let tol = 1e-8;
        let r = solve(
            &s,
            &bin,
            &RiskProfile::eut(),
            &ReferencePoint::RiskFree,
            tol,
        )
        .unwrap();
        assert!(
            matches!(&r.provenance, Provenance::ClosedForm(l) if l.starts_with("risk-neutral"))
        );
        let r = solve(
            &s,
            &bin,
            &profile(1.0, 0.5, 0.5, 0.7),
            &ReferencePoint::RiskFree,
            tol,
        )
        .unwrap();
        assert!(
            matches!(&r.provenance, Provenance::ClosedForm(l) if l.starts_with("binary-risk-free"))
        );
        let r = solve(
            &s,
            &bin,
            &profile(1.0, 0.5, 0.5, 0.7),
            &ReferencePoint::Low,
            tol,
        )
        .unwrap();
        assert!(matches!(&r.provenance, Provenance::ClosedForm(l) if l.starts_with("binary-low")));
        let r = solve(
            &s,
            &bin,
            &profile(1.0, 0.5, 0.8, 1.0),
            &ReferencePoint::RiskFree,
            tol,
        )
        .unwrap();
        assert!(matches!(&r.provenance, Provenance::ClosedForm(l) if l.starts_with("pt:")));
        assert!(solve(
            &s,
            &bin,
            &profile(1.0, 0.9, 0.8, 1.0),
            &ReferencePoint::RiskFree,
            tol
        )
        .is_err());
        assert!(solve(
            &s,
            &bin,
            &profile(1.0, 0.5, 0.8, 1.0),
            &ReferencePoint::High,
            tol
        )
        .is_err());
    }
}
