//! Brute-force maximization of the PT utility over the sensing decision.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{MarketScenario, Provenance, SensingDistribution, SolveResult};
use crate::pt::{ReferencePoint, RiskProfile, UtilityModel};

/// Grid step relative to demand when none is given.
pub const DEFAULT_REL_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Grid spacing in Hz; `None` means `1e-4 · D`.
    pub grid_step: Option<f64>,
    /// Golden-section iterations inside the best grid cell.
    pub refine_iters: usize,
    /// Upper end of the search; `None` means `D · c_l / c_s`.
    pub search_upper: Option<f64>,
    /// Additional points that are always evaluated.
    pub extra_candidates: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_step: None,
            refine_iters: 60,
            search_upper: None,
            extra_candidates: Vec::new(),
        }
    }
}

impl OracleConfig {
    pub fn with_grid_step(step: f64) -> Self {
        Self {
            grid_step: Some(step),
            ..Self::default()
        }
    }

    pub fn step_for(&self, scenario: &MarketScenario) -> f64 {
        self.grid_step
            .unwrap_or(DEFAULT_REL_STEP * scenario.demand())
    }

    pub fn upper_for(&self, scenario: &MarketScenario) -> f64 {
        self.search_upper
            .unwrap_or_else(|| scenario.sensing_bound())
    }

    fn validate(&self, scenario: &MarketScenario) -> Result<()> {
        let step = self.step_for(scenario);
        let upper = self.upper_for(scenario);
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid_step must be > 0, got {step}"
            )));
        }
        if !(upper.is_finite() && upper > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "search_upper must be > 0, got {upper}"
            )));
        }
        if upper / step > 1e9 {
            return Err(Error::InvalidConfig(format!(
                "grid of {upper}/{step} points is too large"
            )));
        }
        Ok(())
    }
}

/// Points the oracle evaluates: the uniform grid, every breakpoint D/α_i and
/// any extra candidates inside the search interval, sorted and deduplicated.
pub fn candidate_points(
    scenario: &MarketScenario,
    dist: &SensingDistribution,
    config: &OracleConfig,
) -> Vec<f64> {
    let step = config.step_for(scenario);
    let upper = config.upper_for(scenario);
    let n = (upper / step).floor() as usize;
    let mut pts: Vec<f64> = (0..=n)
        .map(|k| k as f64 * step)
        .filter(|&b| b <= upper)
        .collect();
    pts.push(upper);
    let d = scenario.demand();
    pts.extend(
        dist.alphas()
            .filter(|&a| a > 0.0)
            .map(|a| d / a)
            .filter(|&b| b <= upper),
    );
    pts.extend(
        config
            .extra_candidates
            .iter()
            .copied()
            .filter(|b| b.is_finite() && (0.0..=upper).contains(b)),
    );
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes the utility for any reference point and profile.
///
/// The returned utility is at least the maximum over the evaluated points;
/// ties go to the smallest sensing amount, independent of thread count.
pub fn maximize_utility(
    scenario: &MarketScenario,
    dist: &SensingDistribution,
    profile: &RiskProfile,
    rp: &ReferencePoint,
    config: &OracleConfig,
) -> Result<SolveResult> {
    config.validate(scenario)?;
    let model = UtilityModel::new(scenario, dist, profile, rp);
    let pts = candidate_points(scenario, dist, config);
    let values: Vec<f64> = pts.par_iter().map(|&b| model.eval(b)).collect();

    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let (mut bs, mut u) = (pts[best], values[best]);
    if config.refine_iters > 0 {
        let lo = pts[best.saturating_sub(1)];
        let hi = pts[(best + 1).min(pts.len() - 1)];
        if hi > lo {
            let (b, v) = golden_max(|b| model.eval(b), lo, hi, config.refine_iters);
            if v > u {
                bs = b;
                u = v;
            }
        }
    }
    debug_assert!(u >= values[best]);

    Ok(SolveResult::assemble(
        bs,
        scenario,
        dist,
        profile,
        rp,
        Provenance::NumericOracle(config.step_for(scenario)),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub delta_bs: f64,
    /// Oracle utility minus closed-form utility; positive means the closed
    /// form left utility on the table.
    pub delta_u: f64,
    pub passed: bool,
    pub closed_provenance: Provenance,
    pub oracle_provenance: Provenance,
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "verify: {}", if self.passed { "PASS" } else { "FAIL" })?;
        writeln!(f, "  |delta B_s| = {:e}", self.delta_bs)?;
        writeln!(f, "  delta U     = {:e}", self.delta_u)?;
        writeln!(f, "  closed      = {}", self.closed_provenance)?;
        write!(f, "  oracle      = {}", self.oracle_provenance)
    }
}

/// Compares a closed-form result with an oracle result for the same inputs.
///
/// Passes when |ΔB_s| ≤ `tol_bs` and the closed form's utility deficit is at
/// most `tol_u · (1 + |U_oracle|)`.
pub fn verify(
    closed: &SolveResult,
    oracle: &SolveResult,
    tol_bs: f64,
    tol_u: f64,
) -> Result<VerificationReport> {
    if closed.fingerprint != oracle.fingerprint {
        return Err(Error::InputMismatch);
    }
    let delta_bs = (closed.b_s_star - oracle.b_s_star).abs();
    let delta_u = oracle.utility - closed.utility;
    let passed = delta_bs <= tol_bs && delta_u <= tol_u * (1.0 + oracle.utility.abs());
    Ok(VerificationReport {
        delta_bs,
        delta_u,
        passed,
        closed_provenance: closed.provenance.clone(),
        oracle_provenance: oracle.provenance.clone(),
    })
}
