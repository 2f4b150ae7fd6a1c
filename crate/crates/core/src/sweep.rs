//! Parameter sweeps over one or two model parameters.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::closed_form::{
    self, binary_refpoint_threshold, binary_riskfree_threshold, DEFAULT_REL_TOL,
};
use crate::config::ScenarioDocument;
use crate::error::{Error, Result};
use crate::market::{MarketScenario, SensingDistribution, SolveResult};
use crate::oracle::{self, OracleConfig};
use crate::pt::{ReferencePoint, RiskProfile};
use crate::report::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Lambda,
    Beta,
    Gamma,
    Mu,
    Price,
    LeasingCost,
    SensingCost,
    Demand,
    /// Probability of the zero-yield outcome; replaces the distribution with
    /// the binary {0, 1} one.
    P1,
}

impl Param {
    pub const ALL: [Param; 9] = [
        Param::Lambda,
        Param::Beta,
        Param::Gamma,
        Param::Mu,
        Param::Price,
        Param::LeasingCost,
        Param::SensingCost,
        Param::Demand,
        Param::P1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Lambda => "lambda",
            Param::Beta => "beta",
            Param::Gamma => "gamma",
            Param::Mu => "mu",
            Param::Price => "pi",
            Param::LeasingCost => "c_l",
            Param::SensingCost => "c_s",
            Param::Demand => "demand",
            Param::P1 => "p1",
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Param::ALL.iter().map(|p| p.name()).collect();
                format!("unknown axis '{s}' (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(
        param: Param,
        from: f64,
        to: f64,
        steps: usize,
    ) -> std::result::Result<Self, String> {
        if steps < 2 {
            return Err(format!(
                "axis '{}' needs steps >= 2, got {steps}",
                param.name()
            ));
        }
        if !(from.is_finite() && to.is_finite() && from < to) {
            return Err(format!(
                "axis '{}' needs from < to, got {from} and {to}",
                param.name()
            ));
        }
        Ok(Self {
            param,
            from,
            to,
            steps,
        })
    }

    /// Evenly spaced values, snapped to 12 significant digits so each
    /// evaluated point is exactly the one written to CSV.
    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|k| (self.from * (last - k) as f64 + self.to * k as f64) / last as f64)
            .map(|v| format_number(v).parse().expect("formatted number parses"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Closed,
    Oracle,
    Both,
}

impl SolverChoice {
    pub fn name(self) -> &'static str {
        match self {
            SolverChoice::Closed => "closed",
            SolverChoice::Oracle => "oracle",
            SolverChoice::Both => "both",
        }
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "closed" => Ok(SolverChoice::Closed),
            "oracle" => Ok(SolverChoice::Oracle),
            "both" => Ok(SolverChoice::Both),
            other => Err(format!(
                "unknown solver '{other}' (expected closed, oracle or both)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    BsStar,
    ExpectedProfit,
    MinPossible,
    MaxPossible,
    ThresholdR,
    Utility,
}

impl Quantity {
    pub const ALL: [Quantity; 6] = [
        Quantity::BsStar,
        Quantity::ExpectedProfit,
        Quantity::MinPossible,
        Quantity::MaxPossible,
        Quantity::ThresholdR,
        Quantity::Utility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::BsStar => "b_s_star",
            Quantity::ExpectedProfit => "expected_profit",
            Quantity::MinPossible => "min_possible",
            Quantity::MaxPossible => "max_possible",
            Quantity::ThresholdR => "threshold_r",
            Quantity::Utility => "utility",
        }
    }

    fn extract(self, r: &SolveResult) -> Option<f64> {
        match self {
            Quantity::BsStar => Some(r.b_s_star),
            Quantity::ExpectedProfit => Some(r.expected_profit),
            Quantity::MinPossible => Some(r.min_possible_profit),
            Quantity::MaxPossible => Some(r.max_possible_profit),
            Quantity::Utility => Some(r.utility),
            Quantity::ThresholdR => None,
        }
    }
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Quantity::ALL.iter().map(|q| q.name()).collect();
                format!(
                    "unknown output '{s}' (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioDocument,
    pub axes: Vec<Axis>,
    pub solver: SolverChoice,
    pub outputs: Vec<Quantity>,
    /// Oracle grid step in Hz; `None` means `1e-4 · D` per point.
    pub grid_step: Option<f64>,
    /// Closed-form bisection width in Hz; `None` means `1e-9 · D` per point.
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    /// One entry per requested quantity; `None` when unavailable.
    pub values: Vec<Option<f64>>,
    /// `ok`, or a short reason the point is incomplete.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Value of a quantity column in a row, by column name.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        let axes = self.rows.first().map_or(0, |r| r.axis_values.len());
        let col = self.column(name)?;
        let r = &self.rows[row];
        if col < axes {
            Some(r.axis_values[col])
        } else {
            r.values.get(col - axes).copied().flatten()
        }
    }
}

/// Critical c_l/c_s above which a binary-outcome operator senses the whole
/// demand. Risk-free reference: (λ·w(p1)/w(p2))^{1/β} + 1; high reference:
/// 1 + w(p1)/w(p2).
pub fn sensing_threshold(p1: f64, profile: &RiskProfile, rp: &ReferencePoint) -> Result<f64> {
    match rp {
        ReferencePoint::RiskFree => binary_riskfree_threshold(p1, profile),
        ReferencePoint::High => binary_refpoint_threshold(p1, profile),
        other => Err(Error::InvalidReference(format!(
            "sensing threshold is defined for risk_free and high, not {}",
            other.kind_name()
        ))),
    }
}

fn apply(doc: &mut ScenarioDocument, param: Param, v: f64) -> Result<()> {
    let s = doc.scenario;
    let p = doc.profile;
    match param {
        Param::Lambda => doc.profile = p.with_lambda(v)?,
        Param::Beta => doc.profile = p.with_beta(v)?,
        Param::Gamma => doc.profile = p.with_gamma(v)?,
        Param::Mu => doc.profile = p.with_mu(v)?,
        Param::Price => {
            doc.scenario = MarketScenario::new(s.sensing_cost(), s.leasing_cost(), v, s.demand())?
        }
        Param::LeasingCost => {
            doc.scenario = MarketScenario::new(s.sensing_cost(), v, s.price(), s.demand())?
        }
        Param::SensingCost => {
            doc.scenario = MarketScenario::new(v, s.leasing_cost(), s.price(), s.demand())?
        }
        Param::Demand => {
            doc.scenario = MarketScenario::new(s.sensing_cost(), s.leasing_cost(), s.price(), v)?
        }
        Param::P1 => doc.dist = SensingDistribution::binary(v)?,
    }
    Ok(())
}

/// Status text must stay on one line.
fn reason(e: &Error) -> String {
    e.to_string().replace(['\n', '\r'], " ")
}

fn solve_point(
    spec: &SweepSpec,
    doc: &ScenarioDocument,
) -> std::result::Result<(SolveResult, String), String> {
    let ScenarioDocument {
        scenario,
        dist,
        profile,
        reference,
    } = doc;
    let tol = spec.tol.unwrap_or(DEFAULT_REL_TOL * scenario.demand());
    let config = OracleConfig {
        grid_step: spec.grid_step,
        ..OracleConfig::default()
    };
    let oracle = || oracle::maximize_utility(scenario, dist, profile, reference, &config);
    match spec.solver {
        SolverChoice::Closed => closed_form::solve(scenario, dist, profile, reference, tol)
            .map(|r| (r, "ok".to_string()))
            .map_err(|e| format!("skipped:{}", reason(&e))),
        SolverChoice::Oracle => oracle()
            .map(|r| (r, "ok".to_string()))
            .map_err(|e| format!("skipped:{}", reason(&e))),
        SolverChoice::Both => {
            let o = oracle().map_err(|e| format!("skipped:{}", reason(&e)))?;
            match closed_form::solve(scenario, dist, profile, reference, tol) {
                Err(e) => Ok((o, format!("oracle-only:{}", reason(&e)))),
                Ok(c) => {
                    let step = config.step_for(scenario);
                    let report = oracle::verify(&c, &o, 2.0 * step, 1e-8)
                        .map_err(|e| format!("skipped:{}", reason(&e)))?;
                    let status = if report.passed {
                        "ok".to_string()
                    } else {
                        format!(
                            "mismatch:delta_bs={:e} delta_u={:e}",
                            report.delta_bs, report.delta_u
                        )
                    };
                    Ok((c, status))
                }
            }
        }
    }
}

fn eval_point(spec: &SweepSpec, axis_values: &[f64]) -> SweepRow {
    let mut values = vec![None; spec.outputs.len()];
    let mut doc = spec.base.clone();
    for (axis, &v) in spec.axes.iter().zip(axis_values) {
        if let Err(e) = apply(&mut doc, axis.param, v) {
            return SweepRow {
                axis_values: axis_values.to_vec(),
                values,
                status: format!("skipped:{}", reason(&e)),
            };
        }
    }

    let mut status = "ok".to_string();
    let mut note = |s: String| {
        if status == "ok" {
            status = s;
        }
    };
    if spec.outputs.iter().any(|q| *q != Quantity::ThresholdR) {
        match solve_point(spec, &doc) {
            Ok((r, s)) => {
                for (slot, q) in values.iter_mut().zip(&spec.outputs) {
                    if *q != Quantity::ThresholdR {
                        *slot = q.extract(&r);
                    }
                }
                note(s);
            }
            Err(s) => note(s),
        }
    }
    if let Some(k) = spec.outputs.iter().position(|q| *q == Quantity::ThresholdR) {
        let r = match doc.dist.binary_p1() {
            Some(p1) => sensing_threshold(p1, &doc.profile, &doc.reference).map_err(|e| reason(&e)),
            None => Err("threshold_r needs the binary {0, 1} distribution".to_string()),
        };
        match r {
            Ok(v) => values[k] = Some(v),
            Err(e) => note(format!("skipped:{e}")),
        }
    }
    SweepRow {
        axis_values: axis_values.to_vec(),
        values,
        status,
    }
}

fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        let vals = axis.values();
        acc.into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// Evaluates every grid point on the current rayon pool. Rows come out in
/// row-major order over the axes whatever the scheduling.
pub fn run_sweep(spec: &SweepSpec) -> SweepTable {
    let points = grid(&spec.axes);
    let rows = points.par_iter().map(|p| eval_point(spec, p)).collect();
    let mut columns: Vec<String> = spec
        .axes
        .iter()
        .map(|a| a.param.name().to_string())
        .collect();
    columns.extend(spec.outputs.iter().map(|q| q.name().to_string()));
    columns.push("status".into());
    SweepTable { columns, rows }
}

/// [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(spec: &SweepSpec, workers: usize) -> Result<SweepTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| run_sweep(spec)))
}

impl fmt::Display for SweepRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} -> {:?} [{}]",
            self.axis_values, self.values, self.status
        )
    }
}
