//! Plain-text scenario and sweep documents.
//!
//! ```text
//! # comment
//! [scenario]
//! pi = 8
//! c_l = 5
//! c_s = 2
//! demand = 10
//!
//! [distribution]
//! outcome = 0.2, 0.5
//! outcome = 0.8, 0.5
//!
//! [profile]
//! lambda = 2
//! beta = 0.5
//! gamma = 0.8
//! mu = 1
//!
//! [reference]
//! kind = risk_free      # risk_free | high | low | custom
//! ```
//!
//! Sweep specs add a `[sweep]` section with `solver`, `outputs`, optional
//! `grid_step` and `tol`, and one or two `axis = name, from, to, steps` lines.

use std::fmt::Write as _;

use thiserror::Error;

use crate::market::{MarketScenario, SensingDistribution};
use crate::pt::{ReferencePoint, RiskProfile};
use crate::sweep::{Axis, Param, Quantity, SolverChoice, SweepSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct DocError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, DocError> {
    Err(DocError {
        line,
        message: message.into(),
    })
}

/// A complete model: market, yield distribution, preferences, benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDocument {
    pub scenario: MarketScenario,
    pub dist: SensingDistribution,
    pub profile: RiskProfile,
    pub reference: ReferencePoint,
}

#[derive(Debug)]
struct Entry {
    line: usize,
    key: String,
    value: String,
}

#[derive(Debug)]
struct Section {
    line: usize,
    name: String,
    entries: Vec<Entry>,
}

const SECTIONS: [&str; 5] = ["scenario", "distribution", "profile", "reference", "sweep"];

fn split_sections(text: &str) -> Result<Vec<Section>, DocError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(line, format!("malformed section header '{content}'"));
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return err(line, format!("unknown section [{name}]"));
            }
            if sections.iter().any(|s| s.name == name) {
                return err(line, format!("duplicate section [{name}]"));
            }
            sections.push(Section {
                line,
                name: name.to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return err(line, format!("expected 'key = value', got '{content}'"));
        };
        let Some(section) = sections.last_mut() else {
            return err(line, "entry before any section header");
        };
        section.entries.push(Entry {
            line,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

fn number(entry: &Entry, text: &str) -> Result<f64, DocError> {
    match text.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(
            entry.line,
            format!("invalid number '{}' for {}", text.trim(), entry.key),
        ),
    }
}

/// Reads a section whose keys are all single numbers.
fn numeric_keys<const N: usize>(section: &Section, keys: [&str; N]) -> Result<[f64; N], DocError> {
    let mut out = [None; N];
    for entry in &section.entries {
        let Some(k) = keys.iter().position(|&k| k == entry.key) else {
            return err(
                entry.line,
                format!("unknown key '{}' in [{}]", entry.key, section.name),
            );
        };
        if out[k].is_some() {
            return err(entry.line, format!("duplicate key '{}'", entry.key));
        }
        out[k] = Some(number(entry, &entry.value)?);
    }
    let mut values = [0.0; N];
    for (k, v) in out.iter().enumerate() {
        match v {
            Some(v) => values[k] = *v,
            None => {
                return err(
                    section.line,
                    format!("missing key '{}' in [{}]", keys[k], section.name),
                )
            }
        }
    }
    Ok(values)
}

fn find<'a>(sections: &'a [Section], name: &str) -> Option<&'a Section> {
    sections.iter().find(|s| s.name == name)
}

fn require<'a>(sections: &'a [Section], name: &str) -> Result<&'a Section, DocError> {
    find(sections, name).ok_or_else(|| DocError {
        line: 0,
        message: format!("missing section [{name}]"),
    })
}

fn parse_model(sections: &[Section]) -> Result<ScenarioDocument, DocError> {
    let sec = require(sections, "scenario")?;
    let [pi, cl, cs, demand] = numeric_keys(sec, ["pi", "c_l", "c_s", "demand"])?;
    let scenario =
        MarketScenario::new(cs, cl, pi, demand).or_else(|e| err(sec.line, e.to_string()))?;

    let sec = require(sections, "distribution")?;
    let mut outcomes = Vec::new();
    for entry in &sec.entries {
        if entry.key != "outcome" {
            return err(
                entry.line,
                format!("unknown key '{}' in [distribution]", entry.key),
            );
        }
        let Some((a, p)) = entry.value.split_once(',') else {
            return err(entry.line, "expected 'outcome = <alpha>, <prob>'");
        };
        let (alpha, prob) = (number(entry, a)?, number(entry, p)?);
        if !(0.0..=1.0).contains(&alpha) {
            return err(entry.line, format!("alpha out of [0,1]: {alpha}"));
        }
        if !(prob > 0.0 && prob <= 1.0) {
            return err(entry.line, format!("probability out of (0,1]: {prob}"));
        }
        if let Some(&(prev, _)) = outcomes.last() {
            if !(prev < alpha) {
                return err(
                    entry.line,
                    format!("alpha {alpha} must exceed the previous outcome's {prev}"),
                );
            }
        }
        outcomes.push((alpha, prob));
    }
    let dist = SensingDistribution::new(outcomes).or_else(|e| err(sec.line, e.to_string()))?;

    let sec = require(sections, "profile")?;
    let [lambda, beta, gamma, mu] = numeric_keys(sec, ["lambda", "beta", "gamma", "mu"])?;
    let profile =
        RiskProfile::new(lambda, beta, gamma, mu).or_else(|e| err(sec.line, e.to_string()))?;

    let reference = match find(sections, "reference") {
        None => ReferencePoint::RiskFree,
        Some(sec) => parse_reference(sec)?,
    };
    Ok(ScenarioDocument {
        scenario,
        dist,
        profile,
        reference,
    })
}

fn parse_reference(sec: &Section) -> Result<ReferencePoint, DocError> {
    let mut kind = None;
    let mut value = None;
    for entry in &sec.entries {
        match entry.key.as_str() {
            "kind" if kind.is_none() => kind = Some(entry),
            "value" if value.is_none() => value = Some((entry.line, number(entry, &entry.value)?)),
            "kind" | "value" => return err(entry.line, format!("duplicate key '{}'", entry.key)),
            other => return err(entry.line, format!("unknown key '{other}' in [reference]")),
        }
    }
    let Some(kind) = kind else {
        return err(sec.line, "missing key 'kind' in [reference]");
    };
    let rp = match kind.value.as_str() {
        "risk_free" => ReferencePoint::RiskFree,
        "high" => ReferencePoint::High,
        "low" => ReferencePoint::Low,
        "custom" => match value {
            Some((_, v)) => ReferencePoint::Custom(v),
            None => return err(kind.line, "custom reference needs 'value'"),
        },
        other => return err(kind.line, format!("unknown reference kind '{other}'")),
    };
    if let (Some((line, _)), false) = (value, matches!(rp, ReferencePoint::Custom(_))) {
        return err(
            line,
            format!(
                "'value' only applies to kind = custom, not {}",
                rp.kind_name()
            ),
        );
    }
    Ok(rp)
}

/// Parses a scenario document. A `[sweep]` section is rejected.
pub fn parse_scenario(text: &str) -> Result<ScenarioDocument, DocError> {
    let sections = split_sections(text)?;
    if let Some(sec) = find(&sections, "sweep") {
        return err(sec.line, "[sweep] is only valid in a sweep spec");
    }
    parse_model(&sections)
}

type SweepSection = (
    SolverChoice,
    Vec<Quantity>,
    Vec<Axis>,
    Option<f64>,
    Option<f64>,
);

fn parse_sweep_section(sec: &Section) -> Result<SweepSection, DocError> {
    let mut solver = None;
    let mut outputs = None;
    let mut axes = Vec::new();
    let mut grid_step = None;
    let mut tol = None;
    for entry in &sec.entries {
        let dup = || err(entry.line, format!("duplicate key '{}'", entry.key));
        match entry.key.as_str() {
            "solver" => {
                if solver.is_some() {
                    return dup();
                }
                solver = Some(
                    entry
                        .value
                        .parse::<SolverChoice>()
                        .or_else(|e| err(entry.line, e))?,
                );
            }
            "outputs" => {
                if outputs.is_some() {
                    return dup();
                }
                let list = entry
                    .value
                    .split(',')
                    .map(|q| q.trim().parse::<Quantity>().or_else(|e| err(entry.line, e)))
                    .collect::<Result<Vec<_>, _>>()?;
                outputs = Some(list);
            }
            "grid_step" => {
                if grid_step.is_some() {
                    return dup();
                }
                grid_step = Some(number(entry, &entry.value)?);
            }
            "tol" => {
                if tol.is_some() {
                    return dup();
                }
                tol = Some(number(entry, &entry.value)?);
            }
            "axis" => {
                let parts: Vec<&str> = entry.value.split(',').map(str::trim).collect();
                let [name, from, to, steps] = parts.as_slice() else {
                    return err(
                        entry.line,
                        "expected 'axis = <name>, <from>, <to>, <steps>'",
                    );
                };
                let param = name.parse::<Param>().or_else(|e| err(entry.line, e))?;
                let (from, to) = (number(entry, from)?, number(entry, to)?);
                let steps = steps
                    .parse::<usize>()
                    .or_else(|_| err(entry.line, format!("invalid step count '{steps}'")))?;
                let axis = Axis::new(param, from, to, steps).or_else(|e| err(entry.line, e))?;
                if axes.iter().any(|a: &Axis| a.param == param) {
                    return err(entry.line, format!("axis '{name}' given twice"));
                }
                axes.push(axis);
            }
            other => return err(entry.line, format!("unknown key '{other}' in [sweep]")),
        }
    }
    if axes.is_empty() || axes.len() > 2 {
        return err(
            sec.line,
            format!("a sweep needs one or two axes, got {}", axes.len()),
        );
    }
    let Some(outputs) = outputs else {
        return err(sec.line, "missing key 'outputs' in [sweep]");
    };
    if let Some(step) = grid_step {
        if !(step > 0.0) {
            return err(sec.line, format!("grid_step must be > 0, got {step}"));
        }
    }
    if let Some(t) = tol {
        if !(t > 0.0) {
            return err(sec.line, format!("tol must be > 0, got {t}"));
        }
    }
    Ok((
        solver.unwrap_or(SolverChoice::Closed),
        outputs,
        axes,
        grid_step,
        tol,
    ))
}

pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec, DocError> {
    let sections = split_sections(text)?;
    let base = parse_model(&sections)?;
    let sec = require(&sections, "sweep")?;
    let (solver, outputs, axes, grid_step, tol) = parse_sweep_section(sec)?;
    Ok(SweepSpec {
        base,
        axes,
        solver,
        outputs,
        grid_step,
        tol,
    })
}

/// True when the text has a `[sweep]` section.
pub fn is_sweep_spec(text: &str) -> bool {
    text.lines()
        .any(|l| l.split('#').next().unwrap_or("").trim() == "[sweep]")
}

fn write_model(out: &mut String, doc: &ScenarioDocument) {
    let s = &doc.scenario;
    let p = &doc.profile;
    let _ = writeln!(out, "[scenario]");
    let _ = writeln!(out, "pi = {}", s.price());
    let _ = writeln!(out, "c_l = {}", s.leasing_cost());
    let _ = writeln!(out, "c_s = {}", s.sensing_cost());
    let _ = writeln!(out, "demand = {}", s.demand());
    let _ = writeln!(out, "\n[distribution]");
    for (a, pr) in doc.dist.outcomes() {
        let _ = writeln!(out, "outcome = {a}, {pr}");
    }
    let _ = writeln!(out, "\n[profile]");
    let _ = writeln!(out, "lambda = {}", p.lambda());
    let _ = writeln!(out, "beta = {}", p.beta());
    let _ = writeln!(out, "gamma = {}", p.gamma());
    let _ = writeln!(out, "mu = {}", p.mu());
    let _ = writeln!(out, "\n[reference]");
    let _ = writeln!(out, "kind = {}", doc.reference.kind_name());
    if let ReferencePoint::Custom(v) = doc.reference {
        let _ = writeln!(out, "value = {v}");
    }
}

/// Canonical text for a scenario; reparses to identical values.
pub fn emit_scenario(doc: &ScenarioDocument) -> String {
    let mut out = String::new();
    write_model(&mut out, doc);
    out
}

pub fn emit_sweep_spec(spec: &SweepSpec) -> String {
    let mut out = String::new();
    write_model(&mut out, &spec.base);
    let _ = writeln!(out, "\n[sweep]");
    let _ = writeln!(out, "solver = {}", spec.solver.name());
    let names: Vec<&str> = spec.outputs.iter().map(|q| q.name()).collect();
    let _ = writeln!(out, "outputs = {}", names.join(", "));
    if let Some(step) = spec.grid_step {
        let _ = writeln!(out, "grid_step = {step}");
    }
    if let Some(tol) = spec.tol {
        let _ = writeln!(out, "tol = {tol}");
    }
    for axis in &spec.axes {
        let _ = writeln!(
            out,
            "axis = {}, {}, {}, {}",
            axis.param.name(),
            axis.from,
            axis.to,
            axis.steps
        );
    }
    out
}
