//! Run outputs: trace and safety-surface tables, the decisions log, the
//! metrics summary and the echoed effective config. Every writer has a
//! matching reader so outputs can be loaded back without loss.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use oga_core::control::{BandScale, LrLaw};
use oga_core::sim::{
    metrics, BreachKind, Integrator, NeighborVelocity, SimConfig, SimTrace, SupervisorPolicy,
    Termination,
};
use oga_core::Mode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ReadError {
    pub line: usize,
    pub message: String,
}

fn read_err(line: usize, message: impl Into<String>) -> ReadError {
    ReadError {
        line,
        message: message.into(),
    }
}

/// `t,x0,y0,mode0,goal0,...,V_total,min_clearance`
pub fn trace_header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 0..n {
        write!(h, ",x{i},y{i},mode{i},goal{i}").unwrap();
    }
    h.push_str(",V_total,min_clearance");
    h
}

pub fn write_trace_csv(trace: &SimTrace) -> String {
    let n = trace.states.first().map_or(0, Vec::len);
    let mut out = trace_header(n);
    out.push('\n');
    for k in 0..trace.times.len() {
        write!(out, "{}", trace.times[k]).unwrap();
        for a in &trace.states[k] {
            write!(
                out,
                ",{},{},{},{}",
                a.position.x,
                a.position.y,
                a.mode.as_str(),
                a.goal_index
            )
            .unwrap();
        }
        writeln!(
            out,
            ",{},{}",
            trace.lyapunov_total[k], trace.min_clearance[k]
        )
        .unwrap();
    }
    out
}

/// One agent in one trace row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceAgent {
    pub x: f64,
    pub y: f64,
    pub mode: Mode,
    pub goal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub agents: Vec<TraceAgent>,
    pub v_total: f64,
    pub min_clearance: f64,
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, col: &str) -> Result<T, ReadError> {
    tok.parse()
        .map_err(|_| read_err(line, format!("column {col}: cannot parse {tok:?}")))
}

pub fn read_trace_csv(text: &str) -> Result<Vec<TraceRow>, ReadError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| read_err(1, "missing header"))?;
    let cols = header.split(',').count();
    if cols < 3 || (cols - 3) % 4 != 0 {
        return Err(read_err(1, "malformed header"));
    }
    let n = (cols - 3) / 4;
    if header != trace_header(n) {
        return Err(read_err(1, "unexpected column names"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != cols {
            return Err(read_err(
                ln,
                format!("expected {cols} columns, found {}", toks.len()),
            ));
        }
        let mut agents = Vec::with_capacity(n);
        for a in 0..n {
            let base = 1 + 4 * a;
            let mode = match toks[base + 2] {
                "OGA" => Mode::Oga,
                "LR" => Mode::Lr,
                other => return Err(read_err(ln, format!("unknown mode {other:?}"))),
            };
            agents.push(TraceAgent {
                x: parse_num(toks[base], ln, &format!("x{a}"))?,
                y: parse_num(toks[base + 1], ln, &format!("y{a}"))?,
                mode,
                goal: parse_num(toks[base + 3], ln, &format!("goal{a}"))?,
            });
        }
        rows.push(TraceRow {
            t: parse_num(toks[0], ln, "t")?,
            agents,
            v_total: parse_num(toks[cols - 2], ln, "V_total")?,
            min_clearance: parse_num(toks[cols - 1], ln, "min_clearance")?,
        });
    }
    Ok(rows)
}

/// Safety surface and `W` per agent: `t,q0,W0,q1,W1,...`.
pub fn write_surface_csv(trace: &SimTrace) -> String {
    let n = trace.q.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 0..n {
        write!(out, ",q{i},W{i}").unwrap();
    }
    out.push('\n');
    for k in 0..trace.q.len() {
        write!(out, "{}", trace.times[k]).unwrap();
        for i in 0..n {
            write!(out, ",{},{}", trace.q[k][i], trace.w[k][i]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One row per decision: `time,members,old_cost,new_cost,changed`, with
/// members separated by spaces.
pub fn write_decisions(trace: &SimTrace) -> String {
    let mut out = String::from("time,members,old_cost,new_cost,changed\n");
    for d in &trace.assignments {
        let members: Vec<String> = d.members.iter().map(|m| m.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            d.time,
            members.join(" "),
            d.old_cost,
            d.new_cost,
            d.changed
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRow {
    pub time: f64,
    pub members: Vec<usize>,
    pub old_cost: f64,
    pub new_cost: f64,
    pub changed: bool,
}

pub fn read_decisions(text: &str) -> Result<Vec<DecisionRow>, ReadError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "time,members,old_cost,new_cost,changed")) => {}
        _ => return Err(read_err(1, "unexpected header")),
    }
    lines
        .map(|(i, line)| {
            let ln = i + 1;
            let toks: Vec<&str> = line.split(',').collect();
            if toks.len() != 5 {
                return Err(read_err(ln, "expected 5 columns"));
            }
            Ok(DecisionRow {
                time: parse_num(toks[0], ln, "time")?,
                members: toks[1]
                    .split_whitespace()
                    .map(|m| parse_num(m, ln, "members"))
                    .collect::<Result<_, _>>()?,
                old_cost: parse_num(toks[2], ln, "old_cost")?,
                new_cost: parse_num(toks[3], ln, "new_cost")?,
                changed: parse_num(toks[4], ln, "changed")?,
            })
        })
        .collect()
}

fn breach_text(kind: &BreachKind) -> String {
    match kind {
        BreachKind::Collision(p) => format!("collision {} {}", p.0, p.1),
        BreachKind::Boundary(a) => format!("boundary {a}"),
    }
}

/// `key: value` lines in a fixed order.
pub fn write_metrics(trace: &SimTrace) -> String {
    let m = metrics(trace);
    let min_interval = m
        .switch_intervals
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k}: {v}").unwrap();
    kv("termination", trace.termination.label().to_string());
    if let Termination::Breach { time, kind } = &trace.termination {
        kv("breach_time", time.to_string());
        kv("breach", breach_text(kind));
    }
    kv(
        "seed",
        trace
            .seed
            .map_or_else(|| "none".to_string(), |s| s.to_string()),
    );
    kv("dt", trace.dt.to_string());
    kv("final_time", m.final_time.to_string());
    kv("steps", (trace.times.len() - 1).to_string());
    kv("total_path_length", m.total_path_length.to_string());
    kv("lr_fraction", m.lr_fraction.to_string());
    kv("decision_count", m.decision_count.to_string());
    kv("swap_count", m.swap_count.to_string());
    kv("mode_switch_count", m.mode_switch_count.to_string());
    kv("min_switch_interval", min_interval.to_string());
    kv("min_clearance", m.min_clearance.to_string());
    kv("final_lyapunov", m.final_lyapunov.to_string());
    kv("flagged_steps", trace.flags.len().to_string());
    out
}

pub fn read_metrics(text: &str) -> Result<BTreeMap<String, String>, ReadError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            line.split_once(": ")
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| read_err(i + 1, "expected `key: value`"))
        })
        .collect()
}

/// Simulation settings as echoed next to the outputs of a run. Together with
/// the echoed scenario this reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveConfig {
    /// Where the scenario came from: a path, or `generated`.
    pub scenario_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub dt: f64,
    pub max_time: f64,
    pub convergence_tol: f64,
    pub aggregation_power: f64,
    pub q_band: f64,
    pub integrator: Integrator,
    pub neighbor_velocity: NeighborVelocity,
    pub supervisor: SupervisorPolicy,
    pub lr_law: LrLaw,
    pub band: BandScale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_step_fraction: Option<f64>,
}

impl EffectiveConfig {
    pub fn new(
        source: String,
        seed: Option<u64>,
        config: &SimConfig,
        aggregation_power: f64,
        q_band: f64,
    ) -> Self {
        Self {
            scenario_source: source,
            seed,
            dt: config.dt,
            max_time: config.max_time,
            convergence_tol: config.convergence_tol,
            aggregation_power,
            q_band,
            integrator: config.integrator,
            neighbor_velocity: config.neighbor_velocity,
            supervisor: config.supervisor,
            lr_law: config.settings.law,
            band: config.settings.band,
            stall_ratio: config.settings.stall_ratio,
            lr_step_fraction: config.lr_step_fraction,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are representable in TOML")
    }
}
