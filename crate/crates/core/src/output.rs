//! Deterministic run artifacts: columnar CSV for solutions, policies and
//! residuals, JSON for diagnostics and the manifest.

use std::io;
use std::path::Path;

use crate::ext_real::ExtReal;
use crate::operator::SolveReport;
use crate::program::DynamicProgram;

pub const SOLUTION_FILE: &str = "solution.csv";
pub const POLICY_FILE: &str = "policy.csv";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x == 0.0 {
        // fold -0 into 0
        "0".into()
    } else {
        format!("{x}")
    }
}

fn ext(x: ExtReal) -> String {
    match x {
        ExtReal::Finite(v) => num(v),
        ExtReal::NegInf => x.to_string(),
    }
}

/// Coordinate column names: state labels first, then action labels, with
/// `action_` prefixed to any action label that clashes.
fn columns(dp: &DynamicProgram) -> (Vec<String>, Vec<String>) {
    let arity = |labels: &[String], first: Option<usize>| labels.len().max(first.unwrap_or(0));
    let s_labels = dp.states().labels();
    let s_arity = arity(s_labels, dp.states().points().first().map(|p| p.coords.len()));
    let states: Vec<String> = (0..s_arity)
        .map(|i| s_labels.get(i).cloned().unwrap_or_else(|| format!("x{i}")))
        .collect();
    let a_labels = dp.actions().labels();
    let a_arity = arity(a_labels, dp.actions().points().first().map(|p| p.coords.len()));
    let actions = (0..a_arity)
        .map(|i| {
            let name = a_labels.get(i).cloned().unwrap_or_else(|| format!("a{i}"));
            let reserved = ["state", "state_tag", "action", "action_tag", "reward", "g_star", "v_star", "greedy"];
            if states.contains(&name) || reserved.contains(&name.as_str()) {
                format!("action_{name}")
            } else {
                name
            }
        })
        .collect();
    (states, actions)
}

fn state_fields(dp: &DynamicProgram, x: usize) -> Vec<String> {
    let p = dp.states().point(x);
    let mut out = vec![x.to_string()];
    out.extend(p.coords.iter().map(|&c| num(c)));
    out.push(p.tag.clone().unwrap_or_default());
    out
}

fn action_fields(dp: &DynamicProgram, a: usize) -> Vec<String> {
    let p = dp.actions().point(a);
    let mut out = vec![a.to_string()];
    out.extend(p.coords.iter().map(|&c| num(c)));
    out.push(p.tag.clone().unwrap_or_default());
    out
}

fn header(dp: &DynamicProgram, tail: &[&str]) -> Vec<String> {
    let (s, a) = columns(dp);
    let mut h = vec!["state".to_string()];
    h.extend(s);
    h.push("state_tag".into());
    h.push("action".into());
    h.extend(a);
    h.push("action_tag".into());
    h.extend(tail.iter().map(|t| t.to_string()));
    h
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// One row per feasible pair: coordinates, reward, `g*`, `v*` at the state
/// and whether the pair is the chosen greedy action.
pub fn write_solution<W: io::Write>(out: W, dp: &DynamicProgram, report: &SolveReport) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dp, &["reward", "g_star", "v_star", "greedy"]))
        .map_err(csv_error)?;
    for p in 0..dp.n_pairs() {
        let (x, a) = (dp.pair_state(p), dp.pair_action(p));
        let mut row = state_fields(dp, x);
        row.extend(action_fields(dp, a));
        row.push(ext(dp.reward(p)));
        row.push(num(report.g_star.get(p)));
        row.push(ext(report.v_star.get(x)));
        row.push(u8::from(report.policy.action(x) == a).to_string());
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()
}

/// One row per state with the greedy action and `v*`.
pub fn write_policy<W: io::Write>(out: W, dp: &DynamicProgram, report: &SolveReport) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dp, &["v_star"])).map_err(csv_error)?;
    for x in 0..dp.n_states() {
        let mut row = state_fields(dp, x);
        row.extend(action_fields(dp, report.policy.action(x)));
        row.push(ext(report.v_star.get(x)));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()
}

/// `iteration,residual,ratio`; the first ratio is empty.
pub fn write_residuals<W: io::Write>(out: W, residuals: &[f64]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "residual", "ratio"]).map_err(csv_error)?;
    for (k, &r) in residuals.iter().enumerate() {
        let ratio = if k == 0 { String::new() } else { num(r / residuals[k - 1]) };
        w.write_record([(k + 1).to_string(), num(r), ratio]).map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> io::Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf)
}
