use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use propsim_core::sysid::{CalibrationResult, RestartResult};
use propsim_core::Error;
use serde::Serialize;

use super::{write_json, write_text};

#[derive(Serialize)]
struct ParamValue<'a> {
    name: &'a str,
    unit: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct RestartRow<'a> {
    index: usize,
    seed: &'a [f64],
    theta: &'a [f64],
    /// null when the restart failed
    loss: Option<f64>,
    evaluations: usize,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
    history: String,
}

#[derive(Serialize)]
struct ResultFile<'a> {
    method: &'a str,
    parameters: Vec<ParamValue<'a>>,
    loss: f64,
    selected_restart: usize,
    evaluations: usize,
    wall_time_s: f64,
    restarts: Vec<RestartRow<'a>>,
}

fn history_csv(names: &[String], r: &RestartResult) -> String {
    let mut out = String::from("iteration,loss");
    for n in names {
        let _ = write!(out, ",{n}");
    }
    let with_grad = r.history.iter().any(|h| !h.grad.is_empty());
    if with_grad {
        for n in names {
            let _ = write!(out, ",grad_{n}");
        }
    }
    out.push('\n');
    for h in &r.history {
        let _ = write!(out, "{},{}", h.iteration, h.loss);
        for v in h.theta.iter().chain(if with_grad { h.grad.iter() } else { [].iter() }) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes `result.json` and one `history_restart_<i>.csv` per restart into
/// `dir`; returns the JSON path.
pub fn write_calibration(dir: &Path, result: &CalibrationResult) -> Result<PathBuf, Error> {
    let mut restarts = Vec::with_capacity(result.restarts.len());
    for (i, r) in result.restarts.iter().enumerate() {
        let file = format!("history_restart_{i}.csv");
        write_text(&dir.join(&file), &history_csv(&result.names, r))?;
        let message = match &r.status {
            propsim_core::sysid::RestartStatus::Failed(m) => Some(m.as_str()),
            _ => None,
        };
        restarts.push(RestartRow {
            index: i,
            seed: &r.seed,
            theta: &r.theta,
            loss: r.loss.is_finite().then_some(r.loss),
            evaluations: r.evaluations,
            status: r.status.label(),
            message,
            history: file,
        });
    }
    let doc = ResultFile {
        method: &result.method,
        parameters: result
            .names
            .iter()
            .zip(&result.units)
            .zip(&result.theta)
            .map(|((name, unit), &value)| ParamValue { name, unit, value })
            .collect(),
        loss: result.loss,
        selected_restart: result.selected,
        evaluations: result.evaluations,
        wall_time_s: result.wall_time,
        restarts,
    };
    let path = dir.join("result.json");
    write_json(&path, &doc)?;
    Ok(path)
}

/// Best loss seen so far by each method after `evaluations` loss
/// evaluations; `None` once a method has stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub evaluations: usize,
    pub gradient_loss: Option<f64>,
    pub cmaes_loss: Option<f64>,
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<(), Error> {
    let mut out = String::from("evaluations,gradient_loss,cmaes_loss\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.evaluations, cell(r.gradient_loss), cell(r.cmaes_loss));
    }
    write_text(path, &out)
}
