use std::fmt::Write as _;
use std::path::Path;

use propsim_core::diffcore::{DScalar, Vec3};
use propsim_core::sim::Trajectory;
use propsim_core::Error;

use super::{format_error, read_text, write_text};

const OBJECT_COLUMNS: [&str; 3] = ["obj_x", "obj_y", "obj_z"];
const GRID_TOL: f64 = 1e-9;

/// CSV text with header `t,<joints>[,obj_x,obj_y,obj_z]`. Values use the
/// shortest representation that parses back to the same bits.
pub fn trajectory_to_csv(traj: &Trajectory<0>) -> String {
    let mut out = String::from("t");
    for n in &traj.joint_names {
        out.push(',');
        out.push_str(n);
    }
    if traj.object_positions.is_some() {
        for c in OBJECT_COLUMNS {
            out.push(',');
            out.push_str(c);
        }
    }
    out.push('\n');
    for (i, t) in traj.times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for q in &traj.joint_positions[i] {
            let _ = write!(out, ",{}", q.v);
        }
        if let Some(o) = &traj.object_positions {
            for c in o[i].values() {
                let _ = write!(out, ",{c}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory(path: &Path, traj: &Trajectory<0>) -> Result<(), Error> {
    write_text(path, &trajectory_to_csv(traj))
}

/// Reads a trajectory CSV as stored, without resampling.
pub fn read_trajectory(path: &Path) -> Result<Trajectory<0>, Error> {
    parse_trajectory(&read_text(path)?, path)
}

/// Parses trajectory CSV text; `path` only labels errors.
pub fn parse_trajectory(text: &str, path: &Path) -> Result<Trajectory<0>, Error> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format_error(path, "header", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(format_error(path, "header", "first column must be 't'"));
    }
    let has_object = header.len() >= 4 && header[header.len() - 3..] == OBJECT_COLUMNS;
    let joint_end = if has_object { header.len() - 3 } else { header.len() };
    let joint_names: Vec<String> = header[1..joint_end].to_vec();
    for (i, n) in joint_names.iter().enumerate() {
        if n.is_empty() {
            return Err(format_error(path, "header", format!("column {} has an empty name", i + 2)));
        }
        if OBJECT_COLUMNS.contains(&n.as_str()) {
            return Err(format_error(path, "header", "object columns must be the last three, in x, y, z order"));
        }
        if joint_names[..i].contains(n) {
            return Err(format_error(path, "header", format!("duplicate column '{n}'")));
        }
    }
    let mut traj = Trajectory {
        times: Vec::new(),
        joint_names,
        joint_positions: Vec::new(),
        joint_velocities: Vec::new(),
        object_positions: has_object.then(Vec::new),
    };
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| format_error(path, format!("row {row}"), e.to_string()))?;
        if record.len() != header.len() {
            return Err(format_error(path, format!("row {row}"), format!("expected {} columns, got {}", header.len(), record.len())));
        }
        let mut values = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| format_error(path, format!("row {row}, column '{}'", header[col]), format!("'{field}' is not a finite number")))?;
            values.push(v);
        }
        if let Some(&prev) = traj.times.last() {
            if !(values[0] > prev) {
                return Err(format_error(path, format!("row {row}"), format!("t = {} does not increase (previous {prev})", values[0])));
            }
        }
        traj.times.push(values[0]);
        traj.joint_positions.push(values[1..joint_end].iter().map(|&v| DScalar::constant(v)).collect());
        if let Some(o) = traj.object_positions.as_mut() {
            o.push(Vec3::from_f64([values[joint_end], values[joint_end + 1], values[joint_end + 2]]));
        }
    }
    if traj.times.is_empty() {
        return Err(format_error(path, "rows", "trajectory has no samples"));
    }
    Ok(traj)
}

fn lerp_row(a: &[DScalar<0>], b: &[DScalar<0>], s: f64) -> Vec<DScalar<0>> {
    a.iter().zip(b).map(|(x, y)| DScalar::constant(x.v + s * (y.v - x.v))).collect()
}

/// Linearly resamples onto the grid `t0 + k / frame_rate`. Returns the
/// input unchanged, and `false`, when it already lies on that grid.
pub fn resample(traj: &Trajectory<0>, frame_rate: f64) -> (Trajectory<0>, bool) {
    let t0 = traj.times[0];
    let span = traj.times[traj.len() - 1] - t0;
    let n = (span * frame_rate + GRID_TOL).floor() as usize + 1;
    let on_grid = n == traj.len() && traj.times.iter().enumerate().all(|(k, t)| (t - (t0 + k as f64 / frame_rate)).abs() <= GRID_TOL);
    if on_grid {
        return (traj.clone(), false);
    }
    let mut out = Trajectory {
        times: Vec::with_capacity(n),
        joint_names: traj.joint_names.clone(),
        joint_positions: Vec::with_capacity(n),
        joint_velocities: Vec::new(),
        object_positions: traj.object_positions.as_ref().map(|_| Vec::with_capacity(n)),
    };
    let mut j = 0;
    for k in 0..n {
        let t = t0 + k as f64 / frame_rate;
        while j + 2 < traj.len() && traj.times[j + 1] < t {
            j += 1;
        }
        let (ta, tb) = (traj.times[j], traj.times[(j + 1).min(traj.len() - 1)]);
        let s = if tb > ta { ((t - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 0.0 };
        let jb = (j + 1).min(traj.len() - 1);
        out.times.push(t);
        out.joint_positions.push(lerp_row(&traj.joint_positions[j], &traj.joint_positions[jb], s));
        if let (Some(src), Some(dst)) = (&traj.object_positions, out.object_positions.as_mut()) {
            let (a, b) = (src[j].values(), src[jb].values());
            dst.push(Vec3::from_f64([0, 1, 2].map(|c| a[c] + s * (b[c] - a[c]))));
        }
    }
    (out, true)
}
