//! CSV trajectories: `theta,index,lambda_series,lambda_oracle,residual`, one
//! row per (θ, eigen-index), 1-based indices, `\n` line endings and an empty
//! oracle column when no oracle value was computed.

use crate::continuation::{TrajectoryRow, TrajectoryTable};
use crate::error::{Error, Result};
use crate::io::format_float;

pub const HEADER: &str = "theta,index,lambda_series,lambda_oracle,residual";

pub fn write_trajectory_csv(table: &TrajectoryTable) -> String {
    let mut out = String::with_capacity(64 * (table.rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(row.theta),
            row.index + 1,
            format_float(row.lambda_series),
            row.lambda_oracle.map(format_float).unwrap_or_default(),
            format_float(row.residual),
        ));
    }
    out
}

pub fn read_trajectory_csv(text: &str) -> Result<TrajectoryTable> {
    let bad = |line: usize| Error::InvalidArgument(format!("trajectory CSV line {line} is malformed"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(bad(1)),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(line_no));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line_no));
        let index: usize = fields[1].parse().map_err(|_| bad(line_no))?;
        if index == 0 {
            return Err(bad(line_no));
        }
        rows.push(TrajectoryRow {
            theta: num(fields[0])?,
            index: index - 1,
            lambda_series: num(fields[2])?,
            lambda_oracle: if fields[3].is_empty() {
                None
            } else {
                Some(num(fields[3])?)
            },
            residual: num(fields[4])?,
        });
    }
    Ok(TrajectoryTable { rows })
}
