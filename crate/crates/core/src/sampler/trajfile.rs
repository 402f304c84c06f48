//! Plain-text trajectory sets.
//!
//! ```text
//! trajectories <d> <count>
//! trajectory <goal id> <n>
//! <x1> ... <xd>          n rows
//! ```
//!
//! Blank lines and `#` comments are ignored. Floats use shortest round-trip
//! formatting.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::signature::Trajectory;
use crate::trajtree::GoalId;

#[derive(Debug, Error)]
pub enum TrajFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: expected {expected} coordinates, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T, TrajFileError> {
    Err(TrajFileError::Parse {
        line,
        msg: msg.into(),
    })
}

fn number<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, TrajFileError> {
    s.parse()
        .or_else(|_| perr(line, format!("bad number '{s}'")))
}

pub fn read_trajectories<R: BufRead>(r: R) -> Result<Vec<(Trajectory, GoalId)>, TrajFileError> {
    let mut content = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            content.push((i + 1, t.to_string()));
        }
    }
    let mut it = content.into_iter();
    let Some((ln, header)) = it.next() else {
        log::warn!("trajectory file is empty");
        return Ok(Vec::new());
    };
    let (dim, count) = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["trajectories", d, c] => (number::<usize>(ln, d)?, number::<usize>(ln, c)?),
        _ => return perr(ln, "expected 'trajectories <d> <count>'"),
    };
    if dim == 0 {
        return perr(ln, "dimension must be positive");
    }
    let mut out = Vec::with_capacity(count);
    while let Some((ln, line)) = it.next() {
        let (goal, n) = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["trajectory", g, n] => (GoalId(number(ln, g)?), number::<usize>(ln, n)?),
            _ => return perr(ln, "expected 'trajectory <goal> <points>'"),
        };
        if n == 0 {
            return perr(ln, "trajectory has no points");
        }
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let Some((pl, row)) = it.next() else {
                return perr(
                    ln,
                    format!("trajectory declares {n} points but the file ends"),
                );
            };
            let values = row
                .split_whitespace()
                .map(|f| match f.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => perr(pl, format!("bad coordinate '{f}'")),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if values.len() != dim {
                return Err(TrajFileError::Dimension {
                    line: pl,
                    expected: dim,
                    found: values.len(),
                });
            }
            rows.push(values);
        }
        let traj = Trajectory::from_rows(&rows).or_else(|e| perr(ln, e.to_string()))?;
        out.push((traj, goal));
    }
    if out.len() != count {
        return perr(
            ln,
            format!("header declares {count} trajectories, found {}", out.len()),
        );
    }
    Ok(out)
}

pub fn write_trajectories<W: Write>(
    trajs: &[(Trajectory, GoalId)],
    mut w: W,
) -> Result<(), TrajFileError> {
    let dim = trajs.first().map_or(0, |(t, _)| t.dim());
    if let Some((t, _)) = trajs.iter().find(|(t, _)| t.dim() != dim) {
        return Err(TrajFileError::Dimension {
            line: 0,
            expected: dim,
            found: t.dim(),
        });
    }
    writeln!(w, "trajectories {dim} {}", trajs.len())?;
    for (t, g) in trajs {
        writeln!(w, "trajectory {} {}", g.0, t.len())?;
        for p in t.points() {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

pub fn load_trajectories(path: &Path) -> Result<Vec<(Trajectory, GoalId)>, TrajFileError> {
    read_trajectories(BufReader::new(File::open(path)?))
}

pub fn save_trajectories(path: &Path, trajs: &[(Trajectory, GoalId)]) -> Result<(), TrajFileError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trajectories(trajs, &mut w)?;
    w.flush()?;
    Ok(())
}
