//! Near-optimal trajectory sampling on grid maps.
//!
//! The first trajectory is an 8-connected shortest grid path, straightened by
//! string pulling and resampled at a fixed arc-length step. Further
//! trajectories pass through a random waypoint and are kept when their length
//! stays within `(1 + spread)` of the first and they differ from every
//! trajectory already accepted.

mod grid;
mod trajfile;

pub use grid::{Cell, GridMap, MapError};
pub use trajfile::{
    load_trajectories, read_trajectories, save_trajectories, write_trajectories, TrajFileError,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::signature::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("{what} {point:?} is off the map or on a blocked cell")]
    Blocked { what: &'static str, point: [f64; 2] },
    #[error("goal {goal:?} is unreachable from {start:?}")]
    Unreachable { start: [f64; 2], goal: [f64; 2] },
    #[error("found only {found} of {requested} distinct trajectories within {attempts} attempts")]
    NotEnoughDistinct {
        found: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("invalid request: {0}")]
    BadRequest(String),
}

#[derive(Debug, Clone)]
pub struct SampleRequest<'a> {
    pub map: &'a GridMap,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub k: usize,
    pub seed: u64,
    /// Allowed relative extra length of detour trajectories.
    pub spread: f64,
    /// Arc-length spacing of the emitted states.
    pub step: f64,
    /// Waypoint draws allowed per requested detour.
    pub attempts_per_path: usize,
    /// Minimum Hausdorff distance between any two accepted trajectories.
    pub min_separation: f64,
}

impl<'a> SampleRequest<'a> {
    pub fn new(map: &'a GridMap, start: [f64; 2], goal: [f64; 2], k: usize, seed: u64) -> Self {
        Self {
            map,
            start,
            goal,
            k,
            seed,
            spread: 0.5,
            step: 1.0,
            attempts_per_path: 200,
            min_separation: 0.5,
        }
    }
}

fn free_cell(map: &GridMap, what: &'static str, p: [f64; 2]) -> Result<Cell, SampleError> {
    map.cell_of(p)
        .filter(|c| map.is_free(*c))
        .ok_or(SampleError::Blocked { what, point: p })
}

/// Length of the 8-connected shortest grid path between the cells holding `start` and `goal`.
pub fn grid_cost(map: &GridMap, start: [f64; 2], goal: [f64; 2]) -> Result<f64, SampleError> {
    let a = free_cell(map, "start", start)?;
    let b = free_cell(map, "goal", goal)?;
    map.shortest_path(a, b)
        .map(|(_, c)| c)
        .ok_or(SampleError::Unreachable { start, goal })
}

/// Straightened polyline from `a` to `b` through the grid.
fn leg(map: &GridMap, a: [f64; 2], b: [f64; 2]) -> Result<Vec<[f64; 2]>, SampleError> {
    let ca = free_cell(map, "start", a)?;
    let cb = free_cell(map, "goal", b)?;
    let (cells, _) = map
        .shortest_path(ca, cb)
        .ok_or(SampleError::Unreachable { start: a, goal: b })?;
    let mut poly = vec![a];
    poly.extend(cells.iter().map(|c| c.center()));
    poly.push(b);
    poly.dedup();
    Ok(string_pull(map, &poly))
}

/// Greedy shortcutting: from each anchor jump to the farthest vertex in sight.
fn string_pull(map: &GridMap, poly: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = vec![poly[0]];
    let mut anchor = 0;
    while anchor + 1 < poly.len() {
        let next = (anchor + 1..poly.len())
            .rev()
            .find(|&j| map.line_of_sight(poly[anchor], poly[j]))
            .unwrap_or(anchor + 1);
        out.push(poly[next]);
        anchor = next;
    }
    out
}

fn polyline_length(poly: &[[f64; 2]]) -> f64 {
    poly.windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}

/// States every `step` of arc length, always ending exactly at the last vertex.
fn resample(poly: &[[f64; 2]], step: f64) -> Vec<[f64; 2]> {
    let mut out = vec![poly[0]];
    let mut carried = 0.0;
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let mut s = step - carried;
        while s < len - 1e-9 * step {
            let u = s / len;
            out.push([a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u]);
            s += step;
        }
        carried = len - (s - step);
    }
    let end = *poly.last().expect("non-empty polyline");
    if *out.last().expect("non-empty") != end {
        out.push(end);
    }
    out
}

fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let directed = |a: &[[f64; 2]], b: &[[f64; 2]]| {
        a.iter()
            .map(|p| {
                b.iter()
                    .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn to_trajectory(points: &[[f64; 2]]) -> Trajectory {
    Trajectory::from_rows(points).expect("grid points are finite")
}

/// Samples `k` distinct trajectories from `start` to `goal`.
///
/// Deterministic for a given request; the first trajectory follows the shortest grid path.
pub fn sample_k_trajectories(req: &SampleRequest) -> Result<Vec<Trajectory>, SampleError> {
    if req.k == 0 {
        return Err(SampleError::BadRequest("k must be at least 1".into()));
    }
    if req.step <= 0.0 || !req.step.is_finite() {
        return Err(SampleError::BadRequest(format!(
            "step {} must be positive",
            req.step
        )));
    }
    if req.spread.is_nan() || req.spread < 0.0 {
        return Err(SampleError::BadRequest(format!(
            "spread {} must be non-negative",
            req.spread
        )));
    }
    let map = req.map;
    free_cell(map, "start", req.start)?;
    free_cell(map, "goal", req.goal)?;
    let base = leg(map, req.start, req.goal)?;
    let budget = polyline_length(&base) * (1.0 + req.spread) + 1e-9;
    let mut accepted = vec![resample(&base, req.step)];

    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let attempts = req.attempts_per_path * (req.k - 1);
    let mut used = 0;
    while accepted.len() < req.k && used < attempts {
        used += 1;
        let w = [
            rng.gen_range(-0.5..map.width() as f64 - 0.5),
            rng.gen_range(-0.5..map.height() as f64 - 0.5),
        ];
        if free_cell(map, "waypoint", w).is_err() {
            continue;
        }
        let (Ok(first), Ok(second)) = (leg(map, req.start, w), leg(map, w, req.goal)) else {
            continue;
        };
        let mut poly = first;
        poly.extend_from_slice(&second[1..]);
        poly.dedup();
        if polyline_length(&poly) > budget {
            continue;
        }
        let points = resample(&poly, req.step);
        if accepted
            .iter()
            .all(|p| hausdorff(p, &points) >= req.min_separation && *p != points)
        {
            accepted.push(points);
        }
    }
    if accepted.len() < req.k {
        return Err(SampleError::NotEnoughDistinct {
            found: accepted.len(),
            requested: req.k,
            attempts,
        });
    }
    log::debug!(
        "sampled {} trajectories to {:?} in {} attempts",
        req.k,
        req.goal,
        used
    );
    Ok(accepted.iter().map(|p| to_trajectory(p)).collect())
}
