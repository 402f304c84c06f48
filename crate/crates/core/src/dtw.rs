//! Dynamic time warping over sequences of real vectors.
//!
//! Pairwise cost is the squared Euclidean distance. Paths are held 0-based;
//! [`WarpingPath::to_one_based`] and [`WarpingPath::from_one_based`] convert
//! at the boundary for display and fixtures.

use std::fmt::Write as _;

use thiserror::Error;

use crate::signature::squared_distance;

/// Radius used by [`dtw_fast`] when the caller has no preference.
pub const DEFAULT_RADIUS: usize = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DtwError {
    #[error("cannot align an empty sequence")]
    Empty,
    #[error("vector dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid warping path: {0}")]
    InvalidPath(String),
}

/// Monotone alignment between two sequences and its accumulated cost.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingPath {
    pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl WarpingPath {
    /// Validates 0-based pairs against sequence lengths `n` and `m`.
    pub fn new(
        pairs: Vec<(usize, usize)>,
        total_cost: f64,
        n: usize,
        m: usize,
    ) -> Result<Self, DtwError> {
        check_path(&pairs, n, m)?;
        Ok(Self { pairs, total_cost })
    }

    pub fn from_one_based(pairs: &[(usize, usize)], total_cost: f64) -> Result<Self, DtwError> {
        if pairs.iter().any(|&(i, j)| i == 0 || j == 0) {
            return Err(DtwError::InvalidPath("index 0 in a 1-based path".into()));
        }
        let zero: Vec<_> = pairs.iter().map(|&(i, j)| (i - 1, j - 1)).collect();
        let (n, m) = zero.last().map(|&(i, j)| (i + 1, j + 1)).unwrap_or((0, 0));
        Self::new(zero, total_cost, n, m)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn to_one_based(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|&(i, j)| (i + 1, j + 1)).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn check_path(pairs: &[(usize, usize)], n: usize, m: usize) -> Result<(), DtwError> {
    let bad = |msg: String| Err(DtwError::InvalidPath(msg));
    match (pairs.first(), pairs.last()) {
        (Some(&(0, 0)), Some(&(i, j))) if i + 1 == n && j + 1 == m => {}
        _ => {
            return bad(format!(
                "path must run from (0,0) to ({}, {})",
                n.wrapping_sub(1),
                m.wrapping_sub(1)
            ))
        }
    }
    for w in pairs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let di = b.0.checked_sub(a.0);
        let dj = b.1.checked_sub(a.1);
        match (di, dj) {
            (Some(1), Some(0)) | (Some(0), Some(1)) | (Some(1), Some(1)) => {}
            _ => return bad(format!("illegal step {:?} -> {:?}", a, b)),
        }
    }
    Ok(())
}

/// For each observation index `i`, the smallest `j` aligned with it (0-based).
pub fn first_occurrence_map(path: &WarpingPath) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &(i, j) in &path.pairs {
        if i == out.len() {
            out.push(j);
        }
    }
    out
}

/// Accumulated-cost matrix restricted to a per-row column window.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    windows: Vec<(usize, usize)>,
    cells: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Accumulated cost at `(i, j)`, or infinity outside the window.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = self.windows[i];
        if j < lo || j >= hi {
            f64::INFINITY
        } else {
            self.cells[i][j - lo]
        }
    }

    /// Rows as CSV lines; cells outside the window are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    out.push(',');
                }
                let v = self.get(i, j);
                if v.is_finite() {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}

fn validate<V: AsRef<[f64]>>(a: &[V], b: &[V]) -> Result<(), DtwError> {
    if a.is_empty() || b.is_empty() {
        return Err(DtwError::Empty);
    }
    let d = a[0].as_ref().len();
    for v in a.iter().chain(b) {
        if v.as_ref().len() != d {
            return Err(DtwError::DimensionMismatch(d, v.as_ref().len()));
        }
    }
    Ok(())
}

/// Exact DTW over the full `n × m` grid.
pub fn dtw_exact<V: AsRef<[f64]>>(a: &[V], b: &[V]) -> Result<WarpingPath, DtwError> {
    dtw_exact_with_matrix(a, b).map(|(p, _)| p)
}

/// Exact DTW, also returning the accumulated-cost matrix.
pub fn dtw_exact_with_matrix<V: AsRef<[f64]>>(
    a: &[V],
    b: &[V],
) -> Result<(WarpingPath, CostMatrix), DtwError> {
    validate(a, b)?;
    let windows = vec![(0, b.len()); a.len()];
    Ok(windowed(a, b, windows))
}

/// Coarsen-project-refine approximation of DTW.
///
/// Sequences shorter than `radius + 2` are aligned exactly, so a radius of at
/// least `max(|a|, |b|)` reproduces [`dtw_exact`].
pub fn dtw_fast<V: AsRef<[f64]>>(a: &[V], b: &[V], radius: usize) -> Result<WarpingPath, DtwError> {
    validate(a, b)?;
    let a: Vec<&[f64]> = a.iter().map(|v| v.as_ref()).collect();
    let b: Vec<&[f64]> = b.iter().map(|v| v.as_ref()).collect();
    Ok(fast_rec(&a, &b, radius))
}

fn fast_rec(a: &[&[f64]], b: &[&[f64]], radius: usize) -> WarpingPath {
    let min_size = radius + 2;
    if a.len() < min_size || b.len() < min_size {
        return windowed(a, b, vec![(0, b.len()); a.len()]).0;
    }
    let ca = coarsen(a);
    let cb = coarsen(b);
    let ca_refs: Vec<&[f64]> = ca.iter().map(Vec::as_slice).collect();
    let cb_refs: Vec<&[f64]> = cb.iter().map(Vec::as_slice).collect();
    let coarse = fast_rec(&ca_refs, &cb_refs, radius);
    let windows = expand_window(coarse.pairs(), a.len(), b.len(), ca.len(), cb.len(), radius);
    windowed(a, b, windows).0
}

// Pairwise means; a trailing odd element is dropped.
fn coarsen(x: &[&[f64]]) -> Vec<Vec<f64>> {
    x.chunks_exact(2)
        .map(|pair| {
            pair[0]
                .iter()
                .zip(pair[1])
                .map(|(p, q)| (p + q) / 2.0)
                .collect()
        })
        .collect()
}

fn expand_window(
    coarse: &[(usize, usize)],
    n: usize,
    m: usize,
    cn: usize,
    cm: usize,
    radius: usize,
) -> Vec<(usize, usize)> {
    let mut windows = vec![(usize::MAX, 0usize); n];
    for &(i, j) in coarse {
        let i_lo = i.saturating_sub(radius);
        let i_hi = (i + radius).min(cn - 1);
        let j_lo = j.saturating_sub(radius);
        let j_hi = (j + radius).min(cm - 1);
        for ci in i_lo..=i_hi {
            for fi in [2 * ci, 2 * ci + 1] {
                if fi < n {
                    let w = &mut windows[fi];
                    w.0 = w.0.min(2 * j_lo);
                    w.1 = w.1.max((2 * j_hi + 2).min(m));
                }
            }
        }
    }
    // Rows dropped by coarsening inherit the row above; the window is then
    // made a connected staircase that touches both corners.
    for i in 0..n {
        if windows[i].0 == usize::MAX {
            windows[i] = if i == 0 { (0, 1) } else { windows[i - 1] };
        }
    }
    windows[0].0 = 0;
    windows[n - 1].1 = m;
    for i in 1..n {
        let prev = windows[i - 1];
        let w = &mut windows[i];
        w.0 = w.0.max(prev.0).min(prev.1 - 1);
        w.1 = w.1.max(prev.1);
    }
    windows
}

fn windowed<V: AsRef<[f64]>>(
    a: &[V],
    b: &[V],
    windows: Vec<(usize, usize)>,
) -> (WarpingPath, CostMatrix) {
    let n = a.len();
    let m = b.len();
    let mut cm = CostMatrix {
        rows: n,
        cols: m,
        cells: windows
            .iter()
            .map(|&(lo, hi)| vec![f64::INFINITY; hi - lo])
            .collect(),
        windows,
    };
    for (i, ai) in a.iter().enumerate() {
        let (lo, hi) = cm.windows[i];
        for (j, bj) in b.iter().enumerate().take(hi).skip(lo) {
            let c = squared_distance(ai.as_ref(), bj.as_ref());
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 {
                    cm.get(i - 1, j - 1)
                } else {
                    f64::INFINITY
                };
                let left = if j > 0 {
                    cm.get(i, j - 1)
                } else {
                    f64::INFINITY
                };
                let up = if i > 0 {
                    cm.get(i - 1, j)
                } else {
                    f64::INFINITY
                };
                diag.min(left).min(up)
            };
            cm.cells[i][j - lo] = c + best;
        }
    }

    let total_cost = cm.get(n - 1, m - 1);
    let mut pairs = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        // tie-break: diagonal, then the step that advanced j, then the one that advanced i
        let diag = if i > 0 && j > 0 {
            cm.get(i - 1, j - 1)
        } else {
            f64::INFINITY
        };
        let left = if j > 0 {
            cm.get(i, j - 1)
        } else {
            f64::INFINITY
        };
        let up = if i > 0 {
            cm.get(i - 1, j)
        } else {
            f64::INFINITY
        };
        if diag <= left && diag <= up {
            i -= 1;
            j -= 1;
        } else if left <= up {
            j -= 1;
        } else {
            i -= 1;
        }
        pairs.push((i, j));
    }
    pairs.reverse();
    debug_assert!(check_path(&pairs, n, m).is_ok());
    (WarpingPath { pairs, total_cost }, cm)
}
