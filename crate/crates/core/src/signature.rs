//! Truncated path signatures of piecewise-linear trajectories.
//!
//! A depth-`k` signature over `d` dimensions is stored as one flat vector,
//! level-major, each level in lexicographic multi-index order:
//!
//! ```text
//! [1, S^1 .. S^d, S^{1,1}, S^{1,2}, .. S^{d,d}, S^{1,1,1}, ..]
//! ```
//!
//! A sampled trajectory is read as the polyline through its points, so the
//! signature of a single segment with increment `Δ` has level `m` equal to
//! `Δ^{⊗m} / m!`, and longer paths are folded together with Chen's identity
//! (the truncated tensor product, see [`PathSignature::concat`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported truncation depth.
pub const MAX_DEPTH: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignatureError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("depth must be between 1 and {MAX_DEPTH}, got {0}")]
    BadDepth(usize),
    #[error("non-finite value {value} at coordinate {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("depth mismatch: expected {expected}, got {found}")]
    DepthMismatch { expected: usize, found: usize },
    #[error("trajectory must contain at least one point")]
    EmptyTrajectory,
    #[error("expected {expected} signature terms, got {found}")]
    BadLength { expected: usize, found: usize },
    #[error("leading signature term must be exactly 1, got {0}")]
    BadLeadingTerm(f64),
}

/// Number of terms in a depth-`k` signature over `d` dimensions, `Σ_{i=0}^{k} d^i`.
pub fn signature_length(d: usize, k: usize) -> Result<usize, SignatureError> {
    if d == 0 {
        return Err(SignatureError::ZeroDimension);
    }
    if k == 0 {
        return Err(SignatureError::BadDepth(k));
    }
    let mut total = 0usize;
    let mut power = 1usize;
    for _ in 0..=k {
        total += power;
        power *= d;
    }
    Ok(total)
}

fn check_depth(k: usize) -> Result<(), SignatureError> {
    if k == 0 || k > MAX_DEPTH {
        Err(SignatureError::BadDepth(k))
    } else {
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<(), SignatureError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(SignatureError::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// A point of a trajectory or an observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SignatureError> {
        if values.is_empty() {
            return Err(SignatureError::ZeroDimension);
        }
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn squared_distance(&self, other: &StateVector) -> f64 {
        squared_distance(&self.0, &other.0)
    }
}

impl TryFrom<Vec<f64>> for StateVector {
    type Error = SignatureError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<StateVector> for Vec<f64> {
    fn from(s: StateVector) -> Self {
        s.0
    }
}

impl std::ops::Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// An ordered, non-empty sequence of equal-dimension states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(points: Vec<StateVector>) -> Result<Self, SignatureError> {
        let first = points.first().ok_or(SignatureError::EmptyTrajectory)?;
        let dim = first.dim();
        let mut data = Vec::with_capacity(dim * points.len());
        for p in &points {
            if p.dim() != dim {
                return Err(SignatureError::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            data.extend_from_slice(p.as_slice());
        }
        Ok(Self { dim, data })
    }

    /// Builds a trajectory from raw rows, validating dimension and finiteness.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, SignatureError> {
        let points = rows
            .iter()
            .map(|r| StateVector::new(r.as_ref().to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn first(&self) -> &[f64] {
        self.point(0)
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    /// The first `n` points (clamped to the full length, at least one point).
    pub fn prefix(&self, n: usize) -> Trajectory {
        let n = n.clamp(1, self.len());
        Self {
            dim: self.dim,
            data: self.data[..n * self.dim].to_vec(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(|p| p.to_vec()).collect()
    }

    /// Keeps only the coordinates whose mask entry is `true`.
    pub fn project(&self, mask: &[bool]) -> Result<Trajectory, SignatureError> {
        if mask.len() != self.dim {
            return Err(SignatureError::DimensionMismatch {
                expected: self.dim,
                found: mask.len(),
            });
        }
        let dim = mask.iter().filter(|m| **m).count();
        if dim == 0 {
            return Err(SignatureError::ZeroDimension);
        }
        let data = self
            .points()
            .flat_map(|p| p.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| *v))
            .collect();
        Ok(Self { dim, data })
    }
}

/// Squared Euclidean distance between equal-length slices.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Truncated signature terms together with their shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSignature {
    dim: usize,
    depth: usize,
    terms: Vec<f64>,
}

impl PathSignature {
    /// The signature of a constant path: `[1, 0, .., 0]`.
    pub fn trivial(dim: usize, depth: usize) -> Result<Self, SignatureError> {
        check_depth(depth)?;
        let len = signature_length(dim, depth)?;
        let mut terms = vec![0.0; len];
        terms[0] = 1.0;
        Ok(Self { dim, depth, terms })
    }

    /// Rebuilds a signature from its flat serialized form.
    pub fn from_terms(dim: usize, depth: usize, terms: Vec<f64>) -> Result<Self, SignatureError> {
        check_depth(depth)?;
        let expected = signature_length(dim, depth)?;
        if terms.len() != expected {
            return Err(SignatureError::BadLength {
                expected,
                found: terms.len(),
            });
        }
        check_finite(&terms)?;
        if terms[0] != 1.0 {
            return Err(SignatureError::BadLeadingTerm(terms[0]));
        }
        Ok(Self { dim, depth, terms })
    }

    /// Signature of the straight segment with the given increment.
    pub fn segment(delta: &[f64], depth: usize) -> Result<Self, SignatureError> {
        check_finite(delta)?;
        let mut sig = Self::trivial(delta.len(), depth)?;
        sig.fill_segment(delta);
        Ok(sig)
    }

    // level m = level m-1 ⊗ delta / m
    fn fill_segment(&mut self, delta: &[f64]) {
        let d = self.dim;
        self.terms.iter_mut().for_each(|t| *t = 0.0);
        self.terms[0] = 1.0;
        let mut prev_start = 0;
        let mut prev_len = 1;
        for m in 1..=self.depth {
            let start = prev_start + prev_len;
            let inv_m = 1.0 / m as f64;
            for a in 0..prev_len {
                let base = self.terms[prev_start + a] * inv_m;
                for (b, db) in delta.iter().enumerate() {
                    self.terms[start + a * d + b] = base * db;
                }
            }
            prev_start = start;
            prev_len *= d;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn terms(&self) -> &[f64] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Terms of level `m` (`d^m` entries).
    pub fn level(&self, m: usize) -> &[f64] {
        let start = level_offset(self.dim, m);
        &self.terms[start..start + self.dim.pow(m as u32)]
    }

    /// Term for a multi-index of 0-based coordinates; the empty index is the leading 1.
    pub fn term(&self, index: &[usize]) -> f64 {
        let mut flat = 0;
        for &i in index {
            assert!(i < self.dim, "coordinate {i} out of range");
            flat = flat * self.dim + i;
        }
        self.level(index.len())[flat]
    }

    fn check_compatible(&self, other: &PathSignature) -> Result<(), SignatureError> {
        if self.dim != other.dim {
            return Err(SignatureError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.depth != other.depth {
            return Err(SignatureError::DepthMismatch {
                expected: self.depth,
                found: other.depth,
            });
        }
        Ok(())
    }

    /// Chen product: the signature of `self`'s path followed by `other`'s path.
    pub fn concat(&self, other: &PathSignature) -> Result<PathSignature, SignatureError> {
        self.check_compatible(other)?;
        let mut out = vec![0.0; self.terms.len()];
        tensor_product_into(self.dim, self.depth, &self.terms, &other.terms, &mut out);
        Ok(PathSignature {
            dim: self.dim,
            depth: self.depth,
            terms: out,
        })
    }

    pub fn squared_distance(&self, other: &PathSignature) -> f64 {
        squared_distance(&self.terms, &other.terms)
    }

    /// Element-wise mean of two signatures of the same shape.
    pub fn midpoint(&self, other: &PathSignature) -> Result<PathSignature, SignatureError> {
        self.check_compatible(other)?;
        let terms = self
            .terms
            .iter()
            .zip(&other.terms)
            .map(|(a, b)| (a + b) / 2.0)
            .collect();
        Ok(PathSignature {
            dim: self.dim,
            depth: self.depth,
            terms,
        })
    }
}

fn level_offset(d: usize, m: usize) -> usize {
    (0..m).map(|i| d.pow(i as u32)).sum()
}

// out_m = Σ_{j=0..m} a_j ⊗ b_{m-j}; the left factor supplies the leading indices.
fn tensor_product_into(d: usize, depth: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    let offsets: Vec<usize> = (0..=depth).map(|m| level_offset(d, m)).collect();
    let sizes: Vec<usize> = (0..=depth).map(|m| d.pow(m as u32)).collect();
    for m in 0..=depth {
        let dst = &mut out[offsets[m]..offsets[m] + sizes[m]];
        dst.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..=m {
            let aj = &a[offsets[j]..offsets[j] + sizes[j]];
            let bk = &b[offsets[m - j]..offsets[m - j] + sizes[m - j]];
            let stride = sizes[m - j];
            for (ia, va) in aj.iter().enumerate() {
                if *va == 0.0 {
                    continue;
                }
                let row = &mut dst[ia * stride..(ia + 1) * stride];
                for (r, vb) in row.iter_mut().zip(bk) {
                    *r += va * vb;
                }
            }
        }
    }
}

/// Signature of the whole trajectory. A single point yields the trivial signature.
pub fn batch_signature(traj: &Trajectory, depth: usize) -> Result<PathSignature, SignatureError> {
    let mut stream = SignatureStream::new(traj.dim(), depth)?;
    for p in traj.points() {
        stream.extend(p)?;
    }
    Ok(stream.into_signature())
}

/// Signatures of every prefix `[p_0..=p_j]`, starting with the trivial one.
pub fn prefix_signatures(
    traj: &Trajectory,
    depth: usize,
) -> Result<Vec<PathSignature>, SignatureError> {
    let mut stream = SignatureStream::new(traj.dim(), depth)?;
    let mut out = Vec::with_capacity(traj.len());
    for p in traj.points() {
        stream.extend(p)?;
        out.push(stream.signature().clone());
    }
    Ok(out)
}

/// Incrementally maintained signature of a growing point sequence.
#[derive(Debug, Clone)]
pub struct SignatureStream {
    current: PathSignature,
    last: Option<Vec<f64>>,
    count: usize,
    segment: PathSignature,
    scratch: Vec<f64>,
    delta: Vec<f64>,
}

impl SignatureStream {
    pub fn new(dim: usize, depth: usize) -> Result<Self, SignatureError> {
        let current = PathSignature::trivial(dim, depth)?;
        Ok(Self {
            segment: current.clone(),
            scratch: vec![0.0; current.len()],
            current,
            last: None,
            count: 0,
            delta: vec![0.0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.current.dim
    }

    pub fn depth(&self) -> usize {
        self.current.depth
    }

    /// Number of points consumed so far.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn last_point(&self) -> Option<&[f64]> {
        self.last.as_deref()
    }

    pub fn signature(&self) -> &PathSignature {
        &self.current
    }

    pub fn into_signature(self) -> PathSignature {
        self.current
    }

    /// Appends a point; the segment from the previous point is folded in with Chen's identity.
    pub fn extend(&mut self, point: &[f64]) -> Result<&PathSignature, SignatureError> {
        if point.len() != self.dim() {
            return Err(SignatureError::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        check_finite(point)?;
        if let Some(last) = &mut self.last {
            for ((d, p), l) in self.delta.iter_mut().zip(point).zip(last.iter()) {
                *d = p - l;
            }
            self.segment.fill_segment(&self.delta);
            tensor_product_into(
                self.current.dim,
                self.current.depth,
                &self.current.terms,
                &self.segment.terms,
                &mut self.scratch,
            );
            std::mem::swap(&mut self.current.terms, &mut self.scratch);
            last.copy_from_slice(point);
        } else {
            self.last = Some(point.to_vec());
        }
        self.count += 1;
        Ok(&self.current)
    }
}
