//! Online inference over a trajectory tree.
//!
//! Each received observation extends a streaming signature of the observed
//! path. Every branch of the tree is then scored with
//! `p = 1 - exp(-1 / D)`, where `D` is either the squared distance between the
//! latest observed prefix signature and the branch node at the same timestep
//! ([`ScoringMode::Plain`]), or the mean squared distance along a DTW
//! alignment of all observed prefix signatures with the branch
//! ([`ScoringMode::Dtw`]). Branch scores are reduced per goal and normalized
//! against the goal priors.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dtw::{dtw_fast, first_occurrence_map, DEFAULT_RADIUS};
use crate::signature::{PathSignature, SignatureError, SignatureStream, StateVector};
use crate::trajtree::{Branch, GoalId, TrajectoryTree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("timestep {t} does not follow the last received timestep {last}")]
    NonMonotone { t: u64, last: u64 },
    #[error("observation gap between {last} and {t} with interpolation disabled")]
    Gap { t: u64, last: u64 },
    #[error("observation matches goal {0}; the episode has ended")]
    GoalReached(GoalId),
    #[error("the episode has already ended")]
    Finished,
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

named_enum!(
    /// How a branch is compared with the observations.
    ScoringMode { Plain => "plain", Dtw => "dtw" }
);
named_enum!(
    /// How branch scores of one goal are combined.
    Aggregation { Max => "max", IncrementalMean => "mean" }
);
named_enum!(
    /// Reduction of aligned distances in DTW scoring.
    DtwReduction { Mean => "mean", Sum => "sum" }
);
named_enum!(
    /// Gap filling for missing timesteps; `None` rejects gaps.
    Interpolation { Linear => "linear", None => "none" }
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub depth: usize,
    pub mode: ScoringMode,
    pub aggregation: Aggregation,
    pub dtw_radius: usize,
    pub dtw_reduction: DtwReduction,
    /// Per-goal priors in goal order; uniform when absent.
    pub priors: Option<Vec<f64>>,
    pub interpolation: Interpolation,
    /// Goals within this distance of the best posterior all count as predicted.
    pub tie_tolerance: f64,
    /// Coordinate tolerance for recognising that an observation reached a goal.
    pub goal_tolerance: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            mode: ScoringMode::Plain,
            aggregation: Aggregation::Max,
            dtw_radius: DEFAULT_RADIUS,
            dtw_reduction: DtwReduction::Mean,
            priors: None,
            interpolation: Interpolation::Linear,
            tie_tolerance: 1e-9,
            goal_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Goal {
    pub id: GoalId,
    pub state: StateVector,
}

/// Goals, start state, tree and configuration for one recognition episode.
#[derive(Debug, Clone)]
pub struct RecognitionProblem {
    goals: Vec<Goal>,
    initial_state: StateVector,
    tree: Arc<TrajectoryTree>,
    config: EngineConfig,
}

impl RecognitionProblem {
    pub fn new(
        goals: Vec<Goal>,
        initial_state: StateVector,
        tree: Arc<TrajectoryTree>,
        config: EngineConfig,
    ) -> Result<Self, EngineError> {
        let cfg = |m: String| Err(EngineError::Config(m));
        if goals.is_empty() {
            return cfg("no goals".into());
        }
        if config.depth != tree.depth() {
            return cfg(format!(
                "configured depth {} but the tree uses depth {}",
                config.depth,
                tree.depth()
            ));
        }
        if initial_state.dim() != tree.dim() {
            return cfg(format!(
                "initial state has {} coordinates, tree has {}",
                initial_state.dim(),
                tree.dim()
            ));
        }
        for g in &goals {
            if g.state.dim() != tree.dim() {
                return cfg(format!("goal {} has the wrong dimension", g.id));
            }
        }
        for label in tree.goal_ids() {
            if !goals.iter().any(|g| g.id == label) {
                return cfg(format!(
                    "tree references goal {label} which is not a hypothesis"
                ));
            }
        }
        if let Some(p) = &config.priors {
            if p.len() != goals.len() {
                return cfg(format!("{} priors for {} goals", p.len(), goals.len()));
            }
            if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return cfg("priors must be non-negative".into());
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return cfg(format!("priors sum to {sum}, not 1"));
            }
        }
        if config.depth == 0 {
            return cfg("depth must be at least 1".into());
        }
        Ok(Self {
            goals,
            initial_state,
            tree,
            config,
        })
    }

    /// Problem whose goals and initial state come from the tree itself.
    pub fn from_tree(tree: Arc<TrajectoryTree>, config: EngineConfig) -> Result<Self, EngineError> {
        let goals = tree
            .goal_states()
            .iter()
            .map(|(id, s)| {
                Ok(Goal {
                    id: *id,
                    state: StateVector::new(s.clone())?,
                })
            })
            .collect::<Result<Vec<_>, SignatureError>>()?;
        let initial = StateVector::new(tree.initial_state().to_vec())?;
        Self::new(goals, initial, tree, config)
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn goal_ids(&self) -> Vec<GoalId> {
        self.goals.iter().map(|g| g.id).collect()
    }

    pub fn tree(&self) -> &TrajectoryTree {
        &self.tree
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }
}

/// Received observations, their gap-free densification and its prefix signatures.
#[derive(Debug, Clone)]
pub struct ObservationLog {
    received: Vec<(u64, StateVector)>,
    filled: Vec<StateVector>,
    stream: SignatureStream,
    prefix_sigs: Vec<PathSignature>,
    last_t: Option<u64>,
}

impl ObservationLog {
    pub fn new(dim: usize, depth: usize) -> Result<Self, SignatureError> {
        Ok(Self {
            received: Vec::new(),
            filled: Vec::new(),
            stream: SignatureStream::new(dim, depth)?,
            prefix_sigs: Vec::new(),
            last_t: None,
        })
    }

    pub fn received(&self) -> &[(u64, StateVector)] {
        &self.received
    }

    pub fn filled(&self) -> &[StateVector] {
        &self.filled
    }

    pub fn prefix_signatures(&self) -> &[PathSignature] {
        &self.prefix_sigs
    }

    pub fn last_t(&self) -> Option<u64> {
        self.last_t
    }

    pub fn is_empty(&self) -> bool {
        self.prefix_sigs.is_empty()
    }

    /// Latest prefix signature.
    pub fn current(&self) -> Option<&PathSignature> {
        self.prefix_sigs.last()
    }

    fn push_filled(&mut self, s: StateVector) -> Result<(), SignatureError> {
        let sig = self.stream.extend(s.as_slice())?.clone();
        self.prefix_sigs.push(sig);
        self.filled.push(s);
        Ok(())
    }

    /// Records `o` at `t`, filling any gap since the last timestep.
    pub fn record(
        &mut self,
        t: u64,
        o: StateVector,
        interpolation: Interpolation,
    ) -> Result<(), EngineError> {
        if let Some(last) = self.last_t {
            if t <= last {
                return Err(EngineError::NonMonotone { t, last });
            }
            if t > last + 1 {
                if interpolation == Interpolation::None {
                    return Err(EngineError::Gap { t, last });
                }
                let prev = self.filled.last().expect("non-empty log").clone();
                for s in interpolate_missing((last, &prev), (t, &o)) {
                    self.push_filled(s)?;
                }
            }
        }
        self.push_filled(o.clone())?;
        self.received.push((t, o));
        self.last_t = Some(t);
        Ok(())
    }

    /// Seeds the log with the start state at timestep 0.
    fn seed(&mut self, s0: StateVector) -> Result<(), EngineError> {
        self.push_filled(s0)?;
        self.last_t = Some(0);
        Ok(())
    }
}

/// Linearly interpolated states for every integer timestep strictly between the two samples.
pub fn interpolate_missing(from: (u64, &[f64]), to: (u64, &[f64])) -> Vec<StateVector> {
    let (t0, a) = from;
    let (t1, b) = to;
    if t1 <= t0 + 1 {
        return Vec::new();
    }
    let span = (t1 - t0) as f64;
    (t0 + 1..t1)
        .map(|t| {
            let w = (t - t0) as f64 / span;
            let v = a.iter().zip(b).map(|(x, y)| x + (y - x) * w).collect();
            StateVector::new(v).expect("interpolation of finite values is finite")
        })
        .collect()
}

/// `1 - exp(-1/d)`, taking the limit value 1 at `d = 0`.
pub fn likelihood_from_distance(squared_distance: f64) -> f64 {
    if squared_distance <= 0.0 {
        1.0
    } else {
        -(-1.0 / squared_distance).exp_m1()
    }
}

/// Synchronized comparison of the latest observed prefix signature with the
/// branch node at the same (original) timestep, clamped to the branch end.
pub fn score_branch_plain(obs: &ObservationLog, tree: &TrajectoryTree, branch: &Branch) -> f64 {
    let Some(current) = obs.current() else {
        return 0.0;
    };
    let t = obs.prefix_sigs.len() - 1;
    let node = branch.nodes[branch.position_at(t)];
    likelihood_from_distance(current.squared_distance(&tree.node(node).value))
}

/// Aggregated squared distance along the DTW alignment, using the first
/// branch index matched to each observation index.
pub fn dtw_branch_distance(
    obs: &ObservationLog,
    tree: &TrajectoryTree,
    branch: &Branch,
    radius: usize,
    reduction: DtwReduction,
) -> f64 {
    let a: Vec<&[f64]> = obs.prefix_sigs.iter().map(|s| s.terms()).collect();
    let b: Vec<&[f64]> = branch
        .nodes
        .iter()
        .map(|&n| tree.node(n).value.terms())
        .collect();
    if a.is_empty() {
        return 0.0;
    }
    let path = dtw_fast(&a, &b, radius).expect("signatures share one shape");
    let first = first_occurrence_map(&path);
    let sum: f64 = first
        .iter()
        .enumerate()
        .map(|(i, &j)| crate::signature::squared_distance(a[i], b[j]))
        .sum();
    match reduction {
        DtwReduction::Mean => sum / a.len() as f64,
        DtwReduction::Sum => sum,
    }
}

pub fn score_branch_dtw(
    obs: &ObservationLog,
    tree: &TrajectoryTree,
    branch: &Branch,
    radius: usize,
    reduction: DtwReduction,
) -> f64 {
    if obs.is_empty() {
        return 0.0;
    }
    likelihood_from_distance(dtw_branch_distance(obs, tree, branch, radius, reduction))
}

/// Per-goal reduction of branch scores, in branch order.
pub fn aggregate(scores: &[(GoalId, f64)], mode: Aggregation) -> BTreeMap<GoalId, f64> {
    let mut out: BTreeMap<GoalId, f64> = BTreeMap::new();
    match mode {
        Aggregation::Max => {
            for &(g, p) in scores {
                let e = out.entry(g).or_insert(0.0);
                *e = e.max(p);
            }
        }
        Aggregation::IncrementalMean => {
            let mut counts: BTreeMap<GoalId, u64> = BTreeMap::new();
            for &(g, p) in scores {
                let n = counts.entry(g).or_insert(0);
                let e = out.entry(g).or_insert(0.0);
                *e += (p - *e) / (*n + 1) as f64;
                *n += 1;
            }
        }
    }
    out
}

/// Probability distribution over goals, in goal order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalPosterior {
    pub goals: Vec<GoalId>,
    pub probabilities: Vec<f64>,
    /// Set when every goal scored zero and the uniform distribution was returned.
    pub degenerate: bool,
}

impl GoalPosterior {
    pub fn uniform(goals: Vec<GoalId>) -> Self {
        let p = 1.0 / goals.len() as f64;
        Self {
            probabilities: vec![p; goals.len()],
            goals,
            degenerate: false,
        }
    }

    pub fn get(&self, goal: GoalId) -> Option<f64> {
        self.goals
            .iter()
            .position(|g| *g == goal)
            .map(|i| self.probabilities[i])
    }

    /// Most probable goal; the lowest goal index wins exact ties.
    pub fn argmax(&self) -> GoalId {
        let mut best = 0;
        for (i, p) in self.probabilities.iter().enumerate() {
            if *p > self.probabilities[best] {
                best = i;
            }
        }
        self.goals[best]
    }

    /// All goals within `tolerance` of the best probability.
    pub fn predicted(&self, tolerance: f64) -> Vec<GoalId> {
        let max = self
            .probabilities
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        self.goals
            .iter()
            .zip(&self.probabilities)
            .filter(|(_, p)| max - **p <= tolerance)
            .map(|(g, _)| *g)
            .collect()
    }

    /// Goals sorted by decreasing probability, ties by goal order.
    pub fn ranking(&self) -> Vec<(GoalId, f64)> {
        let mut r: Vec<(usize, GoalId, f64)> = self
            .goals
            .iter()
            .zip(&self.probabilities)
            .enumerate()
            .map(|(i, (g, p))| (i, *g, *p))
            .collect();
        r.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        r.into_iter().map(|(_, g, p)| (g, p)).collect()
    }
}

/// Weights raw goal scores by the priors and normalizes; missing goals score 0.
pub fn normalize(
    raw: &BTreeMap<GoalId, f64>,
    goals: &[GoalId],
    priors: Option<&[f64]>,
) -> GoalPosterior {
    let weighted: Vec<f64> = goals
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let prior = priors.map_or(1.0 / goals.len() as f64, |p| p[i]);
            raw.get(g).copied().unwrap_or(0.0) * prior
        })
        .collect();
    let total: f64 = weighted.iter().sum();
    if total > 0.0 && total.is_finite() {
        GoalPosterior {
            goals: goals.to_vec(),
            probabilities: weighted.iter().map(|w| w / total).collect(),
            degenerate: false,
        }
    } else {
        GoalPosterior {
            degenerate: true,
            ..GoalPosterior::uniform(goals.to_vec())
        }
    }
}

/// Single-stream recognizer state.
#[derive(Debug, Clone)]
pub struct Engine {
    problem: RecognitionProblem,
    branches: Vec<Branch>,
    log: ObservationLog,
    finished: Option<GoalId>,
}

impl Engine {
    pub fn new(problem: RecognitionProblem) -> Result<Self, EngineError> {
        let branches = problem.tree.branches();
        let log = ObservationLog::new(problem.tree.dim(), problem.config.depth)?;
        Ok(Self {
            problem,
            branches,
            log,
            finished: None,
        })
    }

    pub fn problem(&self) -> &RecognitionProblem {
        &self.problem
    }

    pub fn log(&self) -> &ObservationLog {
        &self.log
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn finished(&self) -> Option<GoalId> {
        self.finished
    }

    fn reached_goal(&self, o: &StateVector) -> Option<GoalId> {
        let tol = self.problem.config.goal_tolerance;
        self.problem
            .goals
            .iter()
            .find(|g| {
                g.state
                    .iter()
                    .zip(o.iter())
                    .all(|(a, b)| (a - b).abs() <= tol)
            })
            .map(|g| g.id)
    }

    /// Consumes the observation `o` taken at timestep `t` and returns the updated posterior.
    ///
    /// A first observation after timestep 0 is bridged from the initial state.
    pub fn observe(&mut self, t: u64, o: StateVector) -> Result<GoalPosterior, EngineError> {
        if self.finished.is_some() {
            return Err(EngineError::Finished);
        }
        if o.dim() != self.problem.tree.dim() {
            return Err(SignatureError::DimensionMismatch {
                expected: self.problem.tree.dim(),
                found: o.dim(),
            }
            .into());
        }
        if let Some(g) = self.reached_goal(&o) {
            self.finished = Some(g);
            return Err(EngineError::GoalReached(g));
        }
        if self.log.last_t.is_none() && t > 0 {
            if self.problem.config.interpolation == Interpolation::None {
                return Err(EngineError::Gap { t, last: 0 });
            }
            self.log.seed(self.problem.initial_state.clone())?;
        }
        self.log.record(t, o, self.problem.config.interpolation)?;
        Ok(self.posterior())
    }

    /// Branch scores for the current observations, in branch order.
    pub fn branch_scores(&self) -> Vec<f64> {
        let tree = &*self.problem.tree;
        let cfg = &self.problem.config;
        match cfg.mode {
            ScoringMode::Plain => self
                .branches
                .iter()
                .map(|b| score_branch_plain(&self.log, tree, b))
                .collect(),
            // ordered collect keeps the reduction deterministic
            ScoringMode::Dtw => self
                .branches
                .par_iter()
                .map(|b| score_branch_dtw(&self.log, tree, b, cfg.dtw_radius, cfg.dtw_reduction))
                .collect(),
        }
    }

    pub fn posterior(&self) -> GoalPosterior {
        let scores: Vec<(GoalId, f64)> = self
            .branches
            .iter()
            .zip(self.branch_scores())
            .flat_map(|(b, p)| b.goals.iter().map(move |g| (*g, p)))
            .collect();
        let raw = aggregate(&scores, self.problem.config.aggregation);
        normalize(
            &raw,
            &self.problem.goal_ids(),
            self.problem.config.priors.as_deref(),
        )
    }
}
