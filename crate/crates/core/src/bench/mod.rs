//! Experiment harness: offline tree construction, online recognition over
//! observation prefixes, metrics and threshold sweeps.

mod metrics;
mod report;
mod spec;

pub use metrics::{
    problem_metrics, summarize, FractionMetrics, InstanceOutcome, MetricsReport, ProblemMetrics,
    ProblemOutcome, Stat,
};
pub use report::{
    emit_grid, emit_report, read_reports_jsonl, ReportFormat, CSV_COLUMNS, GRID_CSV_COLUMNS,
};
pub use spec::{
    default_fractions, overlay, read_observations, ExperimentSpec, GridSpec, ObservationSource,
    ProblemSpec, SamplerSettings, TrajectorySource,
};

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recognizer::{
    Engine, EngineConfig, EngineError, Goal, GoalPosterior, RecognitionProblem, ScoringMode,
};
use crate::sampler::{
    load_trajectories, sample_k_trajectories, GridMap, MapError, SampleError, SampleRequest,
    TrajFileError,
};
use crate::signature::{SignatureError, StateVector, Trajectory};
use crate::trajtree::{GoalId, TrajectoryTree, TreeError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("problem '{problem}': {source}")]
    Sample {
        problem: String,
        source: SampleError,
    },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    TrajFile(#[from] TrajFileError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("observation line {line}: {msg}")]
    Observation { line: usize, msg: String },
    #[error("problem '{0}' has no observations")]
    NoObservations(String),
    #[error(transparent)]
    Report(#[from] report::ReportError),
}

/// One point of the configuration grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub mode: ScoringMode,
    pub depth: usize,
    pub k: usize,
    pub merge: f64,
    pub prune: f64,
}

impl Default for Setting {
    fn default() -> Self {
        Self {
            mode: ScoringMode::Plain,
            depth: 2,
            k: 5,
            merge: 0.0,
            prune: 0.0,
        }
    }
}

impl ExperimentSpec {
    /// The first value of every grid list.
    pub fn primary_setting(&self) -> Setting {
        Setting {
            mode: self.grid.mode[0],
            depth: self.engine.depth,
            k: self.grid.k[0],
            merge: self.grid.merge[0],
            prune: self.grid.prune[0],
        }
    }

    fn engine_config(&self, mode: ScoringMode) -> EngineConfig {
        EngineConfig {
            mode,
            ..self.engine.clone()
        }
    }
}

/// Trajectories, goals and observations of one problem for one K.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub name: String,
    pub goals: Vec<Goal>,
    pub initial_state: StateVector,
    pub truth: GoalId,
    pub trajectories: Vec<(Trajectory, GoalId)>,
    pub observations: Vec<(u64, StateVector)>,
    pub sampler_calls: usize,
    pub sampling_secs: f64,
}

fn sampler_seed(seed: u64, problem: usize, goal: usize) -> u64 {
    seed ^ ((problem as u64) << 32) ^ (goal as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn grid_of(
    spec: &ExperimentSpec,
    source: &TrajectorySource,
) -> Result<Option<GridMap>, BenchError> {
    Ok(match source {
        TrajectorySource::Map { path } => {
            let text = std::fs::read_to_string(spec.resolve(path))?;
            Some(GridMap::parse_movingai(&text)?)
        }
        TrajectorySource::Open { width, height } => Some(GridMap::new(*width, *height)?),
        TrajectorySource::Grid { rows } => Some(GridMap::from_rows(rows)?),
        TrajectorySource::Trajectories { .. } => None,
    })
}

fn request<'a>(
    spec: &ExperimentSpec,
    map: &'a GridMap,
    start: [f64; 2],
    goal: [f64; 2],
    k: usize,
    seed: u64,
) -> SampleRequest<'a> {
    let s = &spec.sampler;
    SampleRequest {
        spread: s.spread,
        step: s.step,
        attempts_per_path: s.attempts_per_path,
        min_separation: s.min_separation,
        ..SampleRequest::new(map, start, goal, k, seed)
    }
}

fn masked(mask: Option<&[bool]>, t: Trajectory) -> Result<Trajectory, SignatureError> {
    match mask {
        Some(m) => t.project(m),
        None => Ok(t),
    }
}

fn masked_state(mask: Option<&[bool]>, s: &[f64]) -> Result<StateVector, SignatureError> {
    match mask {
        Some(m) if m.len() != s.len() => Err(SignatureError::DimensionMismatch {
            expected: s.len(),
            found: m.len(),
        }),
        Some(m) => StateVector::new(
            s.iter()
                .zip(m)
                .filter(|(_, keep)| **keep)
                .map(|(v, _)| *v)
                .collect(),
        ),
        None => StateVector::new(s.to_vec()),
    }
}

/// Trajectories, goal states, start state and true goal before masking.
type Sampled = (
    Vec<(Trajectory, GoalId)>,
    Vec<(GoalId, Vec<f64>)>,
    Vec<f64>,
    GoalId,
);

/// Runs the offline sampling step for problem `index` with `k` trajectories per goal.
pub fn prepare_problem(
    spec: &ExperimentSpec,
    index: usize,
    k: usize,
) -> Result<PreparedProblem, BenchError> {
    let p = &spec.problems[index];
    let mask = spec.mask.as_deref();
    let sample_err = |source| BenchError::Sample {
        problem: p.name.clone(),
        source,
    };
    let clock = Instant::now();
    let mut sampler_calls = 0;
    let map = grid_of(spec, &p.source)?;
    let (raw, goal_states, initial, truth): Sampled = match &map {
        Some(map) => {
            let start = p.start.as_ref().expect("validated");
            let start = [start[0], start[1]];
            let mut raw = Vec::new();
            let mut goals = Vec::new();
            for (gi, g) in p.goals.iter().enumerate() {
                let seed = sampler_seed(spec.seed, index, gi);
                let req = request(spec, map, start, [g[0], g[1]], k, seed);
                let trajs = sample_k_trajectories(&req).map_err(sample_err)?;
                sampler_calls += 1;
                let id = GoalId(gi as u32);
                raw.extend(trajs.into_iter().map(|t| (t, id)));
                goals.push((id, g.clone()));
            }
            (raw, goals, start.to_vec(), GoalId(p.true_goal))
        }
        None => {
            let TrajectorySource::Trajectories { path } = &p.source else {
                unreachable!("non-grid source")
            };
            let all = load_trajectories(&spec.resolve(path))?;
            if all.is_empty() {
                return Err(BenchError::Config(format!(
                    "problem '{}': trajectory file is empty",
                    p.name
                )));
            }
            let ids: BTreeSet<GoalId> = all.iter().map(|(_, g)| *g).collect();
            let mut raw = Vec::new();
            for id in &ids {
                raw.extend(all.iter().filter(|(_, g)| g == id).take(k).cloned());
            }
            let goals = ids
                .iter()
                .map(|id| {
                    let (t, _) = all.iter().find(|(_, g)| g == id).expect("id from file");
                    (*id, t.last().to_vec())
                })
                .collect();
            let initial = p.start.clone().unwrap_or_else(|| all[0].0.first().to_vec());
            (raw, goals, initial, GoalId(p.true_goal))
        }
    };
    if !goal_states.iter().any(|(g, _)| *g == truth) {
        return Err(BenchError::Config(format!(
            "problem '{}': true goal {} is not a hypothesis",
            p.name, truth
        )));
    }

    let observed: Vec<(u64, Vec<f64>)> = match &p.observations {
        ObservationSource::Stored { index: j } => {
            let t = raw
                .iter()
                .filter(|(_, g)| *g == truth)
                .nth(*j)
                .ok_or_else(|| {
                    BenchError::Config(format!(
                        "problem '{}': no stored trajectory {j} for the true goal",
                        p.name
                    ))
                })?;
            t.0.to_rows()
                .into_iter()
                .enumerate()
                .map(|(i, r)| (i as u64, r))
                .collect()
        }
        ObservationSource::Sampled { seed, index: j } => {
            let Some(map) = &map else {
                return Err(BenchError::Config(format!(
                    "problem '{}': sampled observations need a grid source",
                    p.name
                )));
            };
            let start = [initial[0], initial[1]];
            let g = &p.goals[p.true_goal as usize];
            let req = request(spec, map, start, [g[0], g[1]], j + 1, *seed);
            let trajs = sample_k_trajectories(&req).map_err(sample_err)?;
            trajs[*j]
                .to_rows()
                .into_iter()
                .enumerate()
                .map(|(i, r)| (i as u64, r))
                .collect()
        }
        ObservationSource::File { path } => {
            read_observations(BufReader::new(File::open(spec.resolve(path))?))?
        }
        ObservationSource::Inline { points } => points
            .iter()
            .enumerate()
            .map(|(i, r)| (i as u64, r.clone()))
            .collect(),
    };
    let observations = observed
        .iter()
        .enumerate()
        .filter(|(i, _)| i % p.stride == 0)
        .map(|(_, (t, s))| Ok((*t, masked_state(mask, s)?)))
        .collect::<Result<Vec<_>, SignatureError>>()?;
    if observations.is_empty() {
        return Err(BenchError::NoObservations(p.name.clone()));
    }

    let trajectories = raw
        .into_iter()
        .map(|(t, g)| Ok((masked(mask, t)?, g)))
        .collect::<Result<Vec<_>, SignatureError>>()?;
    let goals = goal_states
        .iter()
        .map(|(id, s)| {
            Ok(Goal {
                id: *id,
                state: masked_state(mask, s)?,
            })
        })
        .collect::<Result<Vec<_>, SignatureError>>()?;
    Ok(PreparedProblem {
        name: p.name.clone(),
        goals,
        initial_state: masked_state(mask, &initial)?,
        truth,
        trajectories,
        observations,
        sampler_calls,
        sampling_secs: clock.elapsed().as_secs_f64(),
    })
}

/// Number of observations in a prefix covering `fraction` of `n`.
pub fn prefix_len(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Feeds observations one by one; a step that reaches a goal repeats the last posterior.
pub fn run_engine(
    engine: &mut Engine,
    observations: &[(u64, StateVector)],
) -> Result<Vec<GoalPosterior>, EngineError> {
    let mut out: Vec<GoalPosterior> = Vec::with_capacity(observations.len());
    for (t, o) in observations {
        match engine.observe(*t, o.clone()) {
            Ok(p) => out.push(p),
            Err(EngineError::GoalReached(_)) | Err(EngineError::Finished) => {
                let last = out
                    .last()
                    .cloned()
                    .unwrap_or_else(|| GoalPosterior::uniform(engine.problem().goal_ids()));
                out.push(last);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Online stage for one prepared problem on a finished tree.
fn recognize_prepared(
    spec: &ExperimentSpec,
    prepared: &PreparedProblem,
    tree: Arc<TrajectoryTree>,
    mode: ScoringMode,
    offline_secs: f64,
) -> Result<ProblemOutcome, BenchError> {
    let ids: BTreeSet<GoalId> = prepared.goals.iter().map(|g| g.id).collect();
    let diagnostics = tree.validate(&ids);
    let config = spec.engine_config(mode);
    let tie = config.tie_tolerance;
    let problem = RecognitionProblem::new(
        prepared.goals.clone(),
        prepared.initial_state.clone(),
        tree,
        config,
    )?;
    let n = prepared.observations.len();
    let lengths: Vec<usize> = spec.fractions.iter().map(|f| prefix_len(*f, n)).collect();
    let longest = lengths.iter().copied().max().unwrap_or(1);

    let clock = Instant::now();
    let mut engine = Engine::new(problem)?;
    let posteriors = run_engine(&mut engine, &prepared.observations[..longest])?;
    let online_secs = clock.elapsed().as_secs_f64();

    let instances = spec
        .fractions
        .iter()
        .zip(&lengths)
        .map(|(&fraction, &m)| InstanceOutcome {
            fraction,
            truth: prepared.truth,
            step_argmax: posteriors[..m].iter().map(GoalPosterior::argmax).collect(),
            final_predicted: posteriors[m - 1].predicted(tie),
        })
        .collect();
    Ok(ProblemOutcome {
        name: prepared.name.clone(),
        goal_count: prepared.goals.len(),
        sampler_calls: prepared.sampler_calls,
        offline_secs,
        online_secs,
        instances,
        node_count: diagnostics.stats.node_count,
        branch_count: diagnostics.stats.branch_count,
        violations: diagnostics
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect(),
    })
}

fn run_problem(
    spec: &ExperimentSpec,
    index: usize,
    setting: Setting,
) -> Result<ProblemOutcome, BenchError> {
    let prepared = prepare_problem(spec, index, setting.k)?;
    let clock = Instant::now();
    let tree = TrajectoryTree::build(&prepared.trajectories, setting.depth)?
        .compress(setting.merge, setting.prune)?;
    let offline = prepared.sampling_secs + clock.elapsed().as_secs_f64();
    recognize_prepared(spec, &prepared, Arc::new(tree), setting.mode, offline)
}

/// Runs every problem at one setting.
pub fn run_setting(spec: &ExperimentSpec, setting: Setting) -> Result<MetricsReport, BenchError> {
    let outcomes = (0..spec.problems.len())
        .into_par_iter()
        .map(|i| run_problem(spec, i, setting))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(setting, &outcomes))
}

/// Runs every problem at the experiment's primary setting.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<MetricsReport, BenchError> {
    run_setting(spec, spec.primary_setting())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub setting: Setting,
    pub ppv: f64,
    pub acc: f64,
    pub spr: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    pub cells: Vec<GridCell>,
    /// Highest-PPV cell per scoring mode.
    pub best: Vec<GridCell>,
    pub reports: Vec<MetricsReport>,
}

/// Best cell; ties go to the smaller prune, then merge, then K threshold.
pub fn best_cell<'a>(cells: impl IntoIterator<Item = &'a GridCell>) -> Option<&'a GridCell> {
    cells.into_iter().min_by(|a, b| {
        b.ppv
            .total_cmp(&a.ppv)
            .then(a.setting.prune.total_cmp(&b.setting.prune))
            .then(a.setting.merge.total_cmp(&b.setting.merge))
            .then(a.setting.k.cmp(&b.setting.k))
    })
}

fn grid_settings(spec: &ExperimentSpec) -> Vec<Setting> {
    let g = &spec.grid;
    let mut out = Vec::new();
    for &mode in &g.mode {
        for &k in &g.k {
            for &merge in &g.merge {
                for &prune in &g.prune {
                    out.push(Setting {
                        mode,
                        depth: spec.engine.depth,
                        k,
                        merge,
                        prune,
                    });
                }
            }
        }
    }
    out
}

/// Outcomes of one problem for every grid setting, sampling once per K.
fn sweep_problem(
    spec: &ExperimentSpec,
    index: usize,
    settings: &[Setting],
) -> Result<Vec<ProblemOutcome>, BenchError> {
    let mut out: Vec<Option<ProblemOutcome>> = vec![None; settings.len()];
    for &k in &spec.grid.k {
        let prepared = prepare_problem(spec, index, k)?;
        let clock = Instant::now();
        let base = TrajectoryTree::build(&prepared.trajectories, spec.engine.depth)?;
        let build_secs = clock.elapsed().as_secs_f64();
        for &merge in &spec.grid.merge {
            let clock = Instant::now();
            let merged = base.merge(merge)?;
            let merge_secs = clock.elapsed().as_secs_f64();
            for &prune in &spec.grid.prune {
                let clock = Instant::now();
                let tree = Arc::new(merged.prune(prune)?);
                let offline = prepared.sampling_secs
                    + build_secs
                    + merge_secs
                    + clock.elapsed().as_secs_f64();
                for (slot, s) in settings.iter().enumerate() {
                    if s.k == k && s.merge == merge && s.prune == prune {
                        out[slot] = Some(recognize_prepared(
                            spec,
                            &prepared,
                            tree.clone(),
                            s.mode,
                            offline,
                        )?);
                    }
                }
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|o| o.expect("every setting visited"))
        .collect())
}

/// Exhaustive sweep over the experiment grid.
pub fn grid_search(spec: &ExperimentSpec) -> Result<GridSearchReport, BenchError> {
    let settings = grid_settings(spec);
    let per_problem = (0..spec.problems.len())
        .into_par_iter()
        .map(|i| sweep_problem(spec, i, &settings))
        .collect::<Result<Vec<_>, _>>()?;
    let reports: Vec<MetricsReport> = settings
        .iter()
        .enumerate()
        .map(|(slot, s)| {
            let outcomes: Vec<ProblemOutcome> =
                per_problem.iter().map(|p| p[slot].clone()).collect();
            summarize(*s, &outcomes)
        })
        .collect();
    let cells: Vec<GridCell> = reports
        .iter()
        .map(|r| GridCell {
            setting: r.setting,
            ppv: r.ppv.mean,
            acc: r.acc.mean,
            spr: r.spr.mean,
            violations: r.violation_count(),
        })
        .collect();
    let best = spec
        .grid
        .mode
        .iter()
        .filter_map(|m| best_cell(cells.iter().filter(|c| c.setting.mode == *m)).cloned())
        .collect();
    Ok(GridSearchReport {
        cells,
        best,
        reports,
    })
}
