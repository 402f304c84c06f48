//! Experiment descriptions, read from TOML.
//!
//! ```toml
//! seed = 7
//! fractions = [0.142857142857, 0.285714285714]
//!
//! [engine]
//! depth = 2
//!
//! [grid]
//! merge = [0.0, 0.2]
//! prune = [0.0]
//! k = [5]
//! mode = ["plain", "dtw"]
//!
//! [[problems]]
//! name = "open-20"
//! source = { kind = "open", width = 20, height = 20 }
//! start = [0.0, 0.0]
//! goals = [[19.0, 19.0], [19.0, 0.0]]
//! true_goal = 0
//! observations = { kind = "stored", index = 0 }
//! ```
//!
//! Relative paths are resolved against the directory holding the TOML file.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::recognizer::{EngineConfig, ScoringMode};

fn default_seed() -> u64 {
    1
}

/// One to six sevenths of the observation sequence.
pub fn default_fractions() -> Vec<f64> {
    (1..=6).map(|i| i as f64 / 7.0).collect()
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sampler: SamplerSettings,
    /// Coordinates kept for signature computation; all when absent.
    #[serde(default)]
    pub mask: Option<Vec<bool>>,
    pub problems: Vec<ProblemSpec>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub merge: Vec<f64>,
    pub prune: Vec<f64>,
    pub k: Vec<usize>,
    pub mode: Vec<ScoringMode>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            merge: vec![0.0],
            prune: vec![0.0],
            k: vec![5],
            mode: vec![ScoringMode::Plain],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub spread: f64,
    pub step: f64,
    pub attempts_per_path: usize,
    pub min_separation: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            spread: 0.5,
            step: 1.0,
            attempts_per_path: 200,
            min_separation: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySource {
    /// Moving-AI map file; trajectories come from the sampler.
    Map { path: PathBuf },
    /// Obstacle-free grid.
    Open { width: usize, height: usize },
    /// Inline map rows, top row first.
    Grid { rows: Vec<String> },
    /// Pre-generated trajectory file; the first `k` per goal are used.
    Trajectories { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationSource {
    /// One of the true goal's tree trajectories, verbatim.
    Stored { index: usize },
    /// The `index`-th trajectory of an independent sampler run towards the true goal.
    Sampled {
        seed: u64,
        #[serde(default = "one")]
        index: usize,
    },
    /// File with `t x1 .. xd` lines.
    File { path: PathBuf },
    /// Points observed at timesteps 0, 1, ...
    Inline { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub source: TrajectorySource,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub goals: Vec<Vec<f64>>,
    pub true_goal: u32,
    pub observations: ObservationSource,
    /// Keep every `stride`-th observation; the rest are left to interpolation.
    #[serde(default = "one")]
    pub stride: usize,
}

/// Recursively overlays `over` onto `base`; values in `over` win.
pub fn overlay(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => overlay(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl ExperimentSpec {
    pub fn from_table(table: toml::Table, base_dir: &Path) -> Result<Self, BenchError> {
        let mut spec: ExperimentSpec = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))?;
        spec.base_dir = base_dir.to_path_buf();
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, BenchError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))?;
        Self::from_table(table, base_dir)
    }

    /// Reads an experiment file, layering it over `defaults`.
    pub fn load(path: &Path, defaults: toml::Table) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        let file: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| BenchError::Config(format!("{}: {e}", path.display())))?;
        let mut table = defaults;
        overlay(&mut table, file);
        Self::from_table(table, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.problems.is_empty() {
            return bad("no problems".into());
        }
        if self.fractions.is_empty() {
            return bad("no observation fractions".into());
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return bad(format!("fraction {f} outside (0, 1]"));
        }
        let g = &self.grid;
        if g.merge.is_empty() || g.prune.is_empty() || g.k.is_empty() || g.mode.is_empty() {
            return bad("every grid list needs at least one value".into());
        }
        if let Some(e) = g
            .merge
            .iter()
            .chain(&g.prune)
            .find(|e| e.is_nan() || **e < 0.0)
        {
            return bad(format!("threshold {e} must be non-negative"));
        }
        if g.k.contains(&0) {
            return bad("k must be at least 1".into());
        }
        if self.engine.depth == 0 {
            return bad("depth must be at least 1".into());
        }
        for p in &self.problems {
            if p.stride == 0 {
                return bad(format!("problem '{}': stride must be at least 1", p.name));
            }
            let sampled = !matches!(p.source, TrajectorySource::Trajectories { .. });
            if sampled {
                if p.start.as_ref().map(Vec::len) != Some(2) {
                    return bad(format!(
                        "problem '{}': grid problems need a 2-D start",
                        p.name
                    ));
                }
                if p.goals.is_empty() || p.goals.iter().any(|g| g.len() != 2) {
                    return bad(format!(
                        "problem '{}': grid problems need 2-D goals",
                        p.name
                    ));
                }
                if p.true_goal as usize >= p.goals.len() {
                    return bad(format!("problem '{}': true_goal out of range", p.name));
                }
            }
        }
        Ok(())
    }
}

/// Reads `t x1 .. xd` observation lines.
pub fn read_observations<R: BufRead>(r: R) -> Result<Vec<(u64, Vec<f64>)>, BenchError> {
    let mut out: Vec<(u64, Vec<f64>)> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let err = |msg: String| BenchError::Observation { line: i + 1, msg };
        let mut fields = text.split_whitespace();
        let t: u64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| err("expected an integer timestep".into()))?;
        let values = fields
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| err("bad coordinate".into()))?;
        if values.is_empty() {
            return Err(err("no coordinates".into()));
        }
        if let Some((_, first)) = out.first() {
            if first.len() != values.len() {
                return Err(err(format!(
                    "expected {} coordinates, found {}",
                    first.len(),
                    values.len()
                )));
            }
        }
        out.push((t, values));
    }
    Ok(out)
}
