//! Recognition quality metrics.
//!
//! Every observation step of an instance emits one prediction, the argmax
//! goal. PPV = TP / (TP + FP) over those step predictions, pooled across a
//! problem's instances. ACC is the share of instances whose last prediction
//! is the true goal, and SPR the mean size of the last predicted goal set.
//! Problem values are averaged across problems, with 95% normal-approximation
//! half-widths.

use serde::{Deserialize, Serialize};

use super::Setting;
use crate::trajtree::GoalId;

/// Mean, sample standard deviation and 95% half-width over `n` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Stat {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                sd: 0.0,
                half_width: 0.0,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            sd,
            half_width: 1.96 * sd / (n as f64).sqrt(),
            n,
        }
    }
}

/// One problem observed up to one fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub fraction: f64,
    pub truth: GoalId,
    /// Argmax goal after each observation step.
    pub step_argmax: Vec<GoalId>,
    /// Goals tied with the best posterior after the last step.
    pub final_predicted: Vec<GoalId>,
}

impl InstanceOutcome {
    pub fn true_positives(&self) -> usize {
        self.step_argmax
            .iter()
            .filter(|g| **g == self.truth)
            .count()
    }

    pub fn false_positives(&self) -> usize {
        self.step_argmax.len() - self.true_positives()
    }

    pub fn correct(&self) -> bool {
        self.step_argmax.last() == Some(&self.truth)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemOutcome {
    pub name: String,
    pub goal_count: usize,
    pub sampler_calls: usize,
    pub offline_secs: f64,
    pub online_secs: f64,
    pub instances: Vec<InstanceOutcome>,
    pub node_count: usize,
    pub branch_count: usize,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMetrics {
    pub name: String,
    pub tp: usize,
    pub fp: usize,
    pub ppv: f64,
    pub acc: f64,
    pub spr: f64,
    pub pc: usize,
    pub online_secs: f64,
    pub offline_secs: f64,
    pub node_count: usize,
    pub branch_count: usize,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionMetrics {
    pub fraction: f64,
    pub ppv: Stat,
    pub acc: Stat,
    pub spr: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub setting: Setting,
    pub ppv: Stat,
    pub acc: Stat,
    pub spr: Stat,
    pub pc: Stat,
    pub online_secs: Stat,
    pub offline_secs: Stat,
    pub per_fraction: Vec<FractionMetrics>,
    pub problems: Vec<ProblemMetrics>,
}

impl MetricsReport {
    pub fn violation_count(&self) -> usize {
        self.problems.iter().map(|p| p.violations.len()).sum()
    }
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn ppv_of<'a>(it: impl Iterator<Item = &'a InstanceOutcome>) -> (usize, usize, f64) {
    let (tp, fp) = it.fold((0, 0), |(tp, fp), i| {
        (tp + i.true_positives(), fp + i.false_positives())
    });
    (tp, fp, percent(tp, tp + fp))
}

fn spr_of<'a>(it: impl ExactSizeIterator<Item = &'a InstanceOutcome>) -> f64 {
    let n = it.len();
    if n == 0 {
        return 0.0;
    }
    it.map(|i| i.final_predicted.len()).sum::<usize>() as f64 / n as f64
}

pub fn problem_metrics(o: &ProblemOutcome) -> ProblemMetrics {
    let (tp, fp, ppv) = ppv_of(o.instances.iter());
    let correct = o.instances.iter().filter(|i| i.correct()).count();
    ProblemMetrics {
        name: o.name.clone(),
        tp,
        fp,
        ppv,
        acc: percent(correct, o.instances.len()),
        spr: spr_of(o.instances.iter()),
        pc: o.sampler_calls,
        online_secs: o.online_secs,
        offline_secs: o.offline_secs,
        node_count: o.node_count,
        branch_count: o.branch_count,
        violations: o.violations.clone(),
    }
}

/// Averages per-problem metrics; instances are matched across problems by position.
pub fn summarize(setting: Setting, outcomes: &[ProblemOutcome]) -> MetricsReport {
    let problems: Vec<ProblemMetrics> = outcomes.iter().map(problem_metrics).collect();
    let stat = |f: &dyn Fn(&ProblemMetrics) -> f64| {
        Stat::from_samples(&problems.iter().map(f).collect::<Vec<_>>())
    };
    let fractions: Vec<f64> = outcomes
        .first()
        .map(|o| o.instances.iter().map(|i| i.fraction).collect())
        .unwrap_or_default();
    let per_fraction = fractions
        .iter()
        .enumerate()
        .map(|(idx, &fraction)| {
            let at: Vec<&InstanceOutcome> = outcomes
                .iter()
                .filter_map(|o| o.instances.get(idx))
                .collect();
            FractionMetrics {
                fraction,
                ppv: Stat::from_samples(
                    &at.iter()
                        .map(|i| ppv_of(std::iter::once(*i)).2)
                        .collect::<Vec<_>>(),
                ),
                acc: Stat::from_samples(
                    &at.iter()
                        .map(|i| if i.correct() { 100.0 } else { 0.0 })
                        .collect::<Vec<_>>(),
                ),
                spr: Stat::from_samples(
                    &at.iter()
                        .map(|i| i.final_predicted.len() as f64)
                        .collect::<Vec<_>>(),
                ),
            }
        })
        .collect();
    MetricsReport {
        setting,
        ppv: stat(&|p| p.ppv),
        acc: stat(&|p| p.acc),
        spr: stat(&|p| p.spr),
        pc: stat(&|p| p.pc as f64),
        online_secs: stat(&|p| p.online_secs),
        offline_secs: stat(&|p| p.offline_secs),
        per_fraction,
        problems,
    }
}
