//! Trees of partial path signatures.
//!
//! Every sampled trajectory contributes the chain of its prefix signatures,
//! hanging off a shared root that holds the trivial signature. Prefixes that
//! produce bit-identical signatures share nodes, so trajectories agreeing on
//! their first `m` states share the first `m` nodes. [`TrajectoryTree::merge`]
//! and [`TrajectoryTree::prune`] then trade width and depth for fidelity.

mod compress;
mod format;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signature::{prefix_signatures, PathSignature, SignatureError, Trajectory};

pub use format::{read_tree, write_tree, FormatError};

/// Identifier of a goal hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoalId(pub u32);

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("no trajectories to build from")]
    Empty,
    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: SignatureError,
    },
    #[error("trajectory {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("threshold must be a non-negative number, got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub value: PathSignature,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Goals reachable through this node.
    pub labels: BTreeSet<GoalId>,
    /// Goals whose trajectories end at this node.
    pub terminal: BTreeSet<GoalId>,
    /// Index of the prefix this node encodes; the root is 0. Preserved by merge and prune.
    pub timestep: usize,
}

/// Node arena, root at index 0, stored in depth-first preorder.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTree {
    dim: usize,
    depth: usize,
    nodes: Vec<TreeNode>,
    initial_state: Vec<f64>,
    goal_states: BTreeMap<GoalId, Vec<f64>>,
}

/// One root-to-end path of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub nodes: Vec<NodeId>,
    pub timesteps: Vec<usize>,
    /// Goals ending here; more than one only after over-aggressive compression.
    pub goals: Vec<GoalId>,
}

impl Branch {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of the deepest node whose original timestep is `<= t`.
    pub fn position_at(&self, t: usize) -> usize {
        self.timesteps
            .partition_point(|&ts| ts <= t)
            .saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeStats {
    pub node_count: usize,
    pub leaf_count: usize,
    pub branch_count: usize,
    pub height: usize,
    pub width_per_level: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    LeafCountBelowGoals { leaves: usize, goals: usize },
    MultiGoalLeaf { node: NodeId, goals: Vec<GoalId> },
    GoalWithoutBranch { goal: GoalId },
    UnknownGoal { goal: GoalId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LeafCountBelowGoals { leaves, goals } => {
                write!(
                    f,
                    "leaf count {leaves} is below the number of goals {goals}"
                )
            }
            Violation::MultiGoalLeaf { node, goals } => {
                let g: Vec<String> = goals.iter().map(ToString::to_string).collect();
                write!(
                    f,
                    "node {node} ends branches for several goals: {}",
                    g.join(",")
                )
            }
            Violation::GoalWithoutBranch { goal } => write!(f, "goal {goal} has no branch"),
            Violation::UnknownGoal { goal } => write!(f, "tree labels unknown goal {goal}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub stats: TreeStats,
    pub violations: Vec<Violation>,
}

impl Diagnostics {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl TrajectoryTree {
    /// Builds the uncompressed tree from `(trajectory, goal)` pairs.
    ///
    /// The goal state of each goal is the last point of its first trajectory,
    /// and the initial state is the first point of the first trajectory.
    pub fn build(trajs: &[(Trajectory, GoalId)], depth: usize) -> Result<Self, TreeError> {
        let (first, _) = trajs.first().ok_or(TreeError::Empty)?;
        let dim = first.dim();
        let root = TreeNode {
            value: PathSignature::trivial(dim, depth)
                .map_err(|source| TreeError::Trajectory { index: 0, source })?,
            parent: None,
            children: Vec::new(),
            labels: BTreeSet::new(),
            terminal: BTreeSet::new(),
            timestep: 0,
        };
        let mut tree = Self {
            dim,
            depth,
            nodes: vec![root],
            initial_state: first.first().to_vec(),
            goal_states: BTreeMap::new(),
        };
        for (index, (traj, goal)) in trajs.iter().enumerate() {
            if traj.dim() != dim {
                return Err(TreeError::DimensionMismatch {
                    index,
                    expected: dim,
                    found: traj.dim(),
                });
            }
            if traj.first() != tree.initial_state.as_slice() {
                log::debug!("trajectory {index} starts away from the shared initial state");
            }
            tree.goal_states
                .entry(*goal)
                .or_insert_with(|| traj.last().to_vec());
            let sigs = prefix_signatures(traj, depth)
                .map_err(|source| TreeError::Trajectory { index, source })?;
            tree.insert_chain(sigs, *goal);
        }
        Ok(tree)
    }

    fn insert_chain(&mut self, sigs: Vec<PathSignature>, goal: GoalId) {
        let mut at = 0;
        self.nodes[0].labels.insert(goal);
        for (t, sig) in sigs.into_iter().enumerate().skip(1) {
            let existing = self.nodes[at]
                .children
                .iter()
                .copied()
                .find(|&c| self.nodes[c].value == sig);
            at = match existing {
                Some(c) => c,
                None => {
                    let id = self.nodes.len();
                    self.nodes.push(TreeNode {
                        value: sig,
                        parent: Some(at),
                        children: Vec::new(),
                        labels: BTreeSet::new(),
                        terminal: BTreeSet::new(),
                        timestep: t,
                    });
                    self.nodes[at].children.push(id);
                    id
                }
            };
            self.nodes[at].labels.insert(goal);
        }
        self.nodes[at].terminal.insert(goal);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial_state
    }

    pub fn goal_states(&self) -> &BTreeMap<GoalId, Vec<f64>> {
        &self.goal_states
    }

    pub fn goal_ids(&self) -> BTreeSet<GoalId> {
        self.nodes[0].labels.clone()
    }

    /// Root-to-end paths in depth-first order, one per node where some trajectory ends.
    pub fn branches(&self) -> Vec<Branch> {
        let mut out = Vec::new();
        let mut path: Vec<NodeId> = Vec::new();
        // (node, depth in tree)
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, level)) = stack.pop() {
            path.truncate(level);
            path.push(id);
            let node = &self.nodes[id];
            if !node.terminal.is_empty() {
                out.push(Branch {
                    nodes: path.clone(),
                    timesteps: path.iter().map(|&n| self.nodes[n].timestep).collect(),
                    goals: node.terminal.iter().copied().collect(),
                });
            }
            for &c in node.children.iter().rev() {
                stack.push((c, level + 1));
            }
        }
        out
    }

    pub fn stats(&self) -> TreeStats {
        let mut width_per_level = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, level)) = stack.pop() {
            if width_per_level.len() <= level {
                width_per_level.resize(level + 1, 0);
            }
            width_per_level[level] += 1;
            for &c in &self.nodes[id].children {
                stack.push((c, level + 1));
            }
        }
        TreeStats {
            node_count: self.nodes.len(),
            leaf_count: self.nodes.iter().filter(|n| n.children.is_empty()).count(),
            branch_count: self.nodes.iter().filter(|n| !n.terminal.is_empty()).count(),
            height: width_per_level.len(),
            width_per_level,
        }
    }

    /// Structural report against the goal set the tree is meant to cover.
    pub fn validate(&self, goals: &BTreeSet<GoalId>) -> Diagnostics {
        let stats = self.stats();
        let mut violations = Vec::new();
        if stats.leaf_count < goals.len() {
            violations.push(Violation::LeafCountBelowGoals {
                leaves: stats.leaf_count,
                goals: goals.len(),
            });
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if node.terminal.len() > 1 {
                violations.push(Violation::MultiGoalLeaf {
                    node: id,
                    goals: node.terminal.iter().copied().collect(),
                });
            }
        }
        let labelled = self.goal_ids();
        for g in goals.difference(&labelled) {
            violations.push(Violation::GoalWithoutBranch { goal: *g });
        }
        for g in labelled.difference(goals) {
            violations.push(Violation::UnknownGoal { goal: *g });
        }
        Diagnostics { stats, violations }
    }

    /// Rebuilds the arena in preorder, dropping nodes no longer reachable from the root.
    fn compact(&mut self) {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            order.push(id);
            for &c in self.nodes[id].children.iter().rev() {
                stack.push(c);
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut old_nodes: Vec<Option<TreeNode>> = std::mem::take(&mut self.nodes)
            .into_iter()
            .map(Some)
            .collect();
        self.nodes = order
            .iter()
            .map(|&old| {
                let mut n = old_nodes[old].take().expect("node visited twice");
                n.parent = n.parent.map(|p| remap[p]);
                n.children.iter_mut().for_each(|c| *c = remap[*c]);
                n
            })
            .collect();
    }
}
