//! Width and depth reduction.
//!
//! Both thresholds are compared against squared Euclidean distances between
//! signature vectors, with strict inequality, so a threshold of 0 never
//! changes the tree. Merge must run before prune: merge only ever compares
//! siblings, which share a timestep, and prune breaks that alignment.

use std::collections::VecDeque;

use super::{NodeId, TrajectoryTree, TreeError};

fn check_threshold(eps: f64) -> Result<(), TreeError> {
    if eps.is_nan() || eps < 0.0 {
        Err(TreeError::BadThreshold(eps))
    } else {
        Ok(())
    }
}

impl TrajectoryTree {
    /// Merges near-identical siblings.
    ///
    /// Nodes are visited breadth-first. Within a node, sibling pairs are
    /// scanned left to right; when a pair is closer than `eps` the right
    /// node is removed, its children move to the left node, and the left
    /// node's value becomes the mean of the two. The scan restarts after
    /// every merge and compares against the running mean.
    pub fn merge(&self, eps: f64) -> Result<TrajectoryTree, TreeError> {
        check_threshold(eps)?;
        let mut t = self.clone();
        let mut queue = VecDeque::from([0usize]);
        while let Some(n) = queue.pop_front() {
            while let Some((z, j)) = t.first_close_sibling_pair(n, eps) {
                t.absorb_sibling(n, z, j);
            }
            queue.extend(t.nodes[n].children.iter().copied());
        }
        t.compact();
        Ok(t)
    }

    /// Removes children that sit closer than `eps` to their parent.
    ///
    /// Runs top-down; a removed child's children are spliced into the
    /// parent in its place and are themselves tested against the parent,
    /// so each node ends with no child closer than `eps`. Goals ending at
    /// a removed node now end at its parent.
    pub fn prune(&self, eps: f64) -> Result<TrajectoryTree, TreeError> {
        check_threshold(eps)?;
        let mut t = self.clone();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            while let Some(pos) = t.first_close_child(n, eps) {
                t.splice_child(n, pos);
            }
            stack.extend(t.nodes[n].children.iter().rev().copied());
        }
        t.compact();
        Ok(t)
    }

    /// Merge then prune.
    pub fn compress(&self, merge_eps: f64, prune_eps: f64) -> Result<TrajectoryTree, TreeError> {
        self.merge(merge_eps)?.prune(prune_eps)
    }

    fn first_close_sibling_pair(&self, n: NodeId, eps: f64) -> Option<(NodeId, NodeId)> {
        let ch = &self.nodes[n].children;
        for (a, &z) in ch.iter().enumerate() {
            for &j in &ch[a + 1..] {
                if self.nodes[z].value.squared_distance(&self.nodes[j].value) < eps {
                    return Some((z, j));
                }
            }
        }
        None
    }

    fn absorb_sibling(&mut self, parent: NodeId, keep: NodeId, drop: NodeId) {
        let dropped = std::mem::take(&mut self.nodes[drop].children);
        for &c in &dropped {
            self.nodes[c].parent = Some(keep);
        }
        let mean = self.nodes[keep]
            .value
            .midpoint(&self.nodes[drop].value)
            .expect("siblings share dimension and depth");
        let labels = std::mem::take(&mut self.nodes[drop].labels);
        let terminal = std::mem::take(&mut self.nodes[drop].terminal);
        let k = &mut self.nodes[keep];
        k.value = mean;
        k.children.extend(dropped);
        k.labels.extend(labels);
        k.terminal.extend(terminal);
        self.nodes[parent].children.retain(|&c| c != drop);
        self.nodes[drop].parent = None;
    }

    fn first_close_child(&self, n: NodeId, eps: f64) -> Option<usize> {
        let parent = &self.nodes[n].value;
        self.nodes[n]
            .children
            .iter()
            .position(|&c| parent.squared_distance(&self.nodes[c].value) < eps)
    }

    fn splice_child(&mut self, n: NodeId, pos: usize) {
        let c = self.nodes[n].children[pos];
        let grandchildren = std::mem::take(&mut self.nodes[c].children);
        for &g in &grandchildren {
            self.nodes[g].parent = Some(n);
        }
        let terminal = std::mem::take(&mut self.nodes[c].terminal);
        self.nodes[n].terminal.extend(terminal);
        self.nodes[n].children.splice(pos..=pos, grandchildren);
        self.nodes[c].parent = None;
    }
}
