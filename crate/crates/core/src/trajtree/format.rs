//! Line-oriented text encoding of a [`TrajectoryTree`].
//!
//! ```text
//! sigrecog-tree 1
//! dim <d> depth <k> nodes <n> state_dim <s>
//! initial <s values>
//! goal <id> <s values>              one line per goal
//! node <idx> <parent> <timestep> <terminal> <terms...>
//! ```
//!
//! Nodes appear in preorder with `idx` counting from 0; the root has parent
//! `-`. `<terminal>` is a comma-separated list of goal ids or `-`. Floats are
//! written in shortest round-trip form, so a write/read cycle is bit-exact.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use thiserror::Error;

use super::{GoalId, TrajectoryTree, TreeNode};
use crate::signature::PathSignature;

const MAGIC: &str = "sigrecog-tree";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unexpected end of input: {0}")]
    Truncated(&'static str),
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Parse {
        line,
        msg: msg.into(),
    })
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_tree<W: Write>(tree: &TrajectoryTree, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(
        w,
        "dim {} depth {} nodes {} state_dim {}",
        tree.dim,
        tree.depth,
        tree.nodes.len(),
        tree.initial_state.len()
    )?;
    writeln!(w, "initial {}", join(&tree.initial_state))?;
    for (g, s) in &tree.goal_states {
        writeln!(w, "goal {} {}", g.0, join(s))?;
    }
    for (i, n) in tree.nodes.iter().enumerate() {
        let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
        let terminal = if n.terminal.is_empty() {
            "-".to_string()
        } else {
            n.terminal
                .iter()
                .map(|g| g.0.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(
            w,
            "node {i} {parent} {} {terminal} {}",
            n.timestep,
            join(n.value.terms())
        )?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_content(&mut self) -> Result<Option<(usize, String)>, FormatError> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Ok(Some((self.number, trimmed.to_string())));
        }
        Ok(None)
    }

    fn expect(&mut self, what: &'static str) -> Result<(usize, String), FormatError> {
        self.next_content()?.ok_or(FormatError::Truncated(what))
    }
}

fn parse_floats(line: usize, fields: &[&str]) -> Result<Vec<f64>, FormatError> {
    fields
        .iter()
        .map(|f| match f.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => perr(line, format!("bad number '{f}'")),
        })
        .collect()
}

fn parse_usize(line: usize, field: &str) -> Result<usize, FormatError> {
    field
        .parse()
        .or_else(|_| perr(line, format!("bad integer '{field}'")))
}

fn parse_goal(line: usize, field: &str) -> Result<GoalId, FormatError> {
    field
        .parse()
        .map(GoalId)
        .or_else(|_| perr(line, format!("bad goal id '{field}'")))
}

fn keyed(line: usize, fields: &[&str], keys: &[&str]) -> Result<Vec<usize>, FormatError> {
    if fields.len() != keys.len() * 2 {
        return perr(line, format!("expected {}", keys.join("/")));
    }
    keys.iter()
        .enumerate()
        .map(|(i, k)| {
            if fields[2 * i] != *k {
                perr(
                    line,
                    format!("expected key '{k}', found '{}'", fields[2 * i]),
                )
            } else {
                parse_usize(line, fields[2 * i + 1])
            }
        })
        .collect()
}

pub fn read_tree<R: BufRead>(r: R) -> Result<TrajectoryTree, FormatError> {
    let mut lines = Lines {
        inner: r.lines(),
        number: 0,
    };
    let (ln, magic) = lines.expect("header")?;
    match magic.split_whitespace().collect::<Vec<_>>().as_slice() {
        [m, v] if *m == MAGIC => {
            if parse_usize(ln, v)? != VERSION as usize {
                return perr(ln, format!("unsupported version {v}"));
            }
        }
        _ => return perr(ln, "not a trajectory tree file"),
    }
    let (ln, shape) = lines.expect("shape line")?;
    let shape_fields: Vec<&str> = shape.split_whitespace().collect();
    let v = keyed(ln, &shape_fields, &["dim", "depth", "nodes", "state_dim"])?;
    let (dim, depth, count, state_dim) = (v[0], v[1], v[2], v[3]);
    if count == 0 {
        return perr(ln, "tree needs at least a root node");
    }

    let (ln, initial) = lines.expect("initial state")?;
    let fields: Vec<&str> = initial.split_whitespace().collect();
    if fields.first() != Some(&"initial") || fields.len() != state_dim + 1 {
        return perr(ln, format!("expected 'initial' with {state_dim} values"));
    }
    let initial_state = parse_floats(ln, &fields[1..])?;

    let mut goal_states = BTreeMap::new();
    let mut nodes: Vec<TreeNode> = Vec::with_capacity(count);
    while nodes.len() < count {
        let (ln, line) = lines.expect("node records")?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "goal" if nodes.is_empty() => {
                if fields.len() != state_dim + 2 {
                    return perr(ln, format!("goal needs an id and {state_dim} values"));
                }
                let g = parse_goal(ln, fields[1])?;
                goal_states.insert(g, parse_floats(ln, &fields[2..])?);
            }
            "node" => {
                if fields.len() < 5 {
                    return perr(ln, "truncated node record");
                }
                let idx = parse_usize(ln, fields[1])?;
                if idx != nodes.len() {
                    return perr(ln, format!("expected node {}, found {idx}", nodes.len()));
                }
                let parent = match fields[2] {
                    "-" if idx == 0 => None,
                    "-" => return perr(ln, "only the root may lack a parent"),
                    p => {
                        let p = parse_usize(ln, p)?;
                        if p >= idx {
                            return perr(ln, "parent must precede its child");
                        }
                        Some(p)
                    }
                };
                if idx == 0 && parent.is_some() {
                    return perr(ln, "root cannot have a parent");
                }
                let timestep = parse_usize(ln, fields[3])?;
                let terminal: BTreeSet<GoalId> = match fields[4] {
                    "-" => BTreeSet::new(),
                    list => list
                        .split(',')
                        .map(|g| parse_goal(ln, g))
                        .collect::<Result<_, _>>()?,
                };
                let terms = parse_floats(ln, &fields[5..])?;
                let value = PathSignature::from_terms(dim, depth, terms)
                    .or_else(|e| perr(ln, e.to_string()))?;
                if let Some(p) = parent {
                    nodes[p].children.push(idx);
                }
                nodes.push(TreeNode {
                    value,
                    parent,
                    children: Vec::new(),
                    labels: BTreeSet::new(),
                    terminal,
                    timestep,
                });
            }
            other => return perr(ln, format!("unexpected record '{other}'")),
        }
    }
    if let Some((ln, _)) = lines.next_content()? {
        return perr(ln, "trailing content after the last node");
    }

    // reachable-goal labels, children before parents in reverse preorder
    for i in (0..nodes.len()).rev() {
        let mut labels = nodes[i].terminal.clone();
        for &c in &nodes[i].children {
            labels.extend(nodes[c].labels.iter().copied());
        }
        nodes[i].labels = labels;
    }
    let mut tree = TrajectoryTree {
        dim,
        depth,
        nodes,
        initial_state,
        goal_states,
    };
    // files written by other tools may list nodes in any parent-first order
    tree.compact();
    Ok(tree)
}
