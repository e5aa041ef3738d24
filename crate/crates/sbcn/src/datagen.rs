//! Synthetic ground truth: random layered structures for six topology
//! classes, cumulative (monotone) sampling with conjunctive or disjunctive
//! parent conditions, and symmetric false-positive/false-negative noise.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BinaryDataset, Dag};

/// Minimum probability assigned to any node.
pub const P_MIN: f64 = 0.05;
/// Maximum probability assigned to any node.
pub const P_MAX: f64 = 0.95;
/// Maximum incoming arcs per node for the DAG topologies.
pub const W_STAR: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Tree,
    Forest,
    DagConjSingle,
    DagConjMulti,
    DagDisjSingle,
    DagDisjMulti,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 6] = [
        TopologyKind::Tree,
        TopologyKind::Forest,
        TopologyKind::DagConjSingle,
        TopologyKind::DagConjMulti,
        TopologyKind::DagDisjSingle,
        TopologyKind::DagDisjMulti,
    ];

    pub fn single_root(self) -> bool {
        matches!(
            self,
            TopologyKind::Tree | TopologyKind::DagConjSingle | TopologyKind::DagDisjSingle
        )
    }

    /// In-degree bound: one for tree-shaped kinds, w* for the DAG kinds.
    pub fn max_parents(self) -> usize {
        match self {
            TopologyKind::Tree | TopologyKind::Forest => 1,
            _ => W_STAR,
        }
    }

    pub fn logic(self) -> ParentLogic {
        match self {
            TopologyKind::DagDisjSingle | TopologyKind::DagDisjMulti => ParentLogic::Or,
            // with at most one parent the two logics coincide
            _ => ParentLogic::And,
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyKind::Tree => "tree",
            TopologyKind::Forest => "forest",
            TopologyKind::DagConjSingle => "dag_conj_single",
            TopologyKind::DagConjMulti => "dag_conj_multi",
            TopologyKind::DagDisjSingle => "dag_disj_single",
            TopologyKind::DagDisjMulti => "dag_disj_multi",
        })
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(TopologyKind::Tree),
            "forest" => Ok(TopologyKind::Forest),
            "dag_conj_single" => Ok(TopologyKind::DagConjSingle),
            "dag_conj_multi" => Ok(TopologyKind::DagConjMulti),
            "dag_disj_single" => Ok(TopologyKind::DagDisjSingle),
            "dag_disj_multi" => Ok(TopologyKind::DagDisjMulti),
            other => Err(Error::InvalidInput(format!(
                "unknown topology '{}', expected tree|forest|dag_conj_single|dag_conj_multi|dag_disj_single|dag_disj_multi",
                other
            ))),
        }
    }
}

/// How a node's parent condition is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParentLogic {
    /// All parents must be active.
    And,
    /// At least one parent must be active.
    Or,
}

impl fmt::Display for ParentLogic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParentLogic::And => "and",
            ParentLogic::Or => "or",
        })
    }
}

impl FromStr for ParentLogic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "and" => Ok(ParentLogic::And),
            "or" => Ok(ParentLogic::Or),
            other => Err(Error::InvalidInput(format!(
                "unknown parent logic '{}', expected and|or",
                other
            ))),
        }
    }
}

/// A sampling source: structure, parent logic, and per-node probabilities.
///
/// `activation[v]` is P(v = 1) for a root and P(v = 1 | parent condition
/// holds) otherwise; a node whose condition fails is deterministically 0.
/// Observation noise is injected after sampling, never inside these
/// parameters.
#[derive(Clone, Debug)]
pub struct GenerativeModel {
    pub dag: Dag,
    pub logic: ParentLogic,
    pub activation: Vec<f64>,
}

impl GenerativeModel {
    pub fn n(&self) -> usize {
        self.dag.n()
    }
}

fn ceil_log2(s: usize) -> usize {
    debug_assert!(s >= 2);
    (s - 1).ilog2() as usize + 1
}

/// Lays out one single-source component over `members` (first entry becomes
/// the root), pushing its arcs into `arcs`. Nodes sit on levels 1..=L with
/// every level non-empty; parents come from the previous level.
fn build_component(
    members: &[usize],
    max_parents: usize,
    arcs: &mut Vec<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) {
    let s = members.len();
    if s < 2 {
        return;
    }
    let root = members[0];
    let depth = ceil_log2(s).max(2);
    let level_count = depth - 1; // levels 2..=depth
    let non_roots = &members[1..];
    // one node pinned to each level, the rest uniform, then shuffled
    let mut levels: Vec<usize> = (2..=depth)
        .chain((level_count..non_roots.len()).map(|_| rng.gen_range(2..=depth)))
        .collect();
    levels.shuffle(rng);
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
    by_level[1].push(root);
    for (&node, &level) in non_roots.iter().zip(levels.iter()) {
        by_level[level].push(node);
    }
    for level in 2..=depth {
        // split_at keeps the borrow checker happy: previous levels are
        // finalized before the current one is processed
        let (done, _) = by_level.split_at(level + 1);
        let prev = &done[level - 1];
        debug_assert!(!prev.is_empty());
        for &node in &done[level] {
            let count = rng.gen_range(1..=max_parents.min(prev.len()));
            let mut chosen: Vec<usize> =
                prev.choose_multiple(rng, count).copied().collect();
            chosen.sort_unstable();
            for parent in chosen {
                arcs.push((parent, node));
            }
        }
    }
}

/// Draws a random ground-truth model of the requested kind over `n` nodes.
///
/// Single-source kinds get one component; forests and multi-root DAGs are
/// built as independent single-source components, with the root count
/// uniform in [1, ceil(n/5)] and nodes partitioned at random.
pub fn generate_structure(kind: TopologyKind, n: usize, rng: &mut ChaCha8Rng) -> GenerativeModel {
    assert!(n >= 1, "a model needs at least one node");
    let root_count = if kind.single_root() || n == 1 {
        1
    } else {
        rng.gen_range(1..=n.div_ceil(5))
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    // seed one node per component, then scatter the rest
    let mut components: Vec<Vec<usize>> = order[..root_count]
        .iter()
        .map(|&seed| vec![seed])
        .collect();
    for &node in &order[root_count..] {
        components[rng.gen_range(0..root_count)].push(node);
    }
    let mut arcs = Vec::new();
    for members in &components {
        build_component(members, kind.max_parents(), &mut arcs, rng);
    }
    let dag = Dag::from_arcs(n, arcs).expect("layered construction is acyclic");
    let activation: Vec<f64> = (0..n).map(|_| rng.gen_range(P_MIN..=P_MAX)).collect();
    GenerativeModel {
        dag,
        logic: kind.logic(),
        activation,
    }
}

/// Samples `m` observations from the model, realizing nodes in topological
/// order. A node whose parent condition fails in a row is 0 in that row, so
/// noiseless samples obey the cumulative support conditions exactly.
pub fn sample_dataset(model: &GenerativeModel, m: usize, rng: &mut ChaCha8Rng) -> BinaryDataset {
    assert!(m >= 1, "a dataset needs at least one sample");
    let n = model.n();
    let order = model.dag.topological_order();
    let names = (0..n).map(|j| format!("v{}", j)).collect();
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row = vec![0u8; n];
        for &v in &order {
            let parents = model.dag.parents(v);
            let condition = if parents.is_empty() {
                true
            } else {
                match model.logic {
                    ParentLogic::And => parents.iter().all(|&p| row[p] == 1),
                    ParentLogic::Or => parents.iter().any(|&p| row[p] == 1),
                }
            };
            if condition && rng.gen::<f64>() < model.activation[v] {
                row[v] = 1;
            }
        }
        rows.push(row);
    }
    BinaryDataset::new(names, rows).expect("sampled rows are well-formed")
}

/// Returns a fresh dataset with every cell independently flipped with
/// probability `nu` (symmetric false positives and false negatives).
pub fn inject_noise(data: &BinaryDataset, nu: f64, rng: &mut ChaCha8Rng) -> BinaryDataset {
    assert!((0.0..=1.0).contains(&nu), "noise rate must lie in [0, 1]");
    let rows: Vec<Vec<u8>> = data
        .rows()
        .map(|row| {
            row.iter()
                .map(|&cell| {
                    if rng.gen::<f64>() < nu {
                        1 - cell
                    } else {
                        cell
                    }
                })
                .collect()
        })
        .collect();
    BinaryDataset::new(data.names().to_vec(), rows).expect("flipping preserves shape")
}

/// True iff every row of `data` satisfies the model's support condition:
/// an active child implies its parent condition held.
pub fn satisfies_support(model: &GenerativeModel, data: &BinaryDataset) -> bool {
    for row in data.rows() {
        for v in 0..model.n() {
            if row[v] != 1 {
                continue;
            }
            let parents = model.dag.parents(v);
            if parents.is_empty() {
                continue;
            }
            let ok = match model.logic {
                ParentLogic::And => parents.iter().all(|&p| row[p] == 1),
                ParentLogic::Or => parents.iter().any(|&p| row[p] == 1),
            };
            if !ok {
                return false;
            }
        }
    }
    true
}
