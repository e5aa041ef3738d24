//! Core data types shared by every stage of the pipeline: binary datasets,
//! DAGs, arc masks, single-arc moves and the local-score cache.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// An m x n table of 0/1 observations with named columns.
///
/// Immutable after construction; rows are samples, columns are variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryDataset {
    names: Vec<String>,
    cells: Vec<u8>, // row-major, m * n
    m: usize,
    n: usize,
}

impl BinaryDataset {
    pub fn new(names: Vec<String>, rows: Vec<Vec<u8>>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "dataset needs at least one variable".into(),
            ));
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != n {
            return Err(Error::InvalidInput(
                "dataset variable names must be unique".into(),
            ));
        }
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidInput(
                "dataset needs at least one sample".into(),
            ));
        }
        let mut cells = Vec::with_capacity(m * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {} has {} cells, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
            for (j, &cell) in row.iter().enumerate() {
                if cell > 1 {
                    return Err(Error::InvalidInput(format!(
                        "row {} column {} holds {}, cells must be 0 or 1",
                        i, j, cell
                    )));
                }
                cells.push(cell);
            }
        }
        Ok(Self { names, cells, m, n })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.cells[row * self.n..(row + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.cells.chunks_exact(self.n)
    }
}

/// A single-arc edit, the unit step of every local search.
///
/// Arcs are written `(parent, child)` throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Add { parent: usize, child: usize },
    Delete { parent: usize, child: usize },
    Reverse { parent: usize, child: usize },
}

impl Move {
    /// The move that undoes this one (tabu lists store these).
    pub fn inverse(self) -> Move {
        match self {
            Move::Add { parent, child } => Move::Delete { parent, child },
            Move::Delete { parent, child } => Move::Add { parent, child },
            Move::Reverse { parent, child } => Move::Reverse {
                parent: child,
                child: parent,
            },
        }
    }
}

/// Directed acyclic graph over `n` labeled nodes.
///
/// Acyclicity is an invariant: every constructor and mutator re-checks it,
/// so a `Dag` in hand is always valid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    n: usize,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
    arc_count: usize,
}

impl Dag {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            parents: vec![BTreeSet::new(); n],
            children: vec![BTreeSet::new(); n],
            arc_count: 0,
        }
    }

    /// Builds a DAG from `(parent, child)` pairs, rejecting out-of-range
    /// indices, self-loops, duplicates and cycles.
    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut dag = Self::empty(n);
        let mut seen = BTreeSet::new();
        for (u, v) in arcs {
            check_arc_indices(u, v, n)?;
            if !seen.insert((u, v)) {
                return Err(Error::InvalidGraph(format!("duplicate arc {}->{}", u, v)));
            }
            dag.parents[v].insert(u);
            dag.children[u].insert(v);
            dag.arc_count += 1;
        }
        let pairs: Vec<(usize, usize)> = dag.arcs();
        if !is_acyclic(&pairs, n)? {
            return Err(Error::InvalidGraph("arc set contains a cycle".into()));
        }
        Ok(dag)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    /// All arcs as `(parent, child)`, sorted.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.arc_count);
        for (u, ch) in self.children.iter().enumerate() {
            for &v in ch {
                out.push((u, v));
            }
        }
        out
    }

    #[inline]
    pub fn has_arc(&self, parent: usize, child: usize) -> bool {
        self.children[parent].contains(&child)
    }

    pub fn parents(&self, v: usize) -> &BTreeSet<usize> {
        &self.parents[v]
    }

    pub fn parent_count(&self, v: usize) -> usize {
        self.parents[v].len()
    }

    /// True iff a directed path `from ~> to` exists (including `from == to`).
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        self.has_path_excluding(from, to, None)
    }

    /// Path query that pretends the arc `skip` is absent. Used to decide
    /// whether reversing an arc would close a cycle through another route.
    pub fn has_path_excluding(
        &self,
        from: usize,
        to: usize,
        skip: Option<(usize, usize)>,
    ) -> bool {
        if from == to {
            return true;
        }
        let mut visited = vec![false; self.n];
        let mut stack = vec![from];
        visited[from] = true;
        while let Some(u) = stack.pop() {
            for &w in &self.children[u] {
                if skip == Some((u, w)) {
                    continue;
                }
                if w == to {
                    return true;
                }
                if !visited[w] {
                    visited[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    /// Adds `parent -> child`, failing if the arc exists or would close a cycle.
    pub fn add_arc(&mut self, parent: usize, child: usize) -> Result<()> {
        check_arc_indices(parent, child, self.n)?;
        if self.has_arc(parent, child) {
            return Err(Error::InvalidGraph(format!(
                "arc {}->{} already present",
                parent, child
            )));
        }
        if self.has_path(child, parent) {
            return Err(Error::InvalidGraph(format!(
                "arc {}->{} would create a cycle",
                parent, child
            )));
        }
        self.parents[child].insert(parent);
        self.children[parent].insert(child);
        self.arc_count += 1;
        Ok(())
    }

    pub fn remove_arc(&mut self, parent: usize, child: usize) -> Result<()> {
        check_arc_indices(parent, child, self.n)?;
        if !self.has_arc(parent, child) {
            return Err(Error::InvalidGraph(format!(
                "arc {}->{} not present",
                parent, child
            )));
        }
        self.parents[child].remove(&parent);
        self.children[parent].remove(&child);
        self.arc_count -= 1;
        Ok(())
    }

    pub fn apply_move(&mut self, mv: Move) -> Result<()> {
        match mv {
            Move::Add { parent, child } => self.add_arc(parent, child),
            Move::Delete { parent, child } => self.remove_arc(parent, child),
            Move::Reverse { parent, child } => {
                self.remove_arc(parent, child)?;
                match self.add_arc(child, parent) {
                    Ok(()) => Ok(()),
                    Err(e) => {
                        // put the original arc back so the graph is untouched
                        self.parents[child].insert(parent);
                        self.children[parent].insert(child);
                        self.arc_count += 1;
                        Err(e)
                    }
                }
            }
        }
    }

    /// Kahn's algorithm, always picking the smallest ready index, so the
    /// order is canonical for a given graph.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut indegree: Vec<usize> = (0..self.n).map(|v| self.parents[v].len()).collect();
        let mut ready: BTreeSet<usize> = (0..self.n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(&u) = ready.iter().next() {
            ready.remove(&u);
            order.push(u);
            for &w in &self.children[u] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        debug_assert_eq!(order.len(), self.n, "Dag invariant violated");
        order
    }
}

fn check_arc_indices(u: usize, v: usize, n: usize) -> Result<()> {
    if u >= n || v >= n {
        return Err(Error::InvalidGraph(format!(
            "arc {}->{} out of range for {} nodes",
            u, v, n
        )));
    }
    if u == v {
        return Err(Error::InvalidGraph(format!("self-loop on node {}", u)));
    }
    Ok(())
}

/// True iff a topological ordering of the arc relation exists.
///
/// A self-loop counts as a cycle. Out-of-range indices are an error.
pub fn is_acyclic(arcs: &[(usize, usize)], n: usize) -> Result<bool> {
    let mut indegree = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in arcs {
        if u >= n || v >= n {
            return Err(Error::InvalidGraph(format!(
                "arc {}->{} out of range for {} nodes",
                u, v, n
            )));
        }
        if u == v {
            return Ok(false);
        }
        indegree[v] += 1;
        children[u].push(v);
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0usize;
    while let Some(u) = ready.pop() {
        seen += 1;
        for &w in &children[u] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.push(w);
            }
        }
    }
    Ok(seen == n)
}

/// Confusion counts between a ground-truth DAG and an inferred one, over all
/// `n(n-1)` ordered node pairs. Returns `(tp, fp, tn, fn)`.
pub fn structural_hamming_components(
    truth: &Dag,
    inferred: &Dag,
) -> Result<(usize, usize, usize, usize)> {
    if truth.n() != inferred.n() {
        return Err(Error::InvalidComparison(format!(
            "truth has {} nodes, inferred has {}",
            truth.n(),
            inferred.n()
        )));
    }
    let n = truth.n();
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            match (truth.has_arc(u, v), inferred.has_arc(u, v)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    Ok((tp, fp, tn, fn_))
}

/// Boolean n x n table of admissible arcs; the pruned search space.
///
/// The diagonal is always false. Masks produced by the prima-facie miner
/// additionally admit at most one orientation per pair; the permissive
/// baseline mask from [`crate::suppes::full_mask`] deliberately does not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcMask {
    n: usize,
    allowed: Vec<bool>, // row-major n * n, [u * n + v] == arc u -> v admissible
}

impl ArcMask {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            allowed: vec![false; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn allowed(&self, u: usize, v: usize) -> bool {
        self.allowed[u * self.n + v]
    }

    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        assert!(u != v, "mask diagonal is fixed to false");
        self.allowed[u * self.n + v] = value;
    }

    pub fn arc_count(&self) -> usize {
        self.allowed.iter().filter(|&&b| b).count()
    }

    /// Admissible arcs as sorted `(parent, child)` pairs.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in 0..self.n {
                if self.allowed(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// True iff no pair is admitted in both orientations.
    pub fn is_antisymmetric(&self) -> bool {
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.allowed(u, v) && self.allowed(v, u) {
                    return false;
                }
            }
        }
        true
    }
}

/// Memo of local scores keyed by `(child, sorted parent set)`.
///
/// Local scores are invariant to parent ordering, so keys use the sorted
/// set. A cache is bound to one `(dataset, score spec)` pair and owned by a
/// single search run.
#[derive(Clone, Debug, Default)]
pub struct ScoreCache {
    map: HashMap<usize, HashMap<Vec<usize>, f64>>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, child: usize, sorted_parents: &[usize]) -> Option<f64> {
        self.map.get(&child)?.get(sorted_parents).copied()
    }

    pub fn insert(&mut self, child: usize, sorted_parents: &[usize], value: f64) {
        self.map
            .entry(child)
            .or_default()
            .insert(sorted_parents.to_vec(), value);
    }

    pub fn len(&self) -> usize {
        self.map.values().map(|inner| inner.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.map.values().all(|inner| inner.is_empty())
    }
}
