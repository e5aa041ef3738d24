//! Decomposable structure scores: maximum-likelihood log-likelihood and its
//! AIC, BIC, BDe and K2 variants. Every score is a sum of per-node local
//! terms, which is what makes delta evaluation and caching possible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{BinaryDataset, Dag, Move, ScoreCache};

/// Default cap on parent-set size, matching the generator's in-degree bound.
pub const DEFAULT_MAX_PARENTS: usize = 3;

/// Contingency tables above this parent count would not fit in memory.
const TABLE_GUARD: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    /// Raw maximum-likelihood log-likelihood; the "no regularization" baseline.
    #[serde(rename = "loglik")]
    LogLik,
    Aic,
    Bic,
    Bde,
    K2,
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScoreKind::LogLik => "loglik",
            ScoreKind::Aic => "aic",
            ScoreKind::Bic => "bic",
            ScoreKind::Bde => "bde",
            ScoreKind::K2 => "k2",
        };
        f.write_str(s)
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglik" => Ok(ScoreKind::LogLik),
            "aic" => Ok(ScoreKind::Aic),
            "bic" => Ok(ScoreKind::Bic),
            "bde" => Ok(ScoreKind::Bde),
            "k2" => Ok(ScoreKind::K2),
            other => Err(Error::InvalidInput(format!(
                "unknown score '{}', expected loglik|aic|bic|bde|k2",
                other
            ))),
        }
    }
}

/// Which score to maximize, plus the BDe prior strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreSpec {
    pub kind: ScoreKind,
    /// Equivalent sample size of the BDe Dirichlet prior; ignored elsewhere.
    pub equivalent_sample_size: f64,
}

impl ScoreSpec {
    pub fn new(kind: ScoreKind) -> Self {
        Self {
            kind,
            equivalent_sample_size: 1.0,
        }
    }

    pub fn with_ess(kind: ScoreKind, ess: f64) -> Result<Self> {
        if !(ess > 0.0) {
            return Err(Error::InvalidInput(format!(
                "equivalent sample size must be positive, got {}",
                ess
            )));
        }
        Ok(Self {
            kind,
            equivalent_sample_size: ess,
        })
    }
}

/// Contingency counts for one child given a parent set: one row per parent
/// configuration, each holding `(count of child = 0, count of child = 1)`.
///
/// Row indices encode parent values bitwise: bit `i` is the value of the
/// i-th parent in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalCounts {
    pub rows: Vec<(usize, usize)>,
}

impl LocalCounts {
    pub fn config_count(&self) -> usize {
        self.rows.len()
    }
}

/// Exact contingency counts for `child` given `parents`.
pub fn local_counts(
    data: &BinaryDataset,
    child: usize,
    parents: &[usize],
    max_parents: usize,
) -> Result<LocalCounts> {
    if parents.len() > max_parents.min(TABLE_GUARD) {
        return Err(Error::ParentLimitExceeded {
            got: parents.len(),
            cap: max_parents.min(TABLE_GUARD),
        });
    }
    let n = data.n();
    if child >= n || parents.iter().any(|&p| p >= n) {
        return Err(Error::InvalidInput(format!(
            "node index out of range for {} variables",
            n
        )));
    }
    if parents.contains(&child) {
        return Err(Error::InvalidInput(format!(
            "child {} cannot be its own parent",
            child
        )));
    }
    let mut rows = vec![(0usize, 0usize); 1 << parents.len()];
    for sample in data.rows() {
        let mut config = 0usize;
        for (i, &p) in parents.iter().enumerate() {
            config |= (sample[p] as usize) << i;
        }
        if sample[child] == 1 {
            rows[config].1 += 1;
        } else {
            rows[config].0 += 1;
        }
    }
    Ok(LocalCounts { rows })
}

/// Maximum-likelihood log-likelihood contribution of one (child, parents)
/// family: sum of c * ln(c / total) over configurations, with 0 ln 0 := 0.
fn ll_from_counts(counts: &LocalCounts) -> f64 {
    let mut ll = 0.0;
    for &(zeros, ones) in &counts.rows {
        let total = zeros + ones;
        if total == 0 {
            continue;
        }
        let total = total as f64;
        if zeros > 0 {
            ll += zeros as f64 * (zeros as f64 / total).ln();
        }
        if ones > 0 {
            ll += ones as f64 * (ones as f64 / total).ln();
        }
    }
    ll
}

/// BDeu family term: Dirichlet prior of strength `ess` spread uniformly,
/// `ess / (2 q)` per (configuration, value) cell over `q` configurations.
fn bde_from_counts(counts: &LocalCounts, ess: f64) -> f64 {
    let q = counts.rows.len() as f64;
    let alpha_config = ess / q;
    let alpha_cell = ess / (2.0 * q);
    let mut score = 0.0;
    for &(zeros, ones) in &counts.rows {
        let total = (zeros + ones) as f64;
        if total == 0.0 {
            continue;
        }
        score += ln_gamma(alpha_config) - ln_gamma(alpha_config + total);
        score += ln_gamma(alpha_cell + ones as f64) - ln_gamma(alpha_cell);
        score += ln_gamma(alpha_cell + zeros as f64) - ln_gamma(alpha_cell);
    }
    score
}

/// Cooper-Herskovits term: Dirichlet(1, 1) on every configuration.
fn k2_from_counts(counts: &LocalCounts) -> f64 {
    let mut score = 0.0;
    for &(zeros, ones) in &counts.rows {
        let total = zeros + ones;
        if total == 0 {
            continue;
        }
        score += -ln_gamma(total as f64 + 2.0)
            + ln_gamma(ones as f64 + 1.0)
            + ln_gamma(zeros as f64 + 1.0);
    }
    score
}

/// Local score of one (child, parents) family under `spec`.
pub fn local_score(
    data: &BinaryDataset,
    child: usize,
    parents: &[usize],
    spec: &ScoreSpec,
) -> Result<f64> {
    let counts = local_counts(data, child, parents, data.n().max(1) - 1)?;
    let dim = (1usize << parents.len()) as f64;
    let value = match spec.kind {
        ScoreKind::LogLik => ll_from_counts(&counts),
        ScoreKind::Aic => ll_from_counts(&counts) - dim,
        ScoreKind::Bic => ll_from_counts(&counts) - (data.m() as f64).ln() / 2.0 * dim,
        ScoreKind::Bde => bde_from_counts(&counts, spec.equivalent_sample_size),
        ScoreKind::K2 => k2_from_counts(&counts),
    };
    Ok(value)
}

fn cached_local(
    data: &BinaryDataset,
    child: usize,
    sorted_parents: &[usize],
    spec: &ScoreSpec,
    cache: &mut ScoreCache,
) -> Result<f64> {
    if let Some(v) = cache.get(child, sorted_parents) {
        return Ok(v);
    }
    let v = local_score(data, child, sorted_parents, spec)?;
    cache.insert(child, sorted_parents, v);
    Ok(v)
}

/// Maximum-likelihood log-likelihood of the data under `g`, always <= 0.
pub fn log_likelihood(data: &BinaryDataset, g: &Dag) -> Result<f64> {
    if g.n() != data.n() {
        return Err(Error::InvalidInput(format!(
            "graph has {} nodes, dataset has {} variables",
            g.n(),
            data.n()
        )));
    }
    let spec = ScoreSpec::new(ScoreKind::LogLik);
    let mut total = 0.0;
    for child in 0..g.n() {
        let parents: Vec<usize> = g.parents(child).iter().copied().collect();
        total += local_score(data, child, &parents, &spec)?;
    }
    Ok(total)
}

/// Parameter count of the network: one free parameter per parent
/// configuration per node, i.e. sum over nodes of 2^|parents|.
pub fn dimension(g: &Dag) -> usize {
    (0..g.n()).map(|v| 1usize << g.parent_count(v)).sum()
}

/// Full decomposable score of `g`: the sum of per-node local scores, served
/// through the cache.
pub fn score(
    data: &BinaryDataset,
    g: &Dag,
    spec: &ScoreSpec,
    cache: &mut ScoreCache,
) -> Result<f64> {
    if g.n() != data.n() {
        return Err(Error::InvalidInput(format!(
            "graph has {} nodes, dataset has {} variables",
            g.n(),
            data.n()
        )));
    }
    let mut total = 0.0;
    for child in 0..g.n() {
        let parents: Vec<usize> = g.parents(child).iter().copied().collect();
        total += cached_local(data, child, &parents, spec, cache)?;
    }
    Ok(total)
}

/// Score change of applying `mv` to `g`, touching only the affected
/// children's local scores. Structural legality (arc presence, acyclicity)
/// is re-checked here; mask and parent-cap admissibility is the move
/// enumerator's contract.
pub fn delta_score(
    data: &BinaryDataset,
    g: &Dag,
    mv: Move,
    spec: &ScoreSpec,
    cache: &mut ScoreCache,
) -> Result<f64> {
    match mv {
        Move::Add { parent, child } => {
            if parent == child || g.has_arc(parent, child) {
                return Err(Error::InvalidMove(format!(
                    "cannot add arc {}->{}",
                    parent, child
                )));
            }
            if g.has_path(child, parent) {
                return Err(Error::InvalidMove(format!(
                    "adding {}->{} would create a cycle",
                    parent, child
                )));
            }
            let old: Vec<usize> = g.parents(child).iter().copied().collect();
            let mut new = old.clone();
            new.push(parent);
            new.sort_unstable();
            Ok(cached_local(data, child, &new, spec, cache)?
                - cached_local(data, child, &old, spec, cache)?)
        }
        Move::Delete { parent, child } => {
            if !g.has_arc(parent, child) {
                return Err(Error::InvalidMove(format!(
                    "cannot delete missing arc {}->{}",
                    parent, child
                )));
            }
            let old: Vec<usize> = g.parents(child).iter().copied().collect();
            let new: Vec<usize> = old.iter().copied().filter(|&p| p != parent).collect();
            Ok(cached_local(data, child, &new, spec, cache)?
                - cached_local(data, child, &old, spec, cache)?)
        }
        Move::Reverse { parent, child } => {
            if !g.has_arc(parent, child) {
                return Err(Error::InvalidMove(format!(
                    "cannot reverse missing arc {}->{}",
                    parent, child
                )));
            }
            if g.has_arc(child, parent) {
                return Err(Error::InvalidMove(format!(
                    "both orientations of {}<->{} present",
                    parent, child
                )));
            }
            // after dropping parent->child, any remaining path parent ~> child
            // would close a cycle with the new child->parent arc
            if g.has_path_excluding(parent, child, Some((parent, child))) {
                return Err(Error::InvalidMove(format!(
                    "reversing {}->{} would create a cycle",
                    parent, child
                )));
            }
            let old_child: Vec<usize> = g.parents(child).iter().copied().collect();
            let new_child: Vec<usize> = old_child
                .iter()
                .copied()
                .filter(|&p| p != parent)
                .collect();
            let old_parent: Vec<usize> = g.parents(parent).iter().copied().collect();
            let mut new_parent = old_parent.clone();
            new_parent.push(child);
            new_parent.sort_unstable();
            let d_child = cached_local(data, child, &new_child, spec, cache)?
                - cached_local(data, child, &old_child, spec, cache)?;
            let d_parent = cached_local(data, parent, &new_parent, spec, cache)?
                - cached_local(data, parent, &old_parent, spec, cache)?;
            Ok(d_child + d_parent)
        }
    }
}
