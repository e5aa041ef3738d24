//! Prima-facie arc mining: temporal priority and probability raising,
//! evaluated pairwise from exact frequency counts. The resulting mask is the
//! pruned space every search runs in.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{ArcMask, BinaryDataset};

/// Empirical marginal and pairwise joint counts for one dataset.
///
/// All inequality tests work on the raw integer counts, so they are exact;
/// the probability accessors are for reporting.
#[derive(Clone, Debug)]
pub struct MarginalTable {
    m: usize,
    ones: Vec<usize>,        // count of v = 1 per variable
    joint_ones: Vec<usize>,  // n * n, count of u = 1 and v = 1
}

impl MarginalTable {
    pub fn n(&self) -> usize {
        self.ones.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn count_ones(&self, v: usize) -> usize {
        self.ones[v]
    }

    pub fn joint_count(&self, u: usize, v: usize) -> usize {
        self.joint_ones[u * self.n() + v]
    }

    /// P(v = 1).
    pub fn marginal(&self, v: usize) -> f64 {
        self.ones[v] as f64 / self.m as f64
    }

    /// P(u = 1 and v = 1).
    pub fn joint(&self, u: usize, v: usize) -> f64 {
        self.joint_count(u, v) as f64 / self.m as f64
    }

    fn check_nondegenerate(&self, v: usize) -> Result<()> {
        if self.ones[v] == 0 || self.ones[v] == self.m {
            return Err(Error::DegenerateVariable {
                index: v,
                marginal: self.marginal(v),
            });
        }
        Ok(())
    }
}

/// Exact frequency counts divided by m.
pub fn marginals(data: &BinaryDataset) -> MarginalTable {
    let n = data.n();
    let mut ones = vec![0usize; n];
    let mut joint_ones = vec![0usize; n * n];
    for row in data.rows() {
        for u in 0..n {
            if row[u] == 1 {
                ones[u] += 1;
                for v in 0..n {
                    if row[v] == 1 {
                        joint_ones[u * n + v] += 1;
                    }
                }
            }
        }
    }
    MarginalTable {
        m: data.m(),
        ones,
        joint_ones,
    }
}

/// Temporal priority: P(u) > P(v), strictly. Ties fail in both directions.
///
/// Both marginals must be non-degenerate (strictly inside (0, 1)).
pub fn temporal_priority(table: &MarginalTable, u: usize, v: usize) -> Result<bool> {
    table.check_nondegenerate(u)?;
    table.check_nondegenerate(v)?;
    Ok(table.ones[u] > table.ones[v])
}

/// Probability raising: P(v|u) > P(v|not u), strictly, from exact counts.
///
/// The comparison `joint/c_u > (c_v - joint)/(m - c_u)` is cross-multiplied
/// into integer arithmetic so no rounding is involved.
pub fn probability_raising(table: &MarginalTable, u: usize, v: usize) -> Result<bool> {
    table.check_nondegenerate(u)?;
    table.check_nondegenerate(v)?;
    let m = table.m as u64;
    let c_u = table.ones[u] as u64;
    let c_v = table.ones[v] as u64;
    let joint = table.joint_count(u, v) as u64;
    Ok(joint * (m - c_u) > (c_v - joint) * c_u)
}

/// Options for the prima-facie miner.
#[derive(Clone, Copy, Debug, Default)]
pub struct SuppesOptions {
    /// When set, both inequalities must additionally pass a one-sided
    /// two-proportion z-test at this level. Off by default: the definition
    /// is stated as raw inequalities.
    pub significance: Option<f64>,
}

/// Arcs passing both Suppes conditions, evaluated pairwise.
///
/// Degenerate variables (empirical marginal 0 or 1) get no incident arcs;
/// the event is logged, never fatal.
pub fn prima_facie_mask(data: &BinaryDataset) -> ArcMask {
    prima_facie_mask_with(data, &SuppesOptions::default())
}

pub fn prima_facie_mask_with(data: &BinaryDataset, options: &SuppesOptions) -> ArcMask {
    let table = marginals(data);
    let n = data.n();
    let mut mask = ArcMask::new(n);
    let degenerate: Vec<bool> = (0..n)
        .map(|v| table.check_nondegenerate(v).is_err())
        .collect();
    for (v, flag) in degenerate.iter().enumerate() {
        if *flag {
            log::debug!(
                "variable {} ({}) has degenerate marginal {}; excluded from the mask",
                v,
                data.names()[v],
                table.marginal(v)
            );
        }
    }
    for u in 0..n {
        for v in 0..n {
            if u == v || degenerate[u] || degenerate[v] {
                continue;
            }
            let tp = table.ones[u] > table.ones[v];
            if !tp {
                continue;
            }
            let pr = probability_raising(&table, u, v).expect("degeneracy screened above");
            if !pr {
                continue;
            }
            let significant = match options.significance {
                None => true,
                Some(alpha) => {
                    tp_significant(&table, u, v, alpha) && pr_significant(&table, u, v, alpha)
                }
            };
            if significant {
                mask.set(u, v, true);
            }
        }
    }
    debug_assert!(mask.is_antisymmetric());
    mask
}

/// The unconstrained baseline: every off-diagonal arc admitted. This mask
/// deliberately allows both orientations of each pair.
pub fn full_mask(n: usize) -> ArcMask {
    let mut mask = ArcMask::new(n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                mask.set(u, v, true);
            }
        }
    }
    mask
}

/// One-sided two-proportion z-test with pooled variance; p-value = 1 - Phi(z).
fn one_sided_two_proportion_p(x1: usize, n1: usize, x2: usize, n2: usize) -> f64 {
    let (x1, n1, x2, n2) = (x1 as f64, n1 as f64, x2 as f64, n2 as f64);
    let p1 = x1 / n1;
    let p2 = x2 / n2;
    let pooled = (x1 + x2) / (n1 + n2);
    let var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
    if var <= 0.0 {
        // both samples all-zero or all-one; no evidence of a difference
        return 1.0;
    }
    let z = (p1 - p2) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    1.0 - normal.cdf(z)
}

fn tp_significant(table: &MarginalTable, u: usize, v: usize, alpha: f64) -> bool {
    one_sided_two_proportion_p(table.ones[u], table.m, table.ones[v], table.m) < alpha
}

fn pr_significant(table: &MarginalTable, u: usize, v: usize, alpha: f64) -> bool {
    let joint = table.joint_count(u, v);
    one_sided_two_proportion_p(
        joint,
        table.ones[u],
        table.ones[v] - joint,
        table.m - table.ones[u],
    ) < alpha
}
