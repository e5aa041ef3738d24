//! Recovery metrics, replicate orchestration over the experiment grid, and
//! per-cell aggregation into plot-ready long-format rows.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_structure, inject_noise, sample_dataset, TopologyKind};
use crate::error::{Error, Result};
use crate::model::{structural_hamming_components, Dag};
use crate::rng::{substream, Stream};
use crate::scoring::{ScoreKind, ScoreSpec, DEFAULT_MAX_PARENTS};
use crate::search::{self, SearchSpec, Strategy};
use crate::suppes::{full_mask, prima_facie_mask_with, SuppesOptions};

/// Confusion counts and the derived ratios for one truth/inferred pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricRecord {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl MetricRecord {
    /// Ratios per the usual formulas; an empty positive (or negative) class
    /// counts as perfectly matched, i.e. 0/0 := 1.
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        Self {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, fp + tn),
        }
    }
}

/// Whether arcs are compared as directed pairs or as undirected skeleton
/// edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComparisonMode {
    Directed,
    Skeleton,
}

/// Directed-arc recovery metrics, the primary comparison.
pub fn metrics(truth: &Dag, inferred: &Dag) -> Result<MetricRecord> {
    metrics_with_mode(truth, inferred, ComparisonMode::Directed)
}

pub fn metrics_with_mode(
    truth: &Dag,
    inferred: &Dag,
    mode: ComparisonMode,
) -> Result<MetricRecord> {
    match mode {
        ComparisonMode::Directed => {
            let (tp, fp, tn, fn_) = structural_hamming_components(truth, inferred)?;
            Ok(MetricRecord::from_counts(tp, fp, tn, fn_))
        }
        ComparisonMode::Skeleton => {
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
                for v in (u + 1)..n {
                    let in_truth = truth.has_arc(u, v) || truth.has_arc(v, u);
                    let in_inferred = inferred.has_arc(u, v) || inferred.has_arc(v, u);
                    match (in_truth, in_inferred) {
                        (true, true) => tp += 1,
                        (false, true) => fp += 1,
                        (true, false) => fn_ += 1,
                        (false, false) => tn += 1,
                    }
                }
            }
            Ok(MetricRecord::from_counts(tp, fp, tn, fn_))
        }
    }
}

fn default_max_parents() -> usize {
    DEFAULT_MAX_PARENTS
}
fn default_ga_population() -> usize {
    32
}
fn default_ga_generations() -> usize {
    100
}
fn default_ga_mutation_rate() -> f64 {
    0.01
}
fn default_tabu_tenure() -> usize {
    10
}
fn default_tabu_max_iterations() -> usize {
    100
}
fn default_bde_alpha() -> f64 {
    1.0
}
fn default_suppes_alpha() -> Option<f64> {
    None
}

/// Search and score knobs shared by every cell of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    #[serde(default = "default_max_parents")]
    pub max_parents: usize,
    #[serde(default = "default_ga_population")]
    pub ga_population: usize,
    #[serde(default = "default_ga_generations")]
    pub ga_generations: usize,
    #[serde(default = "default_ga_mutation_rate")]
    pub ga_mutation_rate: f64,
    #[serde(default = "default_tabu_tenure")]
    pub tabu_tenure: usize,
    #[serde(default = "default_tabu_max_iterations")]
    pub tabu_max_iterations: usize,
    #[serde(default = "default_bde_alpha")]
    pub bde_alpha: f64,
    /// Optional significance level for the constraint tests; None means the
    /// raw inequalities.
    #[serde(default = "default_suppes_alpha")]
    pub suppes_alpha: Option<f64>,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            max_parents: default_max_parents(),
            ga_population: default_ga_population(),
            ga_generations: default_ga_generations(),
            ga_mutation_rate: default_ga_mutation_rate(),
            tabu_tenure: default_tabu_tenure(),
            tabu_max_iterations: default_tabu_max_iterations(),
            bde_alpha: default_bde_alpha(),
            suppes_alpha: default_suppes_alpha(),
        }
    }
}

/// Cartesian experiment configuration; the benchmark driver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub topologies: Vec<TopologyKind>,
    pub node_counts: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub noise_levels: Vec<f64>,
    pub searches: Vec<Strategy>,
    pub scores: Vec<ScoreKind>,
    pub suppes: Vec<bool>,
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub params: GridParams,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("topologies", self.topologies.is_empty()),
            ("node_counts", self.node_counts.is_empty()),
            ("sample_sizes", self.sample_sizes.is_empty()),
            ("noise_levels", self.noise_levels.is_empty()),
            ("searches", self.searches.is_empty()),
            ("scores", self.scores.is_empty()),
            ("suppes", self.suppes.is_empty()),
        ];
        for (name, empty) in axes {
            if empty {
                return Err(Error::InvalidInput(format!("grid axis '{}' is empty", name)));
            }
        }
        if self.replicates == 0 {
            return Err(Error::InvalidInput("replicates must be at least 1".into()));
        }
        if self
            .noise_levels
            .iter()
            .any(|&nu| !(0.0..=1.0).contains(&nu))
        {
            return Err(Error::InvalidInput(
                "noise levels must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Every cell of the grid in canonical enumeration order: topology, n,
    /// m, noise, search, score, suppes, replicate.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut out = Vec::new();
        for &topology in &self.topologies {
            for &n in &self.node_counts {
                for &m in &self.sample_sizes {
                    for &noise in &self.noise_levels {
                        for &search in &self.searches {
                            for &score in &self.scores {
                                for &suppes in &self.suppes {
                                    for replicate in 0..self.replicates {
                                        out.push(CellSpec {
                                            topology,
                                            n,
                                            m,
                                            noise,
                                            search,
                                            score,
                                            suppes,
                                            replicate,
                                            base_seed: self.base_seed,
                                            params: self.params,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One point of the grid: a complete, self-contained experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellSpec {
    pub topology: TopologyKind,
    pub n: usize,
    pub m: usize,
    pub noise: f64,
    pub search: Strategy,
    pub score: ScoreKind,
    pub suppes: bool,
    pub replicate: usize,
    pub base_seed: u64,
    pub params: GridParams,
}

impl CellSpec {
    /// The seed all of this cell's substreams derive from. Replicates get
    /// independent streams; cells differing only in search settings share
    /// the same generated data, which pairs the comparisons.
    pub fn cell_seed(&self) -> u64 {
        self.base_seed.wrapping_add(self.replicate as u64)
    }

    /// Stable identifier used for journaling and row ordering.
    pub fn key(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.topology,
            self.n,
            self.m,
            self.noise,
            self.search,
            self.score,
            if self.suppes { "on" } else { "off" },
            self.replicate
        )
    }
}

/// The outcome of one cell, with enough provenance to reproduce it.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub spec: CellSpec,
    pub seed: u64,
    pub record: MetricRecord,
    pub wall_time_ms: u64,
    /// Arcs admitted by the mask the search ran in.
    pub mask_arcs: usize,
    /// Inferred arcs that fall outside that mask; always zero.
    pub arcs_outside_mask: usize,
    /// Columns of the noisy dataset with empirical marginal 0 or 1.
    pub degenerate_columns: usize,
    pub inferred_arcs: usize,
    pub truth_arcs: usize,
}

/// Runs the deterministic pipeline for one cell: generate, sample, corrupt,
/// mask, search, compare.
pub fn run_cell(spec: &CellSpec) -> Result<CellResult> {
    let started = Instant::now();
    let seed = spec.cell_seed();
    let model = generate_structure(spec.topology, spec.n, &mut substream(seed, Stream::Structure));
    let clean = sample_dataset(&model, spec.m, &mut substream(seed, Stream::Sampling));
    let noisy = inject_noise(&clean, spec.noise, &mut substream(seed, Stream::Noise));
    let degenerate_columns = (0..noisy.n())
        .filter(|&j| {
            let ones = noisy.rows().filter(|row| row[j] == 1).count();
            ones == 0 || ones == noisy.m()
        })
        .count();
    let mask = if spec.suppes {
        prima_facie_mask_with(
            &noisy,
            &SuppesOptions {
                significance: spec.params.suppes_alpha,
            },
        )
    } else {
        full_mask(spec.n)
    };
    let mut search_spec = SearchSpec::new(spec.search, seed);
    search_spec.max_parents = spec.params.max_parents;
    search_spec.ga_population = spec.params.ga_population;
    search_spec.ga_generations = spec.params.ga_generations;
    search_spec.ga_mutation_rate = spec.params.ga_mutation_rate;
    search_spec.tabu_tenure = spec.params.tabu_tenure;
    search_spec.tabu_max_iterations = spec.params.tabu_max_iterations;
    let score_spec = ScoreSpec::with_ess(spec.score, spec.params.bde_alpha)?;
    let outcome = search::run(&noisy, &mask, &score_spec, &search_spec)?;
    let arcs_outside_mask = outcome
        .dag
        .arcs()
        .into_iter()
        .filter(|&(u, v)| !mask.allowed(u, v))
        .count();
    let record = metrics(&model.dag, &outcome.dag)?;
    Ok(CellResult {
        spec: *spec,
        seed,
        record,
        wall_time_ms: started.elapsed().as_millis() as u64,
        mask_arcs: mask.arc_count(),
        arcs_outside_mask,
        degenerate_columns,
        inferred_arcs: outcome.dag.arc_count(),
        truth_arcs: model.dag.arc_count(),
    })
}

/// Runs a set of cells on the rayon pool. The output order matches the
/// input order regardless of completion order, so merges are deterministic.
pub fn run_cells(cells: &[CellSpec]) -> Vec<Result<CellResult>> {
    cells.par_iter().map(run_cell).collect()
}

/// Validates and runs a whole grid.
pub fn run_grid(grid: &ExperimentGrid) -> Result<Vec<Result<CellResult>>> {
    grid.validate()?;
    Ok(run_cells(&grid.cells()))
}

/// Mean and population standard deviation of each metric, per grid cell
/// (all axes except the replicate).
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub topology: TopologyKind,
    pub n: usize,
    pub m: usize,
    pub noise: f64,
    pub search: Strategy,
    pub score: ScoreKind,
    pub suppes: bool,
    pub replicates: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub sensitivity_mean: f64,
    pub sensitivity_std: f64,
    pub specificity_mean: f64,
    pub specificity_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
    (mean, var.sqrt())
}

/// Aggregates replicate records into one row per grid cell, in canonical
/// key order. Input order does not matter.
pub fn aggregate(records: &[CellResult]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<String, Vec<&CellResult>> = BTreeMap::new();
    for r in records {
        let s = &r.spec;
        let key = format!(
            "{},{:05},{:07},{:020},{},{},{}",
            s.topology,
            s.n,
            s.m,
            s.noise.to_bits(),
            s.search,
            s.score,
            if s.suppes { "on" } else { "off" }
        );
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_values()
        .map(|group| {
            let spec = group[0].spec;
            let pull = |f: fn(&MetricRecord) -> f64| -> Vec<f64> {
                group.iter().map(|r| f(&r.record)).collect()
            };
            let (accuracy_mean, accuracy_std) = mean_std(&pull(|r| r.accuracy));
            let (sensitivity_mean, sensitivity_std) = mean_std(&pull(|r| r.sensitivity));
            let (specificity_mean, specificity_std) = mean_std(&pull(|r| r.specificity));
            SummaryRow {
                topology: spec.topology,
                n: spec.n,
                m: spec.m,
                noise: spec.noise,
                search: spec.search,
                score: spec.score,
                suppes: spec.suppes,
                replicates: group.len(),
                accuracy_mean,
                accuracy_std,
                sensitivity_mean,
                sensitivity_std,
                specificity_mean,
                specificity_std,
            }
        })
        .collect()
}
