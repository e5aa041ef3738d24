//! Structure search inside an arc mask: hill climbing, tabu search and a
//! genetic algorithm over linearized adjacency strings, plus an exhaustive
//! oracle for small node counts.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{is_acyclic, ArcMask, BinaryDataset, Dag, Move, ScoreCache};
use crate::rng::{substream, Stream};
use crate::scoring::{delta_score, score, ScoreSpec, DEFAULT_MAX_PARENTS};

/// Node count above which exhaustive enumeration is refused.
pub const ORACLE_MAX_NODES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Hc,
    Tabu,
    Ga,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::Hc => "hc",
            Strategy::Tabu => "tabu",
            Strategy::Ga => "ga",
        };
        f.write_str(s)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hc" => Ok(Strategy::Hc),
            "tabu" => Ok(Strategy::Tabu),
            "ga" => Ok(Strategy::Ga),
            other => Err(Error::InvalidInput(format!(
                "unknown search '{}', expected hc|tabu|ga",
                other
            ))),
        }
    }
}

/// All knobs of the three strategies. Unused fields are ignored by the
/// strategy that does not read them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchSpec {
    pub strategy: Strategy,
    pub max_parents: usize,
    pub tabu_tenure: usize,
    /// Stop after this many consecutive iterations without improving the
    /// best-so-far score.
    pub tabu_max_iterations: usize,
    pub ga_population: usize,
    pub ga_generations: usize,
    pub ga_mutation_rate: f64,
    pub rng_seed: u64,
}

impl SearchSpec {
    pub fn new(strategy: Strategy, rng_seed: u64) -> Self {
        Self {
            strategy,
            max_parents: DEFAULT_MAX_PARENTS,
            tabu_tenure: 10,
            tabu_max_iterations: 100,
            ga_population: 32,
            ga_generations: 100,
            ga_mutation_rate: 0.01,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ga_population < 2 || self.ga_population % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "GA population must be even and at least 2, got {}",
                self.ga_population
            )));
        }
        if !(0.0..=1.0).contains(&self.ga_mutation_rate) {
            return Err(Error::InvalidInput(format!(
                "GA mutation rate must lie in [0, 1], got {}",
                self.ga_mutation_rate
            )));
        }
        Ok(())
    }
}

/// A finished search: the graph, its score under the requested spec, and
/// how many steps it took (accepted moves for HC/TS, generations for GA,
/// candidates scored for the exhaustive oracle).
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub dag: Dag,
    pub score: f64,
    pub iterations: usize,
}

/// Dispatch on the configured strategy.
pub fn run(
    data: &BinaryDataset,
    mask: &ArcMask,
    spec: &ScoreSpec,
    search: &SearchSpec,
) -> Result<SearchOutcome> {
    match search.strategy {
        Strategy::Hc => hill_climb(data, mask, spec, search),
        Strategy::Tabu => tabu_search(data, mask, spec, search),
        Strategy::Ga => ga_search(data, mask, spec, search),
    }
}

/// Every admissible single move from `g`: additions inside the mask, all
/// deletions, and reversals whose reversed arc is itself mask-allowed.
/// Enumeration order is fixed (adds, then deletes, then reversals, each in
/// (child, parent) order) so tie-breaking is deterministic.
fn legal_moves(g: &Dag, mask: &ArcMask, max_parents: usize) -> Vec<Move> {
    let n = g.n();
    let mut moves = Vec::new();
    for child in 0..n {
        if g.parent_count(child) >= max_parents {
            continue;
        }
        for parent in 0..n {
            if parent == child || !mask.allowed(parent, child) || g.has_arc(parent, child) {
                continue;
            }
            if g.has_path(child, parent) {
                continue;
            }
            moves.push(Move::Add { parent, child });
        }
    }
    for child in 0..n {
        for &parent in g.parents(child) {
            moves.push(Move::Delete { parent, child });
        }
    }
    for child in 0..n {
        for &parent in g.parents(child) {
            if !mask.allowed(child, parent) || g.parent_count(parent) >= max_parents {
                continue;
            }
            if g.has_path_excluding(parent, child, Some((parent, child))) {
                continue;
            }
            moves.push(Move::Reverse { parent, child });
        }
    }
    moves
}

/// Greedy best-improvement ascent from the empty graph. Stops at a local
/// optimum: no admissible move has a strictly positive score delta. Ties
/// keep the move enumerated first.
pub fn hill_climb(
    data: &BinaryDataset,
    mask: &ArcMask,
    spec: &ScoreSpec,
    search: &SearchSpec,
) -> Result<SearchOutcome> {
    search.validate()?;
    let mut g = Dag::empty(data.n());
    let mut cache = ScoreCache::new();
    let mut iterations = 0;
    loop {
        let mut best: Option<(f64, Move)> = None;
        for mv in legal_moves(&g, mask, search.max_parents) {
            let d = delta_score(data, &g, mv, spec, &mut cache)?;
            if d > 0.0 && best.map_or(true, |(bd, _)| d > bd) {
                best = Some((d, mv));
            }
        }
        match best {
            Some((_, mv)) => {
                g.apply_move(mv).expect("enumerated move must be legal");
                iterations += 1;
            }
            None => break,
        }
    }
    let final_score = score(data, &g, spec, &mut cache)?;
    Ok(SearchOutcome {
        dag: g,
        score: final_score,
        iterations,
    })
}

/// Best-improvement search with a short-term memory of reversed moves.
///
/// Each iteration applies the best non-tabu move even when it worsens the
/// current score; a tabu move is admissible if it would beat the best score
/// seen so far (aspiration). Returns the best-so-far graph.
pub fn tabu_search(
    data: &BinaryDataset,
    mask: &ArcMask,
    spec: &ScoreSpec,
    search: &SearchSpec,
) -> Result<SearchOutcome> {
    search.validate()?;
    let mut g = Dag::empty(data.n());
    let mut cache = ScoreCache::new();
    let mut current = score(data, &g, spec, &mut cache)?;
    let mut best_dag = g.clone();
    let mut best_score = current;
    let mut tabu: VecDeque<Move> = VecDeque::new();
    let mut non_improving = 0usize;
    let stop_after = search.tabu_max_iterations.max(1);
    let mut iterations = 0usize;
    loop {
        let mut best_move: Option<(f64, Move)> = None;
        for mv in legal_moves(&g, mask, search.max_parents) {
            let d = delta_score(data, &g, mv, spec, &mut cache)?;
            let admissible = !tabu.contains(&mv) || current + d > best_score;
            if admissible && best_move.map_or(true, |(bd, _)| d > bd) {
                best_move = Some((d, mv));
            }
        }
        let Some((d, mv)) = best_move else {
            break; // every move tabu and none aspirates, or no moves exist
        };
        g.apply_move(mv).expect("enumerated move must be legal");
        current += d;
        iterations += 1;
        tabu.push_back(mv.inverse());
        while tabu.len() > search.tabu_tenure {
            tabu.pop_front();
        }
        if current > best_score {
            best_score = current;
            best_dag = g.clone();
            non_improving = 0;
        } else {
            non_improving += 1;
            if non_improving >= stop_after {
                break;
            }
        }
    }
    let final_score = score(data, &best_dag, spec, &mut cache)?;
    Ok(SearchOutcome {
        dag: best_dag,
        score: final_score,
        iterations,
    })
}

/// Binary string of length n(n-1): the off-diagonal entries of an adjacency
/// matrix in row-major order with the diagonal skipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Genome {
    n: usize,
    bits: Vec<bool>,
}

impl Genome {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            bits: vec![false; n * (n.saturating_sub(1))],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn index(n: usize, u: usize, v: usize) -> usize {
        debug_assert!(u != v);
        u * (n - 1) + if v < u { v } else { v - 1 }
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[Self::index(self.n, u, v)]
    }

    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        let idx = Self::index(self.n, u, v);
        self.bits[idx] = value;
    }

    pub fn from_dag(dag: &Dag) -> Self {
        let mut g = Self::new(dag.n());
        for (u, v) in dag.arcs() {
            g.set(u, v, true);
        }
        g
    }

    /// Encoded arcs as sorted `(parent, child)` pairs.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in 0..self.n {
                if u != v && self.get(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Builds the encoded graph; fails if the bits encode a cycle.
    pub fn decode(&self) -> Result<Dag> {
        Dag::from_arcs(self.n, self.arcs())
    }
}

/// A genome plus its (lazily filled) fitness.
#[derive(Clone, Debug)]
pub struct Individual {
    pub genome: Genome,
    pub fitness: Option<f64>,
}

/// Finds one directed cycle in the encoded graph, as a list of its arcs,
/// or None if the genome is already acyclic. Deterministic: DFS in node
/// order with ascending neighbors.
fn find_cycle(genome: &Genome) -> Option<Vec<(usize, usize)>> {
    let n = genome.n;
    fn visit(
        u: usize,
        genome: &Genome,
        state: &mut [u8],
        path: &mut Vec<usize>,
    ) -> Option<(usize, usize)> {
        state[u] = 1;
        path.push(u);
        for v in 0..genome.n {
            if v == u || !genome.get(u, v) {
                continue;
            }
            if state[v] == 1 {
                return Some((u, v));
            }
            if state[v] == 0 {
                if let Some(back) = visit(v, genome, state, path) {
                    return Some(back);
                }
            }
        }
        state[u] = 2;
        path.pop();
        None
    }
    let mut state = vec![0u8; n];
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        if let Some((u, w)) = visit(start, genome, &mut state, &mut path) {
            let pos = path
                .iter()
                .position(|&x| x == w)
                .expect("back-edge target must be on the DFS path");
            let mut arcs: Vec<(usize, usize)> = path[pos..]
                .windows(2)
                .map(|ab| (ab[0], ab[1]))
                .collect();
            arcs.push((u, w));
            return Some(arcs);
        }
    }
    None
}

/// Correction procedure applied after crossover and mutation: clears bits
/// outside the mask, breaks every cycle by removing one uniformly random
/// arc on it, then trims random excess parents. Idempotent, and draws from
/// the RNG only when it actually changes something.
pub fn repair(genome: &mut Genome, mask: &ArcMask, max_parents: usize, rng: &mut ChaCha8Rng) {
    let n = genome.n;
    for u in 0..n {
        for v in 0..n {
            if u != v && genome.get(u, v) && !mask.allowed(u, v) {
                genome.set(u, v, false);
            }
        }
    }
    while let Some(cycle) = find_cycle(genome) {
        let (u, v) = cycle[rng.gen_range(0..cycle.len())];
        genome.set(u, v, false);
    }
    for child in 0..n {
        let mut parents: Vec<usize> = (0..n)
            .filter(|&u| u != child && genome.get(u, child))
            .collect();
        while parents.len() > max_parents {
            let idx = rng.gen_range(0..parents.len());
            genome.set(parents[idx], child, false);
            parents.swap_remove(idx);
        }
    }
}

/// Ranking selection: individuals sorted by fitness ascending, the one at
/// (1-based) rank i drawn with probability i / (Q(Q+1)/2).
fn rank_select(fitness: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let q = fitness.len();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| {
        fitness[a]
            .partial_cmp(&fitness[b])
            .expect("scores are finite")
            .then(a.cmp(&b))
    });
    let total = q * (q + 1) / 2;
    let mut r = rng.gen_range(0..total);
    for (pos, &idx) in order.iter().enumerate() {
        let weight = pos + 1;
        if r < weight {
            return idx;
        }
        r -= weight;
    }
    *order.last().expect("population is never empty")
}

fn crossover(a: &Genome, b: &Genome, cut: usize) -> (Genome, Genome) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    for i in cut..a.bits.len() {
        c1.bits[i] = b.bits[i];
        c2.bits[i] = a.bits[i];
    }
    (c1, c2)
}

fn mutate(genome: &mut Genome, rate: f64, rng: &mut ChaCha8Rng) {
    for bit in genome.bits.iter_mut() {
        if rng.gen::<f64>() < rate {
            *bit = !*bit;
        }
    }
}

/// Genetic algorithm over adjacency strings: ranking selection, single
/// point crossover, per-bit mutation, correction, elitism of one.
pub fn ga_search(
    data: &BinaryDataset,
    mask: &ArcMask,
    spec: &ScoreSpec,
    search: &SearchSpec,
) -> Result<SearchOutcome> {
    search.validate()?;
    let n = data.n();
    let mut rng = substream(search.rng_seed, Stream::Search);
    if n < 2 {
        let g = Dag::empty(n);
        let s = score(data, &g, spec, &mut ScoreCache::new())?;
        return Ok(SearchOutcome {
            dag: g,
            score: s,
            iterations: 0,
        });
    }
    // sparse random start: per-bit on-probability 2/n, then corrected
    let density = 2.0 / n as f64;
    let init: Vec<Genome> = (0..search.ga_population)
        .map(|_| {
            let mut g = Genome::new(n);
            for bit in g.bits.iter_mut() {
                *bit = rng.gen::<f64>() < density;
            }
            repair(&mut g, mask, search.max_parents, &mut rng);
            g
        })
        .collect();
    let (outcome, _) = ga_evolve(data, mask, spec, search, init, &mut rng)?;
    Ok(outcome)
}

/// The GA loop proper, taking an explicit starting population. Returns the
/// outcome and the best fitness per generation (index 0 is the initial
/// population).
pub(crate) fn ga_evolve(
    data: &BinaryDataset,
    mask: &ArcMask,
    spec: &ScoreSpec,
    search: &SearchSpec,
    init: Vec<Genome>,
    rng: &mut ChaCha8Rng,
) -> Result<(SearchOutcome, Vec<f64>)> {
    let mut cache = ScoreCache::new();
    let evaluate = |genome: &Genome, cache: &mut ScoreCache| -> Result<f64> {
        let dag = genome.decode().expect("repaired genome is acyclic");
        score(data, &dag, spec, cache)
    };
    let mut population: Vec<Individual> = init
        .into_iter()
        .map(|genome| Individual {
            genome,
            fitness: None,
        })
        .collect();
    for ind in population.iter_mut() {
        ind.fitness = Some(evaluate(&ind.genome, &mut cache)?);
    }
    let best_of = |pop: &[Individual]| -> (usize, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, ind) in pop.iter().enumerate() {
            let f = ind.fitness.expect("population is evaluated");
            if f > best.1 {
                best = (i, f);
            }
        }
        best
    };
    let (mut elite_idx, mut elite_fit) = best_of(&population);
    let mut elite_genome = population[elite_idx].genome.clone();
    let mut trace = vec![elite_fit];
    let genome_len = population[0].genome.len();
    for _gen in 0..search.ga_generations {
        let fitness: Vec<f64> = population
            .iter()
            .map(|ind| ind.fitness.expect("population is evaluated"))
            .collect();
        let mut offspring: Vec<Individual> = Vec::with_capacity(search.ga_population);
        while offspring.len() < search.ga_population {
            let a = &population[rank_select(&fitness, rng)].genome;
            let b = &population[rank_select(&fitness, rng)].genome;
            let cut = rng.gen_range(1..genome_len);
            let (mut c1, mut c2) = crossover(a, b, cut);
            mutate(&mut c1, search.ga_mutation_rate, rng);
            mutate(&mut c2, search.ga_mutation_rate, rng);
            repair(&mut c1, mask, search.max_parents, rng);
            repair(&mut c2, mask, search.max_parents, rng);
            offspring.push(Individual {
                genome: c1,
                fitness: None,
            });
            offspring.push(Individual {
                genome: c2,
                fitness: None,
            });
        }
        // elitism of one: the best individual survives unchanged
        offspring[0] = Individual {
            genome: elite_genome.clone(),
            fitness: Some(elite_fit),
        };
        population = offspring;
        for ind in population.iter_mut() {
            if ind.fitness.is_none() {
                ind.fitness = Some(evaluate(&ind.genome, &mut cache)?);
            }
        }
        let (gen_best_idx, gen_best_fit) = best_of(&population);
        if gen_best_fit > elite_fit {
            elite_fit = gen_best_fit;
            elite_idx = gen_best_idx;
            elite_genome = population[elite_idx].genome.clone();
        }
        trace.push(elite_fit);
    }
    let dag = elite_genome.decode().expect("repaired genome is acyclic");
    Ok((
        SearchOutcome {
            dag,
            score: elite_fit,
            iterations: search.ga_generations,
        },
        trace,
    ))
}

/// True iff no admissible single move strictly improves the score of `g` —
/// the property hill climbing terminates with.
pub fn is_local_optimum(
    data: &BinaryDataset,
    g: &Dag,
    mask: &ArcMask,
    spec: &ScoreSpec,
    search: &SearchSpec,
) -> Result<bool> {
    let mut cache = ScoreCache::new();
    for mv in legal_moves(g, mask, search.max_parents) {
        if delta_score(data, g, mv, spec, &mut cache)? > 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Scores every acyclic, mask-legal graph and returns the global maximum.
/// Ties break toward fewer arcs, then the lexicographically smaller arc
/// set. Guarded to tiny node counts; this is the oracle the heuristics are
/// audited against.
pub fn exhaustive_search(
    data: &BinaryDataset,
    mask: &ArcMask,
    spec: &ScoreSpec,
) -> Result<SearchOutcome> {
    let n = data.n();
    if n > ORACLE_MAX_NODES {
        return Err(Error::OracleTooLarge {
            got: n,
            cap: ORACLE_MAX_NODES,
        });
    }
    let candidates = mask.arcs();
    let mut cache = ScoreCache::new();
    let mut best: Option<(f64, usize, Vec<(usize, usize)>, Dag)> = None;
    let mut scored = 0usize;
    for bits in 0u64..(1u64 << candidates.len()) {
        let arcs: Vec<(usize, usize)> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| bits & (1 << i) != 0)
            .map(|(_, &a)| a)
            .collect();
        if !is_acyclic(&arcs, n)? {
            continue;
        }
        let dag = Dag::from_arcs(n, arcs.iter().copied())?;
        let s = score(data, &dag, spec, &mut cache)?;
        scored += 1;
        let better = match &best {
            None => true,
            Some((bs, bcount, barcs, _)) => {
                s > *bs || (s == *bs && (arcs.len() < *bcount || (arcs.len() == *bcount && arcs < *barcs)))
            }
        };
        if better {
            best = Some((s, arcs.len(), arcs, dag));
        }
    }
    let (s, _, _, dag) = best.expect("the empty graph is always a candidate");
    Ok(SearchOutcome {
        dag,
        score: s,
        iterations: scored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::ScoreKind;
    use crate::suppes::{full_mask, prima_facie_mask};
    use rand::SeedableRng;

    fn dataset(cols: &[&[u8]]) -> BinaryDataset {
        let n = cols.len();
        let m = cols[0].len();
        let names = (0..n).map(|j| format!("v{}", j)).collect();
        let rows = (0..m)
            .map(|i| (0..n).map(|j| cols[j][i]).collect())
            .collect();
        BinaryDataset::new(names, rows).unwrap()
    }

    fn random_dataset(rng: &mut ChaCha8Rng, m: usize, n: usize) -> BinaryDataset {
        let names = (0..n).map(|j| format!("v{}", j)).collect();
        let rows = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(0u8..=1)).collect())
            .collect();
        BinaryDataset::new(names, rows).unwrap()
    }

    /// Two-node chain: strong dependence, P(u) = 0.8 > P(v) = 0.4.
    fn chain_dataset() -> BinaryDataset {
        let mut u = vec![0u8; 200];
        let mut v = vec![0u8; 200];
        for i in 0..160 {
            u[i] = 1;
        }
        for i in 0..80 {
            v[i] = 1;
        }
        dataset(&[&u, &v])
    }

    #[test]
    fn hill_climb_on_single_node_returns_empty_graph() {
        let d = dataset(&[&[1, 0, 1, 0]]);
        let out = hill_climb(
            &d,
            &full_mask(1),
            &ScoreSpec::new(ScoreKind::Bic),
            &SearchSpec::new(Strategy::Hc, 1),
        )
        .unwrap();
        assert_eq!(out.dag.arc_count(), 0);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn hill_climb_recovers_two_node_chain() {
        let d = chain_dataset();
        let mask = prima_facie_mask(&d);
        assert!(mask.allowed(0, 1) && !mask.allowed(1, 0));
        let spec = ScoreSpec::new(ScoreKind::Bic);
        let search = SearchSpec::new(Strategy::Hc, 3);
        let out = hill_climb(&d, &mask, &spec, &search).unwrap();
        assert_eq!(out.dag.arcs(), vec![(0, 1)]);
        // exhaustive scoring over the mask-legal graphs agrees
        let oracle = exhaustive_search(&d, &mask, &spec).unwrap();
        assert_eq!(oracle.dag.arcs(), vec![(0, 1)]);
        assert!((oracle.score - out.score).abs() < 1e-12);
    }

    #[test]
    fn hill_climb_output_is_locally_optimal_and_mask_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..20 {
            let d = random_dataset(&mut rng, 40, 4);
            let mask = if trial % 2 == 0 {
                prima_facie_mask(&d)
            } else {
                full_mask(4)
            };
            let spec = ScoreSpec::new(ScoreKind::Bic);
            let search = SearchSpec::new(Strategy::Hc, trial as u64);
            let out = hill_climb(&d, &mask, &spec, &search).unwrap();
            for (u, v) in out.dag.arcs() {
                assert!(mask.allowed(u, v));
                assert!(out.dag.parents(v).len() <= search.max_parents);
            }
            let mut cache = ScoreCache::new();
            let empty_score =
                score(&d, &Dag::empty(4), &spec, &mut cache).unwrap();
            assert!(out.score >= empty_score - 1e-12);
            for mv in legal_moves(&out.dag, &mask, search.max_parents) {
                let delta = delta_score(&d, &out.dag, mv, &spec, &mut cache).unwrap();
                assert!(delta <= 1e-12, "improving move {:?} left behind", mv);
            }
        }
    }

    #[test]
    fn tabu_on_single_node_returns_empty_graph() {
        let d = dataset(&[&[1, 0, 1, 0]]);
        let out = tabu_search(
            &d,
            &full_mask(1),
            &ScoreSpec::new(ScoreKind::Bic),
            &SearchSpec::new(Strategy::Tabu, 1),
        )
        .unwrap();
        assert_eq!(out.dag.arc_count(), 0);
    }

    #[test]
    fn degenerate_tabu_settings_reduce_to_hill_climbing() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for trial in 0..10 {
            let d = random_dataset(&mut rng, 30, 4);
            let mask = full_mask(4);
            let spec = ScoreSpec::new(ScoreKind::Bic);
            let mut search = SearchSpec::new(Strategy::Tabu, trial as u64);
            search.tabu_tenure = 0;
            search.tabu_max_iterations = 0;
            let ts = tabu_search(&d, &mask, &spec, &search).unwrap();
            let hc = hill_climb(&d, &mask, &spec, &search).unwrap();
            assert_eq!(ts.dag, hc.dag);
        }
    }

    #[test]
    fn tabu_never_falls_below_the_empty_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..10 {
            let d = random_dataset(&mut rng, 30, 4);
            let mask = prima_facie_mask(&d);
            let spec = ScoreSpec::new(ScoreKind::Aic);
            let search = SearchSpec::new(Strategy::Tabu, trial as u64);
            let out = tabu_search(&d, &mask, &spec, &search).unwrap();
            let empty_score =
                score(&d, &Dag::empty(4), &spec, &mut ScoreCache::new()).unwrap();
            assert!(out.score >= empty_score - 1e-12);
            for (u, v) in out.dag.arcs() {
                assert!(mask.allowed(u, v));
            }
        }
    }

    #[test]
    fn repair_breaks_two_cycle() {
        let mut g = Genome::new(2);
        g.set(0, 1, true);
        g.set(1, 0, true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        repair(&mut g, &full_mask(2), 3, &mut rng);
        assert_eq!(g.arcs().len(), 1);
        assert!(g.decode().is_ok());
    }

    #[test]
    fn repair_is_identity_on_valid_genomes() {
        let mut g = Genome::new(3);
        g.set(0, 1, true);
        g.set(1, 2, true);
        let before = g.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        repair(&mut g, &full_mask(3), 3, &mut rng);
        assert_eq!(g, before);
        // and the RNG stream was not consumed
        let mut fresh = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(rng.gen::<u64>(), fresh.gen::<u64>());
    }

    #[test]
    fn repair_projects_onto_the_mask() {
        let mut mask = ArcMask::new(3);
        mask.set(0, 1, true);
        let mut g = Genome::new(3);
        g.set(0, 1, true);
        g.set(2, 1, true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        repair(&mut g, &mask, 3, &mut rng);
        assert_eq!(g.arcs(), vec![(0, 1)]);
    }

    #[test]
    fn repair_trims_excess_parents() {
        let mut g = Genome::new(5);
        for u in 1..5 {
            g.set(u, 0, true);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        repair(&mut g, &full_mask(5), 3, &mut rng);
        assert_eq!(g.arcs().len(), 3);
        assert!(g.decode().is_ok());
    }

    #[test]
    fn repair_output_is_always_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(2..6);
            let mut g = Genome::new(n);
            for bit in g.bits.iter_mut() {
                *bit = rng.gen_bool(0.5);
            }
            let d = random_dataset(&mut rng, 10, n);
            let mask = prima_facie_mask(&d);
            repair(&mut g, &mask, 2, &mut rng);
            let dag = g.decode().expect("repair must leave an acyclic genome");
            for (u, v) in dag.arcs() {
                assert!(mask.allowed(u, v));
            }
            for v in 0..n {
                assert!(dag.parent_count(v) <= 2);
            }
            // idempotence
            let before = g.clone();
            repair(&mut g, &mask, 2, &mut rng);
            assert_eq!(g, before);
        }
    }

    #[test]
    fn ga_on_single_node_returns_empty_graph() {
        let d = dataset(&[&[1, 0, 1, 0]]);
        let out = ga_search(
            &d,
            &full_mask(1),
            &ScoreSpec::new(ScoreKind::Bic),
            &SearchSpec::new(Strategy::Ga, 1),
        )
        .unwrap();
        assert_eq!(out.dag.arc_count(), 0);
    }

    #[test]
    fn ga_fixed_point_on_identical_population_without_mutation() {
        let d = chain_dataset();
        let mask = full_mask(2);
        let spec = ScoreSpec::new(ScoreKind::Bic);
        let mut search = SearchSpec::new(Strategy::Ga, 9);
        search.ga_population = 4;
        search.ga_generations = 5;
        search.ga_mutation_rate = 0.0;
        let mut seed_genome = Genome::new(2);
        seed_genome.set(0, 1, true);
        let init = vec![seed_genome.clone(); 4];
        let mut rng = substream(9, Stream::Search);
        let (out, _) = ga_evolve(&d, &mask, &spec, &search, init, &mut rng).unwrap();
        assert_eq!(out.dag.arcs(), vec![(0, 1)]);
    }

    #[test]
    fn ga_elite_fitness_never_decreases() {
        let mut rng_data = ChaCha8Rng::seed_from_u64(33);
        let d = random_dataset(&mut rng_data, 60, 4);
        let mask = full_mask(4);
        let spec = ScoreSpec::new(ScoreKind::Bic);
        let mut search = SearchSpec::new(Strategy::Ga, 17);
        search.ga_population = 8;
        search.ga_generations = 25;
        let mut rng = substream(17, Stream::Search);
        let density = 0.3;
        let init: Vec<Genome> = (0..8)
            .map(|_| {
                let mut g = Genome::new(4);
                for bit in g.bits.iter_mut() {
                    *bit = rng.gen::<f64>() < density;
                }
                repair(&mut g, &mask, search.max_parents, &mut rng);
                g
            })
            .collect();
        let (_, trace) = ga_evolve(&d, &mask, &spec, &search, init, &mut rng).unwrap();
        assert_eq!(trace.len(), 26);
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn searches_are_deterministic_given_the_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let d = random_dataset(&mut rng, 50, 5);
        let mask = prima_facie_mask(&d);
        let spec = ScoreSpec::new(ScoreKind::Bic);
        for strategy in [Strategy::Hc, Strategy::Tabu, Strategy::Ga] {
            let mut search = SearchSpec::new(strategy, 99);
            search.ga_generations = 20;
            let a = run(&d, &mask, &spec, &search).unwrap();
            let b = run(&d, &mask, &spec, &search).unwrap();
            assert_eq!(a.dag, b.dag, "{:?} not deterministic", strategy);
            assert_eq!(a.score.to_bits(), b.score.to_bits());
        }
    }

    #[test]
    fn exhaustive_search_single_node() {
        let d = dataset(&[&[1, 0]]);
        let out = exhaustive_search(&d, &full_mask(1), &ScoreSpec::new(ScoreKind::Bic)).unwrap();
        assert_eq!(out.dag.arc_count(), 0);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn exhaustive_search_counts_all_three_node_dags() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let d = random_dataset(&mut rng, 10, 3);
        let out = exhaustive_search(&d, &full_mask(3), &ScoreSpec::new(ScoreKind::Bic)).unwrap();
        assert_eq!(out.iterations, 25); // the number of labeled DAGs on 3 nodes
    }

    #[test]
    fn exhaustive_search_refuses_large_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let d = random_dataset(&mut rng, 10, 6);
        assert!(matches!(
            exhaustive_search(&d, &full_mask(6), &ScoreSpec::new(ScoreKind::Bic)),
            Err(Error::OracleTooLarge { got: 6, cap: 5 })
        ));
    }

    #[test]
    fn bic_prefers_empty_graph_on_independent_columns() {
        // independent fair coins, m = 200: any sampled likelihood gain is
        // dwarfed by the BIC penalty, which the oracle itself verifies by
        // scoring every candidate
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let names = (0..3).map(|j| format!("v{}", j)).collect();
        let rows = (0..200)
            .map(|_| (0..3).map(|_| rng.gen_range(0u8..=1)).collect())
            .collect();
        let d = BinaryDataset::new(names, rows).unwrap();
        let out = exhaustive_search(&d, &full_mask(3), &ScoreSpec::new(ScoreKind::Bic)).unwrap();
        assert_eq!(out.dag.arc_count(), 0);
    }

    #[test]
    fn oracle_dominates_heuristics() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for trial in 0..10 {
            let d = random_dataset(&mut rng, 40, 4);
            let mask = prima_facie_mask(&d);
            let spec = ScoreSpec::new(ScoreKind::Bic);
            let oracle = exhaustive_search(&d, &mask, &spec).unwrap();
            for strategy in [Strategy::Hc, Strategy::Tabu, Strategy::Ga] {
                let mut search = SearchSpec::new(strategy, trial as u64);
                search.ga_generations = 30;
                let out = run(&d, &mask, &spec, &search).unwrap();
                assert!(
                    oracle.score >= out.score - 1e-9,
                    "{:?} beat the oracle: {} > {}",
                    strategy,
                    out.score,
                    oracle.score
                );
            }
        }
    }

    #[test]
    fn search_spec_validation() {
        let mut s = SearchSpec::new(Strategy::Ga, 0);
        s.ga_population = 3;
        assert!(s.validate().is_err());
        s.ga_population = 0;
        assert!(s.validate().is_err());
        s.ga_population = 4;
        s.ga_mutation_rate = 1.5;
        assert!(s.validate().is_err());
        s.ga_mutation_rate = 0.5;
        assert!(s.validate().is_ok());
    }
}
