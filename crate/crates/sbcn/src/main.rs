use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use sbcn::datagen::{generate_structure, inject_noise, sample_dataset, TopologyKind};
use sbcn::error::{Error, Result};
use sbcn::eval::{run_cells, CellSpec};
use sbcn::io::{
    graph_to_string, parse_result_row, read_dataset, read_graph, read_grid, result_row, row_key,
    write_dataset, write_graph, GraphDoc, ParsedRow, RESULTS_HEADER, SUMMARY_HEADER, VERSION,
};
use sbcn::rng::{substream, Stream};
use sbcn::scoring::{ScoreKind, ScoreSpec};
use sbcn::search::{self, SearchSpec, Strategy};
use sbcn::suppes::{full_mask, prima_facie_mask_with, SuppesOptions};

fn parse_rate(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{}", e))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{} is not in [0, 1]", v))
    }
}

fn parse_on_off(s: &str) -> std::result::Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected 'on' or 'off', got '{}'", other)),
    }
}

#[derive(Parser)]
#[command(
    name = "sbcn",
    version,
    about = "Learn Suppes-Bayes causal networks from binary cross-sectional data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground-truth graph
    Generate {
        /// tree | forest | dag_conj_single | dag_conj_multi | dag_disj_single | dag_disj_multi
        #[arg(long)]
        topology: TopologyKind,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        nodes: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        /// Per-cell flip rate in [0, 1]
        #[arg(long, value_parser = parse_rate, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dataset output path (headered CSV of 0/1 cells)
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth graph output path (JSON)
        #[arg(long)]
        truth: PathBuf,
    },
    /// Infer a network from a dataset
    Infer {
        #[arg(long)]
        data: PathBuf,
        /// hc | tabu | ga
        #[arg(long, default_value = "hc")]
        search: Strategy,
        /// loglik | aic | bic | bde | k2
        #[arg(long, default_value = "bic")]
        score: ScoreKind,
        /// Mine prima-facie constraints ('on') or search unconstrained ('off')
        #[arg(long, value_parser = parse_on_off, default_value = "on", action = clap::ArgAction::Set)]
        suppes: bool,
        /// Optional significance level for the constraint tests
        #[arg(long, value_parser = parse_rate)]
        suppes_alpha: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_parents: usize,
        #[arg(long = "ga-pop", default_value_t = 32)]
        ga_pop: usize,
        #[arg(long = "ga-gens", default_value_t = 100)]
        ga_gens: usize,
        #[arg(long = "ga-mut", value_parser = parse_rate, default_value_t = 0.01)]
        ga_mut: f64,
        #[arg(long, default_value_t = 10)]
        tabu_tenure: usize,
        /// Stop after this many consecutive non-improving tabu iterations
        #[arg(long, default_value_t = 100)]
        tabu_iters: usize,
        /// Equivalent sample size of the BDe prior
        #[arg(long, default_value_t = 1.0)]
        bde_alpha: f64,
        /// Inferred graph output path (JSON); stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the mined arc mask as a graph document
        #[arg(long)]
        mask_out: Option<PathBuf>,
    },
    /// Compare an inferred graph against ground truth
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        inferred: PathBuf,
        /// Also report the undirected skeleton comparison
        #[arg(long)]
        skeleton: bool,
    },
    /// Run an experiment grid and write long-format results
    Benchmark {
        /// Grid config (JSON)
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to SBCN_WORKERS or all cores
        #[arg(long)]
        workers: Option<usize>,
        /// Also write per-cell mean/std aggregates here
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Ignore any previous journal and start over
        #[arg(long)]
        fresh: bool,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sbcn: error: {}", e);
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate {
            topology,
            nodes,
            samples,
            noise,
            seed,
            out,
            truth,
        } => cmd_generate(
            topology,
            nodes as usize,
            samples as usize,
            noise,
            seed,
            &out,
            &truth,
        ),
        Command::Infer {
            data,
            search,
            score,
            suppes,
            suppes_alpha,
            seed,
            max_parents,
            ga_pop,
            ga_gens,
            ga_mut,
            tabu_tenure,
            tabu_iters,
            bde_alpha,
            out,
            mask_out,
        } => cmd_infer(InferArgs {
            data,
            search,
            score,
            suppes,
            suppes_alpha,
            seed,
            max_parents,
            ga_pop,
            ga_gens,
            ga_mut,
            tabu_tenure,
            tabu_iters,
            bde_alpha,
            out,
            mask_out,
        }),
        Command::Eval {
            truth,
            inferred,
            skeleton,
        } => cmd_eval(&truth, &inferred, skeleton),
        Command::Benchmark {
            config,
            out,
            workers,
            summary,
            fresh,
        } => cmd_benchmark(&config, &out, workers, summary.as_deref(), fresh),
    }
}

fn cmd_generate(
    topology: TopologyKind,
    nodes: usize,
    samples: usize,
    noise: f64,
    seed: u64,
    out: &Path,
    truth: &Path,
) -> Result<ExitCode> {
    let config = format!(
        "sbcn {} generate topology={} nodes={} samples={} noise={} seed={} out={} truth={}",
        VERSION,
        topology,
        nodes,
        samples,
        noise,
        seed,
        out.display(),
        truth.display()
    );
    println!("# {}", config);
    let model = generate_structure(topology, nodes, &mut substream(seed, Stream::Structure));
    let clean = sample_dataset(&model, samples, &mut substream(seed, Stream::Sampling));
    let noisy = inject_noise(&clean, noise, &mut substream(seed, Stream::Noise));
    write_dataset(out, &noisy, &[config.clone()])?;
    let mut doc = GraphDoc::from_model(&model, noisy.names().to_vec());
    doc.config = Some(config);
    doc.topology = Some(topology.to_string());
    write_graph(truth, &doc)?;
    println!(
        "# wrote {} ({} samples x {} variables) and {} ({} arcs)",
        out.display(),
        samples,
        nodes,
        truth.display(),
        model.dag.arc_count()
    );
    Ok(ExitCode::SUCCESS)
}

struct InferArgs {
    data: PathBuf,
    search: Strategy,
    score: ScoreKind,
    suppes: bool,
    suppes_alpha: Option<f64>,
    seed: u64,
    max_parents: usize,
    ga_pop: usize,
    ga_gens: usize,
    ga_mut: f64,
    tabu_tenure: usize,
    tabu_iters: usize,
    bde_alpha: f64,
    out: Option<PathBuf>,
    mask_out: Option<PathBuf>,
}

fn cmd_infer(args: InferArgs) -> Result<ExitCode> {
    let config = format!(
        "sbcn {} infer data={} search={} score={} suppes={} suppes_alpha={} seed={} \
         max_parents={} ga_pop={} ga_gens={} ga_mut={} tabu_tenure={} tabu_iters={} bde_alpha={}",
        VERSION,
        args.data.display(),
        args.search,
        args.score,
        if args.suppes { "on" } else { "off" },
        args.suppes_alpha
            .map_or("none".to_string(), |a| a.to_string()),
        args.seed,
        args.max_parents,
        args.ga_pop,
        args.ga_gens,
        args.ga_mut,
        args.tabu_tenure,
        args.tabu_iters,
        args.bde_alpha
    );
    println!("# {}", config);
    let data = read_dataset(&args.data)?;
    let mask = if args.suppes {
        prima_facie_mask_with(
            &data,
            &SuppesOptions {
                significance: args.suppes_alpha,
            },
        )
    } else {
        full_mask(data.n())
    };
    let score_spec = ScoreSpec::with_ess(args.score, args.bde_alpha)?;
    let mut search_spec = SearchSpec::new(args.search, args.seed);
    search_spec.max_parents = args.max_parents;
    search_spec.ga_population = args.ga_pop;
    search_spec.ga_generations = args.ga_gens;
    search_spec.ga_mutation_rate = args.ga_mut;
    search_spec.tabu_tenure = args.tabu_tenure;
    search_spec.tabu_max_iterations = args.tabu_iters;
    let started = Instant::now();
    let outcome = search::run(&data, &mask, &score_spec, &search_spec)?;
    let wall_ms = started.elapsed().as_millis();
    println!(
        "# result score={:.6} score_kind={} mask_arcs={} arcs={} iterations={} wall_ms={}",
        outcome.score,
        args.score,
        mask.arc_count(),
        outcome.dag.arc_count(),
        outcome.iterations,
        wall_ms
    );
    if let Some(mask_path) = &args.mask_out {
        let mask_doc = GraphDoc::from_mask(&mask, data.names().to_vec());
        write_graph(mask_path, &mask_doc)?;
    }
    let mut doc = GraphDoc::from_dag(&outcome.dag, data.names().to_vec());
    doc.config = Some(config);
    match args.out {
        Some(path) => write_graph(&path, &doc)?,
        None => print!("{}", graph_to_string(&doc)),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(truth: &Path, inferred: &Path, skeleton: bool) -> Result<ExitCode> {
    println!(
        "# sbcn {} eval truth={} inferred={} skeleton={}",
        VERSION,
        truth.display(),
        inferred.display(),
        skeleton
    );
    let truth_dag = read_graph(truth)?.to_dag()?;
    let inferred_dag = read_graph(inferred)?.to_dag()?;
    println!("mode,tp,fp,tn,fn,accuracy,sensitivity,specificity");
    let directed = sbcn::eval::metrics(&truth_dag, &inferred_dag)?;
    print_metric_row("directed", &directed);
    if skeleton {
        let rec = sbcn::eval::metrics_with_mode(
            &truth_dag,
            &inferred_dag,
            sbcn::eval::ComparisonMode::Skeleton,
        )?;
        print_metric_row("skeleton", &rec);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_metric_row(mode: &str, r: &sbcn::eval::MetricRecord) {
    println!(
        "{},{},{},{},{},{:.6},{:.6},{:.6}",
        mode,
        r.true_positives,
        r.false_positives,
        r.true_negatives,
        r.false_negatives,
        r.accuracy,
        r.sensitivity,
        r.specificity
    );
}

fn cmd_benchmark(
    config_path: &Path,
    out: &Path,
    workers: Option<usize>,
    summary: Option<&Path>,
    fresh: bool,
) -> Result<ExitCode> {
    let grid = read_grid(config_path)?;
    let worker_count = workers.or_else(|| {
        std::env::var("SBCN_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(w) = worker_count {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("worker pool: {}", e)))?;
    }
    let config_json = serde_json::to_string(&grid).expect("grids always serialize");
    let config_line = format!("# sbcn {} benchmark config={}", VERSION, config_json);
    println!("{}", config_line);
    let journal_path = out.with_extension(match out.extension() {
        Some(ext) => format!("{}.journal", ext.to_string_lossy()),
        None => "journal".to_string(),
    });
    if fresh {
        let _ = fs::remove_file(out);
        let _ = fs::remove_file(&journal_path);
    }
    if !out.exists() {
        fs::write(out, format!("{}\n{}\n", config_line, RESULTS_HEADER))?;
    }
    let mut done: BTreeMap<String, String> = BTreeMap::new();
    {
        let text = fs::read_to_string(out)?;
        let mut lines = text.lines();
        if let Some(first) = lines.next() {
            if first != config_line {
                return Err(Error::InvalidInput(format!(
                    "{} was produced by a different configuration; rerun with --fresh",
                    out.display()
                )));
            }
        }
        for line in lines {
            if line.starts_with('#') || line == RESULTS_HEADER || line.trim().is_empty() {
                continue;
            }
            done.insert(row_key(line)?, line.to_string());
        }
    }
    let journaled: BTreeSet<String> = if journal_path.exists() {
        fs::read_to_string(&journal_path)?
            .lines()
            .filter_map(|l| l.strip_prefix("OK ").map(str::to_string))
            .collect()
    } else {
        BTreeSet::new()
    };
    let cells = grid.cells();
    let total = cells.len();
    let pending: Vec<CellSpec> = cells
        .iter()
        .filter(|c| {
            let key = c.key();
            !(done.contains_key(&key) && journaled.contains(&key))
        })
        .copied()
        .collect();
    eprintln!(
        "benchmark: {} cells total, {} already journaled, {} to run",
        total,
        total - pending.len(),
        pending.len()
    );
    let mut failures = 0usize;
    let mut completed = total - pending.len();
    let mut csv = fs::OpenOptions::new().create(true).append(true).open(out)?;
    let mut journal = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&journal_path)?;
    for batch in pending.chunks(256) {
        let results = run_cells(batch);
        for (spec, result) in batch.iter().zip(results) {
            let key = spec.key();
            match result {
                Ok(cell) => {
                    let row = result_row(&cell);
                    writeln!(csv, "{}", row)?;
                    writeln!(journal, "OK {}", key)?;
                    done.insert(key, row);
                }
                Err(e) => {
                    log::error!("cell {} failed: {}", key, e);
                    writeln!(journal, "FAIL {} {}", key, e)?;
                    failures += 1;
                }
            }
        }
        csv.flush()?;
        journal.flush()?;
        completed = (completed + batch.len()).min(total);
        eprintln!("benchmark: {} / {} cells done", completed, total);
    }
    drop(csv);
    // rewrite in canonical cell order so reruns are byte-stable
    let mut final_text = String::new();
    final_text.push_str(&config_line);
    final_text.push('\n');
    final_text.push_str(RESULTS_HEADER);
    final_text.push('\n');
    let mut rows_in_order: Vec<&String> = Vec::with_capacity(done.len());
    for cell in &cells {
        if let Some(row) = done.get(&cell.key()) {
            rows_in_order.push(row);
        }
    }
    for row in &rows_in_order {
        final_text.push_str(row);
        final_text.push('\n');
    }
    fs::write(out, final_text)?;
    if let Some(summary_path) = summary {
        let parsed: Vec<ParsedRow> = rows_in_order
            .iter()
            .map(|row| parse_result_row(row))
            .collect::<Result<_>>()?;
        write_summary(summary_path, &config_line, &parsed)?;
    }
    eprintln!(
        "benchmark: finished with {} rows, {} failures",
        rows_in_order.len(),
        failures
    );
    if failures * 100 > total {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

/// Aggregates final rows by cell (everything but the replicate column) and
/// writes mean/std per metric.
fn write_summary(path: &Path, config_line: &str, rows: &[ParsedRow]) -> Result<()> {
    let strip_replicate = |key: &str| -> String {
        match key.rfind(',') {
            Some(idx) => key[..idx].to_string(),
            None => key.to_string(),
        }
    };
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&ParsedRow>> = BTreeMap::new();
    for row in rows {
        let cell = strip_replicate(&row.key);
        if !groups.contains_key(&cell) {
            order.push(cell.clone());
        }
        groups.entry(cell).or_default().push(row);
    }
    let mean_std = |values: &[f64]| -> (f64, f64) {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
        (mean, var.sqrt())
    };
    let mut text = String::new();
    text.push_str(config_line);
    text.push('\n');
    text.push_str(SUMMARY_HEADER);
    text.push('\n');
    for cell in order {
        let group = &groups[&cell];
        let acc: Vec<f64> = group.iter().map(|r| r.accuracy).collect();
        let sens: Vec<f64> = group.iter().map(|r| r.sensitivity).collect();
        let spec: Vec<f64> = group.iter().map(|r| r.specificity).collect();
        let (am, asd) = mean_std(&acc);
        let (sm, ssd) = mean_std(&sens);
        let (pm, psd) = mean_std(&spec);
        text.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            cell,
            group.len(),
            am,
            asd,
            sm,
            ssd,
            pm,
            psd
        ));
    }
    fs::write(path, text)?;
    Ok(())
}
