//! End-to-end tests of the sbcn binary: exit codes, file formats and
//! byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sbcn::io::{read_dataset, read_graph};
use sbcn::suppes::prima_facie_mask;

fn sbcn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbcn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn generate_args<'a>(out: &'a str, truth: &'a str) -> Vec<&'a str> {
    vec![
        "generate",
        "--topology",
        "tree",
        "--nodes",
        "5",
        "--samples",
        "50",
        "--noise",
        "0",
        "--seed",
        "1",
        "--out",
        out,
        "--truth",
        truth,
    ]
}

#[test]
fn generate_writes_dataset_and_tree_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbcn(dir.path(), &generate_args("data.csv", "truth.json"));
    assert!(out.status.success());
    let data = read_dataset(&dir.path().join("data.csv")).unwrap();
    assert_eq!((data.m(), data.n()), (50, 5));
    let truth = read_graph(&dir.path().join("truth.json")).unwrap();
    assert_eq!(truth.arcs.len(), 4); // a 5-node tree has n - 1 arcs
    assert!(truth.config.is_some());
    let echoed = String::from_utf8_lossy(&out.stdout);
    assert!(echoed.contains("generate topology=tree nodes=5"));
}

#[test]
fn generate_missing_required_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbcn(
        dir.path(),
        &[
            "generate",
            "--topology",
            "tree",
            "--samples",
            "50",
            "--out",
            "d.csv",
            "--truth",
            "t.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--nodes"));
}

#[test]
fn generate_rejects_out_of_range_noise() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = generate_args("d.csv", "t.json");
    let pos = args.iter().position(|a| *a == "0").unwrap();
    args[pos] = "1.5";
    let out = sbcn(dir.path(), &args);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sbcn(dir.path(), &generate_args("a.csv", "a.json")).status.success());
    assert!(sbcn(dir.path(), &generate_args("b.csv", "b.json")).status.success());
    // the config line embeds the output path, so compare data bodies and
    // graph payloads
    let strip = |name: &str| -> String {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip("a.csv"), strip("b.csv"));
    let arcs = |name: &str| read_graph(&dir.path().join(name)).unwrap().arcs;
    assert_eq!(arcs("a.json"), arcs("b.json"));

    // identical invocations produce identical bytes
    assert!(sbcn(dir.path(), &generate_args("a2.csv", "a2.json")).status.success());
    let rename = |from: &str, to: &str| fs::rename(dir.path().join(from), dir.path().join(to));
    rename("a2.csv", "c.csv").unwrap();
    rename("a2.json", "c.json").unwrap();
    assert!(sbcn(dir.path(), &generate_args("a2.csv", "a2.json")).status.success());
    assert_eq!(
        fs::read(dir.path().join("c.csv")).unwrap(),
        fs::read(dir.path().join("a2.csv")).unwrap()
    );
    assert_eq!(
        fs::read(dir.path().join("c.json")).unwrap(),
        fs::read(dir.path().join("a2.json")).unwrap()
    );
}

#[test]
fn infer_outputs_arcs_inside_the_mask() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sbcn(dir.path(), &generate_args("data.csv", "truth.json")).status.success());
    let out = sbcn(
        dir.path(),
        &[
            "infer", "--data", "data.csv", "--search", "hc", "--score", "bic", "--suppes", "on",
            "--seed", "3", "--out", "g.json",
        ],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("# result score="));
    assert!(stdout.contains("mask_arcs="));
    let data = read_dataset(&dir.path().join("data.csv")).unwrap();
    let mask = prima_facie_mask(&data);
    let doc = read_graph(&dir.path().join("g.json")).unwrap();
    for (u, v) in doc.arcs {
        assert!(mask.allowed(u, v), "arc {}->{} escaped the mask", u, v);
    }
}

#[test]
fn infer_can_dump_the_mined_mask() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sbcn(dir.path(), &generate_args("data.csv", "truth.json")).status.success());
    let out = sbcn(
        dir.path(),
        &[
            "infer", "--data", "data.csv", "--out", "g.json", "--mask-out", "mask.json",
        ],
    );
    assert!(out.status.success());
    let data = read_dataset(&dir.path().join("data.csv")).unwrap();
    let expected = prima_facie_mask(&data);
    let doc = read_graph(&dir.path().join("mask.json")).unwrap();
    assert_eq!(doc.arcs, expected.arcs());
}

#[test]
fn infer_twice_writes_identical_graph_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sbcn(dir.path(), &generate_args("data.csv", "truth.json")).status.success());
    let args = [
        "infer", "--data", "data.csv", "--search", "ga", "--score", "bic", "--suppes", "on",
        "--seed", "9", "--ga-gens", "20", "--out", "g1.json",
    ];
    assert!(sbcn(dir.path(), &args).status.success());
    let mut again = args;
    *again.last_mut().unwrap() = "g2.json";
    assert!(sbcn(dir.path(), &again).status.success());
    let strip = |name: &str| {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .replace("g1.json", "")
            .replace("g2.json", "")
    };
    assert_eq!(strip("g1.json"), strip("g2.json"));
}

#[test]
fn infer_single_variable_dataset_gives_the_empty_graph() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("one.csv"), "v0\n1\n0\n1\n").unwrap();
    let out = sbcn(dir.path(), &["infer", "--data", "one.csv", "--out", "g.json"]);
    assert!(out.status.success());
    let doc = read_graph(&dir.path().join("g.json")).unwrap();
    assert!(doc.arcs.is_empty());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let score: f64 = stdout
        .split("result score=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(score <= 0.0);
}

#[test]
fn infer_reports_malformed_cells_with_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "a,b\n0,1\n1,x\n").unwrap();
    let out = sbcn(dir.path(), &["infer", "--data", "bad.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 2"), "stderr: {}", stderr);
    assert!(stderr.contains("column b"), "stderr: {}", stderr);
}

#[test]
fn eval_identical_graphs_score_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sbcn(dir.path(), &generate_args("data.csv", "truth.json")).status.success());
    let out = sbcn(
        dir.path(),
        &["eval", "--truth", "truth.json", "--inferred", "truth.json"],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("directed,4,0,16,0,1.000000,1.000000,1.000000"),
        "stdout: {}",
        stdout
    );
}

#[test]
fn eval_one_missing_arc_by_pair_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let truth = r#"{"version":"0","n":3,"names":["a","b","c"],"arcs":[[0,1]]}"#;
    let empty = r#"{"version":"0","n":3,"names":["a","b","c"],"arcs":[]}"#;
    fs::write(dir.path().join("t.json"), truth).unwrap();
    fs::write(dir.path().join("e.json"), empty).unwrap();
    let out = sbcn(
        dir.path(),
        &["eval", "--truth", "t.json", "--inferred", "e.json"],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("directed,0,0,5,1,0.833333,0.000000,1.000000"),
        "stdout: {}",
        stdout
    );
}

#[test]
fn eval_node_count_mismatch_fails() {
    let dir = tempfile::tempdir().unwrap();
    let three = r#"{"version":"0","n":3,"names":["a","b","c"],"arcs":[]}"#;
    let four = r#"{"version":"0","n":4,"names":["a","b","c","d"],"arcs":[]}"#;
    fs::write(dir.path().join("t.json"), three).unwrap();
    fs::write(dir.path().join("i.json"), four).unwrap();
    let out = sbcn(
        dir.path(),
        &["eval", "--truth", "t.json", "--inferred", "i.json"],
    );
    assert_eq!(out.status.code(), Some(1));
}

const GRID: &str = r#"{
  "topologies": ["tree"],
  "node_counts": [5],
  "sample_sizes": [40],
  "noise_levels": [0.05],
  "searches": ["hc"],
  "scores": ["bic"],
  "suppes": [true],
  "replicates": 1,
  "base_seed": 3
}"#;

#[test]
fn benchmark_single_cell_grid_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("grid.json"), GRID).unwrap();
    let out = sbcn(
        dir.path(),
        &[
            "benchmark", "--config", "grid.json", "--out", "r.csv", "--workers", "1",
        ],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("topology,"))
        .collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("tree,5,40,0.05,hc,bic,on,0,3,"));
}

#[test]
fn benchmark_grid_product_and_resume() {
    let grid = r#"{
      "topologies": ["tree", "forest"],
      "node_counts": [5],
      "sample_sizes": [40],
      "noise_levels": [0.0, 0.1],
      "searches": ["hc"],
      "scores": ["bic"],
      "suppes": [true],
      "replicates": 3,
      "base_seed": 5
    }"#;
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("grid.json"), grid).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["benchmark", "--config", "grid.json", "--out", "r.csv"];
        args.extend_from_slice(extra);
        sbcn(dir.path(), &args)
    };
    assert!(run(&[]).status.success());
    let first = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(
        first
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("topology,"))
            .count(),
        12
    );

    // drop the last row and its journal entry, then resume
    let truncated: Vec<&str> = first.trim_end().lines().collect();
    fs::write(
        dir.path().join("r.csv"),
        format!("{}\n", truncated[..truncated.len() - 1].join("\n")),
    )
    .unwrap();
    let journal = fs::read_to_string(dir.path().join("r.csv.journal")).unwrap();
    let kept: Vec<&str> = journal.trim_end().lines().collect();
    fs::write(
        dir.path().join("r.csv.journal"),
        format!("{}\n", kept[..kept.len() - 1].join("\n")),
    )
    .unwrap();
    let resumed = run(&[]);
    assert!(resumed.status.success());
    assert!(String::from_utf8_lossy(&resumed.stderr).contains("1 to run"));

    // a rerun of a complete file touches nothing
    assert!(run(&[]).status.success());
    let strip_wall = |text: &str| -> String {
        text.lines()
            .map(|l| l.rsplit_once(',').map_or(l.to_string(), |(a, _)| a.to_string()))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip_wall(&first),
        strip_wall(&fs::read_to_string(dir.path().join("r.csv")).unwrap())
    );
}

#[test]
fn benchmark_config_change_is_refused_without_fresh() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("grid.json"), GRID).unwrap();
    assert!(sbcn(
        dir.path(),
        &["benchmark", "--config", "grid.json", "--out", "r.csv"]
    )
    .status
    .success());
    fs::write(dir.path().join("grid.json"), GRID.replace("\"replicates\": 1", "\"replicates\": 2"))
        .unwrap();
    let out = sbcn(
        dir.path(),
        &["benchmark", "--config", "grid.json", "--out", "r.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--fresh"));
    let out = sbcn(
        dir.path(),
        &[
            "benchmark", "--config", "grid.json", "--out", "r.csv", "--fresh",
        ],
    );
    assert!(out.status.success());
}
