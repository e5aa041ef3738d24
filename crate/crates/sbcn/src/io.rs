//! File formats: headered comma-separated datasets, JSON graph documents,
//! JSON grid configs and the long-format results rows. Leading `#` lines
//! carry the resolved configuration and are skipped on read.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{GenerativeModel, ParentLogic};
use crate::error::{Error, Result};
use crate::eval::{CellResult, ExperimentGrid, SummaryRow};
use crate::model::{ArcMask, BinaryDataset, Dag};

/// Tool version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// ---------------------------------------------------------------------------
// datasets

pub fn dataset_to_string(data: &BinaryDataset, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&data.names().join(","));
    out.push('\n');
    for row in data.rows() {
        let line: Vec<&str> = row.iter().map(|&c| if c == 1 { "1" } else { "0" }).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_dataset(path: &Path, data: &BinaryDataset, comments: &[String]) -> Result<()> {
    fs::write(path, dataset_to_string(data, comments))?;
    Ok(())
}

/// Parses a headered 0/1 table. `origin` names the source in errors.
pub fn parse_dataset(text: &str, origin: &str) -> Result<BinaryDataset> {
    let mut lines = text
        .lines()
        .filter(|line| !line.trim_start().starts_with('#') && !line.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Document {
        what: origin.to_string(),
        message: "no header line found".into(),
    })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (row_idx, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(Error::DatasetParse {
                origin: origin.to_string(),
                row: row_idx + 1,
                column: format!("{}", cells.len()),
                message: format!("expected {} cells, found {}", names.len(), cells.len()),
            });
        }
        let mut row = Vec::with_capacity(names.len());
        for (col_idx, cell) in cells.iter().enumerate() {
            match cell.trim() {
                "0" => row.push(0u8),
                "1" => row.push(1u8),
                other => {
                    return Err(Error::DatasetParse {
                        origin: origin.to_string(),
                        row: row_idx + 1,
                        column: names[col_idx].clone(),
                        message: format!("'{}' is not 0 or 1", other),
                    });
                }
            }
        }
        rows.push(row);
    }
    BinaryDataset::new(names, rows)
}

pub fn read_dataset(path: &Path) -> Result<BinaryDataset> {
    let text = fs::read_to_string(path)?;
    parse_dataset(&text, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// graph documents

/// JSON document for a graph: node count, names, arcs as `[parent, child]`
/// pairs, plus the generative parameters when it describes ground truth.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphDoc {
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub n: usize,
    pub names: Vec<String>,
    pub arcs: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logic: Option<ParentLogic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activation: Option<Vec<f64>>,
}

impl GraphDoc {
    pub fn from_dag(dag: &Dag, names: Vec<String>) -> Self {
        Self {
            version: VERSION.to_string(),
            config: None,
            n: dag.n(),
            names,
            arcs: dag.arcs(),
            topology: None,
            logic: None,
            activation: None,
        }
    }

    pub fn from_model(model: &GenerativeModel, names: Vec<String>) -> Self {
        let mut doc = Self::from_dag(&model.dag, names);
        doc.logic = Some(model.logic);
        doc.activation = Some(model.activation.clone());
        doc
    }

    /// A mask rendered as a graph document (its admissible arcs), for
    /// inspection.
    pub fn from_mask(mask: &ArcMask, names: Vec<String>) -> Self {
        Self {
            version: VERSION.to_string(),
            config: None,
            n: mask.n(),
            names,
            arcs: mask.arcs(),
            topology: None,
            logic: None,
            activation: None,
        }
    }

    pub fn to_dag(&self) -> Result<Dag> {
        Dag::from_arcs(self.n, self.arcs.iter().copied())
    }
}

pub fn graph_to_string(doc: &GraphDoc) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("graph docs always serialize");
    out.push('\n');
    out
}

pub fn write_graph(path: &Path, doc: &GraphDoc) -> Result<()> {
    fs::write(path, graph_to_string(doc))?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<GraphDoc> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Document {
        what: path.display().to_string(),
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// grid configs

pub fn read_grid(path: &Path) -> Result<ExperimentGrid> {
    let text = fs::read_to_string(path)?;
    let grid: ExperimentGrid = serde_json::from_str(&text).map_err(|e| Error::Document {
        what: path.display().to_string(),
        message: e.to_string(),
    })?;
    grid.validate()?;
    Ok(grid)
}

// ---------------------------------------------------------------------------
// results rows

pub const RESULTS_HEADER: &str = "topology,n,m,noise,search,score,suppes,replicate,seed,tp,fp,tn,fn,accuracy,sensitivity,specificity,wall_time_ms";

pub fn result_row(r: &CellResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{}",
        r.spec.topology,
        r.spec.n,
        r.spec.m,
        r.spec.noise,
        r.spec.search,
        r.spec.score,
        if r.spec.suppes { "on" } else { "off" },
        r.spec.replicate,
        r.seed,
        r.record.true_positives,
        r.record.false_positives,
        r.record.true_negatives,
        r.record.false_negatives,
        r.record.accuracy,
        r.record.sensitivity,
        r.record.specificity,
        r.wall_time_ms
    )
}

/// The cell key of a results row: its first eight columns.
pub fn row_key(row: &str) -> Result<String> {
    let mut seen = 0usize;
    for (idx, ch) in row.char_indices() {
        if ch == ',' {
            seen += 1;
            if seen == 8 {
                return Ok(row[..idx].to_string());
            }
        }
    }
    Err(Error::Document {
        what: "results row".into(),
        message: format!("fewer than 8 columns in '{}'", row),
    })
}

/// A results row parsed back into the numbers the summary needs.
#[derive(Clone, Debug)]
pub struct ParsedRow {
    pub key: String,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

pub fn parse_result_row(row: &str) -> Result<ParsedRow> {
    let cols: Vec<&str> = row.split(',').collect();
    if cols.len() != 17 {
        return Err(Error::Document {
            what: "results row".into(),
            message: format!("expected 17 columns, found {}", cols.len()),
        });
    }
    let num = |idx: usize| -> Result<f64> {
        cols[idx].parse::<f64>().map_err(|e| Error::Document {
            what: "results row".into(),
            message: format!("column {}: {}", idx, e),
        })
    };
    Ok(ParsedRow {
        key: row_key(row)?,
        accuracy: num(13)?,
        sensitivity: num(14)?,
        specificity: num(15)?,
    })
}

pub const SUMMARY_HEADER: &str = "topology,n,m,noise,search,score,suppes,replicates,accuracy_mean,accuracy_std,sensitivity_mean,sensitivity_std,specificity_mean,specificity_std";

pub fn summary_row(s: &SummaryRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        s.topology,
        s.n,
        s.m,
        s.noise,
        s.search,
        s.score,
        if s.suppes { "on" } else { "off" },
        s.replicates,
        s.accuracy_mean,
        s.accuracy_std,
        s.sensitivity_mean,
        s.sensitivity_std,
        s.specificity_mean,
        s.specificity_std
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_structure, sample_dataset, TopologyKind};
    use crate::rng::{substream, Stream};

    #[test]
    fn dataset_round_trips_with_comments() {
        let model = generate_structure(
            TopologyKind::Forest,
            6,
            &mut substream(3, Stream::Structure),
        );
        let data = sample_dataset(&model, 20, &mut substream(3, Stream::Sampling));
        let text = dataset_to_string(&data, &["sbcn test".into()]);
        let parsed = parse_dataset(&text, "memory").unwrap();
        assert_eq!(parsed, data);
    }

    #[test]
    fn malformed_cell_names_row_and_column() {
        let text = "a,b\n0,1\n0,x\n";
        let err = parse_dataset(text, "bad.csv").unwrap_err();
        match err {
            Error::DatasetParse {
                origin,
                row,
                column,
                message,
            } => {
                assert_eq!(origin, "bad.csv");
                assert_eq!(row, 2);
                assert_eq!(column, "b");
                assert!(message.contains("'x'"));
            }
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn ragged_row_is_reported() {
        let text = "a,b\n0\n";
        assert!(matches!(
            parse_dataset(text, "bad.csv"),
            Err(Error::DatasetParse { row: 1, .. })
        ));
    }

    #[test]
    fn graph_doc_round_trips() {
        let model = generate_structure(
            TopologyKind::DagConjSingle,
            7,
            &mut substream(5, Stream::Structure),
        );
        let names = (0..7).map(|j| format!("v{}", j)).collect();
        let doc = GraphDoc::from_model(&model, names);
        let text = graph_to_string(&doc);
        let parsed: GraphDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.to_dag().unwrap(), model.dag);
        assert_eq!(parsed.logic, Some(model.logic));
    }

    #[test]
    fn row_key_takes_the_first_eight_columns() {
        let row = "tree,5,60,0,hc,bic,on,3,10,1,2,3,4,0.5,0.6,0.7,12";
        assert_eq!(row_key(row).unwrap(), "tree,5,60,0,hc,bic,on,3");
        let parsed = parse_result_row(row).unwrap();
        assert_eq!(parsed.accuracy, 0.5);
        assert_eq!(parsed.specificity, 0.7);
        assert!(row_key("a,b").is_err());
    }
}
