//! File formats.
//!
//! * model JSON: `{"n": N, "labels": [...], "edges": [[i, j, p], ...]}`,
//!   0-based indices, keys written in that order;
//! * model CSV: header `i,j,p`, one edge per line;
//! * partition JSON: `{"n": N, "blocks": [[...], ...]}`;
//! * entropy report JSON and JSON-lines lumping records, floats rounded to
//!   12 significant digits;
//! * sequences: whitespace-separated labels, one stream per line.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::infotheory::EntropyReport;
use crate::markov::TransitionModel;
use crate::ngram::{ExperimentReport, LumpingRecord};
use crate::partition::Partition;
use crate::scalar::Probability;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    edges: Vec<(usize, usize, f64)>,
}

fn rows_from_edges<T: Probability>(
    n: usize,
    edges: &[(usize, usize, f64)],
) -> Result<Vec<Vec<(usize, T)>>> {
    let mut rows = vec![Vec::new(); n];
    for &(i, j, p) in edges {
        if i >= n || j >= n {
            return Err(Error::InvalidModel(format!(
                "edge ({i}, {j}) out of range for n = {n}"
            )));
        }
        let p =
            T::from_f64(p).ok_or_else(|| Error::InvalidModel(format!("bad probability {p}")))?;
        rows[i].push((j, p));
    }
    Ok(rows)
}

pub fn model_from_json<T: Probability>(text: &str) -> Result<TransitionModel<T>> {
    let file: ModelFile = serde_json::from_str(text)?;
    TransitionModel::new(rows_from_edges(file.n, &file.edges)?, file.labels)
}

pub fn model_to_json<T: Probability>(model: &TransitionModel<T>) -> String {
    let edges = model
        .rows()
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, p)| (i, j, p.as_f64())))
        .collect();
    let file = ModelFile {
        n: model.n_states(),
        labels: Some(model.labels().to_vec()),
        edges,
    };
    serde_json::to_string(&file).expect("model serializes") + "\n"
}

/// CSV triplets `i,j,p` after an `i,j,p` header. The state count is one more
/// than the largest index.
pub fn model_from_csv<T: Probability>(text: &str) -> Result<TransitionModel<T>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header: Vec<&str> = lines
        .next()
        .unwrap_or("")
        .split(',')
        .map(str::trim)
        .collect();
    if header != ["i", "j", "p"] {
        return Err(Error::InvalidModel("CSV header must be i,j,p".into()));
    }
    let mut edges = Vec::new();
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::InvalidModel(format!("CSV line {}: '{line}'", k + 2));
        if fields.len() != 3 {
            return Err(bad());
        }
        let i: usize = fields[0].parse().map_err(|_| bad())?;
        let j: usize = fields[1].parse().map_err(|_| bad())?;
        let p: f64 = fields[2].parse().map_err(|_| bad())?;
        edges.push((i, j, p));
    }
    let n = edges
        .iter()
        .map(|&(i, j, _)| i.max(j) + 1)
        .max()
        .unwrap_or(0);
    TransitionModel::new(rows_from_edges(n, &edges)?, None)
}

pub fn model_to_csv<T: Probability>(model: &TransitionModel<T>) -> String {
    let mut out = String::from("i,j,p\n");
    for (i, row) in model.rows().iter().enumerate() {
        for &(j, p) in row {
            let _ = writeln!(out, "{i},{j},{}", p.as_f64());
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

pub fn partition_from_json(text: &str) -> Result<Partition> {
    let file: PartitionFile = serde_json::from_str(text)?;
    Partition::from_blocks(file.n, &file.blocks)
}

pub fn partition_to_json(p: &Partition) -> String {
    serde_json::to_string(&PartitionFile {
        n: p.n_states(),
        blocks: p.blocks(),
    })
    .expect("partition serializes")
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn entropy_report_json<T: Probability>(r: &EntropyReport<T>) -> Value {
    json!({
        "h_rate_x": round12(r.h_rate_x.as_f64()),
        "h_marginal_y": round12(r.h_marginal_y.as_f64()),
        "h_rate_y2": round12(r.h_rate_y_order2.as_f64()),
        "h_cond_rate": round12(r.h_cond_rate.as_f64()),
        "order2_exact": r.order2_exact,
    })
}

pub fn record_json(r: &LumpingRecord) -> Value {
    json!({
        "m": r.m,
        "blocks": r.partition.blocks(),
        "marginal_entropy_bits": round12(r.marginal_entropy_bits),
        "entropy_rate_bits": round12(r.entropy_rate_bits),
        "preserved": r.preserved,
    })
}

pub fn summary_json(report: &ExperimentReport, labels: &[String]) -> Value {
    json!({
        "summary": true,
        "n": report.n_states,
        "min_degree": report.bounds.min_degree,
        "max_degree": report.bounds.max_degree,
        "spectral_radius": round12(report.bounds.spectral),
        "entropy_rate_bits": round12(report.entropy_rate_bits),
        "marginal_entropy_bits": round12(report.baseline_marginal_entropy_bits),
        "possible_pairs": report.admissible_pairs.possible_pairs(),
        "admissible_pairs": report.admissible_pairs.len(),
        "levels": report.level_counts.iter().map(|&(m, count)| json!({"m": m, "count": count})).collect::<Vec<_>>(),
        "best": report.best.as_ref().map(record_json),
        "merged_sets": report.merged_sets(labels),
    })
}

/// One record per lumping followed by the summary record.
pub fn report_jsonl(report: &ExperimentReport, labels: &[String]) -> String {
    let mut out = String::new();
    for r in &report.records {
        out.push_str(&record_json(r).to_string());
        out.push('\n');
    }
    out.push_str(&summary_json(report, labels).to_string());
    out.push('\n');
    out
}

/// Parses whitespace-separated labels into indices, one sequence per
/// non-empty line.
pub fn read_sequences(text: &str, labels: &[String]) -> Result<Vec<Vec<usize>>> {
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split_whitespace()
                .map(|tok| {
                    index
                        .get(tok)
                        .copied()
                        .ok_or_else(|| Error::InvalidInput(format!("unknown symbol '{tok}'")))
                })
                .collect()
        })
        .collect()
}

pub fn write_sequences(seqs: &[Vec<usize>], labels: &[String]) -> String {
    let mut out = String::new();
    for seq in seqs {
        let line: Vec<&str> = seq.iter().map(|&x| labels[x].as_str()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy_model, toy_solution};

    #[test]
    fn model_json_is_byte_stable() {
        let m =
            TransitionModel::<f64>::from_dense(&[vec![0.25, 0.75], vec![0.5, 0.5]], None).unwrap();
        let text = model_to_json(&m);
        assert_eq!(
            text,
            "{\"n\":2,\"labels\":[\"1\",\"2\"],\"edges\":[[0,0,0.25],[0,1,0.75],[1,0,0.5],[1,1,0.5]]}\n"
        );
        let back = model_from_json::<f64>(&text).unwrap();
        assert_eq!(model_to_json(&back), text);
    }

    #[test]
    fn json_without_labels_and_invalid_rows() {
        let m =
            model_from_json::<f64>(r#"{"n":2,"edges":[[0,0,0.5],[0,1,0.5],[1,0,1.0]]}"#).unwrap();
        assert_eq!(m.labels(), &["1", "2"]);
        let err = model_from_json::<f64>(r#"{"n":2,"edges":[[0,0,0.5],[0,1,0.4],[1,0,1.0]]}"#)
            .unwrap_err();
        assert!(matches!(err, Error::RowSum { row: 0, .. }));
        let err = model_from_json::<f64>(r#"{"n":2,"edges":[[0,2,1.0]]}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn csv_round_trip() {
        let m = toy_model::<f64>();
        let back = model_from_csv::<f64>(&model_to_csv(&m)).unwrap();
        assert_eq!(back.rows(), m.rows());
        assert!(model_from_csv::<f64>("a,b,c\n0,0,1\n").is_err());
    }

    #[test]
    fn partition_json() {
        let text = partition_to_json(&toy_solution());
        assert_eq!(text, r#"{"n":6,"blocks":[[0,1,2],[3,4],[5]]}"#);
        assert_eq!(
            partition_from_json(r#"{"n":6,"blocks":[[5],[4,3],[2,0,1]]}"#).unwrap(),
            toy_solution()
        );
    }

    #[test]
    fn sequences_round_trip() {
        let labels: Vec<String> = ["LB", "SP", "a"].iter().map(|s| s.to_string()).collect();
        let seqs = read_sequences("a SP a\n\nLB a\n", &labels).unwrap();
        assert_eq!(seqs, vec![vec![2, 1, 2], vec![0, 2]]);
        assert_eq!(write_sequences(&seqs, &labels), "a SP a\nLB a\n");
        assert!(read_sequences("b", &labels).is_err());
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(3f64.log2()), 1.58496250072);
    }
}
