//! The BIPARTITE text format for item-tag graphs.
//!
//! ```text
//! # directives first by convention, but any order works
//! EPSILON 1.0000000000000001e-1
//! SIGMA_WEIGHT 1.0000000000000000e0
//! CANDIDATES rock pop
//! TRUE_TAGS pop
//! song1<TAB>rock<TAB>2.0000000000000000e0
//! song1<TAB>pop<TAB>1.0000000000000000e0
//! ```
//!
//! Edge rows are item, tag, and weight separated by tabs. An item's
//! weight is the sum of its edge weights. Omitted directives default to
//! escape probability 0.1, attachment weight = median item weight, and
//! all tags as candidates.

use std::fmt::Write as _;
use std::path::Path;

use crate::tag_graph::TagGraph;
use crate::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_bipartite_file(path: &Path) -> Result<TagGraph> {
    parse_bipartite_str(&std::fs::read_to_string(path)?)
}

pub fn parse_bipartite_str(text: &str) -> Result<TagGraph> {
    let mut builder = TagGraph::builder();
    let mut seen_epsilon = false;
    let mut seen_sigma = false;
    let mut seen_candidates = false;
    let mut seen_true = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }

        if line.contains('\t') {
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(line_no, "edge rows are item<TAB>tag<TAB>weight"));
            }
            if fields[0].is_empty() || fields[1].is_empty() {
                return Err(parse_err(line_no, "empty item or tag label"));
            }
            let weight: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad weight `{}`", fields[2])))?;
            builder
                .add_edge(fields[0], fields[1], weight)
                .map_err(|e| match e {
                    Error::DuplicateEdge { .. } => e,
                    Error::InvalidGraph(msg) => parse_err(line_no, msg),
                    other => other,
                })?;
            continue;
        }

        let mut tokens = trimmed.split_whitespace();
        match tokens.next() {
            Some("EPSILON") => {
                if seen_epsilon {
                    return Err(parse_err(line_no, "duplicate EPSILON directive"));
                }
                seen_epsilon = true;
                let v: f64 = tokens
                    .next()
                    .ok_or_else(|| parse_err(line_no, "missing value"))?
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad EPSILON value"))?;
                builder.epsilon(v);
            }
            Some("SIGMA_WEIGHT") => {
                if seen_sigma {
                    return Err(parse_err(line_no, "duplicate SIGMA_WEIGHT directive"));
                }
                seen_sigma = true;
                let v: f64 = tokens
                    .next()
                    .ok_or_else(|| parse_err(line_no, "missing value"))?
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad SIGMA_WEIGHT value"))?;
                builder.sigma_weight(v);
            }
            Some("CANDIDATES") => {
                if seen_candidates {
                    return Err(parse_err(line_no, "duplicate CANDIDATES directive"));
                }
                seen_candidates = true;
                let labels: Vec<String> = tokens.map(str::to_string).collect();
                if labels.is_empty() {
                    return Err(parse_err(line_no, "CANDIDATES needs at least one tag"));
                }
                builder.candidates(&labels);
            }
            Some("TRUE_TAGS") => {
                if seen_true {
                    return Err(parse_err(line_no, "duplicate TRUE_TAGS directive"));
                }
                seen_true = true;
                let labels: Vec<String> = tokens.map(str::to_string).collect();
                builder.true_tags(&labels);
            }
            Some(other) => {
                return Err(parse_err(
                    line_no,
                    format!("unknown directive `{other}` (edge rows use tabs)"),
                ))
            }
            None => unreachable!("line is nonempty"),
        }
    }

    builder.build()
}

/// Canonical serialization: directives first, then edges in item-major
/// first-appearance order. Parsing the output reproduces the graph.
pub fn write_bipartite(graph: &TagGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "EPSILON {:.16e}", graph.epsilon());
    let _ = writeln!(out, "SIGMA_WEIGHT {:.16e}", graph.sigma_weight());
    out.push_str("CANDIDATES");
    for &t in graph.candidates() {
        let _ = write!(out, " {}", graph.tag_label(t));
    }
    out.push('\n');
    if !graph.true_tags().is_empty() {
        out.push_str("TRUE_TAGS");
        for &t in graph.true_tags() {
            let _ = write!(out, " {}", graph.tag_label(t));
        }
        out.push('\n');
    }
    for (item, tag, weight) in graph.edges() {
        let _ = writeln!(out, "{item}\t{tag}\t{weight:.16e}");
    }
    out
}
