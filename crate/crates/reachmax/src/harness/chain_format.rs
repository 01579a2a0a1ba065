//! The CHAIN v1 text format.
//!
//! ```text
//! # comments run to end of line
//! CHAIN v1
//! n_transient 2
//! absorbing null *sigma          # the target absorber is starred
//! PI
//! 1 1.0000000000000000e0
//! QBAR
//! 1 2 1.0000000000000000e0      # <state> <state-or-label> <prob>
//! 2 null 1.0000000000000000e0
//! Q
//! 1 sigma 1.0000000000000000e0
//! ```
//!
//! Probabilities are printed with 17 significant digits so values
//! round-trip bit-exactly. Absorbing labels must not parse as integers
//! (they share the target column with transient indices). A state with no
//! lines in the `Q` section reuses its `QBAR` row when selected. Rows
//! whose sums drift from 1 by at most 1e-9 are renormalized on load and
//! recorded in the returned report; larger drifts are parse errors.

use std::fmt::Write as _;
use std::path::Path;

use crate::chain::{ChainSpec, Row, ValidationReport, ROW_SUM_TOL};
use crate::{Error, Result};

fn fmt_prob(p: f64) -> String {
    format!("{p:.16e}")
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Serializes a chain in canonical form: sections in PI/QBAR/Q order,
/// rows by ascending state, transient targets before absorbing ones,
/// exact zeros omitted.
pub fn write_chain(spec: &ChainSpec) -> String {
    let mut out = String::new();
    out.push_str("CHAIN v1\n");
    let _ = writeln!(out, "n_transient {}", spec.n_transient());
    out.push_str("absorbing");
    for (a, label) in spec.absorbing_labels().iter().enumerate() {
        if a == spec.target_index() {
            let _ = write!(out, " *{label}");
        } else {
            let _ = write!(out, " {label}");
        }
    }
    out.push('\n');

    out.push_str("PI\n");
    for (i, &p) in spec.pi().iter().enumerate() {
        if p != 0.0 {
            let _ = writeln!(out, "{} {}", i + 1, fmt_prob(p));
        }
    }

    let write_row = |out: &mut String, state: usize, row: &Row, spec: &ChainSpec| {
        for &(j, v) in &row.transient {
            if v != 0.0 {
                let _ = writeln!(out, "{state} {j} {}", fmt_prob(v));
            }
        }
        for &(a, v) in &row.absorbing {
            if v != 0.0 {
                let _ = writeln!(
                    out,
                    "{state} {} {}",
                    spec.absorbing_labels()[a],
                    fmt_prob(v)
                );
            }
        }
    };

    out.push_str("QBAR\n");
    for i in 1..=spec.n_transient() {
        write_row(&mut out, i, spec.unlinked_row(i), spec);
    }
    out.push_str("Q\n");
    for i in 1..=spec.n_transient() {
        if spec.has_linked_row(i) {
            write_row(&mut out, i, spec.linked_row(i), spec);
        }
    }
    out
}

pub fn parse_chain_file(path: &Path) -> Result<(ChainSpec, ValidationReport)> {
    parse_chain_str(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Pi,
    QBar,
    Q,
}

/// Parses the CHAIN format, renormalizes rows within tolerance, and
/// validates. Invariant violations come back as [`Error::Validation`];
/// syntactic problems and out-of-tolerance rows as [`Error::Parse`] with
/// the line number.
pub fn parse_chain_str(text: &str) -> Result<(ChainSpec, ValidationReport)> {
    let mut n_transient: Option<usize> = None;
    let mut labels: Vec<String> = Vec::new();
    let mut target: Option<usize> = None;
    let mut absorbing_line = 1;
    let mut section = Section::Header;
    let mut saw_magic = false;

    // collected entries: (line, state, target token, prob)
    let mut pi_entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut unlinked: Vec<(usize, usize, String, f64)> = Vec::new();
    let mut linked: Vec<(usize, usize, String, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        if !saw_magic {
            if line != "CHAIN v1" {
                return Err(parse_err(line_no, "expected header `CHAIN v1`"));
            }
            saw_magic = true;
            continue;
        }

        match section {
            Section::Header => {
                let mut tokens = line.split_whitespace();
                match tokens.next() {
                    Some("n_transient") => {
                        let n: usize = tokens
                            .next()
                            .ok_or_else(|| parse_err(line_no, "missing state count"))?
                            .parse()
                            .map_err(|_| parse_err(line_no, "state count is not an integer"))?;
                        if n == 0 {
                            return Err(parse_err(line_no, "need at least one transient state"));
                        }
                        if tokens.next().is_some() {
                            return Err(parse_err(line_no, "trailing tokens after state count"));
                        }
                        n_transient = Some(n);
                    }
                    Some("absorbing") => {
                        absorbing_line = line_no;
                        for token in tokens {
                            let (is_target, label) = match token.strip_prefix('*') {
                                Some(rest) => (true, rest),
                                None => (false, token),
                            };
                            if label.is_empty() {
                                return Err(parse_err(line_no, "empty absorber label"));
                            }
                            if label.parse::<usize>().is_ok() {
                                return Err(parse_err(
                                    line_no,
                                    format!("absorber label `{label}` would shadow a state index"),
                                ));
                            }
                            if labels.iter().any(|l| l == label) {
                                return Err(parse_err(
                                    line_no,
                                    format!("duplicate absorber label `{label}`"),
                                ));
                            }
                            if is_target {
                                if target.is_some() {
                                    return Err(parse_err(line_no, "two starred absorbers"));
                                }
                                target = Some(labels.len());
                            }
                            labels.push(label.to_string());
                        }
                    }
                    Some("PI") => {
                        if n_transient.is_none() || labels.is_empty() {
                            return Err(parse_err(
                                line_no,
                                "PI section before n_transient/absorbing declarations",
                            ));
                        }
                        section = Section::Pi;
                    }
                    Some(other) => {
                        return Err(parse_err(line_no, format!("unexpected token `{other}`")))
                    }
                    None => unreachable!("line is nonempty"),
                }
            }
            Section::Pi => {
                if line == "QBAR" {
                    section = Section::QBar;
                    continue;
                }
                let mut tokens = line.split_whitespace();
                let state: usize = tokens.next().unwrap().parse().map_err(|_| {
                    parse_err(
                        line_no,
                        "initial-distribution state must be a transient index",
                    )
                })?;
                let prob: f64 = tokens
                    .next()
                    .ok_or_else(|| parse_err(line_no, "missing probability"))?
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad probability"))?;
                if tokens.next().is_some() {
                    return Err(parse_err(line_no, "trailing tokens"));
                }
                pi_entries.push((line_no, state, prob));
            }
            Section::QBar | Section::Q => {
                if line == "Q" && section == Section::QBar {
                    section = Section::Q;
                    continue;
                }
                let mut tokens = line.split_whitespace();
                let state: usize = tokens.next().unwrap().parse().map_err(|_| {
                    parse_err(line_no, "row must start with a transient state index")
                })?;
                let tgt = tokens
                    .next()
                    .ok_or_else(|| parse_err(line_no, "missing target column"))?
                    .to_string();
                let prob: f64 = tokens
                    .next()
                    .ok_or_else(|| parse_err(line_no, "missing probability"))?
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad probability"))?;
                if tokens.next().is_some() {
                    return Err(parse_err(line_no, "trailing tokens"));
                }
                if section == Section::QBar {
                    unlinked.push((line_no, state, tgt, prob));
                } else {
                    linked.push((line_no, state, tgt, prob));
                }
            }
        }
    }

    if !saw_magic {
        return Err(parse_err(1, "empty file"));
    }
    let n = n_transient.ok_or_else(|| parse_err(1, "missing n_transient"))?;
    let target =
        target.ok_or_else(|| parse_err(absorbing_line, "no absorber is starred as the target"))?;
    if section == Section::Header || section == Section::Pi {
        return Err(parse_err(1, "missing QBAR section"));
    }

    // assemble rows
    let mut pi = vec![0.0; n];
    for (line_no, state, prob) in pi_entries {
        if state == 0 || state > n {
            return Err(parse_err(line_no, format!("state {state} outside 1..={n}")));
        }
        if pi[state - 1] != 0.0 {
            return Err(parse_err(
                line_no,
                format!("duplicate PI entry for state {state}"),
            ));
        }
        pi[state - 1] = prob;
    }

    let resolve = |line_no: usize, token: &str| -> Result<(Option<usize>, Option<usize>)> {
        if let Ok(j) = token.parse::<usize>() {
            if j == 0 || j > n {
                return Err(parse_err(
                    line_no,
                    format!("target state {j} outside 1..={n}"),
                ));
            }
            return Ok((Some(j), None));
        }
        match labels.iter().position(|l| l == token) {
            Some(a) => Ok((None, Some(a))),
            None => Err(parse_err(line_no, format!("unknown target `{token}`"))),
        }
    };

    let build_rows = |entries: Vec<(usize, usize, String, f64)>| -> Result<Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>, Option<usize>)>> {
        // per state: transient entries, absorbing entries, first line seen
        let mut rows: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>, Option<usize>)> =
            vec![(Vec::new(), Vec::new(), None); n];
        for (line_no, state, token, prob) in entries {
            if state == 0 || state > n {
                return Err(parse_err(line_no, format!("state {state} outside 1..={n}")));
            }
            let row = &mut rows[state - 1];
            row.2.get_or_insert(line_no);
            let (t, a) = resolve(line_no, &token)?;
            if let Some(j) = t {
                if row.0.iter().any(|&(j2, _)| j2 == j) {
                    return Err(parse_err(line_no, format!("duplicate entry ({state}, {j})")));
                }
                row.0.push((j, prob));
            }
            if let Some(a) = a {
                if row.1.iter().any(|&(a2, _)| a2 == a) {
                    return Err(parse_err(
                        line_no,
                        format!("duplicate entry ({state}, {})", labels[a]),
                    ));
                }
                row.1.push((a, prob));
            }
        }
        Ok(rows)
    };

    let unlinked_rows = build_rows(unlinked)?;
    let linked_rows = build_rows(linked)?;

    // row sums must be within tolerance before the chain is even built
    for (state, (t, a, first_line)) in unlinked_rows.iter().enumerate() {
        let sum: f64 = t.iter().chain(a.iter()).map(|&(_, v)| v).sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(parse_err(
                first_line.unwrap_or(1),
                format!("unlinked row {} sums to {sum} instead of 1", state + 1),
            ));
        }
    }
    for (state, (t, a, first_line)) in linked_rows.iter().enumerate() {
        if first_line.is_none() {
            continue;
        }
        let sum: f64 = t.iter().chain(a.iter()).map(|&(_, v)| v).sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(parse_err(
                first_line.unwrap(),
                format!("linked row {} sums to {sum} instead of 1", state + 1),
            ));
        }
    }

    let mut builder = ChainSpec::builder(n);
    for (a, label) in labels.iter().enumerate() {
        if a == target {
            builder = builder.target_absorber(label);
        } else {
            builder = builder.absorber(label);
        }
    }
    builder = builder.pi(pi);
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    for (idx, (t, a, _)) in unlinked_rows.iter().enumerate() {
        let abs: Vec<(&str, f64)> = a.iter().map(|&(ai, v)| (label_refs[ai], v)).collect();
        builder = builder.unlinked_row(idx + 1, t, &abs);
    }
    for (idx, (t, a, first_line)) in linked_rows.iter().enumerate() {
        if first_line.is_some() {
            let abs: Vec<(&str, f64)> = a.iter().map(|&(ai, v)| (label_refs[ai], v)).collect();
            builder = builder.linked_row(idx + 1, t, &abs);
        }
    }
    let mut spec = builder.build()?;

    let renormalized = spec.renormalize();
    let mut report = spec.validate();
    report.renormalized = renormalized;
    if !report.is_clean() {
        return Err(Error::Validation(report));
    }
    Ok((spec, report))
}

/// Parses plain edge-list text: one `u v` pair per line, `#` comments.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let u: usize = tokens
            .next()
            .unwrap()
            .parse()
            .map_err(|_| parse_err(line_no, "bad node id"))?;
        let v: usize = tokens
            .next()
            .ok_or_else(|| parse_err(line_no, "missing second node"))?
            .parse()
            .map_err(|_| parse_err(line_no, "bad node id"))?;
        if tokens.next().is_some() {
            return Err(parse_err(line_no, "trailing tokens"));
        }
        edges.push((u, v));
    }
    Ok(edges)
}
