//! The k-sweep experiment runner: selects tag sets with every requested
//! method for budgets `1..=k_max`, evaluates each selection on the folded
//! chain, and emits a schema-stable CSV.
//!
//! Greedy curves come from a single run at the largest budget, so the
//! selection at `k` extends the selection at `k - 1` by construction.
//! Wall times are measured but written as zero unless timings are opted
//! in: the CSV is byte-reproducible for a fixed seed and config.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::baselines::{
    degree_select, one_step_select, pagerank_select, random_select, true_tags_select,
    BaselineConfig,
};
use crate::chain::StateSet;
use crate::greedy::{lazy_greedy, simple_greedy};
use crate::harness::{gen_synthetic, parse_bipartite_file, SynthParams};
use crate::objective::eval_reach;
use crate::tag_graph::{FoldedChain, TagGraph};
use crate::{Error, Result};

/// Selection methods the sweep knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Greedy,
    LazyGreedy,
    PageRank,
    DegreeHigh,
    DegreeLow,
    OneStep,
    Random,
    TrueTags,
}

impl Method {
    pub fn all() -> [Method; 8] {
        [
            Method::Greedy,
            Method::LazyGreedy,
            Method::PageRank,
            Method::DegreeHigh,
            Method::DegreeLow,
            Method::OneStep,
            Method::Random,
            Method::TrueTags,
        ]
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::LazyGreedy => "lazy-greedy",
            Method::PageRank => "pagerank",
            Method::DegreeHigh => "degree-high",
            Method::DegreeLow => "degree-low",
            Method::OneStep => "one-step",
            Method::Random => "random",
            Method::TrueTags => "true-tags",
        }
    }

    pub fn from_label(label: &str) -> Option<Method> {
        Method::all().into_iter().find(|m| m.label() == label)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Where the experiment's graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synth(SynthParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub k_max: usize,
    /// Override the graph's escape probability.
    pub epsilon: Option<f64>,
    /// Override the graph's attachment weight.
    pub sigma_weight: Option<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Report measured wall times in the CSV instead of zeros.
    pub timings: bool,
}

impl ExperimentConfig {
    fn canonical_string(&self) -> String {
        let data = match &self.data {
            DataSource::File(path) => format!("file:{}", path.display()),
            DataSource::Synth(p) => format!(
                "synth:{}:{}:{}:{}:{}",
                p.n_items, p.n_tags, p.edges_per_item, p.weight_exponent, p.seed
            ),
        };
        let methods: Vec<&str> = self.methods.iter().map(|m| m.label()).collect();
        format!(
            "{data}|k_max={}|epsilon={:?}|sigma_weight={:?}|methods={}|seed={}",
            self.k_max,
            self.epsilon,
            self.sigma_weight,
            methods.join(","),
            self.seed
        )
    }

    /// Stable 64-bit hash of the configuration, embedded in the output.
    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical_string().as_bytes())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub k: usize,
    pub f: f64,
    pub wall: Duration,
    pub n_evals: usize,
}

/// Full sweep output plus reproduction metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub seed: u64,
    pub config_hash: u64,
    pub n_items: usize,
    pub n_tags: usize,
    pub k_max: usize,
}

pub const CSV_HEADER: &str = "method,k,f,wall_time_ms,n_evals";

impl SweepResult {
    /// Renders the CSV. Wall times become zeros unless `timings` is set,
    /// keeping the default output byte-reproducible.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::new();
        out.push_str(&format!("# seed: {}\n", self.seed));
        out.push_str(&format!("# config: {:016x}\n", self.config_hash));
        out.push_str(&format!(
            "# graph: {} items, {} tags\n",
            self.n_items, self.n_tags
        ));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let ms = if timings { row.wall.as_millis() } else { 0 };
            out.push_str(&format!(
                "{},{},{:.16e},{},{}\n",
                row.method, row.k, row.f, ms, row.n_evals
            ));
        }
        out
    }
}

/// A parsed CSV row; `f` is absent for FAILED marker rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub method: String,
    pub k: usize,
    pub f: Option<f64>,
    pub wall_ms: u128,
    pub n_evals: usize,
}

/// Reader for the sweep's own CSV output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedSweep {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<ParsedRow>,
}

impl ParsedSweep {
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut parsed = ParsedSweep::default();
        let mut saw_header = false;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let bad = |msg: &str| Error::Parse {
                line: line_no,
                msg: msg.into(),
            };
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once(':') {
                    parsed
                        .metadata
                        .push((key.trim().to_string(), value.trim().to_string()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !saw_header {
                if line != CSV_HEADER {
                    return Err(bad("unexpected CSV header"));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            let f = if fields[2] == "FAILED" {
                None
            } else {
                Some(fields[2].parse::<f64>().map_err(|_| bad("bad f value"))?)
            };
            parsed.rows.push(ParsedRow {
                method: fields[0].to_string(),
                k: fields[1].parse().map_err(|_| bad("bad k"))?,
                f,
                wall_ms: fields[3].parse().map_err(|_| bad("bad wall time"))?,
                n_evals: fields[4].parse().map_err(|_| bad("bad eval count"))?,
            });
        }
        if !saw_header {
            return Err(Error::Parse {
                line: 1,
                msg: "missing CSV header".into(),
            });
        }
        Ok(parsed)
    }
}

fn load_graph(cfg: &ExperimentConfig) -> Result<TagGraph> {
    let mut graph = match &cfg.data {
        DataSource::File(path) => parse_bipartite_file(path)?,
        DataSource::Synth(params) => gen_synthetic(params)?,
    };
    if cfg.epsilon.is_some() || cfg.sigma_weight.is_some() {
        // rebuild through the builder so the overrides are validated
        let mut b = TagGraph::builder();
        for (item, tag, w) in graph.edges() {
            b.add_edge(item, tag, w)?;
        }
        b.epsilon(cfg.epsilon.unwrap_or(graph.epsilon()));
        b.sigma_weight(cfg.sigma_weight.unwrap_or(graph.sigma_weight()));
        let cands: Vec<String> = graph
            .candidates()
            .iter()
            .map(|&t| graph.tag_label(t).to_string())
            .collect();
        b.candidates(&cands);
        let trues: Vec<String> = graph
            .true_tags()
            .iter()
            .map(|&t| graph.tag_label(t).to_string())
            .collect();
        b.true_tags(&trues);
        graph = b.build()?;
    }
    Ok(graph)
}

fn greedy_rows(method: Method, folded: &FoldedChain, k_max: usize) -> Result<Vec<SweepRow>> {
    let k_cap = k_max.min(folded.spec.n_transient());
    let started = Instant::now();
    let (_, trace) = match method {
        Method::Greedy => simple_greedy(&folded.spec, k_cap)?,
        Method::LazyGreedy => lazy_greedy(&folded.spec, k_cap)?,
        _ => unreachable!("greedy_rows only handles greedy methods"),
    };
    let total_time = started.elapsed();

    let mut rows = Vec::with_capacity(k_max);
    let mut cum_evals = 1usize; // the initial solve
    let mut cum_time = Duration::ZERO;
    for k in 1..=k_max {
        let picked = k.min(trace.chosen.len());
        let (f, evals, wall) = if picked == 0 {
            (0.0, trace.n_evals, total_time)
        } else {
            if k <= trace.chosen.len() {
                cum_evals += trace.rounds[picked - 1].evals;
                cum_time += trace.round_times[picked - 1];
            }
            if k >= trace.chosen.len() {
                // include any evaluations spent proving saturation
                (trace.f_values[picked - 1], trace.n_evals, total_time)
            } else {
                (trace.f_values[picked - 1], cum_evals, cum_time)
            }
        };
        rows.push(SweepRow {
            method,
            k,
            f,
            wall,
            n_evals: evals,
        });
    }
    Ok(rows)
}

fn baseline_row(
    method: Method,
    graph: &TagGraph,
    folded: &FoldedChain,
    k: usize,
    cfg: &ExperimentConfig,
    baseline_cfg: &BaselineConfig,
) -> Result<SweepRow> {
    let started = Instant::now();
    let selection: StateSet = match method {
        Method::PageRank => pagerank_select(graph, k, baseline_cfg)?,
        Method::DegreeHigh => degree_select(graph, k, true),
        Method::DegreeLow => degree_select(graph, k, false),
        Method::OneStep => one_step_select(graph, k),
        Method::Random => random_select(graph, k, cfg.seed.wrapping_add(k as u64)),
        Method::TrueTags => true_tags_select(graph, k),
        _ => unreachable!("baseline_row only handles baselines"),
    };
    let f = eval_reach(&folded.spec, &selection)?.f;
    Ok(SweepRow {
        method,
        k,
        f,
        wall: started.elapsed(),
        n_evals: 1,
    })
}

/// Runs the sweep. When `out` is given the CSV is written there; if a
/// method fails mid-run, the rows produced so far are flushed with a
/// `FAILED` marker row appended before the error propagates.
pub fn run_sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<SweepResult> {
    if cfg.k_max == 0 {
        return Err(Error::InvalidBudget { k: 0, n: 0 });
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidGraph("no methods requested".into()));
    }
    let graph = load_graph(cfg)?;
    let folded = graph.fold()?;
    let baseline_cfg = BaselineConfig {
        seed: cfg.seed,
        ..BaselineConfig::default()
    };

    let mut result = SweepResult {
        rows: Vec::new(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        n_items: graph.n_items(),
        n_tags: graph.n_tags(),
        k_max: cfg.k_max,
    };

    let flush_failure = |result: &SweepResult, method: Method, k: usize| {
        if let Some(path) = out {
            let mut csv = result.to_csv(cfg.timings);
            csv.push_str(&format!("{method},{k},FAILED,0,0\n"));
            let _ = std::fs::write(path, csv);
        }
    };

    for &method in &cfg.methods {
        match method {
            Method::Greedy | Method::LazyGreedy => match greedy_rows(method, &folded, cfg.k_max) {
                Ok(rows) => result.rows.extend(rows),
                Err(e) => {
                    flush_failure(&result, method, 1);
                    return Err(e);
                }
            },
            _ => {
                for k in 1..=cfg.k_max {
                    match baseline_row(method, &graph, &folded, k, cfg, &baseline_cfg) {
                        Ok(row) => result.rows.push(row),
                        Err(e) => {
                            flush_failure(&result, method, k);
                            return Err(e);
                        }
                    }
                }
            }
        }
    }

    if let Some(path) = out {
        std::fs::write(path, result.to_csv(cfg.timings))?;
    }
    Ok(result)
}
