//! Command-line surface: validate and evaluate chain files, optimize
//! selections, check fold equivalence, generate instances, and run the
//! k-sweep experiment.
//!
//! Exit codes: 0 on success, 1 for validation/input problems, 2 for
//! runtime failures. `REACHMAX_THREADS` caps the worker pool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use reachmax::chain::StateSet;
use reachmax::greedy::{lazy_greedy, simple_greedy, GreedyTrace};
use reachmax::harness::{
    gen_synthetic, parse_bipartite_file, parse_chain_file, parse_edge_list, run_sweep,
    write_bipartite, write_chain, DataSource, ExperimentConfig, Method, SynthParams,
};
use reachmax::objective::{eval_reach, one_step_value, CLAMP_WARN};
use reachmax::oracle::gen_vertex_cover_instance;
use reachmax::tag_graph::fold_equivalence_check;
use reachmax::{Error, Result};

#[derive(Parser)]
#[command(
    name = "reachmax",
    version,
    about = "Pick the states to re-link so random walks reach a target"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for commands that draw randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the command's output to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a CHAIN file against every structural invariant.
    Validate { file: PathBuf },
    /// Evaluate the reach objective for a selection on a CHAIN file.
    Evaluate {
        file: PathBuf,
        /// Comma-separated transient states, e.g. 1,4,7.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        set: Vec<usize>,
    },
    /// Select k states on a CHAIN or BIPARTITE file (detected by header).
    Optimize {
        file: PathBuf,
        #[arg(short, long)]
        k: usize,
        /// greedy or lazy-greedy.
        #[arg(long, default_value = "lazy-greedy")]
        method: String,
    },
    /// Compare folded and full objectives on a BIPARTITE file.
    FoldCheck {
        file: PathBuf,
        /// Comma-separated tag labels or 1-based tag states.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        set: Vec<String>,
    },
    /// Turn an undirected edge list into a CHAIN instance.
    GenVc {
        file: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Emit the tag/edge-item variant instead of the node chain.
        #[arg(long)]
        bipartite: bool,
    },
    /// Generate a synthetic BIPARTITE dataset.
    GenSynth {
        #[arg(long)]
        items: usize,
        #[arg(long)]
        tags: usize,
        #[arg(long, default_value_t = 3)]
        edges_per_item: usize,
        #[arg(long, default_value_t = 1.5)]
        weight_exponent: f64,
    },
    /// Run every requested method for budgets 1..=k_max and emit CSV.
    Sweep {
        /// BIPARTITE dataset; omit to use synthetic data.
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        k_max: usize,
        /// Comma-separated method labels; defaults to all of them.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        methods: Vec<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        sigma_weight: Option<f64>,
        #[arg(long, default_value_t = 300)]
        synth_items: usize,
        #[arg(long, default_value_t = 100)]
        synth_tags: usize,
        #[arg(long, default_value_t = 3)]
        synth_edges_per_item: usize,
        #[arg(long, default_value_t = 1.5)]
        synth_weight_exponent: f64,
        /// Include measured wall times (makes the CSV non-reproducible).
        #[arg(long)]
        timings: bool,
    },
}

fn main() {
    if let Ok(threads) = std::env::var("REACHMAX_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(if err.is_validation() { 1 } else { 2 });
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn is_chain_file(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path)?;
    for raw in text.lines() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if !line.is_empty() {
            return Ok(line == "CHAIN v1");
        }
    }
    Ok(false)
}

fn trace_csv(trace: &GreedyTrace, label: impl Fn(usize) -> String) -> String {
    let mut out = String::from("round,state,label,gain,f\n");
    for (i, &state) in trace.chosen.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{:.16e},{:.16e}",
            i + 1,
            state,
            label(state),
            trace.gains[i],
            trace.f_values[i]
        );
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { file } => match parse_chain_file(&file) {
            Ok((spec, report)) => {
                let mut text = format!("{report}");
                let _ = writeln!(
                    text,
                    "chain: {} transient states, absorbers {:?}, target {}",
                    spec.n_transient(),
                    spec.absorbing_labels(),
                    spec.target_label()
                );
                emit(&cli.out, &text)
            }
            Err(Error::Validation(report)) => {
                emit(&cli.out, &format!("{report}"))?;
                Err(Error::Validation(report))
            }
            Err(err) => Err(err),
        },

        Command::Evaluate { file, set } => {
            let (spec, _) = parse_chain_file(&file)?;
            let selection = StateSet::from_slice(&set);
            let result = eval_reach(&spec, &selection)?;
            let one_step = one_step_value(&spec, &selection);
            let mut text = format!("selection: {selection}\n");
            let _ = writeln!(text, "f = {:.16e}", result.f);
            let _ = writeln!(text, "one_step = {:.16e}", one_step);
            let _ = writeln!(text, "residual = {:.3e}", result.residual);
            if result.max_clamp > CLAMP_WARN {
                let _ = writeln!(
                    text,
                    "warning: clamped reach values by {:.3e}",
                    result.max_clamp
                );
            }
            emit(&cli.out, &text)
        }

        Command::Optimize { file, k, method } => {
            let lazy = match method.as_str() {
                "greedy" => false,
                "lazy-greedy" => true,
                other => {
                    return Err(Error::InvalidGraph(format!(
                        "unknown method `{other}` (optimize takes greedy or lazy-greedy)"
                    )))
                }
            };
            if is_chain_file(&file)? {
                let (spec, _) = parse_chain_file(&file)?;
                let (selection, trace) = if lazy {
                    lazy_greedy(&spec, k)?
                } else {
                    simple_greedy(&spec, k)?
                };
                println!("selected: {selection}");
                println!(
                    "f = {:.16e} after {} picks ({} evaluations, {} updates)",
                    trace.f_values.last().copied().unwrap_or(0.0),
                    trace.chosen.len(),
                    trace.n_evals,
                    trace.n_updates
                );
                emit(&cli.out, &trace_csv(&trace, |s| s.to_string()))
            } else {
                let graph = parse_bipartite_file(&file)?;
                let folded = graph.fold()?;
                let (selection, trace) = if lazy {
                    lazy_greedy(&folded.spec, k)?
                } else {
                    simple_greedy(&folded.spec, k)?
                };
                let labels: Vec<&str> = selection.iter().map(|s| folded.state_label(s)).collect();
                println!("selected tags: {}", labels.join(", "));
                println!(
                    "f = {:.16e} after {} picks ({} evaluations, {} updates)",
                    trace.f_values.last().copied().unwrap_or(0.0),
                    trace.chosen.len(),
                    trace.n_evals,
                    trace.n_updates
                );
                emit(
                    &cli.out,
                    &trace_csv(&trace, |s| folded.state_label(s).to_string()),
                )
            }
        }

        Command::FoldCheck { file, set } => {
            let graph = parse_bipartite_file(&file)?;
            let folded = graph.fold()?;
            let mut states = Vec::with_capacity(set.len());
            for token in &set {
                let state = folded
                    .tag_state(token)
                    .or_else(|| token.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidGraph(format!("unknown tag `{token}`")))?;
                states.push(state);
            }
            let selection = StateSet::from_slice(&states);
            let check = fold_equivalence_check(&graph, &selection)?;
            let text = format!(
                "selection: {selection}\nf_folded = {:.16e}\nf_full   = {:.16e}\ndiff = {:.3e}\n",
                check.f_folded, check.f_full, check.diff
            );
            emit(&cli.out, &text)
        }

        Command::GenVc {
            file,
            epsilon,
            bipartite,
        } => {
            let edges = parse_edge_list(&std::fs::read_to_string(&file)?)?;
            let instance = gen_vertex_cover_instance(&edges, epsilon)?;
            let chain = if bipartite {
                &instance.bipartite
            } else {
                &instance.chain
            };
            emit(&cli.out, &write_chain(chain))
        }

        Command::GenSynth {
            items,
            tags,
            edges_per_item,
            weight_exponent,
        } => {
            let graph = gen_synthetic(&SynthParams {
                n_items: items,
                n_tags: tags,
                edges_per_item,
                weight_exponent,
                seed: cli.seed,
            })?;
            emit(&cli.out, &write_bipartite(&graph))
        }

        Command::Sweep {
            file,
            k_max,
            methods,
            epsilon,
            sigma_weight,
            synth_items,
            synth_tags,
            synth_edges_per_item,
            synth_weight_exponent,
            timings,
        } => {
            let parsed_methods =
                if methods.is_empty() {
                    Method::all().to_vec()
                } else {
                    let mut out = Vec::with_capacity(methods.len());
                    for label in &methods {
                        out.push(Method::from_label(label).ok_or_else(|| {
                            Error::InvalidGraph(format!("unknown method `{label}`"))
                        })?);
                    }
                    out
                };
            let data = match file {
                Some(path) => DataSource::File(path),
                None => DataSource::Synth(SynthParams {
                    n_items: synth_items,
                    n_tags: synth_tags,
                    edges_per_item: synth_edges_per_item,
                    weight_exponent: synth_weight_exponent,
                    seed: cli.seed,
                }),
            };
            let cfg = ExperimentConfig {
                data,
                k_max,
                epsilon,
                sigma_weight,
                methods: parsed_methods,
                seed: cli.seed,
                timings,
            };
            let result = run_sweep(&cfg, cli.out.as_deref())?;
            if cli.out.is_none() {
                print!("{}", result.to_csv(timings));
            } else {
                eprintln!(
                    "wrote {} rows ({} methods, k up to {})",
                    result.rows.len(),
                    cfg.methods.len(),
                    k_max
                );
            }
            Ok(())
        }
    }
}
