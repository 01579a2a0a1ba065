//! Experiment plumbing behind the CLI: text formats for chains and
//! bipartite graphs, the synthetic corpus generator, and the k-sweep
//! runner that produces the per-method CSV curves.

mod bipartite_format;
mod chain_format;
mod sweep;
mod synth;

pub use bipartite_format::{parse_bipartite_file, parse_bipartite_str, write_bipartite};
pub use chain_format::{parse_chain_file, parse_chain_str, parse_edge_list, write_chain};
pub use sweep::{
    run_sweep, DataSource, ExperimentConfig, Method, ParsedSweep, SweepResult, SweepRow,
};
pub use synth::{gen_synthetic, SynthParams};
