//! Instance generators, file formats, configuration, traces and the CLI.

pub mod cli;
pub mod config;
pub mod generators;
pub mod io;
pub mod trace;

pub use cli::{cli_run, run_solve, SolveSummary};
pub use config::{Family, InstanceConfig, Mode, RhoPolicy};
pub use generators::{
    build_image_problem, gen_image_synthetic, gen_l1_planted, gen_matrix_completion, gen_mc_known_opt, ImageInstance, L1Instance,
    McInstance, McParams, TvOperator,
};
pub use io::{dump_instance, load_instance, read_pgm, write_pgm, Instance, ProtocolDump};
pub use trace::{read_trace, write_trace, TraceRow, TRACE_HEADER};
