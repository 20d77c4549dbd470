//! Data ingestion, rank transformation, serialization, and the command-line
//! front end.

mod cli;
mod data;
mod output;

pub use cli::{
    exit_code, run, AwArgs, Cli, Command, DiagnoseArgs, FitArgs, PrecisionArgs, ReferenceCopula,
    SimulateArgs,
};
pub use data::{load_csv, rank_transform, Dataset};
pub use output::{
    read_curve_csv, write_aw_csv, write_comparison_csv, write_curve_csv, write_precision_csv,
    write_sample_csv, AwRow, FitRecord, FIT_SCHEMA_VERSION,
};
