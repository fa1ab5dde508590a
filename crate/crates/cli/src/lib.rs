//! File formats, IO and the `autoeda` command line.
//!
//! ```text
//! autoeda synth    --out data
//! autoeda train    --dataset data/datasets/synth_1.csv --expert data/trajectories/synth_1.train.json --out run
//! autoeda generate --checkpoint run/checkpoint.json --dataset data/datasets/synth_6.csv -n 100 --out gen
//! autoeda measure  --session gen/sessions.json --dataset data/datasets/synth_6.csv --out m
//! autoeda eval     --checkpoint run/checkpoint.json --dataset data/datasets/synth_6.csv --gold data/trajectories/synth_6.eval.json --out ev
//! ```

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
