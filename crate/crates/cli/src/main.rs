//! `blockdna`: encode files into simulated oligo pools, run the wet-lab
//! steps on pool files and decode blocks back from reads.
//!
//! File formats:
//! - manifest: TOML written by `encode`, updated in place by `patch`.
//! - pool: one strand per line, `ABUNDANCE<TAB>SEQUENCE[<TAB>PROVENANCE]`,
//!   provenance being `original`, `amplified` or `misprimed`.
//! - reads: one sequence per line; `#` comments and blank lines are skipped.
//!   Files ending in `.fastq` are written as FASTQ.
//! - patches: TOML array `[[patch]]` with `block`, `del_start`, `del_len`,
//!   `ins_pos`, `ins_text`.
//!
//! Relative output paths are placed under `$BLOCKDNA_OUT` when it is set.

mod commands;
mod experiment;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = commands::Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
