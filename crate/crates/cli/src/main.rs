// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! `latebind` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use latebind_core::experiment::{self, ExperimentError};
use latebind_core::LayoutKind;

#[derive(Parser)]
#[command(
    name = "latebind",
    version,
    about = "Replay storage scenarios through a late-binding control plane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario and write events.jsonl, timeseries.csv and summary.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a scenario late-bound and over a cluster pre-carved into one layout.
    CompareStatic {
        #[arg(long)]
        scenario: PathBuf,
        /// jbod | raid:<width>:<parity> | rep:<r> | ec:<k>:<m>
        #[arg(long)]
        layout: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario file and list every problem found.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn fail(err: &ExperimentError) -> ExitCode {
    match err {
        ExperimentError::Scenario(e) => {
            for d in &e.diagnostics {
                eprintln!("error: {d}");
            }
            ExitCode::from(EXIT_INPUT)
        }
        other => {
            eprintln!("error: {other}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
        } => match experiment::run(&scenario, seed, &out) {
            Ok(output) => {
                let s = &output.summary;
                println!(
                    "{} events, {} accepted, {} rejected, {} provisioned, {} reclaimed",
                    output.events.len(),
                    s.accepted,
                    s.rejected,
                    s.provisioned,
                    s.reclaimed.len()
                );
                println!("wrote {}", out.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::CompareStatic {
            scenario,
            layout,
            seed,
            out,
        } => {
            let layout: LayoutKind = match layout.parse() {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("error: --layout {layout}: {e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            match experiment::compare_static_to_dir(&scenario, layout, seed, &out) {
                Ok(run) => {
                    let c = &run.comparison;
                    for m in [&c.dynamic, &c.static_] {
                        println!(
                            "{:<16} accepted {:>3}  overhead {}",
                            m.mode,
                            m.accepted,
                            m.total_storage_overhead
                                .map(|o| format!("{o:.2}x"))
                                .unwrap_or_else(|| "-".into())
                        );
                    }
                    println!("wrote {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { scenario } => {
            let problems = experiment::validate(&scenario);
            if problems.is_empty() {
                println!("{}: valid", scenario.display());
                ExitCode::SUCCESS
            } else {
                for p in &problems {
                    eprintln!("error: {p}");
                }
                ExitCode::from(EXIT_INPUT)
            }
        }
    }
}
