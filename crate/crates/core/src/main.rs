use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use seglab::barriers::{BarrierKind, BarrierReport};
use seglab::cli::{self, VerifyOptions, EXIT_CONFIG, EXIT_DIAGNOSTIC, EXIT_OK};
use seglab::config::load_config;

/// Segregation system solver, barrier checker and diagnostics.
#[derive(Parser)]
#[command(name = "seglab", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve along the configured epsilon schedule and write artifacts.
    Run {
        config: PathBuf,
    },
    /// Run the Pucci algebra and barrier property suites.
    Verify {
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = VerifyOptions::default().samples)]
        samples: usize,
        /// Fix lambda for every suite.
        #[arg(long)]
        lambda: Option<f64>,
        /// Fix Lambda for every suite.
        #[arg(long = "Lambda")]
        upper_lambda: Option<f64>,
        /// Multiply the preset barrier exponents.
        #[arg(long, default_value_t = 1.0)]
        alpha_scale: f64,
        #[arg(long, default_value_t = 1.0 / 128.0)]
        h: f64,
    },
    /// Check one barrier and print its report record.
    DumpBarrier {
        kind: String,
        a: f64,
        b: f64,
        alpha: f64,
        lambda: f64,
        #[arg(value_name = "LAMBDA_UPPER")]
        upper_lambda: f64,
        n: usize,
        #[arg(long, default_value_t = 1.0 / 128.0)]
        h: f64,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::Run { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return code(EXIT_CONFIG);
                }
            };
            let out = cli::resolve_output_dir(&cfg);
            match cli::run(&cfg, &out) {
                Ok(outcome) => {
                    for r in &outcome.summary {
                        println!("{:<10} {:<28} {} = {} [{}]", r.kind, r.file, r.key, r.value, r.status);
                    }
                    println!("artifacts in {}", outcome.out_dir.display());
                    code(outcome.exit_code)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(cli::exit_code_for(&e))
                }
            }
        }
        Command::Verify { seed, samples, lambda, upper_lambda, alpha_scale, h } => {
            let opts = VerifyOptions { seed, samples, lambda, upper_lambda, alpha_scale, h };
            match cli::verify(&opts) {
                Ok(report) => {
                    print!("{}", report.table());
                    code(if report.all_pass() { EXIT_OK } else { EXIT_DIAGNOSTIC })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(cli::exit_code_for(&e))
                }
            }
        }
        Command::DumpBarrier { kind, a, b, alpha, lambda, upper_lambda, n, h } => {
            let Some(kind) = BarrierKind::parse(&kind) else {
                eprintln!("error: kind must be `sub` or `super`, got {kind:?}");
                return code(EXIT_CONFIG);
            };
            match cli::dump_barrier(kind, a, b, alpha, lambda, upper_lambda, n, h) {
                Ok(rep) => {
                    println!("{}", BarrierReport::CSV_HEADER);
                    println!("{}", rep.csv_row());
                    code(if rep.pass { EXIT_OK } else { EXIT_DIAGNOSTIC })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(EXIT_CONFIG)
                }
            }
        }
    }
}
