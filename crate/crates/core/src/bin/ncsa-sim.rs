use std::process::ExitCode;

use clap::Parser;
use ncsa::cli::{self, Cli, Command, RunManifest};
use ncsa::harness;

fn run(command: Command) -> ncsa::Result<()> {
    match command {
        Command::Run(args) => {
            let plan = cli::resolve(&args)?;
            let config = &plan.config;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(plan.workers.unwrap_or(0))
                .build()
                .map_err(|e| ncsa::Error::InvalidConfig(format!("thread pool: {e}")))?;
            let mut records = Vec::with_capacity(config.ebn0_grid.len());
            for (i, &db) in config.ebn0_grid.iter().enumerate() {
                let record = pool.install(|| harness::run_point::<f64>(config, i, db))?;
                if !plan.quiet {
                    eprintln!(
                        "Eb/N0 {:>6} dB  BER {:.3e}  ({} errors / {} bits, {} frames, {} retries)",
                        record.ebn0_db, record.ber, record.bit_errors, record.bits_total, record.frames, record.lsd_retries
                    );
                }
                records.push(record);
            }
            match &plan.out {
                Some(path) => {
                    let manifest = RunManifest::new(config.clone(), records.clone());
                    cli::write_csv(&records, &manifest, path)?;
                }
                None => print!("{}", cli::format_csv(&records)?),
            }
            Ok(())
        }
        Command::Gap(args) => {
            let gap = cli::gap_report(&args.lower, &args.upper, args.target)?;
            println!("{gap:.2}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ncsa-sim: {e}");
            ExitCode::FAILURE
        }
    }
}
