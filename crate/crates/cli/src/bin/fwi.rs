//! `fwi <config>`: full-waveform inversion from `dobs_<i>.bin`, writing
//! `v-iter-<k>.bin` per model update and `v-final.bin`.

use std::process::ExitCode;

use seiswave::inversion::{fwi_run, FwiOptions};
use seiswave_cli::{fail, init_logging, load, Args, EXIT_RUNTIME};

fn main() -> ExitCode {
    let args = Args::parse_or_exit();
    init_logging();
    let opts = FwiOptions {
        run: args.run_options(),
        ..FwiOptions::default()
    };
    log::info!("inversion with {} workers, {} store", opts.run.workers, opts.run.store);
    match load(&args.config).and_then(|cfg| fwi_run(&cfg, &opts)) {
        Ok(out) if out.status.is_failure() => {
            eprintln!("error: optimizer stopped with {:?}", out.status);
            ExitCode::from(EXIT_RUNTIME)
        }
        Ok(out) => {
            log::info!("finished: {:?}, {} model updates", out.status, out.updates);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
