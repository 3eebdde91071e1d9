//! `modeling <config>`: forward-models every shot and writes `dobs_<i>.bin`.

use std::process::ExitCode;

use seiswave::workflow::run_modeling;
use seiswave_cli::{fail, init_logging, load, Args};

fn main() -> ExitCode {
    let args = Args::parse_or_exit();
    init_logging();
    let opts = args.run_options();
    log::info!("modeling with {} workers", opts.workers);
    match load(&args.config).and_then(|cfg| run_modeling(&cfg, &opts)) {
        Ok(report) => {
            log::info!("wrote {} seismograms in {:.2} s", report.outputs.len(), report.seconds);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
