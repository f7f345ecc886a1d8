use clap::Parser;
use confound_bounds_cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
