use clap::Parser;
use shiftlab::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
