use std::io;

use clap::Parser;
use sphere_uncertainty::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = run(cli, &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
