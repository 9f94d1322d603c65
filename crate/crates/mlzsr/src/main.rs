use clap::Parser;

use mlzsr::cli::Cli;

fn main() {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) = mlzsr::cmd::run(&cli, args) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
