use clap::Parser;
use rangetap_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = rangetap_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
