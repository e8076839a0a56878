use clap::Parser;

fn main() {
    let args = monokinetic_cli::cli::Cli::parse();
    std::process::exit(monokinetic_cli::cli::execute(args));
}
