use clap::Parser;

fn main() {
    let cli = opladder::cli::Cli::parse();
    std::process::exit(opladder::cli::main_with(cli));
}
