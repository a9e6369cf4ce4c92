use clap::Parser;

fn main() {
    let cli = radgas_cli::Cli::parse();
    std::process::exit(radgas_cli::execute(&cli));
}
