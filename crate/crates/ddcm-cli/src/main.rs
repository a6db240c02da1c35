use clap::Parser;

fn main() {
    let cli = ddcm_cli::Cli::parse();
    std::process::exit(ddcm_cli::run(cli));
}
