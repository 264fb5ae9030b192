use clap::Parser;
use dobby_cli::config::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(dobby_cli::run(Cli::parse()));
}
