use clap::Parser;
use mgcpp_cli::args::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MGCPP_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = cli
        .flags
        .load()
        .and_then(|(config, source)| mgcpp_cli::run(cli.command.into(), &config, source.as_ref()));
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
