use clap::Parser;
use sstgcn_cli::{configure_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = configure_threads().and_then(|()| run(cli)) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
