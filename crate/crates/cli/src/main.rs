use clap::Parser;
use gyrocanon_cli::{execute, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors, not numerical ones
            std::process::exit(if e.use_stderr() { gyrocanon_cli::EXIT_CONFIG } else { 0 });
        }
    };
    let level = if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let status = execute(cli.command, &cli.config, &cli.out_dir, jobs);
    if !cli.quiet && status == 0 {
        println!("{}: wrote {}", cli.command.name(), cli.out_dir.display());
    }
    std::process::exit(status);
}
