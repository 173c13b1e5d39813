use clap::Parser;

use swiftmem::cli::{self, Cli, EXIT_USAGE};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints help/version through the error path with success
            if err.use_stderr() {
                eprintln!("{err}");
                std::process::exit(EXIT_USAGE);
            }
            print!("{err}");
            std::process::exit(0);
        }
    };
    match cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
