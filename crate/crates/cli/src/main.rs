use clap::Parser;

use intbox_cli::{run, CliConfig, EXIT_USAGE};

fn main() {
    let cli = match CliConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(&cli));
}
