use std::io::Write;

use clap::Parser;
use uev_cli::{run, Cli};

fn main() {
    match run(Cli::parse()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{}", out.summary);
            for f in &out.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
