use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use towercalc::cache::SharedSeedCache;
use towercalc::cli::{run, Cli, Io};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cache = SharedSeedCache::from_env();
    let (stdout, stderr) = (io::stdout(), io::stderr());
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    let code = run(cli, &cache, &mut Io { out: &mut out, err: &mut err, verbose: false });
    let _ = out.flush();
    ExitCode::from(code as u8)
}
