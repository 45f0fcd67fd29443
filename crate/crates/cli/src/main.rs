//! `kdsat`: construct, search and check bounded-occurrence unsatisfiable
//! formulas. Exit codes: 0 success, 2 verification failure, 3 budget
//! exhausted, 4 input error.

mod args;
mod construct;
mod report;
mod sat;
mod search;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use report::{render, CmdResult, Exit};

fn dispatch(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Construct(a) => construct::cmd_construct(a),
        Command::FindMinD(a) => construct::cmd_find_min_d(a),
        Command::Bounds(a) => search::cmd_bounds(a),
        Command::SearchF2(a) => search::cmd_search_f2(a),
        Command::Mintree(a) => search::cmd_mintree(a),
        Command::Verify(a) => sat::cmd_verify(a),
        Command::Solve(a) => sat::cmd_solve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Exit::InputError.code()),
            };
        }
    };
    let res = dispatch(&cli.command);
    let mut config = cli.command.config();
    config["format"] = serde_json::to_value(cli.format).expect("format serializes");
    let out = render(cli.format, cli.command.name(), config, &res);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.as_bytes());
    let _ = stdout.flush();
    let exit = match &res {
        Ok(o) => o.exit,
        Err(f) => {
            if cli.format == Format::Text {
                eprintln!("error: {f}");
            }
            f.exit
        }
    };
    ExitCode::from(exit.code())
}
