use std::io::Write;

use anyhow::Result;
use clap::Parser;
use gqre_cli::commands::{cmd_bench, cmd_gen, cmd_respond, cmd_solve, cmd_verify};
use gqre_cli::{Cli, Command};

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(args) => println!("{}", cmd_gen(&args)?.display()),
        Command::Solve(args) => {
            let m = cmd_solve(&args)?;
            println!("{} runs -> {}", m.runs.len(), args.run.out_dir.display());
        }
        Command::Verify(args) => {
            let report = serde_json::to_string_pretty(&cmd_verify(&args)?)?;
            match &args.out {
                Some(path) => std::fs::write(path, report + "\n")?,
                None => println!("{report}"),
            }
        }
        Command::Respond(args) => println!("{}", cmd_respond(&args)?),
        Command::Bench(args) => {
            let m = cmd_bench(&args)?;
            println!("{} runs over {} games -> {}", m.runs.len(), m.games.len(), args.run.out_dir.display());
        }
    }
    std::io::stdout().flush()?;
    Ok(())
}
