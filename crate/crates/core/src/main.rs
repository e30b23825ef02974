use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rotlayer::cli::{self, Axis, RunConfig};
use rotlayer::Error;

#[derive(Parser)]
#[command(name = "rotlayer", about = "Boundary-layer construction and error solve for flow past a rotating disc")]
struct Cli {
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Comma-separated list of gates to enable (default: all).
    #[arg(long, global = true, value_delimiter = ',')]
    gates: Vec<String>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the pipeline described by a JSON config.
    Run { config: PathBuf },
    /// Sweep one parameter, everything else from the config.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value = "eps")]
        axis: Axis,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
}

fn load(path: &PathBuf, gates: &[String]) -> rotlayer::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_json(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        e => e,
    })?;
    if !gates.is_empty() {
        cfg.gates = gates.to_vec();
        cfg.validate()?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    if args.print_defaults {
        print!("{}", cli::to_json_17(&RunConfig::default()).expect("defaults serialize"));
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = args.cmd else {
        eprintln!("nothing to do: pass `run <config>`, `sweep <config>` or `--print-defaults`");
        return ExitCode::from(4);
    };
    let result = match &cmd {
        Cmd::Run { config } => load(config, &args.gates).and_then(|c| cli::run(&c).map(|a| (c, a))),
        Cmd::Sweep { config, axis, values } => load(config, &args.gates).and_then(|c| {
            let vals = if values.is_empty() { c.sweep.values.clone() } else { values.clone() };
            cli::sweep(&c, *axis, &vals).map(|a| (c, a))
        }),
    };
    let code = match result {
        Ok((cfg, a)) => {
            if let Err(e) = cli::write_artifacts(&a, &args.out, cfg.write_fields) {
                eprintln!("error: {e}");
                return ExitCode::from(4);
            }
            for g in &a.report.gates {
                println!("{} {} measured={:e} threshold {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.measured, g.threshold);
            }
            cli::exit_code(&Ok(a))
        }
        Err(e) => {
            eprintln!("error: {e}");
            cli::error_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
