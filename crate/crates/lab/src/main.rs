use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kirchhoff_lab::output::{to_json_string, write_json};
use kirchhoff_lab::{run, sweep, Axis, LabResult, RunConfig};

#[derive(Parser)]
#[command(name = "kirchhoff", version, about = "Kirchhoff wave equation lab")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full pipeline and write trace.csv, summary.json, constants.json
    Run {
        config: PathBuf,
        /// Overrides [run] output_dir
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cartesian-product sweep over config keys
    Sweep {
        config: PathBuf,
        /// section.key=v1,v2,... (repeatable)
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rebuild constants for every row
        #[arg(long)]
        no_cache: bool,
    },
    /// Print λ₁, Λ, S_q and well depths
    Constants { config: PathBuf },
    /// Emit initial data and their certificate
    Seed {
        config: PathBuf,
        /// Write seed.json here instead of printing it
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf, out: Option<PathBuf>) -> LabResult<RunConfig> {
    let cfg = RunConfig::load(path)?;
    Ok(match out {
        Some(d) => cfg.with_output_dir(d),
        None => cfg,
    })
}

fn main_inner(cli: Cli) -> LabResult<()> {
    match cli.cmd {
        Cmd::Run { config, out } => {
            let cfg = load(&config, out)?;
            let s = run(&cfg)?;
            println!(
                "outcome {} (halt {}, t = {}) -> {}",
                s["outcome"].as_str().unwrap_or("?"),
                s["halt"].as_str().unwrap_or("?"),
                s["final_time"],
                cfg.output_dir.display()
            );
        }
        Cmd::Sweep { config, axes, out, no_cache } => {
            let cfg = load(&config, out)?;
            let axes = axes.iter().map(|a| Axis::parse(a)).collect::<LabResult<Vec<_>>>()?;
            let t = sweep(&cfg, &axes, config.parent(), !no_cache)?;
            for r in &t.rows {
                let assign: Vec<String> = r.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let status = match (&r.summary, &r.error) {
                    (Some(s), _) => s["outcome"].as_str().unwrap_or("?").to_string(),
                    (None, Some((_, m))) => format!("error: {m}"),
                    _ => "?".into(),
                };
                println!("{:4}  {}  {}", r.index, assign.join(" "), status);
            }
            println!("phase table -> {}", cfg.output_dir.join("phase_table.csv").display());
        }
        Cmd::Constants { config } => {
            let cfg = load(&config, None)?;
            print!("{}", to_json_string(&kirchhoff_lab::run::constants_only(&cfg)?));
        }
        Cmd::Seed { config, out } => {
            let cfg = load(&config, None)?;
            let v = kirchhoff_lab::run::seed_only(&cfg)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    write_json(&dir.join("seed.json"), &v)?;
                    println!("{}", dir.join("seed.json").display());
                }
                None => print!("{}", to_json_string(&v)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kirchhoff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
