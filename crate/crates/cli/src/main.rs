use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holonomy_cli::{
    configure_threads, emit, exit_status, parse_loop, parse_model, run, ExperimentConfig, Failure, Format, Job,
};

#[derive(Parser)]
#[command(name = "holonomy", version, about = "Adiabatic holonomy matrices of parametric quantum systems")]
struct Cli {
    #[command(subcommand)]
    job: JobCmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum JobCmd {
    /// Integrate M = W·B around the loop.
    Holonomy,
    /// Evolve exactly and compare with the adiabatic prediction.
    Evolve,
    /// Compare the integrated holonomy with its closed form.
    Verify,
    /// Evolution deviation over several kick counts.
    Sweep,
}

#[derive(Args)]
struct Opts {
    /// JSON experiment file; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `berry`, `map_spin_half:q=0,p=1`, `map_spin_threehalf:0,1`.
    #[arg(long, global = true)]
    model: Option<String>,
    /// `lambda:mu=1,lambda=0,theta=0.5pi` or `polygon:0.2pi/0,0.4pi/0.5pi,0.3pi/pi`.
    #[arg(long = "loop", global = true)]
    path: Option<String>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// One count for `evolve`; a comma-separated list for `sweep`.
    #[arg(long, global = true, value_delimiter = ',')]
    kicks: Option<Vec<usize>>,
    #[arg(long, global = true, value_parser = ["json", "csv"])]
    format: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn build_config(job: Job, o: &Opts) -> Result<ExperimentConfig, Failure> {
    let mut cfg: Option<ExperimentConfig> = match &o.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let model = o.model.as_deref().map(parse_model).transpose()?;
    let path = o.path.as_deref().map(parse_loop).transpose()?;
    let mut cfg = match (cfg.take(), model, path) {
        (Some(mut c), m, l) => {
            if let Some(m) = m {
                c.model = m;
            }
            if let Some(l) = l {
                c.path = l;
            }
            c
        }
        (None, Some(model), Some(path)) => ExperimentConfig {
            model,
            path,
            job,
            output: Default::default(),
            numeric: Default::default(),
        },
        _ => return Err(Failure::Validation("give --config, or both --model and --loop".into())),
    };
    cfg.job = job;
    if let Some(s) = o.steps {
        cfg.numeric.steps = s;
    }
    if let Some(k) = &o.kicks {
        match job {
            Job::Sweep => cfg.numeric.sweep_kicks = k.clone(),
            _ if k.len() == 1 => cfg.numeric.kicks = k[0],
            _ => return Err(Failure::Validation("--kicks takes a single count outside `sweep`".into())),
        }
    }
    if let Some(f) = &o.format {
        cfg.output.format = if f == "csv" { Format::Csv } else { Format::Json };
    }
    if let Some(p) = &o.out {
        cfg.output.path = Some(p.clone());
    }
    Ok(cfg)
}

fn write_out(cfg: &ExperimentConfig, text: &str) -> Result<(), Failure> {
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `Err((failure, written))`: `written` when the record already went out.
fn execute(cli: &Cli) -> Result<(), (Failure, bool)> {
    let early = |f: Failure| (f, false);
    configure_threads(std::env::var("HOLONOMY_THREADS").ok().as_deref()).map_err(early)?;
    let job = match cli.job {
        JobCmd::Holonomy => Job::Holonomy,
        JobCmd::Evolve => Job::Evolve,
        JobCmd::Verify => Job::Verify,
        JobCmd::Sweep => Job::Sweep,
    };
    let cfg = build_config(job, &cli.opts).map_err(early)?;
    let record = run(&cfg).map_err(early)?;
    write_out(&cfg, &emit(&record, cfg.output.format).map_err(early)?).map_err(early)?;
    exit_status(&record).map_err(|f| (f, true))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((f, written)) => {
            eprintln!("holonomy: {f}");
            if written {
                return ExitCode::from(f.exit_code());
            }
            let machine = serde_json::json!({
                "error": { "kind": f.kind(), "message": f.message(), "exit_code": f.exit_code() }
            });
            println!("{machine}");
            ExitCode::from(f.exit_code())
        }
    }
}
