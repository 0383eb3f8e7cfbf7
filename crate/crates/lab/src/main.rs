use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dirac_lab::config::{ExperimentConfig, RawConfig};
use dirac_lab::experiments::{self, Fig1Model, SweepParam, FIG1_CELLS};
use dirac_lab::runner::{self, RunError, EXIT_CONFIG, EXIT_OK, EXIT_TOLERANCE};

#[derive(Parser)]
#[command(name = "dirac-lab", version, about = "Dirac concentration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write its run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a linear-model run against its closed form.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun the discontinuous-multiplier example.
    ReproduceFig1 {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = FIG1_CELLS)]
        n_cells: usize,
        #[arg(long, value_enum, default_value_t = Fig1Choice::PolynomialSwitch)]
        model: Fig1Choice,
        #[arg(long, default_value = "fig1")]
        run_id: String,
    },
    /// Run one child per value of eps, n_cells or dt_scale in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(value_parser = ["eps", "n_cells", "dt_scale"])]
        param: String,
        #[arg(required = true, num_args = 1..)]
        values: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fig1Choice {
    PolynomialSwitch,
    Concave,
}

fn load(path: &Path, out: Option<&PathBuf>) -> Result<(RawConfig, String), RunError> {
    let (mut raw, _) = RawConfig::read(path)?;
    if let Some(o) = out {
        raw.set("output.dir", o.display().to_string());
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    Ok((raw, id))
}

fn fail(e: &RunError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

fn dispatch(cmd: Command) -> i32 {
    match cmd {
        Command::Run { config, out } => {
            let res = load(&config, out.as_ref())
                .and_then(|(raw, id)| Ok(ExperimentConfig::from_raw(&raw, &id)?))
                .and_then(|cfg| runner::run_experiment(&cfg));
            match res {
                Ok(o) => {
                    print!("{}", o.report.to_text());
                    println!("run_dir: {}", o.dir.display());
                    EXIT_OK
                }
                Err(e) => fail(&e),
            }
        }
        Command::OracleCheck { config, out } => {
            let res = load(&config, out.as_ref())
                .and_then(|(raw, id)| Ok(ExperimentConfig::from_raw(&raw, &id)?))
                .and_then(|cfg| experiments::oracle_check(&cfg));
            match res {
                Ok(o) => {
                    for (k, v) in &o.lines {
                        println!("{k}: {v}");
                    }
                    println!("run_dir: {}", o.dir.display());
                    if o.breaches.is_empty() {
                        println!("status: pass");
                        EXIT_OK
                    } else {
                        for b in &o.breaches {
                            println!("breach: {b}");
                        }
                        println!("status: fail");
                        EXIT_TOLERANCE
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::ReproduceFig1 {
            out,
            n_cells,
            model,
            run_id,
        } => {
            let model = match model {
                Fig1Choice::PolynomialSwitch => Fig1Model::PolynomialSwitch,
                Fig1Choice::Concave => Fig1Model::Concave,
            };
            match experiments::reproduce_fig1(model, n_cells, &out, &run_id) {
                Ok(o) => {
                    print!("{}", std::fs::read_to_string(o.dir.join("report.txt")).unwrap_or_default());
                    println!("run_dir: {}", o.dir.display());
                    if o.passed() {
                        EXIT_OK
                    } else {
                        eprintln!("no common jump with a smooth phase was detected");
                        EXIT_TOLERANCE
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Sweep {
            config,
            out,
            param,
            values,
        } => {
            let param = SweepParam::parse(&param).expect("clap restricts the parameter");
            let (raw, id) = match load(&config, out.as_ref()) {
                Ok(v) => v,
                Err(e) => return fail(&e),
            };
            // validate the base config before spawning children
            if let Err(e) = ExperimentConfig::from_raw(&raw, &id) {
                return fail(&e.into());
            }
            let out_dir = PathBuf::from(raw.get("output.dir").unwrap_or("out"));
            match experiments::sweep(&raw, &id, &out_dir, param, &values) {
                Ok(s) => {
                    for r in &s.rows {
                        let msg = if r.message.is_empty() { "ok" } else { &r.message };
                        println!("{} = {}: exit {} ({msg})", param.name(), r.value, r.exit_code);
                    }
                    println!("summary: {}", s.summary.display());
                    s.exit_code()
                }
                Err(e) => fail(&e.into()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(dispatch(cli.command) as u8)
}
