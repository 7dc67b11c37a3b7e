mod config;
mod pipeline;
mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ConfigError, Plan};
use table::{write_atomic, Format, Table};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "wellsplit", version, about = "Barrier insertion in a square well and side-channel state discrimination")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory. Falls back to `output_dir` in the config, then `./out`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads for sweeps and density grids.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Reserved. All computation is deterministic.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute every table for the scenario.
    Run,
    /// Check the configuration without computing.
    Validate,
    /// Compute the prior x detector-error sweep only.
    Sweep,
    /// Compute the density grid only.
    Density,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Validate => "validate",
            Command::Sweep => "sweep",
            Command::Density => "density",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Io(String),
    Numerical { stage: &'static str, error: wellsplit::Error },
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    if cli.seed.is_some() {
        log::debug!("--seed is reserved and has no effect");
    }

    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("invalid: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Numerical { stage, error }) => {
            eprintln!("numerical failure in {stage}: {error}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn load(cli: &Cli) -> Result<Plan, Failure> {
    let Some(path) = &cli.config else {
        return Err(Failure::Config(ConfigError::Invalid {
            field: "--config".into(),
            message: "a configuration file is required".into(),
        }));
    };
    let plan = config::load(path)?;
    for (label, factor) in &plan.normalization {
        log::info!("{label}: normalization factor {factor:.9e}");
    }
    Ok(plan)
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let plan = load(cli)?;
    if let Command::Validate = cli.command {
        return validate(&plan);
    }
    if matches!(cli.command, Command::Density) && plan.density.is_none() {
        return Err(Failure::Config(ConfigError::Invalid {
            field: "density".into(),
            message: "required by the density subcommand".into(),
        }));
    }
    if matches!(cli.command, Command::Sweep) && plan.state_b.is_none() {
        return Err(Failure::Config(ConfigError::Invalid {
            field: "state_b".into(),
            message: "required by the sweep subcommand".into(),
        }));
    }

    let dir = cli
        .out
        .clone()
        .or_else(|| plan.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;

    let mut writer = Writer {
        dir: &dir,
        format: cli.format,
        files: Vec::new(),
    };
    let outcome = compute(&cli.command, &plan, &mut writer);
    write_status(&dir, cli.command.name(), &plan, &writer.files, &outcome)?;
    if outcome.is_ok() {
        log::info!("wrote {} tables to {}", writer.files.len(), dir.display());
    }
    outcome
}

/// Writes `run_status.json`. A numerical failure marks the files already
/// written as partial output.
fn write_status(
    dir: &Path,
    command: &str,
    plan: &Plan,
    files: &[String],
    outcome: &Result<(), Failure>,
) -> Result<(), Failure> {
    let (status, failed) = match outcome {
        Ok(()) => ("ok", None),
        Err(Failure::Numerical { stage, error }) => ("partial", Some((*stage, error.to_string()))),
        Err(_) => ("failed", None),
    };
    let report = json!({
        "command": command,
        "scenario": plan.name,
        "status": status,
        "partial": failed.is_some(),
        "failed_stage": failed.as_ref().map(|f| f.0),
        "error": failed.as_ref().map(|f| f.1.clone()),
        "files": files,
        "n_cut": plan.n_cut,
    });
    let mut bytes = serde_json::to_vec_pretty(&report).expect("status serializes");
    bytes.push(b'\n');
    write_atomic(&dir.join("run_status.json"), &bytes).map_err(|e| Failure::Io(format!("run_status.json: {e}")))
}

struct Writer<'a> {
    dir: &'a Path,
    format: Format,
    files: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, table: &Table) -> Result<(), Failure> {
        let path = table
            .write(self.dir, self.format)
            .map_err(|e| Failure::Io(format!("{}: {e}", table.name)))?;
        let file = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        log::debug!("wrote {file}");
        self.files.push(file);
        Ok(())
    }
}

fn stage<T>(name: &'static str, r: wellsplit::Result<T>) -> Result<T, Failure> {
    r.map_err(|error| Failure::Numerical { stage: name, error })
}

fn compute(command: &Command, plan: &Plan, out: &mut Writer) -> Result<(), Failure> {
    match command {
        Command::Run => {
            let splits = stage("split", pipeline::split_states(plan))?;
            out.write(&pipeline::coefficients(plan, &splits))?;
            let (report, sums) = stage("insertion", pipeline::insertion(plan, &splits))?;
            out.write(&report)?;
            out.write(&sums)?;
            if let Some((summary, posterior, c)) = stage("cost", pipeline::cost(plan))? {
                log::info!(
                    "baseline {:.9e}, combined {:.9e}",
                    c.helstrom_baseline,
                    c.combined_cost
                );
                out.write(&summary)?;
                out.write(&posterior)?;
            }
            if let Some(t) = stage("sweep", pipeline::sweep_table(plan))? {
                out.write(&t)?;
            }
            for t in stage("density", pipeline::density(plan, &splits))? {
                out.write(&t)?;
            }
        }
        Command::Sweep => match stage("sweep", pipeline::sweep_table(plan))? {
            Some(t) => out.write(&t)?,
            None => log::warn!("sweep grids are empty; nothing to compute"),
        },
        Command::Density => {
            let splits = stage("split", pipeline::split_states(plan))?;
            for t in stage("density", pipeline::density(plan, &splits))? {
                out.write(&t)?;
            }
        }
        Command::Validate => unreachable!("handled before any output"),
    }
    Ok(())
}

fn validate(plan: &Plan) -> Result<(), Failure> {
    let flags = pipeline::nodal_flags(plan).map_err(|e| {
        Failure::Config(ConfigError::Invalid {
            field: "insertion_point".into(),
            message: e.to_string(),
        })
    })?;
    println!("valid: {}", plan.name);
    let g = &plan.geometry;
    println!(
        "well: x_left = {}, width = {}, mass = {}, hbar = {}; insertion at {}",
        g.x_left, g.width, g.mass, g.hbar, plan.insertion_point
    );
    let nodal: Vec<&str> = flags.iter().filter(|f| f.1).map(|f| f.0).collect();
    if nodal.is_empty() {
        println!("nodal state = none");
    } else {
        println!("nodal state = {}", nodal.join(", "));
    }
    for (label, factor) in &plan.normalization {
        println!("{label}: normalization factor {factor:.9e}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_flag_partial_output() {
        let dir = tempfile::tempdir().unwrap();
        let plan = config::parse(
            r#"{"schema_version": 1, "state_a": [{"n": 1, "re": 1.0}], "insertion_point": 0.5, "n_cut": 8}"#,
        )
        .unwrap()
        .into_plan("t")
        .unwrap();
        let failure = stage::<()>(
            "cost",
            Err(wellsplit::Error::Numerical {
                message: "interval budget exhausted".into(),
                estimate: 0.1,
                error: 1e-3,
            }),
        );
        let files = vec!["coefficients.csv".to_string()];
        write_status(dir.path(), "run", &plan, &files, &failure).unwrap();
        let status: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("run_status.json")).unwrap()).unwrap();
        assert_eq!(status["status"], "partial");
        assert_eq!(status["partial"], true);
        assert_eq!(status["failed_stage"], "cost");
        assert_eq!(status["files"][0], "coefficients.csv");
        assert!(status["error"].as_str().unwrap().contains("budget"));

        write_status(dir.path(), "run", &plan, &files, &Ok(())).unwrap();
        let status: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("run_status.json")).unwrap()).unwrap();
        assert_eq!(status["status"], "ok");
        assert_eq!(status["failed_stage"], serde_json::Value::Null);
    }
}
