use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gem_core::calibration::{
    direct_calibration_circuits, gem_calibration_circuits, qem_calibration_circuits,
    DIRECT_STRIPPED,
};
use gem_core::harness::{calibrate, generate_circuits, run_experiment};
use gem_core::mitigation::mitigate;
use gem_core::report::{emit_report, read_records, write_records, ReportFormat};
use gem_core::{
    CalibrationMatrix, Circuit, Distribution, ExperimentConfig, GemError, Method, NoiseModel,
    Result, SimulatorBackend, SolverConfig,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "gem",
    version,
    about = "General error mitigation for noisy quantum circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Gem,
    Qem,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured random circuits to a directory.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit calibration circuits for a circuit and the matrix measured on the simulator.
    Calibrate {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum, default_value = "gem")]
        method: MethodArg,
        /// Noise model JSON; the ideal device when omitted.
        #[arg(long)]
        noise: Option<PathBuf>,
        #[arg(long, default_value_t = 8192)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover a mitigated distribution from a calibration matrix and observed frequencies.
    Mitigate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        counts: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 10_000)]
        max_iterations: usize,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment from a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Records JSON output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Render experiment records as a CSV or JSON report.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| GemError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| GemError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| GemError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| GemError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            create_dir(&out)?;
            for (i, circuit) in generate_circuits(&cfg)?.iter().enumerate() {
                write_json(&out.join(format!("circuit_{i:04}.json")), circuit)?;
            }
            eprintln!("wrote {} circuits to {}", cfg.num_circuits, out.display());
        }
        Command::Calibrate {
            circuit,
            method,
            noise,
            shots,
            seed,
            out,
        } => {
            let circuit: Circuit = read_json(&circuit)?;
            let noise: NoiseModel = match noise {
                Some(path) => read_json(&path)?,
                None => NoiseModel::noiseless(),
            };
            let n = circuit.num_qubits();
            let mut cfg = ExperimentConfig::new(n, 0, 0, 1);
            cfg.method = match method {
                MethodArg::Gem => Method::Gem,
                MethodArg::Qem => Method::Qem,
                MethodArg::Direct => Method::Direct,
            };
            cfg.calibration_shots = Some(shots);
            cfg.noise = noise.clone();
            cfg.seed = seed;
            let body = circuit.without_measurements();

            create_dir(&out)?;
            match cfg.method {
                Method::Gem => {
                    let (first, second) = gem_calibration_circuits(&body)?;
                    write_json(&out.join("calibration_first_half.json"), &first)?;
                    write_json(&out.join("calibration_second_half.json"), &second)?;
                }
                Method::Qem => {
                    write_json(&out.join("calibration.json"), &qem_calibration_circuits(n)?)?;
                }
                Method::Direct | Method::Reduced => {
                    let stripped = body.without_kinds(&DIRECT_STRIPPED);
                    write_json(
                        &out.join("calibration.json"),
                        &direct_calibration_circuits(&stripped)?,
                    )?;
                }
            }
            let backend = SimulatorBackend::new(noise)?;
            let matrix: CalibrationMatrix = calibrate(&cfg, &body, &backend, [0, 0])?;
            write_json(&out.join("matrix.json"), &matrix)?;
            eprintln!("wrote calibration circuits and matrix to {}", out.display());
        }
        Command::Mitigate {
            matrix,
            counts,
            seed,
            restarts,
            max_iterations,
            tolerance,
            out,
        } => {
            let matrix: CalibrationMatrix = read_json(&matrix)?;
            let observed: Distribution = read_json(&counts)?;
            let cfg = SolverConfig {
                max_iterations,
                tolerance,
                seed,
                restarts,
            };
            let result = mitigate(&matrix, &observed, &cfg)?;
            if !result.converged {
                eprintln!("warning: solver stopped after {max_iterations} iterations");
            }
            eprintln!("objective {:.3e}", result.objective);
            match out {
                Some(path) => write_json(&path, &result.distribution)?,
                None => println!("{}", serde_json::to_string_pretty(&result.distribution)?),
            }
        }
        Command::Run {
            config,
            out,
            report,
            format,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = run_experiment(&cfg)?;
            write_records(&records, &out)?;
            if let Some(path) = report {
                emit_report(&records, format.into(), &path)?;
            }
            eprintln!("wrote {} records to {}", records.len(), out.display());
        }
        Command::Report {
            records,
            format,
            out,
        } => {
            let records = read_records(&records)?;
            emit_report(&records, format.into(), &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
