//! The `rm2` command-line tool.
//!
//! Exit codes: 0 on success, 1 for usage, configuration or parse errors,
//! 2 when a simulation fails at run time (for example the towline exceeds
//! its rated load). Diagnostics go to stderr; data goes to stdout or the
//! `--output` file.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::benchlab::{self, GeometryTable};
use crate::physics::{self, TowConfig, WaveField};
use crate::simulator::{self, ConfigError, Scenario, SimError};

#[derive(Debug, Parser)]
#[command(name = "rm2", version, about = "Towed AUV release simulator and calculators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override a scenario key, `section.key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its telemetry CSV.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Telemetry destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Replay a tow-deploy-rendezvous mission and report the outcome.
    Mission {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Summary destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the telemetry CSV here.
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
    /// Towline tension for a steady tow.
    #[command(allow_negative_numbers = true)]
    Tension {
        #[arg(long, default_value_t = physics::SEAWATER_DENSITY)]
        rho: f64,
        #[arg(long = "cd", default_value_t = physics::HALF_SPHERE_DRAG)]
        c_d: f64,
        #[arg(long, default_value_t = physics::DEFAULT_SIGMA)]
        sigma: f64,
        /// Towline angle to the horizontal, degrees.
        #[arg(long = "theta-deg", default_value_t = physics::DEFAULT_THETA_DEG)]
        theta_deg: f64,
        /// Tow speed, m/s.
        #[arg(long, conflicts_with = "speed_kn", required_unless_present = "speed_kn")]
        speed: Option<f64>,
        /// Tow speed, knots.
        #[arg(long = "speed-kn")]
        speed_kn: Option<f64>,
        #[arg(long = "rated-load", default_value_t = physics::DEFAULT_RATED_LOAD)]
        rated_load: f64,
        /// Significant figures in the printed value.
        #[arg(long, default_value_t = 4)]
        precision: usize,
    },
    /// Slowest tow that keeps the line taut in a given sea.
    #[command(allow_negative_numbers = true)]
    ReleaseSpeed {
        /// Wave amplitude, m.
        #[arg(long)]
        amplitude: f64,
        /// Wave period, s.
        #[arg(long)]
        period: f64,
        #[arg(long, default_value_t = physics::DEFAULT_GRAVITY)]
        gravity: f64,
        /// Check a planned tow speed, m/s.
        #[arg(long = "tow-speed", conflicts_with = "tow_speed_kn")]
        tow_speed: Option<f64>,
        /// Check a planned tow speed, knots.
        #[arg(long = "tow-speed-kn")]
        tow_speed_kn: Option<f64>,
        #[arg(long, default_value_t = 4)]
        precision: usize,
    },
    /// Tether-angle consistency report for the bench geometry table.
    Bench {
        #[arg(long, value_enum, default_value_t = BenchFormat::Text)]
        format: BenchFormat,
        /// Also print a bench rig scaled to this bench height, m.
        #[arg(long = "scale-height")]
        scale_height: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a scenario file and list every invalid field.
    ValidateConfig {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchFormat {
    Text,
    Csv,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(SimError),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => CliError::Config(c),
            other => CliError::Sim(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Sim(_) => 2,
            _ => 1,
        }
    }
}

/// Formats `v` with `sig` significant figures.
pub fn format_sig(v: f64, sig: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (sig.max(1) as i64 - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn emit(out: &mut dyn Write, path: Option<&Path>, data: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, data).map_err(|source| CliError::Output {
            path: p.to_path_buf(),
            source,
        }),
        None => out.write_all(data.as_bytes()).map_err(|source| CliError::Output {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn load(args: &ScenarioArgs) -> Result<simulator::SimConfig, CliError> {
    Ok(Scenario::load(&args.config, &args.overrides)?.resolve()?)
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Simulate { scenario, output } => {
            let result = simulator::run(load(&scenario)?)?;
            emit(out, output.as_deref(), &result.telemetry.to_csv())?;
            let _ = write!(err, "{}", result.summary);
        }
        Command::Mission {
            scenario,
            output,
            telemetry,
        } => {
            let result = simulator::run(load(&scenario)?)?;
            if let Some(path) = telemetry {
                std::fs::write(&path, result.telemetry.to_csv()).map_err(|source| CliError::Output { path, source })?;
            }
            emit(out, output.as_deref(), &result.summary.to_string())?;
        }
        Command::Tension {
            rho,
            c_d,
            sigma,
            theta_deg,
            speed,
            speed_kn,
            rated_load,
            precision,
        } => {
            let cfg = TowConfig::with_theta_deg(rho, c_d, sigma, theta_deg, rated_load)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let v = speed.unwrap_or_else(|| physics::knots_to_mps(speed_kn.unwrap_or_default()));
            let tension = physics::tow_tension(&cfg, v).map_err(|e| CliError::Input(e.to_string()))?;
            let _ = writeln!(out, "{} N", format_sig(tension, precision));
            if tension > cfg.rated_load {
                let _ = writeln!(err, "warning: exceeds rated load of {} N", cfg.rated_load);
            }
        }
        Command::ReleaseSpeed {
            amplitude,
            period,
            gravity,
            tow_speed,
            tow_speed_kn,
            precision,
        } => {
            let wave =
                WaveField::new(amplitude, period, gravity, 0.0).map_err(|e| CliError::Input(e.to_string()))?;
            let v = physics::min_release_speed(&wave);
            let _ = writeln!(
                out,
                "{} m/s ({} kn)",
                format_sig(v, precision),
                format_sig(physics::mps_to_knots(v), precision.saturating_sub(1).max(1))
            );
            if let Some(tow) = tow_speed.or(tow_speed_kn.map(physics::knots_to_mps)) {
                let ok = physics::assured_release(tow, &wave).map_err(|e| CliError::Input(e.to_string()))?;
                let _ = writeln!(out, "assured release at {} m/s: {}", format_sig(tow, precision), if ok { "yes" } else { "no" });
            }
        }
        Command::Bench {
            format,
            scale_height,
            output,
        } => {
            let report = benchlab::consistency_report(&GeometryTable::REFERENCE);
            let mut text = match format {
                BenchFormat::Text => report.to_string(),
                BenchFormat::Csv => report.to_csv(),
            };
            if let Some(h) = scale_height {
                let g = benchlab::scale_to_bench(&GeometryTable::REFERENCE.real, h).map_err(|e| CliError::Input(e.to_string()))?;
                let line = match format {
                    BenchFormat::Text => format!(
                        "\nscaled bench rig: l = {:.3} m, H = {:.3} m, h'_trough = {:.3} m, h'_crest = {:.3} m\n",
                        g.tether_length, g.bench_height, g.wave_trough, g.wave_crest
                    ),
                    BenchFormat::Csv => format!(
                        "\ntether_length,bench_height,h_trough,h_crest\n{:.4},{:.4},{:.4},{:.4}\n",
                        g.tether_length, g.bench_height, g.wave_trough, g.wave_crest
                    ),
                };
                text.push_str(&line);
            }
            emit(out, output.as_deref(), &text)?;
        }
        Command::ValidateConfig { scenario } => {
            load(&scenario)?;
            let _ = writeln!(out, "{}: ok", scenario.config.display());
        }
    }
    Ok(())
}

/// Runs the tool with `args` (including the program name) and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("rm2").chain(args.iter().copied());
        let code = main_with_args(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn significant_figures() {
        assert_eq!(format_sig(107.918, 4), "107.9");
        assert_eq!(format_sig(0.104_719_755, 4), "0.1047");
        assert_eq!(format_sig(0.203_562, 3), "0.204");
        assert_eq!(format_sig(152_617.5, 4), "152618");
        assert_eq!(format_sig(0.0, 4), "0");
    }

    #[test]
    fn tension_command() {
        let (code, out, _) = run(&[
            "tension", "--rho", "1020", "--cd", "0.42", "--sigma", "0.057", "--theta-deg", "45", "--speed", "2.5",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out, "107.9 N\n");
        let (code, out, _) = run(&["tension", "--speed", "2.5", "--precision", "6"]);
        assert_eq!(code, 0);
        assert_eq!(out, "107.917 N\n");
    }

    #[test]
    fn tension_rejects_bad_input() {
        let (code, _, err) = run(&["tension", "--speed", "-1"]);
        assert_eq!(code, 1);
        assert!(err.contains("speed"), "{err}");
        let (code, _, _) = run(&["tension", "--speed", "1", "--theta-deg", "90"]);
        assert_eq!(code, 1);
        let (code, _, _) = run(&["tension"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn release_speed_command() {
        let (code, out, _) = run(&["release-speed", "--amplitude", "0.5", "--period", "30"]);
        assert_eq!(code, 0);
        assert_eq!(out, "0.1047 m/s (0.204 kn)\n");
        let (_, out, _) = run(&[
            "release-speed", "--amplitude", "0.5", "--period", "30", "--tow-speed-kn", "0.2",
        ]);
        assert!(out.ends_with("no\n"), "{out}");
    }

    #[test]
    fn missing_config_names_path() {
        let (code, _, err) = run(&["simulate", "--config", "missing.cfg"]);
        assert_eq!(code, 1);
        assert!(err.contains("missing.cfg"), "{err}");
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        let (code, _, _) = run(&["launch"]);
        assert_eq!(code, 1);
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn bench_command_formats() {
        let (code, out, _) = run(&["bench"]);
        assert_eq!(code, 0);
        assert!(out.contains("INFEASIBLE") && out.contains("MISMATCH"));
        let (code, out, _) = run(&["bench", "--format", "csv", "--scale-height", "0.762"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("column,angle"));
        assert!(out.contains("tether_length,bench_height"));
    }
}
