use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use effbath::correlation::CorrelationKind;
use effbath::gme::{run_niba, NibaSettings, DEFAULT_HORIZON};
use effbath::params::{build_params, parse_config};
use effbath::scenario::{
    check_regime, correlation_csv, read_series_csv, run_scenario, series_csv, spectral_csv, spectrum_csv, FigureTag,
    Scenario, ScenarioError,
};
use effbath::spectrum::{fourier_spectrum, peak_extract, Window};
use effbath::wda::{bloch_siegert_shift, wda_series, wda_spectrum};
use effbath::{derived_scales, SystemParams};

#[derive(Parser)]
#[command(name = "effbath", version, about = "Qubit dynamics in the effective bath of a damped nonlinear oscillator")]
struct Cli {
    /// Parameter file (flat key=value); defaults to the reference parameter set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Without it, single-table commands print CSV to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat regime-flag violations as errors (exit status 2).
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrelationArg {
    Closed,
    Quadrature,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    None,
    Hann,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral densities and χ'' on a frequency grid.
    Spectral {
        #[arg(long, default_value_t = 2.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// S(τ), R(τ) from quadrature, closed form and the damping expansion.
    Correlation {
        #[arg(long, default_value_t = 30.0)]
        tau_max: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
    },
    /// P(t) from the NIBA master equation.
    Niba {
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long, value_enum, default_value = "closed")]
        correlation: CorrelationArg,
        /// Run the linear comparison (α = 0).
        #[arg(long)]
        alpha_zero: bool,
    },
    /// Analytic weak-damping P(t) and its frequency report.
    Wda {
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long)]
        alpha_zero: bool,
    },
    /// Fourier magnitude of a P(t) CSV.
    Spectrum {
        /// Input CSV with columns t,P.
        input: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        window: WindowArg,
        #[arg(long, default_value_t = 1)]
        pad: usize,
        #[arg(long, default_value_t = 2)]
        peaks: usize,
    },
    /// Regenerate the data behind one figure (fig2 … fig8).
    Figure { tag: String },
    /// Full pipeline on the parameters given with --config.
    Custom,
}

fn load_params(config: Option<&Path>) -> Result<SystemParams, ScenarioError> {
    match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|source| ScenarioError::Io { context: format!("reading {}", path.display()), source })?;
            Ok(build_params(&parse_config(&text)?)?)
        }
        None => Ok(SystemParams::reference()),
    }
}

/// Writes `content` to `out/name`, or to stdout when no directory is given.
fn emit(out: Option<&Path>, name: &str, content: &str) -> Result<(), ScenarioError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|source| ScenarioError::Io { context: format!("creating {}", dir.display()), source })?;
            let path = dir.join(name);
            fs::write(&path, content)
                .map_err(|source| ScenarioError::Io { context: format!("writing {}", path.display()), source })
        }
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|source| ScenarioError::Io { context: "writing stdout".into(), source }),
    }
}

/// Report text goes next to the CSV, or to stderr when the CSV goes to stdout.
fn emit_report(out: Option<&Path>, name: &str, content: &str) -> Result<(), ScenarioError> {
    match out {
        Some(_) => emit(out, name, content),
        None => {
            eprint!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), ScenarioError> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Figure { tag } => {
            let tag: FigureTag = tag.parse()?;
            let mut sc = Scenario::figure(tag);
            if tag == FigureTag::Custom {
                sc = Scenario::custom(load_params(cli.config.as_deref())?);
            }
            sc.settings.strict = cli.strict;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out").join(tag.name()));
            let report = run_scenario(&sc, &dir)?;
            for f in &report.files {
                log::info!("wrote {}", f.display());
            }
            print!("{}", report.summary_text());
            Ok(())
        }
        Command::Custom => {
            if cli.config.is_none() {
                return Err(ScenarioError::Input("custom needs --config".into()));
            }
            let mut sc = Scenario::custom(load_params(cli.config.as_deref())?);
            sc.settings.strict = cli.strict;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out").join("custom"));
            print!("{}", run_scenario(&sc, &dir)?.summary_text());
            Ok(())
        }
        Command::Spectrum { input, window, pad, peaks } => {
            let text = fs::read_to_string(&input)
                .map_err(|source| ScenarioError::Io { context: format!("reading {}", input.display()), source })?;
            let ts = read_series_csv(&text)?;
            let window = match window {
                WindowArg::None => Window::None,
                WindowArg::Hann => Window::Hann,
            };
            let spec = fourier_spectrum(&ts, window, pad)?;
            emit(out, "spectrum.csv", &spectrum_csv(&spec))?;
            let list = peak_extract(&spec, peaks)?;
            let mut report = format!("resolution={:.16e}\npeak_shortage={}\n", spec.resolution, list.shortage);
            for (i, p) in list.peaks.iter().enumerate() {
                report.push_str(&format!(
                    "peak{0}_omega={1:.16e}\npeak{0}_height={2:.16e}\npeak{0}_half_width={3:.16e}\n",
                    i + 1,
                    p.omega,
                    p.height,
                    p.half_width
                ));
            }
            emit_report(out, "peaks.txt", &report)
        }
        command => {
            let mut p = load_params(cli.config.as_deref())?;
            check_regime(&p, cli.strict)?;
            match command {
                Command::Spectral { omega_max, points } => emit(out, "spectral.csv", &spectral_csv(&p, omega_max, points)?),
                Command::Correlation { tau_max, points } => {
                    emit(out, "correlation.csv", &correlation_csv(&p, tau_max, points)?)
                }
                Command::Niba { step, horizon, correlation, alpha_zero } => {
                    if alpha_zero {
                        p = p.linear_twin();
                    }
                    let correlation = match correlation {
                        CorrelationArg::Closed => CorrelationKind::ClosedForm,
                        CorrelationArg::Quadrature => CorrelationKind::Quadrature,
                    };
                    let ts = run_niba(&p, &NibaSettings { step, horizon, correlation })?;
                    emit(out, "P_niba.csv", &series_csv(&ts, "P"))
                }
                Command::Wda { step, horizon, alpha_zero } => {
                    if alpha_zero {
                        p = p.linear_twin();
                    }
                    let s = derived_scales(&p);
                    let spec = wda_spectrum(&p, cli.strict)?;
                    let step = step.unwrap_or_else(|| effbath::gme::default_step(s.omega1, p.delta));
                    emit(out, "P_wda.csv", &series_csv(&wda_series(&spec, step, horizon), "P_wda"))?;
                    let report = format!(
                        "omega_plus={:.16e}\nomega_minus={:.16e}\nbs_shift={:.16e}\nkappa_plus={:.16e}\nkappa_minus={:.16e}\nu0_abs={:.16e}\n",
                        spec.omega_plus(),
                        spec.omega_minus(),
                        bloch_siegert_shift(p.g, p.alpha, p.omega),
                        spec.kappa_plus,
                        spec.kappa_minus,
                        spec.tunneling.u0.norm()
                    );
                    emit_report(out, "wda_report.txt", &report)
                }
                _ => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("EFFBATH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not cap worker threads: {e}");
        }
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
