use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;

use dfkit::analysis::{analyze, default_grid, describing_function, uniform_grid, AnalysisOptions};
use dfkit::descfun::{df_exact, df_oracle_curve, DescribingFunction};
use dfkit::io::{
    read_nonlinearity, read_plant, write_columns, write_nyquist, write_nyquist_family,
    write_trajectory,
};
use dfkit::linsys::{DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN};
use dfkit::qualdf::df_qualitative;
use dfkit::sim::{simulate_with, SimConfig};
use dfkit::svg::{LineStyle, Plot};
use dfkit::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NO_CROSSOVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dfkit",
    version,
    about = "Describing functions and limit cycle estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Qualitative,
    Both,
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Describing function curve(s) of a nonlinearity on X = (dX, 2dX, .., Xm).
    Df {
        nonlinearity: PathBuf,
        /// Grid step and end; defaults to Xm = 1.1 X_r, dX = Xm/200.
        #[arg(long, num_args = 2, value_names = ["DX", "XM"], allow_negative_numbers = true)]
        grid: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long = "out", value_enum, default_value = "csv")]
        format: Format,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Crossovers, predicted limit cycles, stability, ellipses, optional simulation.
    Analyze {
        nonlinearity: PathBuf,
        plant: PathBuf,
        #[arg(long)]
        simulate: bool,
        /// Use the qualitative describing function.
        #[arg(long)]
        qualitative: bool,
        /// Include ellipses of unstable cycles.
        #[arg(long)]
        unstable_ellipses: bool,
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        omega_range: Option<Vec<f64>>,
        /// Report path; stdout when omitted.
        #[arg(long = "out")]
        out: Option<PathBuf>,
    },
    /// Frequency response G(jw) on a log grid.
    Nyquist {
        plant: PathBuf,
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        omega_range: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        /// Replace the plant gain; repeat for a family of curves.
        #[arg(long = "k", allow_negative_numbers = true)]
        gains: Vec<f64>,
        /// Mark the negative real axis crossings (SVG).
        #[arg(long)]
        mark_neg_axis: bool,
        /// Overlay the -1/F(X) locus of this nonlinearity (SVG).
        #[arg(long)]
        nl: Option<PathBuf>,
        #[arg(long = "out", value_enum, default_value = "csv")]
        format: Format,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Closed-loop trajectory as CSV; the verdict goes to stderr as JSON.
    Simulate {
        nonlinearity: PathBuf,
        plant: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        x0: Vec<f64>,
        /// Defaults to 200 periods of the first crossover frequency.
        #[arg(long)]
        t_end: Option<f64>,
        /// Defaults to 1/400 of that period.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Lib(Error),
    Io(String),
    NoCrossover,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Descriptor(_)
        | Error::InvalidNonlinearity(_)
        | Error::InvalidGrid(_)
        | Error::InvalidPlant(_) => EXIT_INVALID,
        Error::InvalidSimulation(_) => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match output {
        Some(p) => fs::write(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

fn omega_bounds(range: &Option<Vec<f64>>) -> (f64, f64) {
    match range.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        _ => (DEFAULT_OMEGA_MIN, DEFAULT_OMEGA_MAX),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Df {
            nonlinearity,
            grid,
            mode,
            format,
            output,
        } => {
            let nl = read_nonlinearity(&nonlinearity)?;
            let grid = match grid.as_deref() {
                Some([dx, xm]) => uniform_grid(*dx, *xm),
                _ => default_grid(&nl),
            };
            if grid.is_empty() {
                return Err(Error::InvalidGrid("grid is empty; need 0 < dX <= Xm".into()).into());
            }
            let curves = match mode {
                Mode::Exact => vec![("F", df_exact(&nl, &grid)?)],
                Mode::Qualitative => vec![("F", df_qualitative(&nl, &grid)?)],
                Mode::Oracle => vec![("F", df_oracle_curve(&nl, &grid)?)],
                Mode::Both => vec![
                    ("F_exact", df_exact(&nl, &grid)?),
                    ("F_qualitative", df_qualitative(&nl, &grid)?),
                ],
            };
            let bytes = match format {
                Format::Csv => {
                    let cols: Vec<(&str, &[f64])> =
                        curves.iter().map(|(n, c)| (*n, c.values())).collect();
                    let mut buf = Vec::new();
                    write_columns(&mut buf, "X", &grid, &cols)?;
                    buf
                }
                Format::Svg => {
                    let mut plot = Plot::new("Describing function", "X", "F(X)");
                    for (_, c) in &curves {
                        let style = match c.provenance() {
                            dfkit::Provenance::Qualitative => LineStyle::Dashed,
                            _ => LineStyle::Solid,
                        };
                        plot = plot.line(&c.provenance().to_string(), c.iter().collect(), style);
                    }
                    plot.render().into_bytes()
                }
            };
            emit(output.as_deref(), &bytes)?;
        }
        Command::Analyze {
            nonlinearity,
            plant,
            simulate,
            qualitative,
            unstable_ellipses,
            omega_range,
            out,
        } => {
            let nl = read_nonlinearity(&nonlinearity)?;
            let plant = read_plant(&plant)?;
            let (omega_min, omega_max) = omega_bounds(&omega_range);
            let opts = AnalysisOptions {
                qualitative,
                simulate,
                unstable_ellipses,
                omega_min,
                omega_max,
            };
            let report = analyze(&nl, &plant, &opts)?;
            let mut json = report.to_json();
            json.push('\n');
            emit(out.as_deref(), json.as_bytes())?;
            if !report.has_crossover() {
                return Err(Failure::NoCrossover);
            }
        }
        Command::Nyquist {
            plant,
            omega_range,
            points,
            gains,
            mark_neg_axis,
            nl,
            format,
            output,
        } => {
            let plant = read_plant(&plant)?;
            let nl = nl.map(read_nonlinearity).transpose()?;
            let (lo, hi) = omega_bounds(&omega_range);
            if !(lo > 0.0 && hi > lo) || points < 2 {
                return Err(Error::InvalidGrid(format!(
                    "need 0 < MIN < MAX and at least 2 points, got [{lo}, {hi}], {points}"
                ))
                .into());
            }
            let grid = dfkit::log_grid(lo, hi, points);
            let gains = if gains.is_empty() {
                vec![plant.gain()]
            } else {
                gains
            };
            let family = gains
                .iter()
                .map(|&k| Ok((k, plant.with_gain(k).nyquist_samples(&grid)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            let bytes = match format {
                Format::Csv => {
                    if mark_neg_axis || nl.is_some() {
                        warn!("--mark-neg-axis and --nl only affect SVG output");
                    }
                    let mut buf = Vec::new();
                    if family.len() == 1 {
                        write_nyquist(&mut buf, &family[0].1)?;
                    } else {
                        write_nyquist_family(&mut buf, &family)?;
                    }
                    buf
                }
                Format::Svg => {
                    let mut plot = Plot::new("Nyquist diagram", "Re G(jw)", "Im G(jw)");
                    for (k, pts) in &family {
                        plot = plot.line(
                            &format!("k = {k}"),
                            pts.iter().map(|p| (p.re, p.im)).collect(),
                            LineStyle::Solid,
                        );
                    }
                    let re_min = family
                        .iter()
                        .flat_map(|(_, p)| p.iter().map(|q| q.re))
                        .fold(0.0, f64::min);
                    if let Some(nl) = &nl {
                        let df = describing_function(nl, false)?;
                        let (a, b) = df.search_range();
                        let locus: Vec<(f64, f64)> = dfkit::log_grid(a, b, 2000)
                            .into_iter()
                            .filter_map(|x| df.value(x).ok())
                            .filter(|f| *f > 0.0 && -1.0 / f >= re_min)
                            .map(|f| (-1.0 / f, 0.0))
                            .collect();
                        plot = plot.line("-1/F(X)", locus, LineStyle::Dashed);
                    }
                    if mark_neg_axis {
                        for (k, _) in &family {
                            for c in plant.with_gain(*k).phase_crossovers(lo, hi)? {
                                plot = plot.marker(
                                    -1.0 / c.gain_margin,
                                    0.0,
                                    &format!("w = {:.4}", c.omega),
                                );
                            }
                        }
                    }
                    plot.render().into_bytes()
                }
            };
            emit(output.as_deref(), &bytes)?;
        }
        Command::Simulate {
            nonlinearity,
            plant,
            x0,
            t_end,
            dt,
            output,
        } => {
            let nl = read_nonlinearity(&nonlinearity)?;
            let plant = read_plant(&plant)?;
            let mut cfg = match (t_end, dt) {
                (Some(t), Some(h)) => SimConfig::new(t, h),
                _ => {
                    let c = plant.phase_crossovers(DEFAULT_OMEGA_MIN, DEFAULT_OMEGA_MAX)?;
                    let w = c.first().map(|c| c.omega).ok_or_else(|| {
                        Error::InvalidSimulation(
                            "no phase crossover to derive defaults from; pass --t-end and --dt"
                                .into(),
                        )
                    })?;
                    SimConfig::for_frequency(w)
                }
            };
            if let Some(t) = t_end {
                cfg.t_end = t;
            }
            if let Some(h) = dt {
                cfg.dt = h;
            }
            let r = simulate_with(&plant, &nl, &x0, &cfg)?;
            let mut buf = Vec::new();
            write_trajectory(&mut buf, &r)?;
            emit(output.as_deref(), &buf)?;
            eprintln!(
                "{}",
                serde_json::to_string(&r.verdict).expect("verdict serializes")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NoCrossover) => {
            eprintln!("dfkit: plant has no phase crossover in the frequency range");
            ExitCode::from(EXIT_NO_CROSSOVER)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("dfkit: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(e)) => {
            eprintln!("dfkit: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
