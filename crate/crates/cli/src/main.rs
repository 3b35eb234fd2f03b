//! Command-line front end for subspace filtering of powder XRD profiles.

mod error;
mod io;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xrdenoise_core::estimator::{EstimationReport, HlsvdPipeline};
use xrdenoise_core::grid::AngularGrid;
use xrdenoise_core::montecarlo::{run_performance_table, run_sensitivity_table, BenchConfig};
use xrdenoise_core::noise::{nsr, poissonize, NoiseSpec, NsrMode};
use xrdenoise_core::order::{
    scan_from_pipeline, select_order, OrderPolicy, OrderScan, DEFAULT_MIN_GAP, DEFAULT_SCAN_ORDER,
};
use xrdenoise_core::svd::LanczosOptions;
use xrdenoise_core::synth::{total_intensity, SampleSpec};

use error::CliError;
use io::{read_profile, write_profile, write_series, write_svg_scatter, AngleUnit};

#[derive(Parser)]
#[command(
    name = "xrdenoise",
    about = "Subspace filtering of powder X-ray diffraction intensity profiles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    Degrees,
    Radians,
}

impl From<UnitArg> for AngleUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Degrees => AngleUnit::Degrees,
            UnitArg::Radians => AngleUnit::Radians,
        }
    }
}

#[derive(Args)]
struct UnitOpt {
    /// Angle unit used in profile files.
    #[arg(long, value_enum, default_value = "degrees")]
    units: UnitArg,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a noiseless synthetic profile from a sample config.
    Synth {
        /// Sample specification (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        unit: UnitOpt,
    },
    /// Draw a Poisson realization of a profile.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        /// Intensity scaling factor applied before drawing.
        #[arg(long = "F")]
        factor: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        unit: UnitOpt,
    },
    /// Filter a profile at a fixed or automatically selected order.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        /// Model order (number of damped sinusoids).
        #[arg(long = "K")]
        order: Option<usize>,
        /// Select the order from the singular-value/frequency scan.
        #[arg(long)]
        auto: bool,
        /// Scan order for --auto.
        #[arg(long, default_value_t = DEFAULT_SCAN_ORDER)]
        kmax: usize,
        /// Minimum log10 gap (decades) accepted as a transition.
        #[arg(long, default_value_t = DEFAULT_MIN_GAP)]
        gap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write the estimated model and diagnostics as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        unit: UnitOpt,
    },
    /// Emit the singular-value vs frequency scan of a profile.
    Order {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SCAN_ORDER)]
        kmax: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_GAP)]
        gap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also render a static log-scale scatter of the scan.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        unit: UnitOpt,
    },
    /// Print the noise-to-signal ratio of a profile.
    Nsr {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "deterministic")]
        mode: NsrModeArg,
        #[command(flatten)]
        unit: UnitOpt,
    },
    /// Run the Monte Carlo filter-performance experiments.
    Bench {
        /// Bench configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the CSV and text tables.
        #[arg(long)]
        out: PathBuf,
        /// Override the master seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NsrModeArg {
    Deterministic,
    Realization,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("xrdenoise: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    grid: &'a AngularGrid,
    selected_order: usize,
    report: &'a EstimationReport,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { config, out, unit } => {
            let spec = load_sample_spec(&config)?;
            let profile = total_intensity(&spec)?;
            write_profile(
                &out,
                &profile,
                unit.units.into(),
                &[format!(
                    "xrdenoise synth: noiseless Debye profile ({} samples)",
                    profile.len()
                )],
            )
        }
        Command::Noise {
            input,
            factor,
            seed,
            out,
            unit,
        } => {
            if !(factor > 0.0) {
                return Err(CliError::Usage(format!(
                    "--F must be positive, got {factor}"
                )));
            }
            let u: AngleUnit = unit.units.into();
            let profile = read_profile(&input, u)?;
            let noisy = poissonize(
                &profile,
                &NoiseSpec {
                    scale: factor,
                    seed,
                },
            )?;
            write_profile(
                &out,
                &noisy,
                u,
                &[format!("xrdenoise noise: F={factor} seed={seed}")],
            )
        }
        Command::Filter {
            input,
            order,
            auto,
            kmax,
            gap,
            seed,
            out,
            report,
            unit,
        } => {
            let u: AngleUnit = unit.units.into();
            let profile = read_profile(&input, u)?;
            let opts = LanczosOptions {
                seed,
                ..Default::default()
            };
            let (k, pipeline) = match (order, auto) {
                (Some(_), true) | (None, false) => {
                    return Err(CliError::Usage(
                        "pass exactly one of --K <order> or --auto".into(),
                    ));
                }
                (Some(k), false) => {
                    if k == 0 {
                        return Err(CliError::Usage("--K must be at least 1".into()));
                    }
                    (k, HlsvdPipeline::new(&profile, k, &opts)?)
                }
                (None, true) => {
                    let pipeline = HlsvdPipeline::new(&profile, kmax, &opts)?;
                    let scan = scan_from_pipeline(&pipeline, kmax)?;
                    let decision = select_order(
                        &scan,
                        OrderPolicy::Auto {
                            min_gap_decades: gap,
                        },
                    )?;
                    println!(
                        "selected K={} at f_cutoff={:.3} 1/rad (gap {:.2} decades)",
                        decision.k, decision.f_cutoff, decision.score
                    );
                    (decision.k, pipeline)
                }
            };
            let (filtered, est) = pipeline.filter_at(k)?;
            if let Some(report_path) = report {
                let payload = ReportFile {
                    grid: profile.grid(),
                    selected_order: k,
                    report: &est,
                };
                let json = serde_json::to_string_pretty(&payload)
                    .map_err(|e| CliError::Data(format!("report serialization: {e}")))?;
                fs::write(&report_path, json)
                    .map_err(|e| CliError::Data(format!("{}: {e}", report_path.display())))?;
            }
            write_profile(
                &out,
                &filtered,
                u,
                &[format!("xrdenoise filter: K={k} seed={seed}")],
            )
        }
        Command::Order {
            input,
            out,
            kmax,
            gap,
            seed,
            svg,
            unit,
        } => {
            let u: AngleUnit = unit.units.into();
            let profile = read_profile(&input, u)?;
            let opts = LanczosOptions {
                seed,
                ..Default::default()
            };
            let pipeline = HlsvdPipeline::new(&profile, kmax, &opts)?;
            let scan = scan_from_pipeline(&pipeline, kmax)?;
            let decision = select_order(
                &scan,
                OrderPolicy::Auto {
                    min_gap_decades: gap,
                },
            );
            let rows = scan_series(&scan);
            write_series(
                &out,
                &rows,
                &[
                    format!("xrdenoise order: scan order {kmax}, seed {seed}"),
                    "columns: frequency (1/rad), singular value".into(),
                ],
            )?;
            let cutoff = match &decision {
                Ok(d) => {
                    println!(
                        "selected K={} at f_cutoff={:.3} 1/rad (gap {:.2} decades)",
                        d.k, d.f_cutoff, d.score
                    );
                    Some(d.f_cutoff)
                }
                Err(e) => {
                    println!("no automatic selection: {e}");
                    None
                }
            };
            if let Some(svg_path) = svg {
                write_svg_scatter(
                    &svg_path,
                    &rows,
                    cutoff,
                    "singular values vs component frequency",
                )?;
            }
            Ok(())
        }
        Command::Nsr { input, mode, unit } => {
            let profile = read_profile(&input, unit.units.into())?;
            let mode = match mode {
                NsrModeArg::Deterministic => NsrMode::Deterministic,
                NsrModeArg::Realization => NsrMode::Realization,
            };
            let value = nsr(&profile, mode)?;
            println!("{value:.6}");
            Ok(())
        }
        Command::Bench { config, out, seed } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| CliError::Data(format!("{}: {e}", config.display())))?;
            let mut cfg: BenchConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", config.display())))?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            fs::create_dir_all(&out)
                .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;

            let table = run_performance_table(&cfg)?;
            fs::write(out.join("performance.csv"), table.to_csv())
                .map_err(|e| CliError::Data(e.to_string()))?;
            fs::write(out.join("performance.txt"), table.to_text())
                .map_err(|e| CliError::Data(e.to_string()))?;
            println!("{}", table.to_text());

            let sens = run_sensitivity_table(&cfg)?;
            fs::write(out.join("sensitivity.csv"), sens.to_csv())
                .map_err(|e| CliError::Data(e.to_string()))?;
            fs::write(out.join("sensitivity.txt"), sens.to_text())
                .map_err(|e| CliError::Data(e.to_string()))?;
            println!("{}", sens.to_text());
            Ok(())
        }
    }
}

fn load_sample_spec(path: &PathBuf) -> Result<SampleSpec, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let spec: SampleSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

/// One row per non-negative-frequency component: conjugate pairs appear
/// once, at |f|.
fn scan_series(scan: &OrderScan) -> Vec<(f64, f64)> {
    scan.entries
        .iter()
        .filter(|e| scan.report.model.components[e.component].frequency >= 0.0)
        .map(|e| (e.frequency, e.singular_value))
        .collect()
}
