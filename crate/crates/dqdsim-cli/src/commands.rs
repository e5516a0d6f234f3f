use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dqdsim::analysis::{fft_peak, fit_decay, fit_gap_model, fit_lz, CiMethod, FitOptions, GapModel, GapPoint};
use dqdsim::dynamics::{compile, evolve, EvolveOptions, Segment};
use dqdsim::experiments::{
    gap_curve, lz_single_passage, EsrMap, EsrProtocol, ExchangeMap, ExchangeProtocol, Experiment, FunnelProtocol,
    LzsMap, LzsProtocol, PTMap, SpinFunnel,
};
use dqdsim::model::{Basis, DeviceParams, Pair};
use dqdsim::noise::shot_average;
use dqdsim::readout::{histogram, optimal_threshold, simulate_shots, visibility, Mode, Outcome};

use crate::manifest::{self, InputFile, RunManifest, Versions};
use crate::quantity::{self, Kind};
use crate::range::{parse_log_range, parse_range};
use crate::{config, schedule, CliError};

/// Two-electron double-dot simulator.
///
/// Grids use start:stop:count with both ends included; ε in µeV, B in mT, τ in ns,
/// carrier frequency in GHz, level velocity in Hz/s. Threads follow RAYON_NUM_THREADS.
#[derive(Debug, Parser)]
#[command(name = "dqdsim", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// CSV (or text, for fits) output file.
    #[arg(long)]
    out: PathBuf,
    /// Manifest path [default: <out>.manifest.json].
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Shots {
    /// Single-shot outcomes per cell; 0 reports the probabilities themselves.
    #[arg(long, default_value_t = 0)]
    shots: u64,
    /// Master seed; required whenever shots are drawn.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct Grid2 {
    /// Device configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Detuning grid, µeV.
    #[arg(long, allow_hyphen_values = true)]
    eps: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PairArg {
    /// Hybridized singlet and T0.
    #[value(name = "s-t0")]
    ST0,
    /// Hybridized singlet and the field-polarized triplet.
    #[value(name = "s-tpol")]
    STpol,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Standard,
    Latched,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitKind {
    /// Columns: velocity [Hz/s], triplet probability.
    Lz,
    /// Columns: τ [ns], triplet probability.
    Decay,
    /// Columns: ε [µeV], B [mT], gap [GHz], optional σ [GHz]; needs --config as prior.
    Gap,
    /// Columns: t [ns], signal. Reports the dominant frequency.
    Fft,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GapModelArg {
    Decaying,
    Constant,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Triplet probability over detuning and applied field.
    Funnel {
        #[command(flatten)]
        grid: Grid2,
        /// Field grid, mT.
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long, default_value = "50ns")]
        dwell: String,
        #[command(flatten)]
        shots: Shots,
        #[command(flatten)]
        output: Output,
    },
    /// Single-passage triplet probability over level velocity.
    Lz {
        #[arg(long)]
        config: PathBuf,
        /// Velocity grid, Hz/s.
        #[arg(long)]
        nu: String,
        /// Space the velocity grid geometrically.
        #[arg(long)]
        log: bool,
        /// Applied field [default: the config's b0z].
        #[arg(long, allow_hyphen_values = true)]
        field: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Interference map over detuning and dwell time after a half-transfer passage.
    Lzs {
        #[command(flatten)]
        grid: Grid2,
        /// Dwell grid, ns.
        #[arg(long)]
        tau: String,
        #[command(flatten)]
        shots: Shots,
        #[command(flatten)]
        output: Output,
    },
    /// Exchange oscillations over detuning and dwell time.
    Exchange {
        #[command(flatten)]
        grid: Grid2,
        /// Dwell grid, ns.
        #[arg(long)]
        tau: String,
        #[command(flatten)]
        shots: Shots,
        #[command(flatten)]
        output: Output,
    },
    /// Spin resonance over detuning and carrier frequency.
    Esr {
        #[command(flatten)]
        grid: Grid2,
        /// Carrier grid, GHz.
        #[arg(long)]
        freq: String,
        #[arg(long, default_value = "25000ns")]
        duration: String,
        /// Rabi frequency.
        #[arg(long, default_value = "0.02MHz")]
        amp: String,
        #[command(flatten)]
        shots: Shots,
        #[command(flatten)]
        output: Output,
    },
    /// Exact level splitting over detuning.
    Gap {
        #[command(flatten)]
        grid: Grid2,
        #[arg(long, value_enum, default_value = "s-t0")]
        pair: PairArg,
        #[command(flatten)]
        output: Output,
    },
    /// Sensor current histogram of simulated single shots.
    Readout {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "latched")]
        mode: ModeArg,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Fraction of shots prepared as triplets.
        #[arg(long, default_value_t = 0.5)]
        triplet_fraction: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Fits a model to a CSV table and writes key = value results.
    Fit {
        #[arg(value_enum)]
        kind: FitKind,
        #[arg(long)]
        input: PathBuf,
        /// Prior device for gap fits.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "decaying")]
        model: GapModelArg,
        /// Bootstrap repetitions instead of linearized intervals.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Residual table.
        #[arg(long)]
        residuals: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Integrates a schedule file and writes level populations over time.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        /// Approximate row count of the output table; every segment end is also included.
        #[arg(long, default_value_t = 1001)]
        points: usize,
        #[command(flatten)]
        output: Output,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Funnel { .. } => "funnel",
            Command::Lz { .. } => "lz",
            Command::Lzs { .. } => "lzs",
            Command::Exchange { .. } => "exchange",
            Command::Esr { .. } => "esr",
            Command::Gap { .. } => "gap",
            Command::Readout { .. } => "readout",
            Command::Fit { .. } => "fit",
            Command::Evolve { .. } => "evolve",
        }
    }

    fn output(&self) -> &Output {
        match self {
            Command::Funnel { output, .. }
            | Command::Lz { output, .. }
            | Command::Lzs { output, .. }
            | Command::Exchange { output, .. }
            | Command::Esr { output, .. }
            | Command::Gap { output, .. }
            | Command::Readout { output, .. }
            | Command::Fit { output, .. }
            | Command::Evolve { output, .. } => output,
        }
    }
}

/// Inputs read so far, for the manifest.
#[derive(Default)]
struct Run {
    inputs: Vec<InputFile>,
    config_sha256: Option<String>,
    seed: Option<u64>,
    outputs: Vec<PathBuf>,
    status: Option<CliError>,
}

impl Run {
    fn read(&mut self, role: &'static str, path: &Path) -> Result<String, CliError> {
        let bytes = manifest::read(path)?;
        let hash = manifest::sha256_hex(&bytes);
        if role == "config" {
            self.config_sha256 = Some(hash.clone());
        }
        self.inputs.push(InputFile { role, path: path.display().to_string(), sha256: hash });
        String::from_utf8(bytes).map_err(|_| CliError::Input { path: path.to_path_buf(), message: "not UTF-8 text".into() })
    }

    fn device(&mut self, path: &Path) -> Result<DeviceParams, CliError> {
        let text = self.read("config", path)?;
        config::parse_device_config(&text).map_err(|source| CliError::Config { path: path.to_path_buf(), source })
    }

    fn emit(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        manifest::write(path, contents.as_bytes())?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }
}

fn grid(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    parse_range(text).map_err(|e| CliError::Usage(format!("--{what}: {e}")))
}

fn value(text: &str, kind: Kind, what: &str) -> Result<f64, CliError> {
    quantity::parse(text, kind).map_err(|e| CliError::Usage(format!("--{what}: {e}")))
}

/// The map itself, or its shot average when shots are requested.
fn sampled(run: &mut Run, exp: &dyn Experiment, shots: &Shots) -> Result<PTMap, CliError> {
    if shots.shots == 0 {
        return Ok(exp.map()?);
    }
    let seed = shots.seed.ok_or_else(|| CliError::Usage("--seed is required when --shots is set".into()))?;
    run.seed = Some(seed);
    Ok(shot_average(exp, shots.shots, seed)?)
}

fn read_table(run: &mut Run, path: &Path, min_cols: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let text = run.read("input", path)?;
    let bad = |message: String| CliError::Input { path: path.to_path_buf(), message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad(format!("row {}: `{f}` is not a number", k + 2))))
            .collect::<Result<_, _>>()?;
        if row.len() < min_cols {
            return Err(bad(format!("row {} has {} columns, need {min_cols}", k + 2, row.len())));
        }
        rows.push(row);
    }
    let total = rows.len();
    rows.retain(|r| r.iter().all(|v| v.is_finite()));
    if rows.len() < total {
        eprintln!("warning: {}: ignored {} rows with non-finite values", path.display(), total - rows.len());
    }
    Ok(rows)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

pub(crate) fn execute(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let mut run = Run::default();
    dispatch(&cli.command, &mut run)?;
    let out = cli.command.output();
    let manifest_path = out.manifest.clone().unwrap_or_else(|| manifest::default_path(&out.out));
    let record = RunManifest {
        command: cli.command.name().into(),
        argv: std::env::args().collect(),
        inputs: std::mem::take(&mut run.inputs),
        config_sha256: run.config_sha256.clone(),
        seed: run.seed,
        versions: Versions::current(),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: run.outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let json = serde_json::to_string_pretty(&record).expect("manifest serializes");
    manifest::write(&manifest_path, format!("{json}\n").as_bytes())?;
    match run.status.take() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn dispatch(command: &Command, run: &mut Run) -> Result<(), CliError> {
    let out = &command.output().out;
    match command {
        Command::Funnel { grid: g, b, dwell, shots, .. } => {
            let params = run.device(&g.config)?;
            let exp = SpinFunnel::new(&params, &grid(&g.eps, "eps")?, &grid(b, "b")?, value(dwell, Kind::Time, "dwell")?, FunnelProtocol::default())?;
            let map = sampled(run, &exp, shots)?;
            run.emit(out, &map.to_csv())
        }
        Command::Lz { config, nu, log, field, .. } => {
            let params = run.device(config)?;
            let nu = if *log { parse_log_range(nu) } else { parse_range(nu) }.map_err(|e| CliError::Usage(format!("--nu: {e}")))?;
            let b = field.as_deref().map(|f| value(f, Kind::Field, "field")).transpose()?.unwrap_or(params.b0z);
            let curve = lz_single_passage(&params, &nu, b)?;
            for w in &curve.metadata.warnings {
                eprintln!("warning: {w}");
            }
            run.emit(out, &curve.to_csv())
        }
        Command::Lzs { grid: g, tau, shots, .. } => {
            let params = run.device(&g.config)?;
            let exp = LzsMap::new(&params, &grid(&g.eps, "eps")?, &grid(tau, "tau")?, LzsProtocol::default())?;
            let map = sampled(run, &exp, shots)?;
            run.emit(out, &map.to_csv())
        }
        Command::Exchange { grid: g, tau, shots, .. } => {
            let params = run.device(&g.config)?;
            let exp = ExchangeMap::new(&params, &grid(&g.eps, "eps")?, &grid(tau, "tau")?, ExchangeProtocol::default())?;
            for w in exp.warnings() {
                eprintln!("warning: {w}");
            }
            let map = sampled(run, &exp, shots)?;
            run.emit(out, &map.to_csv())
        }
        Command::Esr { grid: g, freq, duration, amp, shots, .. } => {
            let params = run.device(&g.config)?;
            let pulse = Segment::drive(
                0.0,
                value(duration, Kind::Time, "duration")?,
                dqdsim::dynamics::Drive { freq: 0.0, amp: value(amp, Kind::Coupling, "amp")?, phase: 0.0 },
            );
            let exp = EsrMap::new(&params, &grid(&g.eps, "eps")?, &grid(freq, "freq")?, &pulse, EsrProtocol::default())?;
            let map = sampled(run, &exp, shots)?;
            run.emit(out, &map.to_csv())
        }
        Command::Gap { grid: g, pair, .. } => {
            let params = run.device(&g.config)?;
            let pair = match pair {
                PairArg::ST0 => Pair::SingletT0,
                PairArg::STpol => Pair::SingletTMinus,
            };
            run.emit(out, &gap_curve(&params, &grid(&g.eps, "eps")?, pair)?.to_csv())
        }
        Command::Readout { config, shots, seed, mode, bins, triplet_fraction, .. } => {
            let params = run.device(config)?;
            if !(0.0..=1.0).contains(triplet_fraction) {
                return Err(CliError::Usage("--triplet-fraction must lie in [0, 1]".into()));
            }
            run.seed = Some(*seed);
            let mode = match mode {
                ModeArg::Standard => Mode::Standard,
                ModeArg::Latched => Mode::Latched,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let outcomes: Vec<Outcome> = (0..*shots)
                .map(|_| if rng.random::<f64>() < *triplet_fraction { Outcome::Triplet } else { Outcome::Singlet })
                .collect();
            let records = simulate_shots(outcomes, mode, &params.sensor, &mut rng);
            let currents: Vec<f64> = records.iter().map(|r| r.current).collect();
            run.emit(out, &histogram(&currents, *bins)?.to_csv())?;
            if let Ok(v) = visibility(&records) {
                println!("visibility = {}", v.visibility);
            }
            println!("f_m = {}", optimal_threshold(&params.sensor, mode).f_m);
            Ok(())
        }
        Command::Fit { kind, input, config, model, bootstrap, seed, residuals, .. } => {
            let ci = match bootstrap {
                Some(reps) => {
                    let seed = seed.ok_or_else(|| CliError::Usage("--seed is required with --bootstrap".into()))?;
                    run.seed = Some(seed);
                    CiMethod::Bootstrap { reps: *reps, seed }
                }
                None => CiMethod::Linearized,
            };
            let opts = FitOptions { ci, seed: seed.unwrap_or(0), ..FitOptions::default() };
            let (text, fit_residuals, x) = match kind {
                FitKind::Lz => {
                    let rows = read_table(run, input, 2)?;
                    let x = column(&rows, 0);
                    let fit = fit_lz(&x, &column(&rows, 1), &opts)?;
                    (fit.to_text(), Some(fit), x)
                }
                FitKind::Decay => {
                    let rows = read_table(run, input, 2)?;
                    let x = column(&rows, 0);
                    let fit = fit_decay(&x, &column(&rows, 1), &opts)?;
                    (fit.to_text(), Some(fit.fit), x)
                }
                FitKind::Gap => {
                    let path = config.as_ref().ok_or_else(|| CliError::Usage("gap fits need --config for the prior".into()))?;
                    let prior = run.device(path)?;
                    let rows = read_table(run, input, 3)?;
                    let data: Vec<GapPoint> = rows
                        .iter()
                        .map(|r| GapPoint { eps: r[0], b0z: r[1], gap: r[2], sigma: r.get(3).copied() })
                        .collect();
                    let model = match model {
                        GapModelArg::Decaying => GapModel::Decaying,
                        GapModelArg::Constant => GapModel::ConstantTc,
                    };
                    let fit = fit_gap_model(&data, &prior, model, &opts)?;
                    (fit.to_text(), Some(fit), column(&rows, 0))
                }
                FitKind::Fft => {
                    let rows = read_table(run, input, 2)?;
                    let t = column(&rows, 0);
                    if t.len() < 2 {
                        return Err(CliError::Input { path: input.clone(), message: "need at least 2 samples".into() });
                    }
                    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
                    let text = match fft_peak(&column(&rows, 1), dt)? {
                        Some(p) => format!("present = true\nfrequency = {:e}\nuncertainty = {:e}\nmagnitude = {:e}\n", p.frequency, p.uncertainty, p.magnitude),
                        None => "present = false\n".to_string(),
                    };
                    (text, None, t)
                }
            };
            run.emit(out, &text)?;
            if let (Some(path), Some(fit)) = (residuals, &fit_residuals) {
                run.emit(path, &fit.residuals_csv(&x))?;
            }
            if fit_residuals.as_ref().is_some_and(|f| !f.converged) {
                run.status = Some(CliError::Numeric("fit did not converge".into()));
            }
            Ok(())
        }
        Command::Evolve { config, schedule: path, points, .. } => {
            let params = run.device(config)?;
            let text = run.read("schedule", path)?;
            let sched = schedule::parse_schedule(&text).map_err(|source| CliError::Schedule { path: path.clone(), source })?;
            let base = EvolveOptions::default();
            let steps = compile(&sched, &params, &base)?.total_steps();
            let stride = steps.div_ceil((*points).max(2) as u64 - 1).max(1);
            let opts = EvolveOptions { record_trajectory: true, trajectory_stride: stride, ..base };
            let evo = evolve(&sched, &params, &opts)?;
            let mut csv = String::from("t [ns],eps [ueV]");
            for label in Basis::Full5.labels() {
                let _ = write!(csv, ",P_{label}");
            }
            csv.push('\n');
            for p in evo.trajectory.unwrap_or_default() {
                let _ = write!(csv, "{},{}", p.t, p.eps);
                for pop in p.state.populations() {
                    let _ = write!(csv, ",{pop}");
                }
                csv.push('\n');
            }
            run.emit(out, &csv)
        }
    }
}
