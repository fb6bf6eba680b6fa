use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nearmin_core::dyadic::{lp_norm, Grid, Signal};
use nearmin_core::muckenhoupt::{ap_characteristic, doubling_constant, power_weight, WEIGHT_CENTER};
use nearmin_core::singular::SingularOperator;
use nearmin_core::stabilizer::{stabilize_unweighted, stabilize_weighted_with, StabilizerOptions};
use nearmin_core::wavelet::{ProjectionSpec, WaveletBasis, WaveletFamily};
use nearmin_core::{io, wavelet_good_part};
use nearmin_harness::baselines::BaselineStore;
use nearmin_harness::config::ExperimentConfig;
use nearmin_harness::corpus::random_projection;
use nearmin_harness::report::{self, SummaryFile};
use nearmin_harness::suites::Suite;
use serde_json::json;

const WORKERS_ENV: &str = "NEARMIN_WORKERS";

#[derive(Parser)]
#[command(name = "nearmin", version, about = "Stable near-minimizers on dyadic grids")]
struct Cli {
    /// Worker threads for case-parallel runs.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stopping-time and wavelet decomposition of one signal.
    Decompose {
        #[command(flatten)]
        input: SignalInput,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "haar")]
        family: WaveletFamily,
        /// Write the good part here (CSV, one value per line).
        #[arg(long)]
        good_out: Option<PathBuf>,
    },
    /// Stabilized near-minimizer of one signal at radius `s`.
    Stabilize {
        #[command(flatten)]
        input: SignalInput,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value = "haar")]
        family: WaveletFamily,
        /// Keep each wavelet index with this probability instead of the full span.
        #[arg(long)]
        density: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the Hilbert transform with power weights `|x - c|^beta` instead of a projection.
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        w_beta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        v_beta: f64,
        #[arg(long)]
        dilation: Option<u32>,
        /// Write the near-minimizer here (CSV).
        #[arg(long)]
        u_out: Option<PathBuf>,
    },
    /// Run experiment suites and write CSV, plot data and summary.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Suites to run; all when omitted.
        #[arg(long)]
        suite: Vec<Suite>,
        /// Baseline store to check the summary constants against.
        #[arg(long)]
        baselines: Option<PathBuf>,
        /// Output directory, overriding the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Muckenhoupt characteristic of a power weight.
    Weights {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        level: u32,
        /// Also take the sup over shifted dyadic intervals.
        #[arg(long)]
        shifted: bool,
    },
    /// Recompute the rows of one case and compare them with a results CSV.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        suite: Suite,
        #[arg(long)]
        case: u64,
        /// Directory holding the CSV; the configured output directory by default.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Run every suite and store the observed constants times the safety margin.
    RecordBaselines {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args)]
struct SignalInput {
    /// Signal file: `.bin` (self-describing) or `.csv` (one value per line).
    #[arg(long)]
    input: PathBuf,
    /// Domain of a CSV signal.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    origin: f64,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
}

impl SignalInput {
    fn load(&self) -> Result<Signal> {
        let path = &self.input;
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if !is_csv {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            return Ok(io::read_binary(std::io::BufReader::new(file))?);
        }
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let n = text.lines().filter(|l| !l.trim().is_empty()).count();
        if !n.is_power_of_two() {
            bail!("{}: {n} values is not a power of two", path.display());
        }
        let grid = Grid::new(n.trailing_zeros(), self.origin, self.length)?;
        Ok(io::read_csv(grid, text.as_bytes())?)
    }
}

fn write_signal(path: &Path, signal: &Signal) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let out = std::io::BufWriter::new(file);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        io::write_csv(signal, out)?;
    } else {
        io::write_binary(signal, out)?;
    }
    Ok(())
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn decompose(input: &SignalInput, lambda: f64, family: WaveletFamily, good_out: Option<&Path>) -> Result<bool> {
    let f = input.load()?;
    let basis = WaveletBasis::new(family, *f.grid());
    let cz = wavelet_good_part(&f, lambda, &basis)?;
    if let Some(path) = good_out {
        write_signal(path, &cz.good)?;
    }
    print_json(&json!({
        "lambda": lambda,
        "family": family,
        "selected": cz.stop.selected,
        "selected_measure": cz.stop.selected_measure(),
        "saturated": cz.stop.saturated,
        "f_l1": f.l1(),
        "good_sup": cz.good.max_abs(),
        "good_l2": cz.good.l2(),
        "bad_l1": cz.bad.l1(),
    }))?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn stabilize(
    input: &SignalInput,
    s: f64,
    p: f64,
    family: WaveletFamily,
    density: Option<f64>,
    seed: u64,
    weighted: Option<(f64, f64)>,
    dilation: Option<u32>,
    u_out: Option<&Path>,
) -> Result<bool> {
    let f = input.load()?;
    let grid = *f.grid();
    let report = match weighted {
        Some((w_beta, v_beta)) => {
            let center = grid.origin() + WEIGHT_CENTER * grid.length();
            let w = power_weight(w_beta, center, grid)?;
            let v = power_weight(v_beta, center, grid)?;
            let options = StabilizerOptions {
                dilation: dilation.unwrap_or(nearmin_core::stabilizer::WEIGHTED_DILATION),
                ..StabilizerOptions::default()
            };
            stabilize_weighted_with(&f, s, p, &SingularOperator::hilbert(grid), &w, &v, options)?
        }
        None => {
            let basis = WaveletBasis::new(family, grid);
            let spec = match density {
                Some(d) => random_projection(&basis, seed, d),
                None => ProjectionSpec::full(&basis),
            };
            let options = StabilizerOptions { dilation: dilation.unwrap_or(nearmin_core::stabilizer::DEFAULT_DILATION), ..StabilizerOptions::default() };
            stabilize_unweighted(&f, s, p, &spec, &basis, options)?
        }
    };
    if let Some(path) = u_out {
        write_signal(path, &report.u)?;
    }
    print_json(&json!({
        "report": report,
        "f_lp": lp_norm(&f, p, None)?,
    }))?;
    Ok(true)
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::load(path)?)
}

fn selected_suites(requested: &[Suite]) -> Vec<Suite> {
    if requested.is_empty() {
        Suite::ALL.to_vec()
    } else {
        requested.to_vec()
    }
}

fn sweep(config: &Path, suites: &[Suite], baselines: Option<&Path>, out: Option<&Path>) -> Result<bool> {
    let cfg = load_config(config)?;
    let hash = cfg.hash();
    let store = baselines.map(BaselineStore::load).transpose()?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let results = nearmin_harness::run(&cfg, &selected_suites(suites))?;
    let violations = match &store {
        Some(store) => store.check(&hash, results.iter().map(|(_, s)| s))?,
        None => Vec::new(),
    };
    let mut passed = violations.is_empty();
    for (table, summary) in &results {
        report::write_csv(table, &dir)?;
        report::write_plot(table, &dir)?;
        for check in &summary.checks {
            let verdict = if check.passed() { "PASS" } else { "FAIL" };
            println!("{verdict} {}.{}: {} of {} violate", table.suite, check.name, check.violations, check.total);
        }
        passed &= summary.passed();
    }
    for v in &violations {
        println!("FAIL baseline {}: observed {} exceeds {}", v.name, v.observed, v.baseline);
    }
    if store.is_some() && violations.is_empty() {
        println!("PASS baselines");
    }
    let file = SummaryFile {
        config_hash: &hash,
        suites: results.iter().map(|(t, s)| (t.suite.name(), s)).collect(),
        baseline_violations: &violations,
        passed,
    };
    let path = report::write_summary(&dir, &file)?;
    eprintln!("wrote {}", path.display());
    Ok(passed)
}

fn weights(beta: f64, p: f64, level: u32, shifted: bool) -> Result<bool> {
    let grid = Grid::unit(level)?;
    let w = power_weight(beta, WEIGHT_CENTER, grid)?;
    let report = ap_characteristic(&w, p, shifted)?;
    print_json(&json!({
        "beta": beta,
        "level": level,
        "report": report,
        "growth": report.growth(),
        "doubling": doubling_constant(&w),
    }))?;
    Ok(true)
}

fn replay(config: &Path, suite: Suite, case: u64, results: Option<&Path>) -> Result<bool> {
    let cfg = load_config(config)?;
    let dir = results.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    let csv = report::csv_path(&dir, suite.name());
    let (rows, mismatches) = nearmin_harness::replay(&cfg, suite, case, &csv)?;
    for m in &mismatches {
        println!("MISMATCH row {} {}: recorded {} recomputed {}", m.row, m.column, m.recorded, m.recomputed);
    }
    if mismatches.is_empty() {
        println!("OK {suite} case {case}: {rows} rows reproduced within {}", nearmin_harness::REPLAY_TOLERANCE);
    }
    Ok(mismatches.is_empty())
}

fn record_baselines(config: &Path, out: &Path, force: bool) -> Result<bool> {
    if out.exists() && !force {
        bail!("{} already exists; pass --force to overwrite", out.display());
    }
    let cfg = load_config(config)?;
    let results = nearmin_harness::run(&cfg, &Suite::ALL)?;
    let store = BaselineStore::from_summaries(&cfg.hash(), results.iter().map(|(_, s)| s));
    if let Some(archived) = store.save(out, force)? {
        eprintln!("archived previous store as {}", archived.display());
    }
    for (name, value) in &store.constants {
        println!("{name} = {value}");
    }
    eprintln!("wrote {}", out.display());
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    match cli.command {
        Command::Decompose { input, lambda, family, good_out } => decompose(&input, lambda, family, good_out.as_deref()),
        Command::Stabilize { input, s, p, family, density, seed, weighted, w_beta, v_beta, dilation, u_out } => {
            let weights = weighted.then_some((w_beta, v_beta));
            stabilize(&input, s, p, family, density, seed, weights, dilation, u_out.as_deref())
        }
        Command::Sweep { config, suite, baselines, out } => sweep(&config, &suite, baselines.as_deref(), out.as_deref()),
        Command::Weights { beta, p, level, shifted } => weights(beta, p, level, shifted),
        Command::Replay { config, suite, case, results } => replay(&config, suite, case, results.as_deref()),
        Command::RecordBaselines { config, out, force } => record_baselines(&config, &out, force),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
