//! `mimo`: simulation campaigns, analytic curves, cost tables, diagonal
//! distribution studies and channel decompositions from the command line.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use wrd_mimo::detect::DetectorId;
use wrd_mimo::linalg::{qrd, wrd, ComplexMatrix};
use wrd_mimo::modem::Constellation;
use wrd_mimo::sim::{
    emit_plot_data, load_config, result_to_json, run_dist_study, run_ho, run_so, DistConfig, PatternSpec,
    SimConfig, SimMode, SimResult,
};
use wrd_mimo::theory::{flop_model, CurveKind, TheoryCurve};
use wrd_mimo::MimoError;

#[derive(Parser)]
#[command(name = "mimo", version, about = "Punctured-channel MIMO detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign.
    Sim(SimArgs),
    /// Tabulate an analytic BER curve as CSV.
    Theory(TheoryArgs),
    /// Print the flop-savings table.
    Complexity(ComplexityArgs),
    /// Test the squared diagonals of R and the punctured R against chi-squared laws.
    Dist(DistArgs),
    /// Decompose a channel matrix read from JSON.
    Decomp(DecompArgs),
}

#[derive(Args)]
struct Grid {
    #[arg(long, allow_negative_numbers = true)]
    snr_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    snr_stop: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    snr_step: f64,
}

impl Grid {
    fn values(&self) -> Result<Option<Vec<f64>>, MimoError> {
        let (start, stop) = match (self.snr_start, self.snr_stop) {
            (None, None) => return Ok(None),
            (Some(a), None) => (a, a),
            (Some(a), Some(b)) => (a, b),
            (None, Some(_)) => return Err(MimoError::Config("--snr-stop needs --snr-start".into())),
        };
        if !(self.snr_step > 0.0) || stop < start {
            return Err(MimoError::Config("SNR grid needs step > 0 and stop >= start".into()));
        }
        let count = ((stop - start) / self.snr_step + 1e-9).floor() as usize + 1;
        Ok(Some((0..count).map(|k| start + k as f64 * self.snr_step).collect()))
    }
}

#[derive(Args)]
struct SimArgs {
    /// TOML campaign file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    detector: Option<String>,
    /// Constellation: bpsk, qpsk, 16qam, ... or the order.
    #[arg(long = "mod")]
    modulation: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    grid: Grid,
    /// Maximum trials per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    /// Frame errors after which a point stops (0 = never).
    #[arg(long)]
    events: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    corr_alpha: Option<f64>,
    #[arg(long)]
    corr_beta: Option<f64>,
    /// `full` or `partial:<cols>` (0-based columns kept).
    #[arg(long)]
    pattern: Option<String>,
    /// Decide bits from LLR signs instead of hard decisions.
    #[arg(long)]
    soft: bool,
    /// Write per-bit LLRs of a soft run to this CSV file.
    #[arg(long)]
    llr_dump: Option<PathBuf>,
    /// Output file; plot data unless --json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the full JSON result instead of plot data.
    #[arg(long)]
    json: bool,
    /// Count detector flops.
    #[arg(long)]
    flops: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveArg {
    Nc,
    Pnc,
    Pcd,
    G,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, value_enum)]
    curve: CurveArg,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long = "mod", default_value = "16qam")]
    modulation: String,
    /// Diversity order of the `g` curve.
    #[arg(long, default_value_t = 1)]
    diversity: usize,
    #[command(flatten)]
    grid: Grid,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long = "mod", default_value = "16qam")]
    modulation: String,
    /// Frames sharing one decomposition.
    #[arg(long, default_value_t = 1)]
    reuse: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    draws: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// CDF table destination (CSV).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecompMode {
    Qr,
    Wr,
}

#[derive(Args)]
struct DecompArgs {
    /// Matrix as `{"rows", "cols", "re", "im"}` with row-major parts.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "qr")]
    mode: DecompMode,
    #[arg(long, default_value = "full")]
    pattern: String,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn sim_config(a: &SimArgs) -> Result<SimConfig, MimoError> {
    let grid = a.grid.values()?;
    let mut cfg = match &a.config {
        Some(path) => load_config(path)?,
        None => {
            let det = a.detector.as_deref().ok_or_else(|| MimoError::Config("--detector or --config is required".into()))?;
            let grid = grid.clone().ok_or_else(|| MimoError::Config("--snr-start is required".into()))?;
            let mut cfg = SimConfig::new(det.parse()?, grid);
            cfg.workers = default_workers();
            cfg
        }
    };
    if let Some(d) = &a.detector {
        cfg.detector = d.parse::<DetectorId>()?;
    }
    if let Some(m) = &a.modulation {
        cfg.order = Constellation::from_name(m)?.order();
    }
    if let Some(n) = a.n {
        cfg.channel.n_tx = n;
        cfg.channel.n_rx = n;
    }
    if let Some(g) = grid {
        cfg.snr_db = g;
    }
    if let Some(t) = a.trials {
        cfg.max_trials = t;
    }
    if let Some(e) = a.events {
        cfg.target_errors = e;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if let Some(v) = a.corr_alpha {
        cfg.channel.correlation_alpha = v;
    }
    if let Some(v) = a.corr_beta {
        cfg.channel.correlation_beta = v;
    }
    if let Some(p) = &a.pattern {
        cfg.pattern = Some(p.parse::<PatternSpec>()?);
    }
    if a.soft || a.llr_dump.is_some() {
        cfg.mode = SimMode::So;
    }
    if a.flops {
        cfg.instrument = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summary(r: &SimResult) -> String {
    let mut s = format!("# {} {} {}x{}\n", r.config.detector, r.config.order, r.config.channel.n_rx, r.config.channel.n_tx);
    s.push_str("snr_db  trials  frame_errors  bit_errors  ber  fer\n");
    for p in &r.points {
        s.push_str(&format!(
            "{}  {}  {}  {}  {:e}  {:e}\n",
            p.snr_db,
            p.trials,
            p.frame_errors,
            p.bit_errors,
            p.ber(),
            p.fer()
        ));
    }
    s
}

fn cmd_sim(a: &SimArgs) -> Result<(), MimoError> {
    let cfg = sim_config(a)?;
    let result = match (cfg.mode, &a.llr_dump) {
        (SimMode::So, Some(path)) => {
            let mut w = BufWriter::new(File::create(path)?);
            let r = run_so(&cfg, Some(&mut w))?;
            w.flush()?;
            r
        }
        (SimMode::So, None) => run_so(&cfg, None)?,
        (SimMode::Ho, _) => run_ho(&cfg)?,
    };
    if let Some(t) = result.wall_time_secs {
        eprintln!("finished in {t:.2} s");
    }
    match (&a.out, a.json) {
        (Some(path), true) => fs::write(path, result_to_json(&result)?)?,
        (Some(path), false) => emit_plot_data(&result, path)?,
        (None, true) => print!("{}", result_to_json(&result)?),
        (None, false) => print!("{}", summary(&result)),
    }
    if a.out.is_some() {
        print!("{}", summary(&result));
    }
    Ok(())
}

fn cmd_theory(a: &TheoryArgs) -> Result<(), MimoError> {
    let c = Constellation::from_name(&a.modulation)?;
    let grid = a.grid.values()?.unwrap_or_else(|| (0..=20).map(|k| 2.0 * k as f64).collect());
    let kind = match a.curve {
        CurveArg::Nc => CurveKind::Nc,
        CurveArg::Pnc => CurveKind::Pnc,
        CurveArg::Pcd => CurveKind::Pcd,
        CurveArg::G => CurveKind::G { diversity: a.diversity },
    };
    let curve = TheoryCurve::evaluate(kind, a.n, c.order(), &grid)?;
    match &a.out {
        Some(path) => fs::write(path, curve.to_csv())?,
        None => print!("{}", curve.to_csv()),
    }
    Ok(())
}

fn cmd_complexity(a: &ComplexityArgs) -> Result<(), MimoError> {
    let c = Constellation::from_name(&a.modulation)?;
    let model = flop_model(a.n, c.order(), a.reuse)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&model).map_err(|e| MimoError::Config(e.to_string()))?);
    } else {
        print!("{}", model.to_text());
    }
    Ok(())
}

fn cmd_dist(a: &DistArgs) -> Result<(), MimoError> {
    let mut cfg = DistConfig::new(a.n, a.draws);
    cfg.seed = a.seed;
    cfg.workers = a.workers.unwrap_or_else(default_workers);
    let report = run_dist_study(&cfg)?;
    if let Some(path) = &a.out {
        fs::write(path, report.to_csv())?;
    }
    print!("{}", report.summary());
    println!("all KS tests passed at {}: {}", cfg.significance, report.passed());
    Ok(())
}

fn cmd_decomp(a: &DecompArgs) -> Result<(), MimoError> {
    let text = fs::read_to_string(&a.input).map_err(|e| MimoError::Io(format!("{}: {e}", a.input.display())))?;
    let h: ComplexMatrix =
        serde_json::from_str(&text).map_err(|e| MimoError::Config(format!("{}: {e}", a.input.display())))?;
    let out = match a.mode {
        DecompMode::Qr => {
            let f = qrd(&h)?;
            json!({ "q": f.q, "r": f.r })
        }
        DecompMode::Wr => {
            if h.rows() != h.cols() {
                return Err(MimoError::DimensionMismatch("puncturing needs a square matrix".into()));
            }
            let pattern = a.pattern.parse::<PatternSpec>()?.build(h.cols())?;
            let f = wrd(&h, &pattern)?;
            let zeroed: Vec<[usize; 2]> = f.pattern.entries().map(|(i, j)| [i, j]).collect();
            json!({ "w": f.w, "r": f.r_punc, "punctured": zeroed })
        }
    };
    let s = serde_json::to_string_pretty(&out).map_err(|e| MimoError::Config(e.to_string()))?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{s}")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sim(a) => cmd_sim(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Complexity(a) => cmd_complexity(a),
        Command::Dist(a) => cmd_dist(a),
        Command::Decomp(a) => cmd_decomp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
