//! `groundspace` command-line interface.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use groundspace::agsp::{build_kappa, measured_shrinking, KappaConfig, DEFAULT_SHRINK_CONSTANT};
use groundspace::hamiltonian::DEFAULT_DENSE_CAP;
use groundspace::oracle::{exact_ground_space, gen_planted_csp, gen_random_ff};
use groundspace::postproc::{pauli_table, TableLimits, DEFAULT_MAX_ENTRIES, DEFAULT_MAX_WEIGHT};
use groundspace::solver::{solve, Mode, SelectionOptions, SolveOptions, DEFAULT_ORACLE_CAP};
use groundspace::{Error, Hamiltonian, Mps};

const EXIT_SOLVER_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "groundspace", version, about = "Ground spaces of 2D frustration-free lattice Hamiltonians")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a ground space approximation as a subspace MPS.
    Solve(SolveArgs),
    /// Tabulate ⟨z_i|σ|z_j⟩ over Pauli words of bounded weight.
    Expectations(ExpectationArgs),
    /// Local gap: smallest nonzero eigenvalue over all rectangles.
    Gap(GapArgs),
    /// Build κ(m,t,p) and compare its shrinking factor with the bound.
    VerifyAgsp(VerifyArgs),
    /// Generate test instances.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Theory,
    Practical,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Tsv,
    Json,
}

/// A positive real or `auto`.
#[derive(Clone, Copy, Debug)]
enum GammaArg {
    Auto,
    Value(f64),
}

fn parse_gamma(s: &str) -> Result<GammaArg, String> {
    if s == "auto" {
        return Ok(GammaArg::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(GammaArg::Value(v)),
        _ => Err(format!("expected a positive number or `auto`, got {s:?}")),
    }
}

fn parse_open_unit(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1), got {s:?}")),
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Local gap, or `auto` to compute a lower-bound estimate.
    #[arg(long, value_parser = parse_gamma, default_value = "auto")]
    gamma: GammaArg,
    /// Upper bound on the ground space degeneracy.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    dbound: u64,
    /// Target closeness δ_goal.
    #[arg(long, value_parser = parse_open_unit, default_value = "0.1")]
    delta: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "practical")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    /// Output prefix: writes PREFIX.mps.json, PREFIX.log.json, PREFIX.summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Fix (m, t, p) instead of choosing them.
    #[arg(long, num_args = 3, value_names = ["M", "T", "P"])]
    agsp: Option<Vec<usize>>,
    /// Sample dimension V (practical mode).
    #[arg(long)]
    samples: Option<usize>,
    /// Trim threshold ε (practical mode).
    #[arg(long)]
    eps: Option<f64>,
    /// Constant c in e^{-c t √γ}.
    #[arg(long, default_value_t = DEFAULT_SHRINK_CONSTANT)]
    shrink_constant: f64,
    /// Largest rectangle (in sites) examined by `--gamma auto`.
    #[arg(long)]
    max_sites: Option<usize>,
}

#[derive(Args)]
struct ExpectationArgs {
    #[arg(long)]
    mps: PathBuf,
    /// Largest word weight.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    format: TableFormat,
    /// Cap on the word weight.
    #[arg(long, default_value_t = DEFAULT_MAX_WEIGHT)]
    max_weight: usize,
    /// Cap on D² times the number of words.
    #[arg(long, default_value_t = DEFAULT_MAX_ENTRIES)]
    max_entries: usize,
}

#[derive(Args)]
struct GapArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Only rectangles with at most this many sites.
    #[arg(long)]
    max_sites: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    t: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, value_parser = parse_gamma, default_value = "auto")]
    gamma: GammaArg,
    #[arg(long, default_value_t = DEFAULT_SHRINK_CONSTANT)]
    shrink_constant: f64,
    /// Use exact band projectors instead of step polynomials.
    #[arg(long)]
    exact_projectors: bool,
    /// Write the projector MPO here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_sites: Option<usize>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Planted classical constraint problem on qubits.
    PlantedCsp {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Redraw until the plant is the only solution.
        #[arg(long)]
        unique: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random frustration-free instance with planted product states.
    RandomFf {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        degeneracy: usize,
        /// Rank of each term (default: full complement of the planted states).
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Solver(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoViableOutput { .. } => Failure::Solver(e),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        println!("seed: {s}");
        s
    })
}

fn read_instance(path: &Path) -> CliResult<Hamiltonian> {
    Hamiltonian::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn resolve_gamma(h: &Hamiltonian, gamma: GammaArg, max_sites: Option<usize>) -> CliResult<f64> {
    match gamma {
        GammaArg::Value(v) => Ok(v),
        GammaArg::Auto => {
            let gap = h.local_gap(max_sites, DEFAULT_DENSE_CAP)?;
            match gap.gamma {
                Some(g) => {
                    log::warn!("γ = {g} from {} rectangles is an estimate of the local gap", gap.rectangles_examined);
                    Ok(g)
                }
                None => {
                    log::warn!("no rectangle has a nonzero eigenvalue; using γ = 1");
                    Ok(1.0)
                }
            }
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct Summary {
    dim: usize,
    residual_energy: f64,
    delta: f64,
    seed: u64,
    m: usize,
    t: usize,
    p: usize,
    samples: usize,
    eps: f64,
    max_rank: Option<usize>,
    closeness_to_exact: Option<f64>,
}

fn run_solve(a: SolveArgs) -> CliResult<()> {
    let h = read_instance(&a.instance)?;
    let gamma = resolve_gamma(&h, a.gamma, a.max_sites)?;
    let seed = seed_or_entropy(a.seed);
    let agsp = match a.agsp.as_deref() {
        Some(&[m, t, p]) => Some((m, t, p)),
        _ => None,
    };
    let opts = SolveOptions {
        mode: match a.mode {
            ModeArg::Theory => Mode::Theory,
            ModeArg::Practical => Mode::Practical,
        },
        repeats: a.repeats as usize,
        shrink_constant: a.shrink_constant,
        agsp,
        selection: SelectionOptions { v: a.samples, eps: a.eps, ..SelectionOptions::default() },
        oracle_cap: DEFAULT_ORACLE_CAP,
        ..SolveOptions::default()
    };
    let result = solve(&h, gamma, a.dbound as usize, a.delta, seed, &opts)?;
    result.z.write_json(with_suffix(&a.out, ".mps.json"), Some(h.lattice_info()))?;
    std::fs::write(with_suffix(&a.out, ".log.json"), result.log_json())?;
    let params = &result.log.params;
    let summary = Summary {
        dim: result.dim,
        residual_energy: result.residual_energy,
        delta: params.delta,
        seed: params.seed,
        m: params.m,
        t: params.t,
        p: params.p,
        samples: params.v,
        eps: params.eps,
        max_rank: result.log.gate.as_ref().map(|g| g.rank),
        closeness_to_exact: result.closeness,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Input(e.to_string()))?;
    std::fs::write(with_suffix(&a.out, ".summary.json"), &text)?;
    println!("dim={} residual_energy={:e}", result.dim, result.residual_energy);
    Ok(())
}

fn run_expectations(a: ExpectationArgs) -> CliResult<()> {
    let (z, lattice) = Mps::read_json(&a.mps).map_err(|e| Failure::Input(format!("{}: {e}", a.mps.display())))?;
    let lattice = lattice.ok_or_else(|| Failure::Input("subspace file carries no lattice metadata".into()))?;
    let limits = TableLimits { max_weight: a.max_weight, max_entries: a.max_entries };
    let table = pauli_table(&z, lattice, a.k, None, limits)?;
    let mut out = BufWriter::new(File::create(&a.out)?);
    match a.format {
        TableFormat::Tsv => table.write_tsv(&mut out)?,
        TableFormat::Json => out.write_all(table.to_json()?.as_bytes())?,
    }
    out.flush()?;
    println!("{} words, dim {}", table.entries.len(), table.dim);
    Ok(())
}

fn run_gap(a: GapArgs) -> CliResult<()> {
    let h = read_instance(&a.instance)?;
    let gap = h.local_gap(a.max_sites, DEFAULT_DENSE_CAP)?;
    match (gap.gamma, gap.minimizer) {
        (Some(g), Some(rect)) => {
            let (xs, ys) = if h.was_transposed() { (rect.y_range, rect.x_range) } else { (rect.x_range, rect.y_range) };
            println!(
                "gamma={g:e} rectangle=[{},{}]x[{},{}] examined={}",
                xs.0, xs.1, ys.0, ys.1, gap.rectangles_examined
            )
        }
        _ => println!("gamma=none examined={}", gap.rectangles_examined),
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    m: usize,
    t: usize,
    p: usize,
    gamma: f64,
    wide_bands: usize,
    delta_bound: f64,
    measured_delta: Option<f64>,
    identity_defect: Option<f64>,
    cut_ranks: Vec<usize>,
    uncovered_terms: usize,
}

fn run_verify(a: VerifyArgs) -> CliResult<()> {
    let h = read_instance(&a.instance)?;
    let gamma = resolve_gamma(&h, a.gamma, a.max_sites)?;
    let mut config = KappaConfig::new(a.m, a.t, a.p, gamma);
    config.shrink_constant = a.shrink_constant;
    config.exact_projectors = a.exact_projectors;
    let bundle = build_kappa(&h, &config)?;
    let dense_dim = (0..h.width()).try_fold(1usize, |acc, _| acc.checked_mul(h.column_dim()));
    let (measured, defect) = if dense_dim.is_some_and(|n| n <= DEFAULT_ORACLE_CAP) {
        let ground = exact_ground_space(&h)?;
        let k = bundle.kappa.to_dense();
        let defect = groundspace::spectral::operator_norm(&(&k * &ground - &ground));
        (Some(measured_shrinking(&k, &ground)), Some(defect))
    } else {
        (None, None)
    };
    let report = VerifyReport {
        m: a.m,
        t: a.t,
        p: a.p,
        gamma,
        wide_bands: bundle.layout.wide_count(),
        delta_bound: bundle.delta_bound,
        measured_delta: measured,
        identity_defect: defect,
        cut_ranks: bundle.rank_ledger.clone(),
        uncovered_terms: bundle.uncovered_terms,
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Failure::Input(e.to_string()))?);
    log::info!("{}", bundle.build_log_json());
    if let Some(path) = a.out {
        bundle.kappa.write_json(path, Some(h.lattice_info()))?;
    }
    Ok(())
}

fn run_gen(cmd: GenCommand) -> CliResult<()> {
    match cmd {
        GenCommand::PlantedCsp { width, height, seed, unique, out } => {
            let seed = seed_or_entropy(seed);
            let inst = gen_planted_csp::<f64>(width, height, seed, unique)?;
            inst.hamiltonian.write(&out)?;
            let bits: String = inst.assignment.iter().map(|b| b.to_string()).collect();
            println!("degeneracy={} planted={bits}", inst.degeneracy);
        }
        GenCommand::RandomFf { width, height, q, seed, degeneracy, rank, out } => {
            let seed = seed_or_entropy(seed);
            let inst = gen_random_ff::<f64>(width, height, q, seed, degeneracy, rank)?;
            inst.hamiltonian.write(&out)?;
            println!("degeneracy={}", inst.degeneracy);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Expectations(a) => run_expectations(a),
        Command::Gap(a) => run_gap(a),
        Command::VerifyAgsp(a) => run_verify(a),
        Command::Gen(g) => run_gen(g),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SOLVER_FAILURE)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
