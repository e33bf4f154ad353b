//! `entcorr` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 internal
//! consistency failure. Reports go to stdout, diagnostics to stderr.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entcorr::bell::{chsh, chsh_maximize, MeasurementSetting};
use entcorr::convexroof::{
    convex_roof, eigen_ensemble_average, two_qubit_concurrence_oracle, RoofMeasure, RoofOptions,
};
use entcorr::correlations::{correlation_table, is_factorizable};
use entcorr::expsim::{estimate_convergence_scan, estimate_en, simulate_measurements};
use entcorr::measures::{e2_correlation_sum, en_closed_form, en_correlation_sum, three_tangle};
use entcorr::qstate::{
    parse_record_file, parse_state_file, purity, write_record_file, DensityMatrix, LoadedState,
    PureState,
};
use entcorr::schmidt::{schmidt_decompose, schmidt_rank};

use report::Report;

#[derive(Parser, Debug)]
#[command(
    name = "entcorr",
    version,
    about = "Entanglement measures from outcome correlations"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Worker threads for parallel sections; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Machine,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Schmidt decomposition, correlation table, E2 and E_N of a pure state.
    Measure(StateArg),
    /// CHSH value at fixed analyzer angles, or maximized over a grid.
    Bell(BellArgs),
    /// Simulated Schmidt-basis measurements and the E_N estimate.
    Simulate(SimulateArgs),
    /// Convex-roof extension of E2 or E_N for a mixed state.
    Roof(RoofArgs),
    /// Parse and check a state file.
    Validate(StateArg),
}

#[derive(Args, Debug)]
struct StateArg {
    #[arg(long)]
    state: PathBuf,
}

#[derive(Args, Debug)]
struct BellArgs {
    #[arg(long)]
    state: PathBuf,
    /// Analyzer angles a,a',b,b' in radians.
    #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with_all = ["grid", "refine"])]
    angles: Option<Vec<f64>>,
    /// Grid points per angle for the maximization.
    #[arg(long)]
    grid: Option<usize>,
    /// Polish the best grid point by local search.
    #[arg(long)]
    refine: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(
        long,
        required_unless_present = "from_record",
        conflicts_with = "from_record"
    )]
    state: Option<PathBuf>,
    /// Estimate from an existing record file instead of simulating.
    #[arg(long)]
    from_record: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["schedule", "from_record"])]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strictly increasing shot counts, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 1,
        conflicts_with = "from_record"
    )]
    schedule: Option<Vec<u64>>,
    /// Where to write the measurement record (single --shots runs only).
    #[arg(long, conflicts_with = "schedule")]
    record_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RoofArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum, default_value_t = MeasureArg::En)]
    measure: MeasureArg,
    #[arg(long, default_value_t = RoofOptions::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ensemble size; defaults to rank(rho)^2.
    #[arg(long)]
    ensemble_cap: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MeasureArg {
    E2,
    En,
}

enum Failure {
    Usage(String),
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<entcorr::Error> for Failure {
    fn from(e: entcorr::Error) -> Failure {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Outcome<LoadedState> {
    let text = read(path)?;
    let file =
        parse_state_file(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(file.into_state())
}

fn describe(path: &Path, state: &LoadedState) -> report::Input {
    let (kind, dims) = match state {
        LoadedState::Pure(p) => ("pure", p.dims().to_vec()),
        LoadedState::Mixed(m) => ("mixed", m.dims().to_vec()),
    };
    report::Input {
        path: path.display().to_string(),
        kind,
        dims,
    }
}

/// Pure input, or mixed input that is a projector.
fn require_pure(state: &LoadedState, command: &str) -> Outcome<PureState> {
    match state {
        LoadedState::Pure(p) => Ok(p.clone()),
        LoadedState::Mixed(m) => m.as_pure().ok_or_else(|| {
            Failure::Input(format!(
                "{command} needs a pure state; this density matrix has purity {:.6} (use roof for mixed states)",
                purity(m)
            ))
        }),
    }
}

fn measure(args: &StateArg) -> Outcome<Report> {
    let state = load(&args.state)?;
    let mut rep = Report::new("measure", describe(&args.state, &state));
    let psi = require_pure(&state, "measure")?;
    let (bipartite, split, tangle) = match psi.dims() {
        [_, _] => (psi.clone(), "A|B", None),
        [2, 2, 2] => (psi.split_first()?, "A|BC", Some(three_tangle(&psi)?.value)),
        dims => {
            return Err(Failure::Input(format!(
                "measure supports two parties or three qubits, got dims {dims:?}"
            )))
        }
    };
    let dec = schmidt_decompose(&bipartite)?;
    let table = correlation_table(&dec);
    let rank = schmidt_rank(&dec);
    if is_factorizable(&table, 1e-9) != rank.is_separable() {
        return Err(Failure::Internal(
            "factorizability and Schmidt rank disagree".into(),
        ));
    }
    let e2 = if dec.n() == 2 {
        Some(e2_correlation_sum(&table)?)
    } else {
        None
    };
    rep.measures = Some(report::Measures {
        e2,
        en: en_correlation_sum(&table)?,
        en_closed_form: en_closed_form(&dec)?,
        three_tangle: tangle,
    });
    rep.schmidt = Some(report::Schmidt {
        split,
        lambdas: dec.lambdas().to_vec(),
        rank: rank.0,
        separable: rank.is_separable(),
    });
    rep.correlations = Some(table);
    Ok(rep)
}

fn bell(args: &BellArgs) -> Outcome<Report> {
    let state = load(&args.state)?;
    let mut rep = Report::new("bell", describe(&args.state, &state));
    let (mode, grid, value) = match &args.angles {
        Some(angles) => {
            let [a, ap, b, bp] = <[f64; 4]>::try_from(angles.as_slice()).map_err(|_| {
                Failure::Usage(format!(
                    "--angles takes exactly four values a,a',b,b' (got {})",
                    angles.len()
                ))
            })?;
            let set = MeasurementSetting::new;
            (
                "fixed",
                None,
                chsh(&state, set(a)?, set(ap)?, set(b)?, set(bp)?)?,
            )
        }
        None => {
            let g = args.grid.unwrap_or(32);
            ("maximize", Some(g), chsh_maximize(&state, g, args.refine)?)
        }
    };
    rep.chsh = Some(report::Chsh {
        mode,
        grid,
        refine: args.refine,
        value,
        classical_bound: 2.0,
        violates_classical_bound: value.s.abs() > 2.0 + 1e-9,
    });
    Ok(rep)
}

fn simulate(args: &SimulateArgs) -> Outcome<Report> {
    if let Some(path) = &args.from_record {
        let record = parse_record_file(&read(path)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let mut rep = Report::new(
            "simulate",
            report::Input {
                path: path.display().to_string(),
                kind: "record",
                dims: vec![record.n(), record.n()],
            },
        );
        rep.seeds.push(record.seed());
        rep.simulation = Some(report::Simulation {
            source: "record",
            lambdas: None,
            truth: None,
            counts: Some(record.counts().to_vec()),
            record_out: None,
            estimates: vec![estimate_en(&record)?],
        });
        return Ok(rep);
    }

    let path = args.state.as_ref().expect("clap requires --state");
    let state = load(path)?;
    let mut rep = Report::new("simulate", describe(path, &state));
    let psi = require_pure(&state, "simulate")?;
    if psi.dims().len() != 2 {
        return Err(Failure::Input(format!(
            "simulate needs a bipartite state, got dims {:?}",
            psi.dims()
        )));
    }
    let dec = schmidt_decompose(&psi)?;
    let truth = en_closed_form(&dec).ok().map(|v| v.value);
    rep.seeds.push(args.seed);
    let sim = match (&args.schedule, args.shots) {
        (Some(schedule), _) => report::Simulation {
            source: "schedule",
            lambdas: Some(dec.lambdas().to_vec()),
            truth,
            counts: None,
            record_out: None,
            estimates: estimate_convergence_scan(&dec, schedule, args.seed)?,
        },
        (None, Some(shots)) => {
            let record = simulate_measurements(&dec, shots, args.seed)?;
            let record_out = match &args.record_out {
                Some(out) => {
                    std::fs::write(out, write_record_file(&record)).map_err(|e| {
                        Failure::Input(format!("cannot write {}: {e}", out.display()))
                    })?;
                    Some(out.display().to_string())
                }
                None => None,
            };
            report::Simulation {
                source: "simulation",
                lambdas: Some(dec.lambdas().to_vec()),
                truth,
                counts: Some(record.counts().to_vec()),
                record_out,
                estimates: vec![estimate_en(&record)?],
            }
        }
        (None, None) => {
            return Err(Failure::Usage(
                "simulate needs --shots or --schedule".into(),
            ))
        }
    };
    rep.simulation = Some(sim);
    Ok(rep)
}

fn roof(args: &RoofArgs) -> Outcome<Report> {
    let state = load(&args.state)?;
    let mut rep = Report::new("roof", describe(&args.state, &state));
    let rho: DensityMatrix = match &state {
        LoadedState::Pure(p) => p.projector()?,
        LoadedState::Mixed(m) => m.clone(),
    };
    let (measure, name) = match args.measure {
        MeasureArg::E2 => (RoofMeasure::E2, "e2"),
        MeasureArg::En => (RoofMeasure::En, "en"),
    };
    let opts = RoofOptions {
        restarts: args.restarts,
        seed: args.seed,
        ensemble_cap: args.ensemble_cap,
        ..RoofOptions::default()
    };
    let result = convex_roof(&rho, measure, &opts)?;
    let concurrence_squared = if rho.dims() == [2, 2] {
        Some(two_qubit_concurrence_oracle(&rho)?.powi(2))
    } else {
        None
    };
    rep.seeds.push(args.seed);
    rep.roof = Some(report::Roof {
        measure: name,
        value: result.value,
        eigen_ensemble_average: eigen_ensemble_average(&rho, measure)?,
        restarts: result.restarts_used,
        seed: args.seed,
        ensemble_cap: args.ensemble_cap,
        iterations: result.iterations,
        converged: result.converged,
        weights: result.decomposition.weights,
        concurrence_squared,
    });
    Ok(rep)
}

fn validate(args: &StateArg) -> Outcome<Report> {
    let state = load(&args.state)?;
    let mut rep = Report::new("validate", describe(&args.state, &state));
    let (p, pure) = match &state {
        LoadedState::Pure(_) => (1.0, true),
        LoadedState::Mixed(m) => (purity(m), m.as_pure().is_some()),
    };
    rep.validation = Some(report::Validation {
        valid: true,
        purity: p,
        pure,
    });
    Ok(rep)
}

fn dispatch(cli: &Cli) -> Outcome<String> {
    let rep = match &cli.command {
        Command::Measure(a) => measure(a)?,
        Command::Bell(a) => bell(a)?,
        Command::Simulate(a) => simulate(a)?,
        Command::Roof(a) => roof(a)?,
        Command::Validate(a) => validate(a)?,
    };
    Ok(match cli.format {
        Format::Text => report::to_text(&rep),
        Format::Machine => report::to_machine(&rep),
    })
}

fn run(cli: &Cli) -> Outcome<String> {
    match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Internal(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
