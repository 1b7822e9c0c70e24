use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use purify_bound::adversarial::{
    entanglement_landscape, worst_unitary_in_landscape, SearchOutcome, DEFAULT_GRID_STEPS,
};
use purify_bound::bell::BellDiagonal;
use purify_bound::noise::pauli_pair_survey;
use purify_bound::output::{format_g15, Format, Table};
use purify_bound::protocol::{
    protocol_threshold, recurse_to_fixed_point, GateNoiseSpec, NoiseModel, Protocol, MAX_ROUNDS,
};
use purify_bound::solve::grid;
use purify_bound::threshold::{
    ancilla_limit, apex_scan, loss_tradeoff, max_apex, region_boundary, region_boundary_above,
    AboveApexModel, ApexPoint, N_SEARCH_MAX,
};
use purify_bound::Error;

const EXIT_NUMERICAL: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_USAGE: u8 = 4;

/// Fault-tolerance threshold bounds for entanglement purification.
///
/// Every subcommand writes a table (CSV by default) to standard output or to
/// the file given by --out. Exit codes: 0 success, 2 numerical failure,
/// 3 I/O failure, 4 invalid arguments.
#[derive(Parser, Debug)]
#[command(name = "purify-bound", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Solver tolerance.
    #[arg(long, global = true, default_value_t = 1e-10, value_parser = positive)]
    tol: f64,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximize the apex gate error over the copy number n.
    #[command(after_help = "\
Output columns:
  n             maximizing copy number n*
  p             initial-state error probability at the apex
  q             largest tolerable gate error q*
  f_star        fidelity S^-1(1/n*) at the apex
  residual_max  largest residual of the three apex equations")]
    Max,

    /// Apex points on a grid of copy numbers.
    #[command(after_help = "\
Output columns:
  n             copy number
  p             initial-state error probability at the n-apex
  q             gate error probability at the n-apex
  f_star        fidelity S^-1(1/n)
  residual_max  largest residual of the three apex equations

With --gnuplot FILE, also writes whitespace-separated `n q` pairs.")]
    ApexScan {
        #[arg(long, default_value_t = 1.5)]
        n_min: f64,
        #[arg(long, default_value_t = 6.0)]
        n_max: f64,
        #[arg(long, default_value_t = 0.01, value_parser = positive)]
        step: f64,
        /// Companion two-column data file.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },

    /// Boundary of the purifiable (p, q) region for fixed n.
    #[command(after_help = "\
Output columns:
  p       initial-state error probability
  q       largest gate error probability at that p
  branch  below-apex (exact apex condition) or above-apex-model
          (modelled continuation up to p = 1 - 1/sqrt(2))

Grid points beyond 1 - 1/sqrt(2) are rejected with a message on stderr.")]
    Region {
        #[arg(long, default_value_t = 2.0)]
        n: f64,
        #[arg(long, default_value_t = 0.0)]
        p_min: f64,
        /// Defaults to 1 - 1/sqrt(2).
        #[arg(long)]
        p_max: Option<f64>,
        #[arg(long, default_value_t = 0.005, value_parser = positive)]
        p_step: f64,
        /// Continuation model above the apex.
        #[arg(long, default_value = "adversarial-concentration")]
        model: String,
    },

    /// Trade-off between gate faults and loss.
    #[command(after_help = "\
Output columns:
  q_f      gate fault probability
  q_l_max  largest loss probability that still meets the apex condition
  n_star   copy number achieving it")]
    Loss {
        #[arg(long, default_value_t = 0.0)]
        q_f_min: f64,
        /// Defaults to the maximal apex gate error.
        #[arg(long)]
        q_f_max: Option<f64>,
        #[arg(long, default_value_t = 0.0025, value_parser = positive)]
        q_f_step: f64,
        #[arg(long, default_value_t = N_SEARCH_MAX)]
        n_max: f64,
    },

    /// Entanglement landscape of a one-sided unitary error.
    #[command(after_help = "\
Output columns:
  theta    rotation angle of U = exp(-i theta n.sigma)
  polar    polar angle of the rotation axis n
  azimuth  azimuthal angle of the rotation axis n
  eof      entanglement of formation of the exact output state

The minimizer and its Pauli comparison are reported on stderr.")]
    Adversarial {
        /// Werner fidelity of the input state.
        #[arg(long, default_value_t = 0.75, conflicts_with = "weights")]
        fidelity: f64,
        /// Bell weights psi-,phi-,psi+,phi+ (overrides --fidelity).
        #[arg(long, value_delimiter = ',', num_args = 4)]
        weights: Option<Vec<f64>>,
        /// Probability that the unitary error occurs.
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_STEPS)]
        theta_steps: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_STEPS)]
        axis_steps: usize,
    },

    /// Recursive purification under noisy gates.
    #[command(after_help = "\
Output columns:
  q        per-qubit gate error probability
  verdict  converged-up, converged-down or stationary
  rounds   purification rounds performed
  final_f  fidelity after the last round

The critical error probability q_crit is reported on stderr.")]
    Simulate {
        /// depolarizing, adversarial-xz or none.
        #[arg(long, default_value = "adversarial-xz")]
        noise: String,
        /// bbpssw or dejmps.
        #[arg(long, default_value = "dejmps")]
        protocol: String,
        #[arg(long, default_value_t = 0.85)]
        f0: f64,
        #[arg(long, default_value_t = 0.0)]
        q_min: f64,
        #[arg(long, default_value_t = 0.1)]
        q_max: f64,
        #[arg(long, default_value_t = 0.005, value_parser = positive)]
        q_step: f64,
        #[arg(long, default_value_t = MAX_ROUNDS)]
        max_rounds: usize,
    },

    /// Survivor fidelity for every pair of direct gate errors.
    #[command(after_help = "\
Output columns:
  left      Pauli error on the first qubit of the surviving pair
  right     Pauli error on the second qubit of the surviving pair
  fidelity  singlet fidelity of the surviving pair")]
    Survey {
        #[arg(long, default_value_t = 0.1)]
        q: f64,
        #[arg(long, default_value_t = 2)]
        n: u32,
    },

    /// Initial-state error beyond which pairs are separable.
    #[command(after_help = "\
Output columns:
  p_limit  1 - 1/sqrt(2)
  percent  the same, in percent")]
    AncillaLimit,
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} must be positive"))
    }
}

enum Failure {
    Numerical(Error),
    Io(std::io::Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads as usize)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let format: Format = cli
        .common
        .format
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let out = cli.common.out.as_deref();
    let tol = cli.common.tol;

    let table = match cli.command {
        Command::Max => apex_table(&[max_apex(tol)?]),
        Command::ApexScan {
            n_min,
            n_max,
            step,
            gnuplot,
        } => {
            let points = apex_scan(n_min, n_max, step)?;
            if let Some(path) = gnuplot {
                write_gnuplot(&path, &points)?;
            }
            apex_table(&points)
        }
        Command::Region {
            n,
            p_min,
            p_max,
            p_step,
            model,
        } => {
            let model: AboveApexModel = model
                .parse()
                .map_err(|e: Error| Failure::Usage(e.to_string()))?;
            region_table(n, p_min, p_max.unwrap_or_else(ancilla_limit), p_step, model)?
        }
        Command::Loss {
            q_f_min,
            q_f_max,
            q_f_step,
            n_max,
        } => {
            let q_f_max = match q_f_max {
                Some(q) => q,
                None => max_apex(tol)?.q,
            };
            let mut q_f = grid(q_f_min, q_f_max, q_f_step)?;
            if q_f.last().is_some_and(|&last| q_f_max - last > 1e-12) {
                q_f.push(q_f_max);
            }
            let mut t = Table::new(&["q_f", "q_l_max", "n_star"]);
            for pt in loss_tradeoff(&q_f, n_max)? {
                t.push(vec![pt.q_f.into(), pt.q_l_max.into(), pt.n_star.into()]);
            }
            t
        }
        Command::Adversarial {
            fidelity,
            weights,
            p,
            theta_steps,
            axis_steps,
        } => {
            let state = match weights {
                Some(w) => BellDiagonal::new([w[0], w[1], w[2], w[3]])?,
                None => BellDiagonal::werner(fidelity)?,
            };
            adversarial_table(&state, p, theta_steps, axis_steps)?
        }
        Command::Simulate {
            noise,
            protocol,
            f0,
            q_min,
            q_max,
            q_step,
            max_rounds,
        } => {
            let model: NoiseModel = noise
                .parse()
                .map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let protocol: Protocol = protocol
                .parse()
                .map_err(|e: Error| Failure::Usage(e.to_string()))?;
            simulate_table(model, protocol, f0, q_min, q_max, q_step, max_rounds)?
        }
        Command::Survey { q, n } => {
            let survey = pauli_pair_survey(q, n)?;
            eprintln!(
                "{} distinct fidelities; minimum {} at {:?}",
                survey.distinct.len(),
                survey.minimum,
                survey.worst_pairs()
            );
            let mut t = Table::new(&["left", "right", "fidelity"]);
            for e in &survey.entries {
                t.push(vec![
                    e.left.to_string().into(),
                    e.right.to_string().into(),
                    e.fidelity.into(),
                ]);
            }
            t
        }
        Command::AncillaLimit => {
            let limit = ancilla_limit();
            let mut t = Table::new(&["p_limit", "percent"]);
            t.push(vec![limit.into(), (100.0 * limit).into()]);
            t
        }
    };
    table.emit(format, out)?;
    Ok(())
}

fn apex_table(points: &[ApexPoint]) -> Table {
    let mut t = Table::new(&["n", "p", "q", "f_star", "residual_max"]);
    for a in points {
        t.push(vec![
            a.n.into(),
            a.p.into(),
            a.q.into(),
            a.f_star.into(),
            a.residual_max().into(),
        ]);
    }
    t
}

fn write_gnuplot(path: &Path, points: &[ApexPoint]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# n q")?;
    for a in points {
        writeln!(w, "{} {}", format_g15(a.n), format_g15(a.q))?;
    }
    w.flush()
}

fn region_table(
    n: f64,
    p_min: f64,
    p_max: f64,
    p_step: f64,
    model: AboveApexModel,
) -> Result<Table, Failure> {
    let limit = ancilla_limit();
    let top = purify_bound::threshold::apex(n)?;
    let mut ps = grid(p_min, p_max, p_step)?;
    // land exactly on the limit when the grid is meant to end there
    if let Some(last) = ps.last_mut() {
        if (*last - limit).abs() < 1e-9 {
            *last = limit;
        }
    }
    let (kept, rejected): (Vec<f64>, Vec<f64>) = ps.into_iter().partition(|&p| p <= limit);
    for p in rejected {
        eprintln!(
            "rejected p = {}: above 1 - 1/sqrt(2) = {} the initial pairs are separable",
            format_g15(p),
            format_g15(limit)
        );
    }
    let (below, above): (Vec<f64>, Vec<f64>) = kept.into_iter().partition(|&p| p <= top.p);
    let mut t = Table::new(&["p", "q", "branch"]);
    for curve in [
        (!below.is_empty()).then(|| region_boundary(n, &below)),
        (!above.is_empty()).then(|| region_boundary_above(n, &above, model)),
    ]
    .into_iter()
    .flatten()
    {
        let curve = curve?;
        for (p, q) in curve.points {
            t.push(vec![p.into(), q.into(), curve.branch.label().into()]);
        }
    }
    Ok(t)
}

fn adversarial_table(
    state: &BellDiagonal,
    p: f64,
    theta_steps: usize,
    axis_steps: usize,
) -> Result<Table, Failure> {
    let samples = entanglement_landscape(state, p, theta_steps, axis_steps)?;
    match worst_unitary_in_landscape(state, p, &samples, theta_steps, axis_steps)? {
        SearchOutcome::Flat { eof } => {
            eprintln!("flat landscape (eof {eof}); no minimizer")
        }
        SearchOutcome::Minimum(w) => eprintln!(
            "minimum eof {} at theta {} axis {:?}; nearest Pauli {} (eof {}, closed form {}); near Pauli point: {}",
            w.sample.eof,
            w.unitary.theta,
            w.unitary.axis,
            w.nearest_pauli,
            w.pauli_eof,
            w.pauli_eof_closed_form,
            w.is_near_pauli()
        ),
    }
    let mut t = Table::new(&["theta", "polar", "azimuth", "eof"]);
    for s in samples {
        t.push(vec![
            s.theta.into(),
            s.polar.into(),
            s.azimuth.into(),
            s.eof.into(),
        ]);
    }
    Ok(t)
}

fn simulate_table(
    model: NoiseModel,
    protocol: Protocol,
    f0: f64,
    q_min: f64,
    q_max: f64,
    q_step: f64,
    max_rounds: usize,
) -> Result<Table, Failure> {
    let qs = grid(q_min, q_max, q_step)?;
    let traces = qs
        .par_iter()
        .map(|&q| {
            let noise = GateNoiseSpec::new(model, q, 0.0)?;
            recurse_to_fixed_point(f0, &noise, protocol, max_rounds)
        })
        .collect::<Result<Vec<_>, _>>()?;
    match protocol_threshold(model, protocol, f0) {
        Ok(q) => eprintln!("q_crit = {q}"),
        Err(Error::NoTransition { lo, hi }) => {
            eprintln!("q_crit: no transition in [{lo}, {hi}]")
        }
        Err(e) => return Err(e.into()),
    }
    let mut t = Table::new(&["q", "verdict", "rounds", "final_f"]);
    for (q, trace) in qs.iter().zip(&traces) {
        t.push(vec![
            (*q).into(),
            trace.verdict.label().into(),
            trace.rounds.len().into(),
            trace.final_fidelity().unwrap_or(f0).into(),
        ]);
    }
    Ok(t)
}
