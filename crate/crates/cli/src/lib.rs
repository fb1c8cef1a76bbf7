//! Command-line front end: reads and writes the JSON formats of
//! [`sigauction::io`] and maps library errors to exit codes.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input or unreadable files,
//! 3 an enumeration guard was exceeded, 4 numeric or internal failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sigauction::gadgets::{
    default_gadget_weights, gen_gap, gen_identity, gen_many_signals, gen_maxcut, random_instance, GraphSpec,
    RandomSpec,
};
use sigauction::io::{
    parse_graph, parse_instance_with_tolerance, parse_partition, parse_scheme, InstanceFile, PartitionFile,
    ReportFile, SchemeFile,
};
use sigauction::model::{report, validate_scheme_with_tolerance, PROB_TOL};
use sigauction::simulate::{simulate_revenue, SimReport};
use sigauction::solver_bayes::{reduce_to_m_signals, solve_fixed_k_with, solve_fixed_m_with, BayesOptions};
use sigauction::solver_known::{
    clustering_bound, clustering_bruteforce, clustering_revenue, solve_optimal_with, solve_welfare_constrained,
    KnownOptions,
};
use sigauction::{Error, Instance, KnownInstance, SignalingScheme, Solution, Valuations};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "sigauction", version, about = "Revenue-maximizing signaling for second-price auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Global {
    /// Instance JSON file.
    #[arg(long, global = true, visible_alias = "instance")]
    input: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Tolerance for probability sums in instances and schemes.
    #[arg(long, global = true, default_value_t = PROB_TOL)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on label tuples for --mode bayes-k.
    #[arg(long, global = true, default_value_t = 1000)]
    max_labels: u128,
    /// Cap on region candidate checks for --mode bayes-m.
    #[arg(long, global = true, default_value_t = 100_000)]
    max_regions: u128,
    /// Largest number of goods for exhaustive clustering.
    #[arg(long, global = true, default_value_t = 10)]
    max_partition_m: usize,
    /// Worker threads for parallel enumeration (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Trace simplex pivots to stderr.
    #[arg(long, global = true)]
    lp_debug: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Known,
    BayesK,
    BayesM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Example {
    Identity,
    ManySignals,
    Gap,
    Maxcut,
    Random,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
enum Command {
    /// Compute a revenue-optimal scheme.
    Solve {
        /// Solver; defaults to `known` for known instances and `bayes-k` otherwise.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Require the labeled top bidders to collect this fraction of optimal welfare.
        #[arg(long)]
        welfare_beta: Option<f64>,
        /// Per-outcome ordering constraints in the signaling LP.
        #[arg(long, value_enum, default_value = "on")]
        ordering: Toggle,
        /// Rewrite the solution with at most m signals.
        #[arg(long)]
        reduce: bool,
    },
    /// Revenue and welfare of a given scheme.
    Evaluate {
        #[arg(long)]
        scheme: PathBuf,
    },
    /// Clustering schemes: exhaustive search or a given partition.
    Cluster {
        #[arg(long, conflicts_with = "partition")]
        brute_force: bool,
        #[arg(long)]
        partition: Option<PathBuf>,
    },
    /// Rewrite a scheme with at most m signals without losing revenue.
    Reduce {
        #[arg(long)]
        scheme: PathBuf,
    },
    /// Write a generated instance.
    Gen {
        #[arg(long, value_enum)]
        example: Example,
        #[arg(long)]
        n: Option<usize>,
        /// Goods (random instances).
        #[arg(long)]
        m: Option<usize>,
        /// Outcomes (random instances); omit for known valuations.
        #[arg(long)]
        k: Option<usize>,
        /// Graph JSON for the MAX-CUT gadget (default: triangle).
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
    },
    /// Monte Carlo estimate of a scheme's revenue.
    Simulate {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Validate an instance and optionally a scheme against it.
    Check {
        #[arg(long)]
        scheme: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Lib(e) if e.is_validation() => 2,
            Failure::Lib(Error::GuardExceeded { .. }) => 3,
            Failure::Lib(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool_version: &'static str,
    config: Config<'a>,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct Config<'a> {
    command: &'a Command,
    #[serde(flatten)]
    global: &'a Global,
}

fn read(path: &PathBuf) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(g: &Global) -> CliResult<Instance> {
    let path = g
        .input
        .as_ref()
        .ok_or_else(|| Failure::Usage("this command needs --input <instance.json>".into()))?;
    Ok(parse_instance_with_tolerance(&read(path)?, g.tol)?)
}

fn load_scheme(path: &PathBuf, inst: &Instance, tol: f64) -> CliResult<SignalingScheme> {
    let scheme = parse_scheme(&read(path)?)?;
    validate_scheme_with_tolerance(&scheme, inst.goods(), tol).map_err(Error::InvalidScheme)?;
    Ok(scheme)
}

fn known_only(inst: &Instance) -> CliResult<KnownInstance> {
    match inst {
        Instance::Known(k) => Ok(k.clone()),
        Instance::Bayes(b) if b.k() == 1 => {
            Ok(KnownInstance::with_tolerance(b.p().to_vec(), b.values()[0].clone(), 1e-6)?)
        }
        Instance::Bayes(_) => Err(Error::InvalidArgument("this command needs known valuations (k = 1)".into()).into()),
    }
}

#[derive(Serialize)]
struct SolveBody {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<SchemeFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<ReportFile>,
}

#[derive(Serialize)]
struct EvaluateBody {
    report: ReportFile,
}

#[derive(Serialize)]
struct ClusterBody {
    partition: PartitionFile,
    revenue: f64,
    bound: f64,
    scheme: SchemeFile,
}

#[derive(Serialize)]
struct ReduceBody {
    revenue_before: f64,
    revenue_after: f64,
    scheme: SchemeFile,
    report: ReportFile,
}

#[derive(Serialize)]
struct SimulateBody {
    simulation: SimReport,
    revenue: f64,
}

#[derive(Serialize)]
struct CheckBody {
    instance: InstanceSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<SchemeCheck>,
}

#[derive(Serialize)]
struct InstanceSummary {
    valid: bool,
    n: usize,
    m: usize,
    k: usize,
}

#[derive(Serialize)]
struct SchemeCheck {
    valid: bool,
    violations: Vec<String>,
}

enum Output {
    Json(String),
    /// JSON written, then exit with this code.
    JsonWithCode(String, i32),
}

fn envelope<T: Serialize>(cli: &Cli, body: T) -> String {
    envelope_for(cli, &cli.command, body)
}

/// Like [`envelope`] but records `command` with defaults resolved.
fn envelope_for<T: Serialize>(cli: &Cli, command: &Command, body: T) -> String {
    let env = Envelope {
        tool_version: TOOL_VERSION,
        config: Config {
            command,
            global: &cli.global,
        },
        body,
    };
    serde_json::to_string_pretty(&env).expect("report serializes")
}

fn solved(sol: Solution) -> SolveBody {
    SolveBody {
        status: "optimal",
        beta: None,
        objective: Some(sol.objective),
        scheme: Some(SchemeFile::from(&sol.scheme)),
        report: Some(ReportFile::from(&sol.report)),
    }
}

fn execute(cli: &Cli) -> CliResult<Output> {
    let g = &cli.global;
    match &cli.command {
        Command::Solve {
            mode,
            welfare_beta,
            ordering,
            reduce,
        } => {
            let inst = load_instance(g)?;
            let mode = mode.unwrap_or(match inst {
                Instance::Known(_) => Mode::Known,
                Instance::Bayes(_) => Mode::BayesK,
            });
            let resolved = Command::Solve {
                mode: Some(mode),
                welfare_beta: *welfare_beta,
                ordering: *ordering,
                reduce: *reduce,
            };
            let ordering = *ordering == Toggle::On;
            let mut sol = match (mode, welfare_beta) {
                (Mode::Known, Some(beta)) => match solve_welfare_constrained(&known_only(&inst)?, *beta) {
                    Err(Error::InfeasibleAtBeta { beta }) => {
                        let body = SolveBody {
                            status: "infeasible_at_beta",
                            beta: Some(beta),
                            objective: None,
                            scheme: None,
                            report: None,
                        };
                        return Ok(Output::Json(envelope_for(cli, &resolved, body)));
                    }
                    other => other?,
                },
                (_, Some(_)) => {
                    return Err(Failure::Usage("--welfare-beta requires --mode known".into()));
                }
                (Mode::Known, None) => solve_optimal_with(&known_only(&inst)?, KnownOptions { ordering })?,
                (Mode::BayesK, None) => solve_fixed_k_with(
                    &inst.to_bayes(),
                    &BayesOptions {
                        ordering,
                        label_guard: g.max_labels,
                        region_guard: g.max_regions,
                    },
                )?,
                (Mode::BayesM, None) => solve_fixed_m_with(
                    &inst.to_bayes(),
                    &BayesOptions {
                        ordering: true,
                        label_guard: g.max_labels,
                        region_guard: g.max_regions,
                    },
                )?,
            };
            if *reduce {
                sol.scheme = reduce_to_m_signals(&inst, &sol.scheme)?;
                sol.report = report(&inst, &sol.scheme)?;
            }
            Ok(Output::Json(envelope_for(cli, &resolved, solved(sol))))
        }
        Command::Evaluate { scheme } => {
            let inst = load_instance(g)?;
            let scheme = load_scheme(scheme, &inst, g.tol)?;
            let report = ReportFile::from(&report(&inst, &scheme)?);
            Ok(Output::Json(envelope(cli, EvaluateBody { report })))
        }
        Command::Cluster {
            brute_force,
            partition,
        } => {
            let inst = known_only(&load_instance(g)?)?;
            let (part, revenue) = match (brute_force, partition) {
                (true, _) => clustering_bruteforce(&inst, g.max_partition_m)?,
                (false, Some(path)) => {
                    let p = parse_partition(&read(path)?, inst.m())?;
                    let r = clustering_revenue(&inst, &p)?;
                    (p, r)
                }
                (false, None) => return Err(Failure::Usage("cluster needs --brute-force or --partition <file>".into())),
            };
            let body = ClusterBody {
                partition: PartitionFile::from(&part),
                revenue,
                bound: clustering_bound(&inst),
                scheme: SchemeFile::from(&part.to_scheme(inst.m())),
            };
            Ok(Output::Json(envelope(cli, body)))
        }
        Command::Reduce { scheme } => {
            let inst = load_instance(g)?;
            let scheme = load_scheme(scheme, &inst, g.tol)?;
            let out = reduce_to_m_signals(&inst, &scheme)?;
            let body = ReduceBody {
                revenue_before: sigauction::revenue(&inst, &scheme)?,
                revenue_after: sigauction::revenue(&inst, &out)?,
                report: ReportFile::from(&report(&inst, &out)?),
                scheme: SchemeFile::from(&out),
            };
            Ok(Output::Json(envelope(cli, body)))
        }
        Command::Gen {
            example,
            n,
            m,
            k,
            graph,
            k1,
            k2,
        } => {
            let need_n = || n.ok_or_else(|| Failure::Usage("this example needs --n".into()));
            let inst = match example {
                Example::Identity => Instance::Known(gen_identity(need_n()?)?),
                Example::ManySignals => Instance::Known(gen_many_signals(need_n()?)?),
                Example::Gap => Instance::Known(gen_gap(need_n()?)?),
                Example::Maxcut => {
                    let graph = match graph {
                        Some(path) => parse_graph(&read(path)?)?,
                        None => GraphSpec::triangle(),
                    };
                    let (d1, d2) = default_gadget_weights(&graph);
                    Instance::Bayes(gen_maxcut(&graph, k1.unwrap_or(d1), k2.unwrap_or(d2))?.instance)
                }
                Example::Random => {
                    let n = need_n()?;
                    let m = m.ok_or_else(|| Failure::Usage("random instances need --m".into()))?;
                    let spec = match k {
                        Some(k) => RandomSpec::bayes(n, m, *k),
                        None => RandomSpec::known(n, m),
                    };
                    random_instance(g.seed, &spec)?
                }
            };
            let text = serde_json::to_string_pretty(&InstanceFile::from(&inst)).expect("instance serializes");
            Ok(Output::Json(text))
        }
        Command::Simulate { scheme, samples } => {
            let inst = load_instance(g)?;
            let scheme = load_scheme(scheme, &inst, g.tol)?;
            let body = SimulateBody {
                simulation: simulate_revenue(&inst, &scheme, *samples, g.seed)?,
                revenue: sigauction::revenue(&inst, &scheme)?,
            };
            Ok(Output::Json(envelope(cli, body)))
        }
        Command::Check { scheme } => {
            let inst = load_instance(g)?;
            let summary = InstanceSummary {
                valid: true,
                n: inst.bidders(),
                m: inst.goods(),
                k: inst.outcome_count(),
            };
            let checked = match scheme {
                Some(path) => {
                    let s = parse_scheme(&read(path)?)?;
                    let violations = match validate_scheme_with_tolerance(&s, inst.goods(), g.tol) {
                        Ok(()) => Vec::new(),
                        Err(v) => v.iter().map(|v| v.to_string()).collect(),
                    };
                    Some(SchemeCheck {
                        valid: violations.is_empty(),
                        violations,
                    })
                }
                None => None,
            };
            let code = if checked.as_ref().is_some_and(|c| !c.valid) { 2 } else { 0 };
            let body = CheckBody {
                instance: summary,
                scheme: checked,
            };
            Ok(Output::JsonWithCode(envelope(cli, body), code))
        }
    }
}

fn emit(g: &Global, text: &str, out: &mut dyn Write) -> CliResult<()> {
    match &g.output {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => writeln!(out, "{text}").map_err(|e| Failure::Io(format!("cannot write output: {e}"))),
    }
}

/// Runs the tool on `argv` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
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
    if cli.global.lp_debug {
        let _ = env_logger::Builder::new()
            .filter_module("sigauction::lp", log::LevelFilter::Trace)
            .try_init();
    }
    if let Some(b) = cli.command_beta() {
        if !(0.0..=1.0).contains(&b) {
            let _ = writeln!(err, "error: --welfare-beta must lie in [0, 1], got {b}");
            return 1;
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.global.threads {
        pool = pool.num_threads(t);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| execute(&cli)),
        Err(e) => Err(Failure::Usage(format!("cannot start {:?} threads: {e}", cli.global.threads))),
    };
    let outcome = result.and_then(|o| match o {
        Output::Json(text) => emit(&cli.global, &text, out).map(|_| 0),
        Output::JsonWithCode(text, code) => emit(&cli.global, &text, out).map(|_| code),
    });
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.exit_code()
        }
    }
}

impl Cli {
    fn command_beta(&self) -> Option<f64> {
        match &self.command {
            Command::Solve { welfare_beta, .. } => *welfare_beta,
            _ => None,
        }
    }
}
