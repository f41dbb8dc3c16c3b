use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bicolor::fidelity::{
    check_k_monochromatic, check_monochromatic, check_target, general_fidelity, k_monochromatic_fidelity,
    monochromatic_fidelity, FidelityError, FidelityReport, TargetSpec, Verification,
};
use bicolor::graph::{default_palette, BiColoredGraph, Color};
use bicolor::io::{self, IoError};
use bicolor::matching::{MatchingError, DEFAULT_MATCHING_CAP};
use bicolor::optimizer::{
    optimize_weights, search_topologies, Constraint, Objective, OptimizeConfig, OptimizeError, SearchBudget,
    Topology,
};
use bicolor::state::{compute_state_with, StateError, StateMap, StateOptions};

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "bicolor", version, about = "Perfect-matching states of bi-colored multigraphs")]
struct Cli {
    /// Zero tolerance for coloring weights and verification.
    #[arg(long, global = true, default_value_t = bicolor::DEFAULT_TOL)]
    tol: f64,
    /// Significant digits in reports.
    #[arg(long, global = true, default_value_t = 12)]
    digits: usize,
    /// Cap on enumerated perfect matchings.
    #[arg(long, global = true, default_value_t = DEFAULT_MATCHING_CAP)]
    matching_cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every inherited vertex coloring with its weight.
    State {
        graph: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compute a fidelity.
    Fidelity {
        graph: PathBuf,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long)]
        json: bool,
    },
    /// Check an exact predicate; exit 0 on pass, 1 on fail.
    Verify {
        graph: PathBuf,
        #[command(flatten)]
        objective: ObjectiveArgs,
    },
    /// Optimize weights on a topology file, or search topologies with --search N D.
    Optimize {
        #[arg(required_unless_present = "search", conflicts_with = "search")]
        topology: Option<PathBuf>,
        #[arg(long, num_args = 2, value_names = ["N", "D"])]
        search: Option<Vec<usize>>,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ConstraintArg::Complex)]
        constraint: ConstraintArg,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        /// Palette labels for --search, comma separated.
        #[arg(long, value_delimiter = ',')]
        palette: Option<Vec<String>>,
        #[arg(long, default_value_t = 6)]
        max_edges: usize,
        #[arg(long, default_value_t = 1)]
        max_multiplicity: usize,
        #[arg(long, default_value_t = 1)]
        max_hits: usize,
        /// Also optimize topologies that cannot be exact.
        #[arg(long)]
        approximate: bool,
        /// Write the best graph here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-iteration objective trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Emit Graphviz source for a graph.
    Export {
        graph: PathBuf,
        #[arg(long, required = true)]
        dot: bool,
    },
    /// Print a catalog graph (k4, cycle4 .. cycle10) or the wstate target.
    Catalog { name: String },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ObjectiveArgs {
    /// Monochromatic fidelity / predicate.
    #[arg(long)]
    mono: bool,
    /// k-monochromatic with an optional red label (default: palette color 0).
    #[arg(long, num_args = 1..=2, value_names = ["K", "RED"])]
    kmono: Option<Vec<String>>,
    /// General fidelity against a target file.
    #[arg(long, value_name = "TARGET")]
    general: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstraintArg {
    Complex,
    Real,
    Positive,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Resource(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<FidelityError> for Failure {
    fn from(e: FidelityError) -> Self {
        match e {
            FidelityError::UndefinedFidelity => Failure::Input(format!(
                "{e}; every perfect matching cancels or none exists, so there is no state to compare"
            )),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<StateError> for Failure {
    fn from(e: StateError) -> Self {
        match e {
            StateError::Matching(m) => m.into(),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<MatchingError> for Failure {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::MatchingExplosion { .. } => Failure::Resource(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<OptimizeError> for Failure {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::BudgetExceeded { .. } => Failure::Resource(e.to_string()),
            OptimizeError::Matching(m) => m.into(),
            OptimizeError::State(s) => s.into(),
            OptimizeError::Fidelity(f) => f.into(),
            e => Failure::Input(e.to_string()),
        }
    }
}

enum Goal {
    Mono,
    KMono { k: usize, red: Color },
    General(TargetSpec),
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<BiColoredGraph, Failure> {
    io::parse_graph(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

impl ObjectiveArgs {
    fn resolve(&self, n: usize, palette: &[String]) -> Result<Goal, Failure> {
        if self.mono {
            return Ok(Goal::Mono);
        }
        if let Some(args) = &self.kmono {
            let k: usize = args[0]
                .parse()
                .map_err(|_| Failure::Input(format!("--kmono: bad k {:?}", args[0])))?;
            if k == 0 || k > n {
                return Err(Failure::Input(format!("--kmono: k = {k} out of range 1..={n}")));
            }
            let red = match args.get(1) {
                Some(label) => palette
                    .iter()
                    .position(|p| p == label)
                    .map(Color::from)
                    .ok_or_else(|| Failure::Input(format!("--kmono: unknown red label {label:?}")))?,
                None => Color(0),
            };
            return Ok(Goal::KMono { k, red });
        }
        let path = self.general.as_ref().expect("clap enforces one objective");
        let t = io::parse_target(&read(path)?, palette)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        Ok(Goal::General(t))
    }
}

fn objective(goal: Goal, constraint: Constraint) -> Objective {
    let o = match goal {
        Goal::Mono => Objective::mono(),
        Goal::KMono { k, red } => Objective::k_mono(k, red),
        Goal::General(t) => Objective::general(t),
    };
    o.with_constraint(constraint)
}

fn state_of(g: &BiColoredGraph, cli: &Cli) -> Result<StateMap, Failure> {
    Ok(compute_state_with(g, StateOptions { tolerance: cli.tol, matching_cap: cli.matching_cap })?)
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let sig = cli.digits;
    match &cli.command {
        Command::State { graph, json } => {
            let g = load_graph(graph)?;
            let s = state_of(&g, cli)?;
            if *json {
                println!("{}", io::state_json(&s));
            } else {
                print!("{}", io::state_report(&s, sig));
            }
            if s.surviving_count() == 0 {
                eprintln!("warning: no surviving coloring (N = 0); fidelities are undefined for this graph");
            }
            Ok(0)
        }
        Command::Fidelity { graph, objective, json } => {
            let g = load_graph(graph)?;
            let s = state_of(&g, cli)?;
            let report: FidelityReport = match objective.resolve(g.n(), g.palette())? {
                Goal::Mono => monochromatic_fidelity(&s)?,
                Goal::KMono { k, red } => k_monochromatic_fidelity(&s, k, red)?,
                Goal::General(t) => general_fidelity(&s, &t)?,
            };
            if *json {
                println!("{}", io::fidelity_json(&report, g.palette()));
            } else {
                print!("{}", io::fidelity_report(&report, g.palette(), sig));
            }
            Ok(0)
        }
        Command::Verify { graph, objective } => {
            let g = load_graph(graph)?;
            let s = state_of(&g, cli)?;
            let v: Verification = match objective.resolve(g.n(), g.palette())? {
                Goal::Mono => check_monochromatic(&s, cli.tol),
                Goal::KMono { k, red } => check_k_monochromatic(&s, k, red, cli.tol)?,
                Goal::General(t) => check_target(&s, &t, cli.tol)?,
            };
            print!("{}", io::verification_report(&v, g.palette(), sig));
            Ok(if v.passed { 0 } else { EXIT_FAIL })
        }
        Command::Optimize {
            topology,
            search,
            objective: obj_args,
            restarts,
            seed,
            constraint,
            max_iters,
            palette,
            max_edges,
            max_multiplicity,
            max_hits,
            approximate,
            out,
            trace,
        } => {
            let constraint = match constraint {
                ConstraintArg::Complex => Constraint::Complex,
                ConstraintArg::Real => Constraint::Real,
                ConstraintArg::Positive => Constraint::PositiveReal,
            };
            let cfg = OptimizeConfig {
                restarts: *restarts,
                max_iters: *max_iters,
                seed: *seed,
                tol: cli.tol,
                record_trace: trace.is_some(),
                ..OptimizeConfig::default()
            };
            let results = if let Some(nd) = search {
                let (n, d) = (nd[0], nd[1]);
                let palette = palette.clone().unwrap_or_else(|| default_palette(d));
                if palette.len() != d {
                    return Err(Failure::Input(format!("--palette has {} labels, d = {d}", palette.len())));
                }
                let obj = objective(obj_args.resolve(n, &palette)?, constraint);
                let budget = SearchBudget {
                    max_edges: *max_edges,
                    max_multiplicity: *max_multiplicity,
                    exact_only: !approximate,
                    max_hits: Some(*max_hits),
                    palette: Some(palette),
                    ..SearchBudget::default()
                };
                search_topologies(n, d, &budget, &obj, &cfg)?
            } else {
                let g = load_graph(topology.as_ref().expect("clap enforces a topology"))?;
                let obj = objective(obj_args.resolve(g.n(), g.palette())?, constraint);
                let t = Topology::with_cap(&g, cli.matching_cap)?.with_tolerance(cli.tol);
                vec![optimize_weights(&t, &obj, &cfg)?]
            };
            let exact_hits = results.iter().filter(|r| r.exact).count();
            println!("results {}\nexact_hits {}", results.len(), exact_hits);
            let Some(best) = results.first() else {
                println!("no candidate topology has a perfect matching reaching the objective");
                return Ok(EXIT_FAIL);
            };
            print!("{}", io::search_report(best, sig));
            print!("{}", io::write_graph(&best.graph));
            if let Some(path) = out {
                write(path, &io::write_graph(&best.graph))?;
            }
            if let Some(path) = trace {
                write(path, &io::trace_text(&best.trace))?;
            }
            Ok(if exact_hits > 0 { 0 } else { EXIT_FAIL })
        }
        Command::Export { graph, .. } => {
            print!("{}", io::to_dot(&load_graph(graph)?));
            Ok(0)
        }
        Command::Catalog { name } => {
            if name == "wstate" {
                print!("{}", io::write_target(&io::w_state_target(), &default_palette(2)));
            } else {
                let g = io::catalog_graph(name)
                    .ok_or_else(|| Failure::Input(format!("unknown catalog entry {name:?}")))?;
                print!("{}", io::write_graph(&g));
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Resource(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RESOURCE)
        }
    }
}
