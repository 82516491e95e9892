//! Command-line front end: `generate`, `simulate`, `reconstruct`, `check`
//! and `demo`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynsim::{simulate, Trajectory};
use crate::error::{Error, Result};
use crate::gramian::{gram_from_trajectory, GramPair};
use crate::io::{read_json, read_trajectory, write_json, write_trajectory, InitialState, NetworkFile};
use crate::lyap::{solve_affine_with, DEFAULT_EPS_RANK};
use crate::matrix::SymMatrix;
use crate::netgraph::{graph_from_matrix, random_geometric_graph, random_in_class, Graph, MatrixClass};
use crate::reconstruct::{
    check_solvability_against, reconstruct, ReconstructionOutcome, Status, Tolerances,
};

pub const EXIT_UNIQUE: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NON_UNIQUE: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

/// Seed the sensor demo uses unless told otherwise.
pub const SENSOR_SEED: u64 = 1;
const WEIGHT_SEED_OFFSET: u64 = 100;
const X0_SEED_OFFSET: u64 = 200;

#[derive(Parser, Debug)]
#[command(name = "netrecon", version, about = "Recover the state matrix and graph of a symmetric linear network from one trajectory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a ground-truth network and initial state.
    Generate(GenerateArgs),
    /// Integrate a network from its initial state and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Reconstruct a network of the given class from a trajectory.
    Reconstruct(ReconstructArgs),
    /// Test whether a candidate matrix explains a trajectory.
    Check(CheckArgs),
    /// Run a built-in experiment end to end.
    Demo(DemoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Qualitative,
    Laplacian,
    Adjacency,
    UnweightedLaplacian,
    UnweightedAdjacency,
}

impl From<ClassArg> for MatrixClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Qualitative => MatrixClass::Qualitative,
            ClassArg::Laplacian => MatrixClass::Laplacian,
            ClassArg::Adjacency => MatrixClass::Adjacency,
            ClassArg::UnweightedLaplacian => MatrixClass::UnweightedLaplacian,
            ClassArg::UnweightedAdjacency => MatrixClass::UnweightedAdjacency,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    Geometric,
    Star,
    Ring,
    Path,
    File,
}

#[derive(Args, Debug, Clone)]
pub struct ToleranceArgs {
    /// Relative eigenvalue cut-off for the rank of the Gramian.
    #[arg(long, default_value_t = DEFAULT_EPS_RANK)]
    pub eps_rank: f64,
    /// Residual acceptance bound relative to max(1, |Q|_F).
    #[arg(long, default_value_t = 1e-6)]
    pub tol_accept: f64,
    /// Off-diagonal magnitude that counts as an edge.
    #[arg(long, default_value_t = 1e-3)]
    pub edge_threshold: f64,
}

impl ToleranceArgs {
    pub fn tolerances(&self) -> Result<Tolerances> {
        let tol = Tolerances {
            eps_rank: self.eps_rank,
            tol_accept: self.tol_accept,
            edge_threshold: self.edge_threshold,
            ..Tolerances::default()
        };
        tol.validate()?;
        Ok(tol)
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = ClassArg::Laplacian)]
    pub class: ClassArg,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = GraphKind::Geometric)]
    pub graph: GraphKind,
    /// Graph JSON, with `--graph file`.
    #[arg(long)]
    pub graph_file: Option<PathBuf>,
    /// Side of the square region for the geometric graph.
    #[arg(long, default_value_t = 1000.0)]
    pub side: f64,
    /// Link radius for the geometric graph.
    #[arg(long, default_value_t = 250.0)]
    pub radius: f64,
    /// Seed for node positions; weights and initial state derive from it
    /// unless given separately.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub weight_seed: Option<u64>,
    #[arg(long)]
    pub x0_seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    pub x0_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub x0_hi: f64,
    /// Explicit initial state, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value = "network.json")]
    pub network: PathBuf,
    #[arg(long, default_value = "x0.json")]
    pub x0: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Number of sampling intervals K (even).
    #[arg(long, default_value_t = 1000)]
    pub quadrature_steps: usize,
    #[arg(long, default_value = "trajectory.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    pub trajectory: PathBuf,
    #[arg(long, value_enum)]
    pub class: ClassArg,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Outcome JSON; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the Gramian pair as `{"P": .., "Q": ..}`.
    #[arg(long)]
    pub dump_gram: Option<PathBuf>,
    /// Write the particular solution followed by the kernel basis.
    #[arg(long)]
    pub dump_solution_set: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub trajectory: PathBuf,
    /// Network JSON, or a bare matrix JSON in class form.
    pub candidate: PathBuf,
    #[arg(long, value_enum)]
    pub class: ClassArg,
    #[command(flatten)]
    pub tol: ToleranceArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Star,
    Sensor,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(value_enum)]
    pub name: DemoName,
    /// Measurement horizon; 1 for the star, 5 for the sensor network.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Sampling intervals; 1000 for the star, 5000 for the sensor network.
    #[arg(long)]
    pub quadrature_steps: Option<usize>,
    #[arg(long, default_value_t = SENSOR_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Also write network, initial state, trajectory and outcome here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct GramDump<'a> {
    #[serde(rename = "P")]
    p: &'a SymMatrix,
    #[serde(rename = "Q")]
    q: &'a SymMatrix,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Candidate {
    Network(NetworkFile),
    Matrix(SymMatrix),
}

/// A ground-truth network with its initial state.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub network: NetworkFile,
    pub x0: Vec<f64>,
}

/// Sensor field: geometric graph on `[0, 1000]^2` with radius 250, Laplacian
/// weights uniform in `(0, 1)`, initial state uniform in `[0, 10)`.
pub fn sensor_experiment(n: usize, seed: u64) -> Experiment {
    let (graph, _) = random_geometric_graph(n, 1000.0, 250.0, seed);
    let matrix = random_in_class(&graph, MatrixClass::Laplacian, seed + WEIGHT_SEED_OFFSET);
    let x0 = uniform_x0(n, 0.0, 10.0, seed + X0_SEED_OFFSET);
    Experiment { network: NetworkFile { class: MatrixClass::Laplacian, matrix, graph }, x0 }
}

/// Unweighted four-node star centred on the first node, `x0 = (1, 0, 3, 1)`.
pub fn star_experiment() -> Experiment {
    let graph = Graph::star(4);
    let matrix = random_in_class(&graph, MatrixClass::UnweightedLaplacian, 0);
    Experiment {
        network: NetworkFile { class: MatrixClass::Laplacian, matrix, graph },
        x0: vec![1.0, 0.0, 3.0, 1.0],
    }
}

fn uniform_x0(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Unique => EXIT_UNIQUE,
        Status::NonUnique => EXIT_NON_UNIQUE,
        Status::Infeasible => EXIT_INFEASIBLE,
    }
}

/// Parses `args` and runs the command, reporting errors on stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_UNIQUE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Generate(a) => generate(&a),
        Command::Simulate(a) => simulate_cmd(&a),
        Command::Reconstruct(a) => reconstruct_cmd(&a),
        Command::Check(a) => check(&a),
        Command::Demo(a) => demo(&a),
    }
}

fn generate(a: &GenerateArgs) -> Result<u8> {
    if !(a.x0_lo < a.x0_hi) {
        return Err(Error::InvalidInput(format!("empty initial-state range [{}, {})", a.x0_lo, a.x0_hi)));
    }
    let class: MatrixClass = a.class.into();
    let graph = match a.graph {
        GraphKind::Geometric => {
            if !(a.side > 0.0 && a.radius > 0.0) {
                return Err(Error::InvalidInput("side and radius must be positive".into()));
            }
            random_geometric_graph(a.n, a.side, a.radius, a.seed).0
        }
        GraphKind::Star => Graph::star(a.n),
        GraphKind::Ring => Graph::ring(a.n),
        GraphKind::Path => Graph::path(a.n),
        GraphKind::File => {
            let path = a.graph_file.as_ref().ok_or_else(|| Error::InvalidInput("--graph file needs --graph-file".into()))?;
            read_json::<Graph>(path)?
        }
    };
    let n = graph.n();
    let matrix = random_in_class(&graph, class, a.weight_seed.unwrap_or(a.seed + WEIGHT_SEED_OFFSET));
    let x0 = match &a.x0 {
        Some(v) if v.len() != n => {
            return Err(Error::Dimension(format!("initial state has {} entries, network has {n} nodes", v.len())))
        }
        Some(v) => v.clone(),
        None => uniform_x0(n, a.x0_lo, a.x0_hi, a.x0_seed.unwrap_or(a.seed + X0_SEED_OFFSET)),
    };
    std::fs::create_dir_all(&a.out_dir)?;
    write_json(&a.out_dir.join("network.json"), &NetworkFile { class, matrix, graph })?;
    write_json(&a.out_dir.join("x0.json"), &InitialState { x0 })?;
    Ok(EXIT_UNIQUE)
}

fn simulate_cmd(a: &SimulateArgs) -> Result<u8> {
    let net: NetworkFile = read_json(&a.network)?;
    let x0: InitialState = read_json(&a.x0)?;
    let traj = simulate(&net.state_matrix(), &x0.x0, a.horizon, a.quadrature_steps)?;
    write_trajectory(&a.out, &traj)?;
    Ok(EXIT_UNIQUE)
}

fn reconstruct_cmd(a: &ReconstructArgs) -> Result<u8> {
    let tol = a.tol.tolerances()?;
    let gp = gram_from_trajectory(&read_trajectory(&a.trajectory)?);
    dump(&gp, &tol, a.dump_gram.as_deref(), a.dump_solution_set.as_deref())?;
    let outcome = reconstruct(&gp, a.class.into(), &tol)?;
    match &a.out {
        Some(path) => write_json(path, &outcome)?,
        None => println!("{}", serde_json::to_string_pretty(&outcome)?),
    }
    Ok(exit_code(outcome.status))
}

fn dump(gp: &GramPair, tol: &Tolerances, gram: Option<&Path>, set: Option<&Path>) -> Result<()> {
    if let Some(path) = gram {
        write_json(path, &GramDump { p: &gp.p, q: &gp.q })?;
    }
    if let Some(path) = set {
        let aff = solve_affine_with(gp, tol.eps_rank, tol.tol_consist)?;
        let mut list = vec![aff.particular];
        list.extend(aff.basis);
        write_json(path, &list)?;
    }
    Ok(())
}

fn check(a: &CheckArgs) -> Result<u8> {
    let tol = a.tol.tolerances()?;
    let class: MatrixClass = a.class.into();
    let gp = gram_from_trajectory(&read_trajectory(&a.trajectory)?);
    let state = match read_json::<Candidate>(&a.candidate)? {
        Candidate::Network(net) => net.state_matrix(),
        Candidate::Matrix(m) => class.class_form(&m),
    };
    if state.n() != gp.n() {
        return Err(Error::Dimension(format!("candidate is {}x{}, trajectory has {} states", state.n(), state.n(), gp.n())));
    }
    if check_solvability_against(&gp, &state, class, &tol) {
        println!("explains");
        Ok(EXIT_UNIQUE)
    } else {
        println!("does not explain");
        Ok(EXIT_NON_UNIQUE)
    }
}

/// Result of a demo run, for the report and for tests.
#[derive(Clone, Debug)]
pub struct DemoReport {
    pub truth: Experiment,
    pub trajectory: Trajectory,
    pub gram: GramPair,
    pub outcome: ReconstructionOutcome,
    pub qualitative: Option<ReconstructionOutcome>,
    pub seconds: f64,
}

impl DemoReport {
    pub fn edges_exact(&self) -> bool {
        self.outcome.g_hat.as_ref() == Some(&self.truth.network.graph)
    }

    /// `‖L_r - L‖_F` and the same divided by `‖L_r‖_F`.
    pub fn errors(&self) -> Option<(f64, f64)> {
        let lr = self.outcome.class_matrix()?;
        let abs = lr.sub(&self.truth.network.matrix).frobenius_norm();
        Some((abs, abs / lr.frobenius_norm()))
    }
}

pub fn run_demo(name: DemoName, horizon: Option<f64>, steps: Option<usize>, seed: u64, tol: &Tolerances) -> Result<DemoReport> {
    let (truth, t, k) = match name {
        DemoName::Star => (star_experiment(), horizon.unwrap_or(1.0), steps.unwrap_or(1000)),
        DemoName::Sensor => (sensor_experiment(30, seed), horizon.unwrap_or(5.0), steps.unwrap_or(5000)),
    };
    let start = Instant::now();
    let traj = simulate(&truth.network.state_matrix(), &truth.x0, t, k)?;
    let gram = gram_from_trajectory(&traj);
    let outcome = reconstruct(&gram, MatrixClass::Laplacian, tol)?;
    let seconds = start.elapsed().as_secs_f64();
    let qualitative = match name {
        DemoName::Star => Some(reconstruct(&gram, MatrixClass::Qualitative, tol)?),
        DemoName::Sensor => None,
    };
    Ok(DemoReport { truth, trajectory: traj, gram, outcome, qualitative, seconds })
}

fn demo(a: &DemoArgs) -> Result<u8> {
    let tol = a.tol.tolerances()?;
    let report = run_demo(a.name, a.horizon, a.quadrature_steps, a.seed, &tol)?;
    let truth = &report.truth;
    let out = &report.outcome;
    let n = truth.network.matrix.n();
    println!("nodes: {n}, edges: {}", truth.network.graph.edge_count());
    println!("rank P: {} (kernel dimension {})", out.diagnostics.rank_p, out.diagnostics.kernel_dim);
    if let Some(q) = &report.qualitative {
        println!("qualitative class: {}", verdict(q));
    }
    println!("laplacian class: {}", verdict(out));
    println!("residual: {:.3e}", out.diagnostics.residual);
    if let Some(lr) = out.class_matrix() {
        if n <= 8 {
            println!("recovered L:");
            print_matrix(&lr);
        }
        let g = graph_from_matrix(&lr, tol.edge_threshold);
        let verdict = if report.edges_exact() { "identical to" } else { "different from" };
        println!("recovered graph ({} edges) is {verdict} the original", g.edge_count());
    }
    if let Some((abs, rel)) = report.errors() {
        println!("|L_r - L|_F = {abs:.3e}, relative {rel:.3e}");
    }
    println!("time: {:.3} s", report.seconds);
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("network.json"), &truth.network)?;
        write_json(&dir.join("x0.json"), &InitialState { x0: truth.x0.clone() })?;
        write_trajectory(&dir.join("trajectory.csv"), &report.trajectory)?;
        write_json(&dir.join("outcome.json"), out)?;
    }
    Ok(exit_code(out.status))
}

fn verdict(out: &ReconstructionOutcome) -> String {
    match (out.status, out.certificate) {
        (Status::Unique, Some(c)) => format!("unique ({})", serde_json::to_value(c).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default()),
        (Status::Unique, None) => "unique".into(),
        (Status::NonUnique, _) => "not unique".into(),
        (Status::Infeasible, _) => "infeasible".into(),
    }
}

fn print_matrix(m: &SymMatrix) {
    for row in m.to_rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:9.4}")).collect();
        println!("  [{}]", cells.join(" "));
    }
}
