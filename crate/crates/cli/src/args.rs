use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "qforge",
    version,
    about = "Hybrid quantum-classical simulation engine",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a circuit and print a state summary
    Run(RunArgs),
    /// Sample measurement outcomes from a circuit's final state
    Sample(SampleArgs),
    /// Expectation value of a Hamiltonian on a circuit's final state
    Expval(ExpvalArgs),
    /// Batched adjoint-method gradients, CSV on stdout
    Grad(GradArgs),
    /// Optimize a max-cut QAOA ansatz for a graph
    Qaoa(QaoaArgs),
    /// Apply optimization passes and optional qubit mapping
    Compile(CompileArgs),
    /// Random-circuit timing suites, CSV on stdout
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Sv,
    Dm,
}

impl BackendArg {
    pub fn name(self) -> &'static str {
        match self {
            BackendArg::Sv => "sv",
            BackendArg::Dm => "dm",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Single,
    Double,
}

impl PrecisionArg {
    pub fn name(self) -> &'static str {
        match self {
            PrecisionArg::Single => "single",
            PrecisionArg::Double => "double",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Gd,
    Adam,
    Lbfgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Complex,
    Simple,
    Both,
}

/// Engine execution flags shared by the simulating commands.
#[derive(Args, Debug, Clone)]
pub struct ExecFlags {
    /// Worker threads; falls back to QFORGE_THREADS, then all cores
    #[arg(long)]
    pub threads: Option<usize>,
    /// Registers narrower than this always run single-worker
    #[arg(long, default_value_t = 13)]
    pub threshold_qubits: usize,
    /// Numeric precision of the state
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Circuit JSON file
    pub circuit: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendArg::Sv)]
    pub backend: BackendArg,
    /// Parameter bindings, repeatable: --params theta=0.5
    #[arg(long = "params", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Noise model JSON; requires --backend dm
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Write the final state (QSV1) or density matrix (QDM1) here
    #[arg(long, value_name = "FILE")]
    pub dump_state: Option<PathBuf>,
    #[command(flatten)]
    pub exec: ExecFlags,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Circuit JSON file
    pub circuit: PathBuf,
    /// Number of shots
    #[arg(long, default_value_t = 1024)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = BackendArg::Sv)]
    pub backend: BackendArg,
    #[arg(long = "params", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Noise model JSON; requires --backend dm
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[command(flatten)]
    pub exec: ExecFlags,
}

#[derive(Args, Debug)]
pub struct ExpvalArgs {
    /// Circuit JSON file
    pub circuit: PathBuf,
    /// Hamiltonian JSON file
    pub hamiltonian: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendArg::Sv)]
    pub backend: BackendArg,
    #[arg(long = "params", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Noise model JSON: dm evolves exactly, sv averages trajectories
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Trajectory count for sv with --noise
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub exec: ExecFlags,
}

#[derive(Args, Debug)]
pub struct GradArgs {
    /// Circuit JSON file
    pub circuit: PathBuf,
    /// Hamiltonian JSON file
    pub hamiltonian: PathBuf,
    /// Batch CSV: header names the parameters, one binding per row
    pub batch: PathBuf,
}

#[derive(Args, Debug)]
pub struct QaoaArgs {
    /// Edge-list graph file: one "u v [w]" per line
    pub graph: PathBuf,
    /// Number of QAOA layers
    #[arg(long, short = 'p', default_value_t = 1)]
    pub layers: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Lbfgs)]
    pub optimizer: OptimizerArg,
    /// Learning rate for gd and adam
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// History length for lbfgs
    #[arg(long, default_value_t = 10)]
    pub memory: usize,
    /// Seeds the random start and the final-state sampler
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shots for the best-bitstring sample
    #[arg(long, default_value_t = 2048)]
    pub shots: u64,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Circuit JSON file
    pub circuit: PathBuf,
    /// Comma-separated passes: cancel, merge, decompose
    #[arg(long, default_value = "cancel,merge")]
    pub passes: String,
    /// Topology: line:N, ring:N, grid:RxC, or an edge-list file
    #[arg(long, value_name = "SPEC")]
    pub coupling: Option<String>,
    /// Seeds mapping tie-breaks
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::Both)]
    pub suite: SuiteArg,
    /// Inclusive qubit range, e.g. 4..6
    #[arg(long, default_value = "4..6")]
    pub qubits: String,
    #[arg(long, default_value_t = 10)]
    pub gates_per_qubit: usize,
    /// Repetitions per row; the median and min are reported
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub exec: ExecFlags,
}
