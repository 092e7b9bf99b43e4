//! Input loading and flag resolution. Every failure here names the file or
//! flag it came from and exits 2.

use std::path::Path;

use qforge_core::noise::NoiseModel;
use qforge_core::ops::PauliSum;
use qforge_core::sv::ParallelConfig;
use qforge_core::vqa::Graph;
use qforge_core::{Bindings, Circuit, CouplingGraph, ExecConfig, PolicyKind};

use crate::args::ExecFlags;
use crate::error::{CliError, CliResult};

pub fn read_file(path: &Path, what: &str) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{what} `{}`: {e}", path.display())))
}

pub fn load_circuit(path: &Path) -> CliResult<Circuit> {
    let text = read_file(path, "circuit file")?;
    Circuit::from_json(&text)
        .map_err(|e| CliError::input(format!("circuit file `{}`: {e}", path.display())))
}

pub fn load_hamiltonian(path: &Path) -> CliResult<PauliSum> {
    let text = read_file(path, "hamiltonian file")?;
    PauliSum::from_ham_json(&text)
        .map_err(|e| CliError::input(format!("hamiltonian file `{}`: {e}", path.display())))
}

pub fn load_noise(path: &Path) -> CliResult<NoiseModel> {
    let text = read_file(path, "noise file")?;
    NoiseModel::from_json(&text)
        .map_err(|e| CliError::input(format!("noise file `{}`: {e}", path.display())))
}

pub fn load_graph(path: &Path) -> CliResult<Graph> {
    let text = read_file(path, "graph file")?;
    Graph::from_edge_list(&text)
        .map_err(|e| CliError::input(format!("graph file `{}`: {e}", path.display())))
}

/// `line:N`, `ring:N`, `grid:RxC`, or a path to an edge-list file.
pub fn load_coupling(spec: &str) -> CliResult<CouplingGraph> {
    if spec.starts_with("line:") || spec.starts_with("ring:") || spec.starts_with("grid:") {
        return CouplingGraph::parse(spec)
            .map_err(|e| CliError::input(format!("--coupling: {e}")));
    }
    let path = Path::new(spec);
    let text = read_file(path, "coupling file")?;
    CouplingGraph::from_edge_list(&text)
        .map_err(|e| CliError::input(format!("coupling file `{spec}`: {e}")))
}

/// Repeatable `--params name=value` pairs.
pub fn parse_params(pairs: &[String]) -> CliResult<Bindings> {
    let mut env = Bindings::new();
    for pair in pairs {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("--params `{pair}`: expected NAME=VALUE")))?;
        if name.is_empty() {
            return Err(CliError::input(format!(
                "--params `{pair}`: empty parameter name"
            )));
        }
        let v: f64 = value.parse().map_err(|_| {
            CliError::input(format!("--params `{pair}`: `{value}` is not a number"))
        })?;
        if !v.is_finite() {
            return Err(CliError::input(format!(
                "--params `{pair}`: value must be finite"
            )));
        }
        env.insert(name.to_string(), v);
    }
    Ok(env)
}

/// --threads wins, then QFORGE_THREADS, then machine parallelism.
pub fn resolve_workers(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(w) = flag {
        if w == 0 {
            return Err(CliError::input("--threads: must be at least 1"));
        }
        return Ok(Some(w));
    }
    match std::env::var("QFORGE_THREADS") {
        Ok(s) => {
            let w: usize = s.parse().map_err(|_| {
                CliError::input(format!("QFORGE_THREADS: `{s}` is not a thread count"))
            })?;
            if w == 0 {
                return Err(CliError::input("QFORGE_THREADS: must be at least 1"));
            }
            Ok(Some(w))
        }
        Err(_) => Ok(None),
    }
}

pub fn exec_config(flags: &ExecFlags) -> CliResult<ExecConfig> {
    Ok(ExecConfig {
        policy: PolicyKind::default(),
        parallel: ParallelConfig {
            threshold_qubits: flags.threshold_qubits,
            worker_count: resolve_workers(flags.threads)?,
        },
    })
}

/// Inclusive `LO..HI` range, or a single `N`.
pub fn parse_qubit_range(text: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::input(format!("--qubits `{text}`: expected N or LO..HI"));
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad());
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (parse(lo)?, parse(hi.strip_prefix('=').unwrap_or(hi))?),
        None => {
            let n = parse(text)?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(CliError::input(format!(
            "--qubits `{text}`: need 1 <= lo <= hi"
        )));
    }
    Ok((lo, hi))
}
