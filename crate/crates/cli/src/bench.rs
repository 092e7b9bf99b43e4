//! Random-circuit timing suites. CSV rows go to stdout, a rendered table
//! and warnings to stderr; timing excludes circuit generation.

use std::io::Write;
use std::time::Instant;

use qforge_core::sv::DEFAULT_QUBIT_CAP;
use qforge_core::{optimize_circuit, randcirc, Bindings, Circuit, ExecConfig, Pass, StateVector};

use crate::args::{BenchArgs, PrecisionArg, SuiteArg};
use crate::error::{CliError, CliResult};
use crate::fileio::{exec_config, parse_qubit_range};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Suite {
    RandomComplex,
    RandomSimple,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::RandomComplex => "random_complex",
            Suite::RandomSimple => "random_simple",
        }
    }
}

/// RandomComplex draws from the full gate pool; RandomSimple is exactly its
/// decomposition into the rotation/CNOT basis, same seed.
pub fn build_suite_circuit(
    suite: Suite,
    n_qubits: usize,
    gates_per_qubit: usize,
    seed: u64,
) -> CliResult<Circuit> {
    let complex = randcirc::bench_circuit(n_qubits, gates_per_qubit, seed);
    match suite {
        Suite::RandomComplex => Ok(complex),
        Suite::RandomSimple => Ok(optimize_circuit(&complex, &[Pass::Decompose])?),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn time_run(c: &Circuit, cfg: &ExecConfig, precision: PrecisionArg) -> CliResult<f64> {
    let env = Bindings::new();
    let t0 = Instant::now();
    match precision {
        PrecisionArg::Double => {
            StateVector::<f64>::run_with(c, &env, None, cfg)?;
        }
        PrecisionArg::Single => {
            StateVector::<f32>::run_with(c, &env, None, cfg)?;
        }
    }
    Ok(t0.elapsed().as_secs_f64())
}

pub fn cmd_bench<W: Write>(a: BenchArgs, out: &mut W) -> CliResult<()> {
    let (lo, hi) = parse_qubit_range(&a.qubits)?;
    if a.reps == 0 {
        return Err(CliError::input("--reps: must be at least 1"));
    }
    if a.gates_per_qubit == 0 {
        return Err(CliError::input("--gates-per-qubit: must be at least 1"));
    }
    let cfg = exec_config(&a.exec)?;
    let threads = cfg
        .parallel
        .worker_count
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        });
    let suites: &[Suite] = match a.suite {
        SuiteArg::Complex => &[Suite::RandomComplex],
        SuiteArg::Simple => &[Suite::RandomSimple],
        SuiteArg::Both => &[Suite::RandomComplex, Suite::RandomSimple],
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    for &suite in suites {
        for n in lo..=hi {
            if n > DEFAULT_QUBIT_CAP {
                eprintln!(
                    "warning: skipping n_qubits={n}: exceeds the {DEFAULT_QUBIT_CAP}-qubit cap"
                );
                continue;
            }
            let circuit = build_suite_circuit(suite, n, a.gates_per_qubit, a.seed)?;
            let mut times = Vec::with_capacity(a.reps);
            for _ in 0..a.reps {
                times.push(time_run(&circuit, &cfg, a.exec.precision)?);
            }
            times.sort_by(|x, y| x.partial_cmp(y).expect("finite timings"));
            rows.push(vec![
                suite.name().to_string(),
                n.to_string(),
                circuit.gates().len().to_string(),
                a.reps.to_string(),
                format!("{:.9}", median(&times)),
                format!("{:.9}", times[0]),
                threads.to_string(),
                a.exec.precision.name().to_string(),
            ]);
        }
    }

    const HEADER: [&str; 8] = [
        "suite",
        "n_qubits",
        "gates",
        "reps",
        "median_s",
        "min_s",
        "threads",
        "precision",
    ];
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in &rows {
        w.write_record(row)?;
    }
    w.flush()?;

    let widths: Vec<usize> = HEADER
        .iter()
        .enumerate()
        .map(|(i, h)| {
            rows.iter()
                .map(|r| r[i].len())
                .chain([h.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let render = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    eprintln!("{}", render(HEADER.to_vec()));
    for row in &rows {
        eprintln!("{}", render(row.iter().map(String::as_str).collect()));
    }
    Ok(())
}
