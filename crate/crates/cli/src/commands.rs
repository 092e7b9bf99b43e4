//! Command handlers. JSON results go to `out`; warnings go to stderr.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use qforge_core::noise::{noisy_circuit, NoiseModel};
use qforge_core::ops::PauliSum;
use qforge_core::precision::Real;
use qforge_core::vqa::{cut_value, maxcut_hamiltonian, optimize, qaoa_circuit, StartParams};
use qforge_core::{
    adjoint_gradient, dm, map_circuit, optimize_circuit, sv, Bindings, Circuit, DensityMatrix,
    ExecConfig, GradientTask, OptimizerConfig, Pass, StateVector,
};

use crate::args::{
    BackendArg, Command, CompileArgs, ExpvalArgs, GradArgs, OptimizerArg, PrecisionArg, QaoaArgs,
    RunArgs, SampleArgs,
};
use crate::error::{CliError, CliResult};
use crate::fileio::{
    exec_config, load_circuit, load_coupling, load_graph, load_hamiltonian, load_noise,
    parse_params,
};
use crate::output::{
    print_json, CompileOutput, ExpvalOutput, LayoutOutput, ParamValue, QaoaOutput, RunOutput,
    SampleOutput,
};

pub fn dispatch<W: Write>(cmd: Command, out: &mut W) -> CliResult<()> {
    match cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Expval(a) => cmd_expval(a, out),
        Command::Grad(a) => cmd_grad(a, out),
        Command::Qaoa(a) => cmd_qaoa(a, out),
        Command::Compile(a) => cmd_compile(a, out),
        Command::Bench(a) => crate::bench::cmd_bench(a, out),
    }
}

fn require_dm_for_noise(backend: BackendArg, noise: &Option<NoiseModel>) -> CliResult<()> {
    if noise.is_some() && backend == BackendArg::Sv {
        return Err(CliError::input(
            "--noise: requires --backend dm here; trajectory estimates live under expval",
        ));
    }
    Ok(())
}

fn cmd_run<W: Write>(a: RunArgs, out: &mut W) -> CliResult<()> {
    let c = load_circuit(&a.circuit)?;
    let env = parse_params(&a.params)?;
    let cfg = exec_config(&a.exec)?;
    let noise = a.noise.as_deref().map(load_noise).transpose()?;
    require_dm_for_noise(a.backend, &noise)?;

    let mut result = RunOutput {
        command: "run".into(),
        backend: a.backend.name().into(),
        precision: a.exec.precision.name().into(),
        n_qubits: c.n_qubits(),
        n_gates: c.gates().len(),
        norm: None,
        trace: None,
        dump: None,
    };
    let dump = a.dump_state.as_deref();
    match (a.backend, a.exec.precision) {
        (BackendArg::Sv, PrecisionArg::Double) => {
            result.norm = Some(run_sv::<f64>(&c, &env, &cfg, dump)?)
        }
        (BackendArg::Sv, PrecisionArg::Single) => {
            result.norm = Some(run_sv::<f32>(&c, &env, &cfg, dump)?)
        }
        (BackendArg::Dm, PrecisionArg::Double) => {
            result.trace = Some(run_dm::<f64>(&c, &env, &cfg, &noise, dump)?)
        }
        (BackendArg::Dm, PrecisionArg::Single) => {
            result.trace = Some(run_dm::<f32>(&c, &env, &cfg, &noise, dump)?)
        }
    }
    result.dump = a.dump_state.map(|p| p.display().to_string());
    print_json(out, &result)?;
    Ok(())
}

fn run_sv<T: Real>(
    c: &Circuit,
    env: &Bindings,
    cfg: &ExecConfig,
    dump: Option<&Path>,
) -> CliResult<f64> {
    let psi = StateVector::<T>::run_with(c, env, None, cfg)?;
    if let Some(path) = dump {
        let mut f = BufWriter::new(File::create(path)?);
        sv::write_qsv1(&psi, &mut f)?;
    }
    Ok(psi.norm_sqr().sqrt())
}

fn run_dm<T: Real>(
    c: &Circuit,
    env: &Bindings,
    cfg: &ExecConfig,
    noise: &Option<NoiseModel>,
    dump: Option<&Path>,
) -> CliResult<f64> {
    let rho = match noise {
        Some(model) => noisy_circuit(c, model)?.run_dm::<T>(env)?,
        None => DensityMatrix::<T>::run_with(c, env, None, cfg)?,
    };
    if let Some(path) = dump {
        let mut f = BufWriter::new(File::create(path)?);
        dm::write_qdm1(&rho, &mut f)?;
    }
    Ok(rho.trace())
}

fn cmd_sample<W: Write>(a: SampleArgs, out: &mut W) -> CliResult<()> {
    let c = load_circuit(&a.circuit)?;
    let env = parse_params(&a.params)?;
    let cfg = exec_config(&a.exec)?;
    let noise = a.noise.as_deref().map(load_noise).transpose()?;
    require_dm_for_noise(a.backend, &noise)?;

    let qubits: Vec<usize> = (0..c.n_qubits()).collect();
    let counts = match (a.backend, a.exec.precision) {
        (BackendArg::Sv, PrecisionArg::Double) => {
            StateVector::<f64>::run_with(&c, &env, None, &cfg)?.sample(&qubits, a.shots, a.seed)?
        }
        (BackendArg::Sv, PrecisionArg::Single) => {
            StateVector::<f32>::run_with(&c, &env, None, &cfg)?.sample(&qubits, a.shots, a.seed)?
        }
        (BackendArg::Dm, PrecisionArg::Double) => {
            sample_dm::<f64>(&c, &env, &cfg, &noise, &qubits, a.shots, a.seed)?
        }
        (BackendArg::Dm, PrecisionArg::Single) => {
            sample_dm::<f32>(&c, &env, &cfg, &noise, &qubits, a.shots, a.seed)?
        }
    };
    print_json(
        out,
        &SampleOutput {
            command: "sample".into(),
            backend: a.backend.name().into(),
            shots: a.shots,
            seed: a.seed,
            counts,
        },
    )?;
    Ok(())
}

fn sample_dm<T: Real>(
    c: &Circuit,
    env: &Bindings,
    cfg: &ExecConfig,
    noise: &Option<NoiseModel>,
    qubits: &[usize],
    shots: u64,
    seed: u64,
) -> CliResult<std::collections::BTreeMap<String, u64>> {
    let rho = match noise {
        Some(model) => noisy_circuit(c, model)?.run_dm::<T>(env)?,
        None => DensityMatrix::<T>::run_with(c, env, None, cfg)?,
    };
    Ok(rho.sample(qubits, shots, seed)?)
}

fn cmd_expval<W: Write>(a: ExpvalArgs, out: &mut W) -> CliResult<()> {
    let c = load_circuit(&a.circuit)?;
    let h = load_hamiltonian(&a.hamiltonian)?;
    let env = parse_params(&a.params)?;
    let cfg = exec_config(&a.exec)?;
    let noise = a.noise.as_deref().map(load_noise).transpose()?;

    let mut result = ExpvalOutput {
        command: "expval".into(),
        backend: a.backend.name().into(),
        value: 0.0,
        std_err: None,
        n_trajectories: None,
    };
    match (a.backend, &noise) {
        (BackendArg::Sv, Some(model)) => {
            // Trajectory estimation always runs in Double.
            if a.exec.precision == PrecisionArg::Single {
                eprintln!("warning: trajectory estimation runs in double precision");
            }
            let est = noisy_circuit(&c, model)?.trajectory_expectation(&env, &h, a.shots, a.seed)?;
            result.value = est.mean;
            result.std_err = Some(est.std_err);
            result.n_trajectories = Some(est.n_trajectories);
        }
        (BackendArg::Sv, None) => {
            result.value = match a.exec.precision {
                PrecisionArg::Double => {
                    StateVector::<f64>::run_with(&c, &env, None, &cfg)?.expectation(&h)?
                }
                PrecisionArg::Single => {
                    StateVector::<f32>::run_with(&c, &env, None, &cfg)?.expectation(&h)?
                }
            };
        }
        (BackendArg::Dm, _) => {
            result.value = match a.exec.precision {
                PrecisionArg::Double => expval_dm::<f64>(&c, &env, &cfg, &noise, &h)?,
                PrecisionArg::Single => expval_dm::<f32>(&c, &env, &cfg, &noise, &h)?,
            };
        }
    }
    print_json(out, &result)?;
    Ok(())
}

fn expval_dm<T: Real>(
    c: &Circuit,
    env: &Bindings,
    cfg: &ExecConfig,
    noise: &Option<NoiseModel>,
    h: &PauliSum,
) -> CliResult<f64> {
    let rho = match noise {
        Some(model) => noisy_circuit(c, model)?.run_dm::<T>(env)?,
        None => DensityMatrix::<T>::run_with(c, env, None, cfg)?,
    };
    Ok(rho.expectation(h)?)
}

/// Batch CSV → task rows in circuit parameter order. The header must cover
/// exactly the circuit's parameters.
fn read_batch(path: &Path, param_order: &[String]) -> CliResult<Vec<Vec<f64>>> {
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("batch file `{}`: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut col_of = std::collections::HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        if col_of.insert(name.clone(), i).is_some() {
            return Err(CliError::input(format!(
                "batch CSV: duplicate column `{name}`"
            )));
        }
    }
    for name in &headers {
        if !param_order.contains(name) {
            return Err(CliError::input(format!(
                "batch CSV: column `{name}` is not a circuit parameter"
            )));
        }
    }
    let order: Vec<usize> = param_order
        .iter()
        .map(|p| {
            col_of.get(p).copied().ok_or_else(|| {
                CliError::input(format!("batch CSV: missing column for parameter `{p}`"))
            })
        })
        .collect::<CliResult<_>>()?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(order.len());
        for &i in &order {
            let field = record.get(i).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| {
                CliError::input(format!(
                    "batch CSV row {}: `{field}` in column `{}` is not a number",
                    line + 1,
                    headers[i]
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_grad<W: Write>(a: GradArgs, out: &mut W) -> CliResult<()> {
    let c = load_circuit(&a.circuit)?;
    let h = load_hamiltonian(&a.hamiltonian)?;
    let params = c.parameters();
    let batch = read_batch(&a.batch, &params)?;
    let task = GradientTask::new(c, vec![h], batch)?;
    let result = adjoint_gradient(&task)?;

    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string(), "value".to_string()];
    header.extend(params.iter().map(|p| format!("d_{p}")));
    w.write_record(&header)?;
    for r in 0..task.n_rows() {
        let mut record = vec![r.to_string(), result.values[r][0].to_string()];
        record.extend(result.grads[r][0].iter().map(|g| g.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_qaoa<W: Write>(a: QaoaArgs, out: &mut W) -> CliResult<()> {
    if a.layers == 0 {
        return Err(CliError::input("--layers: must be at least 1"));
    }
    let g = load_graph(&a.graph)?;
    let h = maxcut_hamiltonian(&g);
    let c = qaoa_circuit(&g, a.layers)?;
    let (opt, opt_name) = match a.optimizer {
        OptimizerArg::Gd => (
            OptimizerConfig::GradientDescent {
                lr: a.lr,
                iters: a.iters,
            },
            "gd",
        ),
        OptimizerArg::Adam => (OptimizerConfig::adam(a.lr, a.iters), "adam"),
        OptimizerArg::Lbfgs => (
            OptimizerConfig::Lbfgs {
                memory: a.memory,
                iters: a.iters,
            },
            "lbfgs",
        ),
    };
    let res = optimize(&c, &h, StartParams::Random(a.seed), &opt)?;

    let names = c.parameters();
    let env: Bindings = names
        .iter()
        .cloned()
        .zip(res.best_params.iter().copied())
        .collect();
    let psi = StateVector::<f64>::run(&c, &env)?;
    let qubits: Vec<usize> = (0..g.n_nodes()).collect();
    let counts = psi.sample(&qubits, a.shots, a.seed)?;

    // Sample keys render qubit n−1 leftmost; node q reads key[n−1−q].
    let n = g.n_nodes();
    let mut best_bitstring = String::new();
    let mut best_cut = f64::NEG_INFINITY;
    for key in counts.keys() {
        let assignment: Vec<bool> = (0..n).map(|q| key.as_bytes()[n - 1 - q] == b'1').collect();
        let cut = cut_value(&g, &assignment);
        if cut > best_cut + 1e-12 {
            best_cut = cut;
            best_bitstring = key.clone();
        }
    }

    print_json(
        out,
        &QaoaOutput {
            command: "qaoa".into(),
            n_nodes: g.n_nodes(),
            n_edges: g.edges().len(),
            total_weight: g.total_weight(),
            p: a.layers,
            optimizer: opt_name.into(),
            seed: a.seed,
            converged: res.converged,
            best_value: res.best_value,
            best_expected_cut: -res.best_value,
            best_params: names
                .into_iter()
                .zip(res.best_params.iter().copied())
                .map(|(name, value)| ParamValue { name, value })
                .collect(),
            best_bitstring,
            best_bitstring_cut: best_cut,
            trace: res.trace,
        },
    )?;
    Ok(())
}

fn parse_passes(text: &str) -> CliResult<(Vec<Pass>, Vec<String>)> {
    let mut passes = Vec::new();
    let mut names = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let pass = match token {
            "cancel" => Pass::CancelAdjacent,
            "merge" => Pass::MergeRotations,
            "decompose" => Pass::Decompose,
            _ => {
                return Err(CliError::input(format!(
                    "--passes: unknown pass `{token}` (expected cancel, merge, decompose)"
                )))
            }
        };
        passes.push(pass);
        names.push(token.to_string());
    }
    Ok((passes, names))
}

fn cmd_compile<W: Write>(a: CompileArgs, out: &mut W) -> CliResult<()> {
    let c = load_circuit(&a.circuit)?;
    let (passes, pass_names) = parse_passes(&a.passes)?;
    let compiled = optimize_circuit(&c, &passes)?;

    let mut result = CompileOutput {
        command: "compile".into(),
        passes: pass_names,
        n_gates_in: c.gates().len(),
        n_gates_out: compiled.gates().len(),
        circuit: serde_json::to_value(&compiled).expect("circuits serialize"),
        layout: None,
        swaps_inserted: None,
    };
    if let Some(spec) = &a.coupling {
        let cg = load_coupling(spec)?;
        let mapped = map_circuit(&compiled, &cg, a.seed)?;
        result.n_gates_out = mapped.compiled.gates().len();
        result.circuit = serde_json::to_value(&mapped.compiled).expect("circuits serialize");
        result.layout = Some(LayoutOutput {
            initial: mapped.initial_layout,
            final_: mapped.final_layout,
        });
        result.swaps_inserted = Some(mapped.swaps_inserted);
    }
    print_json(out, &result)?;
    Ok(())
}
