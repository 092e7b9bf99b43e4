//! Gradients of expectation values with respect to circuit parameters.
//!
//! The adjoint method runs one forward pass per batch row, then one backward
//! sweep per Hamiltonian: with |φ⟩ = H|ψ_N⟩ held alongside |ψ_k⟩, each gate
//! contributes ∂⟨H⟩/∂θ_k = 2·Re⟨φ|(−iG_k/2)|ψ_k⟩ = Im⟨φ|G_k|ψ_k⟩ through a
//! fused inner product before both states un-apply U_k. Finite differences
//! and the parameter-shift rule provide independent cross-checks.

use num_complex::Complex;

use crate::circuit::{Circuit, GateInstruction, GateKind};
use crate::error::{Error, Result};
use crate::expr::Bindings;
use crate::ops::{PauliSum, apply_string_amps};
use crate::sv::{ExecConfig, StateVector};

type C = Complex<f64>;

/// A gradient evaluation request: one circuit, one or more Hermitian
/// observables, and a batch of parameter-value rows.
#[derive(Debug, Clone)]
pub struct GradientTask {
    circuit: Circuit,
    hams: Vec<PauliSum>,
    param_names: Vec<String>,
    batch: Vec<Vec<f64>>,
}

impl GradientTask {
    /// Validates shapes up front: Hamiltonians nonempty, bound, Hermitian,
    /// and in range; rows bind every circuit parameter; no Measure gates.
    pub fn new(circuit: Circuit, hams: Vec<PauliSum>, batch: Vec<Vec<f64>>) -> Result<Self> {
        if hams.is_empty() {
            return Err(Error::invalid(
                "gradient task",
                "at least one Hamiltonian required",
            ));
        }
        for h in &hams {
            h.bound_terms()?;
            h.check_hermitian()?;
            if let Some(q) = h.max_qubit() {
                if q >= circuit.n_qubits() {
                    return Err(Error::IndexOutOfRange {
                        index: q,
                        n_qubits: circuit.n_qubits(),
                    });
                }
            }
        }
        if circuit.gates().iter().any(|g| g.kind == GateKind::Measure) {
            return Err(Error::NonInvertible);
        }
        let param_names = circuit.parameters();
        for row in &batch {
            if row.len() != param_names.len() {
                return Err(Error::invalid(
                    "gradient task",
                    format!(
                        "row has {} values for {} parameters",
                        row.len(),
                        param_names.len()
                    ),
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("parameter value"));
            }
        }
        Ok(GradientTask {
            circuit,
            hams,
            param_names,
            batch,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn hams(&self) -> &[PauliSum] {
        &self.hams
    }

    /// Parameter names in circuit first-appearance order; gradient columns
    /// use this order.
    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn batch(&self) -> &[Vec<f64>] {
        &self.batch
    }

    pub fn n_rows(&self) -> usize {
        self.batch.len()
    }

    fn env_for(&self, row: &[f64]) -> Bindings {
        self.param_names
            .iter()
            .cloned()
            .zip(row.iter().copied())
            .collect()
    }
}

/// Values and partials, plus the kernel-application count behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientResult {
    /// [row][ham].
    pub values: Vec<Vec<f64>>,
    /// [row][ham][param], ordered as `GradientTask::param_names`.
    pub grads: Vec<Vec<Vec<f64>>>,
    /// Total gate kernel invocations across the evaluation.
    pub gate_applications: u64,
}

impl GradientResult {
    fn check_finite(self) -> Result<Self> {
        let vals_ok = self.values.iter().flatten().all(|v| v.is_finite());
        let grads_ok = self.grads.iter().flatten().flatten().all(|v| v.is_finite());
        if vals_ok && grads_ok {
            Ok(self)
        } else {
            Err(Error::NonFinite("gradient result"))
        }
    }
}

/// Adjoint-method gradients: per row one forward pass; per Hamiltonian one
/// backward sweep with two un-applications per gate. Never O(N·P).
pub fn adjoint_gradient(task: &GradientTask) -> Result<GradientResult> {
    let cfg = ExecConfig::default();
    let gates = task.circuit.gates();
    let n_params = task.param_names.len();
    let mut values = Vec::with_capacity(task.batch.len());
    let mut grads = Vec::with_capacity(task.batch.len());
    let mut apps = 0u64;

    for row in &task.batch {
        let env = task.env_for(row);
        let mut psi = StateVector::<f64>::new(task.circuit.n_qubits())?;
        for g in gates {
            psi.apply_with(g, &env, &cfg)?;
        }
        apps += psi.gate_applications();

        let mut row_values = Vec::with_capacity(task.hams.len());
        let mut row_grads = Vec::with_capacity(task.hams.len());
        for h in &task.hams {
            row_values.push(psi.expectation(h)?);
            let mut partials = vec![0f64; n_params];

            let mut psi_k = psi.clone();
            psi_k.reset_gate_applications();
            let mut phi = apply_sum(h, &psi_k)?;
            for g in gates.iter().rev() {
                if g.kind == GateKind::Barrier {
                    continue;
                }
                if let Some(arg) = g.arg.as_ref().filter(|a| !a.is_constant()) {
                    let dtheta = angle_partial(g, &phi, &psi_k)?;
                    for (name, coeff) in arg.iter_terms() {
                        let idx = task
                            .param_names
                            .iter()
                            .position(|n| n == name)
                            .expect("parameters() covers every gate name");
                        partials[idx] += coeff * dtheta;
                    }
                }
                let adj = g.adjoint()?;
                psi_k.apply_with(&adj, &env, &cfg)?;
                phi.apply_with(&adj, &env, &cfg)?;
            }
            apps += psi_k.gate_applications() + phi.gate_applications();
            row_grads.push(partials);
        }
        values.push(row_values);
        grads.push(row_grads);
    }
    GradientResult {
        values,
        grads,
        gate_applications: apps,
    }
    .check_finite()
}

/// Central finite differences, (f(θ+h)−f(θ−h))/2h per parameter.
pub fn fd_gradient(task: &GradientTask, h: f64) -> Result<GradientResult> {
    if !(1e-8..=1e-2).contains(&h) {
        return Err(Error::invalid(
            "fd step",
            format!("{h} is outside [1e-8, 1e-2]"),
        ));
    }
    let n_params = task.param_names.len();
    let mut values = Vec::with_capacity(task.batch.len());
    let mut grads = Vec::with_capacity(task.batch.len());
    let mut apps = 0u64;

    for row in &task.batch {
        let (base, a) = eval_all(task, row)?;
        apps += a;
        values.push(base);
        let mut row_grads = vec![vec![0f64; n_params]; task.hams.len()];
        for p in 0..n_params {
            let mut plus = row.clone();
            plus[p] += h;
            let mut minus = row.clone();
            minus[p] -= h;
            let (fp, a1) = eval_all(task, &plus)?;
            let (fm, a2) = eval_all(task, &minus)?;
            apps += a1 + a2;
            for (hi, g) in row_grads.iter_mut().enumerate() {
                g[p] = (fp[hi] - fm[hi]) / (2.0 * h);
            }
        }
        grads.push(row_grads);
    }
    GradientResult {
        values,
        grads,
        gate_applications: apps,
    }
    .check_finite()
}

/// Exact parameter-shift gradients, g = [f(θ+π/2) − f(θ−π/2)]/2 per gate
/// occurrence. Valid for the R family and PhaseShift (frequency-1 gates);
/// controlled parameterized gates and parameterized custom matrices are
/// rejected.
pub fn parameter_shift_gradient(task: &GradientTask) -> Result<GradientResult> {
    let gates = task.circuit.gates();
    let n_params = task.param_names.len();
    let mut values = Vec::with_capacity(task.batch.len());
    let mut grads = Vec::with_capacity(task.batch.len());
    let mut apps = 0u64;

    for row in &task.batch {
        let env = task.env_for(row);
        let (base, a) = eval_all(task, row)?;
        apps += a;
        values.push(base);
        let mut row_grads = vec![vec![0f64; n_params]; task.hams.len()];

        for (k, g) in gates.iter().enumerate() {
            let Some(arg) = g.arg.as_ref().filter(|a| !a.is_constant()) else {
                continue;
            };
            if !(g.kind.is_r_family() || g.kind == GateKind::PhaseShift) {
                return Err(Error::UnsupportedGateForShift(g.kind.name().to_string()));
            }
            if !g.controls.is_empty() {
                return Err(Error::UnsupportedGateForShift(format!(
                    "controlled {}",
                    g.kind.name()
                )));
            }
            let theta = arg.eval(&env)?;
            let (fp, a1) = eval_shifted(task, &env, k, theta + std::f64::consts::FRAC_PI_2)?;
            let (fm, a2) = eval_shifted(task, &env, k, theta - std::f64::consts::FRAC_PI_2)?;
            apps += a1 + a2;
            for (hi, grad_row) in row_grads.iter_mut().enumerate() {
                let d_k = (fp[hi] - fm[hi]) / 2.0;
                for (name, coeff) in arg.iter_terms() {
                    let idx = task
                        .param_names
                        .iter()
                        .position(|n| n == name)
                        .expect("parameters() covers every gate name");
                    grad_row[idx] += coeff * d_k;
                }
            }
        }
        grads.push(row_grads);
    }
    GradientResult {
        values,
        grads,
        gate_applications: apps,
    }
    .check_finite()
}

/// Forward pass plus one expectation per Hamiltonian.
fn eval_all(task: &GradientTask, row: &[f64]) -> Result<(Vec<f64>, u64)> {
    let env = task.env_for(row);
    let mut psi = StateVector::<f64>::new(task.circuit.n_qubits())?;
    for g in task.circuit.gates() {
        psi.apply_with(g, &env, &ExecConfig::default())?;
    }
    let vals = task
        .hams
        .iter()
        .map(|h| psi.expectation(h))
        .collect::<Result<Vec<f64>>>()?;
    Ok((vals, psi.gate_applications()))
}

/// Forward pass with gate `k`'s angle pinned to a constant.
fn eval_shifted(
    task: &GradientTask,
    env: &Bindings,
    k: usize,
    angle: f64,
) -> Result<(Vec<f64>, u64)> {
    let mut psi = StateVector::<f64>::new(task.circuit.n_qubits())?;
    let cfg = ExecConfig::default();
    for (i, g) in task.circuit.gates().iter().enumerate() {
        if i == k {
            let mut shifted = g.clone();
            shifted.arg = Some(crate::expr::ParameterExpression::constant(angle));
            psi.apply_with(&shifted, env, &cfg)?;
        } else {
            psi.apply_with(g, env, &cfg)?;
        }
    }
    let vals = task
        .hams
        .iter()
        .map(|h| psi.expectation(h))
        .collect::<Result<Vec<f64>>>()?;
    Ok((vals, psi.gate_applications()))
}

/// |φ⟩ = H|ψ⟩ accumulated per Pauli string; no kernel applications.
fn apply_sum(h: &PauliSum, psi: &StateVector<f64>) -> Result<StateVector<f64>> {
    let bound = h.bound_terms()?;
    let mut phi = vec![C::new(0.0, 0.0); psi.len()];
    let mut scratch: Vec<C> = Vec::with_capacity(psi.len());
    for (s, c) in bound {
        scratch.clear();
        scratch.extend_from_slice(psi.amps());
        apply_string_amps(&mut scratch, s);
        for (p, v) in phi.iter_mut().zip(&scratch) {
            *p += c * v;
        }
    }
    StateVector::from_amps(psi.n_qubits(), phi)
}

/// ∂⟨H⟩/∂θ for one gate: Im⟨φ|Π_c G|ψ_k⟩ for R-family generators G,
/// −2·Im⟨φ|Π_c N̂|ψ_k⟩ for PhaseShift, with Π_c restricting the sum to
/// control-satisfying indices.
fn angle_partial(
    g: &GateInstruction,
    phi: &StateVector<f64>,
    psi: &StateVector<f64>,
) -> Result<f64> {
    let ctrl = g.controls.iter().fold(0usize, |acc, &c| acc | (1 << c));
    if g.kind == GateKind::PhaseShift {
        let need = ctrl | (1 << g.targets[0]);
        let mut w = C::new(0.0, 0.0);
        for (i, (f, p)) in phi.amps().iter().zip(psi.amps()).enumerate() {
            if i & need == need {
                w += f.conj() * p;
            }
        }
        return Ok(-2.0 * w.im);
    }
    let (xmask, ymask, zmask) = generator_masks(g)?;
    let ny = (ymask as u64).count_ones();
    let mut z = C::new(0.0, 0.0);
    for (i, f) in phi.amps().iter().enumerate() {
        if i & ctrl == ctrl {
            let phase: C = crate::ops::string_phase(i, ymask, zmask, ny);
            z += f.conj() * phase * psi.amps()[i ^ xmask];
        }
    }
    Ok(z.im)
}

/// Pauli-word generator masks for R_P(θ) = exp(−iθP/2).
fn generator_masks(g: &GateInstruction) -> Result<(usize, usize, usize)> {
    let bits: usize = g.targets.iter().map(|&t| 1usize << t).sum();
    Ok(match g.kind {
        GateKind::Rx => (bits, 0, 0),
        GateKind::Ry => (bits, bits, 0),
        GateKind::Rz => (0, 0, bits),
        GateKind::Rxx => (bits, 0, 0),
        GateKind::Ryy => (bits, bits, 0),
        GateKind::Rzz => (0, 0, bits),
        _ => return Err(Error::NonDifferentiableGate(g.kind.name().to_string())),
    })
}
