//! Shared fixtures for the engine benchmarks. Everything is seeded so runs
//! are comparable across machines and commits.

use qforge_core::noise::{noisy_circuit, ChannelSpec, NoiseModel, NoisyCircuit};
use qforge_core::ops::{PauliString, PauliSum};
use qforge_core::randcirc;
use qforge_core::{Bindings, Circuit, GradientTask};

pub fn env() -> Bindings {
    Bindings::new()
}

/// Dense random circuit for state-vector timing.
pub fn sv_circuit(n_qubits: usize) -> Circuit {
    randcirc::bench_circuit(n_qubits, 10, 3)
}

/// Small register, kept within the density-matrix cap.
pub fn dm_circuit() -> Circuit {
    randcirc::bench_circuit(6, 10, 5)
}

/// A parameterized circuit and observable batch sized like a VQA step.
pub fn grad_task() -> GradientTask {
    let c = randcirc::grad_circuit(8, 40, &["a", "b", "c", "d"], 11);
    let n = c.parameters().len();
    let mut h = PauliSum::term(PauliString::parse("Z0 Z1").unwrap(), 1.0);
    h.add_term(PauliString::parse("X2 Z5").unwrap(), 0.5);
    GradientTask::new(c, vec![h], vec![vec![0.4; n]]).unwrap()
}

/// Depolarizing noise after every gate of a 3-qubit circuit.
pub fn noisy() -> NoisyCircuit {
    let c = randcirc::bench_circuit(3, 6, 7);
    let model = NoiseModel {
        default: Some(ChannelSpec::Depolarizing { p: 0.02 }),
        per_kind: Default::default(),
    };
    noisy_circuit(&c, &model).unwrap()
}

/// Hamiltonian matching the trajectory fixture.
pub fn noisy_observable() -> PauliSum {
    let mut h = PauliSum::term(PauliString::parse("Z0 Z1").unwrap(), 1.0);
    h.add_term(PauliString::parse("X2").unwrap(), 0.5);
    h
}
