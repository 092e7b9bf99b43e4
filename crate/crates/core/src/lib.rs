//! Hybrid quantum-classical simulation engine.
//!
//! State-vector and density-matrix backends with gate-class-specialized
//! kernels, channel-based noise, adjoint-method gradients, Pauli/fermion
//! operator algebra, QAOA workflows, and a DAG compiler with qubit mapping.

pub mod circuit;
pub mod compile;
pub mod dense;
pub mod dm;
pub mod error;
pub mod expr;
pub mod grad;
pub mod noise;
pub mod ops;
pub mod precision;
pub mod randcirc;
pub mod sv;
pub mod vqa;

pub use circuit::{gate_matrix, Circuit, GateClass, GateInstruction, GateKind};
pub use compile::{
    build_dag, circuit_unitary, map_circuit, optimize_circuit, pass_cancel_adjacent,
    pass_decompose, pass_merge_rotations, unpermute_amps, CouplingGraph, GateDag, MappingResult,
    Pass,
};
pub use dm::DensityMatrix;
pub use error::{Error, Result};
pub use expr::{Bindings, ParameterExpression};
pub use grad::{adjoint_gradient, fd_gradient, parameter_shift_gradient, GradientResult, GradientTask};
pub use precision::{Precision, Real};
pub use sv::{ExecConfig, ParallelConfig, PolicyKind, StateVector};
pub use vqa::{
    cut_value, hardware_efficient, maxcut_hamiltonian, optimize, qaoa_circuit, AnsatzSpec, Graph,
    OptimizeResult, OptimizerConfig, StartParams,
};
