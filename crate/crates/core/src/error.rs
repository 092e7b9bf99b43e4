//! Error type shared by every engine and pass in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building or simulating a circuit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parameter `{0}` is not bound")]
    MissingParameter(String),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit {0} appears as both target and control")]
    OverlappingTargetControl(usize),

    #[error("{kind} expects {expected} target(s), got {got}")]
    ArityMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("gate argument is {0} for this kind")]
    BadArgument(&'static str),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("circuit contains a measurement and cannot be inverted")]
    NonInvertible,

    #[error("mid-circuit measurement is not supported; measurements must be terminal")]
    MidCircuitMeasure,

    #[error("cannot multiply operator sums with parameterized coefficients")]
    ParameterizedProduct,

    #[error("observable is not Hermitian")]
    NonHermitian,

    #[error("observable coefficient contains unbound parameters")]
    UnboundCoefficient,

    #[error("Kraus operators do not sum to identity (deviation {0:.3e})")]
    IncompleteChannel(f64),

    #[error("trajectory branch probabilities vanish (total {0:.3e})")]
    ZeroNormBranch(f64),

    #[error("gate has no known derivative: {0}")]
    NonDifferentiableGate(String),

    #[error("parameter-shift rule does not apply to gate: {0}")]
    UnsupportedGateForShift(String),

    #[error("no basis decomposition for {0}")]
    UnsupportedDecomposition(String),

    #[error("circuit uses {logical} logical qubits but the coupling graph has {physical}")]
    TooManyLogicalQubits { logical: usize, physical: usize },

    #[error("objective diverged to a non-finite value at iteration {0}")]
    DivergedObjective(usize),

    #[error("{0} qubits exceeds the configured cap of {1}")]
    QubitCapExceeded(usize, usize),

    #[error("value must be finite: {0}")]
    NonFinite(&'static str),

    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }
}
