//! JSON output shapes. Every command's stdout deserializes back into one of
//! these, which is what the schema tests pin.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOutput {
    pub command: String,
    pub backend: String,
    pub precision: String,
    pub n_qubits: usize,
    pub n_gates: usize,
    /// State-vector norm (sv backend).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
    /// Density-matrix trace (dm backend).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleOutput {
    pub command: String,
    pub backend: String,
    pub shots: u64,
    pub seed: u64,
    /// Keys render the highest-indexed qubit leftmost.
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpvalOutput {
    pub command: String,
    pub backend: String,
    pub value: f64,
    /// Present only for trajectory estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_trajectories: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaoaOutput {
    pub command: String,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub total_weight: f64,
    pub p: usize,
    pub optimizer: String,
    pub seed: u64,
    pub converged: bool,
    /// Final ⟨H⟩; the expected cut is its negation.
    pub best_value: f64,
    pub best_expected_cut: f64,
    /// In circuit parameter order (g0, b0, g1, b1, ...).
    pub best_params: Vec<ParamValue>,
    pub best_bitstring: String,
    pub best_bitstring_cut: f64,
    /// Objective value per iteration, starting at the initial point.
    pub trace: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutOutput {
    pub initial: Vec<usize>,
    #[serde(rename = "final")]
    pub final_: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileOutput {
    pub command: String,
    pub passes: Vec<String>,
    pub n_gates_in: usize,
    pub n_gates_out: usize,
    pub circuit: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swaps_inserted: Option<usize>,
}

pub fn print_json<W: std::io::Write>(w: &mut W, value: &impl Serialize) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output structs serialize");
    writeln!(w, "{text}")
}
