//! Gate and circuit representation.
//!
//! A [`Circuit`] is an ordered list of [`GateInstruction`]s over `n_qubits`
//! wires. Any unitary gate accepts an arbitrary set of control qubits; CNOT
//! is X with one control rather than a distinct kind. Qubit 0 is the least
//! significant bit of a computational-basis index, so basis state `|i⟩` has
//! qubit `q` equal to bit `q` of `i`.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dense::DMatrix;
use crate::error::{Error, Result};
use crate::expr::{Bindings, ParameterExpression};

type C = Complex<f64>;

/// Gate kinds. `CustomMatrix` carries its payload on the instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    T,
    Swap,
    Rx,
    Ry,
    Rz,
    Rxx,
    Ryy,
    Rzz,
    PhaseShift,
    #[serde(rename = "custom")]
    CustomMatrix,
    Measure,
    Barrier,
}

/// Kernel dispatch class. X-like matrices are purely anti-diagonal, Z-like
/// purely diagonal; everything else takes the general pair/group kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateClass {
    XLike,
    ZLike,
    General,
}

/// Exact zero pattern of a matrix, for validating the class table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixPattern {
    Diagonal,
    AntiDiagonal,
    Mixed,
}

enum ArgPolicy {
    Required,
    Forbidden,
    Optional,
}

impl GateKind {
    /// Every kind, for exhaustive test sweeps.
    pub const ALL: [GateKind; 17] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::T,
        GateKind::Swap,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
        GateKind::PhaseShift,
        GateKind::CustomMatrix,
        GateKind::Measure,
        GateKind::Barrier,
    ];

    /// The unitary kinds (everything but Measure/Barrier).
    pub const UNITARY: [GateKind; 15] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::T,
        GateKind::Swap,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
        GateKind::PhaseShift,
        GateKind::CustomMatrix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Swap => "swap",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Rxx => "rxx",
            GateKind::Ryy => "ryy",
            GateKind::Rzz => "rzz",
            GateKind::PhaseShift => "phaseshift",
            GateKind::CustomMatrix => "custom",
            GateKind::Measure => "measure",
            GateKind::Barrier => "barrier",
        }
    }

    /// Fixed target count, or None for variable arity
    /// (CustomMatrix: 1 or 2 by payload size; Measure/Barrier: ≥ 1).
    pub fn fixed_targets(self) -> Option<usize> {
        match self {
            GateKind::X
            | GateKind::Y
            | GateKind::Z
            | GateKind::H
            | GateKind::S
            | GateKind::T
            | GateKind::Rx
            | GateKind::Ry
            | GateKind::Rz
            | GateKind::PhaseShift => Some(1),
            GateKind::Swap | GateKind::Rxx | GateKind::Ryy | GateKind::Rzz => Some(2),
            GateKind::CustomMatrix | GateKind::Measure | GateKind::Barrier => None,
        }
    }

    fn arg_policy(self) -> ArgPolicy {
        match self {
            GateKind::Rx
            | GateKind::Ry
            | GateKind::Rz
            | GateKind::Rxx
            | GateKind::Ryy
            | GateKind::Rzz
            | GateKind::PhaseShift => ArgPolicy::Required,
            GateKind::CustomMatrix => ArgPolicy::Optional,
            _ => ArgPolicy::Forbidden,
        }
    }

    /// True for rotations generated by a single Pauli word, R_P(θ)=exp(−iθP/2).
    pub fn is_r_family(self) -> bool {
        matches!(
            self,
            GateKind::Rx
                | GateKind::Ry
                | GateKind::Rz
                | GateKind::Rxx
                | GateKind::Ryy
                | GateKind::Rzz
        )
    }

    /// Static kernel-class table. Measure/Barrier have no class.
    pub fn class(self) -> Option<GateClass> {
        match self {
            GateKind::X | GateKind::Y => Some(GateClass::XLike),
            GateKind::Z
            | GateKind::S
            | GateKind::T
            | GateKind::Rz
            | GateKind::PhaseShift
            | GateKind::Rzz => Some(GateClass::ZLike),
            GateKind::H
            | GateKind::Rx
            | GateKind::Ry
            | GateKind::Rxx
            | GateKind::Ryy
            | GateKind::Swap
            | GateKind::CustomMatrix => Some(GateClass::General),
            GateKind::Measure | GateKind::Barrier => None,
        }
    }
}

impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One gate application. `targets[0]` addresses the least-significant bit of
/// the gate's own matrix index space (relevant for 4×4 custom matrices; the
/// built-in two-qubit kinds are symmetric).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateInstruction {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: BTreeSet<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arg: Option<ParameterExpression>,
    /// Row-major [re, im] entries; present iff kind is CustomMatrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
    /// Unitarity check escape hatch for kernel testing with custom payloads.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_non_unitary: bool,
    /// Classical label for Measure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl GateInstruction {
    /// Validating constructor for the standard kinds.
    pub fn new(
        kind: GateKind,
        targets: impl Into<Vec<usize>>,
        controls: impl IntoIterator<Item = usize>,
        arg: Option<ParameterExpression>,
    ) -> Result<Self> {
        let g = GateInstruction {
            kind,
            targets: targets.into(),
            controls: controls.into_iter().collect(),
            arg,
            matrix: None,
            allow_non_unitary: false,
            label: None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Custom-matrix gate; `entries` is row-major with length 4 or 16.
    pub fn custom(
        targets: impl Into<Vec<usize>>,
        controls: impl IntoIterator<Item = usize>,
        entries: Vec<[f64; 2]>,
        arg: Option<ParameterExpression>,
    ) -> Result<Self> {
        let g = GateInstruction {
            kind: GateKind::CustomMatrix,
            targets: targets.into(),
            controls: controls.into_iter().collect(),
            arg,
            matrix: Some(entries),
            allow_non_unitary: false,
            label: None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Custom-matrix gate skipping the unitarity check (kernel testing).
    pub fn custom_unchecked(
        targets: impl Into<Vec<usize>>,
        entries: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let g = GateInstruction {
            kind: GateKind::CustomMatrix,
            targets: targets.into(),
            controls: BTreeSet::new(),
            arg: None,
            matrix: Some(entries),
            allow_non_unitary: true,
            label: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn measure(targets: impl Into<Vec<usize>>, label: Option<String>) -> Result<Self> {
        let g = GateInstruction {
            kind: GateKind::Measure,
            targets: targets.into(),
            controls: BTreeSet::new(),
            arg: None,
            matrix: None,
            allow_non_unitary: false,
            label,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn barrier(targets: impl Into<Vec<usize>>) -> Result<Self> {
        let g = GateInstruction {
            kind: GateKind::Barrier,
            targets: targets.into(),
            controls: BTreeSet::new(),
            arg: None,
            matrix: None,
            allow_non_unitary: false,
            label: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, [q], [], None).expect("single-target gate")
    }
    pub fn x(q: usize) -> Self {
        Self::new(GateKind::X, [q], [], None).expect("single-target gate")
    }
    pub fn y(q: usize) -> Self {
        Self::new(GateKind::Y, [q], [], None).expect("single-target gate")
    }
    pub fn z(q: usize) -> Self {
        Self::new(GateKind::Z, [q], [], None).expect("single-target gate")
    }
    pub fn s(q: usize) -> Self {
        Self::new(GateKind::S, [q], [], None).expect("single-target gate")
    }
    pub fn t(q: usize) -> Self {
        Self::new(GateKind::T, [q], [], None).expect("single-target gate")
    }
    pub fn rx(q: usize, arg: impl Into<ParameterExpression>) -> Self {
        Self::new(GateKind::Rx, [q], [], Some(arg.into())).expect("single-target gate")
    }
    pub fn ry(q: usize, arg: impl Into<ParameterExpression>) -> Self {
        Self::new(GateKind::Ry, [q], [], Some(arg.into())).expect("single-target gate")
    }
    pub fn rz(q: usize, arg: impl Into<ParameterExpression>) -> Self {
        Self::new(GateKind::Rz, [q], [], Some(arg.into())).expect("single-target gate")
    }
    pub fn phase_shift(q: usize, arg: impl Into<ParameterExpression>) -> Self {
        Self::new(GateKind::PhaseShift, [q], [], Some(arg.into())).expect("single-target gate")
    }
    pub fn swap(a: usize, b: usize) -> Result<Self> {
        Self::new(GateKind::Swap, [a, b], [], None)
    }
    pub fn rxx(a: usize, b: usize, arg: impl Into<ParameterExpression>) -> Result<Self> {
        Self::new(GateKind::Rxx, [a, b], [], Some(arg.into()))
    }
    pub fn ryy(a: usize, b: usize, arg: impl Into<ParameterExpression>) -> Result<Self> {
        Self::new(GateKind::Ryy, [a, b], [], Some(arg.into()))
    }
    pub fn rzz(a: usize, b: usize, arg: impl Into<ParameterExpression>) -> Result<Self> {
        Self::new(GateKind::Rzz, [a, b], [], Some(arg.into()))
    }
    /// X on `target` controlled by `control`.
    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Self::new(GateKind::X, [target], [control], None)
    }

    /// Replace the control set, revalidating.
    pub fn with_controls(mut self, controls: impl IntoIterator<Item = usize>) -> Result<Self> {
        self.controls = controls.into_iter().collect();
        self.validate()?;
        Ok(self)
    }

    /// Kind-level validation (index ranges are the circuit's job).
    pub fn validate(&self) -> Result<()> {
        let got = self.targets.len();
        match self.kind.fixed_targets() {
            Some(want) if want != got => {
                return Err(Error::ArityMismatch {
                    kind: self.kind.name(),
                    expected: want,
                    got,
                });
            }
            None if got == 0 => {
                return Err(Error::ArityMismatch {
                    kind: self.kind.name(),
                    expected: 1,
                    got,
                });
            }
            _ => {}
        }
        let distinct: BTreeSet<_> = self.targets.iter().collect();
        if distinct.len() != self.targets.len() {
            return Err(Error::invalid("gate targets", "duplicate target qubit"));
        }
        for &t in &self.targets {
            if self.controls.contains(&t) {
                return Err(Error::OverlappingTargetControl(t));
            }
        }
        match self.kind.arg_policy() {
            ArgPolicy::Required if self.arg.is_none() => {
                return Err(Error::invalid(
                    "gate argument",
                    format!("{} requires an angle argument", self.kind),
                ));
            }
            ArgPolicy::Forbidden if self.arg.is_some() => {
                return Err(Error::invalid(
                    "gate argument",
                    format!("{} takes no argument", self.kind),
                ));
            }
            _ => {}
        }
        match (self.kind, &self.matrix) {
            (GateKind::CustomMatrix, None) => {
                return Err(Error::invalid("custom gate", "missing matrix payload"));
            }
            (GateKind::CustomMatrix, Some(entries)) => {
                let want = match self.targets.len() {
                    1 => 4,
                    2 => 16,
                    n => {
                        return Err(Error::ArityMismatch {
                            kind: "custom",
                            expected: 2,
                            got: n,
                        });
                    }
                };
                if entries.len() != want {
                    return Err(Error::invalid(
                        "custom gate",
                        format!("matrix has {} entries, expected {want}", entries.len()),
                    ));
                }
                if !entries.iter().all(|e| e[0].is_finite() && e[1].is_finite()) {
                    return Err(Error::NonFinite("custom matrix entry"));
                }
                if !self.allow_non_unitary {
                    let defect = self.payload_matrix().unwrap().unitarity_defect();
                    if defect > 1e-8 {
                        return Err(Error::NonUnitary(defect));
                    }
                }
            }
            (_, Some(_)) => {
                return Err(Error::invalid(
                    "gate matrix",
                    format!("{} does not take a matrix payload", self.kind),
                ));
            }
            _ => {}
        }
        if matches!(self.kind, GateKind::Measure | GateKind::Barrier) && !self.controls.is_empty()
        {
            return Err(Error::invalid(
                "gate controls",
                format!("{} cannot be controlled", self.kind),
            ));
        }
        if self.label.is_some() && self.kind != GateKind::Measure {
            return Err(Error::invalid("gate label", "only measure carries a label"));
        }
        Ok(())
    }

    /// Index-range validation against a circuit width.
    pub fn validate_for(&self, n_qubits: usize) -> Result<()> {
        for &q in self.targets.iter().chain(self.controls.iter()) {
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    n_qubits,
                });
            }
        }
        Ok(())
    }

    /// Targets then controls.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().copied().chain(self.controls.iter().copied())
    }

    pub fn is_parameterized(&self) -> bool {
        self.arg.as_ref().is_some_and(|a| !a.is_constant())
    }

    /// The custom payload as a dense matrix.
    pub fn payload_matrix(&self) -> Option<DMatrix> {
        let entries = self.matrix.as_ref()?;
        let dim = if entries.len() == 4 { 2 } else { 4 };
        let data: Vec<C> = entries.iter().map(|e| C::new(e[0], e[1])).collect();
        Some(DMatrix::from_rows(dim, dim, &data))
    }

    /// The adjoint gate. S/T become PhaseShift(−π/2)/(−π/4); rotations negate
    /// their argument; custom payloads are conjugate-transposed.
    pub fn adjoint(&self) -> Result<GateInstruction> {
        let mut g = self.clone();
        match self.kind {
            GateKind::Measure => return Err(Error::NonInvertible),
            GateKind::X
            | GateKind::Y
            | GateKind::Z
            | GateKind::H
            | GateKind::Swap
            | GateKind::Barrier => {}
            GateKind::S => {
                g.kind = GateKind::PhaseShift;
                g.arg = Some(ParameterExpression::constant(-FRAC_PI_2));
            }
            GateKind::T => {
                g.kind = GateKind::PhaseShift;
                g.arg = Some(ParameterExpression::constant(-FRAC_PI_4));
            }
            GateKind::Rx
            | GateKind::Ry
            | GateKind::Rz
            | GateKind::Rxx
            | GateKind::Ryy
            | GateKind::Rzz
            | GateKind::PhaseShift => {
                g.arg = Some(self.arg.as_ref().expect("validated rotation arg").neg());
            }
            GateKind::CustomMatrix => {
                let m = self.payload_matrix().expect("validated payload").adjoint();
                g.matrix = Some(m.data().iter().map(|z| [z.re, z.im]).collect());
            }
        }
        Ok(g)
    }

    /// The bound rotation angle, None for kinds without one.
    pub fn bound_angle(&self, env: &Bindings) -> Result<Option<f64>> {
        match &self.arg {
            Some(e) => Ok(Some(e.eval(env)?)),
            None => Ok(None),
        }
    }
}

#[derive(Deserialize)]
struct RawGate {
    kind: GateKind,
    #[serde(default)]
    targets: Vec<usize>,
    #[serde(default)]
    controls: BTreeSet<usize>,
    #[serde(default)]
    arg: Option<ParameterExpression>,
    #[serde(default)]
    matrix: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    allow_non_unitary: bool,
    #[serde(default)]
    label: Option<String>,
}

impl<'de> Deserialize<'de> for GateInstruction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawGate::deserialize(d)?;
        let g = GateInstruction {
            kind: raw.kind,
            targets: raw.targets,
            controls: raw.controls,
            arg: raw.arg,
            matrix: raw.matrix,
            allow_non_unitary: raw.allow_non_unitary,
            label: raw.label,
        };
        g.validate().map_err(serde::de::Error::custom)?;
        Ok(g)
    }
}

/// An ordered gate list over a fixed register width. Gate order is evolution
/// order: `gates[0]` is applied first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateInstruction>,
}

impl Circuit {
    /// Panics when `n_qubits` is zero; engines enforce their own upper caps.
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "circuit needs at least one qubit");
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateInstruction] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn append(&mut self, g: GateInstruction) -> Result<()> {
        g.validate()?;
        g.validate_for(self.n_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    /// Builder-style append.
    pub fn with(mut self, g: GateInstruction) -> Result<Self> {
        self.append(g)?;
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = GateInstruction>) -> Result<()> {
        for g in gates {
            self.append(g)?;
        }
        Ok(())
    }

    /// Rebuild from parts, validating every gate.
    pub fn from_gates(
        n_qubits: usize,
        gates: impl IntoIterator<Item = GateInstruction>,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("circuit", "n_qubits must be positive"));
        }
        let mut c = Circuit::new(n_qubits);
        c.extend(gates)?;
        Ok(c)
    }

    /// Union of parameter names across gate args, in first-appearance order.
    pub fn parameters(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for g in &self.gates {
            if let Some(arg) = &g.arg {
                for name in arg.names() {
                    if seen.insert(name.to_string()) {
                        out.push(name.to_string());
                    }
                }
            }
        }
        out
    }

    /// Reversed circuit of adjoint gates. Fails on Measure.
    pub fn inverse(&self) -> Result<Circuit> {
        let mut gates = Vec::with_capacity(self.gates.len());
        for g in self.gates.iter().rev() {
            gates.push(g.adjoint()?);
        }
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        serde_json::from_str(text).map_err(|e| Error::invalid("circuit JSON", e.to_string()))
    }
}

#[derive(Deserialize)]
struct RawCircuit {
    n_qubits: usize,
    gates: Vec<GateInstruction>,
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawCircuit::deserialize(d)?;
        Circuit::from_gates(raw.n_qubits, raw.gates).map_err(serde::de::Error::custom)
    }
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn diag2(a: C, b: C) -> DMatrix {
    DMatrix::two_by_two(a, c(0.0, 0.0), c(0.0, 0.0), b)
}

fn diag4(d: [C; 4]) -> DMatrix {
    let mut m = DMatrix::zeros(4, 4);
    for (i, v) in d.into_iter().enumerate() {
        m[(i, i)] = v;
    }
    m
}

/// The target-space unitary of a gate, ignoring controls. Rotations use the
/// convention R_P(θ) = exp(−iθP/2); PhaseShift(θ) = diag(1, e^{iθ}). For
/// two-qubit matrices `targets[0]` is the low-order index bit.
pub fn gate_matrix(g: &GateInstruction, env: &Bindings) -> Result<DMatrix> {
    let theta = g.bound_angle(env)?;
    let half = theta.map(|t| t / 2.0);
    Ok(match g.kind {
        GateKind::X => DMatrix::two_by_two(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
        GateKind::Y => DMatrix::two_by_two(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        GateKind::Z => diag2(c(1.0, 0.0), c(-1.0, 0.0)),
        GateKind::H => DMatrix::two_by_two(
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(-FRAC_1_SQRT_2, 0.0),
        ),
        GateKind::S => diag2(c(1.0, 0.0), c(0.0, 1.0)),
        GateKind::T => diag2(c(1.0, 0.0), C::from_polar(1.0, FRAC_PI_4)),
        GateKind::Swap => {
            let mut m = DMatrix::zeros(4, 4);
            m[(0, 0)] = c(1.0, 0.0);
            m[(1, 2)] = c(1.0, 0.0);
            m[(2, 1)] = c(1.0, 0.0);
            m[(3, 3)] = c(1.0, 0.0);
            m
        }
        GateKind::Rx => {
            let h = half.expect("validated rotation arg");
            let (cos, sin) = (h.cos(), h.sin());
            DMatrix::two_by_two(c(cos, 0.0), c(0.0, -sin), c(0.0, -sin), c(cos, 0.0))
        }
        GateKind::Ry => {
            let h = half.expect("validated rotation arg");
            let (cos, sin) = (h.cos(), h.sin());
            DMatrix::two_by_two(c(cos, 0.0), c(-sin, 0.0), c(sin, 0.0), c(cos, 0.0))
        }
        GateKind::Rz => {
            let h = half.expect("validated rotation arg");
            diag2(C::from_polar(1.0, -h), C::from_polar(1.0, h))
        }
        GateKind::PhaseShift => {
            let t = theta.expect("validated rotation arg");
            diag2(c(1.0, 0.0), C::from_polar(1.0, t))
        }
        GateKind::Rxx => {
            let h = half.expect("validated rotation arg");
            let (cos, msin) = (c(h.cos(), 0.0), c(0.0, -h.sin()));
            let mut m = diag4([cos, cos, cos, cos]);
            m[(0, 3)] = msin;
            m[(1, 2)] = msin;
            m[(2, 1)] = msin;
            m[(3, 0)] = msin;
            m
        }
        GateKind::Ryy => {
            // Y⊗Y has anti-diagonal (−1, 1, 1, −1).
            let h = half.expect("validated rotation arg");
            let (cos, isin) = (c(h.cos(), 0.0), c(0.0, h.sin()));
            let mut m = diag4([cos, cos, cos, cos]);
            m[(0, 3)] = isin;
            m[(1, 2)] = -isin;
            m[(2, 1)] = -isin;
            m[(3, 0)] = isin;
            m
        }
        GateKind::Rzz => {
            let h = half.expect("validated rotation arg");
            let (m, p) = (C::from_polar(1.0, -h), C::from_polar(1.0, h));
            diag4([m, p, p, m])
        }
        GateKind::CustomMatrix => g.payload_matrix().expect("validated payload"),
        GateKind::Barrier => DMatrix::identity(1 << g.targets.len()),
        GateKind::Measure => {
            return Err(Error::invalid("gate matrix", "measure has no unitary matrix"));
        }
    })
}

/// Exact zero-pattern of a square matrix.
pub fn matrix_pattern(m: &DMatrix) -> MatrixPattern {
    let n = m.rows();
    let zero = c(0.0, 0.0);
    let diag_only = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == zero));
    if diag_only {
        return MatrixPattern::Diagonal;
    }
    let anti_only = (0..n).all(|i| (0..n).all(|j| j == n - 1 - i || m[(i, j)] == zero));
    if anti_only {
        return MatrixPattern::AntiDiagonal;
    }
    MatrixPattern::Mixed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{controlled, embed};
    use crate::expr::bindings;
    use std::f64::consts::PI;

    fn no_env() -> Bindings {
        Bindings::new()
    }

    #[test]
    fn x_matrix() {
        let m = gate_matrix(&GateInstruction::x(0), &no_env()).unwrap();
        assert_eq!(m[(0, 1)], c(1.0, 0.0));
        assert_eq!(m[(1, 0)], c(1.0, 0.0));
        assert_eq!(m[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn rx_pi_is_minus_i_x() {
        let m = gate_matrix(&GateInstruction::rx(0, PI), &no_env()).unwrap();
        assert!((m[(0, 1)] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((m[(1, 0)] - c(0.0, -1.0)).norm() < 1e-15);
        assert!(m[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn rzz_matches_diagonal_exponential_oracle() {
        // Oracle: Rzz(θ) = exp(−iθ(Z⊗Z)/2); Z⊗Z is diagonal so the
        // exponential is the entrywise exponential of its diagonal.
        let z = gate_matrix(&GateInstruction::z(0), &no_env()).unwrap();
        let zz = z.kron(&z);
        for theta in [FRAC_PI_2, 0.7531, -1.234] {
            let mut oracle = DMatrix::zeros(4, 4);
            for i in 0..4 {
                oracle[(i, i)] = (zz[(i, i)] * c(0.0, -theta / 2.0)).exp();
            }
            let g = GateInstruction::rzz(0, 1, theta).unwrap();
            let m = gate_matrix(&g, &no_env()).unwrap();
            assert!(m.max_abs_diff(&oracle) < 1e-15, "theta={theta}");
        }
        // Pinned θ=π/2 values.
        let g = GateInstruction::rzz(0, 1, FRAC_PI_2).unwrap();
        let m = gate_matrix(&g, &no_env()).unwrap();
        assert!((m[(0, 0)] - C::from_polar(1.0, -FRAC_PI_4)).norm() < 1e-15);
        assert!((m[(1, 1)] - C::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
        assert!((m[(2, 2)] - C::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
        assert!((m[(3, 3)] - C::from_polar(1.0, -FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn rxx_ryy_match_kron_exponential_oracle() {
        // For P⊗P with P² = I: exp(−iθP⊗P/2) = cos(θ/2)I − i·sin(θ/2)·P⊗P.
        for (kind, single) in [(GateKind::Rxx, GateKind::X), (GateKind::Ryy, GateKind::Y)] {
            let p = gate_matrix(
                &GateInstruction::new(single, [0], [], None).unwrap(),
                &no_env(),
            )
            .unwrap();
            let pp = p.kron(&p);
            let theta = 0.9137_f64;
            let oracle = DMatrix::identity(4)
                .scale(c((theta / 2.0).cos(), 0.0))
                .add(&pp.scale(c(0.0, -(theta / 2.0).sin())));
            let g = GateInstruction::new(
                kind,
                [0, 1],
                [],
                Some(ParameterExpression::constant(theta)),
            )
            .unwrap();
            let m = gate_matrix(&g, &no_env()).unwrap();
            assert!(m.max_abs_diff(&oracle) < 1e-15, "{kind}");
        }
    }

    fn sample_gate(kind: GateKind, theta: f64) -> GateInstruction {
        let arg = Some(ParameterExpression::constant(theta));
        match kind.fixed_targets() {
            Some(1) => match kind.arg_policy() {
                ArgPolicy::Required => GateInstruction::new(kind, [0], [], arg).unwrap(),
                _ => GateInstruction::new(kind, [0], [], None).unwrap(),
            },
            Some(2) => match kind.arg_policy() {
                ArgPolicy::Required => GateInstruction::new(kind, [0, 1], [], arg).unwrap(),
                _ => GateInstruction::new(kind, [0, 1], [], None).unwrap(),
            },
            _ => GateInstruction::custom(
                [0],
                [],
                vec![
                    [0.6, 0.0],
                    [0.0, 0.8],
                    [0.0, 0.8],
                    [0.6, 0.0],
                ],
                None,
            )
            .unwrap(),
        }
    }

    #[test]
    fn every_unitary_kind_is_unitary_and_inverts() {
        for kind in GateKind::UNITARY {
            for theta in [0.3, 1.7, -2.5] {
                let g = sample_gate(kind, theta);
                let m = gate_matrix(&g, &no_env()).unwrap();
                assert!(m.unitarity_defect() < 1e-12, "{kind} not unitary");
                let inv = gate_matrix(&g.adjoint().unwrap(), &no_env()).unwrap();
                let prod = m.matmul(&inv);
                assert!(
                    prod.max_abs_diff(&DMatrix::identity(m.rows())) < 1e-10,
                    "{kind} inverse fails"
                );
            }
        }
    }

    #[test]
    fn class_table_matches_zero_pattern() {
        // Generic angle: avoids accidental zeros at special values.
        let theta = 0.7531;
        for kind in GateKind::UNITARY {
            let g = sample_gate(kind, theta);
            let m = gate_matrix(&g, &no_env()).unwrap();
            let pattern = matrix_pattern(&m);
            match kind.class().unwrap() {
                GateClass::ZLike => assert_eq!(pattern, MatrixPattern::Diagonal, "{kind}"),
                GateClass::XLike => assert_eq!(pattern, MatrixPattern::AntiDiagonal, "{kind}"),
                GateClass::General => assert_eq!(pattern, MatrixPattern::Mixed, "{kind}"),
            }
        }
    }

    #[test]
    fn zlike_pattern_holds_for_all_angles() {
        for kind in [GateKind::Rz, GateKind::PhaseShift, GateKind::Rzz] {
            for theta in [0.0, 0.5, PI, -1.2, 6.0] {
                let g = sample_gate(kind, theta);
                let m = gate_matrix(&g, &no_env()).unwrap();
                assert_eq!(matrix_pattern(&m), MatrixPattern::Diagonal);
            }
        }
    }

    #[test]
    fn append_validates() {
        let mut circ = Circuit::new(2);
        circ.append(GateInstruction::h(0)).unwrap();
        assert_eq!(circ.len(), 1);

        let overlap = GateInstruction::new(GateKind::X, [0], [0], None);
        assert_eq!(overlap.unwrap_err(), Error::OverlappingTargetControl(0));

        let out_of_range = circ.append(GateInstruction::x(5));
        assert_eq!(
            out_of_range.unwrap_err(),
            Error::IndexOutOfRange {
                index: 5,
                n_qubits: 2
            }
        );
    }

    #[test]
    fn arity_and_arg_validation() {
        assert!(matches!(
            GateInstruction::new(GateKind::Swap, [0], [], None),
            Err(Error::ArityMismatch { expected: 2, got: 1, .. })
        ));
        assert!(GateInstruction::new(GateKind::Rx, [0], [], None).is_err());
        assert!(GateInstruction::new(
            GateKind::H,
            [0],
            [],
            Some(ParameterExpression::constant(1.0))
        )
        .is_err());
        assert!(GateInstruction::new(GateKind::Swap, [1, 1], [], None).is_err());
    }

    #[test]
    fn custom_matrix_unitarity_gate() {
        // 1% stretch of the identity: defect ~2e-2 > 1e-8.
        let near = vec![[1.01, 0.0], [0.0, 0.0], [0.0, 0.0], [1.01, 0.0]];
        match GateInstruction::custom([0], [], near.clone(), None) {
            Err(Error::NonUnitary(d)) => assert!(d > 1e-8),
            other => panic!("expected NonUnitary, got {other:?}"),
        }
        let g = GateInstruction::custom_unchecked([0], near).unwrap();
        assert!(g.allow_non_unitary);
    }

    #[test]
    fn inverse_of_rx_negates_arg() {
        let a = ParameterExpression::variable("a").unwrap();
        let circ = Circuit::new(1).with(GateInstruction::rx(0, a.clone())).unwrap();
        let inv = circ.inverse().unwrap();
        assert_eq!(inv.gates()[0].arg, Some(a.neg()));
        assert_eq!(inv.gates()[0].kind, GateKind::Rx);
    }

    #[test]
    fn inverse_reverses_self_adjoint_gates() {
        let circ = Circuit::new(2)
            .with(GateInstruction::h(0))
            .unwrap()
            .with(GateInstruction::cnot(0, 1).unwrap())
            .unwrap();
        let inv = circ.inverse().unwrap();
        assert_eq!(inv.gates()[0].kind, GateKind::X);
        assert_eq!(inv.gates()[0].controls.iter().copied().collect::<Vec<_>>(), vec![0]);
        assert_eq!(inv.gates()[1].kind, GateKind::H);
    }

    #[test]
    fn inverse_rejects_measure() {
        let circ = Circuit::new(1)
            .with(GateInstruction::measure([0], None).unwrap())
            .unwrap();
        assert_eq!(circ.inverse().unwrap_err(), Error::NonInvertible);
    }

    #[test]
    fn s_and_t_adjoints_are_phase_shifts() {
        let s_dag = GateInstruction::s(0).adjoint().unwrap();
        assert_eq!(s_dag.kind, GateKind::PhaseShift);
        let m = gate_matrix(&s_dag, &no_env()).unwrap();
        assert!((m[(1, 1)] - c(0.0, -1.0)).norm() < 1e-15);

        let t_dag = GateInstruction::t(0).adjoint().unwrap();
        let m = gate_matrix(&t_dag, &no_env()).unwrap();
        assert!((m[(1, 1)] - C::from_polar(1.0, -FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn parameters_first_appearance_order() {
        let b_then_a = ParameterExpression::variable("zeta").unwrap();
        let circ = Circuit::new(2)
            .with(GateInstruction::rx(0, b_then_a))
            .unwrap()
            .with(GateInstruction::ry(1, ParameterExpression::variable("alpha").unwrap()))
            .unwrap()
            .with(GateInstruction::h(0))
            .unwrap();
        assert_eq!(circ.parameters(), vec!["zeta", "alpha"]);
        // Stable under appending non-parameterized gates.
        let circ = circ.with(GateInstruction::x(1)).unwrap();
        assert_eq!(circ.parameters(), vec!["zeta", "alpha"]);
    }

    #[test]
    fn json_shape_matches_schema() {
        let circ = Circuit::new(2)
            .with(GateInstruction::rx(0, ParameterExpression::variable("a").unwrap()))
            .unwrap();
        let json = serde_json::to_value(&circ).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "n_qubits": 2,
                "gates": [{
                    "kind": "rx",
                    "targets": [0],
                    "controls": [],
                    "arg": {"terms": {"a": 1.0}, "const": 0.0}
                }]
            })
        );
        let back: Circuit = serde_json::from_value(json).unwrap();
        assert_eq!(back, circ);
    }

    #[test]
    fn json_rejects_invalid_gates() {
        let bad = serde_json::json!({
            "n_qubits": 2,
            "gates": [{"kind": "x", "targets": [0], "controls": [0]}]
        });
        assert!(serde_json::from_value::<Circuit>(bad).is_err());
        let out_of_range = serde_json::json!({
            "n_qubits": 1,
            "gates": [{"kind": "x", "targets": [3], "controls": []}]
        });
        assert!(serde_json::from_value::<Circuit>(out_of_range).is_err());
    }

    #[test]
    fn controlled_embedding_oracle_sanity() {
        // CNOT(control 0 → target 1) as the embedded dense matrix:
        // |01⟩ (q0=1) maps to |11⟩.
        let g = GateInstruction::cnot(0, 1).unwrap();
        let base = gate_matrix(&g, &no_env()).unwrap();
        let cu = controlled(&base, 1);
        let qubits: Vec<usize> = g.qubits().collect();
        let full = embed(&cu, &qubits, 2);
        assert_eq!(full[(3, 1)], c(1.0, 0.0));
        assert_eq!(full[(1, 3)], c(1.0, 0.0));
        assert_eq!(full[(0, 0)], c(1.0, 0.0));
        assert_eq!(full[(2, 2)], c(1.0, 0.0));
    }

    #[test]
    fn bound_angle_reports_missing_parameter() {
        let g = GateInstruction::rx(0, ParameterExpression::variable("a").unwrap());
        assert_eq!(
            gate_matrix(&g, &no_env()).unwrap_err(),
            Error::MissingParameter("a".into())
        );
        let m = gate_matrix(&g, &bindings([("a", PI)])).unwrap();
        assert!((m[(0, 1)] - c(0.0, -1.0)).norm() < 1e-15);
    }
}
