//! DAG-based circuit passes and coupling-constrained qubit mapping.
//!
//! The decompose pass targets the basis {RX, RY, RZ, PhaseShift, CNOT}.
//! Controlled one-qubit constants go through ZYZ/ABC constructions with the
//! global phase re-emitted as a PhaseShift on the control, so every expansion
//! is exact as a matrix; uncontrolled expansions may drop a global phase.
//! Gates with three or more input controls are rejected.

use std::collections::{BTreeSet, VecDeque};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{gate_matrix, Circuit, GateInstruction, GateKind};
use crate::dense::{self, DMatrix};
use crate::error::{Error, Result};
use crate::expr::{Bindings, ParameterExpression};

type C = Complex<f64>;

/// Dense unitary of a whole circuit, for oracle checks on small widths.
pub fn circuit_unitary(c: &Circuit, env: &Bindings) -> Result<DMatrix> {
    let n = c.n_qubits();
    let mut u = DMatrix::identity(1 << n);
    for g in c.gates() {
        match g.kind {
            GateKind::Barrier => continue,
            GateKind::Measure => return Err(Error::NonInvertible),
            _ => {}
        }
        let m = gate_matrix(g, env)?;
        let mc = dense::controlled(&m, g.controls.len());
        let mut qubits: Vec<usize> = g.targets.clone();
        qubits.extend(g.controls.iter().copied());
        u = dense::embed(&mc, &qubits, n).matmul(&u);
    }
    Ok(u)
}

/// Qubits a gate orders in the DAG, sorted.
fn span(g: &GateInstruction) -> Vec<usize> {
    let mut qs: Vec<usize> = g.qubits().collect();
    qs.sort_unstable();
    qs
}

/// Gate dependency DAG: node B depends on A when B is the next gate touching
/// one of A's qubits.
#[derive(Debug, Clone)]
pub struct GateDag {
    n_qubits: usize,
    nodes: Vec<GateInstruction>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

/// Per-qubit last-writer chaining.
pub fn build_dag(c: &Circuit) -> GateDag {
    let n = c.n_qubits();
    let mut dag = GateDag {
        n_qubits: n,
        nodes: c.gates().to_vec(),
        preds: vec![Vec::new(); c.gates().len()],
        succs: vec![Vec::new(); c.gates().len()],
    };
    let mut last: Vec<Option<usize>> = vec![None; n];
    for (i, g) in dag.nodes.iter().enumerate() {
        for q in span(g) {
            if let Some(p) = last[q] {
                if !dag.succs[p].contains(&i) {
                    dag.succs[p].push(i);
                    dag.preds[i].push(p);
                }
            }
            last[q] = Some(i);
        }
    }
    dag
}

impl GateDag {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn nodes(&self) -> &[GateInstruction] {
        &self.nodes
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, succ) in self.succs.iter().enumerate() {
            for &b in succ {
                out.push((a, b));
            }
        }
        out.sort_unstable();
        out
    }

    /// Deterministic topological order (lowest node index first among ready
    /// nodes), rebuilt into a circuit.
    pub fn linearize(&self) -> Result<Circuit> {
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = indeg
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(self.nodes[i].clone());
            for &s in &self.succs[i] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        debug_assert_eq!(order.len(), self.nodes.len(), "dependency cycle");
        Circuit::from_gates(self.n_qubits, order)
    }
}

/// True when `b` structurally equals `a`'s adjoint: same kind and qubits,
/// inverse argument or payload. Symmetric two-qubit kinds compare targets as
/// sets.
fn is_inverse_pair(a: &GateInstruction, b: &GateInstruction) -> bool {
    if matches!(a.kind, GateKind::Barrier | GateKind::Measure) {
        return false;
    }
    let Ok(adj) = a.adjoint() else { return false };
    if adj.kind != b.kind || adj.controls != b.controls {
        return false;
    }
    let symmetric = matches!(
        adj.kind,
        GateKind::Swap | GateKind::Rxx | GateKind::Ryy | GateKind::Rzz
    );
    let targets_match = if symmetric {
        let mut x = adj.targets.clone();
        let mut y = b.targets.clone();
        x.sort_unstable();
        y.sort_unstable();
        x == y
    } else {
        adj.targets == b.targets
    };
    targets_match && adj.arg == b.arg && adj.matrix == b.matrix
}

/// Walks the linearized sequence keeping per-qubit stacks of surviving
/// gates; `try_absorb` may consume the incoming gate by mutating or deleting
/// the previous one it is adjacent to on every shared qubit.
fn rewrite_adjacent(
    dag: &GateDag,
    mut try_absorb: impl FnMut(&mut Vec<Option<GateInstruction>>, usize, &GateInstruction) -> bool,
) -> Result<GateDag> {
    let gates = dag.linearize()?.gates().to_vec();
    let n = dag.n_qubits;
    let mut kept: Vec<Option<GateInstruction>> = Vec::with_capacity(gates.len());
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); n];
    for g in gates {
        let sp = span(&g);
        let tops: Vec<Option<usize>> = sp.iter().map(|&q| stacks[q].last().copied()).collect();
        let candidate = match tops.first() {
            Some(&Some(t)) if tops.iter().all(|&x| x == Some(t)) => {
                // Adjacent only if the previous gate spans exactly these qubits.
                let prev_span = span(kept[t].as_ref().expect("stack points at survivor"));
                (prev_span == sp).then_some(t)
            }
            _ => None,
        };
        if let Some(t) = candidate {
            if try_absorb(&mut kept, t, &g) {
                if kept[t].is_none() {
                    for &q in &sp {
                        let popped = stacks[q].pop();
                        debug_assert_eq!(popped, Some(t));
                    }
                }
                continue;
            }
        }
        let idx = kept.len();
        kept.push(Some(g));
        for &q in &sp {
            stacks[q].push(idx);
        }
    }
    let out = Circuit::from_gates(n, kept.into_iter().flatten())?;
    Ok(build_dag(&out))
}

/// Removes adjacent gate/adjoint pairs acting on identical qubits, cascading
/// through newly exposed pairs. Idempotent.
pub fn pass_cancel_adjacent(dag: &GateDag) -> Result<GateDag> {
    rewrite_adjacent(dag, |kept, t, g| {
        let prev = kept[t].as_ref().expect("survivor");
        if is_inverse_pair(prev, g) {
            kept[t] = None;
            true
        } else {
            false
        }
    })
}

/// Fuses adjacent same-kind rotations on identical qubits by adding their
/// angle expressions. Zero-angle results are kept.
pub fn pass_merge_rotations(dag: &GateDag) -> Result<GateDag> {
    rewrite_adjacent(dag, |kept, t, g| {
        let prev = kept[t].as_mut().expect("survivor");
        let fusable = matches!(
            g.kind,
            GateKind::Rx
                | GateKind::Ry
                | GateKind::Rz
                | GateKind::Rxx
                | GateKind::Ryy
                | GateKind::Rzz
                | GateKind::PhaseShift
        );
        if fusable && prev.kind == g.kind && prev.controls == g.controls {
            let mut a = prev.targets.clone();
            let mut b = g.targets.clone();
            a.sort_unstable();
            b.sort_unstable();
            if a == b {
                let sum = prev
                    .arg
                    .as_ref()
                    .expect("rotation arg")
                    .add(g.arg.as_ref().expect("rotation arg"));
                prev.arg = Some(sum);
                return true;
            }
        }
        false
    })
}

/// Rewrites every gate into the {RX, RY, RZ, PhaseShift, CNOT} basis.
pub fn pass_decompose(dag: &GateDag) -> Result<GateDag> {
    let gates = dag.linearize()?.gates().to_vec();
    let mut out = Vec::new();
    for g in &gates {
        expand_gate(g, &mut out)?;
    }
    let c = Circuit::from_gates(dag.n_qubits, out)?;
    Ok(build_dag(&c))
}

/// Convenience pipeline over circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    CancelAdjacent,
    MergeRotations,
    Decompose,
}

pub fn optimize_circuit(c: &Circuit, passes: &[Pass]) -> Result<Circuit> {
    let mut dag = build_dag(c);
    for p in passes {
        dag = match p {
            Pass::CancelAdjacent => pass_cancel_adjacent(&dag)?,
            Pass::MergeRotations => pass_merge_rotations(&dag)?,
            Pass::Decompose => pass_decompose(&dag)?,
        };
    }
    dag.linearize()
}

const ANGLE_EPS: f64 = 1e-14;

fn push_rot(kind: GateKind, t: usize, angle: f64, out: &mut Vec<GateInstruction>) {
    if angle.abs() < ANGLE_EPS {
        return;
    }
    let arg = ParameterExpression::constant(angle);
    out.push(match kind {
        GateKind::Rx => GateInstruction::rx(t, arg),
        GateKind::Ry => GateInstruction::ry(t, arg),
        GateKind::Rz => GateInstruction::rz(t, arg),
        _ => GateInstruction::phase_shift(t, arg),
    });
}

fn push_cnot(c: usize, t: usize, out: &mut Vec<GateInstruction>) {
    out.push(GateInstruction::cnot(c, t).expect("distinct qubits"));
}

/// H = RZ(π/2) RX(π/2) RZ(π/2) up to a global phase.
fn emit_h(t: usize, out: &mut Vec<GateInstruction>) {
    use std::f64::consts::FRAC_PI_2;
    push_rot(GateKind::Rz, t, FRAC_PI_2, out);
    push_rot(GateKind::Rx, t, FRAC_PI_2, out);
    push_rot(GateKind::Rz, t, FRAC_PI_2, out);
}

/// ZYZ angles: U = e^{iα} RZ(β) RY(γ) RZ(δ).
fn zyz(u: &DMatrix) -> (f64, f64, f64, f64) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let alpha = det.arg() / 2.0;
    let phase = C::from_polar(1.0, -alpha);
    let v00 = u[(0, 0)] * phase;
    let v10 = u[(1, 0)] * phase;
    let gamma = 2.0 * v10.norm().atan2(v00.norm());
    let p = if v00.norm() > 1e-12 { v00.arg() } else { 0.0 };
    let q = if v10.norm() > 1e-12 { v10.arg() } else { 0.0 };
    (alpha, q - p, gamma, -p - q)
}

/// Principal square root of a 2x2 unitary via its axis-angle form.
fn sqrt_unitary(u: &DMatrix) -> DMatrix {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let alpha = det.arg() / 2.0;
    let inv = C::from_polar(1.0, -alpha);
    let (v00, v01, v10, v11) = (
        u[(0, 0)] * inv,
        u[(0, 1)] * inv,
        u[(1, 0)] * inv,
        u[(1, 1)] * inv,
    );
    // v = cos φ · I − i sin φ · n̂·σ.
    let cosphi = ((v00 + v11) / 2.0).re;
    let sx = ((v01 + v10) * C::i() / 2.0).re;
    let sy = ((v10 - v01) / 2.0).re;
    let sz = ((v00 - v11) * C::i() / 2.0).re;
    let s = (sx * sx + sy * sy + sz * sz).sqrt();
    let phi = s.atan2(cosphi);
    let (nx, ny, nz) = if s > 1e-12 {
        (sx / s, sy / s, sz / s)
    } else {
        (0.0, 0.0, 1.0)
    };
    let (hc, hs) = ((phi / 2.0).cos(), (phi / 2.0).sin());
    let ph = C::from_polar(1.0, alpha / 2.0);
    DMatrix::two_by_two(
        ph * C::new(hc, -hs * nz),
        ph * C::new(-hs * ny, -hs * nx),
        ph * C::new(hs * ny, -hs * nx),
        ph * C::new(hc, hs * nz),
    )
}

/// Controlled or plain constant one-qubit unitary in the basis set. The
/// uncontrolled form drops its global phase; controlled forms are exact.
fn mc_const_u(u: &DMatrix, ctls: &[usize], t: usize, out: &mut Vec<GateInstruction>) {
    let (alpha, beta, gamma, delta) = zyz(u);
    match ctls {
        [] => {
            push_rot(GateKind::Rz, t, delta, out);
            push_rot(GateKind::Ry, t, gamma, out);
            push_rot(GateKind::Rz, t, beta, out);
        }
        [c] => {
            // U = e^{iα} A X B X C with A·B·C = I.
            push_rot(GateKind::Rz, t, (delta - beta) / 2.0, out);
            push_cnot(*c, t, out);
            push_rot(GateKind::Rz, t, -(delta + beta) / 2.0, out);
            push_rot(GateKind::Ry, t, -gamma / 2.0, out);
            push_cnot(*c, t, out);
            push_rot(GateKind::Ry, t, gamma / 2.0, out);
            push_rot(GateKind::Rz, t, beta, out);
            push_rot(GateKind::PhaseShift, *c, alpha, out);
        }
        _ => {
            // CC-U = C(c_k)V · MCX · C(c_k)V† · MCX · C(rest)V with V² = U.
            let v = sqrt_unitary(u);
            let (&last, rest) = ctls.split_last().expect("two or more controls");
            mc_const_u(&v, &[last], t, out);
            mcx(rest, last, out);
            mc_const_u(&v.adjoint(), &[last], t, out);
            mcx(rest, last, out);
            mc_const_u(&v, rest, t, out);
        }
    }
}

fn mcx(ctls: &[usize], t: usize, out: &mut Vec<GateInstruction>) {
    match ctls {
        [] => mc_const_u(&crate::ops::Pauli::X.matrix(), &[], t, out),
        [c] => push_cnot(*c, t, out),
        _ => mc_const_u(&crate::ops::Pauli::X.matrix(), ctls, t, out),
    }
}

/// C^k-RZ(θ) = RZ(θ/2) · MCX · RZ(−θ/2) · MCX, exact for any control count.
fn mcrz(ctls: &[usize], t: usize, arg: &ParameterExpression, out: &mut Vec<GateInstruction>) {
    if ctls.is_empty() {
        out.push(GateInstruction::rz(t, arg.clone()));
        return;
    }
    out.push(GateInstruction::rz(t, half(arg)));
    mcx(ctls, t, out);
    out.push(GateInstruction::rz(t, half(arg).neg()));
    mcx(ctls, t, out);
}

fn half(arg: &ParameterExpression) -> ParameterExpression {
    arg.scale(0.5).expect("finite factor")
}

fn mcry(ctls: &[usize], t: usize, arg: &ParameterExpression, out: &mut Vec<GateInstruction>) {
    if ctls.is_empty() {
        out.push(GateInstruction::ry(t, arg.clone()));
        return;
    }
    out.push(GateInstruction::ry(t, half(arg)));
    mcx(ctls, t, out);
    out.push(GateInstruction::ry(t, half(arg).neg()));
    mcx(ctls, t, out);
}

/// Conjugates to RZ through the H identity; the unconditional H pair keeps
/// the controlled part exact.
fn mcrx(ctls: &[usize], t: usize, arg: &ParameterExpression, out: &mut Vec<GateInstruction>) {
    if ctls.is_empty() {
        out.push(GateInstruction::rx(t, arg.clone()));
        return;
    }
    emit_h(t, out);
    mcrz(ctls, t, arg, out);
    emit_h(t, out);
}

/// Multi-qubit pure phase: e^{iθ} exactly when every listed qubit is 1.
/// Uses PS(θ) = e^{iθ/2} RZ(θ), peeling one qubit per recursion step.
fn mcphase(qubits: &[usize], arg: &ParameterExpression, out: &mut Vec<GateInstruction>) {
    match qubits {
        [] => {}
        [q] => out.push(GateInstruction::phase_shift(*q, arg.clone())),
        _ => {
            let (&t, rest) = qubits.split_last().expect("two or more qubits");
            mcrz(rest, t, arg, out);
            mcphase(rest, &half(arg), out);
        }
    }
}

/// Rzz(θ) = CNOT(a→b) · C^k-RZ(θ on b) · CNOT(a→b).
fn rzz_expand(
    ctls: &[usize],
    a: usize,
    b: usize,
    arg: &ParameterExpression,
    out: &mut Vec<GateInstruction>,
) {
    push_cnot(a, b, out);
    mcrz(ctls, b, arg, out);
    push_cnot(a, b, out);
}

fn expand_gate(g: &GateInstruction, out: &mut Vec<GateInstruction>) -> Result<()> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    if matches!(g.kind, GateKind::Barrier | GateKind::Measure) {
        out.push(g.clone());
        return Ok(());
    }
    if g.controls.len() >= 3 {
        return Err(Error::UnsupportedDecomposition(format!(
            "{} with {} controls",
            g.kind.name(),
            g.controls.len()
        )));
    }
    let ctls: Vec<usize> = g.controls.iter().copied().collect();
    let t = g.targets[0];
    match g.kind {
        GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::PhaseShift
            if ctls.is_empty() =>
        {
            out.push(g.clone())
        }
        GateKind::X if ctls.len() == 1 => out.push(g.clone()),
        GateKind::Rx => mcrx(&ctls, t, g.arg.as_ref().expect("rotation arg"), out),
        GateKind::Ry => mcry(&ctls, t, g.arg.as_ref().expect("rotation arg"), out),
        GateKind::Rz => mcrz(&ctls, t, g.arg.as_ref().expect("rotation arg"), out),
        GateKind::PhaseShift => {
            let mut qs = ctls.clone();
            qs.push(t);
            mcphase(&qs, g.arg.as_ref().expect("phase arg"), out);
        }
        GateKind::S | GateKind::T | GateKind::Z => {
            let angle = match g.kind {
                GateKind::S => FRAC_PI_2,
                GateKind::T => FRAC_PI_4,
                _ => PI,
            };
            let mut ps = g.clone();
            ps.kind = GateKind::PhaseShift;
            ps.arg = Some(ParameterExpression::constant(angle));
            expand_gate(&ps, out)?;
        }
        GateKind::H if ctls.is_empty() => emit_h(t, out),
        GateKind::X | GateKind::Y | GateKind::H => {
            let m = gate_matrix(
                &GateInstruction::new(g.kind, vec![t], [], None)?,
                &Bindings::new(),
            )?;
            mc_const_u(&m, &ctls, t, out);
        }
        GateKind::Swap => {
            let (a, b) = (g.targets[0], g.targets[1]);
            if ctls.is_empty() {
                push_cnot(a, b, out);
                push_cnot(b, a, out);
                push_cnot(a, b, out);
            } else {
                // Fredkin: CX(b→a) · MCX(ctls ∪ {a} → b) · CX(b→a).
                push_cnot(b, a, out);
                let mut full = ctls.clone();
                full.push(a);
                mcx(&full, b, out);
                push_cnot(b, a, out);
            }
        }
        GateKind::Rzz => {
            let (a, b) = (g.targets[0], g.targets[1]);
            rzz_expand(&ctls, a, b, g.arg.as_ref().expect("rotation arg"), out);
        }
        GateKind::Rxx | GateKind::Ryy => {
            // Conjugate both wires so the ZZ form acts as XX or YY.
            let (a, b) = (g.targets[0], g.targets[1]);
            let (kind, pre, post) = if g.kind == GateKind::Rxx {
                (GateKind::Ry, -FRAC_PI_2, FRAC_PI_2)
            } else {
                (GateKind::Rx, FRAC_PI_2, -FRAC_PI_2)
            };
            push_rot(kind, a, pre, out);
            push_rot(kind, b, pre, out);
            rzz_expand(&ctls, a, b, g.arg.as_ref().expect("rotation arg"), out);
            push_rot(kind, a, post, out);
            push_rot(kind, b, post, out);
        }
        GateKind::CustomMatrix => {
            if g.targets.len() != 1 {
                return Err(Error::UnsupportedDecomposition(
                    "two-qubit custom matrix".into(),
                ));
            }
            let m = g.payload_matrix().expect("validated payload");
            mc_const_u(&m, &ctls, t, out);
        }
        GateKind::Barrier | GateKind::Measure => unreachable!("handled above"),
    }
    Ok(())
}

/// Hardware connectivity; must be connected and self-loop free.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    n_physical: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<BTreeSet<usize>>,
}

impl CouplingGraph {
    pub fn new(n_physical: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_physical == 0 {
            return Err(Error::invalid("coupling", "at least one physical qubit"));
        }
        let mut adj = vec![BTreeSet::new(); n_physical];
        let mut seen = BTreeSet::new();
        let mut norm = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return Err(Error::invalid("coupling", format!("self-loop on {u}")));
            }
            if u >= n_physical || v >= n_physical {
                return Err(Error::invalid(
                    "coupling",
                    format!("edge ({u}, {v}) out of range for {n_physical} qubits"),
                ));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                continue;
            }
            adj[u].insert(v);
            adj[v].insert(u);
            norm.push(key);
        }
        let cg = CouplingGraph {
            n_physical,
            edges: norm,
            adj,
        };
        if n_physical > 1 {
            let d = cg.bfs_from(0);
            if d.contains(&usize::MAX) {
                return Err(Error::invalid("coupling", "graph is not connected"));
            }
        }
        Ok(cg)
    }

    /// Parses `line:N`, `ring:N`, or `grid:RxC`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |why: String| Error::Invalid {
            what: "coupling",
            why,
        };
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| bad(format!("`{spec}` is not line:N, ring:N, or grid:RxC")))?;
        let parse_n = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("bad size `{s}`")))
        };
        match kind {
            "line" => {
                let n = parse_n(rest)?;
                CouplingGraph::new(n, (1..n).map(|i| (i - 1, i)).collect())
            }
            "ring" => {
                let n = parse_n(rest)?;
                if n < 3 {
                    return Err(bad("ring needs at least 3 qubits".into()));
                }
                let mut e: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
                e.push((n - 1, 0));
                CouplingGraph::new(n, e)
            }
            "grid" => {
                let (r, c) = rest
                    .split_once('x')
                    .ok_or_else(|| bad(format!("grid wants RxC, got `{rest}`")))?;
                let (r, c) = (parse_n(r)?, parse_n(c)?);
                if r == 0 || c == 0 {
                    return Err(bad("grid dimensions must be positive".into()));
                }
                let mut e = Vec::new();
                for i in 0..r {
                    for j in 0..c {
                        let q = i * c + j;
                        if j + 1 < c {
                            e.push((q, q + 1));
                        }
                        if i + 1 < r {
                            e.push((q, q + c));
                        }
                    }
                }
                CouplingGraph::new(r * c, e)
            }
            _ => Err(bad(format!("unknown topology `{kind}`"))),
        }
    }

    /// Edge-list file body, one `u v` per line (an ignored weight column is
    /// tolerated).
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let g = crate::vqa::Graph::from_edge_list(text)?;
        CouplingGraph::new(
            g.n_nodes(),
            g.edges().iter().map(|&(u, v, _)| (u, v)).collect(),
        )
    }

    pub fn n_physical(&self) -> usize {
        self.n_physical
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    fn bfs_from(&self, s: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.n_physical];
        d[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if d[v] == usize::MAX {
                    d[v] = d[u] + 1;
                    q.push_back(v);
                }
            }
        }
        d
    }

    /// All-pairs shortest-path distances.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        (0..self.n_physical).map(|s| self.bfs_from(s)).collect()
    }
}

/// Outcome of qubit mapping. Layouts map logical to physical indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingResult {
    pub compiled: Circuit,
    pub initial_layout: Vec<usize>,
    pub final_layout: Vec<usize>,
    pub swaps_inserted: usize,
}

const EXTENDED_SET_CAP: usize = 20;
const EXTENDED_WEIGHT: f64 = 0.5;
const DECAY_STEP: f64 = 0.9;

/// Maps a 1-/2-qubit circuit onto the coupling graph with look-ahead SWAP
/// insertion. Identity initial layout; deterministic per seed.
pub fn map_circuit(c: &Circuit, cg: &CouplingGraph, seed: u64) -> Result<MappingResult> {
    let n_logical = c.n_qubits();
    let n_phys = cg.n_physical();
    if n_logical > n_phys {
        return Err(Error::TooManyLogicalQubits {
            logical: n_logical,
            physical: n_phys,
        });
    }
    for g in c.gates() {
        let width = g.qubits().count();
        if width > 2 && !matches!(g.kind, GateKind::Barrier | GateKind::Measure) {
            return Err(Error::invalid(
                "mapping",
                format!(
                    "{} touches {width} qubits; decompose to 1- and 2-qubit gates first",
                    g.kind.name()
                ),
            ));
        }
    }

    let dag = build_dag(c);
    let dist = cg.distances();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut layout: Vec<usize> = (0..n_logical).collect();
    let mut occupant: Vec<Option<usize>> = (0..n_phys)
        .map(|p| (p < n_logical).then_some(p))
        .collect();
    let initial_layout = layout.clone();

    let mut indeg: Vec<usize> = dag.preds.iter().map(Vec::len).collect();
    let mut front: BTreeSet<usize> = indeg
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| i)
        .collect();
    let mut emitted: Vec<GateInstruction> = Vec::new();
    let mut swaps_inserted = 0usize;
    let mut decay = vec![1.0f64; n_phys];
    let mut stagnant = 0usize;

    let map_gate = |g: &GateInstruction, layout: &[usize]| -> GateInstruction {
        let mut m = g.clone();
        m.targets = g.targets.iter().map(|&q| layout[q]).collect();
        m.controls = g.controls.iter().map(|&q| layout[q]).collect();
        m
    };
    let two_qubit_pair = |g: &GateInstruction| -> Option<(usize, usize)> {
        if matches!(g.kind, GateKind::Barrier | GateKind::Measure) {
            return None;
        }
        let qs: Vec<usize> = g.qubits().collect();
        (qs.len() == 2).then(|| (qs[0], qs[1]))
    };

    while !front.is_empty() {
        let ready: Vec<usize> = front
            .iter()
            .copied()
            .filter(|&i| match two_qubit_pair(&dag.nodes[i]) {
                Some((a, b)) => cg.are_adjacent(layout[a], layout[b]),
                None => true,
            })
            .collect();
        if !ready.is_empty() {
            for i in ready {
                emitted.push(map_gate(&dag.nodes[i], &layout));
                front.remove(&i);
                for &s in &dag.succs[i] {
                    indeg[s] -= 1;
                    if indeg[s] == 0 {
                        front.insert(s);
                    }
                }
            }
            decay.fill(1.0);
            stagnant = 0;
            continue;
        }

        // Blocked: every front gate is a non-adjacent two-qubit interaction.
        let front_pairs: Vec<(usize, usize)> = front
            .iter()
            .filter_map(|&i| two_qubit_pair(&dag.nodes[i]))
            .map(|(a, b)| (layout[a], layout[b]))
            .collect();
        let extended = extended_pairs(&dag, &front, &indeg, &layout);

        let swap = if stagnant > 2 * n_phys * n_phys {
            // Livelock guard: walk the first blocked pair together directly.
            let (a, b) = front_pairs[0];
            let next = cg.adj[a]
                .iter()
                .copied()
                .min_by_key(|&p| dist[p][b])
                .expect("connected graph");
            (a.min(next), a.max(next))
        } else {
            let involved: BTreeSet<usize> =
                front_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
            let mut best: Vec<(usize, usize)> = Vec::new();
            let mut best_score = f64::INFINITY;
            for &(p, q) in cg.edges() {
                if !involved.contains(&p) && !involved.contains(&q) {
                    continue;
                }
                let swapped = |x: usize| {
                    if x == p {
                        q
                    } else if x == q {
                        p
                    } else {
                        x
                    }
                };
                let mut score: f64 = front_pairs
                    .iter()
                    .map(|&(a, b)| dist[swapped(a)][swapped(b)] as f64)
                    .sum();
                score += EXTENDED_WEIGHT
                    * extended
                        .iter()
                        .map(|&(a, b)| dist[swapped(a)][swapped(b)] as f64)
                        .sum::<f64>();
                score *= decay[p] * decay[q];
                if score < best_score - 1e-9 {
                    best_score = score;
                    best = vec![(p, q)];
                } else if (score - best_score).abs() <= 1e-9 {
                    best.push((p, q));
                }
            }
            best[rng.gen_range(0..best.len())]
        };

        let (p, q) = swap;
        emitted.push(GateInstruction::swap(p, q).expect("distinct qubits"));
        swaps_inserted += 1;
        stagnant += 1;
        decay[p] /= DECAY_STEP;
        decay[q] /= DECAY_STEP;
        let (lp, lq) = (occupant[p], occupant[q]);
        occupant[p] = lq;
        occupant[q] = lp;
        if let Some(l) = occupant[p] {
            layout[l] = p;
        }
        if let Some(l) = occupant[q] {
            layout[l] = q;
        }
    }

    Ok(MappingResult {
        compiled: Circuit::from_gates(n_phys, emitted)?,
        initial_layout,
        final_layout: layout,
        swaps_inserted,
    })
}

/// Up to 20 two-qubit gates reachable behind the front layer, mapped to
/// physical pairs, for the look-ahead term.
fn extended_pairs(
    dag: &GateDag,
    front: &BTreeSet<usize>,
    indeg: &[usize],
    layout: &[usize],
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut seen: BTreeSet<usize> = front.clone();
    let mut queue: VecDeque<usize> = front
        .iter()
        .flat_map(|&i| dag.succs[i].iter().copied())
        .collect();
    let _ = indeg;
    while let Some(i) = queue.pop_front() {
        if out.len() >= EXTENDED_SET_CAP {
            break;
        }
        if !seen.insert(i) {
            continue;
        }
        let g = &dag.nodes[i];
        if !matches!(g.kind, GateKind::Barrier | GateKind::Measure) {
            let qs: Vec<usize> = g.qubits().collect();
            if qs.len() == 2 {
                out.push((layout[qs[0]], layout[qs[1]]));
            }
        }
        queue.extend(dag.succs[i].iter().copied());
    }
    out
}

/// Reads the logical-state amplitudes back out of a mapped run: logical bit
/// q lives on physical wire `final_layout[q]`, all other wires must be |0⟩.
pub fn unpermute_amps(
    amps: &[C],
    final_layout: &[usize],
    n_logical: usize,
) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); 1 << n_logical];
    for (l, slot) in out.iter_mut().enumerate() {
        let mut phys = 0usize;
        for (q, &p) in final_layout.iter().enumerate() {
            phys |= ((l >> q) & 1) << p;
        }
        *slot = amps[phys];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randcirc;
    use crate::sv::StateVector;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn no_env() -> Bindings {
        Bindings::new()
    }

    fn gates(c: &Circuit) -> Vec<GateKind> {
        c.gates().iter().map(|g| g.kind).collect()
    }

    fn assert_equiv_up_to_phase(a: &Circuit, b: &Circuit, tol: f64) {
        let ua = circuit_unitary(a, &no_env()).unwrap();
        let ub = circuit_unitary(b, &no_env()).unwrap();
        assert!(
            ua.approx_eq_up_to_phase(&ub, tol),
            "unitaries differ by more than phase"
        );
    }

    fn basis_only(c: &Circuit) -> bool {
        c.gates().iter().all(|g| match g.kind {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::PhaseShift => {
                g.controls.is_empty()
            }
            GateKind::X => g.controls.len() == 1,
            GateKind::Barrier | GateKind::Measure => true,
            _ => false,
        })
    }

    #[test]
    fn dag_edges_follow_qubit_flow() {
        let c = Circuit::from_gates(
            2,
            [GateInstruction::h(0), GateInstruction::x(1)],
        )
        .unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.edges(), vec![]);

        let c = Circuit::from_gates(
            2,
            [
                GateInstruction::h(0),
                GateInstruction::cnot(0, 1).unwrap(),
                GateInstruction::x(1),
            ],
        )
        .unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn barrier_orders_spanned_qubits() {
        let c = Circuit::from_gates(
            2,
            [
                GateInstruction::x(0),
                GateInstruction::barrier([0, 1]).unwrap(),
                GateInstruction::x(1),
            ],
        )
        .unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.edges(), vec![(0, 1), (1, 2)]);
        // A barrier only fences the qubits it lists.
        let c = Circuit::from_gates(
            3,
            [
                GateInstruction::x(2),
                GateInstruction::barrier([0, 1]).unwrap(),
                GateInstruction::x(0),
            ],
        )
        .unwrap();
        assert_eq!(build_dag(&c).edges(), vec![(1, 2)]);
    }

    #[test]
    fn linearize_round_trips_random_circuits() {
        for seed in 0..6u64 {
            let c = randcirc::bench_circuit(4, 8, seed);
            let rt = build_dag(&c).linearize().unwrap();
            let a = StateVector::<f64>::run(&c, &no_env()).unwrap();
            let b = StateVector::<f64>::run(&rt, &no_env()).unwrap();
            for (x, y) in a.amps().iter().zip(b.amps()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cancel_removes_inverse_pairs() {
        let run = |gs: Vec<GateInstruction>, n: usize| -> Vec<GateKind> {
            let c = Circuit::from_gates(n, gs).unwrap();
            gates(&pass_cancel_adjacent(&build_dag(&c)).unwrap().linearize().unwrap())
        };
        assert_eq!(
            run(vec![GateInstruction::h(0), GateInstruction::h(0)], 1),
            vec![]
        );
        // Cascade through the newly exposed pair.
        assert_eq!(
            run(
                vec![
                    GateInstruction::h(0),
                    GateInstruction::x(0),
                    GateInstruction::x(0),
                    GateInstruction::h(0),
                ],
                1
            ),
            vec![]
        );
        // S† is written as PhaseShift(−π/2).
        assert_eq!(
            run(
                vec![
                    GateInstruction::s(0),
                    GateInstruction::phase_shift(
                        0,
                        ParameterExpression::constant(-FRAC_PI_2)
                    ),
                ],
                1
            ),
            vec![]
        );
        // Symbolic rotation against its negation.
        let a = ParameterExpression::variable("a").unwrap();
        assert_eq!(
            run(
                vec![
                    GateInstruction::rz(0, a.clone()),
                    GateInstruction::rz(0, a.neg()),
                ],
                1
            ),
            vec![]
        );
        assert_eq!(
            run(
                vec![
                    GateInstruction::cnot(0, 1).unwrap(),
                    GateInstruction::cnot(0, 1).unwrap(),
                ],
                2
            ),
            vec![]
        );
        // S·S is Z, not identity; an interposed gate blocks cancellation.
        assert_eq!(
            run(vec![GateInstruction::s(0), GateInstruction::s(0)], 1).len(),
            2
        );
        assert_eq!(
            run(
                vec![
                    GateInstruction::h(0),
                    GateInstruction::z(0),
                    GateInstruction::h(0)
                ],
                1
            )
            .len(),
            3
        );
        // A gate on the other wire of a two-qubit pair blocks adjacency.
        assert_eq!(
            run(
                vec![
                    GateInstruction::cnot(0, 1).unwrap(),
                    GateInstruction::x(0),
                    GateInstruction::cnot(0, 1).unwrap(),
                ],
                2
            )
            .len(),
            3
        );
    }

    #[test]
    fn cancel_is_idempotent_and_sound() {
        for seed in 10..16u64 {
            let c = randcirc::bench_circuit(4, 6, seed);
            let once = pass_cancel_adjacent(&build_dag(&c)).unwrap().linearize().unwrap();
            let twice = pass_cancel_adjacent(&build_dag(&once)).unwrap().linearize().unwrap();
            assert_eq!(once.gates(), twice.gates());
            assert_equiv_up_to_phase(&c, &once, 1e-10);
        }
    }

    #[test]
    fn merge_fuses_adjacent_rotations() {
        let c = Circuit::from_gates(
            1,
            [
                GateInstruction::rz(0, ParameterExpression::constant(0.3)),
                GateInstruction::rz(0, ParameterExpression::constant(0.4)),
            ],
        )
        .unwrap();
        let m = pass_merge_rotations(&build_dag(&c)).unwrap().linearize().unwrap();
        assert_eq!(m.gates().len(), 1);
        let arg = m.gates()[0].arg.as_ref().unwrap();
        assert!((arg.constant_part() - 0.7).abs() < 1e-15);

        // Symbolic sum, and a zero-sum result is kept rather than dropped.
        let a = ParameterExpression::variable("a").unwrap();
        let c = Circuit::from_gates(
            1,
            [
                GateInstruction::rx(0, a.clone()),
                GateInstruction::rx(0, a.clone()),
                GateInstruction::rx(0, a.neg().add(&a.neg())),
            ],
        )
        .unwrap();
        let m = pass_merge_rotations(&build_dag(&c)).unwrap().linearize().unwrap();
        assert_eq!(m.gates().len(), 1);
        assert!(m.gates()[0].arg.as_ref().unwrap().is_constant());

        // Rzz target order is irrelevant; an interposed gate blocks merging.
        let c = Circuit::from_gates(
            2,
            [
                GateInstruction::rzz(0, 1, ParameterExpression::constant(0.2)).unwrap(),
                GateInstruction::rzz(1, 0, ParameterExpression::constant(0.5)).unwrap(),
            ],
        )
        .unwrap();
        let m = pass_merge_rotations(&build_dag(&c)).unwrap().linearize().unwrap();
        assert_eq!(m.gates().len(), 1);

        let c = Circuit::from_gates(
            1,
            [
                GateInstruction::rz(0, ParameterExpression::constant(0.3)),
                GateInstruction::h(0),
                GateInstruction::rz(0, ParameterExpression::constant(0.4)),
            ],
        )
        .unwrap();
        let m = pass_merge_rotations(&build_dag(&c)).unwrap().linearize().unwrap();
        assert_eq!(m.gates().len(), 3);
    }

    #[test]
    fn decompose_swap_is_three_cnots() {
        let c = Circuit::from_gates(2, [GateInstruction::swap(0, 1).unwrap()]).unwrap();
        let d = pass_decompose(&build_dag(&c)).unwrap().linearize().unwrap();
        assert_eq!(gates(&d), vec![GateKind::X, GateKind::X, GateKind::X]);
        assert!(d.gates().iter().all(|g| g.controls.len() == 1));
        let u = circuit_unitary(&d, &no_env()).unwrap();
        let want = circuit_unitary(&c, &no_env()).unwrap();
        assert!(u.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn decompose_h_uses_the_rz_rx_rz_identity() {
        let c = Circuit::from_gates(1, [GateInstruction::h(0)]).unwrap();
        let d = pass_decompose(&build_dag(&c)).unwrap().linearize().unwrap();
        assert_eq!(gates(&d), vec![GateKind::Rz, GateKind::Rx, GateKind::Rz]);
        assert_equiv_up_to_phase(&d, &c, 1e-12);
    }

    #[test]
    fn decompose_covers_every_kind_and_control_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for kind in GateKind::UNITARY {
            let n_targets = kind.fixed_targets().unwrap_or(1);
            for n_ctls in 0..=2usize {
                let mut pool: Vec<usize> = (0..4).collect();
                for i in (1..pool.len()).rev() {
                    pool.swap(i, rng.gen_range(0..=i));
                }
                let targets = pool[..n_targets].to_vec();
                let controls = pool[n_targets..n_targets + n_ctls].to_vec();
                let needs_arg = matches!(
                    kind,
                    GateKind::Rx
                        | GateKind::Ry
                        | GateKind::Rz
                        | GateKind::Rxx
                        | GateKind::Ryy
                        | GateKind::Rzz
                        | GateKind::PhaseShift
                );
                let arg =
                    needs_arg.then(|| ParameterExpression::constant(rng.gen_range(0.1..1.4)));
                let g = if kind == GateKind::CustomMatrix {
                    let m = DMatrix::random_unitary(2, &mut rng);
                    let entries = m.data().iter().map(|z| [z.re, z.im]).collect();
                    GateInstruction::custom(targets, controls, entries, None).unwrap()
                } else {
                    GateInstruction::new(kind, targets, controls, arg).unwrap()
                };
                let c = Circuit::from_gates(4, [g]).unwrap();
                let d = pass_decompose(&build_dag(&c)).unwrap().linearize().unwrap();
                assert!(basis_only(&d), "{kind:?} with {n_ctls} controls left the basis");
                assert_equiv_up_to_phase(&d, &c, 1e-10);
            }
        }
    }

    #[test]
    fn decompose_handles_symbolic_controlled_rotations() {
        let a = ParameterExpression::variable("a").unwrap();
        for g in [
            GateInstruction::rx(0, a.clone()).with_controls([1, 2]).unwrap(),
            GateInstruction::phase_shift(1, a.clone()).with_controls([0, 3]).unwrap(),
            GateInstruction::rzz(0, 2, a.clone()).unwrap().with_controls([1]).unwrap(),
        ] {
            let c = Circuit::from_gates(4, [g]).unwrap();
            let d = pass_decompose(&build_dag(&c)).unwrap().linearize().unwrap();
            assert!(basis_only(&d));
            let env = crate::expr::bindings([("a", 0.83)]);
            let ua = circuit_unitary(&d, &env).unwrap();
            let ub = circuit_unitary(&c, &env).unwrap();
            assert!(ua.approx_eq_up_to_phase(&ub, 1e-10));
        }
    }

    #[test]
    fn decompose_rejects_unsupported_shapes() {
        let g = GateInstruction::x(0).with_controls([1, 2, 3]).unwrap();
        let c = Circuit::from_gates(4, [g]).unwrap();
        assert!(matches!(
            pass_decompose(&build_dag(&c)),
            Err(Error::UnsupportedDecomposition(_))
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = DMatrix::random_unitary(4, &mut rng);
        let entries = m.data().iter().map(|z| [z.re, z.im]).collect();
        let g = GateInstruction::custom(vec![0, 1], [], entries, None).unwrap();
        let c = Circuit::from_gates(2, [g]).unwrap();
        assert!(matches!(
            pass_decompose(&build_dag(&c)),
            Err(Error::UnsupportedDecomposition(_))
        ));
    }

    #[test]
    fn full_pipeline_preserves_random_circuits() {
        for seed in 30..36u64 {
            let c = randcirc::bench_circuit(5, 4, seed);
            let out = optimize_circuit(
                &c,
                &[Pass::CancelAdjacent, Pass::MergeRotations, Pass::Decompose],
            )
            .unwrap();
            assert!(basis_only(&out));
            assert_equiv_up_to_phase(&c, &out, 1e-10);
        }
    }

    #[test]
    fn coupling_parse_and_validation() {
        let line = CouplingGraph::parse("line:4").unwrap();
        assert_eq!(line.edges(), &[(0, 1), (1, 2), (2, 3)]);
        let ring = CouplingGraph::parse("ring:4").unwrap();
        assert_eq!(ring.edges().len(), 4);
        assert!(ring.are_adjacent(0, 3));
        let grid = CouplingGraph::parse("grid:2x3").unwrap();
        assert_eq!(grid.n_physical(), 6);
        assert_eq!(grid.edges().len(), 7);
        let file = CouplingGraph::from_edge_list("0 1\n1 2\n").unwrap();
        assert_eq!(file.n_physical(), 3);

        assert!(CouplingGraph::parse("mesh:4").is_err());
        assert!(CouplingGraph::parse("line").is_err());
        assert!(CouplingGraph::parse("grid:2y3").is_err());
        // Disconnected graphs are rejected outright.
        assert!(CouplingGraph::new(4, vec![(0, 1), (2, 3)]).is_err());
        assert!(CouplingGraph::new(2, vec![(0, 0)]).is_err());
    }

    #[test]
    fn mapping_inserts_swaps_only_when_needed() {
        let cg = CouplingGraph::parse("line:3").unwrap();
        let c = Circuit::from_gates(3, [GateInstruction::cnot(0, 2).unwrap()]).unwrap();
        let r = map_circuit(&c, &cg, 1).unwrap();
        assert!(r.swaps_inserted >= 1);
        assert_coupled(&r.compiled, &cg);

        let c = Circuit::from_gates(
            3,
            [
                GateInstruction::cnot(0, 1).unwrap(),
                GateInstruction::cnot(1, 2).unwrap(),
            ],
        )
        .unwrap();
        let r = map_circuit(&c, &cg, 1).unwrap();
        assert_eq!(r.swaps_inserted, 0);
        assert_eq!(r.final_layout, vec![0, 1, 2]);
        assert_eq!(r.compiled.gates(), c.gates());
    }

    fn assert_coupled(c: &Circuit, cg: &CouplingGraph) {
        for g in c.gates() {
            if matches!(g.kind, GateKind::Barrier | GateKind::Measure) {
                continue;
            }
            let qs: Vec<usize> = g.qubits().collect();
            if qs.len() == 2 {
                assert!(cg.are_adjacent(qs[0], qs[1]), "{:?} off coupling", g.kind);
            }
        }
    }

    #[test]
    fn mapped_circuits_simulate_to_the_original_state() {
        let cg = CouplingGraph::parse("line:5").unwrap();
        for seed in 0..8u64 {
            let c = optimize_circuit(&randcirc::bench_circuit(5, 3, seed), &[Pass::Decompose])
                .unwrap();
            let r = map_circuit(&c, &cg, seed).unwrap();
            assert_coupled(&r.compiled, &cg);
            let non_swap = |c: &Circuit| {
                c.gates().iter().filter(|g| g.kind != GateKind::Swap).count()
            };
            assert_eq!(non_swap(&r.compiled), non_swap(&c));

            let want = StateVector::<f64>::run(&c, &no_env()).unwrap();
            let got = StateVector::<f64>::run(&r.compiled, &no_env()).unwrap();
            let un = unpermute_amps(got.amps(), &r.final_layout, 5);
            for (x, y) in un.iter().zip(want.amps()) {
                assert!((x - y).norm() < 1e-10, "seed {seed}");
            }
        }
    }

    #[test]
    fn mapping_is_deterministic_per_seed() {
        let cg = CouplingGraph::parse("ring:5").unwrap();
        let c = optimize_circuit(&randcirc::bench_circuit(5, 4, 77), &[Pass::Decompose]).unwrap();
        let a = map_circuit(&c, &cg, 9).unwrap();
        let b = map_circuit(&c, &cg, 9).unwrap();
        assert_eq!(a.compiled.gates(), b.compiled.gates());
        assert_eq!(a.final_layout, b.final_layout);
    }

    #[test]
    fn mapping_rejects_bad_inputs() {
        let cg = CouplingGraph::parse("line:2").unwrap();
        let c = Circuit::new(3);
        assert_eq!(
            map_circuit(&c, &cg, 0).unwrap_err(),
            Error::TooManyLogicalQubits {
                logical: 3,
                physical: 2
            }
        );
        let cg = CouplingGraph::parse("line:4").unwrap();
        let g = GateInstruction::x(0).with_controls([1, 2]).unwrap();
        let c = Circuit::from_gates(4, [g]).unwrap();
        assert!(map_circuit(&c, &cg, 0).is_err());
    }

    #[test]
    fn sqrt_unitary_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let u = DMatrix::random_unitary(2, &mut rng);
            let v = sqrt_unitary(&u);
            assert!(v.matmul(&v).max_abs_diff(&u) < 1e-12);
        }
        let x = crate::ops::Pauli::X.matrix();
        let v = sqrt_unitary(&x);
        assert!(v.matmul(&v).max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn measure_and_barrier_pass_through_every_stage() {
        let c = Circuit::from_gates(
            2,
            [
                GateInstruction::h(0),
                GateInstruction::barrier([0, 1]).unwrap(),
                GateInstruction::swap(0, 1).unwrap(),
                GateInstruction::measure([0, 1], None).unwrap(),
            ],
        )
        .unwrap();
        let d = optimize_circuit(&c, &[Pass::Decompose]).unwrap();
        assert_eq!(
            d.gates().iter().filter(|g| g.kind == GateKind::Barrier).count(),
            1
        );
        assert_eq!(
            d.gates().iter().filter(|g| g.kind == GateKind::Measure).count(),
            1
        );
        let cg = CouplingGraph::parse("line:2").unwrap();
        let r = map_circuit(&d, &cg, 0).unwrap();
        assert!(r.compiled.gates().iter().any(|g| g.kind == GateKind::Measure));
    }

    #[test]
    fn zyz_reconstructs_the_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let u = DMatrix::random_unitary(2, &mut rng);
            let (alpha, beta, gamma, delta) = zyz(&u);
            let rz = |a: f64| {
                DMatrix::two_by_two(
                    C::from_polar(1.0, -a / 2.0),
                    C::new(0.0, 0.0),
                    C::new(0.0, 0.0),
                    C::from_polar(1.0, a / 2.0),
                )
            };
            let ry = |a: f64| {
                DMatrix::two_by_two(
                    C::new((a / 2.0).cos(), 0.0),
                    C::new(-(a / 2.0).sin(), 0.0),
                    C::new((a / 2.0).sin(), 0.0),
                    C::new((a / 2.0).cos(), 0.0),
                )
            };
            let m = rz(beta)
                .matmul(&ry(gamma))
                .matmul(&rz(delta))
                .scale(C::from_polar(1.0, alpha));
            assert!(m.max_abs_diff(&u) < 1e-12);
        }
        let _ = PI;
    }
}
