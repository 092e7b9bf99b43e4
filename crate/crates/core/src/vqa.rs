//! Variational workflows: ansatz construction, max-cut QAOA, and a
//! gradient-based optimizer loop over ⟨H⟩.
//!
//! Max-cut uses H = Σ_(u,v,w) (w/2)(Z_u Z_v − I), so minimizing ⟨H⟩
//! maximizes the cut and cut(s) = −⟨s|H|s⟩ for any basis state s. The QAOA
//! cost block enters as Rzz(2γ_k·w) per edge, which makes one block exactly
//! exp(−iγ_k·H_cost) under the R_P(θ) = exp(−iθP/2) convention.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, GateInstruction, GateKind};
use crate::error::{Error, Result};
use crate::expr::{Bindings, ParameterExpression};
use crate::grad::{adjoint_gradient, GradientTask};
use crate::ops::{Pauli, PauliString, PauliSum};
use crate::sv::StateVector;

/// Undirected weighted graph for cut problems.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Validates: endpoints distinct and in range, weights finite, no
    /// duplicate undirected edges.
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::invalid("graph", "at least one node required"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v, w) in &edges {
            if u == v {
                return Err(Error::invalid("graph", format!("self-loop on node {u}")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::invalid(
                    "graph",
                    format!("edge ({u}, {v}) out of range for {n_nodes} nodes"),
                ));
            }
            if !w.is_finite() {
                return Err(Error::NonFinite("edge weight"));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid("graph", format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Graph { n_nodes, edges })
    }

    /// Parses a whitespace-separated edge list, one `u v [w]` per line.
    /// Node count is inferred from the largest index; blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_node = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 && fields.len() != 3 {
                return Err(Error::invalid(
                    "graph",
                    format!("line {}: expected `u v [w]`, got `{line}`", lineno + 1),
                ));
            }
            let parse_node = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::invalid("graph", format!("line {}: bad node `{s}`", lineno + 1))
                })
            };
            let u = parse_node(fields[0])?;
            let v = parse_node(fields[1])?;
            let w = match fields.get(2) {
                Some(s) => s.parse::<f64>().map_err(|_| {
                    Error::invalid("graph", format!("line {}: bad weight `{s}`", lineno + 1))
                })?,
                None => 1.0,
            };
            max_node = max_node.max(u).max(v);
            edges.push((u, v, w));
        }
        if edges.is_empty() {
            return Err(Error::invalid("graph", "no edges in input"));
        }
        Graph::new(max_node + 1, edges)
    }

    /// Complete graph on `n` nodes with unit weights.
    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v, 1.0));
            }
        }
        Graph::new(n, edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }
}

/// H = Σ_(u,v,w) (w/2)(Z_u Z_v − I). Diagonal by construction.
pub fn maxcut_hamiltonian(g: &Graph) -> PauliSum {
    let mut h = PauliSum::zero();
    for &(u, v, w) in g.edges() {
        h.add_term(
            PauliString::from_factors([(u, Pauli::Z), (v, Pauli::Z)]),
            w / 2.0,
        );
        h.add_term(PauliString::identity(), -w / 2.0);
    }
    h
}

/// Total weight of edges crossing the partition; equals −⟨s|H|s⟩ for the
/// matching basis state.
pub fn cut_value(g: &Graph, assignment: &[bool]) -> f64 {
    g.edges()
        .iter()
        .filter(|&&(u, v, _)| assignment[u] != assignment[v])
        .map(|e| e.2)
        .sum()
}

/// One-step Trotter QAOA ansatz: H on every qubit, then `p` blocks of
/// Rzz(2γ_k·w) per edge followed by RX(β_k) per node. Parameters are named
/// `g0..g{p−1}` and `b0..b{p−1}`.
pub fn qaoa_circuit(g: &Graph, p: usize) -> Result<Circuit> {
    if p == 0 {
        return Err(Error::invalid("qaoa", "p must be at least 1"));
    }
    let mut c = Circuit::new(g.n_nodes());
    for q in 0..g.n_nodes() {
        c.append(GateInstruction::h(q))?;
    }
    for k in 0..p {
        let gamma = format!("g{k}");
        let beta = format!("b{k}");
        for &(u, v, w) in g.edges() {
            c.append(GateInstruction::rzz(
                u,
                v,
                ParameterExpression::term(&gamma, 2.0 * w)?,
            )?)?;
        }
        for q in 0..g.n_nodes() {
            c.append(GateInstruction::rx(
                q,
                ParameterExpression::variable(&beta)?,
            ))?;
        }
    }
    Ok(c)
}

/// Layered hardware-efficient ansatz: per layer, one rotation of each kind
/// in `rot` on every qubit (parameter `p{layer}_{qubit}_{rotindex}`), then a
/// linear-chain entangler q_i→q_{i+1}. `ent` is X (used as CNOT) or Rzz with
/// a fixed π/2 angle.
pub fn hardware_efficient(
    n: usize,
    layers: usize,
    rot: &[GateKind],
    ent: GateKind,
) -> Result<Circuit> {
    if layers == 0 {
        return Err(Error::invalid("ansatz", "layers must be at least 1"));
    }
    if rot.is_empty() {
        return Err(Error::invalid("ansatz", "at least one rotation kind required"));
    }
    for k in rot {
        if !matches!(k, GateKind::Rx | GateKind::Ry | GateKind::Rz) {
            return Err(Error::invalid(
                "ansatz",
                format!("rotation kind must be rx, ry, or rz, got {}", k.name()),
            ));
        }
    }
    if !matches!(ent, GateKind::X | GateKind::Rzz) {
        return Err(Error::invalid(
            "ansatz",
            format!("entangler must be x or rzz, got {}", ent.name()),
        ));
    }
    let mut c = Circuit::new(n);
    for layer in 0..layers {
        for q in 0..n {
            for (ri, kind) in rot.iter().enumerate() {
                let arg = ParameterExpression::variable(format!("p{layer}_{q}_{ri}"))?;
                let gate = match kind {
                    GateKind::Rx => GateInstruction::rx(q, arg),
                    GateKind::Ry => GateInstruction::ry(q, arg),
                    _ => GateInstruction::rz(q, arg),
                };
                c.append(gate)?;
            }
        }
        for q in 0..n.saturating_sub(1) {
            let gate = match ent {
                GateKind::X => GateInstruction::x(q + 1).with_controls([q])?,
                _ => GateInstruction::rzz(
                    q,
                    q + 1,
                    ParameterExpression::constant(std::f64::consts::FRAC_PI_2),
                )?,
            };
            c.append(gate)?;
        }
    }
    Ok(c)
}

/// Ansatz selector mirroring the circuit builders above.
#[derive(Debug, Clone, PartialEq)]
pub enum AnsatzSpec {
    HardwareEfficient {
        layers: usize,
        rot: Vec<GateKind>,
        ent: GateKind,
    },
    QaoaLayers {
        graph: Graph,
        p: usize,
    },
}

impl AnsatzSpec {
    /// Builds the circuit; `n` is used by the hardware-efficient form, the
    /// QAOA form takes its width from the graph.
    pub fn build(&self, n: usize) -> Result<Circuit> {
        match self {
            AnsatzSpec::HardwareEfficient { layers, rot, ent } => {
                hardware_efficient(n, *layers, rot, *ent)
            }
            AnsatzSpec::QaoaLayers { graph, p } => qaoa_circuit(graph, *p),
        }
    }
}

/// Optimizer selection; iteration counts bound the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerConfig {
    GradientDescent {
        lr: f64,
        iters: usize,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        iters: usize,
    },
    Lbfgs {
        memory: usize,
        iters: usize,
    },
}

impl OptimizerConfig {
    /// Adam with the customary β1 = 0.9, β2 = 0.999.
    pub fn adam(lr: f64, iters: usize) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            iters,
        }
    }

    /// L-BFGS with memory 10.
    pub fn lbfgs(iters: usize) -> Self {
        OptimizerConfig::Lbfgs { memory: 10, iters }
    }
}

/// Initial parameter values: explicit, or seeded uniform draws in
/// [−0.1, 0.1].
#[derive(Debug, Clone, PartialEq)]
pub enum StartParams {
    Explicit(Vec<f64>),
    Random(u64),
}

/// Optimization outcome. `trace[0]` is the start value and each iteration
/// appends the value at its accepted iterate; `best_params` tracks the best
/// value seen anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
}

const GRAD_TOL: f64 = 1e-6;
const ARMIJO_C1: f64 = 1e-4;

struct Objective<'a> {
    circuit: &'a Circuit,
    ham: &'a PauliSum,
    names: Vec<String>,
}

impl Objective<'_> {
    fn env(&self, theta: &[f64]) -> Bindings {
        self.names
            .iter()
            .cloned()
            .zip(theta.iter().copied())
            .collect()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        let psi = StateVector::<f64>::run(self.circuit, &self.env(theta))?;
        psi.expectation(self.ham)
    }

    fn value_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let task = GradientTask::new(
            self.circuit.clone(),
            vec![self.ham.clone()],
            vec![theta.to_vec()],
        )?;
        let mut r = adjoint_gradient(&task)?;
        Ok((r.values[0][0], std::mem::take(&mut r.grads[0][0])))
    }
}

/// Minimizes ⟨H⟩ over the circuit parameters. The trace holds raw
/// per-iteration values (length 1 when the budget is zero); a gradient
/// ∞-norm below 1e-6 stops early with `converged` set.
pub fn optimize(
    circuit: &Circuit,
    ham: &PauliSum,
    start: StartParams,
    opt: &OptimizerConfig,
) -> Result<OptimizeResult> {
    let names = circuit.parameters();
    let obj = Objective {
        circuit,
        ham,
        names: names.clone(),
    };
    let theta0 = match start {
        StartParams::Explicit(v) => {
            if v.len() != names.len() {
                return Err(Error::invalid(
                    "start params",
                    format!("{} values for {} parameters", v.len(), names.len()),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("start parameter"));
            }
            v
        }
        StartParams::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..names.len()).map(|_| rng.gen_range(-0.1..0.1)).collect()
        }
    };
    match *opt {
        OptimizerConfig::GradientDescent { lr, iters } => {
            run_first_order(&obj, theta0, iters, |g, _t, state: &mut ()| {
                let _ = state;
                g.iter().map(|x| lr * x).collect()
            })
        }
        OptimizerConfig::Adam {
            lr,
            beta1,
            beta2,
            iters,
        } => {
            let n = theta0.len();
            let mut m = vec![0f64; n];
            let mut v = vec![0f64; n];
            run_first_order(&obj, theta0, iters, move |g, t, _state: &mut ()| {
                let t = (t + 1) as i32;
                let mut step = vec![0f64; g.len()];
                for i in 0..g.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    let mh = m[i] / (1.0 - beta1.powi(t));
                    let vh = v[i] / (1.0 - beta2.powi(t));
                    step[i] = lr * mh / (vh.sqrt() + 1e-8);
                }
                step
            })
        }
        OptimizerConfig::Lbfgs { memory, iters } => run_lbfgs(&obj, theta0, memory, iters),
    }
}

/// Shared loop for explicit-step methods; `step` maps the gradient at
/// iteration `t` to a parameter decrement.
fn run_first_order(
    obj: &Objective<'_>,
    mut theta: Vec<f64>,
    iters: usize,
    mut step: impl FnMut(&[f64], usize, &mut ()) -> Vec<f64>,
) -> Result<OptimizeResult> {
    let f0 = obj.value(&theta)?;
    if !f0.is_finite() {
        return Err(Error::DivergedObjective(0));
    }
    let mut trace = vec![f0];
    let mut best_params = theta.clone();
    let mut best_value = f0;
    let mut converged = false;
    for t in 0..iters {
        let (_, g) = obj.value_grad(&theta)?;
        if inf_norm(&g) < GRAD_TOL {
            converged = true;
            break;
        }
        let d = step(&g, t, &mut ());
        for (x, dx) in theta.iter_mut().zip(&d) {
            *x -= dx;
        }
        let f = obj.value(&theta).and_then(|f| {
            if f.is_finite() {
                Ok(f)
            } else {
                Err(Error::DivergedObjective(t + 1))
            }
        })?;
        trace.push(f);
        if f < best_value {
            best_value = f;
            best_params = theta.clone();
        }
    }
    Ok(OptimizeResult {
        best_params,
        best_value,
        trace,
        converged,
    })
}

/// Two-loop-recursion L-BFGS with backtracking Armijo line search.
fn run_lbfgs(
    obj: &Objective<'_>,
    mut theta: Vec<f64>,
    memory: usize,
    iters: usize,
) -> Result<OptimizeResult> {
    let mut f = obj.value(&theta)?;
    if !f.is_finite() {
        return Err(Error::DivergedObjective(0));
    }
    let mut trace = vec![f];
    let mut best_params = theta.clone();
    let mut best_value = f;
    let mut converged = false;
    if theta.is_empty() {
        return Ok(OptimizeResult {
            best_params,
            best_value,
            trace,
            converged: true,
        });
    }
    let mut g = obj.value_grad(&theta)?.1;
    let mut hist: std::collections::VecDeque<(Vec<f64>, Vec<f64>)> =
        std::collections::VecDeque::new();

    for t in 0..iters {
        if inf_norm(&g) < GRAD_TOL {
            converged = true;
            break;
        }
        let mut d = two_loop_direction(&g, &hist);
        if dot(&d, &g) >= 0.0 {
            // Curvature history has gone stale; fall back to steepest descent.
            hist.clear();
            d = g.iter().map(|x| -x).collect();
        }
        let slope = dot(&d, &g);
        let mut alpha = 1.0f64;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = theta.iter().zip(&d).map(|(x, dx)| x + alpha * dx).collect();
            let fc = obj.value(&cand)?;
            if !fc.is_finite() {
                return Err(Error::DivergedObjective(t + 1));
            }
            if fc <= f + ARMIJO_C1 * alpha * slope {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, fnext)) = accepted else {
            // No acceptable step along this direction; treat as converged.
            converged = true;
            break;
        };
        let gnext = obj.value_grad(&next)?.1;
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnext.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-10 {
            hist.push_back((s, y));
            if hist.len() > memory {
                hist.pop_front();
            }
        }
        theta = next;
        f = fnext;
        g = gnext;
        trace.push(f);
        if f < best_value {
            best_value = f;
            best_params = theta.clone();
        }
    }
    Ok(OptimizeResult {
        best_params,
        best_value,
        trace,
        converged,
    })
}

/// d = −H_k·g estimated from the (s, y) history.
fn two_loop_direction(
    g: &[f64],
    hist: &std::collections::VecDeque<(Vec<f64>, Vec<f64>)>,
) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y) in hist.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    if let Some((s, y)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y), (a, rho)) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += si * (a - b);
        }
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
