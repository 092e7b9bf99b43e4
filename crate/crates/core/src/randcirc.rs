//! Seeded random circuit generation for benchmarks and property suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, GateInstruction, GateKind};
use crate::expr::ParameterExpression;

#[derive(Clone, Copy)]
enum Draw {
    Plain(GateKind),
    Cnot,
}

/// Benchmark gate pool: X, Y, Z, H, CNOT, S, T, RX, RY, RZ, Rxx, Ryy, Rzz,
/// SWAP; each drawn gate gains an extra control with probability 0.3.
const POOL: [Draw; 14] = [
    Draw::Plain(GateKind::X),
    Draw::Plain(GateKind::Y),
    Draw::Plain(GateKind::Z),
    Draw::Plain(GateKind::H),
    Draw::Cnot,
    Draw::Plain(GateKind::S),
    Draw::Plain(GateKind::T),
    Draw::Plain(GateKind::Rx),
    Draw::Plain(GateKind::Ry),
    Draw::Plain(GateKind::Rz),
    Draw::Plain(GateKind::Rxx),
    Draw::Plain(GateKind::Ryy),
    Draw::Plain(GateKind::Rzz),
    Draw::Plain(GateKind::Swap),
];

fn needs_partner(d: Draw) -> bool {
    match d {
        Draw::Cnot => true,
        Draw::Plain(k) => k.fixed_targets() == Some(2),
    }
}

/// A uniformly random qubit outside `used`. `n` must exceed `used.len()`.
fn pick_other(rng: &mut ChaCha8Rng, n: usize, used: &[usize]) -> usize {
    loop {
        let q = rng.gen_range(0..n);
        if !used.contains(&q) {
            return q;
        }
    }
}

fn random_angle(rng: &mut ChaCha8Rng) -> ParameterExpression {
    ParameterExpression::constant(rng.gen_range(0.0..std::f64::consts::TAU))
}

/// The benchmark generator: `gates_per_qubit` layers, each assigning every
/// qubit a uniformly drawn pool gate; two-qubit kinds pick a random partner;
/// a control is added with probability 0.3 when a spare qubit exists.
/// Deterministic per (n_qubits, gates_per_qubit, seed).
pub fn bench_circuit(n_qubits: usize, gates_per_qubit: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::new();
    for _ in 0..gates_per_qubit {
        for q in 0..n_qubits {
            gates.push(random_pool_gate(&mut rng, n_qubits, q));
        }
    }
    Circuit::from_gates(n_qubits, gates).expect("generated gates are valid")
}

fn random_pool_gate(rng: &mut ChaCha8Rng, n: usize, q: usize) -> GateInstruction {
    let draw = loop {
        let d = POOL[rng.gen_range(0..POOL.len())];
        if !needs_partner(d) || n >= 2 {
            break d;
        }
    };
    let mut g = match draw {
        Draw::Cnot => {
            let c = pick_other(rng, n, &[q]);
            GateInstruction::cnot(c, q).expect("distinct qubits")
        }
        Draw::Plain(kind) => {
            let arg = matches!(
                kind,
                GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rxx | GateKind::Ryy | GateKind::Rzz
            )
            .then(|| random_angle(rng));
            match kind.fixed_targets() {
                Some(2) => {
                    let p = pick_other(rng, n, &[q]);
                    GateInstruction::new(kind, vec![q, p], [], arg).expect("valid two-qubit gate")
                }
                _ => GateInstruction::new(kind, vec![q], [], arg).expect("valid one-qubit gate"),
            }
        }
    };
    if rng.gen_bool(0.3) {
        let used: Vec<usize> = g.qubits().collect();
        if used.len() < n {
            let c = pick_other(rng, n, &used);
            let mut controls: Vec<usize> = g.controls.iter().copied().collect();
            controls.push(c);
            g = GateInstruction::new(g.kind, g.targets.clone(), controls, g.arg.clone())
                .expect("control addition stays within caps");
        }
    }
    g
}

/// Random differentiable circuit for gradient suites: parameterized
/// rotations (uncontrolled, linear expressions over `params`) mixed with
/// constant Clifford-ish gates that may carry a control.
pub fn grad_circuit(n_qubits: usize, n_gates: usize, params: &[&str], seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::PhaseShift,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
    ];
    let constant = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::T,
        GateKind::Swap,
    ];
    let mut gates = Vec::new();
    for _ in 0..n_gates {
        if !params.is_empty() && rng.gen_bool(0.6) {
            let kind = rot[rng.gen_range(0..rot.len())];
            let name = params[rng.gen_range(0..params.len())];
            let coeff = loop {
                let c: f64 = rng.gen_range(-1.5..1.5);
                if c.abs() > 0.1 {
                    break c;
                }
            };
            let arg = ParameterExpression::term(name, coeff)
                .expect("valid name")
                .add(&ParameterExpression::constant(rng.gen_range(-0.5..0.5)));
            let q = rng.gen_range(0..n_qubits);
            let targets = if kind.fixed_targets() == Some(2) {
                if n_qubits < 2 {
                    continue;
                }
                vec![q, pick_other(&mut rng, n_qubits, &[q])]
            } else {
                vec![q]
            };
            gates.push(GateInstruction::new(kind, targets, [], Some(arg)).expect("valid gate"));
        } else {
            let kind = constant[rng.gen_range(0..constant.len())];
            let q = rng.gen_range(0..n_qubits);
            let mut targets = vec![q];
            if kind.fixed_targets() == Some(2) {
                if n_qubits < 2 {
                    continue;
                }
                targets.push(pick_other(&mut rng, n_qubits, &[q]));
            }
            let mut controls: Vec<usize> = Vec::new();
            if n_qubits > targets.len() && rng.gen_bool(0.3) {
                controls.push(pick_other(&mut rng, n_qubits, &targets));
            }
            gates.push(GateInstruction::new(kind, targets, controls, None).expect("valid gate"));
        }
    }
    Circuit::from_gates(n_qubits, gates).expect("generated gates are valid")
}
