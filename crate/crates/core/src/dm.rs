//! Density-matrix simulator for mixed states and exact channel evolution.
//!
//! ρ is stored dense and row-major, ρ[r·2ⁿ + c], with the same qubit 0 =
//! least-significant-bit convention as the state-vector engine. Viewed as a
//! 2n-qubit amplitude array the row index occupies the high n bits, so
//! UρU† runs as two state-vector kernel passes: U on the row side (qubits
//! shifted up by n) and conj(U) on the column side.

use std::collections::BTreeMap;
use std::io;

use num_complex::Complex;

use crate::circuit::{Circuit, GateInstruction, GateKind};
use crate::error::{Error, Result};
use crate::expr::Bindings;
use crate::ops::{PauliSum, string_phase};
use crate::precision::{Precision, Real};
use crate::sv::{
    self, ExecConfig, PolicyKind, Scalar, StateVector, Vectorized, read_amps_f64,
    read_state_header, sample_probs, write_amps_f64, write_state_header,
};

/// Default qubit cap: 2²⁶ entries is 1 GiB at Double.
pub const DM_QUBIT_CAP: usize = 13;

/// Mixed state over n qubits in the given precision.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    n_qubits: usize,
    elems: Vec<Complex<T>>,
    applications: u64,
}

impl<T: Real> DensityMatrix<T> {
    /// |0…0⟩⟨0…0| with the default qubit cap.
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::with_cap(n_qubits, DM_QUBIT_CAP)
    }

    /// |0…0⟩⟨0…0| with an explicit cap override.
    pub fn with_cap(n_qubits: usize, cap: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("state", "zero qubits"));
        }
        if n_qubits > cap {
            return Err(Error::QubitCapExceeded(n_qubits, cap));
        }
        let mut elems = vec![Complex::new(T::zero(), T::zero()); 1usize << (2 * n_qubits)];
        elems[0] = Complex::new(T::one(), T::zero());
        Ok(DensityMatrix {
            n_qubits,
            elems,
            applications: 0,
        })
    }

    /// Wrap raw entries; the length must be 2^(2·n_qubits).
    pub fn from_elems(n_qubits: usize, elems: Vec<Complex<T>>) -> Result<Self> {
        if n_qubits == 0 || elems.len() != 1usize << (2 * n_qubits) {
            return Err(Error::invalid(
                "state",
                format!("{} entries for {} qubits", elems.len(), n_qubits),
            ));
        }
        Ok(DensityMatrix {
            n_qubits,
            elems,
            applications: 0,
        })
    }

    /// ρ = |ψ⟩⟨ψ|.
    pub fn from_statevector(psi: &StateVector<T>) -> Result<Self> {
        let n = psi.n_qubits();
        if n > DM_QUBIT_CAP {
            return Err(Error::QubitCapExceeded(n, DM_QUBIT_CAP));
        }
        let dim = psi.len();
        let mut elems = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            let a = psi.amps()[r];
            for c in 0..dim {
                elems.push(cmul_conj(a, psi.amps()[c]));
            }
        }
        Ok(DensityMatrix {
            n_qubits: n,
            elems,
            applications: 0,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// 2ⁿ.
    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn elems(&self) -> &[Complex<T>] {
        &self.elems
    }

    pub fn elems_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.elems
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex<T> {
        self.elems[r * self.dim() + c]
    }

    /// tr(ρ), accumulated in f64. Real part only; the imaginary part of a
    /// valid state's trace is zero.
    pub fn trace(&self) -> f64 {
        let dim = self.dim();
        (0..dim).map(|r| self.elems[r * dim + r].re.to_f64()).sum()
    }

    /// tr(ρ²) = Σ ρ[r,c]·ρ[c,r], accumulated in f64.
    pub fn purity(&self) -> f64 {
        let dim = self.dim();
        let mut acc = 0f64;
        for r in 0..dim {
            for c in 0..dim {
                let a = self.elems[r * dim + c];
                let b = self.elems[c * dim + r];
                acc += (a.re * b.re - a.im * b.im).to_f64();
            }
        }
        acc
    }

    /// max |ρ[r,c] − conj(ρ[c,r])|.
    pub fn hermiticity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0f64;
        for r in 0..dim {
            for c in 0..dim {
                let a = self.elems[r * dim + c];
                let b = self.elems[c * dim + r];
                let d = (a.re - b.re).to_f64().hypot((a.im + b.im).to_f64());
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Diagonal entries as f64 (basis-state probabilities).
    pub fn probabilities(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|r| self.elems[r * dim + r].re.to_f64())
            .collect()
    }

    /// Kernel passes performed so far; one gate costs two passes but counts
    /// once.
    pub fn gate_applications(&self) -> u64 {
        self.applications
    }

    pub fn reset_gate_applications(&mut self) {
        self.applications = 0;
    }

    /// Apply one gate with the default configuration.
    pub fn apply(&mut self, g: &GateInstruction, env: &Bindings) -> Result<()> {
        self.apply_with(g, env, &ExecConfig::default())
    }

    /// ρ ← UρU† as two kernel passes. Measure is rejected; Barrier is a
    /// no-op.
    pub fn apply_with(
        &mut self,
        g: &GateInstruction,
        env: &Bindings,
        cfg: &ExecConfig,
    ) -> Result<()> {
        g.validate_for(self.n_qubits)?;
        let Some(planned) = sv::plan_gate::<T>(g, env)? else {
            return Ok(());
        };
        let n2 = 2 * self.n_qubits;
        let workers = cfg.parallel.effective_workers(n2);
        let left = planned.shifted(self.n_qubits);
        let right = planned.conjugated();
        match cfg.policy {
            PolicyKind::Scalar => {
                sv::apply_kernel::<T, Scalar>(&mut self.elems, n2, &left, workers);
                sv::apply_kernel::<T, Scalar>(&mut self.elems, n2, &right, workers);
            }
            PolicyKind::Vectorized => {
                sv::apply_kernel::<T, Vectorized>(&mut self.elems, n2, &left, workers);
                sv::apply_kernel::<T, Vectorized>(&mut self.elems, n2, &right, workers);
            }
        }
        self.applications += 1;
        Ok(())
    }

    /// Run a circuit from |0…0⟩⟨0…0| with the default configuration.
    pub fn run(c: &Circuit, env: &Bindings) -> Result<Self> {
        Self::run_with(c, env, None, &ExecConfig::default())
    }

    /// Run a circuit; trailing Measure gates are permitted as in the
    /// state-vector engine.
    pub fn run_with(
        c: &Circuit,
        env: &Bindings,
        rho0: Option<Self>,
        cfg: &ExecConfig,
    ) -> Result<Self> {
        let mut rho = match rho0 {
            Some(r) => {
                if r.n_qubits != c.n_qubits() {
                    return Err(Error::invalid(
                        "initial state",
                        format!("{} qubits for a {}-qubit circuit", r.n_qubits, c.n_qubits()),
                    ));
                }
                r
            }
            None => Self::new(c.n_qubits())?,
        };
        let mut measured = false;
        for g in c.gates() {
            match g.kind {
                GateKind::Measure => measured = true,
                GateKind::Barrier => {}
                _ => {
                    if measured {
                        return Err(Error::MidCircuitMeasure);
                    }
                    rho.apply_with(g, env, cfg)?;
                }
            }
        }
        Ok(rho)
    }

    /// Sample `shots` outcomes from the diagonal of ρ; same key convention
    /// as the state-vector sampler.
    pub fn sample(
        &self,
        qubits: &[usize],
        shots: u64,
        seed: u64,
    ) -> Result<BTreeMap<String, u64>> {
        sample_probs(&self.probabilities(), self.n_qubits, qubits, shots, seed)
    }

    /// tr(ρH) without materializing dense H. Per string P with X-support
    /// xmask, the only surviving entries are tr(ρP) = Σ_s c(s)·ρ[s⊕xmask, s]
    /// with c the string's phase function.
    pub fn expectation(&self, h: &PauliSum) -> Result<f64> {
        let bound = h.bound_terms()?;
        h.check_hermitian()?;
        if let Some(q) = h.max_qubit() {
            if q >= self.n_qubits {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        let dim = self.dim();
        let mut acc = 0f64;
        for (s, c) in bound {
            let (xmask, ymask, zmask) = s.masks();
            let ny = (ymask as u64).count_ones();
            let mut tr = 0f64;
            for col in 0..dim {
                let phase: Complex<T> = string_phase(col, ymask, zmask, ny);
                let e = self.elems[(col ^ xmask) * dim + col];
                tr += (phase.re * e.re - phase.im * e.im).to_f64();
            }
            acc += c.re * tr;
        }
        Ok(acc)
    }
}

fn cmul_conj<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    Complex::new(a.re * b.re + a.im * b.im, a.im * b.re - a.re * b.im)
}

/// Serialize a density matrix in the QDM1 dump format: QSV1's header with
/// magic "QDM1" and a full row-major matrix payload.
pub fn write_qdm1<T: Real, W: io::Write>(rho: &DensityMatrix<T>, w: &mut W) -> io::Result<()> {
    write_state_header(w, b"QDM1", rho.n_qubits(), T::PRECISION)?;
    write_amps_f64(w, rho.elems())
}

/// Read a QDM1 dump; returns the recorded precision tag and the entries
/// (payload is always Double).
pub fn read_qdm1<R: io::Read>(r: &mut R) -> Result<(Precision, DensityMatrix<f64>)> {
    let (n_qubits, precision) = read_state_header(r, b"QDM1", "QDM1 file")?;
    if n_qubits == 0 || n_qubits > DM_QUBIT_CAP {
        return Err(Error::invalid(
            "QDM1 file",
            format!("unreasonable qubit count {n_qubits}"),
        ));
    }
    let elems = read_amps_f64(r, 1usize << (2 * n_qubits), "QDM1 file")?;
    Ok((precision, DensityMatrix::from_elems(n_qubits, elems)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::PauliString;
    use crate::randcirc;
    use rand::{Rng, SeedableRng};

    type C = Complex<f64>;

    fn no_env() -> Bindings {
        Bindings::new()
    }

    fn max_entry_diff(rho: &DensityMatrix<f64>, expect: &[C]) -> f64 {
        rho.elems()
            .iter()
            .zip(expect)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn x_flips_projector() {
        let mut rho = DensityMatrix::<f64>::new(1).unwrap();
        rho.apply(&GateInstruction::x(0), &no_env()).unwrap();
        let expect = [C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
        assert!(max_entry_diff(&rho, &expect) < 1e-15);
    }

    #[test]
    fn h_makes_plus_projector() {
        let mut rho = DensityMatrix::<f64>::new(1).unwrap();
        rho.apply(&GateInstruction::h(0), &no_env()).unwrap();
        let half = C::new(0.5, 0.0);
        assert!(max_entry_diff(&rho, &[half, half, half, half]) < 1e-15);
    }

    #[test]
    fn pure_evolution_matches_statevector_outer_product() {
        for seed in [1u64, 2, 3] {
            let c = randcirc::bench_circuit(3, 8, seed);
            let psi = StateVector::<f64>::run(&c, &no_env()).unwrap();
            let rho = DensityMatrix::<f64>::run(&c, &no_env()).unwrap();
            let oracle = DensityMatrix::from_statevector(&psi).unwrap();
            assert!(max_entry_diff(&rho, oracle.elems()) < 1e-12, "seed {seed}");
        }
        let c = randcirc::bench_circuit(6, 10, 99);
        let psi = StateVector::<f64>::run(&c, &no_env()).unwrap();
        let rho = DensityMatrix::<f64>::run(&c, &no_env()).unwrap();
        let oracle = DensityMatrix::from_statevector(&psi).unwrap();
        assert!(max_entry_diff(&rho, oracle.elems()) < 1e-11);
    }

    #[test]
    fn trace_and_hermiticity_survive_every_gate() {
        let c = randcirc::bench_circuit(4, 12, 7);
        let mut rho = DensityMatrix::<f64>::new(4).unwrap();
        for g in c.gates() {
            let before = rho.trace();
            rho.apply(g, &no_env()).unwrap();
            assert!((rho.trace() - before).abs() < 1e-12, "gate {}", g.kind.name());
        }
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn expectation_on_mixed_and_pure_states() {
        let z0 = PauliSum::parse("Z0").unwrap();
        let mixed = DensityMatrix::from_elems(
            1,
            vec![C::new(0.5, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.5, 0.0)],
        )
        .unwrap();
        assert!(mixed.expectation(&z0).unwrap().abs() < 1e-15);

        let mut one = DensityMatrix::<f64>::new(1).unwrap();
        one.apply(&GateInstruction::x(0), &no_env()).unwrap();
        assert!((one.expectation(&z0).unwrap() + 1.0).abs() < 1e-15);

        let skewed = DensityMatrix::from_elems(
            1,
            vec![C::new(0.75, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.25, 0.0)],
        )
        .unwrap();
        assert!((skewed.expectation(&z0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn expectation_agrees_with_statevector() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(404);
        for seed in [11u64, 12, 13] {
            let c = randcirc::bench_circuit(4, 6, seed);
            let psi = StateVector::<f64>::run(&c, &no_env()).unwrap();
            let rho = DensityMatrix::from_statevector(&psi).unwrap();
            let mut h = PauliSum::zero();
            for _ in 0..6 {
                let mut factors = Vec::new();
                for q in 0..4 {
                    match rng.gen_range(0..4) {
                        0 => factors.push((q, crate::ops::Pauli::X)),
                        1 => factors.push((q, crate::ops::Pauli::Y)),
                        2 => factors.push((q, crate::ops::Pauli::Z)),
                        _ => {}
                    }
                }
                h.add_term(PauliString::from_factors(factors), rng.gen_range(-2.0..2.0));
            }
            let sv_val = psi.expectation(&h).unwrap();
            let dm_val = rho.expectation(&h).unwrap();
            assert!((sv_val - dm_val).abs() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn from_statevector_is_pure_and_normalized() {
        let c = randcirc::bench_circuit(4, 10, 2222);
        let psi = StateVector::<f64>::run(&c, &no_env()).unwrap();
        let rho = DensityMatrix::from_statevector(&psi).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn qdm1_round_trip_and_header_layout() {
        let mut rho = DensityMatrix::<f64>::new(1).unwrap();
        rho.apply(&GateInstruction::h(0), &no_env()).unwrap();
        let mut buf = Vec::new();
        write_qdm1(&rho, &mut buf).unwrap();
        assert_eq!(&buf[0..4], b"QDM1");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &64u32.to_le_bytes());
        assert_eq!(buf.len(), 16 + 4 * 16);
        let (precision, back) = read_qdm1(&mut buf.as_slice()).unwrap();
        assert_eq!(precision, Precision::Double);
        assert_eq!(back.elems(), rho.elems());
    }

    #[test]
    fn qubit_cap_is_enforced() {
        assert_eq!(
            DensityMatrix::<f64>::new(14).unwrap_err(),
            Error::QubitCapExceeded(14, 13)
        );
        assert!(DensityMatrix::<f64>::with_cap(14, 14).is_ok());
    }

    #[test]
    fn sampling_reads_the_diagonal() {
        let mut rho = DensityMatrix::<f64>::new(2).unwrap();
        rho.apply(&GateInstruction::h(0), &no_env()).unwrap();
        rho.apply(&GateInstruction::x(1).with_controls([0]).unwrap(), &no_env())
            .unwrap();
        let counts = rho.sample(&[0, 1], 5000, 3).unwrap();
        assert_eq!(counts.values().sum::<u64>(), 5000);
        for key in counts.keys() {
            assert!(key == "00" || key == "11", "impossible outcome {key}");
        }
        let mut psi = StateVector::<f64>::new(2).unwrap();
        psi.apply(&GateInstruction::h(0), &no_env()).unwrap();
        psi.apply(&GateInstruction::x(1).with_controls([0]).unwrap(), &no_env())
            .unwrap();
        assert_eq!(counts, psi.sample(&[0, 1], 5000, 3).unwrap());
    }

    #[test]
    fn controlled_gates_act_on_both_sides() {
        // CZ on |++⟩⟨++|: every entry touching index 3 flips sign.
        let mut rho = DensityMatrix::<f64>::new(2).unwrap();
        rho.apply(&GateInstruction::h(0), &no_env()).unwrap();
        rho.apply(&GateInstruction::h(1), &no_env()).unwrap();
        rho.apply(&GateInstruction::z(1).with_controls([0]).unwrap(), &no_env())
            .unwrap();
        for r in 0..4usize {
            for c in 0..4usize {
                let sign = if (r == 3) ^ (c == 3) { -0.25 } else { 0.25 };
                assert!((rho.entry(r, c) - C::new(sign, 0.0)).norm() < 1e-15, "({r},{c})");
            }
        }
    }
}
