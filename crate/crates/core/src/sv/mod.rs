//! Full-amplitude state-vector simulator.
//!
//! Index i encodes basis state |i⟩ with qubit 0 the least significant bit.
//! Gates apply in place through class-specialized kernels behind a
//! [`KernelPolicy`]; applications above the parallel threshold fan out to
//! scoped worker threads over disjoint amplitude runs.

mod kernel;

use std::collections::BTreeMap;
use std::io;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, GateInstruction, GateKind};
use crate::error::{Error, Result};
use crate::expr::Bindings;
use crate::ops::{PauliSum, apply_string_amps};
use crate::precision::{Precision, Real};

pub use kernel::{KernelPolicy, Scalar, Vectorized};
pub(crate) use kernel::{apply_kernel, plan_dense1, plan_gate};

/// Default qubit cap: 2³⁰ amplitudes is 16 GiB at Double.
pub const DEFAULT_QUBIT_CAP: usize = 30;

/// Kernel policy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyKind {
    Scalar,
    #[default]
    Vectorized,
}

/// Worker fan-out configuration. Gates on registers below
/// `threshold_qubits` always run single-worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelConfig {
    pub threshold_qubits: usize,
    /// None resolves to the machine's available parallelism.
    pub worker_count: Option<usize>,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        ParallelConfig {
            threshold_qubits: 13,
            worker_count: None,
        }
    }
}

impl ParallelConfig {
    pub fn effective_workers(&self, n_qubits: usize) -> usize {
        if n_qubits < self.threshold_qubits.max(1) {
            return 1;
        }
        match self.worker_count {
            Some(w) => w.max(1),
            None => std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1),
        }
    }
}

/// Execution configuration for gate application.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecConfig {
    pub policy: PolicyKind,
    pub parallel: ParallelConfig,
}

/// Pure state over n qubits in the given precision.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
    applications: u64,
}

impl<T: Real> StateVector<T> {
    /// |0…0⟩ on `n_qubits`, subject to the default cap.
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::with_cap(n_qubits, DEFAULT_QUBIT_CAP)
    }

    /// |0…0⟩ with an explicit cap override.
    pub fn with_cap(n_qubits: usize, cap: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("state", "zero qubits"));
        }
        if n_qubits > cap {
            return Err(Error::QubitCapExceeded(n_qubits, cap));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1usize << n_qubits];
        amps[0] = Complex::new(T::one(), T::zero());
        Ok(StateVector {
            n_qubits,
            amps,
            applications: 0,
        })
    }

    /// Wrap raw amplitudes; the length must be 2^n_qubits.
    pub fn from_amps(n_qubits: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        if n_qubits == 0 || amps.len() != 1usize << n_qubits {
            return Err(Error::invalid(
                "state",
                format!("{} amplitudes for {} qubits", amps.len(), n_qubits),
            ));
        }
        Ok(StateVector {
            n_qubits,
            amps,
            applications: 0,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amps(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    /// Σ|ampᵢ|², accumulated in f64.
    pub fn norm_sqr(&self) -> f64 {
        self.amps
            .iter()
            .map(|a| {
                let (re, im) = (a.re.to_f64(), a.im.to_f64());
                re * re + im * im
            })
            .sum()
    }

    /// |ampᵢ|² per index, in f64.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps
            .iter()
            .map(|a| {
                let (re, im) = (a.re.to_f64(), a.im.to_f64());
                re * re + im * im
            })
            .collect()
    }

    /// Rescale to unit norm.
    pub fn normalize(&mut self) {
        let inv = T::from_f64(1.0 / self.norm_sqr().sqrt());
        for a in &mut self.amps {
            *a = Complex::new(a.re * inv, a.im * inv);
        }
    }

    /// Gate applications performed so far (kernel invocations; barriers and
    /// inner-product passes do not count).
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

    /// Apply one gate. Measure is rejected; Barrier is a no-op.
    pub fn apply_with(
        &mut self,
        g: &GateInstruction,
        env: &Bindings,
        cfg: &ExecConfig,
    ) -> Result<()> {
        g.validate_for(self.n_qubits)?;
        let Some(planned) = kernel::plan_gate::<T>(g, env)? else {
            return Ok(());
        };
        let workers = cfg.parallel.effective_workers(self.n_qubits);
        match cfg.policy {
            PolicyKind::Scalar => {
                kernel::apply_kernel::<T, Scalar>(&mut self.amps, self.n_qubits, &planned, workers)
            }
            PolicyKind::Vectorized => kernel::apply_kernel::<T, Vectorized>(
                &mut self.amps,
                self.n_qubits,
                &planned,
                workers,
            ),
        }
        self.applications += 1;
        Ok(())
    }

    /// Run a circuit from |0…0⟩ with the default configuration.
    pub fn run(c: &Circuit, env: &Bindings) -> Result<Self> {
        Self::run_with(c, env, None, &ExecConfig::default())
    }

    /// Run a circuit. Measure gates are permitted only in a trailing block
    /// (they do not modify the state); a unitary gate after a Measure is a
    /// mid-circuit measurement and is rejected.
    pub fn run_with(
        c: &Circuit,
        env: &Bindings,
        psi0: Option<Self>,
        cfg: &ExecConfig,
    ) -> Result<Self> {
        let mut psi = match psi0 {
            Some(p) => {
                if p.n_qubits != c.n_qubits() {
                    return Err(Error::invalid(
                        "initial state",
                        format!("{} qubits for a {}-qubit circuit", p.n_qubits, c.n_qubits()),
                    ));
                }
                p
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
                    psi.apply_with(g, env, cfg)?;
                }
            }
        }
        Ok(psi)
    }

    /// Sample `shots` outcomes over the listed qubits. The key renders bit k
    /// (from `qubits[k]`) with the last listed qubit leftmost; only observed
    /// outcomes appear.
    pub fn sample(
        &self,
        qubits: &[usize],
        shots: u64,
        seed: u64,
    ) -> Result<BTreeMap<String, u64>> {
        sample_probs(&self.probabilities(), self.n_qubits, qubits, shots, seed)
    }

    /// ⟨ψ|H|ψ⟩ without materializing dense H: each Pauli string is applied
    /// to a scratch copy and inner-producted against ψ.
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
        let mut scratch: Vec<Complex<T>> = Vec::with_capacity(self.amps.len());
        let mut acc = 0f64;
        for (s, c) in bound {
            scratch.clear();
            scratch.extend_from_slice(&self.amps);
            apply_string_amps(&mut scratch, s);
            let inner: f64 = self
                .amps
                .iter()
                .zip(&scratch)
                .map(|(a, b)| (a.re * b.re + a.im * b.im).to_f64())
                .sum();
            acc += c.re * inner;
        }
        Ok(acc)
    }
}

/// Bit k of v maps to string position m−1−k: the last listed qubit renders
/// leftmost.
pub fn render_bitstring(v: usize, m: usize) -> String {
    (0..m)
        .rev()
        .map(|k| if (v >> k) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Draw `shots` outcomes from a full basis-probability vector, marginalized
/// over `qubits`. Large shot counts sort the uniforms and sweep the CDF once;
/// zero-probability outcomes can never be drawn.
pub(crate) fn sample_probs(
    probs: &[f64],
    n_qubits: usize,
    qubits: &[usize],
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(Error::invalid("sample", "shots must be at least 1"));
    }
    if qubits.is_empty() {
        return Err(Error::invalid("sample", "at least one qubit required"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &q in qubits {
        if q >= n_qubits {
            return Err(Error::IndexOutOfRange {
                index: q,
                n_qubits,
            });
        }
        if !seen.insert(q) {
            return Err(Error::invalid("sample", "qubits must be distinct"));
        }
    }
    let m = qubits.len();
    let mut marginal = vec![0f64; 1usize << m];
    for (i, &p) in probs.iter().enumerate() {
        let mut v = 0usize;
        for (k, &q) in qubits.iter().enumerate() {
            v |= ((i >> q) & 1) << k;
        }
        marginal[v] += p;
    }
    let mut cdf = marginal;
    let mut acc = 0f64;
    for c in &mut cdf {
        acc += *c;
        *c = acc;
    }
    let total = acc;
    let last = cdf.len() - 1;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; 1usize << m];
    if shots > 1000 {
        let mut us: Vec<f64> = (0..shots).map(|_| rng.gen::<f64>() * total).collect();
        us.sort_unstable_by(|a, b| a.partial_cmp(b).expect("uniforms are finite"));
        let mut v = 0usize;
        for u in us {
            while v < last && u >= cdf[v] {
                v += 1;
            }
            counts[v] += 1;
        }
    } else {
        for _ in 0..shots {
            let u = rng.gen::<f64>() * total;
            let mut v = 0usize;
            while v < last && u >= cdf[v] {
                v += 1;
            }
            counts[v] += 1;
        }
    }

    let mut out = BTreeMap::new();
    for (v, &c) in counts.iter().enumerate() {
        if c > 0 {
            out.insert(render_bitstring(v, m), c);
        }
    }
    Ok(out)
}

/// 16-byte header: magic, n_qubits u32 LE, precision bits u32 LE, reserved
/// u32 zero. Payload is always (re, im) f64 LE pairs.
pub(crate) fn write_state_header<W: io::Write>(
    w: &mut W,
    magic: &[u8; 4],
    n_qubits: usize,
    precision: Precision,
) -> io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&(n_qubits as u32).to_le_bytes())?;
    w.write_all(&precision.bits().to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())
}

pub(crate) fn read_state_header<R: io::Read>(
    r: &mut R,
    magic: &[u8; 4],
    what: &'static str,
) -> Result<(usize, Precision)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|e| Error::invalid(what, e.to_string()))?;
    if &header[0..4] != magic {
        return Err(Error::invalid(what, "bad magic"));
    }
    let n_qubits = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    let bits = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes"));
    let precision = match bits {
        32 => Precision::Single,
        64 => Precision::Double,
        other => {
            return Err(Error::invalid(what, format!("bad precision field {other}")));
        }
    };
    Ok((n_qubits, precision))
}

pub(crate) fn write_amps_f64<T: Real, W: io::Write>(
    w: &mut W,
    amps: &[Complex<T>],
) -> io::Result<()> {
    for a in amps {
        w.write_all(&a.re.to_f64().to_le_bytes())?;
        w.write_all(&a.im.to_f64().to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_amps_f64<R: io::Read>(
    r: &mut R,
    count: usize,
    what: &'static str,
) -> Result<Vec<Complex<f64>>> {
    let mut buf = vec![0u8; count * 16];
    r.read_exact(&mut buf)
        .map_err(|e| Error::invalid(what, e.to_string()))?;
    Ok(buf
        .chunks_exact(16)
        .map(|ch| {
            Complex::new(
                f64::from_le_bytes(ch[0..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(ch[8..16].try_into().expect("8 bytes")),
            )
        })
        .collect())
}

/// Serialize a state in the QSV1 dump format.
pub fn write_qsv1<T: Real, W: io::Write>(psi: &StateVector<T>, w: &mut W) -> io::Result<()> {
    write_state_header(w, b"QSV1", psi.n_qubits(), T::PRECISION)?;
    write_amps_f64(w, psi.amps())
}

/// Read a QSV1 dump; returns the recorded precision tag and the amplitudes
/// (payload is always Double).
pub fn read_qsv1<R: io::Read>(r: &mut R) -> Result<(Precision, StateVector<f64>)> {
    let (n_qubits, precision) = read_state_header(r, b"QSV1", "QSV1 file")?;
    if n_qubits == 0 || n_qubits > DEFAULT_QUBIT_CAP {
        return Err(Error::invalid(
            "QSV1 file",
            format!("unreasonable qubit count {n_qubits}"),
        ));
    }
    let amps = read_amps_f64(r, 1usize << n_qubits, "QSV1 file")?;
    Ok((precision, StateVector::from_amps(n_qubits, amps)?))
}
