//! Channel-based noise: exact Kraus evolution on density matrices and
//! stochastic-trajectory unraveling on state vectors.
//!
//! Depolarizing convention: ρ' = (1−p)ρ + p·I/2, i.e. full mixing at p = 1.
//! Conventions in the literature differ by a factor 4/3 (some write
//! (1−p)ρ + (p/3)(XρX + YρY + ZρZ)); every p in this crate means the I/2
//! form.
//!
//! Trajectory randomness is counter-based: each branch decision hashes
//! (seed, trajectory-index, channel-ordinal), so trajectories are
//! reproducible and independent of execution order.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateInstruction, GateKind};
use crate::dense::DMatrix;
use crate::dm::DensityMatrix;
use crate::error::{Error, Result};
use crate::expr::Bindings;
use crate::ops::PauliSum;
use crate::precision::Real;
use crate::sv::{self, ExecConfig, PolicyKind, Scalar, StateVector, Vectorized};

type C = Complex<f64>;

/// Branch probabilities below this are treated as numerically degenerate.
const BRANCH_FLOOR: f64 = 1e-12;

/// Channel family and parameters, before targets are attached. The JSON tag
/// accepts both snake_case and collapsed spellings ("bit_flip", "bitflip").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelSpec {
    #[serde(alias = "bitflip")]
    BitFlip { p: f64 },
    #[serde(alias = "phaseflip")]
    PhaseFlip { p: f64 },
    Depolarizing { p: f64 },
    #[serde(alias = "amplitudedamping")]
    AmplitudeDamping { gamma: f64 },
    #[serde(alias = "phasedamping")]
    PhaseDamping { gamma: f64 },
    /// 2×2 Kraus operators, row-major [re, im] entries.
    Custom { kraus: Vec<Vec<[f64; 2]>> },
}

impl ChannelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelSpec::BitFlip { .. } => "bit_flip",
            ChannelSpec::PhaseFlip { .. } => "phase_flip",
            ChannelSpec::Depolarizing { .. } => "depolarizing",
            ChannelSpec::AmplitudeDamping { .. } => "amplitude_damping",
            ChannelSpec::PhaseDamping { .. } => "phase_damping",
            ChannelSpec::Custom { .. } => "custom",
        }
    }

    fn kraus_ops(&self) -> Result<Vec<DMatrix>> {
        let unit = |p: f64, what: &'static str| -> Result<f64> {
            if (0.0..=1.0).contains(&p) {
                Ok(p)
            } else {
                Err(Error::invalid(what, format!("{p} is outside [0, 1]")))
            }
        };
        let o = C::new(0.0, 0.0);
        let id = DMatrix::identity(2);
        let scaled = |m: &DMatrix, f: f64| m.scale(C::new(f, 0.0));
        Ok(match self {
            ChannelSpec::BitFlip { p } => {
                let p = unit(*p, "bit_flip p")?;
                let x = DMatrix::two_by_two(o, C::new(1.0, 0.0), C::new(1.0, 0.0), o);
                vec![scaled(&id, (1.0 - p).sqrt()), scaled(&x, p.sqrt())]
            }
            ChannelSpec::PhaseFlip { p } => {
                let p = unit(*p, "phase_flip p")?;
                let z = DMatrix::two_by_two(C::new(1.0, 0.0), o, o, C::new(-1.0, 0.0));
                vec![scaled(&id, (1.0 - p).sqrt()), scaled(&z, p.sqrt())]
            }
            ChannelSpec::Depolarizing { p } => {
                let p = unit(*p, "depolarizing p")?;
                let x = DMatrix::two_by_two(o, C::new(1.0, 0.0), C::new(1.0, 0.0), o);
                let y = DMatrix::two_by_two(o, C::new(0.0, -1.0), C::new(0.0, 1.0), o);
                let z = DMatrix::two_by_two(C::new(1.0, 0.0), o, o, C::new(-1.0, 0.0));
                let w = (p / 4.0).sqrt();
                vec![
                    scaled(&id, (1.0 - 3.0 * p / 4.0).sqrt()),
                    scaled(&x, w),
                    scaled(&y, w),
                    scaled(&z, w),
                ]
            }
            ChannelSpec::AmplitudeDamping { gamma } => {
                let g = unit(*gamma, "amplitude_damping gamma")?;
                vec![
                    DMatrix::two_by_two(C::new(1.0, 0.0), o, o, C::new((1.0 - g).sqrt(), 0.0)),
                    DMatrix::two_by_two(o, C::new(g.sqrt(), 0.0), o, o),
                ]
            }
            ChannelSpec::PhaseDamping { gamma } => {
                let g = unit(*gamma, "phase_damping gamma")?;
                vec![
                    DMatrix::two_by_two(C::new(1.0, 0.0), o, o, C::new((1.0 - g).sqrt(), 0.0)),
                    DMatrix::two_by_two(o, o, o, C::new(g.sqrt(), 0.0)),
                ]
            }
            ChannelSpec::Custom { kraus } => {
                if kraus.is_empty() {
                    return Err(Error::invalid("custom channel", "no Kraus operators"));
                }
                kraus
                    .iter()
                    .map(|k| {
                        if k.len() != 4 {
                            return Err(Error::invalid(
                                "custom channel",
                                format!("{} entries in a Kraus operator, want 4", k.len()),
                            ));
                        }
                        let data: Vec<C> = k.iter().map(|[re, im]| C::new(*re, *im)).collect();
                        Ok(DMatrix::from_rows(2, 2, &data))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        })
    }
}

/// A single-qubit Kraus channel instantiated on explicit targets; applied to
/// each target independently.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    spec: ChannelSpec,
    kraus: Vec<DMatrix>,
    /// K†K per branch, for branch probabilities.
    gram: Vec<DMatrix>,
    targets: Vec<usize>,
}

impl KrausChannel {
    /// Build and verify the channel. Completeness Σ K†K = I is asserted to
    /// 1e-8; a violating Custom list is rejected.
    pub fn new(spec: ChannelSpec, targets: impl Into<Vec<usize>>) -> Result<Self> {
        let targets = targets.into();
        if targets.is_empty() {
            return Err(Error::invalid("channel", "at least one target required"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &q in &targets {
            if !seen.insert(q) {
                return Err(Error::invalid("channel", "targets must be distinct"));
            }
        }
        let kraus = spec.kraus_ops()?;
        let gram: Vec<DMatrix> = kraus.iter().map(|k| k.adjoint().matmul(k)).collect();
        let mut sum = DMatrix::zeros(2, 2);
        for g in &gram {
            sum = sum.add(g);
        }
        let defect = sum.max_abs_diff(&DMatrix::identity(2));
        if defect > 1e-8 {
            return Err(Error::IncompleteChannel(defect));
        }
        Ok(KrausChannel {
            spec,
            kraus,
            gram,
            targets,
        })
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn n_branches(&self) -> usize {
        self.kraus.len()
    }

    /// Σ K†K deviation from I.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = DMatrix::zeros(2, 2);
        for g in &self.gram {
            sum = sum.add(g);
        }
        sum.max_abs_diff(&DMatrix::identity(2))
    }

    /// ρ ← Σᵢ KᵢρKᵢ† on every target, in listed order.
    pub fn apply_dm<T: Real>(&self, rho: &mut DensityMatrix<T>) -> Result<()> {
        self.check_range(rho.n_qubits())?;
        let n = rho.n_qubits();
        let n2 = 2 * n;
        let cfg = ExecConfig::default();
        let workers = cfg.parallel.effective_workers(n2);
        for &q in &self.targets {
            let mut out = vec![Complex::new(T::zero(), T::zero()); rho.elems().len()];
            for k in &self.kraus {
                let mut tmp = rho.elems().to_vec();
                let left = sv::plan_dense1::<T>(q + n, k);
                let right = sv::plan_dense1::<T>(q, k).conjugated();
                match cfg.policy {
                    PolicyKind::Scalar => {
                        sv::apply_kernel::<T, Scalar>(&mut tmp, n2, &left, workers);
                        sv::apply_kernel::<T, Scalar>(&mut tmp, n2, &right, workers);
                    }
                    PolicyKind::Vectorized => {
                        sv::apply_kernel::<T, Vectorized>(&mut tmp, n2, &left, workers);
                        sv::apply_kernel::<T, Vectorized>(&mut tmp, n2, &right, workers);
                    }
                }
                for (o, t) in out.iter_mut().zip(&tmp) {
                    *o += *t;
                }
            }
            rho.elems_mut().copy_from_slice(&out);
        }
        Ok(())
    }

    /// Stochastic unraveling: per target, pick branch i with probability
    /// pᵢ = ⟨ψ|Kᵢ†Kᵢ|ψ⟩, apply Kᵢ, renormalize. `next_u` supplies one
    /// uniform [0,1) draw per target. Returns the chosen branch indices.
    pub fn apply_sv<T: Real>(
        &self,
        psi: &mut StateVector<T>,
        mut next_u: impl FnMut() -> f64,
    ) -> Result<Vec<usize>> {
        self.check_range(psi.n_qubits())?;
        let n = psi.n_qubits();
        let mut picks = Vec::with_capacity(self.targets.len());
        for &q in &self.targets {
            let probs: Vec<f64> = self
                .gram
                .iter()
                .map(|g| branch_prob(psi.amps(), q, g))
                .collect();
            let total: f64 = probs.iter().sum();
            let u = next_u() * total;
            let mut pick = probs.len() - 1;
            let mut acc = 0f64;
            for (i, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            let p = probs[pick];
            if p < BRANCH_FLOOR {
                return Err(Error::ZeroNormBranch(p));
            }
            let plan = sv::plan_dense1::<T>(q, &self.kraus[pick]);
            sv::apply_kernel::<T, Vectorized>(psi.amps_mut(), n, &plan, 1);
            let inv = T::from_f64(1.0 / p.sqrt());
            for a in psi.amps_mut() {
                *a = Complex::new(a.re * inv, a.im * inv);
            }
            picks.push(pick);
        }
        Ok(picks)
    }

    fn check_range(&self, n_qubits: usize) -> Result<()> {
        for &q in &self.targets {
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    n_qubits,
                });
            }
        }
        Ok(())
    }
}

/// ⟨ψ|M_q|ψ⟩ for a 2×2 Hermitian M on qubit q.
fn branch_prob<T: Real>(amps: &[Complex<T>], q: usize, m: &DMatrix) -> f64 {
    let bit = 1usize << q;
    let (m00, m01, m11) = (m[(0, 0)].re, m[(0, 1)], m[(1, 1)].re);
    let mut acc = 0f64;
    for i in 0..amps.len() {
        if i & bit != 0 {
            continue;
        }
        let a0 = amps[i];
        let a1 = amps[i | bit];
        let (r0, i0) = (a0.re.to_f64(), a0.im.to_f64());
        let (r1, i1) = (a1.re.to_f64(), a1.im.to_f64());
        let cross = m01.re * (r0 * r1 + i0 * i1) + m01.im * (r0 * i1 - i0 * r1);
        acc += m00 * (r0 * r0 + i0 * i0) + m11 * (r1 * r1 + i1 * i1) + 2.0 * cross;
    }
    acc
}

/// Noise attachment policy parsed from model JSON: a fallback channel for
/// every gate plus per-kind overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<ChannelSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_kind: BTreeMap<String, ChannelSpec>,
}

impl NoiseModel {
    pub fn from_json(s: &str) -> Result<Self> {
        let model: NoiseModel =
            serde_json::from_str(s).map_err(|e| Error::invalid("noise model", e.to_string()))?;
        for key in model.per_kind.keys() {
            let quoted = format!("\"{}\"", key.to_ascii_lowercase());
            if serde_json::from_str::<GateKind>(&quoted).is_err() {
                return Err(Error::invalid(
                    "noise model",
                    format!("unknown gate kind {key}"),
                ));
            }
        }
        Ok(model)
    }

    pub fn is_empty(&self) -> bool {
        self.default.is_none() && self.per_kind.is_empty()
    }

    fn spec_for(&self, kind: GateKind) -> Option<&ChannelSpec> {
        self.per_kind
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(kind.name()))
            .map(|(_, s)| s)
            .or(self.default.as_ref())
    }
}

/// One step of a noisy program.
#[derive(Debug, Clone, PartialEq)]
pub enum NoisyOp {
    Gate(GateInstruction),
    Channel(KrausChannel),
}

/// A circuit with channels interleaved after matching gates.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyCircuit {
    n_qubits: usize,
    ops: Vec<NoisyOp>,
}

/// Attach a channel instance after each gate the model matches, on that
/// gate's targets. Measure and Barrier never match.
pub fn noisy_circuit(c: &Circuit, model: &NoiseModel) -> Result<NoisyCircuit> {
    let mut ops = Vec::with_capacity(c.gates().len());
    for g in c.gates() {
        ops.push(NoisyOp::Gate(g.clone()));
        if matches!(g.kind, GateKind::Measure | GateKind::Barrier) {
            continue;
        }
        if let Some(spec) = model.spec_for(g.kind) {
            ops.push(NoisyOp::Channel(KrausChannel::new(
                spec.clone(),
                g.targets.clone(),
            )?));
        }
    }
    Ok(NoisyCircuit {
        n_qubits: c.n_qubits(),
        ops,
    })
}

impl NoisyCircuit {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[NoisyOp] {
        &self.ops
    }

    pub fn n_channels(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, NoisyOp::Channel(_)))
            .count()
    }

    /// Exact evolution: gates as UρU†, channels as Kraus sums.
    pub fn run_dm<T: Real>(&self, env: &Bindings) -> Result<DensityMatrix<T>> {
        let mut rho = DensityMatrix::new(self.n_qubits)?;
        let cfg = ExecConfig::default();
        let mut measured = false;
        for op in &self.ops {
            match op {
                NoisyOp::Gate(g) => match g.kind {
                    GateKind::Measure => measured = true,
                    GateKind::Barrier => {}
                    _ => {
                        if measured {
                            return Err(Error::MidCircuitMeasure);
                        }
                        rho.apply_with(g, env, &cfg)?;
                    }
                },
                NoisyOp::Channel(ch) => ch.apply_dm(&mut rho)?,
            }
        }
        Ok(rho)
    }

    /// One stochastic trajectory. Branch decisions consume counter-based
    /// uniforms keyed by (seed, traj_index, channel ordinal), so any subset
    /// of trajectories can be reproduced in isolation.
    pub fn run_trajectory<T: Real>(
        &self,
        env: &Bindings,
        seed: u64,
        traj_index: u64,
    ) -> Result<StateVector<T>> {
        let mut psi = StateVector::new(self.n_qubits)?;
        let cfg = ExecConfig::default();
        let mut ordinal = 0u64;
        let mut measured = false;
        for op in &self.ops {
            match op {
                NoisyOp::Gate(g) => match g.kind {
                    GateKind::Measure => measured = true,
                    GateKind::Barrier => {}
                    _ => {
                        if measured {
                            return Err(Error::MidCircuitMeasure);
                        }
                        psi.apply_with(g, env, &cfg)?;
                    }
                },
                NoisyOp::Channel(ch) => {
                    ch.apply_sv(&mut psi, || {
                        let u = counter_uniform(seed, traj_index, ordinal);
                        ordinal += 1;
                        u
                    })?;
                }
            }
        }
        Ok(psi)
    }

    /// Trajectory-mean estimate of ⟨H⟩ with its standard error. Results
    /// reduce in trajectory order regardless of scheduling.
    pub fn trajectory_expectation(
        &self,
        env: &Bindings,
        h: &PauliSum,
        n_trajectories: u64,
        seed: u64,
    ) -> Result<TrajectoryEstimate> {
        if n_trajectories == 0 {
            return Err(Error::invalid("trajectories", "at least one required"));
        }
        let mut sum = 0f64;
        let mut sum_sq = 0f64;
        for t in 0..n_trajectories {
            let psi: StateVector<f64> = self.run_trajectory(env, seed, t)?;
            let v = psi.expectation(h)?;
            sum += v;
            sum_sq += v * v;
        }
        let n = n_trajectories as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        let std_err = if n_trajectories > 1 {
            (var / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(TrajectoryEstimate {
            mean,
            std_err,
            n_trajectories,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEstimate {
    pub mean: f64,
    /// Sample σ/√N.
    pub std_err: f64,
    pub n_trajectories: u64,
}

/// splitmix64-style mix of the (seed, trajectory, ordinal) counter into a
/// uniform in [0, 1).
fn counter_uniform(seed: u64, traj: u64, ordinal: u64) -> f64 {
    let mut z = seed
        .wrapping_add(traj.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(ordinal.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
