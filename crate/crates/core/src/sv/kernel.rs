//! Gate-application kernels over raw amplitude storage.
//!
//! Gates dispatch by static class: Z-like gates scale amplitudes in place
//! with no pairing, X-like gates swap-with-scale amplitude pairs, and the
//! general case forms 2- or 4-amplitude linear combinations. Iteration
//! enumerates contiguous runs of base indices (all special bits fixed:
//! target bits 0, control bits 1); a target at qubit 0 takes the adjacent
//! interleaved-pair path instead of the strided one.

use num_complex::Complex;

use crate::circuit::{GateClass, GateInstruction, GateKind, gate_matrix};
use crate::dense::DMatrix;
use crate::error::{Error, Result};
use crate::expr::Bindings;
use crate::precision::Real;

pub type Mat2<T> = [[Complex<T>; 2]; 2];
pub type Mat4<T> = [[Complex<T>; 4]; 4];

/// Low-level iteration primitives. Implementations must perform the same
/// floating-point operations in the same per-element order so that every
/// policy is bit-identical to Scalar.
pub trait KernelPolicy: Send + Sync + 'static {
    /// run[i] *= f.
    fn scale_run<T: Real>(run: &mut [Complex<T>], f: Complex<T>);
    /// Even positions *= a, odd positions *= b (diagonal gate on qubit 0).
    fn scale_interleaved<T: Real>(chunk: &mut [Complex<T>], a: Complex<T>, b: Complex<T>);
    /// 2×2 update on pairs (chunk[2l], chunk[2l+1]).
    fn pairs_adjacent<T: Real>(chunk: &mut [Complex<T>], m: &Mat2<T>);
    /// 2×2 update on pairs (lo[l], hi[l]); slices are disjoint equal-length runs.
    fn pairs_split<T: Real>(lo: &mut [Complex<T>], hi: &mut [Complex<T>], m: &Mat2<T>);
    /// Anti-diagonal update: new_even = a·old_odd, new_odd = b·old_even.
    fn xswap_adjacent<T: Real>(chunk: &mut [Complex<T>], a: Complex<T>, b: Complex<T>);
    /// Anti-diagonal update across runs: new_lo = a·old_hi, new_hi = b·old_lo.
    fn xswap_split<T: Real>(lo: &mut [Complex<T>], hi: &mut [Complex<T>], a: Complex<T>, b: Complex<T>);
    /// 4×4 update on quads (r0[l], r1[l], r2[l], r3[l]).
    fn quad_run<T: Real>(
        r0: &mut [Complex<T>],
        r1: &mut [Complex<T>],
        r2: &mut [Complex<T>],
        r3: &mut [Complex<T>],
        m: &Mat4<T>,
    );
}

/// Plain per-element loops.
pub struct Scalar;

/// Lane-blocked loops over fixed-width chunks with explicit component
/// arithmetic; element semantics identical to Scalar.
pub struct Vectorized;

const LANES: usize = 4;

#[inline]
fn mul2<T: Real>(m0: Complex<T>, x: Complex<T>, m1: Complex<T>, y: Complex<T>) -> Complex<T> {
    Complex::new(
        (m0.re * x.re - m0.im * x.im) + (m1.re * y.re - m1.im * y.im),
        (m0.re * x.im + m0.im * x.re) + (m1.re * y.im + m1.im * y.re),
    )
}

#[inline]
fn cmul<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    Complex::new(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)
}

impl KernelPolicy for Scalar {
    fn scale_run<T: Real>(run: &mut [Complex<T>], f: Complex<T>) {
        for a in run {
            *a = cmul(f, *a);
        }
    }

    fn scale_interleaved<T: Real>(chunk: &mut [Complex<T>], a: Complex<T>, b: Complex<T>) {
        for pair in chunk.chunks_exact_mut(2) {
            pair[0] = cmul(a, pair[0]);
            pair[1] = cmul(b, pair[1]);
        }
    }

    fn pairs_adjacent<T: Real>(chunk: &mut [Complex<T>], m: &Mat2<T>) {
        for pair in chunk.chunks_exact_mut(2) {
            let (x, y) = (pair[0], pair[1]);
            pair[0] = mul2(m[0][0], x, m[0][1], y);
            pair[1] = mul2(m[1][0], x, m[1][1], y);
        }
    }

    fn pairs_split<T: Real>(lo: &mut [Complex<T>], hi: &mut [Complex<T>], m: &Mat2<T>) {
        for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*l, *h);
            *l = mul2(m[0][0], x, m[0][1], y);
            *h = mul2(m[1][0], x, m[1][1], y);
        }
    }

    fn xswap_adjacent<T: Real>(chunk: &mut [Complex<T>], a: Complex<T>, b: Complex<T>) {
        for pair in chunk.chunks_exact_mut(2) {
            let (x, y) = (pair[0], pair[1]);
            pair[0] = cmul(a, y);
            pair[1] = cmul(b, x);
        }
    }

    fn xswap_split<T: Real>(lo: &mut [Complex<T>], hi: &mut [Complex<T>], a: Complex<T>, b: Complex<T>) {
        for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*l, *h);
            *l = cmul(a, y);
            *h = cmul(b, x);
        }
    }

    fn quad_run<T: Real>(
        r0: &mut [Complex<T>],
        r1: &mut [Complex<T>],
        r2: &mut [Complex<T>],
        r3: &mut [Complex<T>],
        m: &Mat4<T>,
    ) {
        for i in 0..r0.len() {
            let v = [r0[i], r1[i], r2[i], r3[i]];
            let row = |k: usize| {
                let mut acc = cmul(m[k][0], v[0]);
                acc += cmul(m[k][1], v[1]);
                acc += cmul(m[k][2], v[2]);
                acc + cmul(m[k][3], v[3])
            };
            r0[i] = row(0);
            r1[i] = row(1);
            r2[i] = row(2);
            r3[i] = row(3);
        }
    }
}

impl KernelPolicy for Vectorized {
    fn scale_run<T: Real>(run: &mut [Complex<T>], f: Complex<T>) {
        let mut blocks = run.chunks_exact_mut(LANES);
        for block in &mut blocks {
            for a in block.iter_mut() {
                *a = cmul(f, *a);
            }
        }
        for a in blocks.into_remainder() {
            *a = cmul(f, *a);
        }
    }

    fn scale_interleaved<T: Real>(chunk: &mut [Complex<T>], a: Complex<T>, b: Complex<T>) {
        let mut blocks = chunk.chunks_exact_mut(2 * LANES);
        for block in &mut blocks {
            for pair in block.chunks_exact_mut(2) {
                pair[0] = cmul(a, pair[0]);
                pair[1] = cmul(b, pair[1]);
            }
        }
        for pair in blocks.into_remainder().chunks_exact_mut(2) {
            pair[0] = cmul(a, pair[0]);
            pair[1] = cmul(b, pair[1]);
        }
    }

    fn pairs_adjacent<T: Real>(chunk: &mut [Complex<T>], m: &Mat2<T>) {
        let mut blocks = chunk.chunks_exact_mut(2 * LANES);
        for block in &mut blocks {
            for pair in block.chunks_exact_mut(2) {
                let (x, y) = (pair[0], pair[1]);
                pair[0] = mul2(m[0][0], x, m[0][1], y);
                pair[1] = mul2(m[1][0], x, m[1][1], y);
            }
        }
        for pair in blocks.into_remainder().chunks_exact_mut(2) {
            let (x, y) = (pair[0], pair[1]);
            pair[0] = mul2(m[0][0], x, m[0][1], y);
            pair[1] = mul2(m[1][0], x, m[1][1], y);
        }
    }

    fn pairs_split<T: Real>(lo: &mut [Complex<T>], hi: &mut [Complex<T>], m: &Mat2<T>) {
        let n = lo.len();
        let whole = n - n % LANES;
        let (lo_w, lo_r) = lo.split_at_mut(whole);
        let (hi_w, hi_r) = hi.split_at_mut(whole);
        for (lb, hb) in lo_w.chunks_exact_mut(LANES).zip(hi_w.chunks_exact_mut(LANES)) {
            for k in 0..LANES {
                let (x, y) = (lb[k], hb[k]);
                lb[k] = mul2(m[0][0], x, m[0][1], y);
                hb[k] = mul2(m[1][0], x, m[1][1], y);
            }
        }
        for (l, h) in lo_r.iter_mut().zip(hi_r.iter_mut()) {
            let (x, y) = (*l, *h);
            *l = mul2(m[0][0], x, m[0][1], y);
            *h = mul2(m[1][0], x, m[1][1], y);
        }
    }

    fn xswap_adjacent<T: Real>(chunk: &mut [Complex<T>], a: Complex<T>, b: Complex<T>) {
        for pair in chunk.chunks_exact_mut(2) {
            let (x, y) = (pair[0], pair[1]);
            pair[0] = cmul(a, y);
            pair[1] = cmul(b, x);
        }
    }

    fn xswap_split<T: Real>(lo: &mut [Complex<T>], hi: &mut [Complex<T>], a: Complex<T>, b: Complex<T>) {
        let n = lo.len();
        let whole = n - n % LANES;
        let (lo_w, lo_r) = lo.split_at_mut(whole);
        let (hi_w, hi_r) = hi.split_at_mut(whole);
        for (lb, hb) in lo_w.chunks_exact_mut(LANES).zip(hi_w.chunks_exact_mut(LANES)) {
            for k in 0..LANES {
                let (x, y) = (lb[k], hb[k]);
                lb[k] = cmul(a, y);
                hb[k] = cmul(b, x);
            }
        }
        for (l, h) in lo_r.iter_mut().zip(hi_r.iter_mut()) {
            let (x, y) = (*l, *h);
            *l = cmul(a, y);
            *h = cmul(b, x);
        }
    }

    fn quad_run<T: Real>(
        r0: &mut [Complex<T>],
        r1: &mut [Complex<T>],
        r2: &mut [Complex<T>],
        r3: &mut [Complex<T>],
        m: &Mat4<T>,
    ) {
        Scalar::quad_run(r0, r1, r2, r3, m);
    }
}

/// A gate resolved to its kernel shape, matrix entries converted to the
/// target precision, with controls as a bit mask.
#[derive(Debug, Clone)]
pub(crate) struct PlannedGate<T: Real> {
    pub op: KernelOp<T>,
    pub ctrl_mask: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum KernelOp<T: Real> {
    /// diag(a, b) on target t.
    Diag1 { t: usize, a: Complex<T>, b: Complex<T> },
    /// diag over both target bits of a two-qubit Z-like gate; d indexed by
    /// bit(ta) + 2·bit(tb).
    Diag2 { ta: usize, tb: usize, d: [Complex<T>; 4] },
    /// [[0, a], [b, 0]] on target t.
    AntiDiag1 { t: usize, a: Complex<T>, b: Complex<T> },
    Dense1 { t: usize, m: Mat2<T> },
    /// 4×4 on (ta, tb) with ta the low matrix-index bit.
    Dense2 { ta: usize, tb: usize, m: Mat4<T> },
}

impl<T: Real> PlannedGate<T> {
    /// Same gate acting on qubits offset by `by` (density-matrix row side).
    pub(crate) fn shifted(&self, by: usize) -> Self {
        let op = match &self.op {
            KernelOp::Diag1 { t, a, b } => KernelOp::Diag1 {
                t: t + by,
                a: *a,
                b: *b,
            },
            KernelOp::Diag2 { ta, tb, d } => KernelOp::Diag2 {
                ta: ta + by,
                tb: tb + by,
                d: *d,
            },
            KernelOp::AntiDiag1 { t, a, b } => KernelOp::AntiDiag1 {
                t: t + by,
                a: *a,
                b: *b,
            },
            KernelOp::Dense1 { t, m } => KernelOp::Dense1 { t: t + by, m: *m },
            KernelOp::Dense2 { ta, tb, m } => KernelOp::Dense2 {
                ta: ta + by,
                tb: tb + by,
                m: *m,
            },
        };
        PlannedGate {
            op,
            ctrl_mask: self.ctrl_mask << by,
        }
    }

    /// Entry-wise conjugate (density-matrix column side).
    pub(crate) fn conjugated(&self) -> Self {
        let op = match &self.op {
            KernelOp::Diag1 { t, a, b } => KernelOp::Diag1 {
                t: *t,
                a: a.conj(),
                b: b.conj(),
            },
            KernelOp::Diag2 { ta, tb, d } => KernelOp::Diag2 {
                ta: *ta,
                tb: *tb,
                d: std::array::from_fn(|k| d[k].conj()),
            },
            KernelOp::AntiDiag1 { t, a, b } => KernelOp::AntiDiag1 {
                t: *t,
                a: a.conj(),
                b: b.conj(),
            },
            KernelOp::Dense1 { t, m } => KernelOp::Dense1 {
                t: *t,
                m: [
                    [m[0][0].conj(), m[0][1].conj()],
                    [m[1][0].conj(), m[1][1].conj()],
                ],
            },
            KernelOp::Dense2 { ta, tb, m } => KernelOp::Dense2 {
                ta: *ta,
                tb: *tb,
                m: std::array::from_fn(|r| std::array::from_fn(|c| m[r][c].conj())),
            },
        };
        PlannedGate {
            op,
            ctrl_mask: self.ctrl_mask,
        }
    }
}

fn cx_t<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

fn mat2_t<T: Real>(m: &DMatrix) -> Mat2<T> {
    [
        [cx_t(m[(0, 0)]), cx_t(m[(0, 1)])],
        [cx_t(m[(1, 0)]), cx_t(m[(1, 1)])],
    ]
}

fn mat4_t<T: Real>(m: &DMatrix) -> Mat4<T> {
    std::array::from_fn(|r| std::array::from_fn(|c| cx_t(m[(r, c)])))
}

/// Uncontrolled single-qubit plan from a raw (not necessarily unitary) 2×2
/// matrix; Kraus operators take this path.
pub(crate) fn plan_dense1<T: Real>(t: usize, m: &DMatrix) -> PlannedGate<T> {
    PlannedGate {
        op: KernelOp::Dense1 { t, m: mat2_t(m) },
        ctrl_mask: 0,
    }
}

/// Resolve a gate to a kernel plan. Barrier yields None; Measure is not a
/// kernel operation.
pub(crate) fn plan_gate<T: Real>(
    g: &GateInstruction,
    env: &Bindings,
) -> Result<Option<PlannedGate<T>>> {
    match g.kind {
        GateKind::Barrier => return Ok(None),
        GateKind::Measure => return Err(Error::MidCircuitMeasure),
        _ => {}
    }
    let m = gate_matrix(g, env)?;
    let ctrl_mask = g.controls.iter().fold(0usize, |acc, &c| acc | (1 << c));
    let t = g.targets[0];
    let op = match g.kind.class().expect("unitary kinds are classified") {
        GateClass::ZLike => {
            if m.rows() == 2 {
                KernelOp::Diag1 {
                    t,
                    a: cx_t(m[(0, 0)]),
                    b: cx_t(m[(1, 1)]),
                }
            } else {
                KernelOp::Diag2 {
                    ta: t,
                    tb: g.targets[1],
                    d: std::array::from_fn(|k| cx_t(m[(k, k)])),
                }
            }
        }
        GateClass::XLike => KernelOp::AntiDiag1 {
            t,
            a: cx_t(m[(0, 1)]),
            b: cx_t(m[(1, 0)]),
        },
        GateClass::General => {
            if m.rows() == 2 {
                KernelOp::Dense1 { t, m: mat2_t(&m) }
            } else {
                KernelOp::Dense2 {
                    ta: t,
                    tb: g.targets[1],
                    m: mat4_t(&m),
                }
            }
        }
    };
    Ok(Some(PlannedGate { op, ctrl_mask }))
}

/// Shared amplitude pointer for scoped worker threads. Soundness rests on
/// the run enumeration: distinct runs touch disjoint index sets, and workers
/// receive disjoint run ranges.
struct SharedAmps<T>(*mut Complex<T>);

unsafe impl<T: Send> Sync for SharedAmps<T> {}

/// Aligned-run enumeration: indices i with i & mask == 0 come in maximal
/// contiguous runs; `start(r)` scatters r over the free bit positions,
/// `next` advances by carry-propagation through the mask.
struct RunSpace {
    mask: usize,
    fixed: usize,
    free_pos: Vec<u32>,
}

impl RunSpace {
    fn new(n: usize, mask: usize, fixed: usize) -> Self {
        let free_pos: Vec<u32> = (0..n as u32).filter(|&b| mask & (1 << b) == 0).collect();
        RunSpace {
            mask,
            fixed,
            free_pos,
        }
    }

    fn n_runs(&self) -> usize {
        1usize << self.free_pos.len()
    }

    fn start(&self, r: usize) -> usize {
        let mut x = 0usize;
        for (j, &p) in self.free_pos.iter().enumerate() {
            if r & (1 << j) != 0 {
                x |= 1 << p;
            }
        }
        x
    }
}

/// Drive `body` over every run start, fanning out to `workers` scoped
/// threads on disjoint run ranges. `body` must touch only indices derived
/// from its run start, so cross-worker writes never alias.
fn drive<T: Real>(
    amps: &mut [Complex<T>],
    space: &RunSpace,
    workers: usize,
    body: impl Fn(&SharedAmps<T>, usize) + Sync,
) {
    let total = space.n_runs();
    let shared = SharedAmps(amps.as_mut_ptr());
    let w = workers.clamp(1, total);
    if w == 1 {
        let mut x = 0usize;
        for _ in 0..total {
            body(&shared, x | space.fixed);
            x = ((x | space.mask) + 1) & !space.mask;
        }
        return;
    }
    std::thread::scope(|s| {
        for wi in 0..w {
            let r0 = total * wi / w;
            let r1 = total * (wi + 1) / w;
            let shared = &shared;
            let body = &body;
            s.spawn(move || {
                let mut x = space.start(r0);
                for _ in r0..r1 {
                    body(shared, x | space.fixed);
                    x = ((x | space.mask) + 1) & !space.mask;
                }
            });
        }
    });
}

/// Mutable view of `len` amplitudes starting at `start`.
///
/// Safety: caller guarantees [start, start+len) is in bounds and disjoint
/// from every other live view.
unsafe fn run_slice<'a, T: Real>(
    shared: &SharedAmps<T>,
    start: usize,
    len: usize,
) -> &'a mut [Complex<T>] {
    unsafe { std::slice::from_raw_parts_mut(shared.0.add(start), len) }
}

/// Apply a planned gate in place. `n` is the qubit count; `workers` > 1
/// splits the run space across scoped threads.
pub(crate) fn apply_kernel<T: Real, P: KernelPolicy>(
    amps: &mut [Complex<T>],
    n: usize,
    g: &PlannedGate<T>,
    workers: usize,
) {
    debug_assert_eq!(amps.len(), 1usize << n);
    let ctrl = g.ctrl_mask;
    match &g.op {
        KernelOp::Diag1 { t, a, b } => {
            let special = ctrl | (1 << t);
            if *t == 0 {
                let (chunk, mask) = adjacent_chunk(n, special);
                let space = RunSpace::new(n, mask, ctrl);
                drive(amps, &space, workers, |sh, x| unsafe {
                    P::scale_interleaved(run_slice(sh, x, chunk), *a, *b);
                });
            } else {
                let run = 1usize << special.trailing_zeros();
                let space = RunSpace::new(n, special | (run - 1), ctrl);
                let stride = 1usize << t;
                drive(amps, &space, workers, |sh, x| unsafe {
                    P::scale_run(run_slice(sh, x, run), *a);
                    P::scale_run(run_slice(sh, x + stride, run), *b);
                });
            }
        }
        KernelOp::Diag2 { ta, tb, d } => {
            let special = ctrl | (1 << ta) | (1 << tb);
            let run = 1usize << special.trailing_zeros();
            let space = RunSpace::new(n, special | (run - 1), ctrl);
            let (sa, sb) = (1usize << ta, 1usize << tb);
            drive(amps, &space, workers, |sh, x| unsafe {
                P::scale_run(run_slice(sh, x, run), d[0]);
                P::scale_run(run_slice(sh, x + sa, run), d[1]);
                P::scale_run(run_slice(sh, x + sb, run), d[2]);
                P::scale_run(run_slice(sh, x + sa + sb, run), d[3]);
            });
        }
        KernelOp::AntiDiag1 { t, a, b } => {
            let special = ctrl | (1 << t);
            if *t == 0 {
                let (chunk, mask) = adjacent_chunk(n, special);
                let space = RunSpace::new(n, mask, ctrl);
                drive(amps, &space, workers, |sh, x| unsafe {
                    P::xswap_adjacent(run_slice(sh, x, chunk), *a, *b);
                });
            } else {
                let run = 1usize << special.trailing_zeros();
                let space = RunSpace::new(n, special | (run - 1), ctrl);
                let stride = 1usize << t;
                drive(amps, &space, workers, |sh, x| unsafe {
                    P::xswap_split(
                        run_slice(sh, x, run),
                        run_slice(sh, x + stride, run),
                        *a,
                        *b,
                    );
                });
            }
        }
        KernelOp::Dense1 { t, m } => {
            let special = ctrl | (1 << t);
            if *t == 0 {
                let (chunk, mask) = adjacent_chunk(n, special);
                let space = RunSpace::new(n, mask, ctrl);
                drive(amps, &space, workers, |sh, x| unsafe {
                    P::pairs_adjacent(run_slice(sh, x, chunk), m);
                });
            } else {
                let run = 1usize << special.trailing_zeros();
                let space = RunSpace::new(n, special | (run - 1), ctrl);
                let stride = 1usize << t;
                drive(amps, &space, workers, |sh, x| unsafe {
                    P::pairs_split(run_slice(sh, x, run), run_slice(sh, x + stride, run), m);
                });
            }
        }
        KernelOp::Dense2 { ta, tb, m } => {
            let special = ctrl | (1 << ta) | (1 << tb);
            let run = 1usize << special.trailing_zeros();
            let space = RunSpace::new(n, special | (run - 1), ctrl);
            let (sa, sb) = (1usize << ta, 1usize << tb);
            drive(amps, &space, workers, |sh, x| unsafe {
                P::quad_run(
                    run_slice(sh, x, run),
                    run_slice(sh, x + sa, run),
                    run_slice(sh, x + sb, run),
                    run_slice(sh, x + sa + sb, run),
                    m,
                );
            });
        }
    }
}

/// For a target at qubit 0: contiguous chunks of interleaved pairs extend up
/// to the next special bit (or the full register). Returns (chunk length in
/// amplitudes, enumeration mask).
fn adjacent_chunk(n: usize, special: usize) -> (usize, usize) {
    let rest = special & !1usize;
    let p1 = if rest == 0 {
        n
    } else {
        rest.trailing_zeros() as usize
    };
    let chunk = 1usize << p1;
    (chunk, special | (chunk - 1))
}
