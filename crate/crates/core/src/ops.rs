//! Pauli and fermionic operator algebra.
//!
//! [`PauliSum`] is the observable/Hamiltonian representation: a weighted sum
//! of [`PauliString`]s whose coefficients are complex constants or real
//! [`ParameterExpression`]s. Engines require bound (constant) coefficients
//! and gate-keep on hermiticity.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dense::DMatrix;
use crate::error::{Error, Result};
use crate::expr::{Bindings, ParameterExpression};
use crate::precision::Real;

type C = Complex<f64>;

const ZERO: C = Complex::new(0.0, 0.0);
const ONE: C = Complex::new(1.0, 0.0);
const I: C = Complex::new(0.0, 1.0);

/// Single-qubit Pauli factor; identity is represented by absence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> DMatrix {
        match self {
            Pauli::X => DMatrix::two_by_two(ZERO, ONE, ONE, ZERO),
            Pauli::Y => DMatrix::two_by_two(ZERO, -I, I, ZERO),
            Pauli::Z => DMatrix::two_by_two(ONE, ZERO, ZERO, -ONE),
        }
    }
}

/// Single-qubit product a·b = phase · result (None = identity).
/// XY = iZ and cyclic permutations; reversed order conjugates the phase.
fn pauli_product(a: Pauli, b: Pauli) -> (C, Option<Pauli>) {
    use Pauli::*;
    match (a, b) {
        (x, y) if x == y => (ONE, None),
        (X, Y) => (I, Some(Z)),
        (Y, Z) => (I, Some(X)),
        (Z, X) => (I, Some(Y)),
        (Y, X) => (-I, Some(Z)),
        (Z, Y) => (-I, Some(X)),
        (X, Z) => (-I, Some(Y)),
        _ => unreachable!(),
    }
}

/// Tensor product of Pauli factors over a subset of qubits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliString {
    factors: BTreeMap<usize, Pauli>,
}

impl PauliString {
    /// The identity string.
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(qubit, p);
        PauliString { factors }
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        PauliString {
            factors: factors.into_iter().collect(),
        }
    }

    /// Parse "X0 Y1" (letter immediately followed by index, space-separated,
    /// case-insensitive letters). "I" or the empty string is the identity.
    pub fn parse(text: &str) -> Result<Self> {
        let mut factors = BTreeMap::new();
        for token in text.split_whitespace() {
            if token.eq_ignore_ascii_case("i") {
                continue;
            }
            let mut chars = token.chars();
            let letter = chars.next().expect("token is non-empty");
            let p = match letter.to_ascii_uppercase() {
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::invalid(
                        "pauli string",
                        format!("unknown factor `{other}` in `{token}`"),
                    ));
                }
            };
            let index: usize = chars.as_str().parse().map_err(|_| {
                Error::invalid("pauli string", format!("bad qubit index in `{token}`"))
            })?;
            if factors.insert(index, p).is_some() {
                return Err(Error::invalid(
                    "pauli string",
                    format!("qubit {index} appears twice"),
                ));
            }
        }
        Ok(PauliString { factors })
    }

    pub fn factors(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.factors.iter().map(|(&q, &p)| (q, p))
    }

    pub fn factor(&self, qubit: usize) -> Option<Pauli> {
        self.factors.get(&qubit).copied()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    /// True when every factor is Z (diagonal string).
    pub fn all_z(&self) -> bool {
        self.factors.values().all(|&p| p == Pauli::Z)
    }

    /// Product with phase: self·rhs = phase · string.
    pub fn mul(&self, rhs: &PauliString) -> (C, PauliString) {
        let mut phase = ONE;
        let mut factors = self.factors.clone();
        for (&q, &b) in &rhs.factors {
            match factors.remove(&q) {
                None => {
                    factors.insert(q, b);
                }
                Some(a) => {
                    let (ph, p) = pauli_product(a, b);
                    phase *= ph;
                    if let Some(p) = p {
                        factors.insert(q, p);
                    }
                }
            }
        }
        (phase, PauliString { factors })
    }

    /// Bit masks over factor positions: `xmask` marks X and Y factors (the
    /// basis-flip mask), `ymask` marks Y factors, `zmask` marks Z factors.
    pub fn masks(&self) -> (usize, usize, usize) {
        let (mut x, mut y, mut z) = (0usize, 0usize, 0usize);
        for (&q, &p) in &self.factors {
            let bit = 1usize << q;
            match p {
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    y |= bit;
                }
                Pauli::Z => z |= bit,
            }
        }
        (x, y, z)
    }

    /// Dense matrix on `n_qubits` qubits, qubit 0 least significant.
    pub fn to_dense(&self, n_qubits: usize) -> DMatrix {
        let mut m = DMatrix::identity(1);
        for q in (0..n_qubits).rev() {
            let f = match self.factors.get(&q) {
                Some(p) => p.matrix(),
                None => DMatrix::identity(2),
            };
            m = m.kron(&f);
        }
        m
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("I");
        }
        let mut first = true;
        for (&q, &p) in &self.factors {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", p.letter(), q)?;
            first = false;
        }
        Ok(())
    }
}

/// A term coefficient: real part is a linear expression (possibly constant),
/// imaginary part a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Coeff {
    pub re: ParameterExpression,
    pub im: f64,
}

impl Coeff {
    pub fn complex(c: C) -> Self {
        Coeff {
            re: ParameterExpression::constant(c.re),
            im: c.im,
        }
    }

    pub fn is_parameterized(&self) -> bool {
        !self.re.is_constant()
    }

    pub fn is_zero(&self) -> bool {
        !self.is_parameterized() && self.re.constant_part() == 0.0 && self.im == 0.0
    }

    /// The constant complex value, None when parameterized.
    pub fn as_complex(&self) -> Option<C> {
        if self.is_parameterized() {
            None
        } else {
            Some(C::new(self.re.constant_part(), self.im))
        }
    }

    pub fn bind(&self, env: &Bindings) -> Result<C> {
        Ok(C::new(self.re.eval(env)?, self.im))
    }

    fn add(&self, rhs: &Coeff) -> Coeff {
        Coeff {
            re: self.re.add(&rhs.re),
            im: self.im + rhs.im,
        }
    }

    /// Multiply by a complex constant. A parameterized coefficient only
    /// admits real scalars (an imaginary factor would need a parameterized
    /// imaginary part).
    fn mul_complex(&self, k: C) -> Result<Coeff> {
        if self.is_parameterized() {
            if k.im != 0.0 {
                return Err(Error::invalid(
                    "coefficient scale",
                    "cannot scale a parameterized coefficient by a non-real factor",
                ));
            }
            return Ok(Coeff {
                re: self.re.scale(k.re)?,
                im: self.im * k.re,
            });
        }
        let v = self.as_complex().expect("constant coefficient") * k;
        Ok(Coeff::complex(v))
    }
}

impl From<f64> for Coeff {
    fn from(x: f64) -> Self {
        Coeff::complex(C::new(x, 0.0))
    }
}

impl From<C> for Coeff {
    fn from(c: C) -> Self {
        Coeff::complex(c)
    }
}

impl From<ParameterExpression> for Coeff {
    fn from(e: ParameterExpression) -> Self {
        Coeff { re: e, im: 0.0 }
    }
}

/// Weighted sum of Pauli strings; zero-coefficient terms are pruned.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliSum {
    terms: BTreeMap<PauliString, Coeff>,
}

impl PauliSum {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Single-term sum.
    pub fn term(s: PauliString, coeff: impl Into<Coeff>) -> Self {
        let mut sum = Self::zero();
        sum.add_term(s, coeff);
        sum
    }

    pub fn identity_times(coeff: impl Into<Coeff>) -> Self {
        Self::term(PauliString::identity(), coeff)
    }

    /// Parse a single string with coefficient 1, e.g. "X0 Y1".
    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self::term(PauliString::parse(text)?, 1.0))
    }

    pub fn add_term(&mut self, s: PauliString, coeff: impl Into<Coeff>) {
        let coeff = coeff.into();
        let merged = match self.terms.remove(&s) {
            Some(existing) => existing.add(&coeff),
            None => coeff,
        };
        if !merged.is_zero() {
            self.terms.insert(s, merged);
        }
    }

    pub fn from_terms(
        terms: impl IntoIterator<Item = (PauliString, Coeff)>,
    ) -> Self {
        let mut sum = Self::zero();
        for (s, c) in terms {
            sum.add_term(s, c);
        }
        sum
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Coeff)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.terms.keys().filter_map(|s| s.max_qubit()).max()
    }

    /// True when every string uses only Z factors (diagonal observable).
    pub fn all_z(&self) -> bool {
        self.terms.keys().all(|s| s.all_z())
    }

    pub fn is_parameterized(&self) -> bool {
        self.terms.values().any(|c| c.is_parameterized())
    }

    pub fn add(&self, rhs: &PauliSum) -> PauliSum {
        let mut out = self.clone();
        for (s, c) in &rhs.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, k: C) -> Result<PauliSum> {
        let mut out = PauliSum::zero();
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.mul_complex(k)?);
        }
        Ok(out)
    }

    /// Distributed product over terms. Both operands must have constant
    /// coefficients (products of parameters are not representable).
    pub fn mul(&self, rhs: &PauliSum) -> Result<PauliSum> {
        if self.is_parameterized() || rhs.is_parameterized() {
            return Err(Error::ParameterizedProduct);
        }
        let mut out = PauliSum::zero();
        for (sa, ca) in &self.terms {
            let ca = ca.as_complex().expect("constant coefficient");
            for (sb, cb) in &rhs.terms {
                let cb = cb.as_complex().expect("constant coefficient");
                let (phase, s) = sa.mul(sb);
                out.add_term(s, ca * cb * phase);
            }
        }
        Ok(out)
    }

    /// Evaluate all coefficients under `env`.
    pub fn bind(&self, env: &Bindings) -> Result<PauliSum> {
        let mut out = PauliSum::zero();
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.bind(env)?);
        }
        Ok(out)
    }

    /// Terms with constant complex coefficients, erroring when parameterized.
    pub fn bound_terms(&self) -> Result<Vec<(&PauliString, C)>> {
        self.terms
            .iter()
            .map(|(s, c)| {
                c.as_complex()
                    .map(|v| (s, v))
                    .ok_or(Error::UnboundCoefficient)
            })
            .collect()
    }

    /// Hermiticity gate: bound and all coefficients real within 1e-10.
    pub fn check_hermitian(&self) -> Result<()> {
        for (_, c) in self.bound_terms()? {
            if c.im.abs() > 1e-10 {
                return Err(Error::NonHermitian);
            }
        }
        Ok(())
    }

    /// Dense matrix on `n_qubits` qubits.
    pub fn to_dense(&self, n_qubits: usize) -> Result<DMatrix> {
        let dim = 1usize << n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (s, c) in self.bound_terms()? {
            if s.max_qubit().is_some_and(|q| q >= n_qubits) {
                return Err(Error::IndexOutOfRange {
                    index: s.max_qubit().unwrap(),
                    n_qubits,
                });
            }
            m = m.add(&s.to_dense(n_qubits).scale(c));
        }
        Ok(m)
    }

    pub fn to_ham_json(&self) -> Result<String> {
        let entries: Vec<HamTermJson> = self
            .bound_terms()?
            .into_iter()
            .map(|(s, c)| HamTermJson {
                pauli: s.to_string(),
                coeff_re: c.re,
                coeff_im: c.im,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&entries).expect("serialization is infallible"))
    }

    pub fn from_ham_json(text: &str) -> Result<PauliSum> {
        let entries: Vec<HamTermJson> = serde_json::from_str(text)
            .map_err(|e| Error::invalid("hamiltonian JSON", e.to_string()))?;
        let mut sum = PauliSum::zero();
        for e in entries {
            sum.add_term(PauliString::parse(&e.pauli)?, C::new(e.coeff_re, e.coeff_im));
        }
        Ok(sum)
    }
}

impl std::fmt::Display for PauliSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (s, c) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            match c.as_complex() {
                Some(v) if v.im == 0.0 => write!(f, "{} [{}]", v.re, s)?,
                Some(v) => write!(f, "({}{:+}i) [{}]", v.re, v.im, s)?,
                None => write!(f, "({}) [{}]", c.re, s)?,
            }
            first = false;
        }
        Ok(())
    }
}

/// Hamiltonian file entry: {"pauli": "X0 Y1", "coeff_re": 1.0, "coeff_im": 0.0}.
#[derive(Serialize, Deserialize)]
struct HamTermJson {
    pauli: String,
    coeff_re: f64,
    #[serde(default)]
    coeff_im: f64,
}

/// One fermionic ladder operator: a_index or a†_index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FermionOp {
    pub index: usize,
    pub dagger: bool,
}

impl FermionOp {
    pub fn lower(index: usize) -> Self {
        FermionOp {
            index,
            dagger: false,
        }
    }

    pub fn raise(index: usize) -> Self {
        FermionOp {
            index,
            dagger: true,
        }
    }
}

/// Sum of ordered products of ladder operators with complex coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FermionSum {
    terms: BTreeMap<Vec<FermionOp>, C>,
}

impl FermionSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(ops: impl Into<Vec<FermionOp>>, coeff: C) -> Self {
        let mut sum = Self::zero();
        sum.add_term(ops.into(), coeff);
        sum
    }

    pub fn add_term(&mut self, ops: Vec<FermionOp>, coeff: C) {
        let merged = self.terms.remove(&ops).unwrap_or(ZERO) + coeff;
        if merged != ZERO {
            self.terms.insert(ops, merged);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<FermionOp>, C)> {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    pub fn add(&self, rhs: &FermionSum) -> FermionSum {
        let mut out = self.clone();
        for (ops, c) in rhs.terms() {
            out.add_term(ops.clone(), c);
        }
        out
    }
}

/// Jordan–Wigner transform: a_p → (X_p + iY_p)/2 ⊗ Z-string on qubits < p,
/// a†_p → (X_p − iY_p)/2 ⊗ the same Z-string; mode p maps to qubit p.
pub fn jordan_wigner(f: &FermionSum) -> PauliSum {
    let mut out = PauliSum::zero();
    for (ops, coeff) in f.terms() {
        let mut term = PauliSum::identity_times(coeff);
        for op in ops {
            term = term
                .mul(&jw_ladder(op))
                .expect("bound coefficients by construction");
        }
        out = out.add(&term);
    }
    out
}

fn jw_ladder(op: &FermionOp) -> PauliSum {
    let p = op.index;
    let with_tail = |head: Pauli| {
        PauliString::from_factors(
            (0..p)
                .map(|q| (q, Pauli::Z))
                .chain(std::iter::once((p, head))),
        )
    };
    let iy = if op.dagger { -I } else { I };
    let mut sum = PauliSum::term(with_tail(Pauli::X), C::new(0.5, 0.0));
    sum.add_term(with_tail(Pauli::Y), iy * 0.5);
    sum
}

/// Phase c(i) such that (P|ψ⟩)ᵢ = c(i)·ψ_{i⊕xmask} for a Pauli string with
/// the given masks and `ny` Y factors: each Y contributes i when its bit of
/// `i` is 1, else −i; each Z contributes (−1)^bit.
pub fn string_phase<T: Real>(i: usize, ymask: usize, zmask: usize, ny: u32) -> Complex<T> {
    let yexp = 2 * (i & ymask).count_ones() as i64 - ny as i64;
    let zexp = 2 * ((i & zmask).count_ones() as i64 & 1);
    let one = T::one();
    let zero = T::zero();
    match (yexp + zexp).rem_euclid(4) {
        0 => Complex::new(one, zero),
        1 => Complex::new(zero, one),
        2 => Complex::new(-one, zero),
        _ => Complex::new(zero, -one),
    }
}

/// In-place |ψ⟩ ← P|ψ⟩ for a Pauli string over amplitude storage.
pub fn apply_string_amps<T: Real>(amps: &mut [Complex<T>], s: &PauliString) {
    let (xmask, ymask, zmask) = s.masks();
    let ny = (ymask as u64).count_ones();
    if xmask == 0 {
        if zmask == 0 {
            return;
        }
        for (i, a) in amps.iter_mut().enumerate() {
            if (i & zmask).count_ones() & 1 == 1 {
                *a = -*a;
            }
        }
        return;
    }
    // Visit each flip pair once via the highest xmask bit.
    let hi = 1usize << (usize::BITS - 1 - xmask.leading_zeros());
    for i in 0..amps.len() {
        if i & hi != 0 {
            continue;
        }
        let j = i ^ xmask;
        let ci = string_phase::<T>(i, ymask, zmask, ny);
        let cj = string_phase::<T>(j, ymask, zmask, ny);
        let (ai, aj) = (amps[i], amps[j]);
        amps[i] = ci * aj;
        amps[j] = cj * ai;
    }
}

/// ⟨ψ|H|ψ⟩ via the dense matrix route, the reference oracle for the
/// engine-internal expectation paths. `amps` must have power-of-two length;
/// qubit 0 is the least significant index bit.
pub fn expectation_dense<T: Real>(h: &PauliSum, amps: &[Complex<T>]) -> Result<f64> {
    if !amps.len().is_power_of_two() {
        return Err(Error::invalid(
            "state",
            "amplitude count is not a power of two",
        ));
    }
    let n = amps.len().trailing_zeros() as usize;
    h.check_hermitian()?;
    if let Some(q) = h.max_qubit() {
        if q >= n {
            return Err(Error::IndexOutOfRange {
                index: q,
                n_qubits: n,
            });
        }
    }
    let v: Vec<C> = amps
        .iter()
        .map(|z| C::new(z.re.to_f64(), z.im.to_f64()))
        .collect();
    let hv = h.to_dense(n)?.matvec(&v);
    let e: C = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
    if e.im.abs() > 1e-10 {
        return Err(Error::NonHermitian);
    }
    Ok(e.re)
}
