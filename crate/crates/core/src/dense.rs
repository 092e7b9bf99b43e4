//! Small dense complex matrices.
//!
//! Reference implementation used by the operator module (Pauli-sum matrices),
//! the compiler (decomposition verification), and by tests as an independent
//! oracle against the specialized kernels. Everything here is plain
//! O(n^2)/O(n^3) arithmetic over `Complex<f64>`; performance does not matter
//! at the sizes involved (a few qubits).

use num_complex::Complex;

type C = Complex<f64>;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl DMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(1.0, 0.0);
        }
        m
    }

    /// Build from a row-major slice of entries.
    pub fn from_rows(rows: usize, cols: usize, data: &[C]) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Self {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    /// 2x2 matrix from four entries in reading order.
    pub fn two_by_two(a: C, b: C, c: C, d: C) -> Self {
        Self::from_rows(2, 2, &[a, b, c, d])
    }

    /// Haar-ish random unitary: random entries orthonormalized column by
    /// column (modified Gram-Schmidt).
    pub fn random_unitary(n: usize, rng: &mut impl rand::Rng) -> Self {
        let mut cols: Vec<Vec<C>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        for j in 0..n {
            for k in 0..j {
                let proj: C = cols[k]
                    .iter()
                    .zip(&cols[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let basis = cols[k].clone();
                for (x, prev) in cols[j].iter_mut().zip(&basis) {
                    *x -= proj * prev;
                }
            }
            let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut cols[j] {
                *z /= norm;
            }
        }
        let mut m = Self::zeros(n, n);
        for (j, col) in cols.iter().enumerate() {
            for (i, &z) in col.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C] {
        &self.data
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Entrywise conjugate.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Kronecker product `self ⊗ rhs`.
    ///
    /// Index convention: in `A ⊗ B`, the `B` factor addresses the
    /// low-order bits of the joint index.
    pub fn kron(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Sum of entrywise products with the conjugate, i.e. tr(self† rhs).
    pub fn inner(&self, rhs: &Self) -> C {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, k: C) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(C::new(-1.0, 0.0)))
    }

    pub fn trace(&self) -> C {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from unitarity: max entry of |U†U - I|.
    pub fn unitarity_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.rows))
    }

    /// True when `self = e^{iφ} rhs` for some phase, within `tol`.
    ///
    /// The phase is read off the largest-magnitude entry of `rhs`, so the
    /// comparison is stable even when some entries are zero.
    pub fn approx_eq_up_to_phase(&self, rhs: &Self, tol: f64) -> bool {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let pivot = (0..self.data.len()).max_by(|&a, &b| {
            rhs.data[a]
                .norm()
                .partial_cmp(&rhs.data[b].norm())
                .unwrap()
        });
        let Some(k) = pivot else { return true };
        if rhs.data[k].norm() < tol {
            return self.data.iter().all(|z| z.norm() < tol);
        }
        let phase = self.data[k] / rhs.data[k];
        if (phase.norm() - 1.0).abs() > tol {
            return false;
        }
        self.max_abs_diff(&rhs.scale(phase)) <= tol
    }
}

impl std::ops::Index<(usize, usize)> for DMatrix {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.cols + j]
    }
}

/// Expand a k-qubit operator on the given qubits to the full n-qubit matrix.
///
/// `qubits[0]` addresses the least-significant bit of the operator's own
/// index space, matching the gate matrix convention. Basis index bit `q` of
/// the full space is qubit `q`.
pub fn embed(op: &DMatrix, qubits: &[usize], n_qubits: usize) -> DMatrix {
    let k = qubits.len();
    assert_eq!(op.rows(), 1 << k, "operator size mismatch");
    let dim = 1usize << n_qubits;
    let mut out = DMatrix::zeros(dim, dim);
    for row in 0..dim {
        // Extract the operator-space row bits from the full row index.
        let mut op_row = 0usize;
        for (pos, &q) in qubits.iter().enumerate() {
            op_row |= ((row >> q) & 1) << pos;
        }
        let rest = {
            let mut mask = row;
            for &q in qubits {
                mask &= !(1 << q);
            }
            mask
        };
        for op_col in 0..(1 << k) {
            let entry = op[(op_row, op_col)];
            if entry == C::new(0.0, 0.0) {
                continue;
            }
            let mut col = rest;
            for (pos, &q) in qubits.iter().enumerate() {
                col |= ((op_col >> pos) & 1) << q;
            }
            out[(row, col)] = entry;
        }
    }
    out
}

/// Add control qubits to a unitary: identity unless every control bit is 1.
pub fn controlled(op: &DMatrix, n_controls: usize) -> DMatrix {
    let small = op.rows();
    let dim = small << n_controls;
    let mut out = DMatrix::identity(dim);
    // Controls occupy the high-order index bits; the active block is the
    // trailing `small x small` corner.
    let offset = dim - small;
    for i in 0..small {
        for j in 0..small {
            out[(offset + i, offset + j)] = op[(i, j)];
        }
    }
    out
}
