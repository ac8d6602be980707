//! Pauli strings in symplectic form and their action on dense matrices.
//!
//! Qubit 1 is the leftmost tensor factor, i.e. the most significant bit of a
//! computational-basis index.

use num_complex::Complex64;

use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::phase::Phase;

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Lexicographic order used by every Pauli-indexed matrix: I, X, Y, Z.
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(k: usize) -> Pauli {
        Self::ALL[k & 3]
    }
}

/// `phase · X^x Z^z`, with the X factor to the left of the Z factor on every qubit.
///
/// Bit `n - q` of `x`/`z` refers to qubit `q` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub n: usize,
    pub x: u64,
    pub z: u64,
    pub phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, x: 0, z: 0, phase: Phase::ONE }
    }

    fn bit(n: usize, qubit: usize) -> u64 {
        1u64 << (n - qubit)
    }

    /// A single Pauli acting on `qubit` (1-based).
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<Self> {
        if qubit == 0 || qubit > n {
            return Err(Error::IndexOutOfRange { index: qubit, max: n });
        }
        let mut s = Self::identity(n);
        s.set(qubit, p);
        Ok(s)
    }

    fn set(&mut self, qubit: usize, p: Pauli) {
        let b = Self::bit(self.n, qubit);
        match p {
            Pauli::I => {}
            Pauli::X => self.x |= b,
            Pauli::Z => self.z |= b,
            Pauli::Y => {
                // Y = i X Z
                self.x |= b;
                self.z |= b;
                self.phase = self.phase * Phase::I;
            }
        }
    }

    /// Build from labels, `labels[0]` acting on qubit 1.
    pub fn from_labels(labels: &[Pauli]) -> Self {
        let mut s = Self::identity(labels.len());
        for (q, &p) in labels.iter().enumerate() {
            s.set(q + 1, p);
        }
        s
    }

    /// The `index`-th string of `{I,X,Y,Z}^n` in lexicographic order (qubit 1 most significant).
    pub fn from_lex_index(n: usize, index: usize) -> Self {
        let labels: Vec<Pauli> = (0..n).map(|q| Pauli::from_index(index >> (2 * (n - 1 - q)))).collect();
        Self::from_labels(&labels)
    }

    /// Pad on the right with identities up to `n_total` qubits.
    pub fn extend(&self, n_total: usize) -> Self {
        let shift = n_total - self.n;
        PauliString { n: n_total, x: self.x << shift, z: self.z << shift, phase: self.phase }
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        debug_assert_eq!(self.n, other.n);
        // Z^{z1} X^{x2} = (-1)^{|z1 & x2|} X^{x2} Z^{z1}
        let swaps = (self.z & other.x).count_ones();
        PauliString {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: self.phase * other.phase * Phase::from_exponent(2 * swaps),
        }
    }

    /// Row index and value of the single nonzero entry in column `col`.
    #[inline]
    pub fn column_entry(&self, col: usize) -> (usize, Complex64) {
        let sign = (self.z & col as u64).count_ones() & 1 == 1;
        let value = (self.phase * Phase::sign(sign)).to_complex();
        (col ^ self.x as usize, value)
    }

    pub fn to_matrix(&self) -> CMatrix {
        let d = 1usize << self.n;
        let mut m = CMatrix::zeros(d, d);
        for col in 0..d {
            let (row, v) = self.column_entry(col);
            m[(row, col)] = v;
        }
        m
    }

    /// `a · P` in O(d²).
    pub fn right_mul(&self, a: &CMatrix) -> CMatrix {
        let d = a.ncols();
        let mut out = CMatrix::zeros(a.nrows(), d);
        for col in 0..d {
            let (k, v) = self.column_entry(col);
            for r in 0..a.nrows() {
                out[(r, col)] = a[(r, k)] * v;
            }
        }
        out
    }

    /// `P · a` in O(d²).
    pub fn left_mul(&self, a: &CMatrix) -> CMatrix {
        let d = a.nrows();
        let mut out = CMatrix::zeros(d, a.ncols());
        for k in 0..d {
            let (row, v) = self.column_entry(k);
            for c in 0..a.ncols() {
                out[(row, c)] = v * a[(k, c)];
            }
        }
        out
    }

    /// Does this string act nontrivially only on the given qubits?
    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }
}
