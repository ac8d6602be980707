//! Dense `2^n`-dimensional simulation.

use std::ops::{Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::choi::ChoiMatrix;
use crate::error::{Error, Result};
use crate::majorana::{hermitize, jw_pauli, StringKey};
use crate::pauli::PauliString;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Default qubit cap for dense operators.
pub const DEFAULT_DENSE_CAP: usize = 10;
/// Environment variable overriding [`DEFAULT_DENSE_CAP`].
pub const DENSE_CAP_ENV: &str = "FERROLEARN_DENSE_CAP";
/// Qubit cap for Choi matrices of full unitaries (side `4^n`).
pub const CHOI_CAP: usize = 6;

pub fn dense_cap() -> usize {
    std::env::var(DENSE_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_DENSE_CAP)
}

pub fn check_dense_cap(n: usize) -> Result<()> {
    let cap = dense_cap();
    if n > cap {
        return Err(Error::DenseCap { requested: n, cap });
    }
    Ok(())
}

pub fn check_choi_cap(n: usize) -> Result<()> {
    let cap = CHOI_CAP.min(dense_cap());
    if n > cap {
        return Err(Error::DenseCap { requested: n, cap });
    }
    Ok(())
}

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A `2^n × 2^n` complex matrix tagged with its qubit count.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    n_qubits: usize,
    data: CMatrix,
}

impl DenseOperator {
    pub fn new(n_qubits: usize, data: CMatrix) -> Result<Self> {
        let d = 1usize << n_qubits;
        if data.nrows() != d || data.ncols() != d {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for {n_qubits} qubits (expected side {d})",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(DenseOperator { n_qubits, data })
    }

    /// Infer the qubit count from a square power-of-two matrix.
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        let d = data.nrows();
        if d == 0 || !d.is_power_of_two() {
            return Err(Error::Dimension(format!("side {d} is not a power of two")));
        }
        Self::new(d.trailing_zeros() as usize, data)
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        DenseOperator { n_qubits, data: CMatrix::identity(d, d) }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        DenseOperator { n_qubits, data: CMatrix::zeros(d, d) }
    }

    pub fn from_pauli(p: &PauliString) -> Self {
        DenseOperator { n_qubits: p.n, data: p.to_matrix() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator { n_qubits: self.n_qubits, data: self.data.adjoint() }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        DenseOperator { n_qubits: self.n_qubits, data: &self.data * s }
    }

    pub fn add(&self, other: &DenseOperator) -> Self {
        DenseOperator { n_qubits: self.n_qubits, data: &self.data + &other.data }
    }

    /// `self ⊗ other`, `self` on the leading qubits.
    pub fn kron(&self, other: &DenseOperator) -> Self {
        DenseOperator { n_qubits: self.n_qubits + other.n_qubits, data: self.data.kronecker(&other.data) }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn commutator(&self, other: &DenseOperator) -> Self {
        DenseOperator { n_qubits: self.n_qubits, data: &self.data * &other.data - &other.data * &self.data }
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        (self.data.adjoint() * &self.data - CMatrix::identity(d, d)).norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs(&(&self.data - self.data.adjoint())) <= tol
    }

    /// Phase-insensitive overlap `|tr(A†B)| / d`.
    pub fn phase_fidelity(&self, other: &DenseOperator) -> f64 {
        (self.data.adjoint() * &other.data).trace().norm() / self.dim() as f64
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm(&self.data)
    }

    pub fn norms(&self) -> Norms {
        Norms::of(self)
    }

    /// Right-multiply by a Pauli string in O(d²).
    pub fn mul_pauli(&self, p: &PauliString) -> Self {
        DenseOperator { n_qubits: self.n_qubits, data: p.right_mul(&self.data) }
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;

    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator { n_qubits: self.n_qubits, data: &self.data * &rhs.data }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;

    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator { n_qubits: self.n_qubits, data: &self.data - &rhs.data }
    }
}

/// Largest entry modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

pub fn trace_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().sum()
}

/// Spectral, Frobenius and trace norms from one SVD.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub spectral: f64,
    pub frobenius: f64,
    pub trace_norm: f64,
}

impl Norms {
    pub fn of(a: &DenseOperator) -> Norms {
        let sv = a.data.singular_values();
        Norms { spectral: sv.max(), frobenius: sv.norm(), trace_norm: sv.sum() }
    }
}

pub fn norms(a: &DenseOperator) -> Norms {
    Norms::of(a)
}

/// Jordan–Wigner matrix of `γ_i` on `n` qubits.
pub fn jw_majorana(i: usize, n: usize) -> Result<DenseOperator> {
    if i == 0 || i > 2 * n {
        return Err(Error::IndexOutOfRange { index: i, max: 2 * n });
    }
    check_dense_cap(n)?;
    Ok(DenseOperator::from_pauli(&jw_pauli(i, n)))
}

/// Dense `γ̃_key`.
pub fn hermitian_string(key: &StringKey) -> Result<DenseOperator> {
    let n = key.len() / 2;
    check_dense_cap(n)?;
    let (_, ph) = hermitize(key);
    let mut p = key.to_pauli();
    p.phase = p.phase * ph;
    Ok(DenseOperator::from_pauli(&p))
}

/// Unitary generated by a Majorana string.
///
/// With `hermitian_convention` the result is `exp(i s γ̃_R) = cos s · I + i sin s · γ̃_R`.
/// Otherwise the raw string is the generator: `exp(s γ_R)` when `γ_R` is
/// anti-Hermitian (e.g. the Givens gate `exp(θ γ_i γ_j)`), `exp(i s γ_R)` when Hermitian.
pub fn exp_majorana(r: &StringKey, s: f64, hermitian_convention: bool, n: usize) -> Result<DenseOperator> {
    if r.len() != 2 * n {
        return Err(Error::Dimension(format!("key length {} for {n} modes", r.len())));
    }
    let g = hermitian_string(r)?;
    let anti_hermitian_raw = crate::majorana::adjoint_is_negative(r.weight());
    // for an anti-Hermitian raw string γ_R = −i γ̃_R, so sin s · γ_R = (−i sin s) γ̃_R
    let coeff = if !hermitian_convention && anti_hermitian_raw {
        Complex64::new(0.0, -s.sin())
    } else {
        Complex64::new(0.0, s.sin())
    };
    Ok(DenseOperator::identity(n).scaled(c64(s.cos())).add(&g.scaled(coeff)))
}

/// Real orthogonal `2n × 2n` matrix with cached determinant sign.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMatrix {
    data: RMatrix,
    det_sign: i8,
}

/// Default orthogonality tolerance on `‖O Oᵀ − I‖_F`.
pub const ORTHO_TOL: f64 = 1e-10;

impl OrthogonalMatrix {
    pub fn new(data: RMatrix) -> Result<Self> {
        Self::with_tolerance(data, ORTHO_TOL)
    }

    pub fn with_tolerance(data: RMatrix, tol: f64) -> Result<Self> {
        let (r, c) = data.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(Error::Dimension(format!("orthogonal matrix must be square of even side, got {r}x{c}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite entry in orthogonal matrix".into()));
        }
        let dev = (&data * data.transpose() - RMatrix::identity(r, r)).norm();
        if dev > tol {
            return Err(Error::NotOrthogonal(dev));
        }
        let det_sign = if data.determinant() < 0.0 { -1 } else { 1 };
        Ok(OrthogonalMatrix { data, det_sign })
    }

    pub fn identity(two_n: usize) -> Self {
        OrthogonalMatrix { data: RMatrix::identity(two_n, two_n), det_sign: 1 }
    }

    /// `diag(−1, 1, …, 1)`.
    pub fn reflection(two_n: usize) -> Self {
        let mut data = RMatrix::identity(two_n, two_n);
        data[(0, 0)] = -1.0;
        OrthogonalMatrix { data, det_sign: -1 }
    }

    /// Adjacent-plane rotation `R(i, angle)` (1-based `i`):
    /// `R_ii = R_{i+1,i+1} = cos`, `R_{i,i+1} = sin`, `R_{i+1,i} = −sin`.
    pub fn plane_rotation(two_n: usize, i: usize, j: usize, angle: f64) -> Result<Self> {
        if i == 0 || j == 0 || i > two_n || j > two_n || i == j {
            return Err(Error::IndexOutOfRange { index: i.max(j), max: two_n });
        }
        let mut data = RMatrix::identity(two_n, two_n);
        let (a, b) = (i - 1, j - 1);
        data[(a, a)] = angle.cos();
        data[(b, b)] = angle.cos();
        data[(a, b)] = angle.sin();
        data[(b, a)] = -angle.sin();
        Ok(OrthogonalMatrix { data, det_sign: 1 })
    }

    pub fn two_n(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.two_n() / 2
    }

    pub fn det_sign(&self) -> i8 {
        self.det_sign
    }

    pub fn data(&self) -> &RMatrix {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        OrthogonalMatrix { data: self.data.transpose(), det_sign: self.det_sign }
    }

    pub fn mul(&self, other: &OrthogonalMatrix) -> Self {
        OrthogonalMatrix { data: &self.data * &other.data, det_sign: self.det_sign * other.det_sign }
    }

    pub fn orthogonality_error(&self) -> f64 {
        let k = self.two_n();
        (&self.data * self.data.transpose() - RMatrix::identity(k, k)).norm()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Self::new(RMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }
}

impl Serialize for OrthogonalMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OrthogonalMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        OrthogonalMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// One adjacent-plane Givens gate `exp(θ γ_i γ_j)` with `j = i + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Givens {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

/// `O = F^r · R_1 ⋯ R_L`, with `F = diag(−1, 1, …, 1)` present iff `reflection`
/// and `R_k` the rotation realised by `rotations[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GivensDecomposition {
    pub two_n: usize,
    pub reflection: bool,
    pub rotations: Vec<Givens>,
}

impl GivensDecomposition {
    pub fn reconstruct(&self) -> RMatrix {
        let mut acc = if self.reflection {
            OrthogonalMatrix::reflection(self.two_n).data
        } else {
            RMatrix::identity(self.two_n, self.two_n)
        };
        for g in &self.rotations {
            let r = OrthogonalMatrix::plane_rotation(self.two_n, g.i, g.j, 2.0 * g.theta)
                .expect("decomposition indices are in range");
            acc *= r.data;
        }
        acc
    }
}

/// Reduce `O` to adjacent-plane rotations.
///
/// Column by column, sub-diagonal entries are zeroed from the bottom up with
/// rotations in planes `(r−1, r)`, keeping every pivot non-negative. Each
/// left-applied rotation `Q` is recorded as the gate realising `Qᵀ`.
pub fn givens_decompose(o: &OrthogonalMatrix) -> Result<GivensDecomposition> {
    let k = o.two_n();
    let dev = o.orthogonality_error();
    if dev > 1e-8 {
        return Err(Error::NotOrthogonal(dev));
    }
    let reflection = o.det_sign < 0;
    let mut a = o.data.clone();
    if reflection {
        // F · O is in SO(2n)
        a.row_mut(0).neg_mut();
    }
    let mut rotations = Vec::new();
    for c in 0..k.saturating_sub(1) {
        for r in (c + 1..k).rev() {
            let (x, y) = (a[(r - 1, c)], a[(r, c)]);
            if y.abs() <= 1e-15 && !(r == c + 1 && x < 0.0) {
                continue;
            }
            let phi = y.atan2(x);
            let (cs, sn) = (phi.cos(), phi.sin());
            for col in 0..k {
                let (u, v) = (a[(r - 1, col)], a[(r, col)]);
                a[(r - 1, col)] = cs * u + sn * v;
                a[(r, col)] = -sn * u + cs * v;
            }
            rotations.push(Givens { i: r, j: r + 1, theta: -phi / 2.0 });
        }
    }
    Ok(GivensDecomposition { two_n: k, reflection, rotations })
}

/// Dense Gaussian unitary with `G† γ_i G = Σ_k O_ik γ_k`, up to global phase.
///
/// The reflection `diag(−1, 1, …, 1)` is realised by the Hermitian string `γ̃_{2…2n}`.
pub fn gaussian_unitary(o: &OrthogonalMatrix) -> Result<DenseOperator> {
    let n = o.n_modes();
    check_dense_cap(n)?;
    let dec = givens_decompose(o)?;
    let mut g = if dec.reflection { hermitian_string(&reflection_key(n))? } else { DenseOperator::identity(n) };
    for gate in &dec.rotations {
        let p = jw_pauli(gate.i, n).mul(&jw_pauli(gate.j, n));
        let gp = g.mul_pauli(&p);
        g = g.scaled(c64(gate.theta.cos())).add(&gp.scaled(c64(gate.theta.sin())));
    }
    Ok(g)
}

/// Key of the odd string `γ_2 γ_3 ⋯ γ_{2n}` realising `diag(−1, 1, …, 1)`.
pub fn reflection_key(n: usize) -> StringKey {
    let idx: Vec<usize> = (2..=2 * n).collect();
    StringKey::from_indices(2 * n, &idx).expect("valid indices")
}

/// Choi matrix of `ρ ↦ U ρ U†`, output register first.
pub fn choi_of_unitary(u: &DenseOperator) -> Result<ChoiMatrix> {
    if u.data.nrows() != u.data.ncols() {
        return Err(Error::Dimension("choi_of_unitary needs a square matrix".into()));
    }
    check_choi_cap(u.n_qubits)?;
    ChoiMatrix::from_kraus(u.n_qubits, std::slice::from_ref(u.data()))
}

/// Trace out every qubit not listed in `keep` (1-based); kept qubits retain their order.
pub fn partial_trace(a: &DenseOperator, keep: &[usize]) -> Result<DenseOperator> {
    let n = a.n_qubits;
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&q| q == 0 || q > n) {
        return Err(Error::InvalidArgument(format!("bad qubit subset {keep:?} for {n} qubits")));
    }
    let traced: Vec<usize> = (1..=n).filter(|q| !kept.contains(q)).collect();
    let place = |bits: usize, qubits: &[usize]| -> usize {
        let mut idx = 0;
        for (pos, &q) in qubits.iter().enumerate() {
            if bits >> (qubits.len() - 1 - pos) & 1 == 1 {
                idx |= 1 << (n - q);
            }
        }
        idx
    };
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let kept_idx: Vec<usize> = (0..dk).map(|b| place(b, &kept)).collect();
    let traced_idx: Vec<usize> = (0..dt).map(|b| place(b, &traced)).collect();
    let mut out = CMatrix::zeros(dk, dk);
    for (i, &ki) in kept_idx.iter().enumerate() {
        for (j, &kj) in kept_idx.iter().enumerate() {
            let mut s = Complex64::default();
            for &t in &traced_idx {
                s += a.data[(ki | t, kj | t)];
            }
            out[(i, j)] = s;
        }
    }
    DenseOperator::new(kept.len(), out)
}
