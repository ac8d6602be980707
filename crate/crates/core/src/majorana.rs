//! Symbolic algebra over Majorana strings.
//!
//! A string `γ_x = γ_{a_1} γ_{a_2} ⋯ γ_{a_k}` with `a_1 < ⋯ < a_k` is keyed by a
//! bit mask (bit `a - 1` set for each factor). Coefficients in [`SparseOperator`]
//! multiply the raw strings `γ_x`; the Hermitian basis `γ̃_x` is reachable
//! through [`hermitize`] and [`SparseOperator::hermitian_coeff`].

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dense::{check_dense_cap, CMatrix, DenseOperator};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::phase::Phase;

/// Largest supported number of Majorana operators (`2n`).
pub const MAX_MAJORANAS: usize = 128;

/// Default magnitude below which coefficients are discarded.
pub const DEFAULT_PRUNE: f64 = 1e-12;

/// Bit mask of length `2n` identifying a Majorana string.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StringKey {
    len: u16,
    bits: u128,
}

fn len_mask(len: usize) -> u128 {
    if len >= 128 {
        u128::MAX
    } else {
        (1u128 << len) - 1
    }
}

impl StringKey {
    pub fn identity(two_n: usize) -> Self {
        assert!(two_n <= MAX_MAJORANAS, "at most {MAX_MAJORANAS} Majorana operators");
        StringKey { len: two_n as u16, bits: 0 }
    }

    pub fn from_bits(two_n: usize, bits: u128) -> Result<Self> {
        if two_n > MAX_MAJORANAS {
            return Err(Error::Dimension(format!("{two_n} Majoranas exceeds {MAX_MAJORANAS}")));
        }
        if bits & !len_mask(two_n) != 0 {
            return Err(Error::Dimension(format!("mask has bits beyond length {two_n}")));
        }
        Ok(StringKey { len: two_n as u16, bits })
    }

    /// Key from 1-based indices; order is irrelevant, repeats are rejected.
    pub fn from_indices(two_n: usize, indices: &[usize]) -> Result<Self> {
        let mut key = Self::identity(two_n.min(MAX_MAJORANAS));
        if two_n > MAX_MAJORANAS {
            return Err(Error::Dimension(format!("{two_n} Majoranas exceeds {MAX_MAJORANAS}")));
        }
        for &i in indices {
            if i == 0 || i > two_n {
                return Err(Error::IndexOutOfRange { index: i, max: two_n });
            }
            let b = 1u128 << (i - 1);
            if key.bits & b != 0 {
                return Err(Error::InvalidArgument(format!("repeated Majorana index {i}")));
            }
            key.bits |= b;
        }
        Ok(key)
    }

    pub fn single(two_n: usize, i: usize) -> Result<Self> {
        Self::from_indices(two_n, &[i])
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    /// Hamming weight `α_x`.
    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= 1 && i <= self.len() && self.bits >> (i - 1) & 1 == 1
    }

    /// Ascending 1-based indices.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&b| self.bits >> b & 1 == 1).map(|b| b + 1).collect()
    }

    /// `γ_x` and `γ_y` commute iff `|x||y| − |x ∩ y|` is even.
    pub fn commutes_with(&self, other: &StringKey) -> bool {
        let overlap = (self.bits & other.bits).count_ones() as usize;
        (self.weight() * other.weight() + overlap).is_multiple_of(2)
    }

    /// Jordan–Wigner image as a Pauli string on `len / 2` qubits.
    pub fn to_pauli(&self) -> PauliString {
        let n = self.len() / 2;
        let mut acc = PauliString::identity(n);
        for i in self.indices() {
            acc = acc.mul(&jw_pauli(i, n));
        }
        acc
    }
}

impl fmt::Debug for StringKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "γ{:?}/{}", self.indices(), self.len)
    }
}

/// Pauli form of the single Majorana `γ_i` on `n` qubits.
pub fn jw_pauli(i: usize, n: usize) -> PauliString {
    let k = i.div_ceil(2);
    let mut p = PauliString::identity(n);
    let bit = |q: usize| 1u64 << (n - q);
    for q in 1..k {
        p.z |= bit(q);
    }
    p.x |= bit(k);
    if i.is_multiple_of(2) {
        p.z |= bit(k);
        p.phase = Phase::I;
    }
    p
}

fn check_same_len(x: &StringKey, y: &StringKey) -> Result<()> {
    if x.len != y.len {
        return Err(Error::Dimension(format!("string lengths differ: {} vs {}", x.len, y.len)));
    }
    Ok(())
}

/// Sign of reordering `γ_x γ_y` into ascending order.
#[inline]
fn product_sign(x: u128, y: u128) -> bool {
    let mut swaps = 0u32;
    let mut rest = y;
    while rest != 0 {
        let j = rest.trailing_zeros();
        let above = if j >= 127 { 0 } else { u128::MAX << (j + 1) };
        swaps += (x & above).count_ones();
        rest &= rest - 1;
    }
    swaps & 1 == 1
}

/// `γ_x γ_y = phase · γ_{x ⊕ y}`.
pub fn string_product(x: &StringKey, y: &StringKey) -> Result<(StringKey, Phase)> {
    check_same_len(x, y)?;
    Ok(string_product_unchecked(x, y))
}

#[inline]
fn string_product_unchecked(x: &StringKey, y: &StringKey) -> (StringKey, Phase) {
    let key = StringKey { len: x.len, bits: x.bits ^ y.bits };
    (key, Phase::sign(product_sign(x.bits, y.bits)))
}

/// `γ̃_x = phase · γ_x`, with phase `1` when `γ_x` is Hermitian and `i` otherwise.
pub fn hermitize(x: &StringKey) -> (StringKey, Phase) {
    (*x, hermitian_phase(x.weight()))
}

/// `γ_x† = (−1)^{α(α−1)/2} γ_x`.
pub fn adjoint_is_negative(weight: usize) -> bool {
    (weight * weight.saturating_sub(1) / 2) % 2 == 1
}

fn hermitian_phase(weight: usize) -> Phase {
    if adjoint_is_negative(weight) {
        Phase::I
    } else {
        Phase::ONE
    }
}

/// Linear combination of Majorana strings over `n` modes.
#[derive(Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    terms: BTreeMap<StringKey, Complex64>,
    prune: f64,
}

impl fmt::Debug for SparseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseOperator").field("n", &self.n).field("terms", &self.terms).finish()
    }
}

impl SparseOperator {
    pub fn zero(n: usize) -> Self {
        assert!(2 * n <= MAX_MAJORANAS, "at most {} modes", MAX_MAJORANAS / 2);
        SparseOperator { n, terms: BTreeMap::new(), prune: DEFAULT_PRUNE }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_term(StringKey::identity(2 * n), Complex64::new(1.0, 0.0))
    }

    /// Single Majorana `γ_i` (1-based).
    pub fn majorana(n: usize, i: usize) -> Result<Self> {
        Ok(Self::from_term(StringKey::single(2 * n, i)?, Complex64::new(1.0, 0.0)))
    }

    /// `coeff · γ_key`.
    pub fn from_term(key: StringKey, coeff: Complex64) -> Self {
        let mut op = Self::zero(key.len() / 2);
        op.add_term(key, coeff);
        op
    }

    /// `coeff · γ̃_key`.
    pub fn from_hermitian_term(key: StringKey, coeff: Complex64) -> Self {
        let (_, ph) = hermitize(&key);
        Self::from_term(key, coeff * ph.to_complex())
    }

    pub fn with_prune(mut self, threshold: f64) -> Self {
        self.prune = threshold;
        self.prune_small();
        self
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&StringKey, &Complex64)> {
        self.terms.iter()
    }

    /// Coefficient on the raw string `γ_key`.
    pub fn coeff(&self, key: &StringKey) -> Complex64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    /// Coefficient on `γ̃_key`.
    pub fn hermitian_coeff(&self, key: &StringKey) -> Complex64 {
        let (_, ph) = hermitize(key);
        self.coeff(key) * ph.conj().to_complex()
    }

    pub fn add_term(&mut self, key: StringKey, coeff: Complex64) {
        assert_eq!(key.len(), 2 * self.n, "key length does not match operator");
        let entry = self.terms.entry(key).or_default();
        *entry += coeff;
        if entry.norm() < self.prune {
            self.terms.remove(&key);
        }
    }

    fn accumulate(&mut self, key: StringKey, coeff: Complex64) {
        *self.terms.entry(key).or_default() += coeff;
    }

    fn prune_small(&mut self) {
        let p = self.prune;
        self.terms.retain(|_, c| c.norm() >= p);
    }

    fn check_n(&self, other: &SparseOperator) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("mode counts differ: {} vs {}", self.n, other.n)));
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > 2 * self.n {
            return Err(Error::IndexOutOfRange { index: i, max: 2 * self.n });
        }
        Ok(())
    }

    fn empty_like(&self) -> Self {
        SparseOperator { n: self.n, terms: BTreeMap::new(), prune: self.prune }
    }

    pub fn add(&self, other: &SparseOperator) -> Result<Self> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.accumulate(*k, *c);
        }
        out.prune_small();
        Ok(out)
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.empty_like();
        for (k, c) in &self.terms {
            out.accumulate(*k, *c * s);
        }
        out.prune_small();
        out
    }

    pub fn mul(&self, other: &SparseOperator) -> Result<Self> {
        self.check_n(other)?;
        let mut out = self.empty_like();
        for (kx, cx) in &self.terms {
            for (ky, cy) in &other.terms {
                let (k, ph) = string_product_unchecked(kx, ky);
                out.accumulate(k, *cx * *cy * ph.to_complex());
            }
        }
        out.prune_small();
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.empty_like();
        for (k, c) in &self.terms {
            let c = c.conj();
            out.accumulate(*k, if adjoint_is_negative(k.weight()) { -c } else { c });
        }
        out
    }

    /// Hermitian iff `conj(c_x) = c_x · s_x` with `γ_x† = s_x γ_x`, checked to `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(k, c)| {
            let s = if adjoint_is_negative(k.weight()) { -1.0 } else { 1.0 };
            (c.conj() - c * s).norm() <= tol
        })
    }

    /// `ab − ba`, pruned.
    pub fn commutator(&self, other: &SparseOperator) -> Result<Self> {
        self.check_n(other)?;
        let mut out = self.empty_like();
        for (kx, cx) in &self.terms {
            for (ky, cy) in &other.terms {
                if kx.commutes_with(ky) {
                    continue;
                }
                // anticommuting strings: ab − ba = 2ab
                let (k, ph) = string_product_unchecked(kx, ky);
                out.accumulate(k, *cx * *cy * ph.to_complex() * 2.0);
            }
        }
        out.prune_small();
        Ok(out)
    }

    /// `G(θ)† op G(θ)` with `G(θ) = exp(θ γ_i γ_j)`.
    ///
    /// Terms that anticommute with `γ_iγ_j` map to `cos 2θ · γ_x + sin 2θ · γ_x γ_i γ_j`,
    /// which is the factor-wise substitution `γ_i → cos 2θ γ_i + sin 2θ γ_j`,
    /// `γ_j → −sin 2θ γ_i + cos 2θ γ_j` after expansion.
    pub fn conjugate_by_givens(&self, i: usize, j: usize, theta: f64) -> Result<Self> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(Error::InvalidArgument(format!("Givens plane needs i ≠ j, got {i}")));
        }
        let plane = StringKey::from_indices(2 * self.n, &[i, j])?;
        let (pair, pair_ph) =
            string_product_unchecked(&StringKey::single(2 * self.n, i)?, &StringKey::single(2 * self.n, j)?);
        debug_assert_eq!(pair, plane);
        let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
        let mut out = self.empty_like();
        for (k, coeff) in &self.terms {
            if k.commutes_with(&plane) {
                out.accumulate(*k, *coeff);
                continue;
            }
            out.accumulate(*k, *coeff * c);
            let (k2, ph) = string_product_unchecked(k, &plane);
            out.accumulate(k2, *coeff * s * (ph * pair_ph).to_complex());
        }
        out.prune_small();
        Ok(out)
    }

    /// `e^{i s γ̃_R} op e^{−i s γ̃_R}`.
    ///
    /// Commuting terms are untouched; anticommuting terms become
    /// `(cos 2s + i sin 2s · γ̃_R) γ_x`.
    pub fn conjugate_by_exp_string(&self, r: &StringKey, s: f64) -> Result<Self> {
        if r.len() != 2 * self.n {
            return Err(Error::Dimension(format!("generator length {} vs operator 2n = {}", r.len(), 2 * self.n)));
        }
        let (_, r_ph) = hermitize(r);
        let (c, sn) = ((2.0 * s).cos(), (2.0 * s).sin());
        let i_sin = Complex64::new(0.0, sn) * r_ph.to_complex();
        let mut out = self.empty_like();
        for (k, coeff) in &self.terms {
            if k.commutes_with(r) {
                out.accumulate(*k, *coeff);
                continue;
            }
            out.accumulate(*k, *coeff * c);
            let (k2, ph) = string_product_unchecked(r, k);
            out.accumulate(k2, *coeff * i_sin * ph.to_complex());
        }
        out.prune_small();
        Ok(out)
    }

    /// `γ̃_R op γ̃_R` — conjugation by a single Hermitian string flips anticommuting terms.
    pub fn conjugate_by_string(&self, r: &StringKey) -> Result<Self> {
        if r.len() != 2 * self.n {
            return Err(Error::Dimension("generator length mismatch".into()));
        }
        let mut out = self.empty_like();
        for (k, coeff) in &self.terms {
            let c = if k.commutes_with(r) { *coeff } else { -*coeff };
            out.accumulate(*k, c);
        }
        Ok(out)
    }

    /// Largest weight over stored terms; 0 for the zero operator.
    pub fn majorana_weight(&self) -> usize {
        self.terms.keys().map(StringKey::weight).max().unwrap_or(0)
    }

    /// Largest coefficient magnitude among terms of the given weight.
    pub fn max_coeff_of_weight(&self, weight: usize) -> f64 {
        self.terms.iter().filter(|(k, _)| k.weight() == weight).map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude difference, taken over the union of keys.
    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        let mut worst: f64 = 0.0;
        for k in self.terms.keys().chain(other.terms.keys()) {
            worst = worst.max((self.coeff(k) - other.coeff(k)).norm());
        }
        worst
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        check_dense_cap(self.n)?;
        let d = 1usize << self.n;
        let mut m = CMatrix::zeros(d, d);
        for (k, c) in &self.terms {
            let p = k.to_pauli();
            for col in 0..d {
                let (row, v) = p.column_entry(col);
                m[(row, col)] += v * c;
            }
        }
        DenseOperator::new(self.n, m)
    }

    /// Expand a dense matrix in the Majorana basis: `c_x = tr(γ_x† A) / d`.
    pub fn from_dense(a: &DenseOperator) -> Result<Self> {
        let n = a.n_qubits();
        check_dense_cap(n)?;
        if 2 * n > MAX_MAJORANAS {
            return Err(Error::Dimension("too many modes".into()));
        }
        let d = a.dim() as f64;
        let mut out = Self::zero(n);
        for bits in 0u128..(1u128 << (2 * n)) {
            let key = StringKey { len: (2 * n) as u16, bits };
            let p = key.to_pauli();
            // tr(P† A) = Σ_col conj(P[row,col]) A[row,col]
            let mut tr = Complex64::default();
            for col in 0..a.dim() {
                let (row, v) = p.column_entry(col);
                tr += v.conj() * a.data()[(row, col)];
            }
            out.add_term(key, tr / d);
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    support: Vec<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SparseRepr {
    n: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for SparseOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SparseRepr {
            n: self.n,
            terms: self.terms.iter().map(|(k, c)| TermRepr { support: k.indices(), re: c.re, im: c.im }).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SparseOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SparseRepr::deserialize(deserializer)?;
        if 2 * repr.n > MAX_MAJORANAS {
            return Err(serde::de::Error::custom("too many modes"));
        }
        let mut op = SparseOperator::zero(repr.n);
        for t in repr.terms {
            let key = StringKey::from_indices(2 * repr.n, &t.support).map_err(serde::de::Error::custom)?;
            op.add_term(key, Complex64::new(t.re, t.im));
        }
        Ok(op)
    }
}

/// Free-function form of [`SparseOperator::commutator`].
pub fn commutator(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator> {
    a.commutator(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{jw_majorana, Norms};

    fn key(two_n: usize, idx: &[usize]) -> StringKey {
        StringKey::from_indices(two_n, idx).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn product_examples() {
        let (k, ph) = string_product(&key(4, &[1]), &key(4, &[1])).unwrap();
        assert!(k.is_identity());
        assert_eq!(ph, Phase::ONE);

        let (k, ph) = string_product(&key(4, &[1]), &key(4, &[2])).unwrap();
        assert_eq!(k, key(4, &[1, 2]));
        assert_eq!(ph, Phase::ONE);
        let (_, ph) = string_product(&key(4, &[2]), &key(4, &[1])).unwrap();
        assert_eq!(ph, Phase::MINUS_ONE);
    }

    #[test]
    fn product_matches_dense_at_two_modes() {
        // γ1γ2 · γ2γ3 = γ1γ3 with phase +1
        let (k, ph) = string_product(&key(4, &[1, 2]), &key(4, &[2, 3])).unwrap();
        assert_eq!(k, key(4, &[1, 3]));
        let g = |i| jw_majorana(i, 2).unwrap();
        let lhs = &(&(&g(1) * &g(2)) * &g(2)) * &g(3);
        let rhs = (&g(1) * &g(3)).scaled(ph.to_complex());
        assert!((lhs.data() - rhs.data()).norm() < 1e-14);
        assert_eq!(ph, Phase::ONE);
    }

    #[test]
    fn product_length_mismatch() {
        assert!(string_product(&key(4, &[1]), &key(6, &[1])).is_err());
    }

    #[test]
    fn hermitize_examples() {
        assert_eq!(hermitize(&key(4, &[3])).1, Phase::ONE);
        assert_eq!(hermitize(&key(4, &[1, 2])).1, Phase::I);
        assert_eq!(hermitize(&key(4, &[1, 2, 3, 4])).1, Phase::ONE);
        assert_eq!(hermitize(&key(6, &[1, 2, 3])).1, Phase::I);
    }

    #[test]
    fn hermitized_strings_are_hermitian_densely() {
        for bits in 0u128..16 {
            let k = StringKey::from_bits(4, bits).unwrap();
            let op = SparseOperator::from_hermitian_term(k, one());
            assert!(op.is_hermitian(1e-15));
            let d = op.to_dense().unwrap();
            assert!(crate::dense::max_abs(&(d.data() - d.data().adjoint())) < 1e-12);
        }
    }

    #[test]
    fn commutator_examples() {
        let g1 = SparseOperator::majorana(1, 1).unwrap();
        let g2 = SparseOperator::majorana(1, 2).unwrap();
        assert!(g1.commutator(&g1).unwrap().is_empty());
        let c = g1.commutator(&g2).unwrap();
        assert_eq!(c.coeff(&key(2, &[1, 2])), Complex64::new(2.0, 0.0));
        let dense =
            &(&g1.to_dense().unwrap() * &g2.to_dense().unwrap()) - &(&g2.to_dense().unwrap() * &g1.to_dense().unwrap());
        assert!((c.to_dense().unwrap().data() - dense.data()).norm() < 1e-14);
        assert!(SparseOperator::identity(1).commutator(&g2).unwrap().is_empty());
    }

    #[test]
    fn commutator_mismatch() {
        let a = SparseOperator::identity(1);
        let b = SparseOperator::identity(2);
        assert!(a.commutator(&b).is_err());
    }

    #[test]
    fn givens_examples() {
        let g1 = SparseOperator::majorana(2, 1).unwrap();
        assert_eq!(g1.conjugate_by_givens(1, 3, 0.0).unwrap(), g1);

        let rotated = g1.conjugate_by_givens(1, 3, std::f64::consts::FRAC_PI_4).unwrap();
        assert!(rotated.max_abs_diff(&SparseOperator::majorana(2, 3).unwrap()) < 1e-15);

        let pair = SparseOperator::from_term(key(4, &[1, 2]), one());
        assert!(pair.conjugate_by_givens(1, 2, 0.37).unwrap().max_abs_diff(&pair) < 1e-15);

        assert!(g1.conjugate_by_givens(1, 5, 0.1).is_err());
        assert!(g1.conjugate_by_givens(2, 2, 0.1).is_err());
    }

    #[test]
    fn givens_matches_dense() {
        let n = 2;
        let theta: f64 = 0.41;
        let op = SparseOperator::from_term(key(4, &[1, 2, 4]), Complex64::new(0.3, -0.7))
            .add(&SparseOperator::majorana(n, 2).unwrap())
            .unwrap();
        for (i, j) in [(1, 2), (2, 4), (4, 1), (3, 2)] {
            let gen = SparseOperator::from_term(key(4, &[i.min(j), i.max(j)]), one());
            let gen = if i < j { gen } else { gen.scale(-one()) };
            let g = crate::dense::DenseOperator::identity(n)
                .scaled(Complex64::new(theta.cos(), 0.0))
                .add(&gen.to_dense().unwrap().scaled(Complex64::new(theta.sin(), 0.0)));
            let expect = &(&g.adjoint() * &op.to_dense().unwrap()) * &g;
            let got = op.conjugate_by_givens(i, j, theta).unwrap().to_dense().unwrap();
            assert!((got.data() - expect.data()).norm() < 1e-12, "plane ({i},{j})");
        }
    }

    #[test]
    fn exp_string_examples() {
        let g5 = SparseOperator::majorana(3, 5).unwrap();
        let r = key(6, &[1, 2, 3, 4]);
        assert_eq!(g5.conjugate_by_exp_string(&r, 0.7).unwrap(), g5);

        let g1 = SparseOperator::majorana(3, 1).unwrap();
        let out = g1.conjugate_by_exp_string(&r, std::f64::consts::FRAC_PI_4).unwrap();
        assert_eq!(out.len(), 1);
        let (k, c) = out.terms().next().unwrap();
        assert_eq!(k.weight(), 3);
        assert!((c.norm() - 1.0).abs() < 1e-14);

        let dense = crate::dense::exp_majorana(&r, std::f64::consts::FRAC_PI_4, true, 3).unwrap();
        let expect = &(&dense * &g1.to_dense().unwrap()) * &dense.adjoint();
        assert!((out.to_dense().unwrap().data() - expect.data()).norm() < 1e-12);
    }

    #[test]
    fn weights() {
        assert_eq!(SparseOperator::identity(2).majorana_weight(), 0);
        assert_eq!(SparseOperator::zero(2).majorana_weight(), 0);
        let op = SparseOperator::from_term(key(4, &[1, 2, 3]), one());
        assert_eq!(op.majorana_weight(), 3);
    }

    #[test]
    fn to_dense_examples() {
        let id = SparseOperator::identity(1).to_dense().unwrap();
        assert!((id.data() - CMatrix::identity(2, 2)).norm() < 1e-15);
        let x = SparseOperator::majorana(1, 1).unwrap().to_dense().unwrap();
        assert_eq!(x.data()[(0, 1)], one());
        assert_eq!(x.data()[(1, 0)], one());
        let g4 = SparseOperator::majorana(2, 4).unwrap().to_dense().unwrap();
        let zy = crate::pauli::PauliString::from_labels(&[crate::pauli::Pauli::Z, crate::pauli::Pauli::Y]);
        assert!((g4.data() - zy.to_matrix()).norm() < 1e-15);
    }

    #[test]
    fn dense_round_trip() {
        let op = SparseOperator::from_term(key(4, &[1, 3]), Complex64::new(0.2, 0.1))
            .add(&SparseOperator::from_term(key(4, &[2]), Complex64::new(-1.5, 0.0)))
            .unwrap();
        let back = SparseOperator::from_dense(&op.to_dense().unwrap()).unwrap();
        assert!(back.max_abs_diff(&op) < 1e-14);
        assert_eq!(back.len(), 2);
    }

    #[test]
    fn adjoint_matches_dense() {
        let op = SparseOperator::from_term(key(4, &[1, 2, 3]), Complex64::new(0.2, 0.9))
            .add(&SparseOperator::from_term(key(4, &[2, 4]), Complex64::new(0.4, -0.3)))
            .unwrap();
        let a = op.adjoint().to_dense().unwrap();
        let b = op.to_dense().unwrap().adjoint();
        assert!((a.data() - b.data()).norm() < 1e-14);
        assert!(!op.is_hermitian(1e-12));
    }

    #[test]
    fn serde_round_trip() {
        let op = SparseOperator::from_term(key(6, &[2, 5]), Complex64::new(0.25, -1.0));
        let text = serde_json::to_string(&op).unwrap();
        let back: SparseOperator = serde_json::from_str(&text).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn anticommutation_dense_small() {
        for n in 1..=3 {
            for i in 1..=2 * n {
                for j in 1..=2 * n {
                    let a = jw_majorana(i, n).unwrap();
                    let b = jw_majorana(j, n).unwrap();
                    let ac = (&a * &b).add(&(&b * &a));
                    let expect = if i == j { 2.0 } else { 0.0 };
                    let diff = ac.data() - CMatrix::identity(1 << n, 1 << n) * Complex64::new(expect, 0.0);
                    assert!(crate::dense::max_abs(&diff) < 1e-12);
                }
            }
        }
        let _ = Norms::of(&jw_majorana(1, 1).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_op(n: usize) -> impl Strategy<Value = SparseOperator> {
            prop::collection::vec((0u128..(1u128 << (2 * n)), -1.0f64..1.0, -1.0f64..1.0), 1..16).prop_map(move |ts| {
                let mut op = SparseOperator::zero(n);
                for (b, re, im) in ts {
                    op.add_term(StringKey::from_bits(2 * n, b).unwrap(), Complex64::new(re, im));
                }
                op
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn exp_conjugation_agrees_with_dense(op in arb_op(3), r in 1u128..64, s in -3.0f64..3.0) {
                let rk = StringKey::from_bits(6, r).unwrap();
                let k = crate::dense::exp_majorana(&rk, s, true, 3).unwrap();
                let expect = &(&k * &op.to_dense().unwrap()) * &k.adjoint();
                let got = op.conjugate_by_exp_string(&rk, s).unwrap().to_dense().unwrap();
                prop_assert!((&got - &expect).spectral_norm() < 1e-10);
            }

            #[test]
            fn product_is_associative(a in arb_op(2), b in arb_op(2), c in arb_op(2)) {
                let l = a.mul(&b).unwrap().mul(&c).unwrap();
                let r = a.mul(&b.mul(&c).unwrap()).unwrap();
                prop_assert!(l.max_abs_diff(&r) < 1e-12);
            }

            #[test]
            fn mul_agrees_with_dense(a in arb_op(2), b in arb_op(2)) {
                let got = a.mul(&b).unwrap().to_dense().unwrap();
                let expect = &a.to_dense().unwrap() * &b.to_dense().unwrap();
                prop_assert!((&got - &expect).spectral_norm() < 1e-10);
            }
        }
    }
}
