//! Choi matrices with the output register first.
//!
//! `J = (1/d₀) Σ_{ij} ℰ(|i⟩⟨j|) ⊗ |i⟩⟨j|`, indexed as `J[(r·d₀ + i), (s·d₀ + j)]`
//! with `r, s` output and `i, j` input.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{max_abs, trace_norm, CMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    m: usize,
    data: CMatrix,
}

impl ChoiMatrix {
    pub fn new(m: usize, data: CMatrix) -> Result<Self> {
        let side = 1usize << (2 * m);
        if data.nrows() != side || data.ncols() != side {
            return Err(Error::Dimension(format!(
                "Choi matrix for m = {m} must be {side}x{side}, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Data("non-finite Choi entry".into()));
        }
        Ok(ChoiMatrix { m, data })
    }

    /// Choi matrix of `ρ ↦ Σ_k K_k ρ K_k†` on `m` qubits.
    pub fn from_kraus(m: usize, kraus: &[CMatrix]) -> Result<Self> {
        let d0 = 1usize << m;
        let side = d0 * d0;
        let mut data = CMatrix::zeros(side, side);
        for k in kraus {
            if k.nrows() != d0 || k.ncols() != d0 {
                return Err(Error::Dimension(format!(
                    "Kraus operator is {}x{}, expected {d0}x{d0}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            // vec(K) with row-major (output, input) index
            let v = CMatrix::from_fn(side, 1, |idx, _| k[(idx / d0, idx % d0)]);
            data += &v * v.adjoint();
        }
        data /= Complex64::new(d0 as f64, 0.0);
        Self::new(m, data)
    }

    /// Scalar channel on zero qubits.
    pub fn trivial() -> Self {
        ChoiMatrix { m: 0, data: CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)) }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d0(&self) -> usize {
        1 << self.m
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    /// `(J + J†) / 2`.
    pub fn hermitian_part(&self) -> CMatrix {
        (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0)
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.data - self.data.adjoint()))
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.hermitian_part()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `tr_out J`, a `d₀ × d₀` matrix equal to `I/d₀` for trace-preserving maps.
    pub fn partial_trace_output(&self) -> CMatrix {
        partial_trace_output(&self.data, self.d0())
    }

    /// `‖tr_out J − I/d₀‖_F`.
    pub fn tp_deviation(&self) -> f64 {
        let d0 = self.d0();
        let target = CMatrix::identity(d0, d0) / Complex64::new(d0 as f64, 0.0);
        (self.partial_trace_output() - target).norm()
    }

    pub fn is_cptp(&self, psd_tol: f64, tp_tol: f64) -> bool {
        self.hermiticity_error() <= tp_tol && self.min_eigenvalue() >= -psd_tol && self.tp_deviation() <= tp_tol
    }

    pub fn trace_distance(&self, other: &ChoiMatrix) -> Result<f64> {
        self.check_same(other)?;
        Ok(trace_norm(&(&self.data - &other.data)))
    }

    pub fn frobenius_distance(&self, other: &ChoiMatrix) -> Result<f64> {
        self.check_same(other)?;
        Ok((&self.data - &other.data).norm())
    }

    pub fn max_entry_distance(&self, other: &ChoiMatrix) -> Result<f64> {
        self.check_same(other)?;
        Ok(max_abs(&(&self.data - &other.data)))
    }

    fn check_same(&self, other: &ChoiMatrix) -> Result<()> {
        if self.m != other.m {
            return Err(Error::Dimension(format!("Choi sizes differ: m = {} vs {}", self.m, other.m)));
        }
        Ok(())
    }

    /// Apply the channel: `ℰ(ρ) = d₀ Σ_{ij} ρ_ij · block_ij(J)`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d0 = self.d0();
        if rho.nrows() != d0 || rho.ncols() != d0 {
            return Err(Error::Dimension(format!("input state must be {d0}x{d0}")));
        }
        let mut out = CMatrix::zeros(d0, d0);
        for r in 0..d0 {
            for s in 0..d0 {
                let mut acc = Complex64::default();
                for i in 0..d0 {
                    for j in 0..d0 {
                        acc += rho[(i, j)] * self.data[(r * d0 + i, s * d0 + j)];
                    }
                }
                out[(r, s)] = acc * d0 as f64;
            }
        }
        Ok(out)
    }
}

/// Trace over the leading (output) factor of a `d₀² × d₀²` matrix.
pub fn partial_trace_output(j: &CMatrix, d0: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d0, d0);
    for r in 0..d0 {
        for i in 0..d0 {
            for k in 0..d0 {
                out[(i, k)] += j[(r * d0 + i, r * d0 + k)];
            }
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ChoiRepr {
    m: usize,
    /// Row-major `[re, im]` pairs.
    data: Vec<Vec<[f64; 2]>>,
}

impl Serialize for ChoiMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ChoiRepr { m: self.m, data: crate::serde_util::complex_rows(&self.data) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChoiMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ChoiRepr::deserialize(deserializer)?;
        let data = crate::serde_util::complex_from_rows(&repr.data).map_err(serde::de::Error::custom)?;
        ChoiMatrix::new(repr.m, data).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, PauliString};

    #[test]
    fn identity_channel_is_maximally_entangled() {
        let j = ChoiMatrix::from_kraus(1, &[CMatrix::identity(2, 2)]).unwrap();
        assert!(j.is_cptp(1e-12, 1e-12));
        let ev = j.eigenvalues();
        assert!((ev[3] - 1.0).abs() < 1e-12);
        assert!(ev[..3].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn depolarizing_maps_to_maximally_mixed() {
        let kraus: Vec<CMatrix> =
            Pauli::ALL.iter().map(|&p| PauliString::from_labels(&[p]).to_matrix() * Complex64::new(0.5, 0.0)).collect();
        let j = ChoiMatrix::from_kraus(1, &kraus).unwrap();
        assert!((j.data() - CMatrix::identity(4, 4) * Complex64::new(0.25, 0.0)).norm() < 1e-15);
        let rho = CMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0].map(|v| Complex64::new(v, 0.0)));
        let out = j.apply(&rho).unwrap();
        assert!((out - CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dimension_checks() {
        assert!(ChoiMatrix::new(1, CMatrix::zeros(2, 2)).is_err());
        let a = ChoiMatrix::trivial();
        let b = ChoiMatrix::from_kraus(1, &[CMatrix::identity(2, 2)]).unwrap();
        assert!(a.trace_distance(&b).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let j = ChoiMatrix::from_kraus(1, &[PauliString::from_labels(&[Pauli::Y]).to_matrix()]).unwrap();
        let text = serde_json::to_string(&j).unwrap();
        let back: ChoiMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, j);
    }
}
