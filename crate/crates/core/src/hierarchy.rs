//! Matchgate-hierarchy probe: the iteration `F_j = F_{j−1} γ_μ F_{j−1}†`
//! and a Gaussianity test for the adjoint action of an operator.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{exp_majorana, jw_majorana, DenseOperator};
use crate::error::{Error, Result};
use crate::instances::CircuitSpec;
use crate::majorana::{SparseOperator, StringKey};

/// Stray-coefficient tolerance for the Gaussianity verdict.
pub const GAUSSIAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyTrace {
    pub mu: usize,
    /// `F_1, …, F_{k_max}`.
    pub iterates: Vec<SparseOperator>,
    /// `gaussian_flags[j]` is the verdict for `iterates[j]`.
    pub gaussian_flags: Vec<bool>,
    pub weights: Vec<usize>,
}

/// True when every term of weight other than one is below `tol`.
fn is_linear(op: &SparseOperator, tol: f64) -> bool {
    op.terms().all(|(k, c)| k.weight() == 1 || c.norm() <= tol)
}

/// Whether `op γ_i op†` stays linear in the Majoranas for every `i`.
pub fn is_gaussian_action_sparse(op: &SparseOperator) -> Result<bool> {
    let adj = op.adjoint();
    for i in 1..=2 * op.n() {
        let g = SparseOperator::majorana(op.n(), i)?;
        if !is_linear(&op.mul(&g)?.mul(&adj)?, GAUSSIAN_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `U† γ_i U` has Majorana weight at most one for every `i`.
pub fn is_gaussian_action(u: &DenseOperator) -> Result<bool> {
    let n = u.n_qubits();
    let ud = u.adjoint();
    for i in 1..=2 * n {
        let conj = &(&ud * &jw_majorana(i, n)?) * u;
        if !is_linear(&SparseOperator::from_dense(&conj)?, GAUSSIAN_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_args(n: usize, mu: usize, k_max: usize) -> Result<()> {
    if mu == 0 || mu > 2 * n {
        return Err(Error::IndexOutOfRange { index: mu, max: 2 * n });
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    Ok(())
}

/// Iterate from a given `F_1`.
pub fn iterate_from(f1: SparseOperator, mu: usize, k_max: usize) -> Result<HierarchyTrace> {
    check_args(f1.n(), mu, k_max)?;
    let gamma = SparseOperator::majorana(f1.n(), mu)?;
    let mut iterates = vec![f1];
    while iterates.len() < k_max {
        let f = iterates.last().expect("non-empty");
        let next = f.mul(&gamma)?.mul(&f.adjoint())?;
        iterates.push(next);
    }
    let gaussian_flags = iterates.iter().map(is_gaussian_action_sparse).collect::<Result<Vec<_>>>()?;
    let weights = iterates.iter().map(SparseOperator::majorana_weight).collect();
    Ok(HierarchyTrace { mu, iterates, gaussian_flags, weights })
}

/// `F_1 = U γ_μ U†` from a dense unitary.
pub fn hierarchy_iterate(u: &DenseOperator, mu: usize, k_max: usize) -> Result<HierarchyTrace> {
    let n = u.n_qubits();
    check_args(n, mu, k_max)?;
    let f1 = &(u * &jw_majorana(mu, n)?) * &u.adjoint();
    iterate_from(SparseOperator::from_dense(&f1)?, mu, k_max)
}

/// `F_1 = U γ_μ U†` propagated symbolically through a circuit.
pub fn hierarchy_iterate_circuit(spec: &CircuitSpec, mu: usize, k_max: usize) -> Result<HierarchyTrace> {
    check_args(spec.n(), mu, k_max)?;
    let f1 = spec.schrodinger(&SparseOperator::majorana(spec.n(), mu)?)?;
    iterate_from(f1, mu, k_max)
}

/// `K G(θ) K` on three modes with `K = exp(iπ γ₁γ₂γ₃γ₄/4)` and `G(θ) = exp(θ γ₁γ₅)`.
pub fn witness_unitary(theta: f64) -> Result<DenseOperator> {
    let n = 3;
    let k = exp_majorana(&StringKey::from_indices(2 * n, &[1, 2, 3, 4])?, PI / 4.0, true, n)?;
    let g = exp_majorana(&StringKey::from_indices(2 * n, &[1, 5])?, theta, false, n)?;
    Ok(&(&k * &g) * &k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub support: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateReport {
    pub weight: usize,
    pub gaussian: bool,
    /// Terms above the pruning threshold, largest first.
    pub leading_coeffs: Vec<CoeffEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub mu: usize,
    pub theta: Option<f64>,
    pub iterates: Vec<IterateReport>,
}

impl HierarchyReport {
    pub fn from_trace(trace: &HierarchyTrace, theta: Option<f64>) -> Self {
        let iterates = trace
            .iterates
            .iter()
            .zip(&trace.gaussian_flags)
            .map(|(f, &gaussian)| {
                let mut terms: Vec<(&StringKey, &Complex64)> =
                    f.terms().filter(|(_, c)| c.norm() > GAUSSIAN_TOL).collect();
                terms.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()));
                IterateReport {
                    weight: f.majorana_weight(),
                    gaussian,
                    leading_coeffs: terms
                        .into_iter()
                        .take(8)
                        .map(|(k, c)| CoeffEntry { support: k.indices(), re: c.re, im: c.im })
                        .collect(),
                }
            })
            .collect();
        HierarchyReport { mu: trace.mu, theta, iterates }
    }

    pub fn never_gaussian(&self) -> bool {
        self.iterates.iter().all(|it| !it.gaussian)
    }
}

/// Probe `K G(π/p) K` for odd `p ≥ 3`.
pub fn witness_outside_hierarchy(p_odd: u32, k_max: usize) -> Result<(HierarchyTrace, HierarchyReport)> {
    if p_odd < 3 || p_odd.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("p must be odd and at least 3, got {p_odd}")));
    }
    witness_with_angle(PI / p_odd as f64, 2, k_max)
}

/// The witness circuit at an arbitrary angle and probe index.
pub fn witness_with_angle(theta: f64, mu: usize, k_max: usize) -> Result<(HierarchyTrace, HierarchyReport)> {
    let trace = hierarchy_iterate(&witness_unitary(theta)?, mu, k_max)?;
    let report = HierarchyReport::from_trace(&trace, Some(theta));
    Ok((trace, report))
}
