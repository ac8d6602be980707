//! Black-box access to the target unitary: the tomography matrices `c` and `f`
//! in exact or finite-shot form, and the shot budgets that cost them.
//!
//! Physically, `c^(1)` would come from fermionic-Gaussian (or qubit) shadow
//! tomography of states `|ψ_x⟩` measured against observables `O_k^±`, and `f` from
//! local-Clifford shadows of `|ψ̄_α⟩` against `Ō_β^±`. Here those ensembles are
//! replaced by their statistics: each entry is the mean of `N` independent ±1
//! outcomes whose expectation is the exact trace. Estimates are not clamped to
//! `[−1, 1]`, so the error stays additive and unbiased.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::dense::{CMatrix, DenseOperator, RMatrix};
use crate::error::{Error, Result};
use crate::majorana::{jw_pauli, SparseOperator, StringKey};
use crate::pauli::PauliString;

/// How the oracle answers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AccessMode {
    Exact,
    /// Finite-shot estimates with `shots` samples per entry.
    Sampled {
        seed: u64,
        shots: u64,
    },
}

impl AccessMode {
    /// Sampled mode using `budget` unless `shots_override` is given.
    pub fn sampled(seed: u64, budget: &ShotBudget, shots_override: Option<u64>) -> Self {
        AccessMode::Sampled { seed, shots: shots_override.unwrap_or(budget.per_state_copies) }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, AccessMode::Exact)
    }
}

/// Copies of each probe state needed for entrywise accuracy `epsilon` with failure probability `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub per_state_copies: u64,
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must lie in (0, 1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(())
}

fn budget(epsilon: f64, delta: f64, value: f64) -> Result<ShotBudget> {
    if !value.is_finite() || value > u64::MAX as f64 {
        return Err(Error::InvalidArgument(format!("budget {value} does not fit in a shot count")));
    }
    Ok(ShotBudget { epsilon, delta, per_state_copies: (value.ceil() as u64).max(1) })
}

fn c_budget(n: usize, epsilon: f64, delta: f64, tail: f64) -> Result<ShotBudget> {
    check_eps_delta(epsilon, delta)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let nf = n as f64;
    let value =
        (1.0 + epsilon / (6.0 * nf)) * (8.0 * nf * nf / delta).ln() * 4.0 * nf * nf * tail / (epsilon * epsilon);
    budget(epsilon, delta, value)
}

/// `N_c = (1 + ε/6n) · ln(8n²/δ) · 4n²(4n+1) / ε²`.
pub fn budget_c_qubit(n: usize, epsilon: f64, delta: f64) -> Result<ShotBudget> {
    c_budget(n, epsilon, delta, 4.0 * n as f64 + 1.0)
}

/// `N_c^f = (1 + ε/6n) · ln(8n²/δ) · 4n²(4n+3) / ε²`.
pub fn budget_c_fermionic(n: usize, epsilon: f64, delta: f64) -> Result<ShotBudget> {
    c_budget(n, epsilon, delta, 4.0 * n as f64 + 3.0)
}

/// `N̄_c = 68·3^m · ln(2^{2m+1}/δ) / ε²`.
pub fn budget_f_qubit(m: usize, epsilon: f64, delta: f64) -> Result<ShotBudget> {
    check_eps_delta(epsilon, delta)?;
    let c1 = 68.0 * 3f64.powi(m as i32);
    let c2 = 2f64.powi(2 * m as i32 + 1);
    budget(epsilon, delta, c1 * (c2 / delta).ln() / (epsilon * epsilon))
}

/// `N̄_c^f = 68·3^{m+2} · ln(2·4^{2m}/δ) / ε²`.
pub fn budget_f_fermionic(m: usize, epsilon: f64, delta: f64) -> Result<ShotBudget> {
    check_eps_delta(epsilon, delta)?;
    let c1 = 68.0 * 3f64.powi(m as i32 + 2);
    let c2 = 2.0 * 4f64.powi(2 * m as i32);
    budget(epsilon, delta, c1 * (c2 / delta).ln() / (epsilon * epsilon))
}

/// Stream tags keep the `c` and `f` substreams of one seed disjoint.
const STREAM_C: u64 = 1;
const STREAM_F: u64 = 2;

/// Mean of `shots` ±1 outcomes with expectation `value`.
fn sample_entry(seed: u64, tag: u64, index: u64, shots: u64, value: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag << 56 | index);
    let p = ((1.0 + value) / 2.0).clamp(0.0, 1.0);
    let plus = Binomial::new(shots, p).expect("p lies in [0, 1]").sample(&mut rng);
    2.0 * plus as f64 / shots as f64 - 1.0
}

fn apply_mode(exact: RMatrix, mode: AccessMode, tag: u64) -> Result<RMatrix> {
    match mode {
        AccessMode::Exact => Ok(exact),
        AccessMode::Sampled { seed, shots } => {
            if shots == 0 {
                return Err(Error::InvalidArgument("sampled mode needs at least one shot".into()));
            }
            let cols = exact.ncols();
            Ok(RMatrix::from_fn(exact.nrows(), cols, |i, j| {
                sample_entry(seed, tag, (i * cols + j) as u64, shots, exact[(i, j)])
            }))
        }
    }
}

/// `tr(A P)` in O(d).
fn trace_with_pauli(a: &CMatrix, p: &PauliString) -> Complex64 {
    (0..a.nrows())
        .map(|col| {
            let (row, v) = p.column_entry(col);
            a[(col, row)] * v
        })
        .sum()
}

/// `U† P U` for each Majorana `γ_k`, k = 1…2n.
fn heisenberg_majoranas(u: &DenseOperator) -> Vec<CMatrix> {
    let n = u.n_qubits();
    let ud = u.data().adjoint();
    (1..=2 * n).map(|k| &ud * jw_pauli(k, n).left_mul(u.data())).collect()
}

/// `c^(1)_{jk} = tr[U† γ_k U γ_j] / d`.
pub fn c1_matrix(u: &DenseOperator, mode: AccessMode) -> Result<RMatrix> {
    let n = u.n_qubits();
    crate::dense::check_dense_cap(n)?;
    let d = u.dim() as f64;
    let conj = heisenberg_majoranas(u);
    let mut c = RMatrix::zeros(2 * n, 2 * n);
    for (k, a) in conj.iter().enumerate() {
        for j in 0..2 * n {
            let v = trace_with_pauli(a, &jw_pauli(j + 1, n)) / d;
            debug_assert!(v.im.abs() < 1e-9 && v.re.abs() <= 1.0 + 1e-9, "c1 entry {v} out of range");
            c[(j, k)] = v.re;
        }
    }
    apply_mode(c, mode, STREAM_C)
}

/// The full matrix `c`: rows are strings `x` with `1 ≤ α_x ≤ w` (ordered by weight, then mask),
/// columns are `k`; `c_{xk}` is the coefficient of `γ̃_x` in `U† γ_k U`.
pub fn full_c_matrix(u: &DenseOperator, w: usize) -> Result<(Vec<StringKey>, RMatrix)> {
    let n = u.n_qubits();
    let expansions: Vec<SparseOperator> = heisenberg_majoranas(u)
        .into_iter()
        .map(|a| SparseOperator::from_dense(&DenseOperator::new(n, a)?))
        .collect::<Result<_>>()?;
    let mut keys: Vec<StringKey> = (0u128..1u128 << (2 * n))
        .map(|b| StringKey::from_bits(2 * n, b).expect("mask fits"))
        .filter(|k| k.weight() >= 1 && k.weight() <= w)
        .collect();
    keys.sort_by_key(|k| (k.weight(), k.bits()));
    let c = DMatrix::from_fn(keys.len(), 2 * n, |x, k| expansions[k].hermitian_coeff(&keys[x]).re);
    Ok((keys, c))
}

/// `f_{αβ} = tr[S† (P_β ⊗ I) S (P_α ⊗ I)] / 2^n`, Paulis on the first `m` qubits in
/// lexicographic `I, X, Y, Z` order.
pub fn f_matrix(s: &DenseOperator, m: usize, mode: AccessMode) -> Result<RMatrix> {
    let n = s.n_qubits();
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
    }
    let d = s.dim() as f64;
    let count = 1usize << (2 * m);
    let paulis: Vec<PauliString> = (0..count).map(|a| PauliString::from_lex_index(m, a).extend(n)).collect();
    let sd = s.data().adjoint();
    let mut f = RMatrix::zeros(count, count);
    for (beta, pb) in paulis.iter().enumerate() {
        let b = &sd * pb.left_mul(s.data());
        for (alpha, pa) in paulis.iter().enumerate() {
            let v = trace_with_pauli(&b, pa) / d;
            debug_assert!(v.im.abs() < 1e-9, "f entry {v} not real");
            f[(alpha, beta)] = v.re;
        }
    }
    apply_mode(f, mode, STREAM_F)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::gaussian_unitary;
    use crate::instances::{haar_orthogonal, random_instance, CircuitSpec, Layer, Path};
    use crate::pauli::Pauli;

    #[test]
    fn c1_of_identity() {
        let c = c1_matrix(&DenseOperator::identity(2), AccessMode::Exact).unwrap();
        assert!((c - RMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn c1_of_gaussian_is_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = haar_orthogonal(6, false, &mut rng);
        let g = gaussian_unitary(&o).unwrap();
        let c = c1_matrix(&g, AccessMode::Exact).unwrap();
        assert!((c - o.data().transpose()).norm() < 1e-10);
    }

    #[test]
    fn c1_non_gaussian_leaks_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let layers = vec![
            Layer::Gaussian(haar_orthogonal(6, false, &mut rng)),
            Layer::NonGaussian { generator: StringKey::from_indices(6, &[1, 2, 3, 4]).unwrap(), angle: 0.3 },
            Layer::Gaussian(haar_orthogonal(6, false, &mut rng)),
        ];
        let spec = CircuitSpec::new(3, 4, Path::Qubit, layers).unwrap();
        let c = c1_matrix(&spec.assemble().unwrap(), AccessMode::Exact).unwrap();
        let min_col = c.column_iter().map(|col| col.norm()).fold(f64::INFINITY, f64::min);
        assert!(min_col < 1.0 - 1e-6);
    }

    #[test]
    fn full_c_has_orthonormal_columns() {
        let spec = random_instance(3, 1, 4, Path::Fermionic, 3).unwrap();
        let (keys, c) = full_c_matrix(&spec.assemble().unwrap(), spec.weight_bound()).unwrap();
        assert_eq!(keys[0].weight(), 1);
        assert!((c.transpose() * &c - RMatrix::identity(6, 6)).norm() < 1e-9);
    }

    #[test]
    fn f_examples() {
        let f = f_matrix(&DenseOperator::identity(2), 1, AccessMode::Exact).unwrap();
        assert!((f - RMatrix::identity(4, 4)).norm() < 1e-15);

        let x = DenseOperator::from_pauli(&PauliString::from_labels(&[Pauli::X, Pauli::I]));
        let f = f_matrix(&x, 1, AccessMode::Exact).unwrap();
        let expect = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert!((f - expect).norm() < 1e-15);

        let spec = random_instance(3, 1, 4, Path::Qubit, 4).unwrap();
        let f = f_matrix(&spec.assemble().unwrap(), 2, AccessMode::Exact).unwrap();
        assert!((f[(0, 0)] - 1.0).abs() < 1e-12);
        for k in 1..16 {
            assert!(f[(0, k)].abs() < 1e-12 && f[(k, 0)].abs() < 1e-12);
        }
        assert!(f.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        assert!(f_matrix(&DenseOperator::identity(1), 2, AccessMode::Exact).is_err());
    }

    #[test]
    fn sampled_mode_is_deterministic_and_unclamped() {
        let u = DenseOperator::identity(1);
        let mode = AccessMode::Sampled { seed: 9, shots: 10 };
        let a = c1_matrix(&u, mode).unwrap();
        let b = c1_matrix(&u, mode).unwrap();
        assert_eq!(a, b);
        // diagonal entries have expectation 1 and no variance
        assert_eq!(a[(0, 0)], 1.0);
        let other = c1_matrix(&u, AccessMode::Sampled { seed: 10, shots: 10 }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn sampled_error_concentrates() {
        let spec = random_instance(2, 1, 2, Path::Qubit, 5).unwrap();
        let u = spec.assemble().unwrap();
        let exact = c1_matrix(&u, AccessMode::Exact).unwrap();
        let est = c1_matrix(&u, AccessMode::Sampled { seed: 3, shots: 40_000 }).unwrap();
        assert!((est - exact).amax() < 0.03);
    }

    // Golden values computed independently from the closed forms.
    #[test]
    fn budget_golden_values() {
        assert_eq!(budget_c_qubit(2, 0.1, 0.05).unwrap().per_state_copies, 93_821);
        assert_eq!(budget_c_fermionic(2, 0.1, 0.05).unwrap().per_state_copies, 114_670);
        assert_eq!(budget_f_qubit(2, 0.1, 0.05).unwrap().per_state_copies, 395_442);
        assert_eq!(budget_f_fermionic(2, 0.1, 0.05).unwrap().per_state_copies, 5_086_119);
    }

    #[test]
    fn budget_scaling() {
        let base = budget_c_qubit(3, 0.1, 0.05).unwrap().per_state_copies as f64;
        let half = budget_c_qubit(3, 0.05, 0.05).unwrap().per_state_copies as f64;
        assert!(half >= 3.9 * base);
        let tight = budget_c_qubit(3, 0.1, 0.005).unwrap().per_state_copies as f64;
        assert!(tight > base && tight < 1.5 * base);
        assert!(budget_c_fermionic(3, 0.1, 0.05).unwrap().per_state_copies as f64 > base);
        assert!(
            budget_f_qubit(3, 0.1, 0.05).unwrap().per_state_copies
                > budget_f_qubit(2, 0.1, 0.05).unwrap().per_state_copies
        );
        assert!(budget_c_qubit(3, 0.0, 0.05).is_err());
        assert!(budget_c_qubit(3, 0.1, 1.0).is_err());
        assert!(budget_f_fermionic(2, 1.5, 0.1).is_err());
    }
}
