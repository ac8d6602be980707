//! The two-stage learner.
//!
//! Stage one extracts Gaussian correctors `G_a`, `G_b` from the SVD of `ĉ^(1)` so
//! that `W = G_a† U G_b†` commutes with `γ_{M+1}, …, γ_{2n}`. Stage two learns the
//! reduced channel of `W` (or of `W̄ = Ū_d† W Ū_d` on the qubit path) on the first
//! `m` qubits, projects it onto CPTP maps and dilates it to a unitary on `3m` qubits.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::choi::ChoiMatrix;
use crate::dense::{check_choi_cap, gaussian_unitary, CMatrix, DenseOperator, OrthogonalMatrix, RMatrix};
use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::instances::Path;
use crate::oracle::{
    budget_c_fermionic, budget_c_qubit, budget_f_fermionic, budget_f_qubit, c1_matrix, f_matrix, AccessMode,
};
use crate::pauli::PauliString;
use crate::serde_util::{complex_from_rows, complex_rows};

/// Current learned-description schema version.
pub const LEARNED_SCHEMA_VERSION: u64 = 1;

/// Eigenvalues of `J_p` below this are dropped before reshaping into Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Algo1Output {
    pub c_hat: RMatrix,
    pub u: RMatrix,
    /// Singular values, ascending.
    pub sigma: Vec<f64>,
    pub v: RMatrix,
    pub o_a: OrthogonalMatrix,
    pub o_b: OrthogonalMatrix,
    /// Whether `O_a` / `O_b` had a column flipped to land in SO(2n).
    pub so_fixup_applied: (bool, bool),
}

impl Algo1Output {
    /// `‖ĉ − U Σ Vᵀ‖_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let s = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.sigma.clone()));
        (&self.c_hat - &self.u * s * self.v.transpose()).norm()
    }
}

/// Algorithm 1 on an estimate `ĉ^(1)`.
///
/// The SVD is sorted ascending, `O_a = V`, `O_b = Uᵀ`. On the fermionic path a
/// factor with determinant −1 has its first column flipped (`O_a ← V·F`,
/// `O_b ← F·Uᵀ` with `F = diag(−1, 1, …, 1)`), which only touches the index
/// carrying the smallest singular value.
pub fn algorithm1(c_hat: RMatrix, path: Path) -> Result<Algo1Output> {
    let k = c_hat.nrows();
    if k != c_hat.ncols() || !k.is_multiple_of(2) || k == 0 {
        return Err(Error::Dimension(format!("c^(1) must be square of even side, got {}x{}", k, c_hat.ncols())));
    }
    if c_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite entry in c^(1)".into()));
    }
    let svd = c_hat.clone().svd(true, true);
    let (u_raw, vt_raw) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Data("SVD did not converge".into())),
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut u = RMatrix::from_fn(k, k, |r, c| u_raw[(r, order[c])]);
    let mut v = RMatrix::from_fn(k, k, |r, c| vt_raw[(order[c], r)]);

    let mut fix = (false, false);
    if path == Path::Fermionic {
        if v.determinant() < 0.0 {
            v.column_mut(0).neg_mut();
            fix.0 = true;
        }
        if u.determinant() < 0.0 {
            u.column_mut(0).neg_mut();
            fix.1 = true;
        }
    }
    let o_a = OrthogonalMatrix::with_tolerance(v.clone(), 1e-8)?;
    let o_b = OrthogonalMatrix::with_tolerance(u.transpose(), 1e-8)?;
    // undo the flips on the stored factors so that ĉ = U Σ Vᵀ still holds
    if fix.0 {
        v.column_mut(0).neg_mut();
    }
    if fix.1 {
        u.column_mut(0).neg_mut();
    }
    Ok(Algo1Output { c_hat, u, sigma, v, o_a, o_b, so_fixup_applied: fix })
}

/// Algorithm 1 with `ĉ^(1)` drawn from the oracle.
pub fn algorithm1_oracle(u_t: &DenseOperator, mode: AccessMode, path: Path) -> Result<Algo1Output> {
    algorithm1(c1_matrix(u_t, mode)?, path)
}

/// `W = G_a† U_t G_b†`.
pub fn build_w(u_t: &DenseOperator, out: &Algo1Output) -> Result<DenseOperator> {
    let ga = gaussian_unitary(&out.o_a)?;
    let gb = gaussian_unitary(&out.o_b)?;
    if ga.n_qubits() != u_t.n_qubits() {
        return Err(Error::Dimension("Algorithm 1 output does not match the unitary size".into()));
    }
    Ok(&(&ga.adjoint() * u_t) * &gb.adjoint())
}

/// `p(α) = (−1)^{α(α−1)/2}`.
pub fn p_parity(alpha: u64) -> i8 {
    if (alpha % 4) >= 2 {
        -1
    } else {
        1
    }
}

/// `p(0) = 1`, `p(α) = (−1)^{α−1} p(α−1)`.
pub fn p_parity_recursive(alpha: u64) -> i8 {
    (1..=alpha).fold(1i8, |p, a| if (a - 1) % 2 == 1 { -p } else { p })
}

/// Diagonal `Ū_d = V_d U_d` with entries `p(α_x) · p(α_{x_A})`, `x_A` the first `m` bits.
pub fn build_ubar_d(n: usize, m: usize) -> Result<DenseOperator> {
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
    }
    crate::dense::check_dense_cap(n)?;
    let d = 1usize << n;
    let diag = ubar_diagonal(n, m);
    let data =
        CMatrix::from_fn(d, d, |r, c| if r == c { Complex64::new(diag[r] as f64, 0.0) } else { Complex64::default() });
    DenseOperator::new(n, data)
}

fn ubar_diagonal(n: usize, m: usize) -> Vec<i8> {
    (0..1usize << n)
        .map(|x| {
            let a = x.count_ones() as u64;
            let a_reg = (x >> (n - m)).count_ones() as u64;
            p_parity(a) * p_parity(a_reg)
        })
        .collect()
}

/// `W̄ = Ū_d† W Ū_d`, computed entrywise since `Ū_d` is a real ±1 diagonal.
pub fn w_bar(w: &DenseOperator, m: usize) -> Result<DenseOperator> {
    let n = w.n_qubits();
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
    }
    let diag = ubar_diagonal(n, m);
    let d = w.dim();
    let data = CMatrix::from_fn(d, d, |r, c| w.data()[(r, c)] * (diag[r] * diag[c]) as f64);
    DenseOperator::new(n, data)
}

/// `⟨0_B| S |0_B⟩` — the block of `S` on the first `m` qubits with register B pinned to `|0⟩`.
pub fn register_block(s: &DenseOperator, m: usize) -> Result<CMatrix> {
    let n = s.n_qubits();
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
    }
    let db = 1usize << (n - m);
    let d0 = 1usize << m;
    Ok(CMatrix::from_fn(d0, d0, |a, b| s.data()[(a * db, b * db)]))
}

/// Kraus operators `E_{zx} = ⟨z|S|x⟩_B / √(2^{n−m})` of the reduced channel.
pub fn reduced_kraus(s: &DenseOperator, m: usize) -> Result<Vec<CMatrix>> {
    let n = s.n_qubits();
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
    }
    let db = 1usize << (n - m);
    let d0 = 1usize << m;
    let scale = 1.0 / (db as f64).sqrt();
    let mut out = Vec::with_capacity(db * db);
    for z in 0..db {
        for x in 0..db {
            out.push(CMatrix::from_fn(d0, d0, |a, b| s.data()[(a * db + z, b * db + x)] * scale));
        }
    }
    Ok(out)
}

/// Choi matrix of `ρ ↦ tr_B[S (ρ ⊗ I_B / 2^{n−m}) S†]`.
pub fn reduced_channel(s: &DenseOperator, m: usize) -> Result<ChoiMatrix> {
    ChoiMatrix::from_kraus(m, &reduced_kraus(s, m)?)
}

/// Algorithm 2: `J(ℰ̂) = (1/d₀²) Σ_{αβ} f̂_{αβ} P_β ⊗ P_αᵀ`.
pub fn algorithm2(f_hat: &RMatrix, m: usize) -> Result<ChoiMatrix> {
    let count = 1usize << (2 * m);
    if f_hat.nrows() != count || f_hat.ncols() != count {
        return Err(Error::Dimension(format!("f must be {count}x{count} for m = {m}")));
    }
    let d0 = 1usize << m;
    let paulis: Vec<CMatrix> = (0..count).map(|a| PauliString::from_lex_index(m, a).to_matrix()).collect();
    let mut j = CMatrix::zeros(d0 * d0, d0 * d0);
    for (alpha, pa) in paulis.iter().enumerate() {
        let pa_t = pa.transpose();
        for (beta, pb) in paulis.iter().enumerate() {
            let f = f_hat[(alpha, beta)];
            if f != 0.0 {
                j += pb.kronecker(&pa_t) * Complex64::new(f, 0.0);
            }
        }
    }
    j /= Complex64::new((d0 * d0) as f64, 0.0);
    ChoiMatrix::new(m, j)
}

/// Learn the reduced Choi matrix of `s` from `f` queries.
pub fn algorithm2_oracle(s: &DenseOperator, m: usize, mode: AccessMode) -> Result<(RMatrix, ChoiMatrix)> {
    let f = f_matrix(s, m, mode)?;
    let j = algorithm2(&f, m)?;
    Ok((f, j))
}

/// Output of [`project_cptp`].
#[derive(Clone, Debug)]
pub struct Projection {
    pub choi: ChoiMatrix,
    /// Smallest eigenvalue after the CP and TP steps.
    pub lambda_min: f64,
    /// Weight of the maximally mixed Choi state mixed in; 0 when none was needed.
    pub mixing_p: f64,
}

/// CP projection (clamp negative eigenvalues), TP projection
/// `J₂ = J₁ + (I/d₀) ⊗ (I/d₀ − tr_out J₁)`, then the depolarizing mix
/// `(1 − p) J₂ + p I/d₀²` with `(1 − p) λ_min + p/d₀² = 0` when `λ_min < 0`.
pub fn project_cptp(j: &ChoiMatrix) -> Projection {
    let d0 = j.d0();
    let eig = SymmetricEigen::new(j.hermitian_part());
    let clamped = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0), 0.0));
    let j1 = &eig.eigenvectors * CMatrix::from_diagonal(&clamped) * eig.eigenvectors.adjoint();

    let id0 = CMatrix::identity(d0, d0) / Complex64::new(d0 as f64, 0.0);
    let defect = &id0 - crate::choi::partial_trace_output(&j1, d0);
    let j2 = j1 + id0.kronecker(&defect);
    let j2 = (&j2 + j2.adjoint()) * Complex64::new(0.5, 0.0);

    let (jp, p, lambda_min) = mix_to_psd(j2, d0);
    Projection { choi: ChoiMatrix::new(j.m(), jp).expect("projection preserves dimensions"), lambda_min, mixing_p: p }
}

/// Mix `J₂` with `I/d₀²` just enough to cancel its most negative eigenvalue.
/// Returns the mixed matrix, the weight `p` and `λ_min(J₂)`.
pub fn mix_to_psd(j2: CMatrix, d0: usize) -> (CMatrix, f64, f64) {
    let side = d0 * d0;
    let lambda_min = SymmetricEigen::new(j2.clone()).eigenvalues.min();
    if lambda_min >= 0.0 {
        return (j2, 0.0, lambda_min);
    }
    let inv = 1.0 / side as f64;
    let p = -lambda_min / (inv - lambda_min);
    let mixed = j2 * Complex64::new(1.0 - p, 0.0) + CMatrix::identity(side, side) * Complex64::new(p * inv, 0.0);
    (mixed, p, lambda_min)
}

/// Kraus operators `K_i = reshape(√(d₀ λ_i) v_i)` of a CPTP Choi matrix.
pub fn choi_kraus(j: &ChoiMatrix) -> Vec<CMatrix> {
    let d0 = j.d0();
    let eig = SymmetricEigen::new(j.hermitian_part());
    let mut pairs: Vec<(f64, usize)> = eig.eigenvalues.iter().copied().zip(0..).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
        .into_iter()
        .filter(|(l, _)| *l > KRAUS_CUTOFF)
        .map(|(l, idx)| {
            let s = (d0 as f64 * l).sqrt();
            let v = eig.eigenvectors.column(idx);
            CMatrix::from_fn(d0, d0, |r, c| v[r * d0 + c] * s)
        })
        .collect()
}

/// Unitary dilation `V_S` on `3m` qubits (system first, then `2m` environment qubits) with
/// `V_S |s⟩|0_E⟩ = Σ_i K_i |s⟩ |i⟩`.
pub fn stinespring(jp: &ChoiMatrix) -> Result<DenseOperator> {
    let (psd_tol, tp_tol) = (1e-9, 1e-8);
    if !jp.is_cptp(psd_tol, tp_tol) {
        return Err(Error::NotCptp(format!(
            "min eigenvalue {:e}, trace-preservation deviation {:e}",
            jp.min_eigenvalue(),
            jp.tp_deviation()
        )));
    }
    let m = jp.m();
    crate::dense::check_dense_cap(3 * m)?;
    let d0 = jp.d0();
    let de = d0 * d0;
    let dim = d0 * de;
    let kraus = choi_kraus(jp);

    let mut isometry: Vec<Vec<Complex64>> = (0..d0)
        .map(|s| {
            let mut col = vec![Complex64::default(); dim];
            for (i, k) in kraus.iter().enumerate() {
                for r in 0..d0 {
                    col[r * de + i] = k[(r, s)];
                }
            }
            col
        })
        .collect();
    let iso_slots: Vec<usize> = (0..d0).map(|s| s * de).collect();

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for col in isometry.drain(..) {
        let v =
            orthonormalize_against(&basis, col).ok_or_else(|| Error::NotCptp("degenerate Kraus isometry".into()))?;
        basis.push(v);
    }
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut unit = vec![Complex64::default(); dim];
        unit[e] = Complex64::new(1.0, 0.0);
        if let Some(v) = orthonormalize_against(&basis, unit) {
            basis.push(v);
        }
    }
    debug_assert_eq!(basis.len(), dim);

    let mut data = CMatrix::zeros(dim, dim);
    let mut fill = (0..dim).filter(|c| !iso_slots.contains(c));
    for (idx, v) in basis.iter().enumerate() {
        let col = if idx < d0 { iso_slots[idx] } else { fill.next().expect("enough free columns") };
        for r in 0..dim {
            data[(r, col)] = v[r];
        }
    }
    DenseOperator::new(3 * m, data)
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
fn orthonormalize_against(basis: &[Vec<Complex64>], mut v: Vec<Complex64>) -> Option<Vec<Complex64>> {
    for _ in 0..2 {
        for b in basis {
            let proj: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
    }
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-8 {
        return None;
    }
    v.iter_mut().for_each(|z| *z /= norm);
    Some(v)
}

/// Kraus operators `K_e = ⟨e| V_S |0_E⟩` induced by a dilation on `3m` qubits.
pub fn dilation_kraus(v_s: &DenseOperator, m: usize) -> Result<Vec<CMatrix>> {
    if v_s.n_qubits() != 3 * m {
        return Err(Error::Dimension(format!("dilation must act on {} qubits", 3 * m)));
    }
    let d0 = 1usize << m;
    let de = d0 * d0;
    Ok((0..de).map(|e| CMatrix::from_fn(d0, d0, |r, s| v_s.data()[(r * de + e, s * de)])).collect())
}

/// Channel induced by a dilation, as a Choi matrix on `m` qubits.
pub fn dilation_choi(v_s: &DenseOperator, m: usize) -> Result<ChoiMatrix> {
    ChoiMatrix::from_kraus(m, &dilation_kraus(v_s, m)?)
}

/// The learned description `U^(ℓ) = G_a [Ū_d] V_S [Ū_d†] G_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedDescription {
    pub path: Path,
    pub n: usize,
    pub m: usize,
    pub g_a: OrthogonalMatrix,
    pub g_b: OrthogonalMatrix,
    pub v_s: DenseOperator,
    pub uses_ubar_d: bool,
    pub diagnostics: Option<DiagnosticsReport>,
}

pub fn assemble_learned(
    path: Path,
    out1: &Algo1Output,
    v_s: DenseOperator,
    n: usize,
    m: usize,
) -> Result<LearnedDescription> {
    if out1.o_a.n_modes() != n || out1.o_b.n_modes() != n {
        return Err(Error::Dimension("Gaussian correctors do not match n".into()));
    }
    if v_s.n_qubits() != 3 * m || m > n {
        return Err(Error::Dimension(format!("V_S must act on 3m = {} qubits with m <= n", 3 * m)));
    }
    let err = v_s.unitarity_error();
    if err > 1e-9 {
        return Err(Error::Data(format!("V_S is not unitary (deviation {err:e})")));
    }
    Ok(LearnedDescription {
        path,
        n,
        m,
        g_a: out1.o_a.clone(),
        g_b: out1.o_b.clone(),
        v_s,
        uses_ubar_d: path == Path::Qubit,
        diagnostics: None,
    })
}

impl LearnedDescription {
    /// Kraus operators of the learned channel on all `n` qubits:
    /// `A_e = G_a [Ū_d] (K_e ⊗ I_B) [Ū_d†] G_b`.
    pub fn kraus(&self) -> Result<Vec<CMatrix>> {
        let ga = gaussian_unitary(&self.g_a)?;
        let gb = gaussian_unitary(&self.g_b)?;
        let db = 1usize << (self.n - self.m);
        let id_b = CMatrix::identity(db, db);
        let ubar = if self.uses_ubar_d { Some(build_ubar_d(self.n, self.m)?) } else { None };
        dilation_kraus(&self.v_s, self.m)?
            .into_iter()
            .filter(|k| k.norm() > 0.0)
            .map(|k| {
                let mut a = DenseOperator::new(self.n, k.kronecker(&id_b))?;
                if let Some(u) = &ubar {
                    a = &(u * &a) * u;
                }
                Ok((&(&ga * &a) * &gb).into_data())
            })
            .collect()
    }

    /// Choi matrix of the learned channel on all `n` qubits.
    pub fn choi(&self) -> Result<ChoiMatrix> {
        check_choi_cap(self.n)?;
        ChoiMatrix::from_kraus(self.n, &self.kraus()?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LearnedRepr::from(self)).expect("learned description serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            version: u64,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.version != LEARNED_SCHEMA_VERSION {
            return Err(Error::Version { found: probe.version, expected: LEARNED_SCHEMA_VERSION });
        }
        let r: LearnedRepr = serde_json::from_str(text)?;
        let v_s = DenseOperator::new(3 * r.m, complex_from_rows(&r.v_s)?)?;
        Ok(LearnedDescription {
            path: r.path,
            n: r.n,
            m: r.m,
            g_a: r.g_a,
            g_b: r.g_b,
            v_s,
            uses_ubar_d: r.uses_ubar_d,
            diagnostics: r.diagnostics,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LearnedRepr {
    version: u64,
    path: Path,
    n: usize,
    m: usize,
    g_a: OrthogonalMatrix,
    g_b: OrthogonalMatrix,
    v_s: Vec<Vec<[f64; 2]>>,
    uses_ubar_d: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<DiagnosticsReport>,
}

impl From<&LearnedDescription> for LearnedRepr {
    fn from(l: &LearnedDescription) -> Self {
        LearnedRepr {
            version: LEARNED_SCHEMA_VERSION,
            path: l.path,
            n: l.n,
            m: l.m,
            g_a: l.g_a.clone(),
            g_b: l.g_b.clone(),
            v_s: complex_rows(l.v_s.data()),
            uses_ubar_d: l.uses_ubar_d,
            diagnostics: l.diagnostics.clone(),
        }
    }
}

/// Access modes for the two oracle stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineModes {
    pub c: AccessMode,
    pub f: AccessMode,
}

impl PipelineModes {
    pub fn exact() -> Self {
        PipelineModes { c: AccessMode::Exact, f: AccessMode::Exact }
    }

    /// Both stages sampled at the prescribed budgets for `(ε, δ)`; the two
    /// stages share `seed` but draw from disjoint streams.
    pub fn sampled(n: usize, big_m: usize, path: Path, epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        let m = big_m / 2;
        let (bc, bf) = match path {
            Path::Qubit => (budget_c_qubit(n, epsilon, delta)?, budget_f_qubit(m, epsilon, delta)?),
            Path::Fermionic => (budget_c_fermionic(n, epsilon, delta)?, budget_f_fermionic(m, epsilon, delta)?),
        };
        Ok(PipelineModes { c: AccessMode::sampled(seed, &bc, None), f: AccessMode::sampled(seed, &bf, None) })
    }
}

/// Every intermediate of one learning run.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub big_m: usize,
    pub m: usize,
    pub algo1: Algo1Output,
    pub w: DenseOperator,
    /// `W` on the fermionic path, `W̄` on the qubit path.
    pub s: DenseOperator,
    pub f_hat: RMatrix,
    pub j_hat: ChoiMatrix,
    pub projection: Projection,
    pub learned: LearnedDescription,
}

/// Run both stages against the unitary `u_t` promised to have `M = big_m`.
pub fn run_pipeline(u_t: &DenseOperator, big_m: usize, path: Path, modes: PipelineModes) -> Result<PipelineRun> {
    let n = u_t.n_qubits();
    if big_m > 2 * n || !big_m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("M = {big_m} must be even and at most 2n = {}", 2 * n)));
    }
    let m = big_m / 2;
    let algo1 = algorithm1_oracle(u_t, modes.c, path)?;
    let w = build_w(u_t, &algo1)?;
    let s = match path {
        Path::Fermionic => w.clone(),
        Path::Qubit => w_bar(&w, m)?,
    };
    let (f_hat, j_hat) = algorithm2_oracle(&s, m, modes.f)?;
    let projection = project_cptp(&j_hat);
    let v_s = stinespring(&projection.choi)?;
    let learned = assemble_learned(path, &algo1, v_s, n, m)?;
    Ok(PipelineRun { big_m, m, algo1, w, s, f_hat, j_hat, projection, learned })
}

/// Phase-free comparison helper: channel distance bound between two unitaries' learned/true Choi states.
pub fn learned_vs_true_bound(u_t: &DenseOperator, learned: &LearnedDescription) -> Result<f64> {
    let truth = crate::dense::choi_of_unitary(u_t)?;
    crate::diagnostics::diamond_bound(&truth, &learned.choi()?)
}

/// Real matrix of entrywise estimation errors, when ground truth is known.
pub fn error_matrix(estimate: &RMatrix, exact: &RMatrix) -> DMatrix<f64> {
    estimate - exact
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{choi_of_unitary, jw_majorana};
    use crate::diagnostics::{diamond_bound, majorana_commutator_norms};
    use crate::instances::{haar_unitary, random_instance};
    use crate::majorana::StringKey;
    use crate::pauli::Pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_target() {
        let out = algorithm1_oracle(&DenseOperator::identity(2), AccessMode::Exact, Path::Fermionic).unwrap();
        assert!((out.c_hat.clone() - RMatrix::identity(4, 4)).norm() < 1e-15);
        assert!(out.reconstruction_error() < 1e-10);
        let w = build_w(&DenseOperator::identity(2), &out).unwrap();
        assert!((w.phase_fidelity(&DenseOperator::identity(2)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_target_decouples_everything() {
        for path in [Path::Fermionic, Path::Qubit] {
            let spec = random_instance(3, 0, 4, path, 12).unwrap();
            let u = spec.assemble().unwrap();
            let out = algorithm1_oracle(&u, AccessMode::Exact, path).unwrap();
            assert!(out.sigma.iter().all(|s| (s - 1.0).abs() < 1e-9));
            let w = build_w(&u, &out).unwrap();
            let norms = majorana_commutator_norms(&w, 0).unwrap();
            assert!(norms.iter().all(|&x| x < 1e-8), "{path}: {norms:?}");
            if path == Path::Fermionic {
                assert!((w.phase_fidelity(&DenseOperator::identity(3)) - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn singular_values_near_one() {
        let spec = random_instance(3, 1, 4, Path::Qubit, 31).unwrap();
        let out = algorithm1_oracle(&spec.assemble().unwrap(), AccessMode::Exact, Path::Qubit).unwrap();
        assert!(out.sigma.windows(2).all(|w| w[0] <= w[1]));
        let near = out.sigma.iter().filter(|s| (*s - 1.0).abs() < 1e-9).count();
        assert!(near >= 2);
        assert!(out.reconstruction_error() < 1e-10);
    }

    #[test]
    fn fermionic_fixup_lands_in_so() {
        for seed in 0..10 {
            let spec = random_instance(3, 1, 4, Path::Fermionic, seed).unwrap();
            let out = algorithm1_oracle(&spec.assemble().unwrap(), AccessMode::Exact, Path::Fermionic).unwrap();
            assert_eq!(out.o_a.det_sign(), 1);
            assert_eq!(out.o_b.det_sign(), 1);
        }
    }

    #[test]
    fn p_parity_law() {
        assert_eq!((p_parity(0), p_parity(1), p_parity(2), p_parity(3)), (1, 1, -1, -1));
        for a in 0..=64 {
            assert_eq!(p_parity(a), p_parity_recursive(a));
            assert_eq!(p_parity(a + 4), p_parity(a));
        }
    }

    #[test]
    fn ubar_d_examples() {
        let u = build_ubar_d(1, 1).unwrap();
        assert!((u.data() - CMatrix::identity(2, 2)).norm() < 1e-15);
        let u = build_ubar_d(3, 1).unwrap();
        assert_eq!(u.data()[(0, 0)], Complex64::new(1.0, 0.0));
        assert!(u.is_unitary(1e-15));
        // n = 2, m = 1 gives a controlled-Z
        let cz = build_ubar_d(2, 1).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| cz.data()[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn exact_decoupling_gives_product_form() {
        // W built from generators commuting with γ_5..γ_8 (n = 4, M = 4, m = 2)
        let n = 4;
        let tail = [1usize, 5, 6, 7, 8];
        let w1 = crate::dense::exp_majorana(&StringKey::from_indices(8, &tail).unwrap(), 0.4, true, n).unwrap();
        let w2 = crate::dense::exp_majorana(&StringKey::from_indices(8, &[1, 2, 3, 4]).unwrap(), 0.9, true, n).unwrap();
        let w3 = crate::dense::exp_majorana(&StringKey::from_indices(8, &[2, 3]).unwrap(), 0.2, true, n).unwrap();
        let w = &(&w1 * &w2) * &w3;
        let norms = majorana_commutator_norms(&w, 4).unwrap();
        assert!(norms.iter().all(|&x| x < 1e-12));
        let wb = w_bar(&w, 2).unwrap();
        let block = register_block(&wb, 2).unwrap();
        let product = block.kronecker(&CMatrix::identity(4, 4));
        assert!((wb.data() - product).norm() < 1e-8);
        // without the conjugation the odd generator leaves a Z-string on register B
        let raw_block = register_block(&w, 2).unwrap();
        assert!((w.data() - raw_block.kronecker(&CMatrix::identity(4, 4))).norm() > 1e-3);
    }

    #[test]
    fn reduced_channel_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = haar_unitary(1, &mut rng);
        let s = a.kron(&DenseOperator::identity(1));
        let j = reduced_channel(&s, 1).unwrap();
        assert!(j.trace_distance(&choi_of_unitary(&a).unwrap()).unwrap() < 1e-12);

        let swap = PauliString::from_labels(&[Pauli::I, Pauli::I]).to_matrix()
            + PauliString::from_labels(&[Pauli::X, Pauli::X]).to_matrix()
            + PauliString::from_labels(&[Pauli::Y, Pauli::Y]).to_matrix()
            + PauliString::from_labels(&[Pauli::Z, Pauli::Z]).to_matrix();
        let swap = DenseOperator::new(2, swap * Complex64::new(0.5, 0.0)).unwrap();
        let j = reduced_channel(&swap, 1).unwrap();
        assert!((j.data() - CMatrix::identity(4, 4) * Complex64::new(0.25, 0.0)).norm() < 1e-14);

        let id = reduced_channel(&DenseOperator::identity(3), 2).unwrap();
        assert!(id.trace_distance(&choi_of_unitary(&DenseOperator::identity(2)).unwrap()).unwrap() < 1e-12);
        assert!(id.is_cptp(1e-12, 1e-10));
    }

    #[test]
    fn algorithm2_matches_reduced_channel() {
        let j = algorithm2(&RMatrix::identity(16, 16), 2).unwrap();
        assert!(j.trace_distance(&choi_of_unitary(&DenseOperator::identity(2)).unwrap()).unwrap() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = haar_unitary(3, &mut rng);
        let (_, learned) = algorithm2_oracle(&s, 2, AccessMode::Exact).unwrap();
        let direct = reduced_channel(&s, 2).unwrap();
        assert!(learned.max_entry_distance(&direct).unwrap() < 1e-9);
    }

    #[test]
    fn projection_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let j = choi_of_unitary(&haar_unitary(1, &mut rng)).unwrap();
        let p = project_cptp(&j);
        assert!(p.choi.trace_distance(&j).unwrap() < 1e-9);
        assert!(p.mixing_p < 1e-12);

        let lam = 0.05;
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            [0.5 + lam, 0.0, 0.0, 0.5 - lam].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        ));
        let j = ChoiMatrix::new(1, d).unwrap();
        let p = project_cptp(&j);
        assert!(p.choi.min_eigenvalue() >= -1e-12);
        assert!(p.choi.tp_deviation() < 1e-10);
        let again = project_cptp(&p.choi);
        assert!(again.choi.trace_distance(&p.choi).unwrap() < 1e-9);
    }

    #[test]
    fn mixing_weight_solves_the_balance() {
        // spectrum {1/2 + λ, 1/4, 1/4, −λ}: the mix must lift −λ exactly to zero
        let lam = 0.1;
        let spectrum = [0.5 + lam, 0.25, 0.25, -lam];
        let j2 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            spectrum.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        ));
        let (mixed, p, lmin) = mix_to_psd(j2, 2);
        assert!((lmin + lam).abs() < 1e-15);
        assert!((p - lam / (0.25 + lam)).abs() < 1e-15);
        assert!(mixed[(3, 3)].norm() < 1e-15);
    }

    #[test]
    fn stinespring_examples() {
        let id = choi_of_unitary(&DenseOperator::identity(1)).unwrap();
        let v = stinespring(&id).unwrap();
        assert!(v.is_unitary(1e-10));
        assert!(dilation_choi(&v, 1).unwrap().trace_distance(&id).unwrap() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = haar_unitary(2, &mut rng);
        let ju = choi_of_unitary(&u).unwrap();
        let v = stinespring(&ju).unwrap();
        assert_eq!(v.n_qubits(), 6);
        assert!(dilation_choi(&v, 2).unwrap().trace_distance(&ju).unwrap() < 1e-9);

        let dep = ChoiMatrix::new(1, CMatrix::identity(4, 4) * Complex64::new(0.25, 0.0)).unwrap();
        let v = stinespring(&dep).unwrap();
        let induced = dilation_choi(&v, 1).unwrap();
        let rho =
            CMatrix::from_fn(
                2,
                2,
                |r, c| if r == 0 && c == 0 { Complex64::new(1.0, 0.0) } else { Complex64::default() },
            );
        let out = induced.apply(&rho).unwrap();
        assert!((out - CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0)).norm() < 1e-9);

        let bad = ChoiMatrix::new(1, CMatrix::identity(4, 4)).unwrap();
        assert!(matches!(stinespring(&bad), Err(Error::NotCptp(_))));
    }

    #[test]
    fn end_to_end_exact() {
        for path in [Path::Fermionic, Path::Qubit] {
            let spec = random_instance(3, 1, 4, path, 77).unwrap();
            let u = spec.assemble().unwrap();
            let run = run_pipeline(&u, spec.big_m(), path, PipelineModes::exact()).unwrap();
            let bound = learned_vs_true_bound(&u, &run.learned).unwrap();
            assert!(bound < 1e-6, "{path}: {bound}");
        }
    }

    #[test]
    fn gaussian_end_to_end() {
        let spec = random_instance(3, 0, 4, Path::Fermionic, 5).unwrap();
        let u = spec.assemble().unwrap();
        let run = run_pipeline(&u, 0, Path::Fermionic, PipelineModes::exact()).unwrap();
        assert_eq!(run.m, 0);
        let truth = choi_of_unitary(&u).unwrap();
        assert!(diamond_bound(&truth, &run.learned.choi().unwrap()).unwrap() < 1e-7);
    }

    #[test]
    fn learned_round_trip() {
        let spec = random_instance(2, 1, 2, Path::Qubit, 1).unwrap();
        let u = spec.assemble().unwrap();
        let run = run_pipeline(&u, spec.big_m(), Path::Qubit, PipelineModes::exact()).unwrap();
        let text = run.learned.to_json();
        let back = LearnedDescription::from_json(&text).unwrap();
        assert_eq!(back, run.learned);
        let bumped = text.replacen("\"version\": 1", "\"version\": 7", 1);
        assert!(matches!(LearnedDescription::from_json(&bumped), Err(Error::Version { .. })));
        let _ = jw_majorana(1, 2).unwrap();
    }
}
